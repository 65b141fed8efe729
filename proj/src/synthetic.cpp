#include "lagr/synthetic.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <stdexcept>

#include <json.hpp>

#include "lagr/util.hpp"

namespace lagr::synth {

namespace {

struct Verb {
  const char* past;
  const char* lemma;
};

const std::vector<std::string>& nouns_shared() {
  static const std::vector<std::string> v{
      "cake", "dog", "cat", "baby", "boy", "girl", "teacher", "cookie",
      "box", "table", "bed", "chair", "melon", "sandwich", "yacht", "ball",
      "bottle", "cup", "donut", "monkey", "rose", "leaf"};
  return v;
}
const std::vector<std::string>& nouns_subject_only() {
  static const std::vector<std::string> v{"hedgehog", "crocodile", "hippo", "shark"};
  return v;
}
const std::vector<std::string>& nouns_object_only() {
  static const std::vector<std::string> v{"cockroach", "pencil", "mirror", "backpack"};
  return v;
}
const std::vector<std::string>& proper_shared() {
  static const std::vector<std::string> v{"Emma", "Liam", "Olivia", "Noah", "Sophia",
                                          "Henry"};
  return v;
}
const std::vector<std::string>& proper_primitive_only() {
  static const std::vector<std::string> v{"Paula", "Mia"};
  return v;
}
const std::vector<Verb>& verbs_intrans() {
  static const std::vector<Verb> v{{"jumped", "jump"},   {"smiled", "smile"},
                                   {"crawled", "crawl"}, {"danced", "dance"},
                                   {"giggled", "giggle"}, {"napped", "nap"}};
  return v;
}
const std::vector<Verb>& verbs_trans() {
  static const std::vector<Verb> v{{"helped", "help"},     {"noticed", "notice"},
                                   {"admired", "admire"},  {"touched", "touch"},
                                   {"cleaned", "clean"},   {"observed", "observe"},
                                   {"liked", "like"},      {"painted", "paint"}};
  return v;
}
const std::vector<Verb>& verbs_ditrans() {
  static const std::vector<Verb> v{{"offered", "offer"}, {"handed", "hand"},
                                   {"mailed", "mail"},   {"awarded", "award"}};
  return v;
}
const std::vector<Verb>& verbs_ccomp() {
  static const std::vector<Verb> v{{"declared", "declare"}, {"confirmed", "confirm"}};
  return v;
}
const std::vector<Verb>& verbs_xcomp() {
  static const std::vector<Verb> v{{"wanted", "want"}, {"hoped", "hope"},
                                   {"planned", "plan"}};
  return v;
}
const std::vector<std::string>& preps() {
  static const std::vector<std::string> v{"on", "in", "beside"};
  return v;
}

struct ClauseRec {
  int head_pos;
  int arg_pos;  // -1 unary
  std::string text;
};

// Sentence under construction.
struct Builder {
  std::vector<std::string> tokens;
  std::vector<ClauseRec> definites;
  std::vector<ClauseRec> conjuncts;

  int pos() const { return static_cast<int>(tokens.size()); }

  void unary(int head, const std::string& pred) {
    conjuncts.push_back({head, -1, pred + " ( x _ " + std::to_string(head) + " )"});
  }
  void binary(int head, const std::string& pred, const std::string& role, int arg,
              const std::string& arg_text) {
    std::string role_text = role;
    if (role.rfind("nmod.", 0) == 0) role_text = "nmod . " + role.substr(5);
    conjuncts.push_back({head, arg,
                         pred + " . " + role_text + " ( x _ " + std::to_string(head) +
                             " , " + arg_text + " )"});
  }
  void definite(int noun_pos, const std::string& noun) {
    definites.push_back({noun_pos, -1,
                         "* " + noun + " ( x _ " + std::to_string(noun_pos) + " )"});
  }

  std::string lf() {
    auto by_pos = [](const ClauseRec& a, const ClauseRec& b) {
      if (a.head_pos != b.head_pos) return a.head_pos < b.head_pos;
      return a.arg_pos < b.arg_pos;
    };
    std::sort(definites.begin(), definites.end(), by_pos);
    std::sort(conjuncts.begin(), conjuncts.end(), by_pos);
    std::vector<std::string> parts;
    for (const auto& d : definites) parts.push_back(d.text);
    std::string conj;
    for (std::size_t i = 0; i < conjuncts.size(); ++i) {
      if (i) conj += " AND ";
      conj += conjuncts[i].text;
    }
    if (!conj.empty()) parts.push_back(conj);
    return join(parts, " ; ");
  }

  std::string sentence() {
    std::vector<std::string> out = tokens;
    out.push_back(".");
    if (!out.empty() && std::islower(static_cast<unsigned char>(out[0][0])))
      out[0][0] = static_cast<char>(std::toupper(static_cast<unsigned char>(out[0][0])));
    return join(out, " ");
  }
};

struct Gen {
  std::mt19937_64 eng;
  bool unique_only = false;
  std::set<std::string> used_in_sentence;

  explicit Gen(std::uint64_t seed) : eng(seed) {}

  int irand(int n) { return static_cast<int>(eng() % static_cast<std::uint64_t>(n)); }
  bool coin(double p) {
    return std::uniform_real_distribution<double>(0, 1)(eng) < p;
  }
  template <class T>
  const T& pick(const std::vector<T>& v) {
    return v[static_cast<std::size_t>(irand(static_cast<int>(v.size())))];
  }
  std::string pick_fresh(const std::vector<std::string>& v) {
    for (int attempt = 0; attempt < 32; ++attempt) {
      const std::string& c = pick(v);
      if (!used_in_sentence.count(c)) {
        used_in_sentence.insert(c);
        return c;
      }
    }
    return pick(v);
  }
};

enum class NpRole { Subject, Object, Recipient };

// Adds one NP; returns the position of its head noun / name. Registers the
// unary conjunct or definite clause the NP contributes.
int add_np(Gen& g, Builder& b, NpRole role, const std::string* forced_noun = nullptr,
           bool force_proper = false) {
  // Proper nouns stay in even for unique-label corpora: sentence-initial
  // names anchor the alignment at position 0, which rules out globally
  // shifted assignments that the weak objective cannot otherwise tell from
  // the token-aligned one.
  const bool proper =
      force_proper || (!forced_noun && g.coin(g.unique_only ? 0.35 : 0.22));
  if (proper) {
    const std::string name =
        forced_noun ? *forced_noun : g.pick_fresh(proper_shared());
    b.tokens.push_back(name);
    return b.pos() - 1;
  }
  std::string noun;
  if (forced_noun) {
    noun = *forced_noun;
  } else {
    switch (role) {
      case NpRole::Subject:
        noun = g.coin(0.25) && !g.unique_only ? g.pick_fresh(nouns_subject_only())
                                              : g.pick_fresh(nouns_shared());
        break;
      case NpRole::Object:
        noun = g.coin(0.25) && !g.unique_only ? g.pick_fresh(nouns_object_only())
                                              : g.pick_fresh(nouns_shared());
        break;
      case NpRole::Recipient:
        noun = g.pick_fresh(nouns_shared());
        break;
    }
  }
  const bool definite = !g.unique_only && g.coin(0.45);
  b.tokens.push_back(definite ? "the" : "a");
  b.tokens.push_back(noun);
  const int noun_pos = b.pos() - 1;
  if (definite)
    b.definite(noun_pos, noun);
  else
    b.unary(noun_pos, noun);
  return noun_pos;
}

// Prepositional modification of the noun at `head_pos`, recursing up to
// `depth` levels.
void add_pp(Gen& g, Builder& b, int head_pos, std::string head_noun, int depth) {
  if (depth <= 0) return;
  const std::string prep = g.pick(preps());
  b.tokens.push_back(prep);
  const bool definite = !g.unique_only && g.coin(0.5);
  b.tokens.push_back(definite ? "the" : "a");
  const std::string noun = g.pick_fresh(nouns_shared());
  b.tokens.push_back(noun);
  const int noun_pos = b.pos() - 1;
  if (definite)
    b.definite(noun_pos, noun);
  else
    b.unary(noun_pos, noun);
  b.binary(head_pos, head_noun, "nmod." + prep, noun_pos, "x _ " + std::to_string(noun_pos));
  add_pp(g, b, noun_pos, noun, depth - 1);
}

std::string arg_text_for(const Builder& b, int pos) {
  const std::string& tok = b.tokens[static_cast<std::size_t>(pos)];
  if (std::isupper(static_cast<unsigned char>(tok[0]))) return tok;
  return "x _ " + std::to_string(pos);
}

// Simple clause (intransitive or transitive), reusable inside ccomp.
// Returns the verb's token position.
int add_clause(Gen& g, Builder& b, bool allow_trans,
               const std::string* forced_object = nullptr,
               bool object_proper = false) {
  const int subj = add_np(g, b, NpRole::Subject);
  if (allow_trans && (forced_object || g.coin(0.65))) {
    const Verb& v = g.pick(verbs_trans());
    b.tokens.push_back(v.past);
    const int vp = b.pos() - 1;
    const int obj = add_np(g, b, NpRole::Object, forced_object, object_proper);
    b.binary(vp, v.lemma, "agent", subj, arg_text_for(b, subj));
    b.binary(vp, v.lemma, "theme", obj, arg_text_for(b, obj));
    if (!g.unique_only && g.coin(0.3)) {
      const std::string obj_tok = b.tokens[static_cast<std::size_t>(obj)];
      if (std::islower(static_cast<unsigned char>(obj_tok[0])))
        add_pp(g, b, obj, obj_tok, 1 + g.irand(2));
    }
    return vp;
  }
  const Verb& v = g.pick(verbs_intrans());
  b.tokens.push_back(v.past);
  const int vp = b.pos() - 1;
  b.binary(vp, v.lemma, "agent", subj, arg_text_for(b, subj));
  return vp;
}

cogs::CogsExample finish(Builder& b, const std::string& split_case) {
  cogs::CogsExample ex;
  ex.lf = b.lf();
  const std::string sent = b.sentence();
  ex.tokens = split_ws(sent);
  ex.split_case = split_case;
  return ex;
}

cogs::CogsExample make_sentence(Gen& g, const std::string& split_case) {
  g.used_in_sentence.clear();
  Builder b;
  const int t = g.unique_only ? g.irand(3) : g.irand(10);
  switch (t) {
    case 0: {  // intransitive
      add_clause(g, b, false);
      break;
    }
    case 1:
    case 2:
    case 3: {  // transitive (with optional PP)
      add_clause(g, b, true);
      break;
    }
    case 4: {  // ditransitive
      const int subj = add_np(g, b, NpRole::Subject);
      const Verb& v = g.pick(verbs_ditrans());
      b.tokens.push_back(v.past);
      const int vp = b.pos() - 1;
      const int rec = add_np(g, b, NpRole::Recipient);
      const int obj = add_np(g, b, NpRole::Object);
      b.binary(vp, v.lemma, "agent", subj, arg_text_for(b, subj));
      b.binary(vp, v.lemma, "recipient", rec, arg_text_for(b, rec));
      b.binary(vp, v.lemma, "theme", obj, arg_text_for(b, obj));
      break;
    }
    case 5: {  // clausal complement
      const int subj = add_np(g, b, NpRole::Subject);
      const Verb& v = g.pick(verbs_ccomp());
      b.tokens.push_back(v.past);
      const int vp = b.pos() - 1;
      b.tokens.push_back("that");
      const int inner_vp = add_clause(g, b, true);
      b.binary(vp, v.lemma, "agent", subj, arg_text_for(b, subj));
      b.binary(vp, v.lemma, "ccomp", inner_vp, "x _ " + std::to_string(inner_vp));
      break;
    }
    case 6: {  // infinitival complement, subject control
      const int subj = add_np(g, b, NpRole::Subject);
      const Verb& v = g.pick(verbs_xcomp());
      b.tokens.push_back(v.past);
      const int vp = b.pos() - 1;
      b.tokens.push_back("to");
      const Verb& inf = g.pick(verbs_intrans());
      b.tokens.push_back(inf.lemma);
      const int infp = b.pos() - 1;
      b.binary(vp, v.lemma, "agent", subj, arg_text_for(b, subj));
      b.binary(vp, v.lemma, "xcomp", infp, "x _ " + std::to_string(infp));
      b.binary(infp, inf.lemma, "agent", subj, arg_text_for(b, subj));
      break;
    }
    case 7: {  // passive, optional by-phrase
      const int subj = add_np(g, b, NpRole::Object);
      b.tokens.push_back("was");
      const Verb& v = g.pick(verbs_trans());
      b.tokens.push_back(v.past);
      const int vp = b.pos() - 1;
      b.binary(vp, v.lemma, "theme", subj, arg_text_for(b, subj));
      if (g.coin(0.5)) {
        b.tokens.push_back("by");
        const int agent = add_np(g, b, NpRole::Subject);
        b.binary(vp, v.lemma, "agent", agent, arg_text_for(b, agent));
      }
      break;
    }
    case 8: {  // subject-attached PP
      const int subj = add_np(g, b, NpRole::Subject);
      const std::string subj_tok = b.tokens[static_cast<std::size_t>(subj)];
      if (std::islower(static_cast<unsigned char>(subj_tok[0])))
        add_pp(g, b, subj, subj_tok, 1);
      const Verb& v = g.pick(verbs_trans());
      b.tokens.push_back(v.past);
      const int vp = b.pos() - 1;
      const int obj = add_np(g, b, NpRole::Object);
      b.binary(vp, v.lemma, "agent", subj, arg_text_for(b, subj));
      b.binary(vp, v.lemma, "theme", obj, arg_text_for(b, obj));
      break;
    }
    default: {  // transitive with both NPs definite more often
      add_clause(g, b, true);
      break;
    }
  }
  return finish(b, split_case);
}

cogs::CogsExample primitive_example(const std::string& token, const std::string& lf) {
  cogs::CogsExample ex;
  ex.tokens = {token};
  ex.lf = lf;
  ex.split_case = "primitive";
  return ex;
}

// Unique-label mode draws only from the shared nouns and the two simple
// verb classes; one short sentence per lexical item keeps dev/gen splits
// inside the training vocabulary.
std::vector<cogs::CogsExample> coverage_block_unique(Gen& g) {
  std::vector<cogs::CogsExample> out;
  const auto& vi = verbs_intrans();
  for (std::size_t i = 0; i < nouns_shared().size(); ++i) {
    Builder b;
    const std::string& noun = nouns_shared()[i];
    const Verb& v = vi[i % vi.size()];
    b.tokens = {"a", noun, v.past};
    b.unary(1, noun);
    b.binary(2, v.lemma, "agent", 1, "x _ 1");
    out.push_back(finish(b, "in_distribution"));
  }
  const auto& vt = verbs_trans();
  for (std::size_t i = 0; i < vt.size(); ++i) {
    Builder b;
    const std::string& subj = nouns_shared()[(2 * i) % nouns_shared().size()];
    const std::string& obj = nouns_shared()[(2 * i + 1) % nouns_shared().size()];
    b.tokens = {"a", subj, vt[i].past, "a", obj};
    b.unary(1, subj);
    b.unary(4, obj);
    b.binary(2, vt[i].lemma, "agent", 1, "x _ 1");
    b.binary(2, vt[i].lemma, "theme", 4, "x _ 4");
    out.push_back(finish(b, "in_distribution"));
  }
  for (std::size_t i = 0; i < proper_shared().size(); ++i) {
    Builder b;
    const std::string& name = proper_shared()[i];
    const Verb& v = vi[(i + 3) % vi.size()];
    b.tokens = {name, v.past};
    b.binary(1, v.lemma, "agent", 0, name);
    out.push_back(finish(b, "in_distribution"));
  }
  (void)g;
  return out;
}

std::vector<cogs::CogsExample> coverage_block(Gen& g) {
  // One sentence per lexical item in its training role, so dev/gen tokens
  // are always in-vocabulary.
  std::vector<cogs::CogsExample> out;
  for (const auto& n : nouns_shared()) {
    Builder b;
    const std::string noun = n;
    b.tokens = {"the", noun};
    b.definite(1, noun);
    const Verb& v = g.pick(verbs_intrans());
    b.tokens.push_back(v.past);
    b.binary(2, v.lemma, "agent", 1, "x _ 1");
    out.push_back(finish(b, "in_distribution"));
  }
  for (const auto& n : nouns_subject_only()) {
    Builder b;
    b.tokens = {"a", n};
    b.unary(1, n);
    const Verb& v = g.pick(verbs_trans());
    b.tokens.push_back(v.past);
    const std::string obj = g.pick(nouns_shared());
    b.tokens.push_back("the");
    b.tokens.push_back(obj);
    b.definite(4, obj);
    b.binary(2, v.lemma, "agent", 1, "x _ 1");
    b.binary(2, v.lemma, "theme", 4, "x _ 4");
    out.push_back(finish(b, "in_distribution"));
  }
  for (const auto& n : nouns_object_only()) {
    Builder b;
    const std::string subj = g.pick(nouns_shared());
    b.tokens = {"a", subj};
    b.unary(1, subj);
    const Verb& v = g.pick(verbs_trans());
    b.tokens.push_back(v.past);
    b.tokens.push_back("a");
    b.tokens.push_back(n);
    b.unary(4, n);
    b.binary(2, v.lemma, "agent", 1, "x _ 1");
    b.binary(2, v.lemma, "theme", 4, "x _ 4");
    out.push_back(finish(b, "in_distribution"));
  }
  for (const auto& p : proper_shared()) {
    Builder b;
    b.tokens = {p};
    const Verb& v = g.pick(verbs_intrans());
    b.tokens.push_back(v.past);
    b.binary(1, v.lemma, "agent", 0, p);
    out.push_back(finish(b, "in_distribution"));
  }
  // every verb class, cycling the nouns
  const auto& ns = nouns_shared();
  for (std::size_t i = 0; i < verbs_intrans().size(); ++i) {
    Builder b;
    const Verb& v = verbs_intrans()[i];
    b.tokens = {"a", ns[i % ns.size()], v.past};
    b.unary(1, ns[i % ns.size()]);
    b.binary(2, v.lemma, "agent", 1, "x _ 1");
    out.push_back(finish(b, "in_distribution"));
  }
  for (std::size_t i = 0; i < verbs_trans().size(); ++i) {
    Builder b;
    const Verb& v = verbs_trans()[i];
    b.tokens = {"a", ns[(2 * i) % ns.size()], v.past, "a", ns[(2 * i + 1) % ns.size()]};
    b.unary(1, ns[(2 * i) % ns.size()]);
    b.unary(4, ns[(2 * i + 1) % ns.size()]);
    b.binary(2, v.lemma, "agent", 1, "x _ 1");
    b.binary(2, v.lemma, "theme", 4, "x _ 4");
    out.push_back(finish(b, "in_distribution"));
  }
  for (std::size_t i = 0; i < verbs_ditrans().size(); ++i) {
    Builder b;
    const Verb& v = verbs_ditrans()[i];
    b.tokens = {"a", ns[(3 * i) % ns.size()], v.past, "a", ns[(3 * i + 1) % ns.size()],
                "a", ns[(3 * i + 2) % ns.size()]};
    b.unary(1, ns[(3 * i) % ns.size()]);
    b.unary(4, ns[(3 * i + 1) % ns.size()]);
    b.unary(6, ns[(3 * i + 2) % ns.size()]);
    b.binary(2, v.lemma, "agent", 1, "x _ 1");
    b.binary(2, v.lemma, "recipient", 4, "x _ 4");
    b.binary(2, v.lemma, "theme", 6, "x _ 6");
    out.push_back(finish(b, "in_distribution"));
  }
  for (std::size_t i = 0; i < verbs_ccomp().size(); ++i) {
    Builder b;
    const Verb& v = verbs_ccomp()[i];
    const Verb& inner = verbs_intrans()[i % verbs_intrans().size()];
    b.tokens = {"a", ns[i % ns.size()], v.past, "that", "a",
                ns[(i + 5) % ns.size()], inner.past};
    b.unary(1, ns[i % ns.size()]);
    b.unary(5, ns[(i + 5) % ns.size()]);
    b.binary(2, v.lemma, "agent", 1, "x _ 1");
    b.binary(2, v.lemma, "ccomp", 6, "x _ 6");
    b.binary(6, inner.lemma, "agent", 5, "x _ 5");
    out.push_back(finish(b, "in_distribution"));
  }
  for (std::size_t i = 0; i < verbs_xcomp().size(); ++i) {
    Builder b;
    const Verb& v = verbs_xcomp()[i];
    const Verb& inf = verbs_intrans()[(i + 2) % verbs_intrans().size()];
    b.tokens = {"a", ns[(i + 3) % ns.size()], v.past, "to", inf.lemma};
    b.unary(1, ns[(i + 3) % ns.size()]);
    b.binary(2, v.lemma, "agent", 1, "x _ 1");
    b.binary(2, v.lemma, "xcomp", 4, "x _ 4");
    b.binary(4, inf.lemma, "agent", 1, "x _ 1");
    out.push_back(finish(b, "in_distribution"));
  }
  {
    // passive and each preposition
    Builder b;
    b.tokens = {"a", ns[0], "was", verbs_trans()[0].past};
    b.unary(1, ns[0]);
    b.binary(3, verbs_trans()[0].lemma, "theme", 1, "x _ 1");
    out.push_back(finish(b, "in_distribution"));
  }
  for (std::size_t i = 0; i < preps().size(); ++i) {
    Builder b;
    b.tokens = {"a", ns[(4 * i) % ns.size()], preps()[i], "a", ns[(4 * i + 1) % ns.size()],
                verbs_intrans()[i % verbs_intrans().size()].past};
    b.unary(1, ns[(4 * i) % ns.size()]);
    b.unary(4, ns[(4 * i + 1) % ns.size()]);
    b.binary(1, ns[(4 * i) % ns.size()], "nmod." + preps()[i], 4, "x _ 4");
    b.binary(5, verbs_intrans()[i % verbs_intrans().size()].lemma, "agent", 1, "x _ 1");
    out.push_back(finish(b, "in_distribution"));
  }
  // primitives: proper nouns, nouns, and lambda verbs
  for (const auto& p : proper_primitive_only()) out.push_back(primitive_example(p, p));
  out.push_back(primitive_example("shark", "shark ( x _ 1 )"));
  out.push_back(primitive_example("donut", "donut ( x _ 1 )"));
  out.push_back(primitive_example(
      "touch",
      "LAMBDA a . LAMBDA b . LAMBDA e . touch . agent ( e , b ) AND touch . theme ( e , a )"));
  out.push_back(primitive_example("crawl", "LAMBDA a . LAMBDA e . crawl . agent ( e , a )"));
  return out;
}

}  // namespace

CogsCorpus generate_cogs(const CogsGenConfig& cfg, std::uint64_t seed) {
  Gen g(seed);
  g.unique_only = cfg.unique_labels_only;
  CogsCorpus corpus;

  corpus.train = cfg.unique_labels_only ? coverage_block_unique(g) : coverage_block(g);
  while (static_cast<int>(corpus.train.size()) < cfg.train)
    corpus.train.push_back(make_sentence(g, "in_distribution"));
  for (int i = 0; i < cfg.dev; ++i) corpus.dev.push_back(make_sentence(g, "in_distribution"));
  for (int i = 0; i < cfg.test; ++i)
    corpus.test.push_back(make_sentence(g, "in_distribution"));

  if (cfg.unique_labels_only) {
    for (int i = 0; i < cfg.gen; ++i) corpus.gen.push_back(make_sentence(g, "in_distribution"));
    return corpus;
  }

  // Generalization cases: lexical items in never-seen roles plus deeper PPs.
  const int per_case = std::max(1, cfg.gen / 4);
  for (int i = 0; i < per_case; ++i) {
    g.used_in_sentence.clear();
    Builder b;
    const std::string obj = g.pick(nouns_subject_only());
    add_clause(g, b, true, &obj);
    corpus.gen.push_back(finish(b, "subj_to_obj"));
  }
  for (int i = 0; i < per_case; ++i) {
    g.used_in_sentence.clear();
    Builder b;
    const std::string subj = g.pick(nouns_object_only());
    const int sp = add_np(g, b, NpRole::Subject, &subj);
    const Verb& v = g.pick(verbs_trans());
    b.tokens.push_back(v.past);
    const int vp = b.pos() - 1;
    const int op = add_np(g, b, NpRole::Object);
    b.binary(vp, v.lemma, "agent", sp, arg_text_for(b, sp));
    b.binary(vp, v.lemma, "theme", op, arg_text_for(b, op));
    corpus.gen.push_back(finish(b, "obj_to_subj"));
  }
  for (int i = 0; i < per_case; ++i) {
    g.used_in_sentence.clear();
    Builder b;
    const std::string obj = g.pick(proper_primitive_only());
    add_clause(g, b, true, &obj, /*object_proper=*/true);
    corpus.gen.push_back(finish(b, "prim_to_obj"));
  }
  while (static_cast<int>(corpus.gen.size()) < cfg.gen) {
    g.used_in_sentence.clear();
    Builder b;
    const int subj = add_np(g, b, NpRole::Subject);
    const Verb& v = g.pick(verbs_trans());
    b.tokens.push_back(v.past);
    const int vp = b.pos() - 1;
    b.tokens.push_back("a");
    const std::string obj = g.pick_fresh(nouns_shared());
    b.tokens.push_back(obj);
    const int op = b.pos() - 1;
    b.unary(op, obj);
    b.binary(vp, v.lemma, "agent", subj, arg_text_for(b, subj));
    b.binary(vp, v.lemma, "theme", op, arg_text_for(b, op));
    add_pp(g, b, op, obj, 3);  // deeper recursion than training depth
    corpus.gen.push_back(finish(b, "pp_depth"));
  }
  return corpus;
}

void write_cogs_tsv(const std::vector<cogs::CogsExample>& examples, const std::string& path) {
  std::string out;
  for (const auto& ex : examples) {
    out += join(ex.tokens, " ");
    out += '\t';
    out += ex.lf;
    out += '\t';
    out += ex.split_case.empty() ? "in_distribution" : ex.split_case;
    out += '\n';
  }
  write_file(path, out);
}

// ---- CFQ-style generator ------------------------------------------------

namespace {

const std::vector<std::string>& cfq_m_entities() {
  static const std::vector<std::string> v{"M0", "M1", "M2", "M3", "M4",
                                          "M5", "M6", "M7", "M8", "M9"};
  return v;
}
const std::vector<std::string>& cfq_ns_entities() {
  static const std::vector<std::string> v{"ns:m.05zppz", "ns:m.02zsn", "ns:m.059j2",
                                          "ns:m.0345h",  "ns:m.06mkj", "ns:m.0f8l9c"};
  return v;
}
const std::vector<std::string>& cfq_relations() {
  static const std::vector<std::string> v{
      "parent", "sibling", "spouse", "influenced", "influenced_by", "directed",
      "produced", "wrote", "edited", "starred", "employed", "founded",
      "acquired", "married", "gender", "nationality", "cinematographer",
      "distributor"};
  return v;
}
const std::vector<std::string>& cfq_categories() {
  static const std::vector<std::string> v{"actor", "director", "editor", "producer",
                                          "writer", "person", "company", "film",
                                          "screenwriter", "composer", "artist",
                                          "character", "employer", "distributor_kind"};
  return v;
}

}  // namespace

std::vector<cfq::CfqExample> generate_cfq(const CfqGenConfig& cfg, std::uint64_t seed) {
  std::mt19937_64 eng(seed);
  auto irand = [&](int n) { return static_cast<int>(eng() % static_cast<std::uint64_t>(n)); };
  auto coin = [&](double p) {
    return std::uniform_real_distribution<double>(0, 1)(eng) < p;
  };

  std::vector<cfq::CfqExample> out;
  out.reserve(static_cast<std::size_t>(cfg.count));

  // Coverage block: one query per relation and per category, so any prefix
  // of ~40 examples already attests every label.
  for (std::size_t i = 0; i < cfq_relations().size(); ++i) {
    cfq::CfqExample ex;
    const std::string subj = cfq_m_entities()[i % cfq_m_entities().size()];
    const std::string obj = cfq_ns_entities()[i % cfq_ns_entities().size()];
    const std::string& pred = cfq_relations()[i];
    ex.sparql = "SELECT count(*) WHERE { " + subj + " " + pred + " " + obj + " }";
    ex.question = "did " + subj + " " + pred + " " + obj + " ?";
    out.push_back(std::move(ex));
  }
  for (std::size_t i = 0; i < cfq_categories().size(); ++i) {
    cfq::CfqExample ex;
    const std::string& cat = cfq_categories()[i];
    ex.sparql = "SELECT DISTINCT ?x0 WHERE { ?x0 a " + cat + " . ?x0 " +
                cfq_relations()[i % cfq_relations().size()] + " " +
                cfq_m_entities()[i % cfq_m_entities().size()] + " }";
    ex.question = "who is a " + cat + " and " +
                  cfq_relations()[i % cfq_relations().size()] + " " +
                  cfq_m_entities()[i % cfq_m_entities().size()] + " ?";
    out.push_back(std::move(ex));
  }
  for (int v = 0; v <= 4; ++v) {
    // variables in both count and wh- contexts
    cfq::CfqExample ex;
    const std::string var = "?x" + std::to_string(v);
    const std::string& pred = cfq_relations()[static_cast<std::size_t>(v)];
    ex.sparql = "SELECT count(*) WHERE { " + var + " " + pred + " M" +
                std::to_string(v) + " . FILTER ( " + var + " != M" +
                std::to_string(v + 1) + " ) }";
    ex.question = "did " + var + " " + pred + " M" + std::to_string(v) + " not M" +
                  std::to_string(v + 1) + " ?";
    out.push_back(std::move(ex));
    cfq::CfqExample wx;
    wx.sparql = "SELECT DISTINCT ?x0 WHERE { ?x0 " + pred + " " + var + " }";
    wx.question = "who " + pred + " " + var + " ?";
    out.push_back(std::move(wx));
  }

  while (static_cast<int>(out.size()) < cfg.count) {
    const bool wh = coin(0.5);
    std::vector<std::string> vars{"?x1", "?x2", "?x3", "?x4"};
    if (wh) vars.insert(vars.begin(), "?x0");
    auto entity = [&]() -> std::string {
      const int kind = irand(wh ? 3 : 2);
      if (kind == 0) return cfq_m_entities()[static_cast<std::size_t>(irand(10))];
      if (kind == 1)
        return coin(0.5) ? vars[static_cast<std::size_t>(irand(static_cast<int>(vars.size())))]
                         : cfq_ns_entities()[static_cast<std::size_t>(irand(6))];
      return "?x0";
    };

    cfq::SparqlQuery q;
    q.select = wh ? cfq::SparqlQuery::Select::DistinctX0 : cfq::SparqlQuery::Select::Count;
    const int n_constraints = 1 + irand(cfg.max_constraints);
    std::vector<std::string> used_entities;
    std::vector<std::string> used_preds;
    for (int c = 0; c < n_constraints; ++c) {
      const double kind = std::uniform_real_distribution<double>(0, 1)(eng);
      if (kind < 0.22 && !used_entities.empty()) {
        const std::string a = used_entities[static_cast<std::size_t>(
            irand(static_cast<int>(used_entities.size())))];
        std::string b = entity();
        if (a == b) b = cfq_m_entities()[static_cast<std::size_t>(irand(10))];
        if (a == b) continue;
        q.filters.push_back({a, b});
        used_entities.push_back(b);
        continue;
      }
      if (kind < 0.5) {
        cfq::Triple t;
        t.one_place = true;
        t.subjects = {entity()};
        t.pred = (coin(0.3) && !used_preds.empty())
                     ? used_preds[static_cast<std::size_t>(
                           irand(static_cast<int>(used_preds.size())))]
                     : cfq_categories()[static_cast<std::size_t>(irand(
                           static_cast<int>(cfq_categories().size())))];
        used_entities.push_back(t.subjects[0]);
        used_preds.push_back(t.pred);
        q.triples.push_back(std::move(t));
        continue;
      }
      cfq::Triple t;
      t.subjects = {entity()};
      t.pred = (coin(0.3) && !used_preds.empty())
                   ? used_preds[static_cast<std::size_t>(
                         irand(static_cast<int>(used_preds.size())))]
                   : cfq_relations()[static_cast<std::size_t>(irand(
                         static_cast<int>(cfq_relations().size())))];
      t.objects = {entity()};
      if (t.subjects[0] == t.objects[0])
        t.objects = {cfq_m_entities()[static_cast<std::size_t>(irand(10))]};
      if (t.subjects[0] == t.objects[0]) continue;
      used_entities.push_back(t.subjects[0]);
      used_entities.push_back(t.objects[0]);
      used_preds.push_back(t.pred);
      q.triples.push_back(std::move(t));
    }
    if (q.triples.empty() && q.filters.empty()) continue;
    if (wh) {
      // wh- queries must mention ?x0 somewhere
      bool has_x0 = false;
      for (const auto& t : q.triples) {
        for (const auto& e : t.subjects) has_x0 = has_x0 || e == "?x0";
        for (const auto& e : t.objects) has_x0 = has_x0 || e == "?x0";
      }
      for (const auto& f : q.filters) has_x0 = has_x0 || f.a == "?x0" || f.b == "?x0";
      if (!has_x0) {
        if (q.triples.empty()) continue;
        q.triples[0].subjects = {"?x0"};
      }
    }

    // Canonical text of the uncompressed query.
    std::vector<std::string> constraints;
    for (const auto& t : q.triples) constraints.push_back(cfq::format_triple(t));
    for (const auto& f : q.filters)
      constraints.push_back("FILTER ( " + f.a + " != " + f.b + " )");
    const std::string select = wh ? "SELECT DISTINCT ?x0" : "SELECT count(*)";
    const std::string sparql = select + " WHERE { " + join(constraints, " . ") + " }";

    // Templated question text; enough tokens that 2N slots always cover the
    // graph's nodes.
    std::vector<std::string> words{wh ? "who" : "did"};
    for (const auto& t : q.triples) {
      for (const auto& e : t.subjects) words.push_back(e);
      words.push_back(t.pred);
      for (const auto& e : t.objects) words.push_back(e);
      words.push_back("and");
    }
    for (const auto& f : q.filters) {
      words.push_back(f.a);
      words.push_back("not");
      words.push_back(f.b);
      words.push_back("and");
    }
    if (words.back() == "and") words.pop_back();
    words.push_back("?");

    cfq::CfqExample ex;
    ex.question = join(words, " ");
    ex.sparql = sparql;
    out.push_back(std::move(ex));
  }
  return out;
}

void write_cfq_jsonl(const std::vector<cfq::CfqExample>& examples, const std::string& path) {
  std::string out;
  for (const auto& ex : examples) {
    nlohmann::json j{{"question", ex.question}, {"sparql", ex.sparql}};
    out += j.dump();
    out += '\n';
  }
  write_file(path, out);
}

void write_split_index(const std::vector<int>& train, const std::vector<int>& dev,
                       const std::vector<int>& test, const std::string& path) {
  nlohmann::json j{{"train", train}, {"dev", dev}, {"test", test}};
  write_file(path, j.dump());
}

}  // namespace lagr::synth
