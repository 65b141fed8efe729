#include "lagr/cogs.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <stdexcept>

#include "lagr/util.hpp"

namespace lagr::cogs {

namespace {

const std::set<std::string>& role_names() {
  static const std::set<std::string> roles{"agent",   "theme",   "recipient", "ccomp",
                                           "xcomp",   "nmod.on", "nmod.in",   "nmod.beside"};
  return roles;
}

bool is_capitalized(const std::string& s) {
  return !s.empty() && std::isupper(static_cast<unsigned char>(s[0]));
}

[[noreturn]] void fail(const std::string& what, std::size_t clause_index) {
  throw std::invalid_argument("parse_lf: " + what + " (clause " +
                              std::to_string(clause_index) + ")");
}

// "x _ 12" starting at tokens[i]; returns the variable index.
int parse_var(const std::vector<std::string>& toks, std::size_t& i, std::size_t clause) {
  if (i + 2 >= toks.size() || toks[i] != "x" || toks[i + 1] != "_") fail("expected variable", clause);
  int var = 0;
  try {
    var = std::stoi(toks[i + 2]);
  } catch (...) {
    fail("bad variable index '" + toks[i + 2] + "'", clause);
  }
  i += 3;
  return var;
}

Definite parse_definite(const std::vector<std::string>& toks, std::size_t clause) {
  // * noun ( x _ i )
  std::size_t i = 1;
  if (toks.size() != 7 || toks[0] != "*") fail("malformed definite clause", clause);
  Definite d;
  d.noun = toks[i++];
  if (toks[i++] != "(") fail("expected '(' in definite clause", clause);
  d.var = parse_var(toks, i, clause);
  if (i >= toks.size() || toks[i] != ")") fail("expected ')' in definite clause", clause);
  return d;
}

Conjunct parse_conjunct(const std::vector<std::string>& toks, std::size_t clause) {
  const auto paren = std::find(toks.begin(), toks.end(), "(");
  if (paren == toks.end()) fail("conjunct without argument list", clause);
  const std::size_t head_len = static_cast<std::size_t>(paren - toks.begin());

  Conjunct c;
  if (head_len == 1) {
    c.pred = toks[0];
    c.unary = true;
  } else if (head_len == 3 && toks[1] == ".") {
    c.pred = toks[0];
    c.role = toks[2];
    c.unary = false;
  } else if (head_len == 5 && toks[1] == "." && toks[2] == "nmod" && toks[3] == ".") {
    c.pred = toks[0];
    c.role = "nmod." + toks[4];
    c.unary = false;
  } else {
    fail("malformed predicate head", clause);
  }
  if (!c.unary && !role_names().count(c.role)) fail("unknown role '" + c.role + "'", clause);

  std::size_t i = head_len + 1;
  if (c.unary) {
    c.head_var = parse_var(toks, i, clause);
    if (i >= toks.size() || toks[i] != ")") fail("expected ')'", clause);
    return c;
  }
  c.head_var = parse_var(toks, i, clause);
  if (i >= toks.size() || toks[i] != ",") fail("expected ',' between arguments", clause);
  ++i;
  if (i < toks.size() && toks[i] == "x") {
    c.arg_is_var = true;
    c.arg_var = parse_var(toks, i, clause);
  } else {
    if (i >= toks.size()) fail("missing second argument", clause);
    c.arg_is_var = false;
    c.arg_name = toks[i++];
  }
  if (i >= toks.size() || toks[i] != ")") fail("expected ')'", clause);
  return c;
}

LogicalForm parse_lambda(const std::vector<std::string>& toks) {
  LogicalForm lf;
  lf.kind = LogicalForm::Kind::LambdaPrimitive;
  std::size_t i = 0;
  while (i + 2 < toks.size() && toks[i] == "LAMBDA") {
    lf.lambda.vars.push_back(toks[i + 1]);
    if (toks[i + 2] != ".") fail("expected '.' after LAMBDA binder", 0);
    i += 3;
  }
  if (lf.lambda.vars.empty()) fail("LAMBDA form without binders", 0);
  // body: verb . role ( e , var ) AND ...
  bool first = true;
  while (i < toks.size()) {
    if (!first) {
      if (toks[i] != "AND") fail("expected AND in lambda body", 0);
      ++i;
    }
    if (i + 7 >= toks.size()) fail("truncated lambda conjunct", 0);
    const std::string verb = toks[i];
    if (toks[i + 1] != ".") fail("malformed lambda conjunct", 0);
    const std::string role = toks[i + 2];
    if (toks[i + 3] != "(" || toks[i + 5] != "," || toks[i + 7] != ")")
      fail("malformed lambda argument list", 0);
    if (first)
      lf.lambda.verb = verb;
    else if (verb != lf.lambda.verb)
      fail("lambda body mixes verbs", 0);
    if (toks[i + 4] != lf.lambda.vars.back()) fail("lambda event variable mismatch", 0);
    lf.lambda.conjuncts.emplace_back(role, toks[i + 6]);
    i += 8;
    first = false;
  }
  return lf;
}

}  // namespace

LogicalForm parse_lf(const std::string& text) {
  const std::vector<std::string> toks = split_ws(text);
  if (toks.empty()) throw std::invalid_argument("parse_lf: empty logical form");

  if (toks[0] == "LAMBDA") return parse_lambda(toks);
  if (toks.size() == 1) {
    if (!is_capitalized(toks[0]))
      throw std::invalid_argument("parse_lf: bare lowercase token '" + toks[0] + "'");
    LogicalForm lf;
    lf.kind = LogicalForm::Kind::ProperPrimitive;
    lf.primitive_name = toks[0];
    return lf;
  }

  // Split on ';' tokens: definite clauses first, conjunct section last.
  std::vector<std::vector<std::string>> sections;
  sections.emplace_back();
  for (const auto& t : toks) {
    if (t == ";")
      sections.emplace_back();
    else
      sections.back().push_back(t);
  }

  LogicalForm lf;
  for (std::size_t s = 0; s < sections.size(); ++s) {
    if (sections[s].empty()) fail("empty clause", s);
    const bool last = s + 1 == sections.size();
    if (sections[s][0] == "*") {
      lf.definites.push_back(parse_definite(sections[s], s));
      continue;
    }
    if (!last) fail("non-definite clause before ';'", s);
    // conjuncts split on AND
    std::vector<std::string> current;
    for (const auto& t : sections[s]) {
      if (t == "AND") {
        if (current.empty()) fail("empty conjunct", s);
        lf.conjuncts.push_back(parse_conjunct(current, s));
        current.clear();
      } else {
        current.push_back(t);
      }
    }
    if (current.empty()) fail("trailing AND", s);
    lf.conjuncts.push_back(parse_conjunct(current, s));
  }
  if (lf.conjuncts.empty() && lf.definites.empty())
    throw std::invalid_argument("parse_lf: no clauses found");
  return lf;
}

namespace {

std::string lambda_label(const LambdaForm& lf) {
  std::string out = "LAMBDA:" + lf.verb + ":";
  for (std::size_t i = 0; i < lf.conjuncts.size(); ++i) {
    if (i) out += ",";
    out += lf.conjuncts[i].first + "=" + lf.conjuncts[i].second;
  }
  return out;
}

std::string lambda_text_from_label(const std::string& label) {
  // LAMBDA:verb:role=a,role=b -> full lambda text with binders a..e
  const std::size_t p1 = label.find(':');
  const std::size_t p2 = label.find(':', p1 + 1);
  if (p1 == std::string::npos || p2 == std::string::npos)
    throw std::invalid_argument("serialize_lf: malformed lambda label '" + label + "'");
  const std::string verb = label.substr(p1 + 1, p2 - p1 - 1);
  std::vector<std::pair<std::string, std::string>> conjuncts;
  std::set<std::string> vars;
  std::string body = label.substr(p2 + 1);
  for (const auto& piece : split_ws(normalize_ws([&] {
         std::string b = body;
         std::replace(b.begin(), b.end(), ',', ' ');
         return b;
       }()))) {
    const std::size_t eq = piece.find('=');
    conjuncts.emplace_back(piece.substr(0, eq), piece.substr(eq + 1));
    vars.insert(piece.substr(eq + 1));
  }
  // binder order: argument variables sorted (a, b, ...), event variable last
  std::vector<std::string> binder(vars.begin(), vars.end());
  std::sort(binder.begin(), binder.end());
  binder.push_back("e");
  std::string out;
  for (const auto& v : binder) out += "LAMBDA " + v + " . ";
  for (std::size_t i = 0; i < conjuncts.size(); ++i) {
    if (i) out += " AND ";
    out += verb + " . " + conjuncts[i].first + " ( e , " + conjuncts[i].second + " )";
  }
  return out;
}

void claim_slot(StringGraph& g, int pos, const std::string& label) {
  if (pos < 0 || pos >= g.N)
    throw std::invalid_argument("lf_to_aligned_graph: variable x_" + std::to_string(pos) +
                                " outside the " + std::to_string(g.N) + "-token sentence");
  std::string& slot = g.labels[static_cast<std::size_t>(pos)];
  if (!slot.empty() && slot != label)
    throw std::invalid_argument("lf_to_aligned_graph: tokens " + std::to_string(pos) +
                                " claimed by both '" + slot + "' and '" + label + "'");
  slot = label;
}

int locate_name(const StringGraph& g, const std::vector<std::string>& tokens,
                const std::string& name) {
  // Prefer a token position already labeled with the name, else the first
  // unclaimed occurrence.
  for (int i = 0; i < g.N; ++i)
    if (tokens[static_cast<std::size_t>(i)] == name &&
        g.labels[static_cast<std::size_t>(i)] == name)
      return i;
  for (int i = 0; i < g.N; ++i)
    if (tokens[static_cast<std::size_t>(i)] == name &&
        g.labels[static_cast<std::size_t>(i)].empty())
      return i;
  throw std::invalid_argument("lf_to_aligned_graph: proper noun '" + name +
                              "' not found in the sentence");
}

}  // namespace

StringGraph lf_to_string_graph(const LogicalForm& lf, const std::vector<std::string>& tokens) {
  StringGraph g;
  g.N = static_cast<int>(tokens.size());
  if (g.N == 0) throw std::invalid_argument("lf_to_aligned_graph: empty sentence");
  g.labels.assign(static_cast<std::size_t>(g.N), "");

  switch (lf.kind) {
    case LogicalForm::Kind::ProperPrimitive:
      claim_slot(g, 0, lf.primitive_name);
      return g;
    case LogicalForm::Kind::LambdaPrimitive:
      claim_slot(g, 0, lambda_label(lf.lambda));
      return g;
    case LogicalForm::Kind::Standard:
      break;
  }

  // Single-token noun primitives ("shark ( x _ 1 )") pin to slot 0.
  if (g.N == 1 && lf.definites.empty() && lf.conjuncts.size() == 1 &&
      lf.conjuncts[0].unary) {
    claim_slot(g, 0, lf.conjuncts[0].pred);
    return g;
  }

  for (const Definite& d : lf.definites) {
    claim_slot(g, d.var, d.noun);
    claim_slot(g, d.var - 1, "*");
    g.edges.emplace_back(d.var - 1, d.var, "article");
  }
  // First pass claims predicate slots so proper-noun lookup sees them.
  for (const Conjunct& c : lf.conjuncts) claim_slot(g, c.head_var, c.pred);
  for (const Conjunct& c : lf.conjuncts) {
    if (c.unary) continue;
    int dst;
    if (c.arg_is_var) {
      dst = c.arg_var;
      if (dst < 0 || dst >= g.N)
        throw std::invalid_argument("lf_to_aligned_graph: variable x_" +
                                    std::to_string(dst) + " outside the sentence");
    } else {
      dst = locate_name(g, tokens, c.arg_name);
      claim_slot(g, dst, c.arg_name);
    }
    g.edges.emplace_back(c.head_var, dst, c.role);
  }
  return g;
}

AlignedGraph intern_string_graph(const StringGraph& g, const LabelVocab& node_vocab,
                                 const LabelVocab& edge_vocab) {
  AlignedGraph out(g.N, 1);
  for (int i = 0; i < g.N; ++i)
    if (!g.labels[static_cast<std::size_t>(i)].empty())
      out.z[static_cast<std::size_t>(i)] = node_vocab.id(g.labels[static_cast<std::size_t>(i)]);
  for (const auto& [src, dst, role] : g.edges) {
    int& cell = out.xi[static_cast<std::size_t>(src) * g.N + dst];
    const int id = edge_vocab.id(role);
    if (cell != LabelVocab::kNull && cell != id)
      throw std::invalid_argument("lf_to_aligned_graph: duplicate edge between x_" +
                                  std::to_string(src) + " and x_" + std::to_string(dst));
    cell = id;
  }
  return out;
}

AlignedGraph lf_to_aligned_graph(const LogicalForm& lf, const std::vector<std::string>& tokens,
                                 const LabelVocab& node_vocab, const LabelVocab& edge_vocab) {
  return intern_string_graph(lf_to_string_graph(lf, tokens), node_vocab, edge_vocab);
}

namespace {

bool is_verb_role(const std::string& role) {
  return role == "agent" || role == "theme" || role == "recipient" || role == "ccomp" ||
         role == "xcomp";
}

std::string var_text(int pos) { return "x _ " + std::to_string(pos); }

std::string role_text(const std::string& role) {
  if (role.rfind("nmod.", 0) == 0) return "nmod . " + role.substr(5);
  return role;
}

}  // namespace

std::string serialize_lf(const MRGraph& g) {
  if (g.nodes.empty()) return "";
  for (const MRNode& n : g.nodes)
    if (n.pos < 0)
      throw std::invalid_argument("serialize_lf: node '" + n.label +
                                  "' carries no token-position provenance");

  // Primitive shapes: a single node and no edges.
  if (g.nodes.size() == 1 && g.edges.empty()) {
    const std::string& label = g.nodes[0].label;
    if (label.rfind("LAMBDA:", 0) == 0) return lambda_text_from_label(label);
    if (is_capitalized(label)) return label;
    return label + " ( " + var_text(1) + " )";
  }

  const auto& nodes = g.nodes;
  std::vector<bool> definite(nodes.size(), false);
  std::vector<bool> incident(nodes.size(), false);
  std::vector<bool> verb(nodes.size(), false);
  for (const MREdge& e : g.edges) {
    incident[static_cast<std::size_t>(e.src)] = true;
    incident[static_cast<std::size_t>(e.dst)] = true;
    if (e.label == "article") definite[static_cast<std::size_t>(e.dst)] = true;
    if (is_verb_role(e.label)) verb[static_cast<std::size_t>(e.src)] = true;
  }

  struct Clause {
    int head_pos;
    int arg_pos;  // -1 for unary
    std::string role;
    std::string text;
  };
  std::vector<Clause> definites, conjuncts;

  for (const MREdge& e : g.edges) {
    const MRNode& src = nodes[static_cast<std::size_t>(e.src)];
    const MRNode& dst = nodes[static_cast<std::size_t>(e.dst)];
    if (e.label == "article") {
      definites.push_back({dst.pos, -1, "", "* " + dst.label + " ( " + var_text(dst.pos) + " )"});
      continue;
    }
    const std::string arg =
        is_capitalized(dst.label) ? dst.label : var_text(dst.pos);
    conjuncts.push_back({src.pos, dst.pos, e.label,
                         src.label + " . " + role_text(e.label) + " ( " +
                             var_text(src.pos) + " , " + arg + " )"});
  }
  for (const MRNode& n : nodes) {
    if (!incident[static_cast<std::size_t>(n.id)]) continue;  // unconnected: omitted
    if (definite[static_cast<std::size_t>(n.id)]) continue;   // named in the * clause
    if (verb[static_cast<std::size_t>(n.id)]) continue;
    if (n.label == "*" || is_capitalized(n.label)) continue;
    conjuncts.push_back({n.pos, -1, "", n.label + " ( " + var_text(n.pos) + " )"});
  }

  auto by_position = [](const Clause& a, const Clause& b) {
    if (a.head_pos != b.head_pos) return a.head_pos < b.head_pos;
    if (a.arg_pos != b.arg_pos) return a.arg_pos < b.arg_pos;
    return a.role < b.role;
  };
  std::sort(definites.begin(), definites.end(), by_position);
  std::sort(conjuncts.begin(), conjuncts.end(), by_position);

  std::vector<std::string> parts;
  for (const Clause& c : definites) parts.push_back(c.text);
  std::string conj;
  for (std::size_t i = 0; i < conjuncts.size(); ++i) {
    if (i) conj += " AND ";
    conj += conjuncts[i].text;
  }
  if (!conj.empty()) parts.push_back(conj);
  return join(parts, " ; ");
}

void collect_labels(const StringGraph& g, std::set<std::string>& node_labels,
                    std::set<std::string>& edge_labels) {
  for (const auto& l : g.labels)
    if (!l.empty()) node_labels.insert(l);
  for (const auto& [src, dst, role] : g.edges) edge_labels.insert(role);
}

void for_each_cogs_line(const std::string& path,
                        const std::function<void(CogsExample&&)>& fn, ReadStats* stats) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open COGS file: " + path);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::size_t start = 0;
    while (true) {
      const std::size_t tab = line.find('\t', start);
      if (tab == std::string::npos) {
        cols.push_back(line.substr(start));
        break;
      }
      cols.push_back(line.substr(start, tab - start));
      start = tab + 1;
    }
    if (cols.size() != 3 || cols[0].empty() || cols[1].empty()) {
      if (stats) ++stats->skipped_lines;
      continue;
    }
    CogsExample ex;
    ex.tokens = split_ws(cols[0]);
    ex.lf = normalize_ws(cols[1]);
    ex.split_case = cols[2];
    if (ex.tokens.empty()) {
      if (stats) ++stats->skipped_lines;
      continue;
    }
    fn(std::move(ex));
  }
}

std::vector<CogsExample> read_cogs_tsv(const std::string& path, ReadStats* stats) {
  std::vector<CogsExample> out;
  for_each_cogs_line(path, [&](CogsExample&& ex) { out.push_back(std::move(ex)); }, stats);
  return out;
}

const std::vector<std::string>& cogs_edge_labels() {
  static const std::vector<std::string> labels{
      "agent", "theme", "recipient", "ccomp", "xcomp",
      "nmod.on", "nmod.in", "nmod.beside", "article"};
  return labels;
}

}  // namespace lagr::cogs
