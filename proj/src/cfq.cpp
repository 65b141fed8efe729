#include "lagr/cfq.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <stdexcept>

#include <json.hpp>

#include "lagr/util.hpp"

namespace lagr::cfq {

namespace {

// Whitespace tokenization with brackets and commas as their own tokens.
std::vector<std::string> lex(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) {
      out.push_back(cur);
      cur.clear();
    }
  };
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      flush();
    } else if (c == '[' || c == ']' || c == ',' || c == '{' || c == '}') {
      flush();
      out.push_back(std::string(1, c));
    } else {
      cur.push_back(c);
    }
  }
  flush();
  return out;
}

[[noreturn]] void fail(const std::string& what, const std::vector<std::string>& span) {
  throw std::invalid_argument("parse_sparql: " + what + " near '" + join(span, " ") + "'");
}

// entity | [ entity (, entity)* ]
std::vector<std::string> parse_side(const std::vector<std::string>& toks, std::size_t& i) {
  std::vector<std::string> side;
  if (toks[i] == "[") {
    ++i;
    while (i < toks.size() && toks[i] != "]") {
      if (toks[i] == ",") {
        ++i;
        continue;
      }
      side.push_back(toks[i++]);
    }
    if (i >= toks.size()) fail("unterminated entity list", side);
    ++i;  // ']'
  } else {
    side.push_back(toks[i++]);
  }
  if (side.empty()) fail("empty entity side", toks);
  return side;
}

void parse_constraint(const std::vector<std::string>& toks, SparqlQuery& q) {
  if (toks.empty()) return;
  if (toks[0] == "FILTER") {
    // FILTER ( A != B )  or  FILTER A != B
    std::vector<std::string> rest(toks.begin() + 1, toks.end());
    std::erase(rest, "(");
    std::erase(rest, ")");
    if (rest.size() != 3 || rest[1] != "!=") fail("malformed FILTER constraint", toks);
    q.filters.push_back({rest[0], rest[2]});
    return;
  }
  std::size_t i = 0;
  std::vector<std::string> first = parse_side(toks, i);
  if (i >= toks.size()) fail("constraint missing predicate", toks);
  const std::string pred = toks[i++];
  if (i == toks.size()) {
    // "X CAT" one-place shorthand
    if (first.empty()) fail("one-place constraint without subject", toks);
    Triple t;
    t.subjects = first;
    t.pred = pred;
    t.one_place = true;
    q.triples.push_back(std::move(t));
    return;
  }
  if (pred == "a") {
    // "X a CAT"
    if (i + 1 != toks.size()) fail("trailing tokens after category", toks);
    Triple t;
    t.subjects = first;
    t.pred = toks[i];
    t.one_place = true;
    q.triples.push_back(std::move(t));
    return;
  }
  std::vector<std::string> second = parse_side(toks, i);
  if (i != toks.size()) fail("trailing tokens after object", toks);
  Triple t;
  t.subjects = first;
  t.pred = pred;
  t.objects = second;
  t.one_place = false;
  q.triples.push_back(std::move(t));
}

}  // namespace

SparqlQuery parse_sparql(const std::string& text) {
  const std::vector<std::string> toks = lex(text);
  std::size_t i = 0;
  auto need = [&](const std::string& tok) {
    if (i >= toks.size() || toks[i] != tok)
      throw std::invalid_argument("parse_sparql: expected '" + tok + "' near '" +
                                  (i < toks.size() ? toks[i] : "<end>") + "'");
    ++i;
  };
  SparqlQuery q;
  need("SELECT");
  if (i < toks.size() && toks[i] == "count(*)") {
    q.select = SparqlQuery::Select::Count;
    ++i;
  } else if (i < toks.size() && toks[i] == "DISTINCT") {
    ++i;
    need("?x0");
    q.select = SparqlQuery::Select::DistinctX0;
  } else {
    throw std::invalid_argument("parse_sparql: unsupported SELECT clause");
  }
  need("WHERE");
  need("{");
  std::vector<std::string> current;
  while (i < toks.size() && toks[i] != "}") {
    if (toks[i] == ".") {
      parse_constraint(current, q);
      current.clear();
    } else {
      current.push_back(toks[i]);
    }
    ++i;
  }
  need("}");
  parse_constraint(current, q);
  if (i != toks.size())
    throw std::invalid_argument("parse_sparql: trailing text after '}'");
  return q;
}

namespace {

std::vector<std::string> sorted_unique(std::vector<std::string> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

std::string side_key(const std::vector<std::string>& side) { return join(side, "\x01"); }

// One merge pass grouping by (one_place, pred, key side); returns true when
// anything merged.
bool merge_pass(std::vector<Triple>& triples, bool key_on_object) {
  std::map<std::string, std::size_t> groups;
  std::vector<Triple> out;
  bool merged = false;
  for (Triple& t : triples) {
    const std::string key = (t.one_place ? "1" : "2") + std::string("\x02") + t.pred +
                            "\x02" +
                            (t.one_place ? side_key(t.subjects)
                                         : side_key(key_on_object ? t.objects : t.subjects));
    if (t.one_place && key_on_object) {
      // one-place triples merge on the predicate alone, handled in the
      // object pass to avoid double work
      const std::string cat_key = "1\x02" + t.pred;
      auto it = groups.find(cat_key);
      if (it == groups.end()) {
        groups.emplace(cat_key, out.size());
        out.push_back(t);
      } else {
        auto& subj = out[it->second].subjects;
        subj.insert(subj.end(), t.subjects.begin(), t.subjects.end());
        out[it->second].subjects = sorted_unique(std::move(subj));
        merged = true;
      }
      continue;
    }
    if (t.one_place) {
      out.push_back(t);
      continue;
    }
    auto it = groups.find(key);
    if (it == groups.end()) {
      groups.emplace(key, out.size());
      out.push_back(t);
    } else {
      auto& side = key_on_object ? out[it->second].subjects : out[it->second].objects;
      const auto& add = key_on_object ? t.subjects : t.objects;
      side.insert(side.end(), add.begin(), add.end());
      side = sorted_unique(std::move(side));
      merged = true;
    }
  }
  triples = std::move(out);
  return merged;
}

}  // namespace

SparqlQuery compress(const SparqlQuery& q, CompressMode mode) {
  SparqlQuery out = q;
  for (Triple& t : out.triples) {
    t.subjects = sorted_unique(std::move(t.subjects));
    t.objects = sorted_unique(std::move(t.objects));
  }
  bool changed = true;
  while (changed) {
    changed = merge_pass(out.triples, /*key_on_object=*/true);
    if (mode == CompressMode::Both)
      changed = merge_pass(out.triples, /*key_on_object=*/false) || changed;
  }
  return out;
}

bool is_entity(const std::string& label) {
  if (label == "select_?x0") return true;
  if (label.rfind("ns:", 0) == 0) return true;
  if (label.size() >= 2 && label[0] == 'M' &&
      std::all_of(label.begin() + 1, label.end(),
                  [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }))
    return true;
  if (label.size() >= 3 && label[0] == '?' && label[1] == 'x' &&
      std::all_of(label.begin() + 2, label.end(),
                  [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }))
    return true;
  return false;
}

MRGraph sparql_to_graph(const SparqlQuery& q) {
  MRGraph g;
  std::map<std::string, int> entity_nodes;
  const bool wh = q.select == SparqlQuery::Select::DistinctX0;
  auto entity_label = [&](const std::string& e) {
    return wh && e == "?x0" ? std::string("select_?x0") : e;
  };
  auto entity_node = [&](const std::string& raw) {
    const std::string label = entity_label(raw);
    auto it = entity_nodes.find(label);
    if (it != entity_nodes.end()) return it->second;
    const int id = static_cast<int>(g.nodes.size());
    g.nodes.push_back({id, label, -1, -1});
    entity_nodes.emplace(label, id);
    return id;
  };
  if (wh) entity_node("?x0");  // the select marker is always present
  for (const Triple& t : q.triples) {
    const int pred = static_cast<int>(g.nodes.size());
    g.nodes.push_back({pred, t.pred, -1, -1});
    if (t.one_place) {
      for (const auto& s : t.subjects) g.edges.push_back({entity_node(s), pred, "agent"});
    } else {
      for (const auto& s : t.subjects) g.edges.push_back({pred, entity_node(s), "agent"});
      for (const auto& o : t.objects) g.edges.push_back({pred, entity_node(o), "theme"});
    }
  }
  for (const FilterPair& f : q.filters) {
    std::string a = entity_label(f.a), b = entity_label(f.b);
    if (b < a) std::swap(a, b);  // canonical orientation
    g.edges.push_back({entity_node(a), entity_node(b), "FILTER"});
  }
  return g;
}

std::string format_triple(const Triple& t) {
  auto side = [](const std::vector<std::string>& s) {
    return s.size() == 1 ? s[0] : "[" + join(s, ", ") + "]";
  };
  if (t.one_place) return side(t.subjects) + " a " + t.pred;
  return side(t.subjects) + " " + t.pred + " " + side(t.objects);
}

std::string format_triples(const std::vector<Triple>& triples) {
  std::vector<std::string> parts;
  for (const Triple& t : triples) parts.push_back(format_triple(t));
  return "[" + join(parts, ", ") + "]";
}

std::string graph_to_sparql(const MRGraph& g, ReconstructStats* stats) {
  bool wh = false;
  for (const MRNode& n : g.nodes) wh = wh || n.label == "select_?x0";
  auto restore = [&](const std::string& label) {
    return label == "select_?x0" ? std::string("?x0") : label;
  };

  std::vector<std::vector<std::pair<std::string, int>>> out_edges(g.nodes.size());
  std::vector<std::vector<std::pair<std::string, int>>> in_edges(g.nodes.size());
  std::vector<std::string> constraints;
  for (const MREdge& e : g.edges) {
    if (e.label == "FILTER") {
      constraints.push_back("FILTER ( " +
                            restore(g.nodes[static_cast<std::size_t>(e.src)].label) +
                            " != " +
                            restore(g.nodes[static_cast<std::size_t>(e.dst)].label) + " )");
      continue;
    }
    out_edges[static_cast<std::size_t>(e.src)].emplace_back(e.label, e.dst);
    in_edges[static_cast<std::size_t>(e.dst)].emplace_back(e.label, e.src);
  }

  for (const MRNode& n : g.nodes) {
    if (is_entity(n.label)) continue;
    std::vector<std::string> subjects, objects, one_place_subjects;
    for (const auto& [label, dst] : out_edges[static_cast<std::size_t>(n.id)]) {
      if (label == "agent") subjects.push_back(restore(g.nodes[static_cast<std::size_t>(dst)].label));
      if (label == "theme") objects.push_back(restore(g.nodes[static_cast<std::size_t>(dst)].label));
    }
    for (const auto& [label, src] : in_edges[static_cast<std::size_t>(n.id)])
      if (label == "agent")
        one_place_subjects.push_back(restore(g.nodes[static_cast<std::size_t>(src)].label));

    if (!subjects.empty() && !objects.empty()) {
      Triple t;
      t.subjects = sorted_unique(std::move(subjects));
      t.pred = n.label;
      t.objects = sorted_unique(std::move(objects));
      constraints.push_back(format_triple(t));
    } else if (!one_place_subjects.empty() && subjects.empty() && objects.empty()) {
      Triple t;
      t.subjects = sorted_unique(std::move(one_place_subjects));
      t.pred = n.label;
      t.one_place = true;
      constraints.push_back(format_triple(t));
    } else {
      // no reconstructable constraint for this predicate occurrence
      if (stats) ++stats->dropped_predicates;
    }
  }

  std::sort(constraints.begin(), constraints.end());
  const std::string select = wh ? "SELECT DISTINCT ?x0" : "SELECT count(*)";
  if (constraints.empty()) return select + " WHERE { }";
  return select + " WHERE { " + join(constraints, " . ") + " }";
}

namespace {

struct IsoView {
  int n = 0;
  std::vector<std::string> labels;
  // edge map as sorted (src, dst, label) triples for pair lookup
  std::map<std::pair<int, int>, std::vector<std::string>> edges;
  std::vector<int> out_deg, in_deg;
};

IsoView make_view(const MRGraph& g) {
  IsoView v;
  v.n = static_cast<int>(g.nodes.size());
  v.labels.resize(g.nodes.size());
  for (const MRNode& node : g.nodes) {
    if (node.id < 0 || node.id >= v.n)
      throw std::invalid_argument("graph_isomorphic: node ids must be dense");
    v.labels[static_cast<std::size_t>(node.id)] = node.label;
  }
  v.out_deg.assign(static_cast<std::size_t>(v.n), 0);
  v.in_deg.assign(static_cast<std::size_t>(v.n), 0);
  for (const MREdge& e : g.edges) {
    v.edges[{e.src, e.dst}].push_back(e.label);
    ++v.out_deg[static_cast<std::size_t>(e.src)];
    ++v.in_deg[static_cast<std::size_t>(e.dst)];
  }
  for (auto& [key, labels] : v.edges) std::sort(labels.begin(), labels.end());
  return v;
}

std::string signature(const IsoView& v, int node) {
  // label + degree + multiset of incident (direction, edge label, peer label)
  std::vector<std::string> parts;
  for (const auto& [key, labels] : v.edges) {
    if (key.first == node)
      for (const auto& l : labels)
        parts.push_back(">" + l + "\x01" + v.labels[static_cast<std::size_t>(key.second)]);
    if (key.second == node)
      for (const auto& l : labels)
        parts.push_back("<" + l + "\x01" + v.labels[static_cast<std::size_t>(key.first)]);
  }
  std::sort(parts.begin(), parts.end());
  return v.labels[static_cast<std::size_t>(node)] + "\x02" + join(parts, "\x03");
}

bool extend(const IsoView& a, const IsoView& b, std::vector<int>& map_ab,
            std::vector<char>& used_b, const std::vector<std::vector<int>>& candidates,
            const std::vector<int>& order, std::size_t depth) {
  if (depth == order.size()) return true;
  const int u = order[depth];
  for (int v : candidates[static_cast<std::size_t>(u)]) {
    if (used_b[static_cast<std::size_t>(v)]) continue;
    bool ok = true;
    // consistency with every already-mapped node, both directions
    for (std::size_t d = 0; d < depth && ok; ++d) {
      const int u2 = order[d];
      const int v2 = map_ab[static_cast<std::size_t>(u2)];
      auto ea = a.edges.find({u, u2});
      auto eb = b.edges.find({v, v2});
      const bool ha = ea != a.edges.end(), hb = eb != b.edges.end();
      if (ha != hb || (ha && ea->second != eb->second)) ok = false;
      if (!ok) break;
      ea = a.edges.find({u2, u});
      eb = b.edges.find({v2, v});
      const bool ha2 = ea != a.edges.end(), hb2 = eb != b.edges.end();
      if (ha2 != hb2 || (ha2 && ea->second != eb->second)) ok = false;
    }
    // self loops
    if (ok) {
      auto ea = a.edges.find({u, u});
      auto eb = b.edges.find({v, v});
      const bool ha = ea != a.edges.end(), hb = eb != b.edges.end();
      if (ha != hb || (ha && ea->second != eb->second)) ok = false;
    }
    if (!ok) continue;
    map_ab[static_cast<std::size_t>(u)] = v;
    used_b[static_cast<std::size_t>(v)] = 1;
    if (extend(a, b, map_ab, used_b, candidates, order, depth + 1)) return true;
    used_b[static_cast<std::size_t>(v)] = 0;
  }
  return false;
}

}  // namespace

bool graph_isomorphic(const MRGraph& ga, const MRGraph& gb) {
  if (ga.nodes.size() != gb.nodes.size() || ga.edges.size() != gb.edges.size())
    return false;
  IsoView a = make_view(ga);
  IsoView b = make_view(gb);

  // label-count pruning
  std::map<std::string, int> count_a, count_b;
  for (const auto& l : a.labels) ++count_a[l];
  for (const auto& l : b.labels) ++count_b[l];
  if (count_a != count_b) return false;
  std::map<std::string, int> ecount_a, ecount_b;
  for (const auto& [key, labels] : a.edges)
    for (const auto& l : labels) ++ecount_a[l];
  for (const auto& [key, labels] : b.edges)
    for (const auto& l : labels) ++ecount_b[l];
  if (ecount_a != ecount_b) return false;

  // degree-signature pruning and candidate lists
  std::vector<std::string> sig_b(static_cast<std::size_t>(b.n));
  for (int v = 0; v < b.n; ++v) sig_b[static_cast<std::size_t>(v)] = signature(b, v);
  std::vector<std::vector<int>> candidates(static_cast<std::size_t>(a.n));
  for (int u = 0; u < a.n; ++u) {
    const std::string sig = signature(a, u);
    for (int v = 0; v < b.n; ++v)
      if (sig == sig_b[static_cast<std::size_t>(v)])
        candidates[static_cast<std::size_t>(u)].push_back(v);
    if (candidates[static_cast<std::size_t>(u)].empty()) return false;
  }

  std::vector<int> order(static_cast<std::size_t>(a.n));
  for (int u = 0; u < a.n; ++u) order[static_cast<std::size_t>(u)] = u;
  std::sort(order.begin(), order.end(), [&](int x, int y) {
    return candidates[static_cast<std::size_t>(x)].size() <
           candidates[static_cast<std::size_t>(y)].size();
  });

  std::vector<int> map_ab(static_cast<std::size_t>(a.n), -1);
  std::vector<char> used_b(static_cast<std::size_t>(b.n), 0);
  return extend(a, b, map_ab, used_b, candidates, order, 0);
}

std::vector<CfqExample> read_cfq_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open CFQ file: " + path);
  std::vector<CfqExample> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const nlohmann::json j = nlohmann::json::parse(line);
    CfqExample ex;
    ex.question = j.at("question");
    ex.sparql = j.at("sparql");
    ex.split = j.value("split", "");
    if (ex.question.empty() || ex.sparql.empty())
      throw std::runtime_error("CFQ example with empty fields in " + path);
    out.push_back(std::move(ex));
  }
  return out;
}

SplitIndex read_split_index(const std::string& path) {
  const nlohmann::json j = nlohmann::json::parse(read_file(path));
  SplitIndex s;
  auto grab = [&](const char* mine, const char* theirs) {
    if (j.contains(mine)) return j.at(mine).get<std::vector<int>>();
    if (j.contains(theirs)) return j.at(theirs).get<std::vector<int>>();
    return std::vector<int>{};
  };
  s.train = grab("train", "trainIdxs");
  s.dev = grab("dev", "devIdxs");
  s.test = grab("test", "testIdxs");
  if (s.train.empty())
    throw std::runtime_error("split index has no training ids: " + path);
  return s;
}

}  // namespace lagr::cfq
