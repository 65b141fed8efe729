#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <map>
#include <random>
#include <set>

#include "lagr/cfq.hpp"
#include "lagr/synthetic.hpp"
#include "lagr/util.hpp"

using namespace lagr;
using namespace lagr::cfq;

namespace {

// Brute-force isomorphism oracle: try every node bijection.
bool brute_force_isomorphic(const MRGraph& a, const MRGraph& b) {
  if (a.nodes.size() != b.nodes.size() || a.edges.size() != b.edges.size()) return false;
  const int n = static_cast<int>(a.nodes.size());
  std::vector<int> perm(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
  auto edge_map = [](const MRGraph& g) {
    std::map<std::pair<int, int>, std::multiset<std::string>> m;
    for (const auto& e : g.edges) m[{e.src, e.dst}].insert(e.label);
    return m;
  };
  const auto edges_a = edge_map(a);
  const auto edges_b = edge_map(b);
  do {
    bool ok = true;
    for (int i = 0; i < n && ok; ++i)
      ok = a.nodes[static_cast<std::size_t>(i)].label ==
           b.nodes[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])].label;
    if (!ok) continue;
    std::map<std::pair<int, int>, std::multiset<std::string>> mapped;
    for (const auto& [key, labels] : edges_a)
      mapped[{perm[static_cast<std::size_t>(key.first)],
              perm[static_cast<std::size_t>(key.second)]}] = labels;
    if (mapped == edges_b) return true;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return false;
}

MRGraph random_graph(std::mt19937_64& eng, int max_nodes) {
  const std::vector<std::string> node_labels{"a", "b", "c"};
  const std::vector<std::string> edge_labels{"agent", "theme", "FILTER"};
  const int n = 1 + static_cast<int>(eng() % static_cast<std::uint64_t>(max_nodes));
  MRGraph g;
  for (int i = 0; i < n; ++i)
    g.nodes.push_back({i, node_labels[eng() % node_labels.size()], -1, -1});
  const int m = static_cast<int>(eng() % static_cast<std::uint64_t>(2 * n + 1));
  std::set<std::pair<int, int>> used;
  for (int i = 0; i < m; ++i) {
    const int src = static_cast<int>(eng() % static_cast<std::uint64_t>(n));
    const int dst = static_cast<int>(eng() % static_cast<std::uint64_t>(n));
    if (used.count({src, dst})) continue;
    used.insert({src, dst});
    g.edges.push_back({src, dst, edge_labels[eng() % edge_labels.size()]});
  }
  return g;
}

MRGraph shuffle_ids(const MRGraph& g, std::mt19937_64& eng) {
  const int n = static_cast<int>(g.nodes.size());
  std::vector<int> perm(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
  std::shuffle(perm.begin(), perm.end(), eng);
  MRGraph out;
  out.nodes.resize(g.nodes.size());
  for (const auto& node : g.nodes) {
    MRNode moved = node;
    moved.id = perm[static_cast<std::size_t>(node.id)];
    out.nodes[static_cast<std::size_t>(moved.id)] = moved;
  }
  for (const auto& e : g.edges)
    out.edges.push_back({perm[static_cast<std::size_t>(e.src)],
                         perm[static_cast<std::size_t>(e.dst)], e.label});
  std::shuffle(out.edges.begin(), out.edges.end(), eng);
  return out;
}

}  // namespace

TEST_CASE("parse_sparql reads the three constraint kinds") {
  SparqlQuery q = parse_sparql(
      "SELECT DISTINCT ?x0 WHERE { FILTER ( ?x0 != M0 ) . ?x0 a ns:film.actor . "
      "?x0 parent ?x1 }");
  CHECK(q.select == SparqlQuery::Select::DistinctX0);
  REQUIRE(q.filters.size() == 1);
  CHECK(q.filters[0].a == "?x0");
  CHECK(q.filters[0].b == "M0");
  REQUIRE(q.triples.size() == 2);
  CHECK(q.triples[0].one_place);
  CHECK(q.triples[0].pred == "ns:film.actor");
  CHECK_FALSE(q.triples[1].one_place);
  CHECK(q.triples[1].subjects == std::vector<std::string>{"?x0"});
  CHECK(q.triples[1].objects == std::vector<std::string>{"?x1"});
}

TEST_CASE("parse_sparql accepts bracketed entity lists and bare FILTER") {
  SparqlQuery q = parse_sparql(
      "SELECT count(*) WHERE { [M2, M3] directed_by ?x0 . FILTER ?x1 != M0 }");
  REQUIRE(q.triples.size() == 1);
  CHECK(q.triples[0].subjects == std::vector<std::string>{"M2", "M3"});
  CHECK(q.filters.size() == 1);
}

TEST_CASE("parse_sparql rejects unknown clauses with the offending span") {
  CHECK_THROWS_WITH_AS(parse_sparql("SELECT ?x1 WHERE { }"),
                       doctest::Contains("SELECT"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(
      parse_sparql("SELECT count(*) WHERE { ?x0 parent ?x1 extra junk }"),
      doctest::Contains("junk"), std::invalid_argument);
}

TEST_CASE("compress merges the paper's directed_by example exactly") {
  SparqlQuery q =
      parse_sparql("SELECT count(*) WHERE { M2 directed_by ?x0 . M3 directed_by ?x0 }");
  SparqlQuery c = compress(q);
  REQUIRE(c.triples.size() == 1);
  CHECK(format_triples(c.triples) == "[[M2, M3] directed_by ?x0]");
}

TEST_CASE("compress leaves single triples alone and is idempotent on corpora") {
  SparqlQuery q = parse_sparql("SELECT count(*) WHERE { M0 parent ?x1 }");
  SparqlQuery c = compress(q);
  CHECK(format_triples(c.triples) == "[M0 parent ?x1]");

  auto examples = synth::generate_cfq({1000, 5}, 3);
  for (const auto& ex : examples) {
    SparqlQuery once = compress(parse_sparql(ex.sparql));
    SparqlQuery twice = compress(once);
    CHECK(format_triples(once.triples) == format_triples(twice.triples));
    CHECK(once.filters.size() == twice.filters.size());
  }
}

TEST_CASE("compress merges object lists too") {
  SparqlQuery q = parse_sparql(
      "SELECT count(*) WHERE { M0 influenced M1 . M0 influenced M2 . M3 employed M1 }");
  SparqlQuery c = compress(q);
  REQUIRE(c.triples.size() == 2);
  CHECK(format_triple(c.triples[0]) == "M0 influenced [M1, M2]");
  SparqlQuery object_only = compress(q, CompressMode::ObjectOnly);
  CHECK(object_only.triples.size() == 3);
}

TEST_CASE("sparql_to_graph builds the expected node and edge structure") {
  SUBCASE("wh- query introduces the select marker") {
    SparqlQuery q = parse_sparql(
        "SELECT DISTINCT ?x0 WHERE { ?x0 parent ?x1 . ?x0 a actor . FILTER ( ?x0 != M1 ) }");
    MRGraph g = sparql_to_graph(compress(q));
    std::multiset<std::string> labels;
    for (const auto& n : g.nodes) labels.insert(n.label);
    CHECK(labels == std::multiset<std::string>{"select_?x0", "?x1", "M1", "parent", "actor"});
    // one-place: entity -> predicate; two-place: predicate -> entities
    std::map<std::string, int> by_label;
    for (const auto& n : g.nodes) by_label[n.label] = n.id;
    std::set<std::tuple<int, int, std::string>> edges;
    for (const auto& e : g.edges) edges.insert({e.src, e.dst, e.label});
    CHECK(edges.count({by_label["select_?x0"], by_label["actor"], "agent"}));
    CHECK(edges.count({by_label["parent"], by_label["select_?x0"], "agent"}));
    CHECK(edges.count({by_label["parent"], by_label["?x1"], "theme"}));
    CHECK(edges.count({by_label["M1"], by_label["select_?x0"], "FILTER"}));
  }
  SUBCASE("count query with empty WHERE gives the empty graph") {
    MRGraph g = sparql_to_graph(parse_sparql("SELECT count(*) WHERE { }"));
    CHECK(g.nodes.empty());
  }
  SUBCASE("wh- query with empty WHERE keeps only the marker") {
    MRGraph g = sparql_to_graph(parse_sparql("SELECT DISTINCT ?x0 WHERE { }"));
    REQUIRE(g.nodes.size() == 1);
    CHECK(g.nodes[0].label == "select_?x0");
  }
  SUBCASE("duplicate predicates become distinct nodes") {
    SparqlQuery q = parse_sparql(
        "SELECT count(*) WHERE { M0 influenced M1 . M2 influenced M3 }");
    MRGraph g = sparql_to_graph(compress(q));
    int influenced = 0;
    for (const auto& n : g.nodes) influenced += n.label == "influenced";
    CHECK(influenced == 2);
  }
}

TEST_CASE("the male Dutch film editor example reconstructs its constraints") {
  const std::string gold =
      "SELECT DISTINCT ?x0 WHERE { ?x0 a editor . ?x0 director M3 . "
      "?x0 gender ns:m.05zppz . ?x0 nationality ns:m.059j2 }";
  MRGraph g = sparql_to_graph(compress(parse_sparql(gold)));
  std::multiset<std::string> labels;
  for (const auto& n : g.nodes) labels.insert(n.label);
  CHECK(labels == std::multiset<std::string>{"select_?x0", "ns:m.05zppz", "ns:m.059j2",
                                             "gender", "nationality", "editor",
                                             "director", "M3"});
  CHECK(graph_to_sparql(g) == gold);
}

TEST_CASE("graph_to_sparql emits canonical empty queries and drops orphans") {
  CHECK(graph_to_sparql(MRGraph{}) == "SELECT count(*) WHERE { }");
  MRGraph g;
  g.nodes = {{0, "select_?x0", -1, -1}, {1, "director", -1, -1}};
  ReconstructStats stats;
  CHECK(graph_to_sparql(g, &stats) == "SELECT DISTINCT ?x0 WHERE { }");
  CHECK(stats.dropped_predicates == 1);
}

TEST_CASE("round trips over generated queries are isomorphic") {
  auto examples = synth::generate_cfq({1000, 5}, 17);
  int failures = 0;
  for (const auto& ex : examples) {
    const SparqlQuery q = compress(parse_sparql(ex.sparql));
    const MRGraph g = sparql_to_graph(q);
    const std::string text = graph_to_sparql(g);
    const MRGraph g2 = sparql_to_graph(compress(parse_sparql(text)));
    failures += graph_isomorphic(g, g2) ? 0 : 1;
  }
  CHECK(failures == 0);
}

TEST_CASE("constraint order does not change the graph") {
  const MRGraph a = sparql_to_graph(compress(parse_sparql(
      "SELECT count(*) WHERE { M0 parent M1 . M2 a actor . FILTER ( M0 != M2 ) }")));
  const MRGraph b = sparql_to_graph(compress(parse_sparql(
      "SELECT count(*) WHERE { FILTER ( M0 != M2 ) . M2 a actor . M0 parent M1 }")));
  CHECK(graph_isomorphic(a, b));
}

TEST_CASE("graph_isomorphic basics") {
  std::mt19937_64 eng(5);
  SUBCASE("a graph is isomorphic to a node-id shuffle of itself") {
    for (int trial = 0; trial < 50; ++trial) {
      MRGraph g = random_graph(eng, 8);
      MRGraph h = shuffle_ids(g, eng);
      CHECK(graph_isomorphic(g, h));
      CHECK(graph_isomorphic(h, g));
    }
  }
  SUBCASE("flipping one edge label breaks isomorphism") {
    MRGraph g;
    g.nodes = {{0, "p", -1, -1}, {1, "q", -1, -1}};
    g.edges = {{0, 1, "agent"}};
    MRGraph h = g;
    h.edges[0].label = "theme";
    CHECK_FALSE(graph_isomorphic(g, h));
  }
  SUBCASE("isomorphism is reflexive and symmetric on random graphs") {
    for (int trial = 0; trial < 30; ++trial) {
      MRGraph g = random_graph(eng, 6);
      MRGraph h = random_graph(eng, 6);
      CHECK(graph_isomorphic(g, g));
      CHECK(graph_isomorphic(g, h) == graph_isomorphic(h, g));
    }
  }
}

TEST_CASE("graph_isomorphic agrees with the brute-force oracle") {
  std::mt19937_64 eng(23);
  int disagreements = 0;
  for (int trial = 0; trial < 400; ++trial) {
    MRGraph a = random_graph(eng, 8);
    MRGraph b = (trial % 2 == 0) ? shuffle_ids(a, eng) : random_graph(eng, 8);
    const bool fast = graph_isomorphic(a, b);
    const bool slow = brute_force_isomorphic(a, b);
    disagreements += fast != slow;
  }
  CHECK(disagreements == 0);
}

TEST_CASE("cfq jsonl and split index files round trip") {
  auto examples = synth::generate_cfq({20, 4}, 29);
  synth::write_cfq_jsonl(examples, "cfq_read_test.jsonl");
  auto back = read_cfq_jsonl("cfq_read_test.jsonl");
  REQUIRE(back.size() == examples.size());
  CHECK(back[3].sparql == examples[3].sparql);
  synth::write_split_index({0, 1, 2}, {3}, {4, 5}, "cfq_split_test.json");
  SplitIndex idx = read_split_index("cfq_split_test.json");
  CHECK(idx.train == std::vector<int>{0, 1, 2});
  CHECK(idx.dev == std::vector<int>{3});
  CHECK(idx.test == std::vector<int>{4, 5});
  std::remove("cfq_read_test.jsonl");
  std::remove("cfq_split_test.json");
}

TEST_CASE("pad_to_slots then strip recovers an isomorphic graph") {
  auto examples = synth::generate_cfq({50, 5}, 31);
  for (const auto& ex : examples) {
    MRGraph g = sparql_to_graph(compress(parse_sparql(ex.sparql)));
    std::set<std::string> node_labels, edge_labels;
    for (const auto& n : g.nodes) node_labels.insert(n.label);
    for (const auto& e : g.edges) edge_labels.insert(e.label);
    LabelVocab nodes = LabelVocab::build({node_labels.begin(), node_labels.end()});
    LabelVocab edges = LabelVocab::build({edge_labels.begin(), edge_labels.end()});
    const int n_tokens = static_cast<int>(split_ws(ex.question).size());
    UnalignedTarget target = pad_to_slots(g, n_tokens, 2, nodes, edges);
    MRGraph back = strip_nulls(target_as_aligned(target), nodes, edges);
    CHECK(graph_isomorphic(g, back));
  }
}
