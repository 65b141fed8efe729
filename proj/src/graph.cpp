#include "lagr/graph.hpp"

#include <algorithm>
#include <fstream>
#include <stdexcept>

#include "lagr/util.hpp"

namespace lagr {

const std::string& LabelVocab::null_label() {
  static const std::string null = "null";
  return null;
}

LabelVocab::LabelVocab() {
  labels_.push_back(null_label());
  ids_.emplace(null_label(), kNull);
}

LabelVocab LabelVocab::build(std::vector<std::string> labels) {
  std::sort(labels.begin(), labels.end());
  labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
  LabelVocab v;
  for (auto& l : labels) {
    if (l == null_label())
      throw std::invalid_argument("label vocab: explicit null label in input");
    const int id = v.size();
    v.labels_.push_back(l);
    v.ids_.emplace(std::move(l), id);
  }
  return v;
}

int LabelVocab::id(const std::string& label) const {
  auto it = ids_.find(label);
  if (it == ids_.end())
    throw std::out_of_range("label vocab: unknown label '" + label + "'");
  return it->second;
}

std::optional<int> LabelVocab::find(const std::string& label) const {
  auto it = ids_.find(label);
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

const std::string& LabelVocab::label(int id) const {
  if (id < 0 || id >= size())
    throw std::out_of_range("label vocab: id " + std::to_string(id) + " outside " +
                            std::to_string(size()) + " entries");
  return labels_[static_cast<std::size_t>(id)];
}

void LabelVocab::save(const std::string& path) const {
  std::string out;
  for (const auto& l : labels_) {
    out += l;
    out += '\n';
  }
  write_file(path, out);
}

LabelVocab LabelVocab::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open label vocab: " + path);
  LabelVocab v;
  v.labels_.clear();
  v.ids_.clear();
  std::string line;
  int id = 0;
  while (std::getline(in, line)) {
    v.labels_.push_back(line);
    v.ids_.emplace(line, id++);
  }
  if (v.size() == 0 || v.labels_[0] != null_label())
    throw std::runtime_error("label vocab must start with the null label: " + path);
  return v;
}

AlignedGraph::AlignedGraph(int n, int layers) : N(n), L(layers) {
  if (n <= 0 || layers <= 0)
    throw std::invalid_argument("aligned graph: N and L must be positive");
  z.assign(static_cast<std::size_t>(M()), LabelVocab::kNull);
  xi.assign(static_cast<std::size_t>(M()) * M(), LabelVocab::kNull);
}

int slot_index(int layer, int position, int N, int L) {
  if (layer < 1 || layer > L || position < 1 || position > N)
    throw std::out_of_range("slot_index: (l=" + std::to_string(layer) +
                            ",i=" + std::to_string(position) + ") outside N=" +
                            std::to_string(N) + ", L=" + std::to_string(L));
  return (layer - 1) * N + position;
}

MRGraph strip_nulls(const AlignedGraph& g, const LabelVocab& node_vocab,
                    const LabelVocab& edge_vocab, StripStats* stats) {
  MRGraph out;
  const int M = g.M();
  std::vector<int> slot_to_node(static_cast<std::size_t>(M), -1);
  for (int j = 0; j < M; ++j) {
    if (g.z[static_cast<std::size_t>(j)] == LabelVocab::kNull) continue;
    MRNode node;
    node.id = static_cast<int>(out.nodes.size());
    node.label = node_vocab.label(g.z[static_cast<std::size_t>(j)]);
    node.layer = j / g.N;
    node.pos = j % g.N;
    slot_to_node[static_cast<std::size_t>(j)] = node.id;
    out.nodes.push_back(std::move(node));
  }
  for (int j = 0; j < M; ++j)
    for (int k = 0; k < M; ++k) {
      const int label = g.edge(j, k);
      if (label == LabelVocab::kNull) continue;
      const int src = slot_to_node[static_cast<std::size_t>(j)];
      const int dst = slot_to_node[static_cast<std::size_t>(k)];
      if (src < 0 || dst < 0) {
        if (stats) ++stats->dangling_edges;
        continue;
      }
      out.edges.push_back({src, dst, edge_vocab.label(label)});
    }
  return out;
}

UnalignedTarget pad_to_slots(const MRGraph& g, int n_tokens, int layers,
                             const LabelVocab& node_vocab, const LabelVocab& edge_vocab,
                             std::vector<int>* slot_of_node) {
  const int M = n_tokens * layers;
  if (static_cast<int>(g.nodes.size()) > M)
    throw std::invalid_argument("pad_to_slots: " + std::to_string(g.nodes.size()) +
                                " nodes exceed " + std::to_string(M) + " slots (N=" +
                                std::to_string(n_tokens) + ", L=" + std::to_string(layers) +
                                "); increase the layer count");
  // Canonical slot order: label lexicographic, ties by original node order.
  std::vector<int> order(g.nodes.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return g.nodes[static_cast<std::size_t>(a)].label <
           g.nodes[static_cast<std::size_t>(b)].label;
  });

  UnalignedTarget t;
  t.N = n_tokens;
  t.L = layers;
  t.s.assign(static_cast<std::size_t>(M), LabelVocab::kNull);
  t.e.assign(static_cast<std::size_t>(M) * M, LabelVocab::kNull);

  std::vector<int> node_to_slot(g.nodes.size());
  for (std::size_t slot = 0; slot < order.size(); ++slot) {
    const MRNode& node = g.nodes[static_cast<std::size_t>(order[slot])];
    t.s[slot] = node_vocab.id(node.label);
    node_to_slot[static_cast<std::size_t>(node.id)] = static_cast<int>(slot);
  }
  for (const MREdge& edge : g.edges) {
    const int j = node_to_slot.at(static_cast<std::size_t>(edge.src));
    const int k = node_to_slot.at(static_cast<std::size_t>(edge.dst));
    int& cell = t.e[static_cast<std::size_t>(j) * M + k];
    const int label = edge_vocab.id(edge.label);
    if (cell != LabelVocab::kNull && cell != label)
      throw std::invalid_argument("pad_to_slots: two labels for one ordered node pair");
    cell = label;
  }
  if (slot_of_node) *slot_of_node = node_to_slot;
  return t;
}

bool is_permutation(const std::vector<int>& a) {
  std::vector<char> seen(a.size(), 0);
  for (int v : a) {
    if (v < 0 || v >= static_cast<int>(a.size()) || seen[static_cast<std::size_t>(v)])
      return false;
    seen[static_cast<std::size_t>(v)] = 1;
  }
  return true;
}

UnalignedTarget permute_columns(const AlignedGraph& g, const std::vector<int>& a) {
  if (static_cast<int>(a.size()) != g.N || !is_permutation(a))
    throw std::invalid_argument("permute_columns: not a permutation of " +
                                std::to_string(g.N) + " columns");
  UnalignedTarget t;
  t.N = g.N;
  t.L = g.L;
  const int M = g.M();
  t.s.assign(static_cast<std::size_t>(M), LabelVocab::kNull);
  t.e.assign(static_cast<std::size_t>(M) * M, LabelVocab::kNull);
  auto src_slot = [&](int slot) {
    const int layer = slot / g.N;
    const int col = slot % g.N;
    return slot0(layer, a[static_cast<std::size_t>(col)], g.N);
  };
  for (int j = 0; j < M; ++j) t.s[static_cast<std::size_t>(j)] = g.z[static_cast<std::size_t>(src_slot(j))];
  for (int j = 0; j < M; ++j)
    for (int k = 0; k < M; ++k)
      t.e[static_cast<std::size_t>(j) * M + k] = g.edge(src_slot(j), src_slot(k));
  return t;
}

AlignedGraph target_as_aligned(const UnalignedTarget& t) {
  AlignedGraph g(t.N, t.L);
  g.z = t.s;
  g.xi = t.e;
  return g;
}

AlignedGraph apply_alignment(const UnalignedTarget& target, const std::vector<int>& a) {
  const int M = target.M();
  if (static_cast<int>(a.size()) != M || !is_permutation(a))
    throw std::invalid_argument("apply_alignment: not a permutation of " +
                                std::to_string(M) + " slots");
  AlignedGraph g(target.N, target.L);
  for (int j = 0; j < M; ++j) g.z[static_cast<std::size_t>(a[static_cast<std::size_t>(j)])] = target.s[static_cast<std::size_t>(j)];
  for (int j = 0; j < M; ++j)
    for (int k = 0; k < M; ++k)
      g.edge(a[static_cast<std::size_t>(j)], a[static_cast<std::size_t>(k)]) = target.edge(j, k);
  return g;
}

nlohmann::json mr_graph_to_json(const MRGraph& g) {
  nlohmann::json j;
  j["nodes"] = nlohmann::json::array();
  for (const MRNode& n : g.nodes) {
    nlohmann::json node{{"id", n.id}, {"label", n.label}};
    if (n.layer >= 0) node["layer"] = n.layer;
    if (n.pos >= 0) node["pos"] = n.pos;
    j["nodes"].push_back(node);
  }
  j["edges"] = nlohmann::json::array();
  for (const MREdge& e : g.edges)
    j["edges"].push_back({{"src", e.src}, {"dst", e.dst}, {"label", e.label}});
  return j;
}

MRGraph mr_graph_from_json(const nlohmann::json& j) {
  MRGraph g;
  for (const auto& node : j.at("nodes")) {
    MRNode n;
    n.id = node.at("id");
    n.label = node.at("label");
    n.layer = node.value("layer", -1);
    n.pos = node.value("pos", -1);
    g.nodes.push_back(std::move(n));
  }
  for (const auto& edge : j.at("edges"))
    g.edges.push_back({edge.at("src"), edge.at("dst"), edge.at("label")});
  return g;
}

}  // namespace lagr
