#pragma once

#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

namespace lagr {

// Label vocabulary with a distinguished null label at id 0.
class LabelVocab {
 public:
  static constexpr int kNull = 0;
  static const std::string& null_label();

  LabelVocab();
  // null + sorted unique labels; `labels` must not contain the null label.
  static LabelVocab build(std::vector<std::string> labels);

  int id(const std::string& label) const;  // throws when absent
  std::optional<int> find(const std::string& label) const;
  const std::string& label(int id) const;
  int size() const { return static_cast<int>(labels_.size()); }

  void save(const std::string& path) const;
  static LabelVocab load(const std::string& path);
  const std::vector<std::string>& labels() const { return labels_; }

 private:
  std::vector<std::string> labels_;
  std::unordered_map<std::string, int> ids_;
};

// Complete multi-layer graph aligned column-wise with the input tokens:
// node label ids z (length M = N*L) and edge label ids xi (M x M).
struct AlignedGraph {
  int N = 0;
  int L = 1;
  std::vector<int> z;
  std::vector<int> xi;

  AlignedGraph() = default;
  AlignedGraph(int n, int layers);

  int M() const { return N * L; }
  int& edge(int j, int k) { return xi[static_cast<std::size_t>(j) * M() + k]; }
  int edge(int j, int k) const { return xi[static_cast<std::size_t>(j) * M() + k]; }

  bool operator==(const AlignedGraph&) const = default;
};

// 1-based slot index: j = (l-1)*N + i for layer l and position i.
int slot_index(int layer, int position, int N, int L);
// 0-based variant used internally: slot = l*N + i.
inline int slot0(int layer0, int pos0, int N) { return layer0 * N + pos0; }

struct MRNode {
  int id = 0;
  std::string label;
  int layer = -1;  // provenance when derived from an aligned graph
  int pos = -1;
};

struct MREdge {
  int src = 0;
  int dst = 0;
  std::string label;
};

// Unaligned labeled graph: the final meaning representation.
struct MRGraph {
  std::vector<MRNode> nodes;
  std::vector<MREdge> edges;
};

// Null-padded slot-level target (the unaligned graph the weakly-supervised
// trainer matches against).
struct UnalignedTarget {
  int N = 0;
  int L = 1;
  std::vector<int> s;
  std::vector<int> e;

  int M() const { return N * L; }
  int edge(int j, int k) const { return e[static_cast<std::size_t>(j) * M() + k]; }

  bool operator==(const UnalignedTarget&) const = default;
};

struct StripStats {
  int dangling_edges = 0;  // non-null edges incident to a null node, dropped
};

// Removes null nodes and null/dangling edges; keeps (layer, pos) provenance.
MRGraph strip_nulls(const AlignedGraph& g, const LabelVocab& node_vocab,
                    const LabelVocab& edge_vocab, StripStats* stats = nullptr);

// Lays the MR graph out over the first slots in canonical order (label
// lexicographic, then original node order); everything else is null.
// `slot_of_node`, when given, receives the slot index per node id.
UnalignedTarget pad_to_slots(const MRGraph& g, int n_tokens, int layers,
                             const LabelVocab& node_vocab, const LabelVocab& edge_vocab,
                             std::vector<int>* slot_of_node = nullptr);

// Applies a column permutation: column a[j] of `g` becomes column j of the
// result. Test/synthetic-data machinery.
UnalignedTarget permute_columns(const AlignedGraph& g, const std::vector<int>& a);

// Interprets target slots as an aligned graph (identity alignment).
AlignedGraph target_as_aligned(const UnalignedTarget& t);

// Aligned graph induced by alignment `a` over the target: slot a[j] takes
// target label j.
AlignedGraph apply_alignment(const UnalignedTarget& target, const std::vector<int>& a);

bool is_permutation(const std::vector<int>& a);

nlohmann::json mr_graph_to_json(const MRGraph& g);
MRGraph mr_graph_from_json(const nlohmann::json& j);

}  // namespace lagr
