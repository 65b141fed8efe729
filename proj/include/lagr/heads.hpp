#pragma once

#include <string>
#include <vector>

#include "lagr/checkpoint.hpp"
#include "lagr/tensor.hpp"

namespace lagr {

// Per-layer linear maps H W^l + b^l, concatenated along the node axis into
// logits for all M = N*L slots.
class NodeHead {
 public:
  NodeHead(int d, int n_labels, int layers, Rng& init_rng);

  Tensor logits(const Tensor& h) const;  // (N,d) -> (M, n_labels)

  void collect_params(const std::string& prefix, std::vector<NamedParam>& out);
  int layers() const { return layers_; }
  int n_labels() const { return n_labels_; }

 private:
  int layers_;
  int n_labels_;
  std::vector<Tensor> w_, b_;
};

// Per-label, per-layer query/key projections. The score for edge (j,k)
// under label a is the dot product of query row j with key row k; the
// softmax runs across edge labels, not positions.
class EdgeHead {
 public:
  EdgeHead(int d, int n_labels, int layers, Rng& init_rng);

  Tensor logits(const Tensor& h) const;  // (N,d) -> (M, M, n_labels)

  void collect_params(const std::string& prefix, std::vector<NamedParam>& out);
  int edge_dim() const { return d_e_; }
  int n_labels() const { return n_labels_; }

 private:
  int layers_;
  int n_labels_;
  int d_e_;
  // indexed [label * layers + layer]
  std::vector<Tensor> u_, u_b_, v_, v_b_;
};

}  // namespace lagr
