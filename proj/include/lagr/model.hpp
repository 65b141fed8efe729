#pragma once

#include <memory>
#include <string>
#include <vector>

#include "lagr/encoder.hpp"
#include "lagr/graph.hpp"
#include "lagr/heads.hpp"
#include "lagr/tensor.hpp"

namespace lagr {

// Full LAGr model: one shared encoder, or separate encoders for node
// ("syntax") and edge ("semantics") prediction, plus the two labeling heads.
class LagrModel {
 public:
  LagrModel(const EncoderConfig& enc_cfg, int token_vocab, int node_labels,
            int edge_labels, int graph_layers, Rng& init_rng);

  struct Output {
    Tensor node_log_probs;  // (M, |V_n|)
    Tensor edge_log_probs;  // (M, M, |V_e|)
  };

  Output forward(const std::vector<int>& ids, bool train, Rng* dropout_rng = nullptr) const;

  // -[sum_j log pi_{j,z*_j} + sum_{jk} log rho_{jk,xi*_jk}]
  Tensor supervised_loss(const Output& out, const AlignedGraph& target) const;

  // Row-wise argmax over both heads; ties break toward the lowest label id.
  AlignedGraph decode_argmax(const Output& out, int n_tokens) const;
  AlignedGraph decode(const std::vector<int>& ids) const;

  std::vector<NamedParam> named_params();
  std::vector<Tensor> params();

  int graph_layers() const { return graph_layers_; }
  int node_labels() const { return node_labels_; }
  int edge_labels() const { return edge_labels_; }
  const EncoderConfig& encoder_config() const { return enc_cfg_; }
  TransformerEncoder& node_encoder() { return *encoders_.front(); }
  TransformerEncoder& edge_encoder() { return *encoders_.back(); }

 private:
  EncoderConfig enc_cfg_;
  int node_labels_;
  int edge_labels_;
  int graph_layers_;
  // One entry when shared, two (node, edge) when separate.
  std::vector<std::unique_ptr<TransformerEncoder>> encoders_;
  std::unique_ptr<NodeHead> node_head_;
  std::unique_ptr<EdgeHead> edge_head_;
};

}  // namespace lagr
