#include "lagr/model.hpp"

#include <stdexcept>

namespace lagr {

LagrModel::LagrModel(const EncoderConfig& enc_cfg, int token_vocab, int node_labels,
                     int edge_labels, int graph_layers, Rng& init_rng)
    : enc_cfg_(enc_cfg),
      node_labels_(node_labels),
      edge_labels_(edge_labels),
      graph_layers_(graph_layers) {
  encoders_.push_back(std::make_unique<TransformerEncoder>(enc_cfg, token_vocab, init_rng));
  if (enc_cfg.mode == EncoderMode::Separate)
    encoders_.push_back(std::make_unique<TransformerEncoder>(enc_cfg, token_vocab, init_rng));
  node_head_ = std::make_unique<NodeHead>(enc_cfg.d, node_labels, graph_layers, init_rng);
  edge_head_ = std::make_unique<EdgeHead>(enc_cfg.d, edge_labels, graph_layers, init_rng);
}

LagrModel::Output LagrModel::forward(const std::vector<int>& ids, bool train,
                                     Rng* dropout_rng) const {
  Tensor h_syn = encoders_.front()->encode(ids, train, dropout_rng);
  Tensor h_sem =
      encoders_.size() == 1 ? h_syn : encoders_.back()->encode(ids, train, dropout_rng);
  Output out;
  out.node_log_probs = log_softmax(node_head_->logits(h_syn));
  out.edge_log_probs = log_softmax(edge_head_->logits(h_sem));
  return out;
}

Tensor LagrModel::supervised_loss(const Output& out, const AlignedGraph& target) const {
  const int m = out.node_log_probs.dim(0);
  if (target.M() != m)
    throw std::invalid_argument("supervised_loss: target has " +
                                std::to_string(target.M()) + " slots, model produced " +
                                std::to_string(m));
  Tensor node_ll = sum(gather_rows(out.node_log_probs, target.z));
  Tensor edge_flat = reshape(out.edge_log_probs, {m * m, edge_labels_});
  Tensor edge_ll = sum(gather_rows(edge_flat, target.xi));
  return neg(add(node_ll, edge_ll));
}

namespace {

int argmax_row(const float* row, int n) {
  int best = 0;
  for (int i = 1; i < n; ++i)
    if (row[i] > row[best]) best = i;
  return best;
}

}  // namespace

AlignedGraph LagrModel::decode_argmax(const Output& out, int n_tokens) const {
  AlignedGraph g(n_tokens, graph_layers_);
  const int m = g.M();
  const auto& nlp = out.node_log_probs.values();
  for (int j = 0; j < m; ++j)
    g.z[static_cast<std::size_t>(j)] =
        argmax_row(nlp.data() + static_cast<std::size_t>(j) * node_labels_, node_labels_);
  const auto& elp = out.edge_log_probs.values();
  for (int j = 0; j < m; ++j)
    for (int k = 0; k < m; ++k)
      g.edge(j, k) = argmax_row(
          elp.data() + (static_cast<std::size_t>(j) * m + k) * edge_labels_, edge_labels_);
  return g;
}

AlignedGraph LagrModel::decode(const std::vector<int>& ids) const {
  return decode_argmax(forward(ids, /*train=*/false), static_cast<int>(ids.size()));
}

std::vector<NamedParam> LagrModel::named_params() {
  std::vector<NamedParam> out;
  if (encoders_.size() == 1) {
    encoders_[0]->collect_params("encoder", out);
  } else {
    encoders_[0]->collect_params("encoder_syn", out);
    encoders_[1]->collect_params("encoder_sem", out);
  }
  node_head_->collect_params("node_head", out);
  edge_head_->collect_params("edge_head", out);
  return out;
}

std::vector<Tensor> LagrModel::params() {
  std::vector<Tensor> out;
  for (NamedParam& p : named_params()) out.push_back(p.tensor);
  return out;
}

}  // namespace lagr
