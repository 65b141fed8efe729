#include "lagr/heads.hpp"

#include <stdexcept>

namespace lagr {

NodeHead::NodeHead(int d, int n_labels, int layers, Rng& init_rng)
    : layers_(layers), n_labels_(n_labels) {
  if (d <= 0 || n_labels <= 0 || layers <= 0)
    throw std::invalid_argument("node head: sizes must be positive");
  for (int l = 0; l < layers; ++l) {
    w_.push_back(he_init({d, n_labels}, d, init_rng));
    b_.push_back(Tensor::zeros({n_labels}, true));
  }
}

Tensor NodeHead::logits(const Tensor& h) const {
  std::vector<Tensor> per_layer;
  per_layer.reserve(w_.size());
  for (std::size_t l = 0; l < w_.size(); ++l)
    per_layer.push_back(add_bias(matmul(h, w_[l]), b_[l]));
  return per_layer.size() == 1 ? per_layer[0] : concat(per_layer, 0);
}

void NodeHead::collect_params(const std::string& prefix, std::vector<NamedParam>& out) {
  for (std::size_t l = 0; l < w_.size(); ++l) {
    out.push_back({prefix + ".w" + std::to_string(l), w_[l]});
    out.push_back({prefix + ".b" + std::to_string(l), b_[l]});
  }
}

EdgeHead::EdgeHead(int d, int n_labels, int layers, Rng& init_rng)
    : layers_(layers), n_labels_(n_labels), d_e_(d / n_labels) {
  if (d <= 0 || n_labels <= 0 || layers <= 0)
    throw std::invalid_argument("edge head: sizes must be positive");
  if (d_e_ < 1)
    throw std::invalid_argument("edge head: " + std::to_string(n_labels) +
                                " edge labels exceed model width " + std::to_string(d) +
                                " (d/|V_e| < 1)");
  for (int a = 0; a < n_labels; ++a)
    for (int l = 0; l < layers; ++l) {
      u_.push_back(he_init({d, d_e_}, d, init_rng));
      u_b_.push_back(Tensor::zeros({d_e_}, true));
      v_.push_back(he_init({d, d_e_}, d, init_rng));
      v_b_.push_back(Tensor::zeros({d_e_}, true));
    }
}

Tensor EdgeHead::logits(const Tensor& h) const {
  std::vector<Tensor> per_label;
  per_label.reserve(static_cast<std::size_t>(n_labels_));
  for (int a = 0; a < n_labels_; ++a) {
    std::vector<Tensor> q_parts, k_parts;
    for (int l = 0; l < layers_; ++l) {
      const std::size_t i = static_cast<std::size_t>(a * layers_ + l);
      q_parts.push_back(add_bias(matmul(h, u_[i]), u_b_[i]));
      k_parts.push_back(add_bias(matmul(h, v_[i]), v_b_[i]));
    }
    Tensor hq = q_parts.size() == 1 ? q_parts[0] : concat(q_parts, 0);  // (M, d_e)
    Tensor hk = k_parts.size() == 1 ? k_parts[0] : concat(k_parts, 0);
    per_label.push_back(matmul(hq, transpose(hk)));  // (M, M), no scaling factor
  }
  return stack(per_label, 2);  // (M, M, n_labels)
}

void EdgeHead::collect_params(const std::string& prefix, std::vector<NamedParam>& out) {
  for (int a = 0; a < n_labels_; ++a)
    for (int l = 0; l < layers_; ++l) {
      const std::size_t i = static_cast<std::size_t>(a * layers_ + l);
      const std::string p =
          prefix + ".label" + std::to_string(a) + ".layer" + std::to_string(l);
      out.push_back({p + ".u", u_[i]});
      out.push_back({p + ".u_b", u_b_[i]});
      out.push_back({p + ".v", v_[i]});
      out.push_back({p + ".v_b", v_b_[i]});
    }
}

}  // namespace lagr
