#include "lagr/optim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace lagr {

float LrSchedule::at(int step) const {
  if (total <= 0) throw std::invalid_argument("lr schedule: total steps must be positive");
  if (step <= 0) return warmup > 0 ? 0.0f : peak;
  if (step < warmup) return peak * static_cast<float>(step) / static_cast<float>(warmup);
  if (step >= total) return 0.0f;
  const float span = static_cast<float>(std::max(1, total - warmup));
  return peak * static_cast<float>(total - step) / span;
}

Adam::Adam(std::vector<Tensor> params, AdamConfig cfg, LrSchedule schedule)
    : params_(std::move(params)), cfg_(cfg), schedule_(schedule) {
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (const Tensor& p : params_) {
    m_.emplace_back(p.values().size(), 0.0f);
    v_.emplace_back(p.values().size(), 0.0f);
  }
}

bool Adam::step() { return step_at(step_count_ + 1); }

bool Adam::step_at(int schedule_step) {
  for (Tensor& p : params_) {
    if (!p.has_grad()) continue;
    for (float g : p.grad())
      if (!std::isfinite(g)) {
        ++rejected_;
        return false;
      }
  }
  ++step_count_;
  const float lr = schedule_.at(schedule_step);
  const float bc1 = 1.0f - std::pow(cfg_.beta1, static_cast<float>(step_count_));
  const float bc2 = 1.0f - std::pow(cfg_.beta2, static_cast<float>(step_count_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Tensor& p = params_[i];
    if (!p.has_grad()) continue;
    auto& data = p.values();
    const auto& g = p.grad();
    auto& m = m_[i];
    auto& v = v_[i];
    for (std::size_t j = 0; j < data.size(); ++j) {
      m[j] = cfg_.beta1 * m[j] + (1.0f - cfg_.beta1) * g[j];
      v[j] = cfg_.beta2 * v[j] + (1.0f - cfg_.beta2) * g[j] * g[j];
      const float mhat = m[j] / bc1;
      const float vhat = v[j] / bc2;
      data[j] -= lr * mhat / (std::sqrt(vhat) + cfg_.eps);
    }
  }
  return true;
}

void Adam::zero_grad() {
  for (Tensor& p : params_) p.zero_grad();
}

float global_grad_norm(const std::vector<Tensor>& params) {
  double total = 0.0;
  for (const Tensor& p : params) {
    if (!p.has_grad()) continue;
    for (float g : p.grad()) total += static_cast<double>(g) * g;
  }
  return static_cast<float>(std::sqrt(total));
}

float clip_gradients(std::vector<Tensor>& params, float max_norm) {
  if (max_norm <= 0.0f) throw std::invalid_argument("clip_gradients: max_norm must be positive");
  const float norm = global_grad_norm(params);
  if (norm > max_norm && norm > 0.0f) {
    const float scale = max_norm / norm;
    for (Tensor& p : params) {
      if (!p.has_grad()) continue;
      for (float& g : p.grad()) g *= scale;
    }
  }
  return norm;
}

}  // namespace lagr
