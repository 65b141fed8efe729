#pragma once

#include <string>
#include <vector>

#include "lagr/tensor.hpp"

namespace lagr {

// Linear warmup to `peak` over `warmup` steps, then linear decay to 0 at
// `total` steps. warmup == 0 means decay starts immediately from peak.
struct LrSchedule {
  float peak = 1e-3f;
  int warmup = 0;
  int total = 1;

  float at(int step) const;
};

struct AdamConfig {
  float beta1 = 0.9f;
  float beta2 = 0.999f;
  float eps = 1e-8f;
};

// Adam over a fixed parameter list. Moment buffers are keyed by position,
// so the parameter list must not change between steps.
class Adam {
 public:
  Adam(std::vector<Tensor> params, AdamConfig cfg, LrSchedule schedule);

  // Applies one update using grads already accumulated on the parameters.
  // A non-finite gradient rejects the whole step (no state is touched) and
  // returns false.
  bool step();
  bool step_at(int schedule_step);

  void zero_grad();
  int steps_taken() const { return step_count_; }
  int steps_rejected() const { return rejected_; }
  const LrSchedule& schedule() const { return schedule_; }

 private:
  std::vector<Tensor> params_;
  std::vector<std::vector<float>> m_, v_;
  AdamConfig cfg_;
  LrSchedule schedule_;
  int step_count_ = 0;
  int rejected_ = 0;
};

// Global-norm gradient clipping across the parameter list. Returns the
// pre-clip norm.
float global_grad_norm(const std::vector<Tensor>& params);
float clip_gradients(std::vector<Tensor>& params, float max_norm);

}  // namespace lagr
