#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "lagr/graph.hpp"
#include "lagr/model.hpp"
#include "lagr/optim.hpp"
#include "lagr/tensor.hpp"

namespace lagr {

struct AlignmentConfig {
  int K = 1;
  float sigma = 0.0f;
  bool cache_enabled = false;
  // When set, candidate 1 is drawn with zero noise even if sigma > 0.
  bool first_noiseless = false;

  void validate() const;
};

struct Alignment {
  std::vector<int> a;  // unaligned slot j -> aligned slot a[j]
  double score = 0.0;  // joint log-likelihood J
};

// Minimum-cost assignment on a square cost matrix (rows are unaligned
// slots, columns aligned slots). O(n^3); rejects non-finite input.
std::vector<int> hungarian(const std::vector<double>& cost, int n);
double assignment_cost(const std::vector<double>& cost, int n, const std::vector<int>& a);

// K candidates from noisy matching problems:
//   cost[j][i] = -log p(z_i = s_j | x) + eps_ji,   eps ~ N(0, sigma).
std::vector<std::vector<int>> candidate_alignments(const Tensor& node_log_probs,
                                                   const UnalignedTarget& target,
                                                   const AlignmentConfig& cfg, Rng& rng);

// Exact joint log-likelihood of the target under alignment `a`, including
// null slots and null edges.
double score_alignment(const std::vector<int>& a, const UnalignedTarget& target,
                       const Tensor& node_log_probs, const Tensor& edge_log_probs);

// Per-example cache of the previously selected alignment (the K+1st
// candidate).
class AlignmentCache {
 public:
  std::optional<std::vector<int>> get(std::int64_t example_id, int m) const;
  void put(std::int64_t example_id, std::vector<int> a);
  std::size_t size() const { return entries_.size(); }

  nlohmann::json to_json() const;
  static AlignmentCache from_json(const nlohmann::json& j);

 private:
  std::unordered_map<std::int64_t, std::vector<int>> entries_;
};

struct MapSelection {
  Alignment alignment;
  int candidate_index = 0;  // K == cached candidate
  bool from_cache = false;
};

// Argmax-J over candidates plus the optional cached alignment; ties break
// toward the earliest candidate. Updates the cache with the winner when one
// is supplied.
MapSelection select_map_alignment(const std::vector<std::vector<int>>& candidates,
                                  const std::optional<std::vector<int>>& cached,
                                  const UnalignedTarget& target,
                                  const Tensor& node_log_probs,
                                  const Tensor& edge_log_probs,
                                  AlignmentCache* cache = nullptr,
                                  std::int64_t example_id = -1);

// Two alignments are equivalent when they induce the same aligned graph
// (they may differ on null-slot placement).
bool alignments_equivalent(const std::vector<int>& a, const std::vector<int>& b,
                           const UnalignedTarget& target);

struct WeakStepInfo {
  Alignment selected;
  bool changed_from_cache = false;  // vs. the previous selection, if any
  bool had_cache = false;
};

// Loss for one weakly-supervised example: -J of the MAP candidate, built so
// gradient flows through the log-probabilities only (hard EM).
Tensor weak_example_loss(const LagrModel& model, const LagrModel::Output& out,
                         const UnalignedTarget& target, const AlignmentConfig& cfg,
                         Rng& noise_rng, AlignmentCache* cache, std::int64_t example_id,
                         WeakStepInfo* info = nullptr);

// One full Algorithm-1 step on a single example: forward, candidate
// generation, MAP selection, backward, clipped Adam update. Returns the
// loss value; degenerate examples (no slots) are skipped with a warning
// counter.
struct WeakTrainStats {
  int skipped_degenerate = 0;
};

float weak_train_step(LagrModel& model, const std::vector<int>& token_ids,
                      const UnalignedTarget& target, const AlignmentConfig& cfg,
                      Adam& optimizer, float max_grad_norm, Rng& noise_rng,
                      Rng* dropout_rng, AlignmentCache* cache, std::int64_t example_id,
                      WeakTrainStats* stats = nullptr, WeakStepInfo* info = nullptr);

}  // namespace lagr
