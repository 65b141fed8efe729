#include "lagr/alignment.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace lagr {

void AlignmentConfig::validate() const {
  if (K < 1) throw std::invalid_argument("alignment config: K must be >= 1");
  if (sigma < 0.0f) throw std::invalid_argument("alignment config: sigma must be >= 0");
}

std::vector<int> hungarian(const std::vector<double>& cost, int n) {
  if (n <= 0 || static_cast<int>(cost.size()) != n * n)
    throw std::invalid_argument("hungarian: cost matrix is not square (" +
                                std::to_string(cost.size()) + " entries for n=" +
                                std::to_string(n) + ")");
  for (double c : cost)
    if (!std::isfinite(c))
      throw std::invalid_argument("hungarian: non-finite cost entry");

  // Potential-based O(n^3) assignment; 1-based arrays with column 0 as the
  // virtual start.
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(static_cast<std::size_t>(n) + 1, 0.0);
  std::vector<double> v(static_cast<std::size_t>(n) + 1, 0.0);
  std::vector<int> p(static_cast<std::size_t>(n) + 1, 0);
  std::vector<int> way(static_cast<std::size_t>(n) + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(static_cast<std::size_t>(n) + 1, inf);
    std::vector<char> used(static_cast<std::size_t>(n) + 1, 0);
    do {
      used[static_cast<std::size_t>(j0)] = 1;
      const int i0 = p[static_cast<std::size_t>(j0)];
      int j1 = 0;
      double delta = inf;
      for (int j = 1; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        const double cur = cost[static_cast<std::size_t>(i0 - 1) * n + (j - 1)] -
                           u[static_cast<std::size_t>(i0)] - v[static_cast<std::size_t>(j)];
        if (cur < minv[static_cast<std::size_t>(j)]) {
          minv[static_cast<std::size_t>(j)] = cur;
          way[static_cast<std::size_t>(j)] = j0;
        }
        if (minv[static_cast<std::size_t>(j)] < delta) {
          delta = minv[static_cast<std::size_t>(j)];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) {
          u[static_cast<std::size_t>(p[static_cast<std::size_t>(j)])] += delta;
          v[static_cast<std::size_t>(j)] -= delta;
        } else {
          minv[static_cast<std::size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (p[static_cast<std::size_t>(j0)] != 0);
    do {
      const int j1 = way[static_cast<std::size_t>(j0)];
      p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0);
  }
  std::vector<int> assignment(static_cast<std::size_t>(n), -1);
  for (int j = 1; j <= n; ++j)
    if (p[static_cast<std::size_t>(j)] > 0)
      assignment[static_cast<std::size_t>(p[static_cast<std::size_t>(j)] - 1)] = j - 1;
  return assignment;
}

double assignment_cost(const std::vector<double>& cost, int n, const std::vector<int>& a) {
  double total = 0.0;
  for (int j = 0; j < n; ++j) total += cost[static_cast<std::size_t>(j) * n + a[static_cast<std::size_t>(j)]];
  return total;
}

std::vector<std::vector<int>> candidate_alignments(const Tensor& node_log_probs,
                                                   const UnalignedTarget& target,
                                                   const AlignmentConfig& cfg, Rng& rng) {
  cfg.validate();
  const int m = target.M();
  if (node_log_probs.rank() != 2 || node_log_probs.dim(0) != m)
    throw std::invalid_argument("candidate_alignments: log-prob rows " +
                                shape_str(node_log_probs.shape()) + " do not match M=" +
                                std::to_string(m));
  const int n_labels = node_log_probs.dim(1);
  const auto& nlp = node_log_probs.values();

  std::vector<double> base(static_cast<std::size_t>(m) * m);
  for (int j = 0; j < m; ++j) {
    const int label = target.s[static_cast<std::size_t>(j)];
    if (label < 0 || label >= n_labels)
      throw std::invalid_argument("candidate_alignments: target label out of range");
    for (int i = 0; i < m; ++i)
      base[static_cast<std::size_t>(j) * m + i] =
          -static_cast<double>(nlp[static_cast<std::size_t>(i) * n_labels + label]);
  }

  std::vector<std::vector<int>> candidates;
  candidates.reserve(static_cast<std::size_t>(cfg.K));
  for (int kappa = 0; kappa < cfg.K; ++kappa) {
    const bool noiseless = cfg.sigma == 0.0f || (cfg.first_noiseless && kappa == 0);
    if (noiseless) {
      candidates.push_back(hungarian(base, m));
      continue;
    }
    std::vector<double> noisy = base;
    for (double& c : noisy) c += rng.normal_d(0.0, static_cast<double>(cfg.sigma));
    candidates.push_back(hungarian(noisy, m));
  }
  return candidates;
}

double score_alignment(const std::vector<int>& a, const UnalignedTarget& target,
                       const Tensor& node_log_probs, const Tensor& edge_log_probs) {
  const int m = target.M();
  if (static_cast<int>(a.size()) != m || !is_permutation(a))
    throw std::invalid_argument("score_alignment: not a permutation of " +
                                std::to_string(m) + " slots");
  const int n_node = node_log_probs.dim(1);
  const int n_edge = edge_log_probs.dim(2);
  const auto& nlp = node_log_probs.values();
  const auto& elp = edge_log_probs.values();
  double j_total = 0.0;
  for (int j = 0; j < m; ++j)
    j_total += nlp[static_cast<std::size_t>(a[static_cast<std::size_t>(j)]) * n_node +
                   target.s[static_cast<std::size_t>(j)]];
  for (int j = 0; j < m; ++j) {
    const std::size_t aj = static_cast<std::size_t>(a[static_cast<std::size_t>(j)]);
    for (int k = 0; k < m; ++k) {
      const std::size_t ak = static_cast<std::size_t>(a[static_cast<std::size_t>(k)]);
      j_total += elp[(aj * m + ak) * n_edge + target.edge(j, k)];
    }
  }
  return j_total;
}

std::optional<std::vector<int>> AlignmentCache::get(std::int64_t example_id, int m) const {
  auto it = entries_.find(example_id);
  if (it == entries_.end()) return std::nullopt;
  if (static_cast<int>(it->second.size()) != m) return std::nullopt;
  return it->second;
}

void AlignmentCache::put(std::int64_t example_id, std::vector<int> a) {
  entries_[example_id] = std::move(a);
}

nlohmann::json AlignmentCache::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [id, a] : entries_) j[std::to_string(id)] = a;
  return j;
}

AlignmentCache AlignmentCache::from_json(const nlohmann::json& j) {
  AlignmentCache cache;
  for (auto it = j.begin(); it != j.end(); ++it)
    cache.entries_[std::stoll(it.key())] = it.value().get<std::vector<int>>();
  return cache;
}

MapSelection select_map_alignment(const std::vector<std::vector<int>>& candidates,
                                  const std::optional<std::vector<int>>& cached,
                                  const UnalignedTarget& target,
                                  const Tensor& node_log_probs,
                                  const Tensor& edge_log_probs, AlignmentCache* cache,
                                  std::int64_t example_id) {
  if (candidates.empty())
    throw std::invalid_argument("select_map_alignment: no candidates");
  MapSelection best;
  bool first = true;
  for (std::size_t kappa = 0; kappa < candidates.size(); ++kappa) {
    const double j_score =
        score_alignment(candidates[kappa], target, node_log_probs, edge_log_probs);
    if (first || j_score > best.alignment.score) {
      best.alignment = {candidates[kappa], j_score};
      best.candidate_index = static_cast<int>(kappa);
      best.from_cache = false;
      first = false;
    }
  }
  if (cached) {
    const double j_score = score_alignment(*cached, target, node_log_probs, edge_log_probs);
    if (j_score > best.alignment.score) {
      best.alignment = {*cached, j_score};
      best.candidate_index = static_cast<int>(candidates.size());
      best.from_cache = true;
    }
  }
  if (cache && example_id >= 0) cache->put(example_id, best.alignment.a);
  return best;
}

bool alignments_equivalent(const std::vector<int>& a, const std::vector<int>& b,
                           const UnalignedTarget& target) {
  return apply_alignment(target, a) == apply_alignment(target, b);
}

Tensor weak_example_loss(const LagrModel& model, const LagrModel::Output& out,
                         const UnalignedTarget& target, const AlignmentConfig& cfg,
                         Rng& noise_rng, AlignmentCache* cache, std::int64_t example_id,
                         WeakStepInfo* info) {
  auto candidates = candidate_alignments(out.node_log_probs, target, cfg, noise_rng);
  // The previous selection is always recorded (for dumps and the
  // changed-alignment metric); it only competes as the K+1st candidate when
  // the cache trick is enabled.
  std::optional<std::vector<int>> previous;
  if (cache) previous = cache->get(example_id, target.M());
  MapSelection sel = select_map_alignment(candidates,
                                          cfg.cache_enabled ? previous : std::nullopt,
                                          target, out.node_log_probs, out.edge_log_probs,
                                          cache, example_id);
  if (info) {
    info->selected = sel.alignment;
    info->had_cache = previous.has_value();
    info->changed_from_cache =
        previous ? !alignments_equivalent(*previous, sel.alignment.a, target) : true;
  }
  // The alignment is a constant here; the gradient flows through the
  // log-probabilities of the induced aligned graph only.
  return model.supervised_loss(out, apply_alignment(target, sel.alignment.a));
}

float weak_train_step(LagrModel& model, const std::vector<int>& token_ids,
                      const UnalignedTarget& target, const AlignmentConfig& cfg,
                      Adam& optimizer, float max_grad_norm, Rng& noise_rng,
                      Rng* dropout_rng, AlignmentCache* cache, std::int64_t example_id,
                      WeakTrainStats* stats, WeakStepInfo* info) {
  if (target.M() == 0 || token_ids.empty()) {
    if (stats) ++stats->skipped_degenerate;
    return 0.0f;
  }
  LagrModel::Output out = model.forward(token_ids, /*train=*/true, dropout_rng);
  Tensor loss = weak_example_loss(model, out, target, cfg, noise_rng, cache, example_id, info);
  optimizer.zero_grad();
  backward(loss);
  auto params = model.params();
  clip_gradients(params, max_grad_norm);
  optimizer.step();
  return loss.item();
}

}  // namespace lagr
