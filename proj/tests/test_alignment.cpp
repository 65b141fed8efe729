#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "lagr/alignment.hpp"

using namespace lagr;

namespace {

double brute_force_min_cost(const std::vector<double>& cost, int n) {
  std::vector<int> perm(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
  double best = std::numeric_limits<double>::infinity();
  do {
    best = std::min(best, assignment_cost(cost, n, perm));
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

Tensor log_probs_from_logits(const std::vector<float>& logits, int rows, int cols) {
  return log_softmax(Tensor::from_data({rows, cols}, logits));
}

Tensor edge_log_probs_from_logits(const std::vector<float>& logits, int m, int labels) {
  return log_softmax(Tensor::from_data({m, m, labels}, logits));
}

struct ToyModel {
  Tensor node_lp;
  Tensor edge_lp;
};

ToyModel random_toy(int m, int node_labels, int edge_labels, std::uint64_t seed,
                    float sharpness = 1.0f) {
  std::mt19937_64 eng(seed);
  std::normal_distribution<float> dist(0.0f, sharpness);
  std::vector<float> nl(static_cast<std::size_t>(m) * node_labels);
  std::vector<float> el(static_cast<std::size_t>(m) * m * edge_labels);
  for (float& v : nl) v = dist(eng);
  for (float& v : el) v = dist(eng);
  return {log_probs_from_logits(nl, m, node_labels),
          edge_log_probs_from_logits(el, m, edge_labels)};
}

UnalignedTarget random_unaligned(int m, int node_labels, int edge_labels,
                                 std::uint64_t seed) {
  std::mt19937_64 eng(seed);
  UnalignedTarget t;
  t.N = m;
  t.L = 1;
  t.s.resize(static_cast<std::size_t>(m));
  t.e.resize(static_cast<std::size_t>(m) * m);
  for (int& v : t.s) v = static_cast<int>(eng() % static_cast<std::uint64_t>(node_labels));
  for (int& v : t.e) v = static_cast<int>(eng() % static_cast<std::uint64_t>(edge_labels));
  return t;
}

}  // namespace

TEST_CASE("hungarian picks the obvious diagonal") {
  const int n = 4;
  std::vector<double> cost(16, 0.0);
  for (int i = 0; i < n; ++i) cost[static_cast<std::size_t>(i) * n + i] = -1.0;
  std::vector<int> a = hungarian(cost, n);
  for (int i = 0; i < n; ++i) CHECK(a[static_cast<std::size_t>(i)] == i);
}

TEST_CASE("hungarian equals brute force on the worked 3x3 example") {
  std::vector<double> cost{4, 1, 3, 2, 0, 5, 3, 2, 2};
  std::vector<int> a = hungarian(cost, 3);
  CHECK(is_permutation(a));
  CHECK(assignment_cost(cost, 3, a) == doctest::Approx(brute_force_min_cost(cost, 3)));
}

TEST_CASE("hungarian equals brute force on 500 random 7x7 matrices") {
  std::mt19937_64 eng(42);
  std::normal_distribution<double> dist(0.0, 3.0);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> cost(49);
    for (double& c : cost) c = dist(eng);
    std::vector<int> a = hungarian(cost, 7);
    REQUIRE(is_permutation(a));
    REQUIRE(assignment_cost(cost, 7, a) ==
            doctest::Approx(brute_force_min_cost(cost, 7)).epsilon(1e-9));
  }
}

TEST_CASE("hungarian rejects malformed input") {
  CHECK_THROWS_AS(hungarian({1.0, 2.0, 3.0}, 2), std::invalid_argument);
  CHECK_THROWS_AS(hungarian({1.0, std::nan(""), 0.0, 1.0}, 2), std::invalid_argument);
}

TEST_CASE("hungarian beats random permutations") {
  std::mt19937_64 eng(7);
  std::normal_distribution<double> dist;
  std::vector<double> cost(36);
  for (double& c : cost) c = dist(eng);
  std::vector<int> best = hungarian(cost, 6);
  const double opt = assignment_cost(cost, 6, best);
  std::vector<int> perm{0, 1, 2, 3, 4, 5};
  for (int trial = 0; trial < 1000; ++trial) {
    std::shuffle(perm.begin(), perm.end(), eng);
    CHECK(opt <= assignment_cost(cost, 6, perm) + 1e-12);
  }
}

TEST_CASE("zero noise produces identical candidates") {
  ToyModel model = random_toy(5, 4, 2, 1);
  UnalignedTarget target = random_unaligned(5, 4, 2, 2);
  Rng rng(3);
  AlignmentConfig cfg;
  cfg.K = 6;
  cfg.sigma = 0.0f;
  auto candidates = candidate_alignments(model.node_lp, target, cfg, rng);
  REQUIRE(candidates.size() == 6);
  for (const auto& c : candidates) CHECK(c == candidates[0]);
}

TEST_CASE("sharp unique node predictions force the label-matching permutation") {
  const int m = 4;
  // Node j strongly predicts label j; target lists labels in reverse order.
  std::vector<float> logits(static_cast<std::size_t>(m) * m, -30.0f);
  for (int i = 0; i < m; ++i) logits[static_cast<std::size_t>(i) * m + i] = 30.0f;
  Tensor node_lp = log_probs_from_logits(logits, m, m);
  UnalignedTarget target;
  target.N = m;
  target.L = 1;
  target.s = {3, 2, 1, 0};
  target.e.assign(16, 0);
  Rng rng(4);
  AlignmentConfig cfg;
  cfg.K = 1;
  cfg.sigma = 0.0f;
  auto candidates = candidate_alignments(node_lp, target, cfg, rng);
  CHECK(candidates[0] == std::vector<int>{3, 2, 1, 0});
}

TEST_CASE("noise diversifies candidates when labels are duplicated") {
  const int m = 5;
  std::vector<float> logits(static_cast<std::size_t>(m) * 3, 0.0f);
  Tensor node_lp = log_probs_from_logits(logits, m, 3);
  UnalignedTarget target;
  target.N = m;
  target.L = 1;
  target.s = {1, 1, 2, 2, 0};  // duplicated labels
  target.e.assign(25, 0);
  AlignmentConfig cfg;
  cfg.K = 10;
  cfg.sigma = 1.0f;
  int diversified = 0;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    Rng rng(seed);
    auto candidates = candidate_alignments(node_lp, target, cfg, rng);
    std::set<std::vector<int>> unique(candidates.begin(), candidates.end());
    diversified += unique.size() >= 2;
  }
  CHECK(diversified > 990);
}

TEST_CASE("score_alignment of a perfectly matching one-hot model is zero") {
  const int m = 3;
  UnalignedTarget target = random_unaligned(m, 3, 2, 9);
  std::vector<int> a{2, 0, 1};
  AlignedGraph induced = apply_alignment(target, a);
  Tensor node_lp = Tensor::full({m, 3}, -50.0f);
  for (int j = 0; j < m; ++j)
    node_lp.values()[static_cast<std::size_t>(j) * 3 + induced.z[static_cast<std::size_t>(j)]] = 0.0f;
  Tensor edge_lp = Tensor::full({m, m, 2}, -50.0f);
  for (int j = 0; j < m; ++j)
    for (int k = 0; k < m; ++k)
      edge_lp.values()[(static_cast<std::size_t>(j) * m + k) * 2 + induced.edge(j, k)] = 0.0f;
  CHECK(score_alignment(a, target, node_lp, edge_lp) == doctest::Approx(0.0));
}

TEST_CASE("a uniform model scores every alignment identically") {
  const int m = 4, vn = 5, ve = 3;
  Tensor node_lp = Tensor::full({m, vn}, -std::log(static_cast<float>(vn)));
  Tensor edge_lp = Tensor::full({m, m, ve}, -std::log(static_cast<float>(ve)));
  UnalignedTarget target = random_unaligned(m, vn, ve, 10);
  const double expect = -m * std::log(vn) - m * m * std::log(ve);
  std::vector<int> perm{0, 1, 2, 3};
  do {
    CHECK(score_alignment(perm, target, node_lp, edge_lp) ==
          doctest::Approx(expect).epsilon(1e-6));
  } while (std::next_permutation(perm.begin(), perm.end()));
}

TEST_CASE("exhaustive search over M=4 confirms the MAP oracle") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    ToyModel model = random_toy(4, 3, 2, 100 + seed);
    UnalignedTarget target = random_unaligned(4, 3, 2, 200 + seed);
    std::vector<int> perm{0, 1, 2, 3};
    double best = -std::numeric_limits<double>::infinity();
    do {
      best = std::max(best, score_alignment(perm, target, model.node_lp, model.edge_lp));
    } while (std::next_permutation(perm.begin(), perm.end()));

    // The best over any candidate subset can never exceed the exhaustive best.
    Rng rng(seed);
    AlignmentConfig cfg;
    cfg.K = 24;
    cfg.sigma = 1.0f;
    auto candidates = candidate_alignments(model.node_lp, target, cfg, rng);
    MapSelection sel =
        select_map_alignment(candidates, std::nullopt, target, model.node_lp, model.edge_lp);
    CHECK(sel.alignment.score <= best + 1e-9);
  }
}

TEST_CASE("select_map_alignment basics") {
  ToyModel model = random_toy(4, 3, 2, 30);
  UnalignedTarget target = random_unaligned(4, 3, 2, 31);

  SUBCASE("a single candidate is returned unchanged") {
    std::vector<std::vector<int>> candidates{{2, 0, 3, 1}};
    MapSelection sel = select_map_alignment(candidates, std::nullopt, target,
                                            model.node_lp, model.edge_lp);
    CHECK(sel.alignment.a == candidates[0]);
    CHECK_FALSE(sel.from_cache);
  }

  SUBCASE("a cached alignment with higher J wins and the cache keeps the winner") {
    // Exhaustively find the best and the worst alignments.
    std::vector<int> perm{0, 1, 2, 3};
    std::vector<int> best_a, worst_a;
    double best = -1e18, worst = 1e18;
    do {
      const double j = score_alignment(perm, target, model.node_lp, model.edge_lp);
      if (j > best) {
        best = j;
        best_a = perm;
      }
      if (j < worst) {
        worst = j;
        worst_a = perm;
      }
    } while (std::next_permutation(perm.begin(), perm.end()));
    REQUIRE(best > worst);

    AlignmentCache cache;
    cache.put(7, best_a);
    std::vector<std::vector<int>> candidates{worst_a};
    MapSelection sel = select_map_alignment(candidates, cache.get(7, 4), target,
                                            model.node_lp, model.edge_lp, &cache, 7);
    CHECK(sel.from_cache);
    CHECK(sel.alignment.a == best_a);
    CHECK(*cache.get(7, 4) == best_a);
  }

  SUBCASE("adding the cache never lowers the selected J") {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      ToyModel m2 = random_toy(4, 3, 2, 400 + seed);
      UnalignedTarget t2 = random_unaligned(4, 3, 2, 500 + seed);
      Rng rng(seed);
      AlignmentConfig cfg;
      cfg.K = 3;
      cfg.sigma = 1.0f;
      auto candidates = candidate_alignments(m2.node_lp, t2, cfg, rng);
      MapSelection without =
          select_map_alignment(candidates, std::nullopt, t2, m2.node_lp, m2.edge_lp);
      std::vector<int> cached{1, 0, 3, 2};
      MapSelection with =
          select_map_alignment(candidates, cached, t2, m2.node_lp, m2.edge_lp);
      CHECK(with.alignment.score >= without.alignment.score - 1e-12);
    }
  }
}

TEST_CASE("noiseless K=1 is a subset of K=5 with a noiseless first draw") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    ToyModel model = random_toy(5, 3, 2, 600 + seed);
    UnalignedTarget target = random_unaligned(5, 3, 2, 700 + seed);

    AlignmentConfig one;
    one.K = 1;
    one.sigma = 0.0f;
    Rng rng1(seed);
    auto c1 = candidate_alignments(model.node_lp, target, one, rng1);
    MapSelection s1 = select_map_alignment(c1, std::nullopt, target, model.node_lp,
                                           model.edge_lp);

    AlignmentConfig five;
    five.K = 5;
    five.sigma = 1.0f;
    five.first_noiseless = true;
    Rng rng5(seed);
    auto c5 = candidate_alignments(model.node_lp, target, five, rng5);
    CHECK(c5[0] == c1[0]);
    MapSelection s5 = select_map_alignment(c5, std::nullopt, target, model.node_lp,
                                           model.edge_lp);
    CHECK(s5.alignment.score >= s1.alignment.score - 1e-12);
  }
}

TEST_CASE("score is invariant to swapping null slots of the target") {
  const int m = 5;
  ToyModel model = random_toy(m, 4, 3, 44);
  UnalignedTarget target;
  target.N = m;
  target.L = 1;
  target.s = {2, 0, 1, 0, 3};  // slots 1 and 3 are null
  target.e.assign(25, 0);
  target.e[0 * 5 + 2] = 1;
  target.e[4 * 5 + 0] = 2;
  std::vector<int> a{4, 1, 0, 3, 2};
  std::vector<int> swapped = a;
  std::swap(swapped[1], swapped[3]);  // exchange the two null slots
  CHECK(score_alignment(a, target, model.node_lp, model.edge_lp) ==
        doctest::Approx(score_alignment(swapped, target, model.node_lp, model.edge_lp))
            .epsilon(1e-9));
  CHECK(alignments_equivalent(a, swapped, target));
  std::vector<int> non_null_swap = a;
  std::swap(non_null_swap[0], non_null_swap[2]);
  CHECK_FALSE(alignments_equivalent(a, non_null_swap, target));
}

TEST_CASE("alignment cache json round trip") {
  AlignmentCache cache;
  cache.put(3, {1, 0, 2});
  cache.put(9, {0, 1});
  AlignmentCache back = AlignmentCache::from_json(cache.to_json());
  CHECK(*back.get(3, 3) == std::vector<int>{1, 0, 2});
  CHECK(*back.get(9, 2) == std::vector<int>{0, 1});
  CHECK_FALSE(back.get(9, 3).has_value());  // stale M is ignored
  CHECK_FALSE(back.get(4, 2).has_value());
}
