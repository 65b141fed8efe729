#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "lagr/optim.hpp"
#include "lagr/tensor.hpp"

using namespace lagr;

TEST_CASE("linear warmup then linear decay") {
  LrSchedule s{4e-4f, 1000, 70000};
  CHECK(s.at(500) == doctest::Approx(2e-4f));
  CHECK(s.at(1000) == doctest::Approx(4e-4f));
  CHECK(s.at(70000) == doctest::Approx(0.0f));
  CHECK(s.at(35500) == doctest::Approx(4e-4f * (70000 - 35500) / 69000.0f));

  LrSchedule no_warmup{1e-4f, 0, 100};
  CHECK(no_warmup.at(1) == doctest::Approx(1e-4f * 99 / 100.0f));
  CHECK(no_warmup.at(100) == doctest::Approx(0.0f));
}

TEST_CASE("adam drives a quadratic to its minimizer") {
  // loss = (w - 3)^2, minimizer at 3
  Tensor w = Tensor::from_data({1}, {0.0f}, true);
  Adam opt({w}, {}, LrSchedule{0.1f, 0, 10000});
  for (int step = 0; step < 200; ++step) {
    opt.zero_grad();
    w.grad()[0] = 2.0f * (w.values()[0] - 3.0f);
    REQUIRE(opt.step());
  }
  CHECK(std::abs(w.values()[0] - 3.0f) < 1e-2);
}

TEST_CASE("zero learning rate leaves parameters bit-identical") {
  Tensor w = Tensor::from_data({3}, {0.25f, -1.5f, 3.75f}, true);
  const std::vector<float> before = w.values();
  Adam opt({w}, {}, LrSchedule{0.0f, 0, 100});
  w.zero_grad();
  w.grad()[0] = 1.0f;
  w.grad()[1] = -2.0f;
  w.grad()[2] = 0.5f;
  REQUIRE(opt.step());
  CHECK(w.values() == before);
}

TEST_CASE("non-finite gradients reject the step") {
  Tensor w = Tensor::from_data({2}, {1.0f, 2.0f}, true);
  const std::vector<float> before = w.values();
  Adam opt({w}, {}, LrSchedule{0.1f, 0, 100});
  w.zero_grad();
  w.grad()[0] = std::nanf("");
  CHECK_FALSE(opt.step());
  CHECK(opt.steps_rejected() == 1);
  CHECK(opt.steps_taken() == 0);
  CHECK(w.values() == before);
}

TEST_CASE("gradient clipping rescales only above the threshold") {
  SUBCASE("norm 2 clipped to 1 halves every entry") {
    Tensor w = Tensor::from_data({2}, {0.0f, 0.0f}, true);
    w.zero_grad();
    w.grad()[0] = 2.0f * std::sqrt(0.5f);
    w.grad()[1] = 2.0f * std::sqrt(0.5f);
    std::vector<Tensor> params{w};
    const float pre = clip_gradients(params, 1.0f);
    CHECK(pre == doctest::Approx(2.0f));
    CHECK(global_grad_norm(params) == doctest::Approx(1.0f));
    CHECK(w.grad()[0] == doctest::Approx(std::sqrt(0.5f)));
  }
  SUBCASE("norm below the threshold is untouched") {
    Tensor w = Tensor::from_data({2}, {0.0f, 0.0f}, true);
    w.zero_grad();
    w.grad()[0] = 0.3f;
    w.grad()[1] = 0.4f;
    std::vector<Tensor> params{w};
    clip_gradients(params, 1.0f);
    CHECK(w.grad()[0] == doctest::Approx(0.3f));
    CHECK(w.grad()[1] == doctest::Approx(0.4f));
  }
  SUBCASE("post-clip norm equals min(pre-norm, max)") {
    std::mt19937_64 eng(17);
    std::normal_distribution<float> dist;
    for (int trial = 0; trial < 20; ++trial) {
      Tensor a = Tensor::zeros({5}, true);
      Tensor b = Tensor::zeros({3, 2}, true);
      a.zero_grad();
      b.zero_grad();
      for (float& g : a.grad()) g = dist(eng);
      for (float& g : b.grad()) g = dist(eng);
      std::vector<Tensor> params{a, b};
      const float pre = global_grad_norm(params);
      clip_gradients(params, 1.0f);
      CHECK(global_grad_norm(params) ==
            doctest::Approx(std::min(pre, 1.0f)).epsilon(1e-6));
      // Direction preserved: entries scale uniformly.
      if (pre > 1.0f)
        CHECK(a.grad()[0] * pre == doctest::Approx(a.grad()[0] / (1.0f / pre)).epsilon(1e-4));
    }
  }
}
