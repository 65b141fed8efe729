#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <random>

#include "lagr/checkpoint.hpp"
#include "lagr/tensor.hpp"
#include "lagr/util.hpp"

using namespace lagr;

namespace {

std::string temp_prefix(const char* tag) {
  return std::string("ckpt_test_") + tag;
}

void cleanup(const std::string& prefix) {
  std::remove((prefix + ".json").c_str());
  std::remove((prefix + ".bin").c_str());
}

}  // namespace

TEST_CASE("checkpoint round trip is bit-exact") {
  std::mt19937_64 eng(21);
  std::normal_distribution<float> dist;
  std::vector<NamedParam> params{
      {"enc.w", Tensor::zeros({4, 6}, true)},
      {"enc.b", Tensor::zeros({6}, true)},
      {"head.w", Tensor::zeros({6, 3}, true)},
  };
  for (auto& p : params)
    for (float& v : p.tensor.values()) v = dist(eng);

  nlohmann::json meta;
  meta["step"] = 123;
  meta["note"] = "round-trip";

  const std::string prefix = temp_prefix("roundtrip");
  save_checkpoint(prefix, params, meta);

  std::vector<NamedParam> restored{
      {"head.w", Tensor::zeros({6, 3}, true)},
      {"enc.w", Tensor::zeros({4, 6}, true)},
      {"enc.b", Tensor::zeros({6}, true)},
  };
  nlohmann::json loaded_meta = load_checkpoint(prefix, restored);
  CHECK(loaded_meta.at("step") == 123);
  for (const auto& r : restored) {
    bool matched = false;
    for (const auto& p : params)
      if (p.name == r.name) {
        CHECK(p.tensor.values() == r.tensor.values());
        matched = true;
      }
    CHECK(matched);
  }
  cleanup(prefix);
}

TEST_CASE("shape mismatch on load is rejected with the parameter name") {
  std::vector<NamedParam> params{{"w", Tensor::full({2, 2}, 1.0f, true)}};
  const std::string prefix = temp_prefix("shape");
  save_checkpoint(prefix, params, {});
  std::vector<NamedParam> wrong{{"w", Tensor::zeros({2, 3}, true)}};
  CHECK_THROWS_WITH_AS(load_checkpoint(prefix, wrong), doctest::Contains("'w'"),
                       std::runtime_error);
  cleanup(prefix);
}

TEST_CASE("missing parameter on load is rejected") {
  std::vector<NamedParam> params{{"w", Tensor::full({2}, 1.0f, true)}};
  const std::string prefix = temp_prefix("missing");
  save_checkpoint(prefix, params, {});
  std::vector<NamedParam> wrong{{"v", Tensor::zeros({2}, true)}};
  CHECK_THROWS_AS(load_checkpoint(prefix, wrong), std::runtime_error);
  cleanup(prefix);
}

TEST_CASE("git blob hash matches the known empty-string value") {
  // `git hash-object` of an empty file.
  CHECK(git_blob_hash("") == "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
  CHECK(sha1_hex("abc") == "a9993e364706816aba3e25717850c26c9cd0d89d");
}
