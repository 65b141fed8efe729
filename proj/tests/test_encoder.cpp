#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "lagr/encoder.hpp"
#include "lagr/vocab.hpp"

using namespace lagr;

namespace {

EncoderConfig toy_config() {
  EncoderConfig cfg;
  cfg.d = 8;
  cfg.layers = 2;
  cfg.heads = 2;
  cfg.ff = 16;
  cfg.dropout = 0.1f;
  cfg.max_len = 16;
  return cfg;
}

Vocab sentence_vocab() {
  return Vocab::build({{"A", "hedgehog", "ate", "the", "cake", "dog", "ran", "."}});
}

}  // namespace

TEST_CASE("tokenize splits on whitespace and maps unknowns") {
  Vocab v = sentence_vocab();
  auto ids = encode_tokens(v, tokenize_utterance("A hedgehog ate the cake"));
  CHECK(ids.size() == 5);
  for (int id : ids) CHECK(id != Vocab::kUnk);
  CHECK_THROWS_AS(tokenize_utterance(""), std::invalid_argument);
  CHECK_THROWS_AS(tokenize_utterance("   "), std::invalid_argument);
  auto unk = encode_tokens(v, tokenize_utterance("A wombat ran"));
  CHECK(unk[1] == Vocab::kUnk);
}

TEST_CASE("vocab file round trip preserves ids") {
  Vocab v = sentence_vocab();
  v.save("vocab_test.txt");
  Vocab back = Vocab::load("vocab_test.txt");
  CHECK(back.size() == v.size());
  CHECK(back.id("hedgehog") == v.id("hedgehog"));
  std::remove("vocab_test.txt");
}

TEST_CASE("encode produces an N x d matrix, deterministically in eval mode") {
  Rng init(1);
  TransformerEncoder enc(toy_config(), 10, init);
  std::vector<int> ids{2, 3, 4, 5, 6};
  Tensor h1 = enc.encode(ids, false);
  CHECK(h1.shape() == Shape{5, 8});
  for (float v : h1.values()) CHECK(std::isfinite(v));
  Tensor h2 = enc.encode(ids, false);
  CHECK(h1.values() == h2.values());
}

TEST_CASE("encode is length-preserving across 1..max") {
  Rng init(2);
  EncoderConfig cfg = toy_config();
  TransformerEncoder enc(cfg, 12, init);
  for (int n = 1; n <= cfg.max_len; ++n) {
    std::vector<int> ids(static_cast<std::size_t>(n), 3);
    CHECK(enc.encode(ids, false).dim(0) == n);
  }
  std::vector<int> too_long(static_cast<std::size_t>(cfg.max_len) + 1, 3);
  CHECK_THROWS_WITH_AS(enc.encode(too_long, false), doctest::Contains("17"),
                       std::invalid_argument);
}

TEST_CASE("permuting input tokens changes the encoding") {
  Rng init(3);
  TransformerEncoder enc(toy_config(), 10, init);
  Tensor a = enc.encode({2, 3, 4, 5}, false);
  Tensor b = enc.encode({3, 2, 4, 5}, false);
  bool any_diff = false;
  for (std::size_t i = 0; i < a.values().size(); ++i)
    any_diff = any_diff || a.values()[i] != b.values()[i];
  CHECK(any_diff);
}

TEST_CASE("positional embeddings are added with the 1/sqrt(d) downscale") {
  Rng init(4);
  EncoderConfig cfg = toy_config();
  cfg.d = 64;
  cfg.heads = 4;
  TransformerEncoder enc(cfg, 10, init);
  std::vector<NamedParam> params;
  enc.collect_params("enc", params);

  Tensor tok_emb, pos_emb;
  for (auto& p : params) {
    if (p.name == "enc.tok_emb") tok_emb = p.tensor;
    if (p.name == "enc.pos_emb") pos_emb = p.tensor;
  }
  REQUIRE(tok_emb.defined());
  REQUIRE(pos_emb.defined());

  SUBCASE("zeroed position table leaves token embeddings") {
    std::fill(pos_emb.values().begin(), pos_emb.values().end(), 0.0f);
    Tensor e = enc.embed({2, 3});
    for (int c = 0; c < 64; ++c) {
      CHECK(e.at2(0, c) == tok_emb.at2(2, c));
      CHECK(e.at2(1, c) == tok_emb.at2(3, c));
    }
  }

  SUBCASE("positional contribution is the table row over 8") {
    std::fill(tok_emb.values().begin(), tok_emb.values().end(), 0.0f);
    Tensor e = enc.embed({2, 3});
    for (int c = 0; c < 64; ++c)
      CHECK(e.at2(1, c) == doctest::Approx(pos_emb.at2(1, c) / 8.0f).epsilon(1e-6));
  }

  SUBCASE("scaled positional table variance tracks (2/fan_in)/d") {
    double mean = 0.0, var = 0.0;
    const auto& tab = pos_emb.values();
    for (float v : tab) mean += v / 8.0;
    mean /= tab.size();
    for (float v : tab) var += (v / 8.0 - mean) * (v / 8.0 - mean);
    var /= tab.size();
    CHECK(var == doctest::Approx((2.0 / 64.0) / 64.0).epsilon(0.15));
  }
}

TEST_CASE("attention rows are normalized") {
  Rng init(5);
  TransformerEncoder enc(toy_config(), 10, init);
  EncodeTrace trace;
  enc.encode({2, 3, 4, 5, 6, 7}, false, nullptr, &trace);
  REQUIRE(trace.attention.size() == 2);
  for (const Tensor& att : trace.attention) {
    REQUIRE(att.dim(1) == 6);
    for (int r = 0; r < att.dim(0); ++r) {
      float total = 0.0f;
      for (int c = 0; c < 6; ++c) total += att.at2(r, c);
      CHECK(std::abs(total - 1.0f) < 1e-5f);
    }
  }
}

TEST_CASE("train mode without an rng is rejected when dropout is active") {
  Rng init(6);
  TransformerEncoder enc(toy_config(), 10, init);
  CHECK_THROWS_AS(enc.encode({2, 3}, true, nullptr), std::invalid_argument);
  Rng drop(7);
  CHECK_NOTHROW(enc.encode({2, 3}, true, &drop));
}

TEST_CASE("config validation") {
  EncoderConfig cfg = toy_config();
  cfg.d = 10;
  cfg.heads = 4;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = toy_config();
  cfg.dropout = 1.0f;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}
