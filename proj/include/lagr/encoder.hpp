#pragma once

#include <string>
#include <vector>

#include "lagr/checkpoint.hpp"
#include "lagr/tensor.hpp"

namespace lagr {

enum class EncoderMode { Shared, Separate };

struct EncoderConfig {
  int d = 64;
  int layers = 2;
  int heads = 4;
  int ff = 256;
  float dropout = 0.1f;
  EncoderMode mode = EncoderMode::Shared;
  int max_len = 64;

  void validate() const;
};

// Optional probe for the last forward pass.
struct EncodeTrace {
  std::vector<Tensor> attention;  // one (heads*N, N) tensor per block
};

// Pre-norm Transformer encoder over learned token + positional embeddings.
// Positional embeddings are added scaled by 1/sqrt(d); all tables and
// projections are He-initialized.
class TransformerEncoder {
 public:
  TransformerEncoder(const EncoderConfig& cfg, int vocab_size, Rng& init_rng);

  // H in R^{N x d}. Train mode applies dropout from `rng`.
  Tensor encode(const std::vector<int>& ids, bool train, Rng* rng = nullptr,
                EncodeTrace* trace = nullptr) const;

  // Token + scaled positional embedding, before any block.
  Tensor embed(const std::vector<int>& ids) const;

  void collect_params(const std::string& prefix, std::vector<NamedParam>& out);
  const EncoderConfig& config() const { return cfg_; }

 private:
  struct Block {
    Tensor wq, bq, wk, bk, wv, bv, wo, bo;
    Tensor ln1_g, ln1_b, ln2_g, ln2_b;
    Tensor ff1, ff1_b, ff2, ff2_b;
  };

  EncoderConfig cfg_;
  Tensor tok_emb_;
  Tensor pos_emb_;
  std::vector<Block> blocks_;
  Tensor final_ln_g_, final_ln_b_;
};

}  // namespace lagr
