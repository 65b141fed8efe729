#include "lagr/encoder.hpp"

#include <cmath>
#include <stdexcept>

namespace lagr {

void EncoderConfig::validate() const {
  if (d <= 0 || layers <= 0 || heads <= 0 || ff <= 0 || max_len <= 0)
    throw std::invalid_argument("encoder config: all sizes must be positive");
  if (d % heads != 0)
    throw std::invalid_argument("encoder config: d=" + std::to_string(d) +
                                " not divisible by heads=" + std::to_string(heads));
  if (dropout < 0.0f || dropout >= 1.0f)
    throw std::invalid_argument("encoder config: dropout outside [0,1)");
}

TransformerEncoder::TransformerEncoder(const EncoderConfig& cfg, int vocab_size,
                                       Rng& init_rng)
    : cfg_(cfg) {
  cfg_.validate();
  if (vocab_size <= 0) throw std::invalid_argument("encoder: empty vocabulary");
  const int d = cfg_.d;
  tok_emb_ = he_init({vocab_size, d}, d, init_rng);
  pos_emb_ = he_init({cfg_.max_len, d}, d, init_rng);
  for (int b = 0; b < cfg_.layers; ++b) {
    Block blk;
    blk.wq = he_init({d, d}, d, init_rng);
    blk.bq = Tensor::zeros({d}, true);
    blk.wk = he_init({d, d}, d, init_rng);
    blk.bk = Tensor::zeros({d}, true);
    blk.wv = he_init({d, d}, d, init_rng);
    blk.bv = Tensor::zeros({d}, true);
    blk.wo = he_init({d, d}, d, init_rng);
    blk.bo = Tensor::zeros({d}, true);
    blk.ln1_g = Tensor::full({d}, 1.0f, true);
    blk.ln1_b = Tensor::zeros({d}, true);
    blk.ln2_g = Tensor::full({d}, 1.0f, true);
    blk.ln2_b = Tensor::zeros({d}, true);
    blk.ff1 = he_init({d, cfg_.ff}, d, init_rng);
    blk.ff1_b = Tensor::zeros({cfg_.ff}, true);
    blk.ff2 = he_init({cfg_.ff, d}, cfg_.ff, init_rng);
    blk.ff2_b = Tensor::zeros({d}, true);
    blocks_.push_back(std::move(blk));
  }
  final_ln_g_ = Tensor::full({d}, 1.0f, true);
  final_ln_b_ = Tensor::zeros({d}, true);
}

Tensor TransformerEncoder::embed(const std::vector<int>& ids) const {
  const int n = static_cast<int>(ids.size());
  if (n == 0) throw std::invalid_argument("encode: empty id sequence");
  if (n > cfg_.max_len)
    throw std::invalid_argument("encode: sequence of " + std::to_string(n) +
                                " tokens exceeds max length " +
                                std::to_string(cfg_.max_len));
  Tensor tok = embedding(tok_emb_, ids);
  std::vector<int> positions(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) positions[static_cast<std::size_t>(i)] = i;
  Tensor pos = embedding(pos_emb_, positions);
  // PED: positional table scaled down by 1/sqrt(d) at addition time.
  return add(tok, scalar_mul(pos, 1.0f / std::sqrt(static_cast<float>(cfg_.d))));
}

Tensor TransformerEncoder::encode(const std::vector<int>& ids, bool train, Rng* rng,
                                  EncodeTrace* trace) const {
  if (train && cfg_.dropout > 0.0f && rng == nullptr)
    throw std::invalid_argument("encode: train mode with dropout needs an rng");
  const int n = static_cast<int>(ids.size());
  const int d = cfg_.d;
  const int dh = d / cfg_.heads;
  const float scale = 1.0f / std::sqrt(static_cast<float>(dh));

  auto drop = [&](const Tensor& t) {
    return train && cfg_.dropout > 0.0f ? dropout(t, cfg_.dropout, *rng, true) : t;
  };

  Tensor x = drop(embed(ids));
  for (const Block& blk : blocks_) {
    Tensor h = layer_norm(x, blk.ln1_g, blk.ln1_b);
    Tensor q = add_bias(matmul(h, blk.wq), blk.bq);
    Tensor k = add_bias(matmul(h, blk.wk), blk.bk);
    Tensor v = add_bias(matmul(h, blk.wv), blk.bv);
    std::vector<Tensor> head_ctx;
    std::vector<Tensor> head_att;
    for (int hd = 0; hd < cfg_.heads; ++hd) {
      Tensor qh = slice(q, 1, hd * dh, dh);
      Tensor kh = slice(k, 1, hd * dh, dh);
      Tensor vh = slice(v, 1, hd * dh, dh);
      Tensor att = softmax(scalar_mul(matmul(qh, transpose(kh)), scale));
      if (trace) head_att.push_back(att);
      head_ctx.push_back(matmul(att, vh));
    }
    if (trace) trace->attention.push_back(concat(head_att, 0));
    Tensor ctx = cfg_.heads == 1 ? head_ctx[0] : concat(head_ctx, 1);
    Tensor attn_out = drop(add_bias(matmul(ctx, blk.wo), blk.bo));
    x = add(x, attn_out);

    Tensor h2 = layer_norm(x, blk.ln2_g, blk.ln2_b);
    Tensor ff = add_bias(matmul(gelu(add_bias(matmul(h2, blk.ff1), blk.ff1_b)), blk.ff2),
                         blk.ff2_b);
    x = add(x, drop(ff));
  }
  (void)n;
  return layer_norm(x, final_ln_g_, final_ln_b_);
}

void TransformerEncoder::collect_params(const std::string& prefix,
                                        std::vector<NamedParam>& out) {
  out.push_back({prefix + ".tok_emb", tok_emb_});
  out.push_back({prefix + ".pos_emb", pos_emb_});
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    Block& b = blocks_[i];
    const std::string p = prefix + ".block" + std::to_string(i);
    out.push_back({p + ".wq", b.wq});
    out.push_back({p + ".bq", b.bq});
    out.push_back({p + ".wk", b.wk});
    out.push_back({p + ".bk", b.bk});
    out.push_back({p + ".wv", b.wv});
    out.push_back({p + ".bv", b.bv});
    out.push_back({p + ".wo", b.wo});
    out.push_back({p + ".bo", b.bo});
    out.push_back({p + ".ln1_g", b.ln1_g});
    out.push_back({p + ".ln1_b", b.ln1_b});
    out.push_back({p + ".ln2_g", b.ln2_g});
    out.push_back({p + ".ln2_b", b.ln2_b});
    out.push_back({p + ".ff1", b.ff1});
    out.push_back({p + ".ff1_b", b.ff1_b});
    out.push_back({p + ".ff2", b.ff2});
    out.push_back({p + ".ff2_b", b.ff2_b});
  }
  out.push_back({prefix + ".final_ln_g", final_ln_g_});
  out.push_back({prefix + ".final_ln_b", final_ln_b_});
}

}  // namespace lagr
