#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <vector>

namespace lagr {

using Shape = std::vector<int>;

std::int64_t numel(const Shape& shape);
std::string shape_str(const Shape& shape);

struct TensorNode;

// Value-semantic handle to a node in a dynamic reverse-mode graph.
// Data is float32; graphs are rebuilt per example.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(const Shape& shape, bool requires_grad = false);
  static Tensor full(const Shape& shape, float value, bool requires_grad = false);
  static Tensor from_data(const Shape& shape, std::vector<float> data,
                          bool requires_grad = false);
  static Tensor scalar(float value, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  int rank() const;
  int dim(int axis) const;
  std::int64_t size() const;

  std::vector<float>& values();
  const std::vector<float>& values() const;
  float item() const;
  float at2(int row, int col) const;  // rank-2 convenience

  bool requires_grad() const;
  std::vector<float>& grad();
  const std::vector<float>& grad() const;
  bool has_grad() const;
  void zero_grad();

  std::shared_ptr<TensorNode> node_;
};

struct TensorNode {
  Shape shape;
  std::vector<float> data;
  std::vector<float> grad;  // sized lazily during backward
  bool requires_grad = false;
  bool backward_done = false;
  std::vector<std::shared_ptr<TensorNode>> parents;
  std::function<void(TensorNode&)> backward_fn;
  const char* op = "leaf";

  void ensure_grad();
};

// Seeded RNG stream. Streams are created per purpose (init, dropout, noise,
// sampling) so runs are reproducible under a single top-level seed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  float normal(float mean, float stddev);
  double normal_d(double mean, double stddev);
  float uniform();  // [0,1)
  std::uint64_t next_u64();
  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

// He initialization: N(0, 2/fan_in).
Tensor he_init(const Shape& shape, int fan_in, Rng& rng);

// ---- forward ops ------------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b);            // same shape
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);            // elementwise
Tensor add_bias(const Tensor& mat, const Tensor& bias);  // (R,C) + (C)
Tensor scalar_mul(const Tensor& a, float s);
Tensor neg(const Tensor& a);
Tensor matmul(const Tensor& a, const Tensor& b);  // rank-2 only
Tensor transpose(const Tensor& a);                // rank-2 only
Tensor concat(const std::vector<Tensor>& parts, int axis);
Tensor stack(const std::vector<Tensor>& parts, int axis);  // new axis at `axis`
Tensor slice(const Tensor& a, int axis, int start, int len);
Tensor reshape(const Tensor& a, const Shape& shape);
Tensor softmax(const Tensor& a);      // over last axis
Tensor log_softmax(const Tensor& a);  // over last axis
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                  float eps = 1e-5f);
Tensor embedding(const Tensor& table, const std::vector<int>& ids);
Tensor dropout(const Tensor& x, float rate, Rng& rng, bool train);
Tensor relu(const Tensor& x);
Tensor gelu(const Tensor& x);
Tensor sum(const Tensor& x);  // -> scalar
// out[i] = x[i, index[i]]; shape (R,)
Tensor gather_rows(const Tensor& x, const std::vector<int>& index);

// Reverse-mode sweep from a scalar loss. Populates grad on every
// requires_grad leaf reachable from `loss`. A second sweep on the same
// graph is rejected.
void backward(Tensor loss);

}  // namespace lagr
