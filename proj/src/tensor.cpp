#include "lagr/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>
#include <unordered_set>

namespace lagr {

std::int64_t numel(const Shape& shape) {
  std::int64_t n = 1;
  for (int d : shape) n *= d;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::string s = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  s += ")";
  return s;
}

void TensorNode::ensure_grad() {
  if (grad.size() != data.size()) grad.assign(data.size(), 0.0f);
}

static void check_shape(const Shape& shape, const char* op) {
  if (shape.empty()) throw std::invalid_argument(std::string(op) + ": rank-0 shape");
  for (int d : shape) {
    if (d <= 0)
      throw std::invalid_argument(std::string(op) + ": non-positive dim in " +
                                  shape_str(shape));
  }
}

Tensor Tensor::zeros(const Shape& shape, bool requires_grad) {
  return full(shape, 0.0f, requires_grad);
}

Tensor Tensor::full(const Shape& shape, float value, bool requires_grad) {
  check_shape(shape, "tensor");
  Tensor t;
  t.node_ = std::make_shared<TensorNode>();
  t.node_->shape = shape;
  t.node_->data.assign(static_cast<std::size_t>(numel(shape)), value);
  t.node_->requires_grad = requires_grad;
  return t;
}

Tensor Tensor::from_data(const Shape& shape, std::vector<float> data,
                         bool requires_grad) {
  check_shape(shape, "tensor");
  if (static_cast<std::int64_t>(data.size()) != numel(shape))
    throw std::invalid_argument("tensor: data length " + std::to_string(data.size()) +
                                " does not match shape " + shape_str(shape));
  Tensor t;
  t.node_ = std::make_shared<TensorNode>();
  t.node_->shape = shape;
  t.node_->data = std::move(data);
  t.node_->requires_grad = requires_grad;
  return t;
}

Tensor Tensor::scalar(float value, bool requires_grad) {
  return from_data({1}, {value}, requires_grad);
}

const Shape& Tensor::shape() const { return node_->shape; }
int Tensor::rank() const { return static_cast<int>(node_->shape.size()); }
int Tensor::dim(int axis) const { return node_->shape.at(static_cast<std::size_t>(axis)); }
std::int64_t Tensor::size() const { return static_cast<std::int64_t>(node_->data.size()); }

std::vector<float>& Tensor::values() { return node_->data; }
const std::vector<float>& Tensor::values() const { return node_->data; }

float Tensor::item() const {
  if (size() != 1)
    throw std::invalid_argument("item: tensor of shape " + shape_str(shape()) +
                                " is not scalar");
  return node_->data[0];
}

float Tensor::at2(int row, int col) const {
  if (rank() != 2) throw std::invalid_argument("at2: tensor is not rank-2");
  return node_->data[static_cast<std::size_t>(row) * dim(1) + col];
}

bool Tensor::requires_grad() const { return node_->requires_grad; }

std::vector<float>& Tensor::grad() {
  node_->ensure_grad();
  return node_->grad;
}

const std::vector<float>& Tensor::grad() const {
  if (!has_grad())
    throw std::runtime_error("grad: no gradient present; run backward first");
  return node_->grad;
}

bool Tensor::has_grad() const { return node_->grad.size() == node_->data.size(); }

void Tensor::zero_grad() {
  node_->ensure_grad();
  std::fill(node_->grad.begin(), node_->grad.end(), 0.0f);
}

float Rng::normal(float mean, float stddev) {
  std::normal_distribution<float> dist(mean, stddev);
  return dist(engine_);
}

double Rng::normal_d(double mean, double stddev) {
  std::normal_distribution<double> dist(mean, stddev);
  return dist(engine_);
}

float Rng::uniform() {
  std::uniform_real_distribution<float> dist(0.0f, 1.0f);
  return dist(engine_);
}

std::uint64_t Rng::next_u64() { return engine_(); }

Tensor he_init(const Shape& shape, int fan_in, Rng& rng) {
  if (fan_in < 1) throw std::invalid_argument("he_init: fan_in must be >= 1");
  Tensor t = Tensor::zeros(shape, /*requires_grad=*/true);
  const float stddev = std::sqrt(2.0f / static_cast<float>(fan_in));
  for (float& v : t.values()) v = rng.normal(0.0f, stddev);
  return t;
}

// ---- op helpers --------------------------------------------------------

namespace {

Tensor make_result(const Shape& shape, std::vector<float> data,
                   std::vector<Tensor> parents, const char* op,
                   std::function<void(TensorNode&)> backward_fn) {
  Tensor out = Tensor::from_data(shape, std::move(data));
  bool rg = false;
  for (const Tensor& p : parents) rg = rg || p.requires_grad();
  out.node_->requires_grad = rg;
  out.node_->op = op;
  if (rg) {
    out.node_->parents.reserve(parents.size());
    for (Tensor& p : parents) out.node_->parents.push_back(p.node_);
    out.node_->backward_fn = std::move(backward_fn);
  }
  return out;
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape())
    throw std::invalid_argument(std::string(op) + ": shape mismatch " +
                                shape_str(a.shape()) + " vs " + shape_str(b.shape()));
}

// Collapse a shape around `axis` into (outer, axis_dim, inner).
struct AxisView {
  std::int64_t outer = 1, axis = 1, inner = 1;
};

AxisView axis_view(const Shape& shape, int axis) {
  AxisView v;
  for (int i = 0; i < axis; ++i) v.outer *= shape[static_cast<std::size_t>(i)];
  v.axis = shape[static_cast<std::size_t>(axis)];
  for (std::size_t i = static_cast<std::size_t>(axis) + 1; i < shape.size(); ++i)
    v.inner *= shape[i];
  return v;
}

}  // namespace

// ---- elementwise -------------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  std::vector<float> out(a.values().size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] + b.values()[i];
  return make_result(a.shape(), std::move(out), {a, b}, "add", [](TensorNode& n) {
    auto& pa = *n.parents[0];
    auto& pb = *n.parents[1];
    if (pa.requires_grad)
      for (std::size_t i = 0; i < n.grad.size(); ++i) pa.grad[i] += n.grad[i];
    if (pb.requires_grad)
      for (std::size_t i = 0; i < n.grad.size(); ++i) pb.grad[i] += n.grad[i];
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  std::vector<float> out(a.values().size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] - b.values()[i];
  return make_result(a.shape(), std::move(out), {a, b}, "sub", [](TensorNode& n) {
    auto& pa = *n.parents[0];
    auto& pb = *n.parents[1];
    if (pa.requires_grad)
      for (std::size_t i = 0; i < n.grad.size(); ++i) pa.grad[i] += n.grad[i];
    if (pb.requires_grad)
      for (std::size_t i = 0; i < n.grad.size(); ++i) pb.grad[i] -= n.grad[i];
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  std::vector<float> out(a.values().size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] * b.values()[i];
  return make_result(a.shape(), std::move(out), {a, b}, "mul", [](TensorNode& n) {
    auto& pa = *n.parents[0];
    auto& pb = *n.parents[1];
    if (pa.requires_grad)
      for (std::size_t i = 0; i < n.grad.size(); ++i) pa.grad[i] += n.grad[i] * pb.data[i];
    if (pb.requires_grad)
      for (std::size_t i = 0; i < n.grad.size(); ++i) pb.grad[i] += n.grad[i] * pa.data[i];
  });
}

Tensor add_bias(const Tensor& mat, const Tensor& bias) {
  if (mat.rank() != 2 || bias.rank() != 1 || mat.dim(1) != bias.dim(0))
    throw std::invalid_argument("add_bias: shape mismatch " + shape_str(mat.shape()) +
                                " vs " + shape_str(bias.shape()));
  const int rows = mat.dim(0), cols = mat.dim(1);
  std::vector<float> out(mat.values().size());
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      out[static_cast<std::size_t>(r) * cols + c] =
          mat.values()[static_cast<std::size_t>(r) * cols + c] + bias.values()[static_cast<std::size_t>(c)];
  return make_result(mat.shape(), std::move(out), {mat, bias}, "add_bias",
                     [rows, cols](TensorNode& n) {
                       auto& pm = *n.parents[0];
                       auto& pb = *n.parents[1];
                       if (pm.requires_grad)
                         for (std::size_t i = 0; i < n.grad.size(); ++i) pm.grad[i] += n.grad[i];
                       if (pb.requires_grad)
                         for (int r = 0; r < rows; ++r)
                           for (int c = 0; c < cols; ++c)
                             pb.grad[static_cast<std::size_t>(c)] +=
                                 n.grad[static_cast<std::size_t>(r) * cols + c];
                     });
}

Tensor scalar_mul(const Tensor& a, float s) {
  std::vector<float> out(a.values().size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] * s;
  return make_result(a.shape(), std::move(out), {a}, "scalar_mul", [s](TensorNode& n) {
    auto& pa = *n.parents[0];
    if (pa.requires_grad)
      for (std::size_t i = 0; i < n.grad.size(); ++i) pa.grad[i] += n.grad[i] * s;
  });
}

Tensor neg(const Tensor& a) { return scalar_mul(a, -1.0f); }

// ---- linear algebra ----------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0))
    throw std::invalid_argument("matmul: shape mismatch " + shape_str(a.shape()) +
                                " vs " + shape_str(b.shape()));
  const int m = a.dim(0), k = a.dim(1), n = b.dim(1);
  std::vector<float> out(static_cast<std::size_t>(m) * n, 0.0f);
  const float* pa = a.values().data();
  const float* pb = b.values().data();
  for (int i = 0; i < m; ++i) {
    float* po = out.data() + static_cast<std::size_t>(i) * n;
    for (int kk = 0; kk < k; ++kk) {
      const float av = pa[static_cast<std::size_t>(i) * k + kk];
      const float* pbr = pb + static_cast<std::size_t>(kk) * n;
      for (int j = 0; j < n; ++j) po[j] += av * pbr[j];
    }
  }
  return make_result({m, n}, std::move(out), {a, b}, "matmul", [m, k, n](TensorNode& nd) {
    auto& pa = *nd.parents[0];
    auto& pb = *nd.parents[1];
    const float* g = nd.grad.data();
    if (pa.requires_grad) {
      // dA += G * B^T
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) {
          const float gv = g[static_cast<std::size_t>(i) * n + j];
          for (int kk = 0; kk < k; ++kk)
            pa.grad[static_cast<std::size_t>(i) * k + kk] +=
                gv * pb.data[static_cast<std::size_t>(kk) * n + j];
        }
    }
    if (pb.requires_grad) {
      // dB += A^T * G
      for (int kk = 0; kk < k; ++kk)
        for (int i = 0; i < m; ++i) {
          const float av = pa.data[static_cast<std::size_t>(i) * k + kk];
          const float* gr = g + static_cast<std::size_t>(i) * n;
          float* dbr = pb.grad.data() + static_cast<std::size_t>(kk) * n;
          for (int j = 0; j < n; ++j) dbr[j] += av * gr[j];
        }
    }
  });
}

Tensor transpose(const Tensor& a) {
  if (a.rank() != 2)
    throw std::invalid_argument("transpose: expected rank-2, got " + shape_str(a.shape()));
  const int r = a.dim(0), c = a.dim(1);
  std::vector<float> out(a.values().size());
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j)
      out[static_cast<std::size_t>(j) * r + i] = a.values()[static_cast<std::size_t>(i) * c + j];
  return make_result({c, r}, std::move(out), {a}, "transpose", [r, c](TensorNode& n) {
    auto& pa = *n.parents[0];
    if (!pa.requires_grad) return;
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < c; ++j)
        pa.grad[static_cast<std::size_t>(i) * c + j] += n.grad[static_cast<std::size_t>(j) * r + i];
  });
}

// ---- shape ops ---------------------------------------------------------

Tensor concat(const std::vector<Tensor>& parts, int axis) {
  if (parts.empty()) throw std::invalid_argument("concat: no inputs");
  const int rank = parts[0].rank();
  if (axis < 0 || axis >= rank)
    throw std::invalid_argument("concat: axis " + std::to_string(axis) +
                                " out of range for rank " + std::to_string(rank));
  Shape out_shape = parts[0].shape();
  int axis_total = 0;
  for (const Tensor& p : parts) {
    if (p.rank() != rank)
      throw std::invalid_argument("concat: rank mismatch " + shape_str(p.shape()) +
                                  " vs " + shape_str(parts[0].shape()));
    for (int i = 0; i < rank; ++i)
      if (i != axis && p.dim(i) != out_shape[static_cast<std::size_t>(i)])
        throw std::invalid_argument("concat: shape mismatch " + shape_str(p.shape()) +
                                    " vs " + shape_str(parts[0].shape()));
    axis_total += p.dim(axis);
  }
  out_shape[static_cast<std::size_t>(axis)] = axis_total;
  AxisView ov = axis_view(out_shape, axis);
  std::vector<float> out(static_cast<std::size_t>(numel(out_shape)));
  std::vector<int> offsets;
  int off = 0;
  for (const Tensor& p : parts) {
    offsets.push_back(off);
    AxisView pv = axis_view(p.shape(), axis);
    for (std::int64_t o = 0; o < pv.outer; ++o)
      std::memcpy(out.data() + (o * ov.axis + off) * ov.inner,
                  p.values().data() + o * pv.axis * pv.inner,
                  static_cast<std::size_t>(pv.axis * pv.inner) * sizeof(float));
    off += p.dim(axis);
  }
  std::vector<Tensor> parents(parts.begin(), parts.end());
  std::vector<int> sizes;
  for (const Tensor& p : parts) sizes.push_back(p.dim(axis));
  return make_result(out_shape, std::move(out), parents, "concat",
                     [ov, offsets, sizes](TensorNode& n) {
                       for (std::size_t pi = 0; pi < n.parents.size(); ++pi) {
                         auto& p = *n.parents[pi];
                         if (!p.requires_grad) continue;
                         const std::int64_t pa = sizes[pi];
                         for (std::int64_t o = 0; o < ov.outer; ++o) {
                           const float* src =
                               n.grad.data() + (o * ov.axis + offsets[pi]) * ov.inner;
                           float* dst = p.grad.data() + o * pa * ov.inner;
                           for (std::int64_t i = 0; i < pa * ov.inner; ++i) dst[i] += src[i];
                         }
                       }
                     });
}

Tensor stack(const std::vector<Tensor>& parts, int axis) {
  if (parts.empty()) throw std::invalid_argument("stack: no inputs");
  const Shape base = parts[0].shape();
  const int rank = static_cast<int>(base.size());
  if (axis < 0 || axis > rank)
    throw std::invalid_argument("stack: axis " + std::to_string(axis) +
                                " out of range for rank " + std::to_string(rank));
  for (const Tensor& p : parts)
    if (p.shape() != base)
      throw std::invalid_argument("stack: shape mismatch " + shape_str(p.shape()) +
                                  " vs " + shape_str(base));
  Shape out_shape = base;
  out_shape.insert(out_shape.begin() + axis, static_cast<int>(parts.size()));
  std::int64_t outer = 1, inner = 1;
  for (int i = 0; i < axis; ++i) outer *= base[static_cast<std::size_t>(i)];
  for (std::size_t i = static_cast<std::size_t>(axis); i < base.size(); ++i) inner *= base[i];
  const std::int64_t n_parts = static_cast<std::int64_t>(parts.size());
  std::vector<float> out(static_cast<std::size_t>(numel(out_shape)));
  for (std::int64_t t = 0; t < n_parts; ++t)
    for (std::int64_t o = 0; o < outer; ++o)
      std::memcpy(out.data() + (o * n_parts + t) * inner,
                  parts[static_cast<std::size_t>(t)].values().data() + o * inner,
                  static_cast<std::size_t>(inner) * sizeof(float));
  std::vector<Tensor> parents(parts.begin(), parts.end());
  return make_result(out_shape, std::move(out), parents, "stack",
                     [outer, inner, n_parts](TensorNode& n) {
                       for (std::int64_t t = 0; t < n_parts; ++t) {
                         auto& p = *n.parents[static_cast<std::size_t>(t)];
                         if (!p.requires_grad) continue;
                         for (std::int64_t o = 0; o < outer; ++o) {
                           const float* src = n.grad.data() + (o * n_parts + t) * inner;
                           float* dst = p.grad.data() + o * inner;
                           for (std::int64_t i = 0; i < inner; ++i) dst[i] += src[i];
                         }
                       }
                     });
}

Tensor slice(const Tensor& a, int axis, int start, int len) {
  if (axis < 0 || axis >= a.rank())
    throw std::invalid_argument("slice: axis " + std::to_string(axis) +
                                " out of range for " + shape_str(a.shape()));
  if (start < 0 || len <= 0 || start + len > a.dim(axis))
    throw std::invalid_argument("slice: range [" + std::to_string(start) + "," +
                                std::to_string(start + len) + ") invalid for " +
                                shape_str(a.shape()));
  AxisView v = axis_view(a.shape(), axis);
  Shape out_shape = a.shape();
  out_shape[static_cast<std::size_t>(axis)] = len;
  std::vector<float> out(static_cast<std::size_t>(numel(out_shape)));
  for (std::int64_t o = 0; o < v.outer; ++o)
    std::memcpy(out.data() + o * len * v.inner,
                a.values().data() + (o * v.axis + start) * v.inner,
                static_cast<std::size_t>(len * v.inner) * sizeof(float));
  return make_result(out_shape, std::move(out), {a}, "slice",
                     [v, start, len](TensorNode& n) {
                       auto& p = *n.parents[0];
                       if (!p.requires_grad) return;
                       for (std::int64_t o = 0; o < v.outer; ++o) {
                         const float* src = n.grad.data() + o * len * v.inner;
                         float* dst = p.grad.data() + (o * v.axis + start) * v.inner;
                         for (std::int64_t i = 0; i < static_cast<std::int64_t>(len) * v.inner; ++i)
                           dst[i] += src[i];
                       }
                     });
}

Tensor reshape(const Tensor& a, const Shape& shape) {
  check_shape(shape, "reshape");
  if (numel(shape) != numel(a.shape()))
    throw std::invalid_argument("reshape: cannot view " + shape_str(a.shape()) +
                                " as " + shape_str(shape));
  std::vector<float> out = a.values();
  return make_result(shape, std::move(out), {a}, "reshape", [](TensorNode& n) {
    auto& p = *n.parents[0];
    if (!p.requires_grad) return;
    for (std::size_t i = 0; i < n.grad.size(); ++i) p.grad[i] += n.grad[i];
  });
}

// ---- nonlinearities ----------------------------------------------------

Tensor softmax(const Tensor& a) {
  const Shape& s = a.shape();
  const std::int64_t cols = s.back();
  const std::int64_t rows = numel(s) / cols;
  std::vector<float> out(a.values().size());
  for (std::int64_t r = 0; r < rows; ++r) {
    const float* x = a.values().data() + r * cols;
    float* y = out.data() + r * cols;
    float mx = x[0];
    for (std::int64_t c = 1; c < cols; ++c) mx = std::max(mx, x[c]);
    float z = 0.0f;
    for (std::int64_t c = 0; c < cols; ++c) {
      y[c] = std::exp(x[c] - mx);
      z += y[c];
    }
    for (std::int64_t c = 0; c < cols; ++c) y[c] /= z;
  }
  return make_result(s, std::move(out), {a}, "softmax", [rows, cols](TensorNode& n) {
    auto& p = *n.parents[0];
    if (!p.requires_grad) return;
    for (std::int64_t r = 0; r < rows; ++r) {
      const float* y = n.data.data() + r * cols;
      const float* g = n.grad.data() + r * cols;
      float dot = 0.0f;
      for (std::int64_t c = 0; c < cols; ++c) dot += g[c] * y[c];
      float* dx = p.grad.data() + r * cols;
      for (std::int64_t c = 0; c < cols; ++c) dx[c] += y[c] * (g[c] - dot);
    }
  });
}

Tensor log_softmax(const Tensor& a) {
  const Shape& s = a.shape();
  const std::int64_t cols = s.back();
  const std::int64_t rows = numel(s) / cols;
  std::vector<float> out(a.values().size());
  for (std::int64_t r = 0; r < rows; ++r) {
    const float* x = a.values().data() + r * cols;
    float* y = out.data() + r * cols;
    float mx = x[0];
    for (std::int64_t c = 1; c < cols; ++c) mx = std::max(mx, x[c]);
    float z = 0.0f;
    for (std::int64_t c = 0; c < cols; ++c) z += std::exp(x[c] - mx);
    const float lz = std::log(z) + mx;
    for (std::int64_t c = 0; c < cols; ++c) y[c] = x[c] - lz;
  }
  return make_result(s, std::move(out), {a}, "log_softmax", [rows, cols](TensorNode& n) {
    auto& p = *n.parents[0];
    if (!p.requires_grad) return;
    for (std::int64_t r = 0; r < rows; ++r) {
      const float* y = n.data.data() + r * cols;
      const float* g = n.grad.data() + r * cols;
      float gsum = 0.0f;
      for (std::int64_t c = 0; c < cols; ++c) gsum += g[c];
      float* dx = p.grad.data() + r * cols;
      for (std::int64_t c = 0; c < cols; ++c) dx[c] += g[c] - std::exp(y[c]) * gsum;
    }
  });
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, float eps) {
  const Shape& s = x.shape();
  const std::int64_t cols = s.back();
  if (gamma.rank() != 1 || gamma.dim(0) != cols || beta.rank() != 1 || beta.dim(0) != cols)
    throw std::invalid_argument("layer_norm: affine shape " + shape_str(gamma.shape()) +
                                "/" + shape_str(beta.shape()) + " does not match " +
                                shape_str(s));
  const std::int64_t rows = numel(s) / cols;
  std::vector<float> out(x.values().size());
  std::vector<float> xhat(x.values().size());
  std::vector<float> inv_std(static_cast<std::size_t>(rows));
  for (std::int64_t r = 0; r < rows; ++r) {
    const float* xr = x.values().data() + r * cols;
    double mean = 0.0;
    for (std::int64_t c = 0; c < cols; ++c) mean += xr[c];
    mean /= static_cast<double>(cols);
    double var = 0.0;
    for (std::int64_t c = 0; c < cols; ++c) {
      const double d = xr[c] - mean;
      var += d * d;
    }
    var /= static_cast<double>(cols);
    const float is = static_cast<float>(1.0 / std::sqrt(var + eps));
    inv_std[static_cast<std::size_t>(r)] = is;
    for (std::int64_t c = 0; c < cols; ++c) {
      const float h = static_cast<float>((xr[c] - mean) * is);
      xhat[r * cols + c] = h;
      out[r * cols + c] = gamma.values()[static_cast<std::size_t>(c)] * h +
                          beta.values()[static_cast<std::size_t>(c)];
    }
  }
  return make_result(s, std::move(out), {x, gamma, beta}, "layer_norm",
                     [rows, cols, xhat = std::move(xhat),
                      inv_std = std::move(inv_std)](TensorNode& n) {
                       auto& px = *n.parents[0];
                       auto& pg = *n.parents[1];
                       auto& pb = *n.parents[2];
                       for (std::int64_t r = 0; r < rows; ++r) {
                         const float* g = n.grad.data() + r * cols;
                         const float* h = xhat.data() + r * cols;
                         if (pg.requires_grad)
                           for (std::int64_t c = 0; c < cols; ++c)
                             pg.grad[static_cast<std::size_t>(c)] += g[c] * h[c];
                         if (pb.requires_grad)
                           for (std::int64_t c = 0; c < cols; ++c)
                             pb.grad[static_cast<std::size_t>(c)] += g[c];
                         if (px.requires_grad) {
                           double mean_a = 0.0, mean_ah = 0.0;
                           for (std::int64_t c = 0; c < cols; ++c) {
                             const double a =
                                 static_cast<double>(pg.data[static_cast<std::size_t>(c)]) * g[c];
                             mean_a += a;
                             mean_ah += a * h[c];
                           }
                           mean_a /= static_cast<double>(cols);
                           mean_ah /= static_cast<double>(cols);
                           const double is = inv_std[static_cast<std::size_t>(r)];
                           float* dx = px.grad.data() + r * cols;
                           for (std::int64_t c = 0; c < cols; ++c) {
                             const double a =
                                 static_cast<double>(pg.data[static_cast<std::size_t>(c)]) * g[c];
                             dx[c] += static_cast<float>(is * (a - mean_a - h[c] * mean_ah));
                           }
                         }
                       }
                     });
}

Tensor embedding(const Tensor& table, const std::vector<int>& ids) {
  if (table.rank() != 2)
    throw std::invalid_argument("embedding: table must be rank-2, got " +
                                shape_str(table.shape()));
  const int vocab = table.dim(0), width = table.dim(1);
  for (int id : ids)
    if (id < 0 || id >= vocab)
      throw std::invalid_argument("embedding: id " + std::to_string(id) +
                                  " outside table of " + std::to_string(vocab) + " rows");
  std::vector<float> out(ids.size() * static_cast<std::size_t>(width));
  for (std::size_t i = 0; i < ids.size(); ++i)
    std::memcpy(out.data() + i * static_cast<std::size_t>(width),
                table.values().data() + static_cast<std::size_t>(ids[i]) * width,
                static_cast<std::size_t>(width) * sizeof(float));
  return make_result({static_cast<int>(ids.size()), width}, std::move(out), {table},
                     "embedding", [ids, width](TensorNode& n) {
                       auto& p = *n.parents[0];
                       if (!p.requires_grad) return;
                       for (std::size_t i = 0; i < ids.size(); ++i) {
                         const float* g = n.grad.data() + i * static_cast<std::size_t>(width);
                         float* dst = p.grad.data() + static_cast<std::size_t>(ids[i]) * width;
                         for (int c = 0; c < width; ++c) dst[c] += g[c];
                       }
                     });
}

Tensor dropout(const Tensor& x, float rate, Rng& rng, bool train) {
  if (rate < 0.0f || rate >= 1.0f)
    throw std::invalid_argument("dropout: rate " + std::to_string(rate) +
                                " outside [0,1)");
  if (!train || rate == 0.0f) return x;
  const float scale = 1.0f / (1.0f - rate);
  std::vector<char> keep(x.values().size());
  std::vector<float> out(x.values().size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    keep[i] = rng.uniform() >= rate;
    out[i] = keep[i] ? x.values()[i] * scale : 0.0f;
  }
  return make_result(x.shape(), std::move(out), {x}, "dropout",
                     [keep = std::move(keep), scale](TensorNode& n) {
                       auto& p = *n.parents[0];
                       if (!p.requires_grad) return;
                       for (std::size_t i = 0; i < n.grad.size(); ++i)
                         if (keep[i]) p.grad[i] += n.grad[i] * scale;
                     });
}

Tensor relu(const Tensor& x) {
  std::vector<float> out(x.values().size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::max(0.0f, x.values()[i]);
  return make_result(x.shape(), std::move(out), {x}, "relu", [](TensorNode& n) {
    auto& p = *n.parents[0];
    if (!p.requires_grad) return;
    for (std::size_t i = 0; i < n.grad.size(); ++i)
      if (p.data[i] > 0.0f) p.grad[i] += n.grad[i];
  });
}

Tensor gelu(const Tensor& x) {
  std::vector<float> out(x.values().size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const float v = x.values()[i];
    out[i] = 0.5f * v * (1.0f + std::erf(v * 0.70710678f));
  }
  return make_result(x.shape(), std::move(out), {x}, "gelu", [](TensorNode& n) {
    auto& p = *n.parents[0];
    if (!p.requires_grad) return;
    constexpr float inv_sqrt2 = 0.70710678f;
    constexpr float inv_sqrt2pi = 0.39894228f;
    for (std::size_t i = 0; i < n.grad.size(); ++i) {
      const float v = p.data[i];
      const float cdf = 0.5f * (1.0f + std::erf(v * inv_sqrt2));
      const float pdf = inv_sqrt2pi * std::exp(-0.5f * v * v);
      p.grad[i] += n.grad[i] * (cdf + v * pdf);
    }
  });
}

Tensor sum(const Tensor& x) {
  float total = 0.0f;
  for (float v : x.values()) total += v;
  return make_result({1}, {total}, {x}, "sum", [](TensorNode& n) {
    auto& p = *n.parents[0];
    if (!p.requires_grad) return;
    const float g = n.grad[0];
    for (std::size_t i = 0; i < p.grad.size(); ++i) p.grad[i] += g;
  });
}

Tensor gather_rows(const Tensor& x, const std::vector<int>& index) {
  if (x.rank() != 2)
    throw std::invalid_argument("gather_rows: expected rank-2, got " +
                                shape_str(x.shape()));
  const int rows = x.dim(0), cols = x.dim(1);
  if (static_cast<int>(index.size()) != rows)
    throw std::invalid_argument("gather_rows: index length " +
                                std::to_string(index.size()) + " vs " +
                                std::to_string(rows) + " rows");
  std::vector<float> out(static_cast<std::size_t>(rows));
  for (int r = 0; r < rows; ++r) {
    const int c = index[static_cast<std::size_t>(r)];
    if (c < 0 || c >= cols)
      throw std::invalid_argument("gather_rows: index " + std::to_string(c) +
                                  " outside row of width " + std::to_string(cols));
    out[static_cast<std::size_t>(r)] = x.values()[static_cast<std::size_t>(r) * cols + c];
  }
  return make_result({rows}, std::move(out), {x}, "gather_rows",
                     [index, cols](TensorNode& n) {
                       auto& p = *n.parents[0];
                       if (!p.requires_grad) return;
                       for (std::size_t r = 0; r < index.size(); ++r)
                         p.grad[r * static_cast<std::size_t>(cols) +
                                static_cast<std::size_t>(index[r])] += n.grad[r];
                     });
}

// ---- backward sweep ----------------------------------------------------

void backward(Tensor loss) {
  if (!loss.defined() || loss.size() != 1)
    throw std::invalid_argument("backward: loss must be a defined scalar");
  if (loss.node_->backward_done)
    throw std::runtime_error("backward: already ran on this graph; rebuild the forward pass");
  loss.node_->backward_done = true;
  if (!loss.node_->requires_grad) return;

  // Iterative post-order DFS over the requires_grad subgraph.
  std::vector<TensorNode*> topo;
  std::unordered_set<TensorNode*> visited;
  struct Frame {
    TensorNode* node;
    std::size_t next_child;
  };
  std::vector<Frame> stack{{loss.node_.get(), 0}};
  visited.insert(loss.node_.get());
  while (!stack.empty()) {
    Frame& f = stack.back();
    if (f.next_child < f.node->parents.size()) {
      TensorNode* child = f.node->parents[f.next_child++].get();
      if (child->requires_grad && !visited.count(child)) {
        visited.insert(child);
        stack.push_back({child, 0});
      }
    } else {
      topo.push_back(f.node);
      stack.pop_back();
    }
  }

  loss.node_->ensure_grad();
  loss.node_->grad[0] = 1.0f;
  for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
    TensorNode* n = *it;
    if (!n->backward_fn) continue;
    n->ensure_grad();
    for (auto& p : n->parents)
      if (p->requires_grad) p->ensure_grad();
    n->backward_fn(*n);
  }
}

}  // namespace lagr
