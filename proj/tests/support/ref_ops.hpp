#pragma once

// Double-precision scalar re-implementations used as oracles in gradient
// and forward tests. Deliberately written with plain loops, independent of
// the float32 tensor path they are checking.

#include <cmath>
#include <cstddef>
#include <vector>

namespace ref {

using Vec = std::vector<double>;

inline Vec matmul(const Vec& a, int m, int k, const Vec& b, int n) {
  Vec out(static_cast<std::size_t>(m) * n, 0.0);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) {
      double acc = 0.0;
      for (int kk = 0; kk < k; ++kk)
        acc += a[static_cast<std::size_t>(i) * k + kk] * b[static_cast<std::size_t>(kk) * n + j];
      out[static_cast<std::size_t>(i) * n + j] = acc;
    }
  return out;
}

inline Vec transpose(const Vec& a, int rows, int cols) {
  Vec out(a.size());
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j)
      out[static_cast<std::size_t>(j) * rows + i] = a[static_cast<std::size_t>(i) * cols + j];
  return out;
}

inline Vec add(const Vec& a, const Vec& b) {
  Vec out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

inline Vec add_bias(const Vec& mat, int rows, int cols, const Vec& bias) {
  Vec out(mat.size());
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      out[static_cast<std::size_t>(r) * cols + c] =
          mat[static_cast<std::size_t>(r) * cols + c] + bias[static_cast<std::size_t>(c)];
  return out;
}

inline Vec scalar_mul(const Vec& a, double s) {
  Vec out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * s;
  return out;
}

inline Vec softmax_rows(const Vec& a, int rows, int cols) {
  Vec out(a.size());
  for (int r = 0; r < rows; ++r) {
    const double* x = a.data() + static_cast<std::size_t>(r) * cols;
    double* y = out.data() + static_cast<std::size_t>(r) * cols;
    double mx = x[0];
    for (int c = 1; c < cols; ++c) mx = std::max(mx, x[c]);
    double z = 0.0;
    for (int c = 0; c < cols; ++c) {
      y[c] = std::exp(x[c] - mx);
      z += y[c];
    }
    for (int c = 0; c < cols; ++c) y[c] /= z;
  }
  return out;
}

inline Vec log_softmax_rows(const Vec& a, int rows, int cols) {
  Vec out(a.size());
  for (int r = 0; r < rows; ++r) {
    const double* x = a.data() + static_cast<std::size_t>(r) * cols;
    double* y = out.data() + static_cast<std::size_t>(r) * cols;
    double mx = x[0];
    for (int c = 1; c < cols; ++c) mx = std::max(mx, x[c]);
    double z = 0.0;
    for (int c = 0; c < cols; ++c) z += std::exp(x[c] - mx);
    const double lz = std::log(z) + mx;
    for (int c = 0; c < cols; ++c) y[c] = x[c] - lz;
  }
  return out;
}

inline Vec layer_norm_rows(const Vec& x, int rows, int cols, const Vec& gamma,
                           const Vec& beta, double eps = 1e-5) {
  Vec out(x.size());
  for (int r = 0; r < rows; ++r) {
    const double* xr = x.data() + static_cast<std::size_t>(r) * cols;
    double mean = 0.0;
    for (int c = 0; c < cols; ++c) mean += xr[c];
    mean /= cols;
    double var = 0.0;
    for (int c = 0; c < cols; ++c) var += (xr[c] - mean) * (xr[c] - mean);
    var /= cols;
    const double s = std::sqrt(var + eps);
    for (int c = 0; c < cols; ++c)
      out[static_cast<std::size_t>(r) * cols + c] =
          gamma[static_cast<std::size_t>(c)] * ((xr[c] - mean) / s) +
          beta[static_cast<std::size_t>(c)];
  }
  return out;
}

inline Vec relu(const Vec& a) {
  Vec out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] > 0.0 ? a[i] : 0.0;
  return out;
}

inline Vec gelu(const Vec& a) {
  Vec out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    out[i] = 0.5 * a[i] * (1.0 + std::erf(a[i] / std::sqrt(2.0)));
  return out;
}

inline Vec embedding(const Vec& table, int width, const std::vector<int>& ids) {
  Vec out(ids.size() * static_cast<std::size_t>(width));
  for (std::size_t i = 0; i < ids.size(); ++i)
    for (int c = 0; c < width; ++c)
      out[i * width + c] = table[static_cast<std::size_t>(ids[i]) * width + c];
  return out;
}

inline double dot(const Vec& a, const Vec& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

inline double sum(const Vec& a) {
  double acc = 0.0;
  for (double v : a) acc += v;
  return acc;
}

// Relative-error comparison used by the gradient checks: passes when the
// difference is within tol of the larger magnitude, or both values are
// essentially zero.
inline bool grad_close(double analytic, double fd, double tol, double zero_floor = 1e-7) {
  const double mag = std::max(std::abs(analytic), std::abs(fd));
  if (mag <= zero_floor) return true;
  return std::abs(analytic - fd) <= tol * mag;
}

}  // namespace ref
