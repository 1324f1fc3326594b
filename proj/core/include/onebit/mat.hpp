#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace onebit {

using VecD = std::vector<double>;
using Cplx = std::complex<double>;
using VecC = std::vector<Cplx>;

// Dense row-major real matrix.
struct Mat {
  std::size_t rows = 0;
  std::size_t cols = 0;
  VecD data;

  Mat() = default;
  Mat(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  Mat transposed() const {
    Mat t(cols, rows);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c) t(c, r) = (*this)(r, c);
    return t;
  }
};

// Dense row-major complex matrix.
struct CMat {
  std::size_t rows = 0;
  std::size_t cols = 0;
  VecC data;

  CMat() = default;
  CMat(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, Cplx(0, 0)) {}

  Cplx& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  Cplx operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

// v = M x. Accumulates over columns in ascending order; the tape kernels sum
// in the same order, which the bit-exact reduction tests rely on.
inline VecD matvec(const Mat& m, const VecD& x) {
  if (x.size() != m.cols) throw std::invalid_argument("matvec: dimension mismatch");
  VecD v(m.rows, 0.0);
  for (std::size_t r = 0; r < m.rows; ++r) {
    double acc = 0.0;
    const double* row = &m.data[r * m.cols];
    for (std::size_t c = 0; c < m.cols; ++c) acc += row[c] * x[c];
    v[r] = acc;
  }
  return v;
}

// v = M^T x, accumulating over rows in ascending order.
inline VecD matvec_t(const Mat& m, const VecD& x) {
  if (x.size() != m.rows) throw std::invalid_argument("matvec_t: dimension mismatch");
  VecD v(m.cols, 0.0);
  for (std::size_t r = 0; r < m.rows; ++r) {
    const double xr = x[r];
    const double* row = &m.data[r * m.cols];
    for (std::size_t c = 0; c < m.cols; ++c) v[c] += row[c] * xr;
  }
  return v;
}

inline double dot(const VecD& a, const VecD& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

inline double norm2(const VecD& a) {
  double acc = 0.0;
  for (double v : a) acc += v * v;
  return acc;
}

// Logistic sigmoid; shared by the classic detectors and the tape primitive so
// the two paths agree bitwise.
inline double sigmoid_scalar(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Scales v to Euclidean norm eta, computing the factor eta/||v|| first. The
// tape normalization primitive uses the same factored form.
inline void normalize_to(VecD& v, double eta) {
  const double n = std::sqrt(norm2(v));
  if (n == 0.0) throw std::domain_error("normalize_to: zero vector");
  const double f = eta / n;
  for (double& x : v) x *= f;
}

}  // namespace onebit
