#pragma once

#include <cassert>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace oracle_noise {

inline double dot(std::span<const double> a, std::span<const double> b) noexcept {
  assert(a.size() == b.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

inline double norm(std::span<const double> a) noexcept { return std::sqrt(dot(a, a)); }

/// Dense row-major matrix of doubles.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t r, std::size_t c) noexcept { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data[r * cols + c]; }

  std::span<double> row(std::size_t r) noexcept { return {data.data() + r * cols, cols}; }
  std::span<const double> row(std::size_t r) const noexcept { return {data.data() + r * cols, cols}; }

  friend bool operator==(const Matrix&, const Matrix&) = default;
};

/// y = A x
inline void matvec(const Matrix& a, std::span<const double> x, std::span<double> y) noexcept {
  assert(x.size() == a.cols && y.size() == a.rows);
  for (std::size_t r = 0; r < a.rows; ++r) y[r] = dot(a.row(r), x);
}

/// y += Aᵀ x
inline void matvec_transposed_add(const Matrix& a, std::span<const double> x, std::span<double> y) noexcept {
  assert(x.size() == a.rows && y.size() == a.cols);
  for (std::size_t r = 0; r < a.rows; ++r) {
    const double xr = x[r];
    const auto row = a.row(r);
    for (std::size_t c = 0; c < a.cols; ++c) y[c] += row[c] * xr;
  }
}

}  // namespace oracle_noise
