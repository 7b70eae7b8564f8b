#pragma once

#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

namespace dycop::detail {

// Gaussian elimination with partial pivoting for small dense systems
// (row-major A, n = b.size()). Singular pivots zero out the coordinate.
inline std::vector<double> solve_dense(std::vector<double> A, std::vector<double> b) {
  const std::size_t n = b.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::fabs(A[r * n + col]) > std::fabs(A[piv * n + col])) piv = r;
    }
    if (std::fabs(A[piv * n + col]) < 1e-12) {
      b[col] = 0.0;
      continue;
    }
    if (piv != col) {
      for (std::size_t c = 0; c < n; ++c) std::swap(A[col * n + c], A[piv * n + c]);
      std::swap(b[col], b[piv]);
    }
    for (std::size_t r = col + 1; r < n; ++r) {
      const double fac = A[r * n + col] / A[col * n + col];
      for (std::size_t c = col; c < n; ++c) A[r * n + c] -= fac * A[col * n + c];
      b[r] -= fac * b[col];
    }
  }
  std::vector<double> x(n, 0.0);
  for (std::size_t i = n; i-- > 0;) {
    double acc = b[i];
    for (std::size_t j = i + 1; j < n; ++j) acc -= A[i * n + j] * x[j];
    x[i] = std::fabs(A[i * n + i]) < 1e-12 ? 0.0 : acc / A[i * n + i];
  }
  return x;
}

}  // namespace dycop::detail
