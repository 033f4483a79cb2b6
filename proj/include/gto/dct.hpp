#pragma once

// Orthonormal 2-D DCT-II on square blocks, zigzag scan, and the uniform-grid
// Laplacian eigenvalues the DCT basis diagonalizes.

#include <cmath>
#include <numbers>
#include <vector>

#include "gto/graph_core.hpp"

namespace gto {

// Row k holds the k-th orthonormal DCT-II basis vector of length n.
inline Matrix dct_matrix(int n) {
  if (n < 1) fail(Errc::invalid_parameter, "DCT size must be >= 1");
  Matrix c(n, n);
  for (int k = 0; k < n; ++k) {
    const double s = k == 0 ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n);
    for (int i = 0; i < n; ++i) c(k, i) = s * std::cos(std::numbers::pi * (2 * i + 1) * k / (2.0 * n));
  }
  return c;
}

inline Matrix dct2_forward(const Matrix& block) {
  if (block.rows() != block.cols())
    fail(Errc::dimension, "DCT needs a square block, got " + std::to_string(block.rows()) + "x" +
                              std::to_string(block.cols()));
  const Matrix c = dct_matrix(static_cast<int>(block.rows()));
  return c * block * c.transpose();
}

inline Matrix dct2_inverse(const Matrix& coeffs) {
  if (coeffs.rows() != coeffs.cols())
    fail(Errc::dimension, "DCT needs a square block, got " + std::to_string(coeffs.rows()) + "x" +
                              std::to_string(coeffs.cols()));
  const Matrix c = dct_matrix(static_cast<int>(coeffs.rows()));
  return c.transpose() * coeffs * c;
}

// Raster positions (row * n + col) in JPEG zigzag order.
inline std::vector<int> zigzag_order(int n) {
  std::vector<int> order;
  order.reserve(static_cast<std::size_t>(n * n));
  for (int d = 0; d < 2 * n - 1; ++d) {
    const int lo = std::max(0, d - n + 1);
    const int hi = std::min(d, n - 1);
    if (d % 2 == 0) {
      for (int r = hi; r >= lo; --r) order.push_back(r * n + (d - r));
    } else {
      for (int r = lo; r <= hi; ++r) order.push_back(r * n + (d - r));
    }
  }
  return order;
}

// Eigenvalue of the unit-weight grid Laplacian paired with DCT frequency
// (a, b), in raster order.
inline Vector dct_grid_eigenvalues(int n) {
  Vector lam(n * n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      const double sa = std::sin(std::numbers::pi * a / (2.0 * n));
      const double sb = std::sin(std::numbers::pi * b / (2.0 * n));
      lam[a * n + b] = 4.0 * sa * sa + 4.0 * sb * sb;
    }
  return lam;
}

}  // namespace gto
