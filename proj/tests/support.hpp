#pragma once

// Shared fixtures and independent reference computations for the tests.

#include <cmath>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "gto/gto.hpp"

namespace gto::test {

inline std::string data_path(const std::string& name) { return std::string(GTO_TEST_DATA_DIR) + "/" + name; }

inline Vector random_weights(std::mt19937& rng, int m, double lo = 1e-3) {
  std::uniform_real_distribution<double> d(lo, 1.0);
  Vector w(m);
  for (int i = 0; i < m; ++i) w[i] = d(rng);
  return w;
}

inline Vector random_vector(std::mt19937& rng, Eigen::Index n, double scale = 1.0) {
  std::normal_distribution<double> d(0.0, scale);
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = d(rng);
  return v;
}

// B diag(w) B^T from a dense incidence matrix built straight from the grid
// coordinates, independent of GridGraph's edge list.
inline Matrix dense_laplacian(int side, const Vector& w) {
  const int n = side * side;
  Matrix b = Matrix::Zero(n, w.size());
  int e = 0;
  for (int r = 0; r < side; ++r)
    for (int c = 0; c + 1 < side; ++c, ++e) {
      b(r * side + c, e) = 1.0;
      b(r * side + c + 1, e) = -1.0;
    }
  for (int r = 0; r + 1 < side; ++r)
    for (int c = 0; c < side; ++c, ++e) {
      b(r * side + c, e) = 1.0;
      b((r + 1) * side + c, e) = -1.0;
    }
  return b * w.asDiagonal() * b.transpose();
}

// Textbook O(n^4) orthonormal 2-D DCT-II.
inline Matrix naive_dct2(const Matrix& x) {
  const int n = static_cast<int>(x.rows());
  Matrix out(n, n);
  for (int u = 0; u < n; ++u)
    for (int v = 0; v < n; ++v) {
      const double cu = u == 0 ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n);
      const double cv = v == 0 ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n);
      double acc = 0.0;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          acc += x(i, j) * std::cos(std::numbers::pi * (2 * i + 1) * u / (2.0 * n)) *
                 std::cos(std::numbers::pi * (2 * j + 1) * v / (2.0 * n));
      out(u, v) = cu * cv * acc;
    }
  return out;
}

// Random 8-bit block drawn from a few structural families.
inline Vector random_block(std::mt19937& rng, int side = 16) {
  const int n = side * side;
  Vector u(n);
  std::uniform_int_distribution<int> kind(0, 4), level(0, 255);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int k = kind(rng);
  const double a = level(rng), b = level(rng);
  const double angle = unit(rng) * 2.0 * std::numbers::pi;
  const double offset = (unit(rng) - 0.5) * side;
  for (int r = 0; r < side; ++r)
    for (int c = 0; c < side; ++c) {
      const double x = c - side / 2.0, y = r - side / 2.0;
      double v = 0.0;
      switch (k) {
        case 0: v = a; break;
        case 1: v = (x * std::cos(angle) + y * std::sin(angle) > offset) ? a : b; break;
        case 2: v = a + (b - a) * (c + r) / (2.0 * side); break;
        case 3: v = level(rng); break;
        default: v = 0.5 * (a + b) + 0.5 * (a - b) * std::sin(0.7 * c * std::cos(angle) + 0.7 * r * std::sin(angle)); break;
      }
      u[r * side + c] = std::clamp(std::round(v), 0.0, 255.0);
    }
  return u;
}

inline Image image_from_block(const Vector& u, int side = 16) {
  Image img(side, side);
  for (int i = 0; i < side * side; ++i) img.pixels[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(u[i]);
  return img;
}

// Piecewise-constant image of random polygonal regions with `levels` gray
// values (even-odd fill, later polygons on top).
inline Image synthetic_depth(std::uint32_t seed, int size = 256, int levels = 4, int polygons = 10) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<std::uint8_t> palette;
  for (int i = 0; i < levels; ++i) palette.push_back(static_cast<std::uint8_t>(20 + (215 * i) / std::max(1, levels - 1)));
  Image img(size, size, palette[0]);
  for (int p = 0; p < polygons; ++p) {
    const int verts = 3 + static_cast<int>(unit(rng) * 5);
    const double cx = unit(rng) * size, cy = unit(rng) * size;
    const double radius = (0.1 + 0.3 * unit(rng)) * size;
    std::vector<double> xs, ys;
    for (int v = 0; v < verts; ++v) {
      const double t = 2.0 * std::numbers::pi * (v + 0.8 * unit(rng)) / verts;
      const double r = radius * (0.5 + 0.5 * unit(rng));
      xs.push_back(cx + r * std::cos(t));
      ys.push_back(cy + r * std::sin(t));
    }
    const std::uint8_t value = palette[static_cast<std::size_t>(unit(rng) * levels) % palette.size()];
    for (int y = 0; y < size; ++y)
      for (int x = 0; x < size; ++x) {
        bool inside = false;
        for (int i = 0, j = verts - 1; i < verts; j = i++) {
          if ((ys[i] > y) != (ys[j] > y) && x < (xs[j] - xs[i]) * (y - ys[i]) / (ys[j] - ys[i]) + xs[i]) inside = !inside;
        }
        if (inside) img.at(y, x) = value;
      }
  }
  return img;
}

inline Image random_image(std::mt19937& rng, int w, int h) {
  Image img(w, h);
  const int side = 16;
  for (int by = 0; by < (h + side - 1) / side; ++by)
    for (int bx = 0; bx < (w + side - 1) / side; ++bx) {
      const Vector u = random_block(rng, side);
      for (int r = 0; r < side; ++r)
        for (int c = 0; c < side; ++c) {
          const int y = by * side + r, x = bx * side + c;
          if (y < h && x < w) img.at(y, x) = static_cast<std::uint8_t>(u[r * side + c]);
        }
    }
  return img;
}

}  // namespace gto::test
