#pragma once

// Grid graphs, their duals, Laplacians and graph Fourier transforms.

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gto/error.hpp"

namespace gto {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Node-domain or edge-domain signal.
using GraphSignal = Vector;
// Edge weights, each in (0, 1].
using EdgeWeights = Vector;

struct Edge {
  int first;   // lower node index
  int second;  // higher node index
};

// 4-connected rows x cols grid (square blocks use rows == cols; a single row
// gives a path). Edges are ordered: all horizontal edges in row-major order,
// then all vertical edges in row-major order.
class GridGraph {
 public:
  explicit GridGraph(int side) : GridGraph(side, side) {}

  GridGraph(int rows, int cols) : rows_(rows), cols_(cols) {
    if (rows < 1 || cols < 1)
      fail(Errc::invalid_parameter,
           "grid dimensions must be >= 1, got " + std::to_string(rows) + "x" + std::to_string(cols));
    edges_.reserve(static_cast<std::size_t>(rows * (cols - 1) + (rows - 1) * cols));
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c + 1 < cols; ++c) edges_.push_back({node(r, c), node(r, c + 1)});
    for (int r = 0; r + 1 < rows; ++r)
      for (int c = 0; c < cols; ++c) edges_.push_back({node(r, c), node(r + 1, c)});
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  int side() const { return cols_; }
  int node_count() const { return rows_ * cols_; }
  int edge_count() const { return static_cast<int>(edges_.size()); }
  int node(int row, int col) const { return row * cols_ + col; }
  const std::vector<Edge>& edges() const { return edges_; }

  // Dense N x M incidence matrix; column e holds +1 at the lower endpoint and
  // -1 at the higher one.
  Matrix incidence() const {
    Matrix b = Matrix::Zero(node_count(), edge_count());
    for (int e = 0; e < edge_count(); ++e) {
      b(edges_[e].first, e) = 1.0;
      b(edges_[e].second, e) = -1.0;
    }
    return b;
  }

 private:
  int rows_;
  int cols_;
  std::vector<Edge> edges_;
};

inline GridGraph build_grid_incidence(int side) {
  if (side < 1) fail(Errc::invalid_parameter, "grid side must be >= 1, got " + std::to_string(side));
  return GridGraph(side);
}

namespace detail {

inline void check_size(Eigen::Index got, Eigen::Index want, const char* what) {
  if (got != want)
    fail(Errc::dimension, std::string(what) + ": expected length " + std::to_string(want) + ", got " +
                              std::to_string(got));
}

}  // namespace detail

// L = B diag(w) B^T, assembled edge by edge.
inline Matrix build_laplacian(const GridGraph& g, const EdgeWeights& w) {
  detail::check_size(w.size(), g.edge_count(), "edge weights");
  Matrix l = Matrix::Zero(g.node_count(), g.node_count());
  for (int e = 0; e < g.edge_count(); ++e) {
    const double we = w[e];
    if (!(we > 0.0)) fail(Errc::domain, "edge weight " + std::to_string(e) + " is not positive");
    const auto [i, j] = g.edges()[e];
    l(i, i) += we;
    l(j, j) += we;
    l(i, j) -= we;
    l(j, i) -= we;
  }
  return l;
}

// Eigenpairs of a symmetric matrix. Eigenvalues ascend; column l of `vectors`
// pairs with values[l].
struct Spectrum {
  Vector values;
  Matrix vectors;

  Eigen::Index size() const { return values.size(); }
};

namespace detail {

inline constexpr double kSignEpsilon = 1e-12;

// Relative width under which consecutive eigenvalues are treated as one
// repeated eigenvalue.
inline constexpr double kTieTolerance = 1e-10;

inline void fix_sign(Eigen::Ref<Vector> col) {
  for (Eigen::Index i = 0; i < col.size(); ++i) {
    if (std::abs(col[i]) > kSignEpsilon) {
      if (col[i] < 0.0) col = -col;
      return;
    }
  }
}

// Lexicographically larger column first; with a zero matrix this keeps the
// identity in its natural order.
inline bool column_precedes(const Matrix& m, Eigen::Index a, Eigen::Index b) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    if (m(i, a) != m(i, b)) return m(i, a) > m(i, b);
  }
  return a < b;
}

inline void canonicalize(Spectrum& s) {
  const Eigen::Index n = s.size();
  for (Eigen::Index l = 0; l < n; ++l) fix_sign(s.vectors.col(l));
  if (n < 2) return;

  const double scale = std::max(1.0, s.values.cwiseAbs().maxCoeff());
  const double tie = kTieTolerance * scale;
  Eigen::Index start = 0;
  while (start < n) {
    Eigen::Index end = start + 1;
    while (end < n && s.values[end] - s.values[end - 1] <= tie) ++end;
    if (end - start > 1) {
      std::vector<Eigen::Index> order(static_cast<std::size_t>(end - start));
      std::iota(order.begin(), order.end(), start);
      std::sort(order.begin(), order.end(),
                [&](Eigen::Index a, Eigen::Index b) { return column_precedes(s.vectors, a, b); });
      Matrix block(n, end - start);
      for (std::size_t k = 0; k < order.size(); ++k) block.col(static_cast<Eigen::Index>(k)) = s.vectors.col(order[k]);
      s.vectors.middleCols(start, end - start) = block;
    }
    start = end;
  }
}

}  // namespace detail

// Deterministic symmetric eigendecomposition (Householder tridiagonalization
// followed by implicit symmetric QR), canonicalized so that both ends of the
// codec derive the same basis: in each column the first entry with magnitude
// above 1e-12 is positive, and columns sharing a repeated eigenvalue are
// ordered lexicographically (larger first).
inline Spectrum eigendecompose(const Matrix& l) {
  if (l.rows() != l.cols())
    fail(Errc::dimension, "eigendecompose needs a square matrix, got " + std::to_string(l.rows()) + "x" +
                              std::to_string(l.cols()));
  if (l.size() == 0) return {};
  const double scale = std::max(1.0, l.cwiseAbs().maxCoeff());
  const double asym = (l - l.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-9 * scale) fail(Errc::domain, "matrix is not symmetric (max asymmetry " + std::to_string(asym) + ")");

  Eigen::SelfAdjointEigenSolver<Matrix> solver(l, Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success) {
    const long max_iter = 30L * static_cast<long>(l.rows());
    fail(Errc::numerical, "symmetric QR did not converge within " + std::to_string(max_iter) + " iterations");
  }
  Spectrum s{solver.eigenvalues(), solver.eigenvectors()};
  detail::canonicalize(s);
  return s;
}

inline GraphSignal gft_forward(const Spectrum& s, const GraphSignal& x) {
  detail::check_size(x.size(), s.size(), "gft_forward signal");
  return s.vectors.transpose() * x;
}

inline GraphSignal gft_inverse(const Spectrum& s, const GraphSignal& xhat) {
  detail::check_size(xhat.size(), s.size(), "gft_inverse coefficients");
  return s.vectors * xhat;
}

// x^T L x evaluated as sum_e w_e (x_i - x_j)^2.
inline double smoothness(const GridGraph& g, const EdgeWeights& w, const GraphSignal& x) {
  detail::check_size(w.size(), g.edge_count(), "edge weights");
  detail::check_size(x.size(), g.node_count(), "node signal");
  double acc = 0.0;
  for (int e = 0; e < g.edge_count(); ++e) {
    const double d = x[g.edges()[e].first] - x[g.edges()[e].second];
    acc += w[e] * d * d;
  }
  return acc;
}

// Unweighted line graph of a grid: one node per primal edge, two nodes
// adjacent when their edges share an endpoint.
struct DualGraph {
  int node_count = 0;
  std::vector<std::vector<int>> neighbors;
  Matrix laplacian;
  Spectrum spectrum;

  Matrix adjacency() const {
    Matrix a = Matrix::Zero(node_count, node_count);
    for (int e = 0; e < node_count; ++e)
      for (int f : neighbors[e]) a(e, f) = 1.0;
    return a;
  }
};

inline DualGraph build_dual_graph(const GridGraph& g) {
  const int m = g.edge_count();
  if (m == 0) fail(Errc::empty_graph, "cannot build the dual of a graph without edges");

  std::vector<std::vector<int>> incident(static_cast<std::size_t>(g.node_count()));
  for (int e = 0; e < m; ++e) {
    incident[g.edges()[e].first].push_back(e);
    incident[g.edges()[e].second].push_back(e);
  }

  DualGraph d;
  d.node_count = m;
  d.neighbors.resize(static_cast<std::size_t>(m));
  for (const auto& at_node : incident)
    for (int e : at_node)
      for (int f : at_node)
        if (e != f) d.neighbors[e].push_back(f);
  for (auto& nb : d.neighbors) std::sort(nb.begin(), nb.end());

  d.laplacian = Matrix::Zero(m, m);
  for (int e = 0; e < m; ++e) {
    d.laplacian(e, e) = static_cast<double>(d.neighbors[e].size());
    for (int f : d.neighbors[e]) d.laplacian(e, f) = -1.0;
  }
  d.spectrum = eigendecompose(d.laplacian);
  return d;
}

// Shared per-geometry grid and dual graph; built once per block side.
struct GridGeometry {
  GridGraph grid;
  DualGraph dual;
};

inline const GridGeometry& geometry_for(int side) {
  static std::mutex mutex;
  static std::map<int, std::unique_ptr<const GridGeometry>> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(side);
  if (it == cache.end()) {
    GridGraph g(side);
    DualGraph d = build_dual_graph(g);
    it = cache.emplace(side, std::make_unique<const GridGeometry>(GridGeometry{std::move(g), std::move(d)})).first;
  }
  return *it->second;
}

}  // namespace gto
