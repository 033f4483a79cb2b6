#pragma once

// Block classification and edge-weight learning.
//
// The learned graph minimizes
//
//   f(w) = sum_e c_e w_e + alpha * || Psi_d^T w ||_1 - beta * sum_e log w_e,   0 < w <= 1
//
// with c_e = (u_i - u_j)^2 the squared pixel difference across edge e and
// Psi_d the GFT basis of the dual graph.

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "gto/graph_core.hpp"

namespace gto {

enum class CodingMode { natural, depth };

enum class BlockLabel { smooth, dominant_gradient, complex, smooth_or_weak, sharp_edge };

struct BlockClass {
  BlockLabel label = BlockLabel::smooth;
  double mu1 = 0.0;  // larger structure-tensor eigenvalue
  double mu2 = 0.0;

  // 0-based class index within the block's coding mode.
  int index() const {
    switch (label) {
      case BlockLabel::smooth:
      case BlockLabel::smooth_or_weak: return 0;
      case BlockLabel::dominant_gradient:
      case BlockLabel::sharp_edge: return 1;
      case BlockLabel::complex: return 2;
    }
    return 0;
  }
};

inline int class_count(CodingMode mode) { return mode == CodingMode::natural ? 3 : 2; }

// Thresholds on structure-tensor eigenvalues, in squared 8-bit gradient units.
struct ClassThresholds {
  double low = 25.0;    // natural mode
  double high = 400.0;  // depth mode
};

struct LearnParams {
  double alpha = 0.0;
  double beta = 1.0;
  int max_iter = 500;
  // Relative tolerance: the solver stops once both the duality gap and the
  // projected subgradient norm are <= tol * (1 + |f|).
  double tol = 1e-4;

  void validate() const {
    if (!(alpha >= 0.0)) fail(Errc::invalid_parameter, "alpha must be >= 0");
    if (!(beta > 0.0)) fail(Errc::invalid_parameter, "beta must be > 0");
    if (!(tol > 0.0)) fail(Errc::invalid_parameter, "tol must be > 0");
    if (max_iter < 1) fail(Errc::invalid_parameter, "max_iter must be >= 1");
  }
};

namespace detail {

inline int square_side(std::size_t n) {
  const int side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(n))));
  if (side < 1 || static_cast<std::size_t>(side) * static_cast<std::size_t>(side) != n)
    fail(Errc::dimension, "block of " + std::to_string(n) + " pixels is not square");
  return side;
}

}  // namespace detail

// Structure tensor over central differences with replicated borders,
// normalized by the pixel count.
inline BlockClass classify_block(std::span<const double> block, CodingMode mode,
                                 const ClassThresholds& thresholds = {}) {
  const int side = detail::square_side(block.size());
  auto at = [&](int r, int c) {
    r = std::clamp(r, 0, side - 1);
    c = std::clamp(c, 0, side - 1);
    return block[static_cast<std::size_t>(r * side + c)];
  };
  double txx = 0.0, txy = 0.0, tyy = 0.0;
  for (int r = 0; r < side; ++r) {
    for (int c = 0; c < side; ++c) {
      const double gx = 0.5 * (at(r, c + 1) - at(r, c - 1));
      const double gy = 0.5 * (at(r + 1, c) - at(r - 1, c));
      txx += gx * gx;
      txy += gx * gy;
      tyy += gy * gy;
    }
  }
  const double n = static_cast<double>(block.size());
  txx /= n;
  txy /= n;
  tyy /= n;
  const double mean = 0.5 * (txx + tyy);
  const double radius = std::sqrt(0.25 * (txx - tyy) * (txx - tyy) + txy * txy);

  BlockClass out;
  out.mu1 = mean + radius;
  out.mu2 = std::max(0.0, mean - radius);
  if (mode == CodingMode::natural) {
    if (out.mu1 < thresholds.low)
      out.label = BlockLabel::smooth;
    else if (out.mu2 < thresholds.low)
      out.label = BlockLabel::dominant_gradient;
    else
      out.label = BlockLabel::complex;
  } else {
    out.label = out.mu1 < thresholds.high ? BlockLabel::smooth_or_weak : BlockLabel::sharp_edge;
  }
  return out;
}

inline LearnParams default_params(const BlockClass& c) {
  LearnParams p;
  switch (c.label) {
    case BlockLabel::smooth: p.alpha = 100.0; p.beta = 1.0; break;
    case BlockLabel::dominant_gradient: p.alpha = 500.0; p.beta = 1.0; break;
    case BlockLabel::complex: p.alpha = 800.0; p.beta = 1.0; break;
    case BlockLabel::smooth_or_weak: p.alpha = 40.0; p.beta = 0.02; break;
    case BlockLabel::sharp_edge: p.alpha = 400.0; p.beta = 1.0; break;
  }
  return p;
}

// c_e = (u_i - u_j)^2, so that u^T B diag(w) B^T u = c^T w.
inline Vector edge_costs(const GridGraph& g, const GraphSignal& u) {
  detail::check_size(u.size(), g.node_count(), "node signal");
  Vector c(g.edge_count());
  for (int e = 0; e < g.edge_count(); ++e) {
    const double d = u[g.edges()[e].first] - u[g.edges()[e].second];
    c[e] = d * d;
  }
  return c;
}

namespace detail {

inline double log_barrier_sum(const Vector& w) {
  double acc = 0.0;
  for (Eigen::Index e = 0; e < w.size(); ++e) acc += std::log(w[e]);
  return acc;
}

// f(w) given the precomputed dual coefficients v = Psi_d^T w.
inline double objective_from_parts(const Vector& c, const Vector& w, const Vector& v, const LearnParams& p) {
  return c.dot(w) + p.alpha * v.lpNorm<1>() - p.beta * log_barrier_sum(w);
}

inline void check_positive(const EdgeWeights& w) {
  for (Eigen::Index e = 0; e < w.size(); ++e)
    if (!(w[e] > 0.0)) fail(Errc::domain, "edge weight " + std::to_string(e) + " is not positive");
}

}  // namespace detail

inline double objective(const GridGraph& g, const DualGraph& d, const GraphSignal& u, const EdgeWeights& w,
                        const LearnParams& p) {
  detail::check_size(w.size(), g.edge_count(), "edge weights");
  detail::check_size(d.node_count, g.edge_count(), "dual graph");
  detail::check_positive(w);
  const Vector c = edge_costs(g, u);
  const Vector v = d.spectrum.vectors.transpose() * w;
  return detail::objective_from_parts(c, w, v, p);
}

struct LearnResult {
  EdgeWeights weights;
  double objective = 0.0;
  // Projected subgradient norm at `weights` (see learn_weights).
  double stationarity = 0.0;
  // f(weights) minus the best dual bound found; an upper bound on the
  // suboptimality of `weights`.
  double duality_gap = 0.0;
  int iterations = 0;
  bool converged = false;
  // Objective of the solver's accepted iterate, one entry per iteration,
  // starting with the initial point.
  std::vector<double> history;
};

namespace detail {

// The dual of the weight problem over s in [-1, 1]^M is
//
//   G(s) = sum_e phi(c_e + alpha (Psi_d s)_e),
//   phi(a) = a                       if a <= beta,
//          = beta - beta log(beta/a) otherwise,
//
// and every dual point maps to the feasible primal point w_e = min(1, beta / a_e).
struct DualPoint {
  Vector a;
  Vector w;
  Vector curvature;  // -phi''(a_e)
  double value = 0.0;
};

inline DualPoint evaluate_dual(const Vector& c, const Matrix& psi, const Vector& s, const LearnParams& p) {
  DualPoint d;
  d.a = c;
  d.a.noalias() += p.alpha * (psi * s);
  const Eigen::Index m = c.size();
  d.w.resize(m);
  d.curvature.resize(m);
  for (Eigen::Index e = 0; e < m; ++e) {
    const double a = d.a[e];
    if (a > p.beta) {
      d.w[e] = p.beta / a;
      d.curvature[e] = p.beta / (a * a);
      d.value += p.beta - p.beta * std::log(p.beta / a);
    } else {
      d.w[e] = 1.0;
      d.curvature[e] = 0.0;
      d.value += a;
    }
  }
  return d;
}

inline double sign_of(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

// Projected subgradient norm of f at w, with v = Psi_d^T w. The l1 part uses
// sign(v_k) where |v_k| exceeds `zero_tol` and the dual estimate s_k on the
// remaining (numerically zero) coordinates. Coordinates at the bound w_e = 1
// only count a positive component.
inline double stationarity_residual(const Vector& c, const Vector& w, const Vector& v, const Vector& s,
                                    const Matrix& psi, const LearnParams& p, double zero_tol) {
  Vector g = c;
  for (Eigen::Index e = 0; e < w.size(); ++e) g[e] -= p.beta / w[e];
  if (p.alpha > 0.0) {
    Vector sub(v.size());
    for (Eigen::Index k = 0; k < v.size(); ++k) sub[k] = std::abs(v[k]) > zero_tol ? sign_of(v[k]) : s[k];
    g.noalias() += p.alpha * (psi * sub);
  }
  double acc = 0.0;
  for (Eigen::Index e = 0; e < w.size(); ++e) {
    const double r = w[e] < 1.0 ? g[e] : std::max(g[e], 0.0);
    acc += r * r;
  }
  return std::sqrt(acc);
}

// Solves H_FF x = r for the dual Hessian H = alpha^2 Psi^T diag(curv) Psi
// restricted to the free coordinates. Because Psi is orthogonal the full
// inverse is alpha^-2 Psi^T diag(1/curv) Psi, so when few coordinates are
// bound the reduced system goes through a Schur complement on the bound set;
// otherwise H_FF is formed directly.
inline Vector reduced_newton_solve(const Matrix& psi, const Vector& curv, double alpha,
                                   const std::vector<int>& free_set, const std::vector<int>& bound_set,
                                   const Vector& r) {
  const double a2 = alpha * alpha;
  const auto m = psi.rows();
  if (bound_set.size() < free_set.size()) {
    const Vector inv = curv.cwiseInverse();
    Vector embedded = Vector::Zero(m);
    for (std::size_t i = 0; i < free_set.size(); ++i) embedded[free_set[i]] = r[static_cast<Eigen::Index>(i)];
    Vector y = psi.transpose() * inv.cwiseProduct(psi * embedded) / a2;
    if (!bound_set.empty()) {
      const Matrix pa = psi(Eigen::all, bound_set);
      const Matrix kaa = pa.transpose() * inv.asDiagonal() * pa / a2;
      Vector ya(static_cast<Eigen::Index>(bound_set.size()));
      for (std::size_t i = 0; i < bound_set.size(); ++i) ya[static_cast<Eigen::Index>(i)] = y[bound_set[i]];
      const Vector t = kaa.ldlt().solve(ya);
      y -= psi.transpose() * inv.cwiseProduct(pa * t) / a2;
    }
    Vector x(static_cast<Eigen::Index>(free_set.size()));
    for (std::size_t i = 0; i < free_set.size(); ++i) x[static_cast<Eigen::Index>(i)] = y[free_set[i]];
    return x;
  }
  const Matrix scaled = curv.cwiseSqrt().asDiagonal() * psi(Eigen::all, free_set);
  const Matrix h = a2 * (scaled.transpose() * scaled);
  return h.ldlt().solve(r);
}

}  // namespace detail

// Minimizes f over 0 < w <= 1.
//
// alpha = 0 separates per edge and is solved in closed form,
// w_e = min(1, beta / c_e). Otherwise the dual above is maximized by a
// projected Newton method over the box (Bertsekas-style epsilon-active
// sets, Armijo search along the projection arc). Each dual iterate yields a
// feasible primal candidate; the solver's primal iterate moves to a
// candidate only when it does not increase f, starting from w0 = 0.5.
// Convergence requires both the duality gap and the projected subgradient
// norm to fall below tol * (1 + |f|). On non-convergence the best iterate
// is returned with converged = false.
inline LearnResult learn_weights(const GridGraph& g, const DualGraph& d, const GraphSignal& u,
                                 const LearnParams& p, bool record_history = false) {
  p.validate();
  detail::check_size(d.node_count, g.edge_count(), "dual graph");
  const Vector c = edge_costs(g, u);
  const Matrix& psi = d.spectrum.vectors;
  const Eigen::Index m = c.size();

  LearnResult out;
  out.weights = Vector::Constant(m, 0.5);
  Vector best_v = psi.transpose() * out.weights;
  out.objective = detail::objective_from_parts(c, out.weights, best_v, p);
  if (record_history) out.history.push_back(out.objective);

  auto consider = [&](const Vector& w, const Vector& v) {
    const double f = detail::objective_from_parts(c, w, v, p);
    if (f <= out.objective) {
      out.objective = f;
      out.weights = w;
      best_v = v;
    }
    if (record_history) out.history.push_back(out.objective);
  };

  if (p.alpha == 0.0) {
    Vector w(m);
    for (Eigen::Index e = 0; e < m; ++e) w[e] = c[e] > p.beta ? p.beta / c[e] : 1.0;
    consider(w, psi.transpose() * w);
    out.iterations = 1;
    out.duality_gap = 0.0;
    out.stationarity = detail::stationarity_residual(c, out.weights, best_v, Vector::Zero(m), psi, p, 0.0);
    out.converged = out.stationarity <= p.tol * (1.0 + std::abs(out.objective));
    return out;
  }

  constexpr double kArmijo = 1e-4;
  constexpr double kMaxActiveWidth = 1e-3;
  constexpr int kMaxBacktracks = 60;

  Vector s = Vector::Zero(m);
  detail::DualPoint dual = detail::evaluate_dual(c, psi, s, p);
  for (int it = 1; it <= p.max_iter; ++it) {
    out.iterations = it;
    const Vector v = psi.transpose() * dual.w;
    consider(dual.w, v);

    const double scale = 1.0 + std::abs(out.objective);
    out.duality_gap = out.objective - dual.value;
    // Coefficients whose l1 contribution is below tol / M in total count as
    // zero: the dual-recovered primal carries ~1e-8 noise in coefficients
    // that are exactly zero at the optimum.
    const double zero_tol = std::max(1e-9 * std::max(1.0, best_v.cwiseAbs().maxCoeff()),
                                     p.tol * scale / (p.alpha * static_cast<double>(m)));
    out.stationarity = detail::stationarity_residual(c, out.weights, best_v, s, psi, p, zero_tol);
    if (out.duality_gap <= p.tol * scale && out.stationarity <= p.tol * scale) {
      out.converged = true;
      break;
    }

    // Gradient of the minimized objective -G.
    const Vector grad = -p.alpha * v;
    const double width =
        std::min(kMaxActiveWidth, (s - (s - grad).cwiseMax(-1.0).cwiseMin(1.0)).norm());
    std::vector<int> free_set, bound_set;
    for (Eigen::Index k = 0; k < m; ++k) {
      const bool bound = (s[k] <= -1.0 + width && grad[k] > 0.0) || (s[k] >= 1.0 - width && grad[k] < 0.0);
      (bound ? bound_set : free_set).push_back(static_cast<int>(k));
    }

    Vector curv = dual.curvature.array() + (1e-10 * dual.curvature.maxCoeff() + 1e-300);
    Vector dir = Vector::Zero(m);
    if (!bound_set.empty()) {
      const Vector hdiag = p.alpha * p.alpha * (psi.array().square().matrix().transpose() * curv);
      for (int k : bound_set) dir[k] = -grad[k] / hdiag[k];
    }
    if (!free_set.empty()) {
      Vector r(static_cast<Eigen::Index>(free_set.size()));
      for (std::size_t i = 0; i < free_set.size(); ++i) r[static_cast<Eigen::Index>(i)] = -grad[free_set[i]];
      const Vector x = detail::reduced_newton_solve(psi, curv, p.alpha, free_set, bound_set, r);
      for (std::size_t i = 0; i < free_set.size(); ++i) dir[free_set[i]] = x[static_cast<Eigen::Index>(i)];
    }

    bool moved = false;
    double step = 1.0;
    for (int ls = 0; ls < kMaxBacktracks; ++ls, step *= 0.5) {
      Vector trial = (s + step * dir).cwiseMax(-1.0).cwiseMin(1.0);
      detail::DualPoint next = detail::evaluate_dual(c, psi, trial, p);
      // Both values are of -G: sufficient decrease along the projection arc.
      if (-next.value <= -dual.value - kArmijo * grad.dot(s - trial)) {
        s = std::move(trial);
        dual = std::move(next);
        moved = true;
        break;
      }
    }
    if (!moved) break;
  }
  return out;
}

struct OracleResult {
  EdgeWeights weights;
  double objective = 0.0;
};

// Exhaustive search over {step, 2 step, ..., 1}^M. Validation only.
inline OracleResult oracle_grid_search(const GridGraph& g, const DualGraph& d, const GraphSignal& u,
                                       const LearnParams& p, double step) {
  const int m = g.edge_count();
  if (m > 6) fail(Errc::too_large, "oracle grid search supports at most 6 edges, got " + std::to_string(m));
  if (m == 0) fail(Errc::empty_graph, "oracle grid search needs at least one edge");
  if (!(step > 0.0) || step > 1.0) fail(Errc::invalid_parameter, "grid step must lie in (0, 1]");
  p.validate();

  std::vector<double> grid;
  for (long i = 1;; ++i) {
    const double t = static_cast<double>(i) * step;
    if (t > 1.0 + 1e-12) break;
    grid.push_back(std::min(t, 1.0));
  }
  if (grid.back() < 1.0) grid.push_back(1.0);

  const Vector c = edge_costs(g, u);
  const Matrix& psi = d.spectrum.vectors;
  // Separable part of the objective per edge and grid value.
  std::vector<std::vector<double>> sep(static_cast<std::size_t>(m), std::vector<double>(grid.size()));
  for (int e = 0; e < m; ++e)
    for (std::size_t i = 0; i < grid.size(); ++i) sep[e][i] = c[e] * grid[i] - p.beta * std::log(grid[i]);

  std::vector<std::size_t> idx(static_cast<std::size_t>(m), 0), best_idx(static_cast<std::size_t>(m), 0);
  std::vector<std::vector<double>> partial(static_cast<std::size_t>(m + 1), std::vector<double>(m, 0.0));
  std::vector<double> partial_sep(static_cast<std::size_t>(m + 1), 0.0);
  double best = std::numeric_limits<double>::infinity();

  auto recurse = [&](auto&& self, int e) -> void {
    if (e == m) {
      double l1 = 0.0;
      for (int k = 0; k < m; ++k) l1 += std::abs(partial[m][k]);
      const double f = partial_sep[m] + p.alpha * l1;
      if (f < best) {
        best = f;
        best_idx = idx;
      }
      return;
    }
    for (std::size_t i = 0; i < grid.size(); ++i) {
      idx[e] = i;
      partial_sep[e + 1] = partial_sep[e] + sep[e][i];
      for (int k = 0; k < m; ++k) partial[e + 1][k] = partial[e][k] + grid[i] * psi(e, k);
      self(self, e + 1);
    }
  };
  recurse(recurse, 0);

  OracleResult out;
  out.weights.resize(m);
  for (int e = 0; e < m; ++e) out.weights[e] = grid[best_idx[e]];
  out.objective = objective(g, d, u, out.weights, p);
  return out;
}

// Classical Gaussian similarity graph: w_e = exp(-(u_i - u_j)^2 / sigma^2)
// with sigma = 0.15 * max_e |u_i - u_j|. Constant blocks get unit weights.
inline EdgeWeights gaussian_weights(const GridGraph& g, const GraphSignal& u) {
  const Vector c = edge_costs(g, u);
  const double max_sq = c.size() ? c.maxCoeff() : 0.0;
  if (max_sq == 0.0) return EdgeWeights::Ones(g.edge_count());
  const double sigma = 0.15 * std::sqrt(max_sq);
  const double inv = 1.0 / (sigma * sigma);
  EdgeWeights w(g.edge_count());
  for (int e = 0; e < g.edge_count(); ++e) w[e] = std::exp(-c[e] * inv);
  return w;
}

}  // namespace gto
