#pragma once

// Block codec: per-block graph learning, quantized dual-GFT graph coding,
// rate-distortion selection between the learned GFT and the DCT, bitstream
// serialization, and the decoder.

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gto/dct.hpp"
#include "gto/entropy.hpp"
#include "gto/graph_core.hpp"
#include "gto/graph_learn.hpp"
#include "gto/image.hpp"
#include "gto/parallel.hpp"

namespace gto {

// How a GFT candidate graph is obtained. dct_only never offers a GFT (the
// transform flag is still coded, always 0).
enum class GraphMethod { learned, gaussian, dct_only };

inline constexpr double kMinReconWeight = 1e-4;
inline constexpr int kMaxBlockSide = 32;

inline std::vector<double> default_delta_set() { return {0.01, 0.02, 0.04, 0.08, 0.12, 0.2, 0.35, 0.6}; }

inline int default_m_tilde(CodingMode mode) { return mode == CodingMode::natural ? 64 : 256; }

inline const char* mode_name(CodingMode mode) { return mode == CodingMode::natural ? "natural" : "depth"; }

struct EncoderConfig {
  double q = 10.0;
  CodingMode mode = CodingMode::natural;
  int block_side = 16;
  std::vector<double> delta_set = default_delta_set();
  int m_tilde = 0;  // 0: 64 in natural mode, 256 in depth mode
  double gamma_scale = 0.85 / 12.0;
  ClassThresholds thresholds;
  std::optional<double> alpha;  // overrides the per-class defaults
  std::optional<double> beta;
  int max_iter = 500;
  double tol = 1e-4;
  GraphMethod method = GraphMethod::learned;
  unsigned threads = 0;

  int edge_count() const { return 2 * block_side * (block_side - 1); }
  int effective_m_tilde() const { return m_tilde > 0 ? m_tilde : std::min(default_m_tilde(mode), edge_count()); }
  double gamma(double step) const { return gamma_scale * step * step; }

  LearnParams params_for(const BlockClass& c) const {
    LearnParams p = default_params(c);
    if (alpha) p.alpha = *alpha;
    if (beta) p.beta = *beta;
    p.max_iter = max_iter;
    p.tol = tol;
    return p;
  }

  void validate() const {
    if (!(q > 0.0) || !std::isfinite(q)) fail(Errc::config, "q must be a positive number");
    if (static_cast<float>(q) <= 0.0f || !std::isfinite(static_cast<float>(q)))
      fail(Errc::config, "q is not representable as a 32-bit float");
    if (block_side < 2 || block_side > kMaxBlockSide)
      fail(Errc::config, "block_side must lie in [2, " + std::to_string(kMaxBlockSide) + "]");
    if (delta_set.empty() || delta_set.size() > 256) fail(Errc::config, "delta_set must hold 1 to 256 steps");
    for (std::size_t i = 0; i < delta_set.size(); ++i) {
      if (!(delta_set[i] > 0.0) || !std::isfinite(delta_set[i])) fail(Errc::config, "delta_set entries must be > 0");
      if (i > 0 && !(delta_set[i] > delta_set[i - 1])) fail(Errc::config, "delta_set must be strictly increasing");
    }
    if (m_tilde < 0 || m_tilde > edge_count())
      fail(Errc::config, "m_tilde must lie in [1, " + std::to_string(edge_count()) + "]");
    if (!(gamma_scale > 0.0)) fail(Errc::config, "gamma_scale must be > 0");
    if (!(thresholds.low >= 0.0) || !(thresholds.high >= 0.0)) fail(Errc::config, "thresholds must be >= 0");
    if (alpha && !(*alpha >= 0.0)) fail(Errc::config, "alpha must be >= 0");
    if (beta && !(*beta > 0.0)) fail(Errc::config, "beta must be > 0");
    if (max_iter < 1) fail(Errc::config, "max_iter must be >= 1");
    if (!(tol > 0.0)) fail(Errc::config, "tol must be > 0");
  }
};

// The step actually used by both sides: q as stored in the header.
inline double stored_q(double q) { return static_cast<double>(static_cast<float>(q)); }

inline double rd_cost(double distortion, double rate_bits, double gamma) { return distortion + gamma * rate_bits; }

// Eq.-(7)-style rate proxy: sum_l lambda_l xhat_l^2 (equals u^T L u).
inline double theoretical_rate_rc(const Spectrum& s, const GraphSignal& u) {
  const GraphSignal xhat = gft_forward(s, u);
  return s.values.dot(xhat.cwiseProduct(xhat));
}

// l1 norm of the dual-GFT coefficients of w.
inline double theoretical_rate_rg(const DualGraph& d, const EdgeWeights& w) {
  detail::check_size(w.size(), d.node_count, "edge weights");
  return (d.spectrum.vectors.transpose() * w).lpNorm<1>();
}

// ---------------------------------------------------------------------------
// Shared encoder/decoder reconstruction

// Edge weights decoded from quantized reduced dual coefficients, clamped to
// [1e-4, 1] so the graph stays connected.
inline EdgeWeights reconstruct_weights(const GridGeometry& geo, std::span<const std::int64_t> kw, double delta) {
  const Matrix& psi = geo.dual.spectrum.vectors;
  const auto mt = static_cast<Eigen::Index>(kw.size());
  Vector coeffs(mt);
  for (Eigen::Index i = 0; i < mt; ++i) coeffs[i] = static_cast<double>(kw[static_cast<std::size_t>(i)]) * delta;
  Vector w = psi.leftCols(mt) * coeffs;
  for (Eigen::Index e = 0; e < w.size(); ++e) w[e] = std::clamp(w[e], kMinReconWeight, 1.0);
  return w;
}

inline Spectrum graph_spectrum(const GridGeometry& geo, std::span<const std::int64_t> kw, double delta) {
  return eigendecompose(build_laplacian(geo.grid, reconstruct_weights(geo, kw, delta)));
}

inline std::uint8_t to_pixel(double x) { return static_cast<std::uint8_t>(std::clamp(std::round(x), 0.0, 255.0)); }

inline std::vector<std::uint8_t> reconstruct_gft(const Spectrum& s, std::span<const std::int64_t> ku, double q) {
  Vector coeffs(s.size());
  for (Eigen::Index i = 0; i < coeffs.size(); ++i) coeffs[i] = static_cast<double>(ku[static_cast<std::size_t>(i)]) * q;
  const Vector x = s.vectors * coeffs;
  std::vector<std::uint8_t> out(static_cast<std::size_t>(x.size()));
  for (Eigen::Index i = 0; i < x.size(); ++i) out[static_cast<std::size_t>(i)] = to_pixel(x[i]);
  return out;
}

// Transform data shared by all DCT-coded blocks of one size.
struct DctBasis {
  int side = 0;
  Matrix c;                // dct_matrix(side)
  std::vector<int> scan;   // zigzag raster positions
  Vector scan_eigenvalues; // grid eigenvalue per scan position
};

inline const DctBasis& dct_basis(int side) {
  static std::mutex mutex;
  static std::map<int, std::unique_ptr<const DctBasis>> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(side);
  if (it == cache.end()) {
    auto b = std::make_unique<DctBasis>();
    b->side = side;
    b->c = dct_matrix(side);
    b->scan = zigzag_order(side);
    const Vector lam = dct_grid_eigenvalues(side);
    b->scan_eigenvalues.resize(side * side);
    for (int i = 0; i < side * side; ++i) b->scan_eigenvalues[i] = lam[b->scan[static_cast<std::size_t>(i)]];
    it = cache.emplace(side, std::move(b)).first;
  }
  return *it->second;
}

// DCT coefficients of a block in zigzag scan order.
inline Vector dct_scan_coefficients(const DctBasis& b, const Vector& u) {
  const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> block(
      u.data(), b.side, b.side);
  const Matrix x = b.c * block * b.c.transpose();
  Vector out(b.side * b.side);
  for (int i = 0; i < b.side * b.side; ++i) {
    const int pos = b.scan[static_cast<std::size_t>(i)];
    out[i] = x(pos / b.side, pos % b.side);
  }
  return out;
}

inline std::vector<std::uint8_t> reconstruct_dct(const DctBasis& b, std::span<const std::int64_t> ku, double q) {
  Matrix x = Matrix::Zero(b.side, b.side);
  for (int i = 0; i < b.side * b.side; ++i) {
    const int pos = b.scan[static_cast<std::size_t>(i)];
    x(pos / b.side, pos % b.side) = static_cast<double>(ku[static_cast<std::size_t>(i)]) * q;
  }
  const Matrix y = b.c.transpose() * x * b.c;
  std::vector<std::uint8_t> out(static_cast<std::size_t>(b.side * b.side));
  for (int r = 0; r < b.side; ++r)
    for (int c = 0; c < b.side; ++c) out[static_cast<std::size_t>(r * b.side + c)] = to_pixel(y(r, c));
  return out;
}

// ---------------------------------------------------------------------------
// Block syntax

// Context sets carried across the blocks of one codestream.
struct CodingContexts {
  BitplaneContexts coeffs;
  BitplaneContexts graph_lastpos;
  SigMapContexts graph_sigmap;
};

struct BlockSyntax {
  bool use_gft = false;
  int delta_index = 0;
  std::vector<std::int64_t> kw;  // reduced dual coefficients (GFT only)
  std::vector<std::int64_t> ku;  // coefficients in scan order
};

inline int delta_index_bits(std::size_t delta_count) { return bits_for(delta_count - 1); }

// Flag, delta index and dual coefficients (GFT only), then the coefficients.
template <BitEncoder Enc>
void write_block(Enc& enc, CodingContexts& ctx, const BlockSyntax& b, CodingMode mode, std::size_t delta_count,
                 std::size_t m_tilde) {
  enc.encode_bypass(b.use_gft ? 1 : 0);
  if (b.use_gft) {
    encode_bits(enc, static_cast<std::uint64_t>(b.delta_index), delta_index_bits(delta_count));
    if (mode == CodingMode::natural)
      encode_lastpos_bitplane(enc, ctx.graph_lastpos, b.kw, m_tilde);
    else
      encode_sigmap(enc, ctx.graph_sigmap, b.kw, m_tilde);
  }
  encode_lastpos_bitplane(enc, ctx.coeffs, b.ku, b.ku.size());
}

template <BitDecoder Dec>
BlockSyntax read_block(Dec& dec, CodingContexts& ctx, CodingMode mode, std::size_t delta_count, std::size_t m_tilde,
                       std::size_t n) {
  BlockSyntax b;
  b.use_gft = dec.decode_bypass() != 0;
  if (b.use_gft) {
    b.delta_index = static_cast<int>(decode_bits(dec, delta_index_bits(delta_count)));
    if (static_cast<std::size_t>(b.delta_index) >= delta_count)
      fail(Errc::decode, "delta index " + std::to_string(b.delta_index) + " out of range");
    b.kw = mode == CodingMode::natural ? decode_lastpos_bitplane(dec, ctx.graph_lastpos, m_tilde)
                                       : decode_sigmap(dec, ctx.graph_sigmap, m_tilde);
  }
  b.ku = decode_lastpos_bitplane(dec, ctx.coeffs, n);
  return b;
}

// ---------------------------------------------------------------------------
// Per-block analysis

// Encoder decision for one block at one q.
struct BlockChoice {
  BlockSyntax syntax;
  std::vector<std::uint8_t> reconstruction;
  double distortion = 0.0;  // ||xhat - xhat_q||^2 in the chosen transform
  double est_bits = 0.0;    // fresh-context estimate used for the decision
  double cost = 0.0;
  double dct_cost = 0.0;
  double rc = 0.0;          // sum_l lambda_l k_l^2 in the chosen transform
  double rg = 0.0;          // ||k_w||_1
};

struct BlockAnalysis {
  BlockClass cls;
  bool solver_converged = true;
  int solver_iterations = 0;
  std::vector<BlockChoice> per_q;
};

namespace detail {

struct Coded {
  std::vector<std::int64_t> k;
  double distortion = 0.0;
};

inline Coded quantize_coeffs(const Vector& x, double q) {
  Coded c;
  c.k = quantize(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())), q).indices;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double e = x[i] - static_cast<double>(c.k[static_cast<std::size_t>(i)]) * q;
    c.distortion += e * e;
  }
  return c;
}

inline double weighted_energy(const Vector& lambda, std::span<const std::int64_t> k) {
  double acc = 0.0;
  for (std::size_t i = 0; i < k.size(); ++i) {
    const double v = static_cast<double>(k[i]);
    acc += lambda[static_cast<Eigen::Index>(i)] * v * v;
  }
  return acc;
}

inline double l1(std::span<const std::int64_t> k) {
  double acc = 0.0;
  for (auto v : k) acc += std::abs(static_cast<double>(v));
  return acc;
}

}  // namespace detail

// Learns (or builds) the block's graph once, then for every q picks the
// delta step and transform with the lowest D + gamma R. Eigendecompositions
// depend only on the delta step and are shared across q.
inline BlockAnalysis analyze_block(const Vector& u, const EncoderConfig& cfg, std::span<const double> q_list) {
  const int side = cfg.block_side;
  const GridGeometry& geo = geometry_for(side);
  const DctBasis& dct = dct_basis(side);
  const auto n = static_cast<std::size_t>(side * side);
  const auto mt = static_cast<std::size_t>(cfg.effective_m_tilde());
  detail::check_size(u.size(), static_cast<Eigen::Index>(n), "block");

  BlockAnalysis out;
  out.cls = classify_block(std::span<const double>(u.data(), n), cfg.mode, cfg.thresholds);
  out.per_q.resize(q_list.size());

  // DCT branch.
  const Vector dct_x = dct_scan_coefficients(dct, u);
  for (std::size_t qi = 0; qi < q_list.size(); ++qi) {
    const double q = q_list[qi];
    detail::Coded coded = detail::quantize_coeffs(dct_x, q);
    BlockSyntax syn;
    syn.ku = std::move(coded.k);
    BitCostEstimator est;
    CodingContexts ctx;
    write_block(est, ctx, syn, cfg.mode, cfg.delta_set.size(), mt);
    BlockChoice& ch = out.per_q[qi];
    ch.distortion = coded.distortion;
    ch.est_bits = est.bits();
    ch.cost = rd_cost(ch.distortion, ch.est_bits, cfg.gamma(q));
    ch.dct_cost = ch.cost;
    ch.rc = detail::weighted_energy(dct.scan_eigenvalues, syn.ku);
    ch.syntax = std::move(syn);
  }
  if (cfg.method == GraphMethod::dct_only) {
    for (std::size_t qi = 0; qi < q_list.size(); ++qi)
      out.per_q[qi].reconstruction = reconstruct_dct(dct, out.per_q[qi].syntax.ku, q_list[qi]);
    return out;
  }

  EdgeWeights w;
  if (cfg.method == GraphMethod::learned) {
    LearnResult r = learn_weights(geo.grid, geo.dual, u, cfg.params_for(out.cls));
    out.solver_converged = r.converged;
    out.solver_iterations = r.iterations;
    w = std::move(r.weights);
  } else {
    w = gaussian_weights(geo.grid, u);
  }
  const Vector what = geo.dual.spectrum.vectors.transpose() * w;
  const Vector what_r = what.head(static_cast<Eigen::Index>(mt));

  // Steps that decode to identical weights share one eigendecomposition.
  std::vector<EdgeWeights> seen_weights;
  std::vector<Spectrum> spectra;
  std::vector<double> best_cost(q_list.size(), std::numeric_limits<double>::infinity());
  std::vector<BlockChoice> best(q_list.size());
  std::vector<std::size_t> best_spectrum(q_list.size(), 0);
  for (std::size_t di = 0; di < cfg.delta_set.size(); ++di) {
    const double delta = cfg.delta_set[di];
    std::vector<std::int64_t> kw = quantize(std::span<const double>(what_r.data(), mt), delta).indices;
    EdgeWeights wt = reconstruct_weights(geo, kw, delta);
    std::size_t si = 0;
    while (si < seen_weights.size() && seen_weights[si] != wt) ++si;
    if (si == seen_weights.size()) {
      spectra.push_back(eigendecompose(build_laplacian(geo.grid, wt)));
      seen_weights.push_back(std::move(wt));
    }
    const Spectrum& s = spectra[si];
    const Vector x = s.vectors.transpose() * u;
    for (std::size_t qi = 0; qi < q_list.size(); ++qi) {
      const double q = q_list[qi];
      detail::Coded coded = detail::quantize_coeffs(x, q);
      BlockSyntax syn;
      syn.use_gft = true;
      syn.delta_index = static_cast<int>(di);
      syn.kw = kw;
      syn.ku = std::move(coded.k);
      BitCostEstimator est;
      CodingContexts ctx;
      write_block(est, ctx, syn, cfg.mode, cfg.delta_set.size(), mt);
      const double cost = rd_cost(coded.distortion, est.bits(), cfg.gamma(q));
      if (cost < best_cost[qi]) {
        best_cost[qi] = cost;
        BlockChoice& ch = best[qi];
        ch.distortion = coded.distortion;
        ch.est_bits = est.bits();
        ch.cost = cost;
        ch.rc = detail::weighted_energy(s.values, syn.ku);
        ch.rg = detail::l1(syn.kw);
        ch.syntax = std::move(syn);
        best_spectrum[qi] = si;
      }
    }
  }

  for (std::size_t qi = 0; qi < q_list.size(); ++qi) {
    BlockChoice& ch = out.per_q[qi];
    // Ties go to the DCT.
    if (best_cost[qi] < ch.cost) {
      const double dct_cost = ch.cost;
      ch = std::move(best[qi]);
      ch.dct_cost = dct_cost;
      ch.reconstruction = reconstruct_gft(spectra[best_spectrum[qi]], ch.syntax.ku, q_list[qi]);
    } else {
      ch.reconstruction = reconstruct_dct(dct, ch.syntax.ku, q_list[qi]);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Container

inline constexpr std::array<std::uint8_t, 4> kMagic = {'G', 'T', 'O', '1'};
inline constexpr std::size_t kHeaderSize = 14;

struct StreamHeader {
  int width = 0;
  int height = 0;
  int block_side = 16;
  CodingMode mode = CodingMode::natural;
  float q = 0.0f;
};

inline void write_header(std::vector<std::uint8_t>& out, const StreamHeader& h) {
  out.insert(out.end(), kMagic.begin(), kMagic.end());
  auto u16 = [&](int v) {
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v & 0xFF));
  };
  u16(h.width);
  u16(h.height);
  out.push_back(static_cast<std::uint8_t>(h.block_side));
  out.push_back(h.mode == CodingMode::natural ? 0 : 1);
  const auto bits = std::bit_cast<std::uint32_t>(h.q);
  for (int s = 24; s >= 0; s -= 8) out.push_back(static_cast<std::uint8_t>(bits >> s));
}

inline StreamHeader read_header(std::span<const std::uint8_t> data) {
  if (data.size() < kHeaderSize) fail(Errc::decode, "stream is shorter than the header");
  if (!std::equal(kMagic.begin(), kMagic.end(), data.begin())) fail(Errc::decode, "bad magic (expected GTO1)");
  StreamHeader h;
  h.width = (data[4] << 8) | data[5];
  h.height = (data[6] << 8) | data[7];
  h.block_side = data[8];
  if (data[9] > 1) fail(Errc::decode, "unknown coding mode " + std::to_string(data[9]));
  h.mode = data[9] == 0 ? CodingMode::natural : CodingMode::depth;
  std::uint32_t bits = 0;
  for (int i = 10; i < 14; ++i) bits = (bits << 8) | data[static_cast<std::size_t>(i)];
  h.q = std::bit_cast<float>(bits);
  if (h.width == 0 || h.height == 0) fail(Errc::decode, "zero image dimension");
  if (h.block_side < 2 || h.block_side > kMaxBlockSide)
    fail(Errc::decode, "unsupported block side " + std::to_string(h.block_side));
  if (!(h.q > 0.0f) || !std::isfinite(h.q)) fail(Errc::decode, "invalid quantizer step");
  return h;
}

// ---------------------------------------------------------------------------
// Image encoder

struct BlockRecord {
  int bx = 0;
  int by = 0;
  BlockClass cls;
  bool use_gft = false;
  int delta_index = 0;
  bool solver_converged = true;
  double bits = 0.0;        // ideal code length from the real coder
  double graph_bits = 0.0;  // flag + delta index + dual coefficients
  double distortion = 0.0;  // transform-domain squared error
  double sse = 0.0;         // pixel-domain squared error after rounding
  double rc = 0.0;
  double rg = 0.0;
};

struct EncodeResult {
  double q = 0.0;  // step actually used
  std::vector<std::uint8_t> bitstream;
  Image reconstruction;
  std::vector<BlockRecord> blocks;

  double total_bits() const { return 8.0 * static_cast<double>(bitstream.size()); }
  double bpp() const {
    return total_bits() / (static_cast<double>(reconstruction.width) * static_cast<double>(reconstruction.height));
  }
  double payload_bits() const {
    double acc = 0.0;
    for (const auto& b : blocks) acc += b.bits;
    return acc;
  }
  double graph_bits() const {
    double acc = 0.0;
    for (const auto& b : blocks) acc += b.graph_bits;
    return acc;
  }
  // Share of the entropy-coded payload spent on graph side information.
  double graph_fraction() const {
    const double p = payload_bits();
    return p > 0.0 ? graph_bits() / p : 0.0;
  }
  int gft_blocks() const {
    return static_cast<int>(std::count_if(blocks.begin(), blocks.end(), [](const BlockRecord& b) { return b.use_gft; }));
  }
};

inline Vector block_signal(const Image& padded, int bx, int by, int side) {
  Vector u(side * side);
  for (int r = 0; r < side; ++r)
    for (int c = 0; c < side; ++c) u[r * side + c] = padded.at(by * side + r, bx * side + c);
  return u;
}

// Encodes `img` once per entry of q_list, sharing graph solves and spectra.
inline std::vector<EncodeResult> encode_image_multi(const Image& img, const EncoderConfig& cfg,
                                                    std::span<const double> q_list) {
  cfg.validate();
  if (img.width < 1 || img.height < 1) fail(Errc::invalid_parameter, "empty image");
  if (img.width > 65535 || img.height > 65535) fail(Errc::invalid_parameter, "image dimensions exceed 65535");
  if (q_list.empty()) fail(Errc::config, "empty q list");
  std::vector<double> qs;
  for (double q : q_list) {
    EncoderConfig c = cfg;
    c.q = q;
    c.validate();
    qs.push_back(stored_q(q));
  }

  const int side = cfg.block_side;
  const Image padded = pad_to_multiple(img, side);
  const int nbx = padded.width / side;
  const int nby = padded.height / side;
  const auto nblocks = static_cast<std::size_t>(nbx) * static_cast<std::size_t>(nby);
  const auto mt = static_cast<std::size_t>(cfg.effective_m_tilde());
  geometry_for(side);

  std::vector<BlockAnalysis> analyses(nblocks);
  parallel_for(nblocks, cfg.threads, [&](std::size_t i) {
    const int bx = static_cast<int>(i) % nbx;
    const int by = static_cast<int>(i) / nbx;
    analyses[i] = analyze_block(block_signal(padded, bx, by, side), cfg, qs);
  });

  std::vector<EncodeResult> results(qs.size());
  for (std::size_t qi = 0; qi < qs.size(); ++qi) {
    EncodeResult& res = results[qi];
    res.q = qs[qi];
    StreamHeader h{img.width, img.height, side, cfg.mode, static_cast<float>(qs[qi])};
    write_header(res.bitstream, h);

    Image recon(padded.width, padded.height);
    RangeEncoder enc;
    CodingContexts ctx;
    res.blocks.resize(nblocks);
    for (std::size_t i = 0; i < nblocks; ++i) {
      const BlockAnalysis& a = analyses[i];
      const BlockChoice& ch = a.per_q[qi];
      BlockRecord& rec = res.blocks[i];
      rec.bx = static_cast<int>(i) % nbx;
      rec.by = static_cast<int>(i) / nbx;
      rec.cls = a.cls;
      rec.use_gft = ch.syntax.use_gft;
      rec.delta_index = ch.syntax.delta_index;
      rec.solver_converged = a.solver_converged;
      rec.distortion = ch.distortion;
      rec.rc = ch.rc;
      rec.rg = ch.rg;

      const double before = enc.ideal_bits();
      // Graph side information first, measured on the real coder.
      enc.encode_bypass(ch.syntax.use_gft ? 1 : 0);
      if (ch.syntax.use_gft) {
        encode_bits(enc, static_cast<std::uint64_t>(ch.syntax.delta_index), delta_index_bits(cfg.delta_set.size()));
        if (cfg.mode == CodingMode::natural)
          encode_lastpos_bitplane(enc, ctx.graph_lastpos, ch.syntax.kw, mt);
        else
          encode_sigmap(enc, ctx.graph_sigmap, ch.syntax.kw, mt);
      }
      rec.graph_bits = enc.ideal_bits() - before;
      encode_lastpos_bitplane(enc, ctx.coeffs, ch.syntax.ku, ch.syntax.ku.size());
      rec.bits = enc.ideal_bits() - before;

      for (int r = 0; r < side; ++r)
        for (int c = 0; c < side; ++c) {
          const std::uint8_t v = ch.reconstruction[static_cast<std::size_t>(r * side + c)];
          recon.at(rec.by * side + r, rec.bx * side + c) = v;
          const double e = static_cast<double>(v) - padded.at(rec.by * side + r, rec.bx * side + c);
          rec.sse += e * e;
        }
    }
    const std::vector<std::uint8_t> payload = enc.finish();
    res.bitstream.insert(res.bitstream.end(), payload.begin(), payload.end());
    res.reconstruction = crop(recon, 0, 0, img.width, img.height);
  }
  return results;
}

inline EncodeResult encode_image(const Image& img, const EncoderConfig& cfg) {
  const double q = cfg.q;
  return std::move(encode_image_multi(img, cfg, std::span<const double>(&q, 1)).front());
}

// ---------------------------------------------------------------------------
// Decoder

// Values not carried by the stream. Defaults follow the header's mode.
struct DecodeOptions {
  std::optional<std::vector<double>> delta_set;
  std::optional<int> m_tilde;
  unsigned threads = 0;
};

struct ParsedStream {
  StreamHeader header;
  std::vector<double> delta_set;
  int m_tilde = 0;
  int blocks_x = 0;
  int blocks_y = 0;
  std::vector<BlockSyntax> blocks;  // raster order
};

// Entropy-decodes every block without any spectral work.
inline ParsedStream parse_stream(std::span<const std::uint8_t> data, const DecodeOptions& opt = {}) {
  ParsedStream ps;
  ps.header = read_header(data);
  const int side = ps.header.block_side;
  const int m = 2 * side * (side - 1);
  ps.delta_set = opt.delta_set ? *opt.delta_set : default_delta_set();
  ps.m_tilde = opt.m_tilde ? *opt.m_tilde : std::min(default_m_tilde(ps.header.mode), m);
  if (ps.delta_set.empty()) fail(Errc::config, "delta_set is empty");
  if (ps.m_tilde < 1 || ps.m_tilde > m) fail(Errc::config, "m_tilde out of range for the stream's block size");

  ps.blocks_x = (ps.header.width + side - 1) / side;
  ps.blocks_y = (ps.header.height + side - 1) / side;
  const auto nblocks = static_cast<std::size_t>(ps.blocks_x) * static_cast<std::size_t>(ps.blocks_y);
  RangeDecoder dec(data.subspan(kHeaderSize));
  CodingContexts ctx;
  for (std::size_t i = 0; i < nblocks; ++i) {
    try {
      ps.blocks.push_back(read_block(dec, ctx, ps.header.mode, ps.delta_set.size(),
                                     static_cast<std::size_t>(ps.m_tilde), static_cast<std::size_t>(side * side)));
    } catch (const Error& e) {
      if (e.code() != Errc::decode) throw;
      fail(Errc::decode, "block (" + std::to_string(static_cast<int>(i) % ps.blocks_x) + ", " +
                             std::to_string(static_cast<int>(i) / ps.blocks_x) + "): " + e.what());
    }
  }
  dec.finish();
  return ps;
}

inline Image decode_image(std::span<const std::uint8_t> data, const DecodeOptions& opt = {}) {
  const ParsedStream ps = parse_stream(data, opt);
  const int side = ps.header.block_side;
  const double q = static_cast<double>(ps.header.q);
  const GridGeometry& geo = geometry_for(side);
  const DctBasis& dct = dct_basis(side);

  Image recon(ps.blocks_x * side, ps.blocks_y * side);
  // Blocks are independent once parsed; each worker writes its own pixels.
  parallel_for(ps.blocks.size(), opt.threads, [&](std::size_t i) {
    const BlockSyntax& b = ps.blocks[i];
    const std::vector<std::uint8_t> px =
        b.use_gft ? reconstruct_gft(graph_spectrum(geo, b.kw, ps.delta_set[static_cast<std::size_t>(b.delta_index)]),
                                    b.ku, q)
                  : reconstruct_dct(dct, b.ku, q);
    const int bx = static_cast<int>(i) % ps.blocks_x;
    const int by = static_cast<int>(i) / ps.blocks_x;
    for (int r = 0; r < side; ++r)
      for (int c = 0; c < side; ++c) recon.at(by * side + r, bx * side + c) = px[static_cast<std::size_t>(r * side + c)];
  });
  return crop(recon, 0, 0, ps.header.width, ps.header.height);
}

}  // namespace gto
