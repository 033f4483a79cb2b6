#pragma once

// Quality and rate measurement, Bjontegaard deltas, the per-class KLT
// baseline, RD sweeps and the rate/distortion model checks.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gto/codec.hpp"

namespace gto {

struct Psnr {
  double value = 0.0;  // +inf when lossless
  bool lossless = false;
};

inline double mse(const Image& a, const Image& b) {
  if (a.width != b.width || a.height != b.height) fail(Errc::dimension, "images differ in size");
  if (a.pixels.empty()) fail(Errc::dimension, "empty image");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.pixels.size(); ++i) {
    const double d = static_cast<double>(a.pixels[i]) - static_cast<double>(b.pixels[i]);
    acc += d * d;
  }
  return acc / static_cast<double>(a.pixels.size());
}

inline Psnr psnr_from_mse(double m) {
  if (m == 0.0) return {std::numeric_limits<double>::infinity(), true};
  return {10.0 * std::log10(255.0 * 255.0 / m), false};
}

inline Psnr psnr(const Image& a, const Image& b) { return psnr_from_mse(mse(a, b)); }

// ---------------------------------------------------------------------------
// Bjontegaard delta-PSNR

struct RDPoint {
  double rate = 0.0;  // bits per pixel
  double psnr = 0.0;  // dB
};

using RDCurve = std::vector<RDPoint>;

namespace detail {

inline RDCurve checked_curve(RDCurve c, const char* what) {
  if (c.size() < 4) fail(Errc::invalid_parameter, std::string(what) + ": need at least 4 RD points");
  std::sort(c.begin(), c.end(), [](const RDPoint& a, const RDPoint& b) { return a.rate < b.rate; });
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (!(c[i].rate > 0.0) || !std::isfinite(c[i].psnr))
      fail(Errc::domain, std::string(what) + ": rates must be > 0 and PSNR finite");
    if (i > 0 && !(c[i].rate > c[i - 1].rate))
      fail(Errc::invalid_parameter, std::string(what) + ": rates must be strictly increasing");
  }
  return c;
}

// Least-squares cubic in x = ln(rate); coefficients lowest order first.
inline Vector fit_cubic(const RDCurve& c) {
  const auto n = static_cast<Eigen::Index>(c.size());
  Matrix a(n, 4);
  Vector y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double x = std::log(c[static_cast<std::size_t>(i)].rate);
    a(i, 0) = 1.0;
    a(i, 1) = x;
    a(i, 2) = x * x;
    a(i, 3) = x * x * x;
    y[i] = c[static_cast<std::size_t>(i)].psnr;
  }
  return a.colPivHouseholderQr().solve(y);
}

inline double integrate_cubic(const Vector& p, double lo, double hi) {
  auto prim = [&](double x) { return p[0] * x + p[1] * x * x / 2.0 + p[2] * x * x * x / 3.0 + p[3] * x * x * x * x / 4.0; };
  return prim(hi) - prim(lo);
}

}  // namespace detail

// Average PSNR gain of `test` over `reference` across the common log-rate range.
inline double bd_psnr(const RDCurve& reference, const RDCurve& test) {
  const RDCurve r = detail::checked_curve(reference, "reference curve");
  const RDCurve t = detail::checked_curve(test, "test curve");
  const double lo = std::max(std::log(r.front().rate), std::log(t.front().rate));
  const double hi = std::min(std::log(r.back().rate), std::log(t.back().rate));
  if (!(hi > lo)) fail(Errc::domain, "RD curves do not overlap in rate");
  const Vector pr = detail::fit_cubic(r);
  const Vector pt = detail::fit_cubic(t);
  return (detail::integrate_cubic(pt, lo, hi) - detail::integrate_cubic(pr, lo, hi)) / (hi - lo);
}

// ---------------------------------------------------------------------------
// Correlation helpers

inline double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) fail(Errc::dimension, "correlation inputs differ in length");
  if (x.size() < 2) fail(Errc::invalid_parameter, "correlation needs at least 2 samples");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) fail(Errc::domain, "correlation undefined for a constant series");
  return sxy / std::sqrt(sxx * syy);
}

// 1-based ranks, ties share their average rank.
inline std::vector<double> ranks(std::span<const double> x) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> r(x.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && x[order[j + 1]] == x[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[order[k]] = avg;
    i = j + 1;
  }
  return r;
}

inline double spearman(std::span<const double> x, std::span<const double> y) {
  const std::vector<double> rx = ranks(x), ry = ranks(y);
  return pearson(rx, ry);
}

// ---------------------------------------------------------------------------
// Per-class KLT baseline

struct KltModel {
  // Per class: basis with columns by descending eigenvalue, or empty when the
  // class had no training blocks (the DCT is used instead).
  std::vector<std::optional<Matrix>> basis;
  std::vector<Vector> eigenvalues;
};

inline KltModel klt_train(const std::vector<Vector>& blocks, const std::vector<int>& classes, int class_total) {
  if (blocks.size() != classes.size()) fail(Errc::dimension, "one class label per block is required");
  KltModel m;
  m.basis.resize(static_cast<std::size_t>(class_total));
  m.eigenvalues.resize(static_cast<std::size_t>(class_total));
  for (int k = 0; k < class_total; ++k) {
    std::vector<const Vector*> members;
    for (std::size_t i = 0; i < blocks.size(); ++i)
      if (classes[i] == k) members.push_back(&blocks[i]);
    if (members.empty()) continue;
    const Eigen::Index n = members.front()->size();
    Vector mean = Vector::Zero(n);
    for (const Vector* b : members) mean += *b;
    mean /= static_cast<double>(members.size());
    Matrix centered(n, static_cast<Eigen::Index>(members.size()));
    for (std::size_t i = 0; i < members.size(); ++i) centered.col(static_cast<Eigen::Index>(i)) = *members[i] - mean;
    const Matrix cov = centered * centered.transpose() / static_cast<double>(members.size());
    const Spectrum s = eigendecompose(cov);
    m.basis[static_cast<std::size_t>(k)] = s.vectors.rowwise().reverse();
    m.eigenvalues[static_cast<std::size_t>(k)] = s.values.reverse();
  }
  return m;
}

// ---------------------------------------------------------------------------
// Sweeps

enum class Method { learned_gft, gaussian_gft, dct, klt };

inline const char* method_name(Method m) {
  switch (m) {
    case Method::learned_gft: return "LearnedGFT";
    case Method::gaussian_gft: return "GaussianGFT";
    case Method::dct: return "DCT";
    case Method::klt: return "KLT";
  }
  return "?";
}

inline Method parse_method(const std::string& s) {
  for (Method m : {Method::learned_gft, Method::gaussian_gft, Method::dct, Method::klt})
    if (s == method_name(m)) return m;
  fail(Errc::config, "unknown method '" + s + "' (expected LearnedGFT, GaussianGFT, DCT or KLT)");
}

struct SweepPoint {
  double q = 0.0;
  double bpp = 0.0;
  Psnr psnr;
  double graph_fraction = 0.0;  // side-information share of the payload
};

inline RDCurve to_curve(const std::vector<SweepPoint>& pts) {
  RDCurve c;
  for (const auto& p : pts) c.push_back({p.bpp, p.psnr.value});
  return c;
}

inline GraphMethod graph_method_for(Method m) {
  switch (m) {
    case Method::learned_gft: return GraphMethod::learned;
    case Method::gaussian_gft: return GraphMethod::gaussian;
    default: return GraphMethod::dct_only;
  }
}

struct KltResult {
  double q = 0.0;
  double total_bits = 0.0;  // header-equivalent 14 bytes + payload
  double side_bits = 0.0;
  Image reconstruction;
};

// Oracle KLT codec: bases trained on the image's own blocks per class; only
// the class index is charged as side information.
inline std::vector<KltResult> klt_code_image(const Image& img, const EncoderConfig& cfg, std::span<const double> q_list) {
  cfg.validate();
  const int side = cfg.block_side;
  const int n = side * side;
  const Image padded = pad_to_multiple(img, side);
  const int nbx = padded.width / side;
  const int nby = padded.height / side;
  const int classes = class_count(cfg.mode);
  const int class_bits = bits_for(static_cast<std::size_t>(classes - 1));

  std::vector<Vector> blocks;
  std::vector<int> labels;
  for (int by = 0; by < nby; ++by)
    for (int bx = 0; bx < nbx; ++bx) {
      blocks.push_back(block_signal(padded, bx, by, side));
      labels.push_back(classify_block(std::span<const double>(blocks.back().data(), static_cast<std::size_t>(n)),
                                      cfg.mode, cfg.thresholds)
                           .index());
    }
  const KltModel model = klt_train(blocks, labels, classes);
  const DctBasis& dct = dct_basis(side);

  std::vector<KltResult> out;
  for (double q_in : q_list) {
    const double q = stored_q(q_in);
    KltResult res;
    res.q = q;
    RangeEncoder enc;
    BitplaneContexts ctx;
    Image recon(padded.width, padded.height);
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      const auto& basis = model.basis[static_cast<std::size_t>(labels[i])];
      const double before = enc.ideal_bits();
      encode_bits(enc, static_cast<std::uint64_t>(labels[i]), class_bits);
      res.side_bits += enc.ideal_bits() - before;
      std::vector<std::uint8_t> px;
      if (basis) {
        const Vector x = basis->transpose() * blocks[i];
        const auto k = quantize(std::span<const double>(x.data(), static_cast<std::size_t>(n)), q).indices;
        encode_lastpos_bitplane(enc, ctx, k, static_cast<std::size_t>(n));
        Vector y(n);
        for (int j = 0; j < n; ++j) y[j] = static_cast<double>(k[static_cast<std::size_t>(j)]) * q;
        const Vector rec = *basis * y;
        for (int j = 0; j < n; ++j) px.push_back(to_pixel(rec[j]));
      } else {
        const Vector x = dct_scan_coefficients(dct, blocks[i]);
        const auto k = quantize(std::span<const double>(x.data(), static_cast<std::size_t>(n)), q).indices;
        encode_lastpos_bitplane(enc, ctx, k, static_cast<std::size_t>(n));
        px = reconstruct_dct(dct, k, q);
      }
      const int bx = static_cast<int>(i) % nbx, by = static_cast<int>(i) / nbx;
      for (int r = 0; r < side; ++r)
        for (int c = 0; c < side; ++c) recon.at(by * side + r, bx * side + c) = px[static_cast<std::size_t>(r * side + c)];
    }
    res.total_bits = 8.0 * static_cast<double>(kHeaderSize + enc.finish().size());
    res.reconstruction = crop(recon, 0, 0, img.width, img.height);
    out.push_back(std::move(res));
  }
  return out;
}

// One RD point per q. Codec methods report encoder-side reconstructions,
// which the decoder reproduces exactly; `verify_decode` re-decodes each
// stream and fails on any mismatch.
inline std::vector<SweepPoint> sweep(const Image& img, const EncoderConfig& tmpl, std::span<const double> q_list,
                                     Method method, bool verify_decode = false) {
  if (q_list.empty()) fail(Errc::config, "empty q list");
  const double pixels = static_cast<double>(img.width) * static_cast<double>(img.height);
  std::vector<SweepPoint> out;
  if (method == Method::klt) {
    for (const KltResult& r : klt_code_image(img, tmpl, q_list))
      out.push_back({r.q, r.total_bits / pixels, psnr(img, r.reconstruction),
                     r.total_bits > 0.0 ? r.side_bits / r.total_bits : 0.0});
    return out;
  }
  EncoderConfig cfg = tmpl;
  cfg.method = graph_method_for(method);
  for (const EncodeResult& r : encode_image_multi(img, cfg, q_list)) {
    if (verify_decode) {
      DecodeOptions opt;
      opt.delta_set = cfg.delta_set;
      opt.m_tilde = cfg.effective_m_tilde();
      opt.threads = cfg.threads;
      if (!(decode_image(r.bitstream, opt) == r.reconstruction))
        fail(Errc::numerical, "decoder reconstruction differs from the encoder's");
    }
    out.push_back({r.q, r.bpp(), psnr(img, r.reconstruction), r.graph_fraction()});
  }
  return out;
}

// RD point restricted to the blocks selected by `keep`.
template <class Pred>
std::optional<RDPoint> rd_point_for_blocks(const EncodeResult& r, int block_side, Pred keep) {
  double bits = 0.0, sse = 0.0, count = 0.0;
  for (const BlockRecord& b : r.blocks) {
    if (!keep(b)) continue;
    bits += b.bits;
    sse += b.sse;
    count += 1.0;
  }
  if (count == 0.0) return std::nullopt;
  const double px = count * block_side * block_side;
  return RDPoint{bits / px, psnr_from_mse(sse / px).value};
}

// ---------------------------------------------------------------------------
// Model validation

struct ValidationRow {
  double q = 0.0;
  double actual_bits = 0.0;
  double theoretical_rate = 0.0;     // sum over blocks of R_c + R_G on the coded indices
  double measured_distortion = 0.0;  // mean per-block transform-domain squared error
  double model_distortion = 0.0;     // q^2 N / 12
};

inline std::vector<ValidationRow> validation_rows(const std::vector<EncodeResult>& results, int block_side) {
  std::vector<ValidationRow> rows;
  for (const EncodeResult& r : results) {
    ValidationRow row;
    row.q = r.q;
    row.actual_bits = r.total_bits();
    double d = 0.0;
    for (const BlockRecord& b : r.blocks) {
      row.theoretical_rate += b.rc + b.rg;
      d += b.distortion;
    }
    row.measured_distortion = r.blocks.empty() ? 0.0 : d / static_cast<double>(r.blocks.size());
    row.model_distortion = r.q * r.q * block_side * block_side / 12.0;
    rows.push_back(row);
  }
  return rows;
}

inline double rate_model_correlation(const std::vector<ValidationRow>& rows) {
  std::vector<double> t, a;
  for (const auto& r : rows) {
    t.push_back(r.theoretical_rate);
    a.push_back(r.actual_bits);
  }
  return pearson(t, a);
}

inline double rate_model_correlation(const Image& img, const EncoderConfig& cfg, std::span<const double> q_list) {
  return rate_model_correlation(validation_rows(encode_image_multi(img, cfg, q_list), cfg.block_side));
}

struct RateFractionPoint {
  double bpp = 0.0;
  double fraction = 0.0;
};

inline std::vector<RateFractionPoint> graph_rate_fraction(const std::vector<EncodeResult>& results) {
  std::vector<RateFractionPoint> out;
  for (const auto& r : results) out.push_back({r.bpp(), r.graph_fraction()});
  return out;
}

inline std::vector<RateFractionPoint> graph_rate_fraction(const Image& img, const EncoderConfig& cfg,
                                                          std::span<const double> q_list) {
  return graph_rate_fraction(encode_image_multi(img, cfg, q_list));
}

// ---------------------------------------------------------------------------
// CSV

inline std::string format_number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

inline const char* kSweepCsvHeader = "image,method,q,bpp,psnr_db,graph_bpp_fraction\n";

inline std::string sweep_csv_rows(const std::string& image, Method method, const std::vector<SweepPoint>& pts) {
  std::string out;
  for (const auto& p : pts)
    out += image + "," + method_name(method) + "," + format_number(p.q) + "," + format_number(p.bpp) + "," +
           format_number(p.psnr.value) + "," + format_number(p.graph_fraction) + "\n";
  return out;
}

inline const char* kValidationCsvHeader =
    "image,q,actual_bits,theoretical_rate,measured_distortion,model_distortion\n";

inline std::string validation_csv_rows(const std::string& image, const std::vector<ValidationRow>& rows) {
  std::string out;
  for (const auto& r : rows)
    out += image + "," + format_number(r.q) + "," + format_number(r.actual_bits) + "," +
           format_number(r.theoretical_rate) + "," + format_number(r.measured_distortion) + "," +
           format_number(r.model_distortion) + "\n";
  return out;
}

}  // namespace gto
