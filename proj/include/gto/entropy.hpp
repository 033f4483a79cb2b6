#pragma once

// Uniform quantization and the binary arithmetic coding layer.
//
// The coder is a carry-propagating 32-bit range coder with 12-bit adaptive
// probabilities (exponential update, shift 5) plus an equiprobable bypass
// mode. Syntax routines are templates over the coder so the same code drives
// the real encoder, the decoder-side mirror, and the bit-cost estimator used
// by rate-distortion decisions.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "gto/error.hpp"

namespace gto {

// ---------------------------------------------------------------------------
// Quantization

struct QuantizedCoeffs {
  std::vector<std::int64_t> indices;
  double step = 1.0;
};

// k = round(v / step), ties away from zero.
inline QuantizedCoeffs quantize(std::span<const double> v, double step) {
  if (!(step > 0.0)) fail(Errc::invalid_parameter, "quantizer step must be > 0");
  QuantizedCoeffs q;
  q.step = step;
  q.indices.resize(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double r = std::round(v[i] / step);
    if (!(std::abs(r) < 9.0e18)) fail(Errc::overflow, "quantized value out of range");
    q.indices[i] = static_cast<std::int64_t>(r);
  }
  return q;
}

inline std::vector<double> dequantize(const QuantizedCoeffs& q) {
  std::vector<double> out(q.indices.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<double>(q.indices[i]) * q.step;
  return out;
}

// ---------------------------------------------------------------------------
// Binary range coder

inline constexpr int kProbBits = 12;
inline constexpr std::uint32_t kProbOne = 1u << kProbBits;
inline constexpr int kAdaptShift = 5;
inline constexpr std::uint32_t kRangeTop = 1u << 24;

// Adaptive probability that the next bit is 0, in 1/4096 units.
struct BitContext {
  std::uint16_t p0 = kProbOne / 2;

  void update(int bit) {
    if (bit)
      p0 = static_cast<std::uint16_t>(p0 - (p0 >> kAdaptShift));
    else
      p0 = static_cast<std::uint16_t>(p0 + ((kProbOne - p0) >> kAdaptShift));
  }
};

namespace detail {

// -log2(p / 4096) for every 12-bit probability.
inline const std::array<double, kProbOne + 1>& cost_table() {
  static const std::array<double, kProbOne + 1> table = [] {
    std::array<double, kProbOne + 1> t{};
    t[0] = 64.0;
    for (std::uint32_t i = 1; i <= kProbOne; ++i) t[i] = -std::log2(static_cast<double>(i) / kProbOne);
    return t;
  }();
  return table;
}

inline double bit_cost(const BitContext& ctx, int bit) {
  return cost_table()[bit ? kProbOne - ctx.p0 : ctx.p0];
}

}  // namespace detail

class RangeEncoder {
 public:
  void encode(BitContext& ctx, int bit) {
    ideal_bits_ += detail::bit_cost(ctx, bit);
    const std::uint32_t bound = (range_ >> kProbBits) * ctx.p0;
    if (bit) {
      low_ += bound;
      range_ -= bound;
    } else {
      range_ = bound;
    }
    ctx.update(bit);
    normalize();
  }

  void encode_bypass(int bit) {
    ideal_bits_ += 1.0;
    range_ >>= 1;
    if (bit) low_ += range_;
    normalize();
  }

  // Writes the remaining state; the decoder consumes exactly the bytes
  // produced here.
  std::vector<std::uint8_t> finish() {
    for (int i = 0; i < 5; ++i) shift_low();
    return std::move(out_);
  }

  // Information content of everything coded so far, in bits.
  double ideal_bits() const { return ideal_bits_; }
  std::size_t bytes_written() const { return out_.size(); }

 private:
  void normalize() {
    while (range_ < kRangeTop) {
      range_ <<= 8;
      shift_low();
    }
  }

  void shift_low() {
    if (static_cast<std::uint32_t>(low_) < 0xFF000000u || (low_ >> 32) != 0) {
      const auto carry = static_cast<std::uint8_t>(low_ >> 32);
      std::uint8_t pending = cache_;
      do {
        out_.push_back(static_cast<std::uint8_t>(pending + carry));
        pending = 0xFF;
      } while (--cache_size_ != 0);
      cache_ = static_cast<std::uint8_t>(low_ >> 24);
    }
    ++cache_size_;
    low_ = (low_ & 0x00FFFFFFu) << 8;
  }

  std::uint64_t low_ = 0;
  std::uint32_t range_ = 0xFFFFFFFFu;
  std::uint8_t cache_ = 0;
  std::uint64_t cache_size_ = 1;
  double ideal_bits_ = 0.0;
  std::vector<std::uint8_t> out_;
};

class RangeDecoder {
 public:
  explicit RangeDecoder(std::span<const std::uint8_t> data) : data_(data) {
    if (next_byte() != 0) fail(Errc::decode, "entropy payload does not start with a zero byte");
    for (int i = 0; i < 4; ++i) code_ = (code_ << 8) | next_byte();
    if (code_ == 0xFFFFFFFFu) fail(Errc::decode, "corrupt entropy payload");
  }

  int decode(BitContext& ctx) {
    const std::uint32_t bound = (range_ >> kProbBits) * ctx.p0;
    int bit;
    if (code_ < bound) {
      range_ = bound;
      bit = 0;
    } else {
      code_ -= bound;
      range_ -= bound;
      bit = 1;
    }
    ctx.update(bit);
    normalize();
    return bit;
  }

  int decode_bypass() {
    range_ >>= 1;
    int bit = 0;
    if (code_ >= range_) {
      code_ -= range_;
      bit = 1;
    }
    normalize();
    return bit;
  }

  // Errors unless every payload byte has been consumed.
  void finish() const {
    if (pos_ != data_.size())
      fail(Errc::decode, std::to_string(data_.size() - pos_) + " trailing bytes after the entropy payload");
  }

  std::size_t position() const { return pos_; }

 private:
  std::uint32_t next_byte() {
    if (pos_ >= data_.size()) fail(Errc::decode, "truncated entropy payload");
    return data_[pos_++];
  }

  void normalize() {
    while (range_ < kRangeTop) {
      range_ <<= 8;
      code_ = (code_ << 8) | next_byte();
    }
  }

  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
  std::uint32_t code_ = 0;
  std::uint32_t range_ = 0xFFFFFFFFu;
};

// Encoder stand-in that only accumulates the adaptive code length.
class BitCostEstimator {
 public:
  void encode(BitContext& ctx, int bit) {
    bits_ += detail::bit_cost(ctx, bit);
    ctx.update(bit);
  }
  void encode_bypass(int) { bits_ += 1.0; }
  double bits() const { return bits_; }

 private:
  double bits_ = 0.0;
};

template <class C>
concept BitEncoder = requires(C c, BitContext& ctx, int bit) {
  c.encode(ctx, bit);
  c.encode_bypass(bit);
};

template <class C>
concept BitDecoder = requires(C c, BitContext& ctx) {
  { c.decode(ctx) } -> std::convertible_to<int>;
  { c.decode_bypass() } -> std::convertible_to<int>;
};

template <BitEncoder Enc>
void encode_bits(Enc& enc, std::uint64_t value, int nbits) {
  for (int b = nbits - 1; b >= 0; --b) enc.encode_bypass(static_cast<int>((value >> b) & 1u));
}

template <BitDecoder Dec>
std::uint64_t decode_bits(Dec& dec, int nbits) {
  std::uint64_t v = 0;
  for (int b = 0; b < nbits; ++b) v = (v << 1) | static_cast<std::uint64_t>(dec.decode_bypass());
  return v;
}

// Bits needed to send a value in [0, n].
inline int bits_for(std::size_t n) {
  int b = 0;
  while ((std::size_t{1} << b) < n + 1) ++b;
  return b;
}

// ---------------------------------------------------------------------------
// Last-position + bitplane coefficient coding

// Context = (previous coefficient in scan order already significant,
//            this coefficient already significant).
struct BitplaneContexts {
  std::array<BitContext, 4> bits{};

  BitContext& at(bool prev_significant, bool significant) {
    return bits[static_cast<std::size_t>(prev_significant) * 2 + static_cast<std::size_t>(significant)];
  }
};

inline constexpr int kPlaneCountBits = 5;
inline constexpr std::uint64_t kMaxMagnitude = (std::uint64_t{1} << 32) - 1;

namespace detail {

inline std::uint64_t magnitude(std::int64_t k) {
  return k < 0 ? static_cast<std::uint64_t>(-(k + 1)) + 1 : static_cast<std::uint64_t>(k);
}

inline int bit_length(std::uint64_t v) {
  int n = 0;
  while (v) {
    ++n;
    v >>= 1;
  }
  return n;
}

}  // namespace detail

// Syntax: P = 1 + index of the last nonzero (0 for an all-zero vector) in
// bits_for(n_max) bypass bits; if P > 0, B_max - 1 in 5 bypass bits; then
// planes B_max-1 .. 0, one context-coded bit per coefficient in [0, P),
// with a bypass sign bit right after a coefficient's first 1.
template <BitEncoder Enc>
void encode_lastpos_bitplane(Enc& enc, BitplaneContexts& ctx, std::span<const std::int64_t> k, std::size_t n_max) {
  if (k.size() != n_max)
    fail(Errc::dimension, "coefficient vector has length " + std::to_string(k.size()) + ", expected " +
                              std::to_string(n_max));
  std::size_t last = 0;
  std::uint64_t max_mag = 0;
  for (std::size_t i = 0; i < k.size(); ++i) {
    const std::uint64_t m = detail::magnitude(k[i]);
    if (m > kMaxMagnitude) fail(Errc::overflow, "coefficient magnitude exceeds 32 bits");
    if (m != 0) last = i + 1;
    max_mag = std::max(max_mag, m);
  }
  encode_bits(enc, last, bits_for(n_max));
  if (last == 0) return;
  const int planes = detail::bit_length(max_mag);
  encode_bits(enc, static_cast<std::uint64_t>(planes - 1), kPlaneCountBits);

  std::vector<std::uint8_t> significant(last, 0);
  for (int b = planes - 1; b >= 0; --b) {
    for (std::size_t i = 0; i < last; ++i) {
      const bool prev = i > 0 && significant[i - 1];
      const int bit = static_cast<int>((detail::magnitude(k[i]) >> b) & 1u);
      enc.encode(ctx.at(prev, significant[i] != 0), bit);
      if (bit && !significant[i]) {
        significant[i] = 1;
        enc.encode_bypass(k[i] < 0 ? 1 : 0);
      }
    }
  }
}

template <BitDecoder Dec>
std::vector<std::int64_t> decode_lastpos_bitplane(Dec& dec, BitplaneContexts& ctx, std::size_t n_max) {
  std::vector<std::int64_t> k(n_max, 0);
  const std::uint64_t last = decode_bits(dec, bits_for(n_max));
  if (last > n_max) fail(Errc::decode, "last significant position out of range");
  if (last == 0) return k;
  const int planes = static_cast<int>(decode_bits(dec, kPlaneCountBits)) + 1;

  std::vector<std::uint64_t> mag(last, 0);
  std::vector<std::uint8_t> negative(last, 0);
  for (int b = planes - 1; b >= 0; --b) {
    for (std::size_t i = 0; i < last; ++i) {
      const bool sig = mag[i] != 0;
      const bool prev = i > 0 && mag[i - 1] != 0;
      const int bit = dec.decode(ctx.at(prev, sig));
      if (bit) {
        mag[i] |= std::uint64_t{1} << b;
        if (!sig) negative[i] = static_cast<std::uint8_t>(dec.decode_bypass());
      }
    }
  }
  if (mag[last - 1] == 0) fail(Errc::decode, "last significant coefficient decoded as zero");
  for (std::size_t i = 0; i < last; ++i)
    k[i] = negative[i] ? -static_cast<std::int64_t>(mag[i]) : static_cast<std::int64_t>(mag[i]);
  return k;
}

// ---------------------------------------------------------------------------
// Significance-map coding

struct SigMapContexts {
  std::array<BitContext, 4> sig{};

  static std::size_t bucket(std::size_t pos) {
    if (pos == 0) return 0;
    if (pos < 16) return 1;
    if (pos < 64) return 2;
    return 3;
  }
  BitContext& at(std::size_t pos) { return sig[bucket(pos)]; }
};

template <BitEncoder Enc>
void encode_exp_golomb0(Enc& enc, std::uint64_t v) {
  const std::uint64_t x = v + 1;
  const int len = detail::bit_length(x);
  for (int i = 1; i < len; ++i) enc.encode_bypass(0);
  encode_bits(enc, x, len);
}

template <BitDecoder Dec>
std::uint64_t decode_exp_golomb0(Dec& dec) {
  int zeros = 0;
  while (dec.decode_bypass() == 0) {
    if (++zeros > 40) fail(Errc::decode, "malformed Exp-Golomb code");
  }
  const std::uint64_t rest = decode_bits(dec, zeros);
  return ((std::uint64_t{1} << zeros) | rest) - 1;
}

// One context-coded significance bit per position, then for each nonzero in
// order: |k| - 1 as Exp-Golomb(0) and a sign bit, all bypass.
template <BitEncoder Enc>
void encode_sigmap(Enc& enc, SigMapContexts& ctx, std::span<const std::int64_t> k, std::size_t n_max) {
  if (k.size() != n_max)
    fail(Errc::dimension, "coefficient vector has length " + std::to_string(k.size()) + ", expected " +
                              std::to_string(n_max));
  for (std::size_t i = 0; i < k.size(); ++i) {
    if (detail::magnitude(k[i]) > kMaxMagnitude) fail(Errc::overflow, "coefficient magnitude exceeds 32 bits");
    enc.encode(ctx.at(i), k[i] != 0 ? 1 : 0);
  }
  for (std::size_t i = 0; i < k.size(); ++i) {
    if (k[i] == 0) continue;
    encode_exp_golomb0(enc, detail::magnitude(k[i]) - 1);
    enc.encode_bypass(k[i] < 0 ? 1 : 0);
  }
}

template <BitDecoder Dec>
std::vector<std::int64_t> decode_sigmap(Dec& dec, SigMapContexts& ctx, std::size_t n_max) {
  std::vector<std::int64_t> k(n_max, 0);
  std::vector<std::uint8_t> sig(n_max, 0);
  for (std::size_t i = 0; i < n_max; ++i) sig[i] = static_cast<std::uint8_t>(dec.decode(ctx.at(i)));
  for (std::size_t i = 0; i < n_max; ++i) {
    if (!sig[i]) continue;
    const std::uint64_t m = decode_exp_golomb0(dec) + 1;
    if (m > kMaxMagnitude) fail(Errc::decode, "significance-map magnitude out of range");
    k[i] = dec.decode_bypass() ? -static_cast<std::int64_t>(m) : static_cast<std::int64_t>(m);
  }
  return k;
}

}  // namespace gto
