#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cfsim/circuit.hpp"

namespace cfsim {

struct FixedFormat {
  int total_bits = 0;
  int frac_bits = 0;
  bool is_signed = true;

  std::int64_t min_code() const { return is_signed ? -(std::int64_t{1} << (total_bits - 1)) : 0; }
  std::int64_t max_code() const
  {
    return is_signed ? (std::int64_t{1} << (total_bits - 1)) - 1
                     : (std::int64_t{1} << total_bits) - 1;
  }

  friend bool operator==(const FixedFormat&, const FixedFormat&) = default;
};

inline constexpr FixedFormat kWeightFormat{8, 6, true};
inline constexpr FixedFormat kActivationFormat{16, 6, true};
inline constexpr FixedFormat kAccumulatorFormat{24, 12, true};
inline constexpr FixedFormat kByteFormat{8, 0, false};
inline constexpr FixedFormat kCountFormat{16, 0, false};

/// Literals of a fixed-point word, least-significant bit first.
struct BitWord {
  std::vector<Literal> bits;
  FixedFormat format;

  std::size_t width() const { return bits.size(); }
  Literal msb() const { return bits.back(); }
};

/// One term sign * 2^shift of a canonical signed-digit recoding.
struct CsdDigit {
  int sign = 1;
  int shift = 0;

  friend bool operator==(const CsdDigit&, const CsdDigit&) = default;
};

/// Canonical signed-digit (non-adjacent form) recoding of c, highest shift
/// first. csd_digits(11) = {+1@4, -1@2, -1@0}; csd_digits(0) is empty.
std::vector<CsdDigit> csd_digits(std::int64_t c);

// Scalar counterparts of the generators below.
namespace fixed {

std::int64_t saturate(std::int64_t v, const FixedFormat& f);
std::int64_t wrap(std::int64_t v, int bits, bool is_signed);
std::int64_t add_saturating(std::int64_t a, std::int64_t b, const FixedFormat& f);
std::int64_t sub_saturating(std::int64_t a, std::int64_t b, const FixedFormat& f);
/// c*u with the same term order and saturation points as mul_const_csd.
std::int64_t mul_const_csd(std::int64_t u, std::int64_t c);
/// c*u with the same term order and saturation points as mul_const_array.
std::int64_t mul_const_array(std::int64_t u, std::int64_t c);
std::int64_t rescale_24_to_16(std::int64_t acc);

}  // namespace fixed

BitWord const_word(CircuitBuilder& b, std::int64_t value, FixedFormat format);

/// Two's complement sign extension (or zero extension for unsigned words).
BitWord extend(const BitWord& w, int width);
/// Multiply by 2^shift keeping the width; vacated low bits are constant 0.
BitWord shift_left(const BitWord& w, int shift);

/// Ripple-carry sum modulo 2^width.
BitWord add_words(CircuitBuilder& b, const BitWord& x, const BitWord& y);
/// Signed sum clamped to the word's range.
BitWord add_saturating(CircuitBuilder& b, const BitWord& x, const BitWord& y);
/// Signed difference clamped to the word's range.
BitWord sub_saturating(CircuitBuilder& b, const BitWord& x, const BitWord& y);
/// Unsigned sum clamped to 2^width - 1.
BitWord add_saturating_unsigned(CircuitBuilder& b, const BitWord& x, const BitWord& y);

/// u (A16F6) times the W8F6 code c, as an ACC24F12 word. Shift-and-add over
/// csd_digits(c) in descending shift order, saturating at every step.
BitWord mul_const_csd(CircuitBuilder& b, const BitWord& u, std::int64_t c);
/// Same function as mul_const_csd built the schoolbook way: one partial
/// product per set bit of |c|, ascending shift, negated once if c < 0.
BitWord mul_const_array(CircuitBuilder& b, const BitWord& u, std::int64_t c);

/// max(0, x) as a multiplexer on the sign bit.
BitWord relu(CircuitBuilder& b, const BitWord& x);
/// Arithmetic shift right by 6 (floor), then saturate to 16 bits.
BitWord rescale_24_to_16(CircuitBuilder& b, const BitWord& acc);

/// True iff the unsigned byte x <= t.
Literal compare_leq_const(CircuitBuilder& b, const BitWord& x, int t);

/// sel ? t : f. Uses single-gate forms when a data input is constant and
/// f ^ (sel & (t ^ f)) otherwise.
Literal mux(CircuitBuilder& b, Literal sel, Literal t, Literal f);
BitWord mux_word(CircuitBuilder& b, Literal sel, const BitWord& t, const BitWord& f);

/// Arbitrary byte -> code table compiled as Shannon multiplexer trees over
/// the byte's bits, one tree per output bit.
BitWord byte_lookup(CircuitBuilder& b, std::span<const Literal> byte_bits,
                    std::span<const std::int64_t> table, FixedFormat format);

}  // namespace cfsim
