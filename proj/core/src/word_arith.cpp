#include "cfsim/word_arith.hpp"

#include <algorithm>
#include <cstdlib>
#include <stdexcept>
#include <string>

namespace cfsim {

namespace {

void require_same_width(const BitWord& x, const BitWord& y, const char* op)
{
  if (x.width() != y.width()) {
    throw std::invalid_argument(std::string(op) + ": width mismatch (" +
                                std::to_string(x.width()) + " vs " + std::to_string(y.width()) +
                                ")");
  }
}

struct RippleResult {
  std::vector<Literal> sum;
  Literal carry;
};

RippleResult ripple(CircuitBuilder& b, std::span<const Literal> x, std::span<const Literal> y,
                    Literal carry)
{
  RippleResult r;
  r.sum.reserve(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const Literal t = b.add_xor(x[i], y[i]);
    r.sum.push_back(b.add_xor(t, carry));
    carry = b.add_or(b.add_and(x[i], y[i]), b.add_and(carry, t));
  }
  r.carry = carry;
  return r;
}

std::vector<Literal> complement_bits(std::span<const Literal> bits)
{
  std::vector<Literal> out;
  out.reserve(bits.size());
  for (Literal l : bits) {
    out.push_back(!l);
  }
  return out;
}

// Forces the raw two's complement result to max on positive overflow and to
// min on negative overflow.
BitWord clamp_signed(CircuitBuilder& b, std::vector<Literal> raw, Literal pos, Literal neg,
                     FixedFormat format)
{
  const std::size_t w = raw.size();
  for (std::size_t i = 0; i + 1 < w; ++i) {
    raw[i] = b.add_and(b.add_or(raw[i], pos), !neg);
  }
  raw[w - 1] = b.add_and(b.add_or(raw[w - 1], neg), !pos);
  return BitWord{std::move(raw), format};
}

}  // namespace

std::vector<CsdDigit> csd_digits(std::int64_t c)
{
  std::vector<CsdDigit> digits;
  int shift = 0;
  while (c != 0) {
    if (c & 1) {
      // c mod 4 == 1 -> +1, c mod 4 == 3 -> -1 (works for negative c too).
      const int d = ((c & 3) == 1) ? 1 : -1;
      digits.push_back(CsdDigit{d, shift});
      c -= d;
    }
    c >>= 1;
    ++shift;
  }
  std::reverse(digits.begin(), digits.end());
  return digits;
}

namespace fixed {

std::int64_t saturate(std::int64_t v, const FixedFormat& f)
{
  return std::clamp(v, f.min_code(), f.max_code());
}

std::int64_t wrap(std::int64_t v, int bits, bool is_signed)
{
  const std::uint64_t mask = bits >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << bits) - 1;
  std::uint64_t u = static_cast<std::uint64_t>(v) & mask;
  if (is_signed && bits < 64 && ((u >> (bits - 1)) & 1)) {
    u |= ~mask;
  }
  return static_cast<std::int64_t>(u);
}

std::int64_t add_saturating(std::int64_t a, std::int64_t b, const FixedFormat& f)
{
  return saturate(a + b, f);
}

std::int64_t sub_saturating(std::int64_t a, std::int64_t b, const FixedFormat& f)
{
  return saturate(a - b, f);
}

std::int64_t mul_const_csd(std::int64_t u, std::int64_t c)
{
  const FixedFormat& f = kAccumulatorFormat;
  std::int64_t acc = 0;
  bool first = true;
  for (const CsdDigit& d : csd_digits(c)) {
    const std::int64_t term = wrap(u * (std::int64_t{1} << d.shift), f.total_bits, true);
    if (first) {
      acc = d.sign > 0 ? term : sub_saturating(0, term, f);
      first = false;
    } else {
      acc = d.sign > 0 ? add_saturating(acc, term, f) : sub_saturating(acc, term, f);
    }
  }
  return acc;
}

std::int64_t mul_const_array(std::int64_t u, std::int64_t c)
{
  const FixedFormat& f = kAccumulatorFormat;
  const std::int64_t m = c < 0 ? -c : c;
  std::int64_t acc = 0;
  bool first = true;
  for (int shift = 0; (m >> shift) != 0; ++shift) {
    if (((m >> shift) & 1) == 0) {
      continue;
    }
    const std::int64_t term = wrap(u * (std::int64_t{1} << shift), f.total_bits, true);
    acc = first ? term : add_saturating(acc, term, f);
    first = false;
  }
  if (c < 0) {
    acc = sub_saturating(0, acc, f);
  }
  return acc;
}

std::int64_t rescale_24_to_16(std::int64_t acc)
{
  // >> on negative values is arithmetic (floor) since C++20.
  return saturate(acc >> 6, kActivationFormat);
}

}  // namespace fixed

BitWord const_word(CircuitBuilder& /*b*/, std::int64_t value, FixedFormat format)
{
  if (value < format.min_code() || value > format.max_code()) {
    throw std::out_of_range("constant " + std::to_string(value) + " does not fit in " +
                            std::to_string(format.total_bits) + " bits");
  }
  BitWord w;
  w.format = format;
  w.bits.reserve(format.total_bits);
  for (int i = 0; i < format.total_bits; ++i) {
    w.bits.push_back(Literal::constant(((static_cast<std::uint64_t>(value) >> i) & 1u) != 0));
  }
  return w;
}

BitWord extend(const BitWord& w, int width)
{
  if (width < static_cast<int>(w.width())) {
    throw std::invalid_argument("extend: target width smaller than word");
  }
  BitWord out = w;
  const Literal fill = w.format.is_signed ? w.msb() : kFalse;
  out.bits.resize(static_cast<std::size_t>(width), fill);
  out.format.total_bits = width;
  return out;
}

BitWord shift_left(const BitWord& w, int shift)
{
  BitWord out = w;
  const std::size_t n = w.width();
  for (std::size_t i = 0; i < n; ++i) {
    out.bits[i] = i < static_cast<std::size_t>(shift) ? kFalse : w.bits[i - shift];
  }
  return out;
}

BitWord add_words(CircuitBuilder& b, const BitWord& x, const BitWord& y)
{
  require_same_width(x, y, "add_words");
  return BitWord{ripple(b, x.bits, y.bits, kFalse).sum, x.format};
}

BitWord add_saturating(CircuitBuilder& b, const BitWord& x, const BitWord& y)
{
  require_same_width(x, y, "add_saturating");
  RippleResult r = ripple(b, x.bits, y.bits, kFalse);
  const Literal xs = x.msb();
  const Literal ys = y.msb();
  const Literal rs = r.sum.back();
  // Overflow iff the operands agree in sign and the result does not.
  const Literal ovf = b.add_and(!b.add_xor(xs, ys), b.add_xor(rs, xs));
  const Literal pos = b.add_and(ovf, !xs);
  const Literal neg = b.add_and(ovf, xs);
  return clamp_signed(b, std::move(r.sum), pos, neg, x.format);
}

BitWord sub_saturating(CircuitBuilder& b, const BitWord& x, const BitWord& y)
{
  require_same_width(x, y, "sub_saturating");
  const std::vector<Literal> ny = complement_bits(y.bits);
  RippleResult r = ripple(b, x.bits, ny, kTrue);
  const Literal xs = x.msb();
  const Literal ys = y.msb();
  const Literal rs = r.sum.back();
  const Literal ovf = b.add_and(b.add_xor(xs, ys), b.add_xor(rs, xs));
  const Literal pos = b.add_and(ovf, !xs);
  const Literal neg = b.add_and(ovf, xs);
  return clamp_signed(b, std::move(r.sum), pos, neg, x.format);
}

BitWord add_saturating_unsigned(CircuitBuilder& b, const BitWord& x, const BitWord& y)
{
  require_same_width(x, y, "add_saturating_unsigned");
  RippleResult r = ripple(b, x.bits, y.bits, kFalse);
  for (Literal& l : r.sum) {
    l = b.add_or(l, r.carry);
  }
  return BitWord{std::move(r.sum), x.format};
}

BitWord mul_const_csd(CircuitBuilder& b, const BitWord& u, std::int64_t c)
{
  const FixedFormat f = kAccumulatorFormat;
  BitWord wide = extend(u, f.total_bits);
  wide.format = f;
  const auto digits = csd_digits(c);
  if (digits.empty()) {
    return const_word(b, 0, f);
  }
  BitWord acc;
  bool first = true;
  for (const CsdDigit& d : digits) {
    const BitWord term = shift_left(wide, d.shift);
    if (first) {
      acc = d.sign > 0 ? term : sub_saturating(b, const_word(b, 0, f), term);
      first = false;
    } else {
      acc = d.sign > 0 ? add_saturating(b, acc, term) : sub_saturating(b, acc, term);
    }
  }
  return acc;
}

BitWord mul_const_array(CircuitBuilder& b, const BitWord& u, std::int64_t c)
{
  const FixedFormat f = kAccumulatorFormat;
  BitWord wide = extend(u, f.total_bits);
  wide.format = f;
  const std::int64_t m = c < 0 ? -c : c;
  if (m == 0) {
    return const_word(b, 0, f);
  }
  BitWord acc;
  bool first = true;
  for (int shift = 0; (m >> shift) != 0; ++shift) {
    if (((m >> shift) & 1) == 0) {
      continue;
    }
    const BitWord term = shift_left(wide, shift);
    acc = first ? term : add_saturating(b, acc, term);
    first = false;
  }
  if (c < 0) {
    acc = sub_saturating(b, const_word(b, 0, f), acc);
  }
  return acc;
}

BitWord relu(CircuitBuilder& b, const BitWord& x)
{
  return mux_word(b, x.msb(), const_word(b, 0, x.format), x);
}

BitWord rescale_24_to_16(CircuitBuilder& b, const BitWord& acc)
{
  if (acc.width() != 24) {
    throw std::invalid_argument("rescale_24_to_16: expected a 24-bit word");
  }
  const Literal sign = acc.bits[23];
  const Literal a21 = acc.bits[21];
  const Literal a22 = acc.bits[22];
  // acc >> 6 fits in 16 signed bits iff bits 21..23 agree.
  const Literal pos = b.add_and(!sign, b.add_or(a21, a22));
  const Literal neg = b.add_and(sign, !b.add_and(a21, a22));
  std::vector<Literal> raw(acc.bits.begin() + 6, acc.bits.begin() + 22);
  raw[15] = sign;
  for (std::size_t i = 0; i < 15; ++i) {
    raw[i] = b.add_and(b.add_or(raw[i], pos), !neg);
  }
  return BitWord{std::move(raw), kActivationFormat};
}

Literal compare_leq_const(CircuitBuilder& b, const BitWord& x, int t)
{
  const std::size_t w = x.width();
  if (t < 0 || (w < 63 && static_cast<std::int64_t>(t) >= (std::int64_t{1} << w))) {
    throw std::out_of_range("compare_leq_const: threshold " + std::to_string(t) +
                            " out of range for a " + std::to_string(w) + "-bit word");
  }
  // Built from the least significant bit up: leq holds x[i..0] <= t[i..0].
  Literal leq = kTrue;
  for (std::size_t i = 0; i < w; ++i) {
    if ((t >> i) & 1) {
      leq = b.add_or(!x.bits[i], leq);
    } else {
      leq = b.add_and(!x.bits[i], leq);
    }
  }
  return leq;
}

Literal mux(CircuitBuilder& b, Literal sel, Literal t, Literal f)
{
  if (sel.is_constant()) {
    return sel.complemented() ? t : f;
  }
  if (t == f) {
    return t;
  }
  if (t == !f) {
    return b.add_xor(sel, f);
  }
  if (t.is_constant()) {
    return t.complemented() ? b.add_or(sel, f) : b.add_and(!sel, f);
  }
  if (f.is_constant()) {
    return f.complemented() ? b.add_or(!sel, t) : b.add_and(sel, t);
  }
  return b.add_xor(f, b.add_and(sel, b.add_xor(t, f)));
}

BitWord mux_word(CircuitBuilder& b, Literal sel, const BitWord& t, const BitWord& f)
{
  require_same_width(t, f, "mux_word");
  BitWord out;
  out.format = f.format;
  out.bits.reserve(t.width());
  for (std::size_t i = 0; i < t.width(); ++i) {
    out.bits.push_back(mux(b, sel, t.bits[i], f.bits[i]));
  }
  return out;
}

namespace {

Literal shannon(CircuitBuilder& b, std::span<const Literal> vars, std::span<const std::int64_t> table,
                std::size_t level, std::size_t offset, int bit)
{
  const std::size_t span = std::size_t{1} << level;
  const bool first = ((static_cast<std::uint64_t>(table[offset]) >> bit) & 1u) != 0;
  bool uniform = true;
  for (std::size_t k = 1; k < span && uniform; ++k) {
    uniform = (((static_cast<std::uint64_t>(table[offset + k]) >> bit) & 1u) != 0) == first;
  }
  if (uniform) {
    return Literal::constant(first);
  }
  const std::size_t half = span / 2;
  const Literal hi = shannon(b, vars, table, level - 1, offset + half, bit);
  const Literal lo = shannon(b, vars, table, level - 1, offset, bit);
  return mux(b, vars[level - 1], hi, lo);
}

}  // namespace

BitWord byte_lookup(CircuitBuilder& b, std::span<const Literal> byte_bits,
                    std::span<const std::int64_t> table, FixedFormat format)
{
  if (table.size() != (std::size_t{1} << byte_bits.size())) {
    throw std::invalid_argument("byte_lookup: table size must be 2^(number of select bits)");
  }
  for (std::int64_t v : table) {
    if (v < format.min_code() || v > format.max_code()) {
      throw std::out_of_range("byte_lookup: table value out of range");
    }
  }
  BitWord out;
  out.format = format;
  for (int bit = 0; bit < format.total_bits; ++bit) {
    out.bits.push_back(shannon(b, byte_bits, table, byte_bits.size(), 0, bit));
  }
  return out;
}

}  // namespace cfsim
