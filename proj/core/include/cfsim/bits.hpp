#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace cfsim {

using Word = std::uint64_t;
inline constexpr std::size_t kWordBits = 64;

constexpr std::size_t words_for(std::size_t bits) { return (bits + kWordBits - 1) / kWordBits; }

/// Valid-bit mask for word `word_index` of a column holding `bits` bits.
constexpr Word valid_mask(std::size_t bits, std::size_t word_index)
{
  const std::size_t begin = word_index * kWordBits;
  if (begin + kWordBits <= bits) {
    return ~Word{0};
  }
  if (begin >= bits) {
    return 0;
  }
  return (Word{1} << (bits - begin)) - 1;
}

/// N bits packed 64 per word; example e lives at word e/64, bit e%64.
/// Padding bits past size() are kept zero.
class BitColumn {
 public:
  BitColumn() = default;
  explicit BitColumn(std::size_t bits) : size_{bits}, words_(words_for(bits), 0) {}

  std::size_t size() const { return size_; }
  std::size_t num_words() const { return words_.size(); }

  bool get(std::size_t i) const { return (words_[i / kWordBits] >> (i % kWordBits)) & 1u; }
  void set(std::size_t i, bool v)
  {
    const Word m = Word{1} << (i % kWordBits);
    if (v) {
      words_[i / kWordBits] |= m;
    } else {
      words_[i / kWordBits] &= ~m;
    }
  }

  std::size_t popcount() const
  {
    std::size_t n = 0;
    for (Word w : words_) {
      n += static_cast<std::size_t>(std::popcount(w));
    }
    return n;
  }

  std::span<Word> words() { return words_; }
  std::span<const Word> words() const { return words_; }

  friend bool operator==(const BitColumn&, const BitColumn&) = default;

 private:
  std::size_t size_ = 0;
  std::vector<Word> words_;
};

}  // namespace cfsim
