#pragma once

#include <cstdint>
#include <vector>

#include "ddsl/error.hpp"

namespace ddsl {

// Fixed-width bit vector backed by 64-bit words. Used for the per-vertex
// navigation bitmaps (one bit per partition), so widths stay tiny.
class DynamicBitset {
public:
  DynamicBitset() = default;
  explicit DynamicBitset(std::size_t bits) : bits_(bits), words_((bits + 63) / 64, 0) {}

  std::size_t size() const { return bits_; }

  void set(std::size_t i) {
    check(i);
    words_[i / 64] |= (std::uint64_t{1} << (i % 64));
  }

  void reset(std::size_t i) {
    check(i);
    words_[i / 64] &= ~(std::uint64_t{1} << (i % 64));
  }

  bool test(std::size_t i) const {
    check(i);
    return (words_[i / 64] >> (i % 64)) & 1;
  }

  bool any() const {
    for (auto w : words_)
      if (w) return true;
    return false;
  }

  std::size_t count() const {
    std::size_t c = 0;
    for (auto w : words_) c += static_cast<std::size_t>(__builtin_popcountll(w));
    return c;
  }

  DynamicBitset& operator&=(const DynamicBitset& other) {
    if (other.bits_ != bits_) throw DomainError("bitset width mismatch");
    for (std::size_t i = 0; i < words_.size(); ++i) words_[i] &= other.words_[i];
    return *this;
  }

  bool operator==(const DynamicBitset&) const = default;

  static DynamicBitset all_set(std::size_t bits) {
    DynamicBitset b(bits);
    for (std::size_t i = 0; i < bits; ++i) b.set(i);
    return b;
  }

  const std::vector<std::uint64_t>& words() const { return words_; }

  static DynamicBitset from_words(std::size_t bits, std::vector<std::uint64_t> words) {
    DynamicBitset b(bits);
    if (words.size() != b.words_.size()) throw DomainError("bitset word count mismatch");
    b.words_ = std::move(words);
    return b;
  }

private:
  void check(std::size_t i) const {
    if (i >= bits_) throw DomainError("bitset index out of range");
  }

  std::size_t bits_ = 0;
  std::vector<std::uint64_t> words_;
};

}  // namespace ddsl
