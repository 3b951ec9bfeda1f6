#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

#include "biokey/bytes.hpp"

namespace biokey {

/// Fixed-length bit vector packed MSB-first: bit 0 is the most significant
/// bit of byte 0. Unused trailing bits of the last byte are always zero.
class BitVector {
 public:
  BitVector() = default;
  explicit BitVector(std::size_t n_bits) : n_bits_(n_bits), bytes_((n_bits + 7) / 8, 0) {}

  static BitVector from_bytes(ByteView packed, std::size_t n_bits);
  /// Accepts a string of '0'/'1' characters.
  static BitVector from_string(std::string_view bits);

  std::size_t size() const { return n_bits_; }
  bool test(std::size_t i) const { return (bytes_[i >> 3] >> (7 - (i & 7))) & 1u; }
  void set(std::size_t i, bool value = true) {
    const auto mask = static_cast<std::uint8_t>(0x80u >> (i & 7));
    if (value)
      bytes_[i >> 3] |= mask;
    else
      bytes_[i >> 3] &= static_cast<std::uint8_t>(~mask);
  }
  void flip(std::size_t i) { bytes_[i >> 3] ^= static_cast<std::uint8_t>(0x80u >> (i & 7)); }
  void swap_bits(std::size_t i, std::size_t j) {
    const bool a = test(i), b = test(j);
    if (a != b) {
      flip(i);
      flip(j);
    }
  }

  std::size_t popcount() const;
  /// Number of positions where the two vectors differ; sizes must match.
  std::size_t hamming(const BitVector& other) const;

  ByteView bytes() const { return bytes_; }
  std::string to_string() const;

  friend bool operator==(const BitVector&, const BitVector&) = default;

 private:
  std::size_t n_bits_ = 0;
  Bytes bytes_;
};

}  // namespace biokey
