#include "biokey/bitvector.hpp"

#include <algorithm>
#include <bit>
#include <cstring>

#include "biokey/error.hpp"

namespace biokey {

BitVector BitVector::from_bytes(ByteView packed, std::size_t n_bits) {
  if (packed.size() != (n_bits + 7) / 8) throw InvalidArgument("packed length does not match bit count");
  BitVector out(n_bits);
  std::copy(packed.begin(), packed.end(), out.bytes_.begin());
  if (n_bits % 8 != 0) {
    const auto tail_mask = static_cast<std::uint8_t>(0xFFu >> (n_bits % 8));
    if (out.bytes_.back() & tail_mask) throw InvalidArgument("padding bits must be zero");
  }
  return out;
}

BitVector BitVector::from_string(std::string_view bits) {
  BitVector out(bits.size());
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i] == '1')
      out.set(i);
    else if (bits[i] != '0')
      throw InvalidArgument("bit string may only contain '0' and '1'");
  }
  return out;
}

std::size_t BitVector::popcount() const {
  std::size_t n = 0;
  for (auto b : bytes_) n += static_cast<std::size_t>(std::popcount(b));
  return n;
}

std::size_t BitVector::hamming(const BitVector& other) const {
  if (other.n_bits_ != n_bits_) throw InvalidArgument("bit vector lengths differ");
  std::size_t n = 0;
  std::size_t i = 0;
  for (; i + 8 <= bytes_.size(); i += 8) {
    std::uint64_t a = 0, b = 0;
    std::memcpy(&a, bytes_.data() + i, 8);
    std::memcpy(&b, other.bytes_.data() + i, 8);
    n += static_cast<std::size_t>(std::popcount(a ^ b));
  }
  for (; i < bytes_.size(); ++i)
    n += static_cast<std::size_t>(std::popcount(static_cast<std::uint8_t>(bytes_[i] ^ other.bytes_[i])));
  return n;
}

std::string BitVector::to_string() const {
  std::string s(n_bits_, '0');
  for (std::size_t i = 0; i < n_bits_; ++i)
    if (test(i)) s[i] = '1';
  return s;
}

}  // namespace biokey
