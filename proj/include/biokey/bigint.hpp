#pragma once

#include <compare>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>

#include "biokey/bytes.hpp"

struct bignum_st;

namespace biokey {

/// Non-negative arbitrary-precision integer with value semantics.
class BigInt {
 public:
  BigInt();
  explicit BigInt(std::uint64_t v);
  BigInt(const BigInt& other);
  BigInt& operator=(const BigInt& other);
  BigInt(BigInt&&) noexcept;
  BigInt& operator=(BigInt&&) noexcept;
  ~BigInt();

  static BigInt from_hex(std::string_view hex);
  static BigInt from_dec(std::string_view dec);
  static BigInt from_bytes(ByteView big_endian);

  /// Big-endian, left-padded to `width`; throws InvalidArgument if it does not fit.
  Bytes to_bytes(std::size_t width) const;
  Bytes to_bytes() const;
  std::string to_hex() const;
  std::string to_dec() const;

  std::size_t bit_length() const;
  std::size_t byte_length() const { return (bit_length() + 7) / 8; }
  bool is_zero() const;
  bool is_odd() const;

  BigInt minus(std::uint64_t v) const;

  /// base^exp mod m via constant-structure Montgomery exponentiation; m must be odd.
  static BigInt mod_exp(const BigInt& base, const BigInt& exp, const BigInt& m);

  friend bool operator==(const BigInt& a, const BigInt& b);
  friend std::strong_ordering operator<=>(const BigInt& a, const BigInt& b);

  const bignum_st* raw() const { return bn_.get(); }

 private:
  struct Deleter {
    void operator()(bignum_st* bn) const;
  };
  explicit BigInt(bignum_st* owned);

  std::unique_ptr<bignum_st, Deleter> bn_;
};

}  // namespace biokey
