#include "biokey/bigint.hpp"

#include <openssl/bn.h>
#include <openssl/crypto.h>

#include <string>

#include "biokey/error.hpp"

namespace biokey {

namespace {

struct CtxDeleter {
  void operator()(BN_CTX* c) const { BN_CTX_free(c); }
};

BIGNUM* checked(BIGNUM* bn) {
  if (bn == nullptr) throw Error("BIGNUM allocation failed");
  return bn;
}

}  // namespace

void BigInt::Deleter::operator()(bignum_st* bn) const { BN_clear_free(bn); }

BigInt::BigInt() : bn_(checked(BN_new())) {}

BigInt::BigInt(std::uint64_t v) : BigInt() {
  if (BN_set_word(bn_.get(), v) != 1) throw Error("BN_set_word failed");
}

BigInt::BigInt(bignum_st* owned) : bn_(checked(owned)) {}

BigInt::BigInt(const BigInt& other) : bn_(checked(BN_dup(other.bn_.get()))) {}

BigInt& BigInt::operator=(const BigInt& other) {
  if (this != &other) bn_.reset(checked(BN_dup(other.bn_.get())));
  return *this;
}

BigInt::BigInt(BigInt&& other) noexcept : bn_(std::move(other.bn_)) {}

BigInt& BigInt::operator=(BigInt&& other) noexcept {
  bn_ = std::move(other.bn_);
  return *this;
}

BigInt::~BigInt() = default;

BigInt BigInt::from_hex(std::string_view hex) {
  std::string s(hex);
  if (s.starts_with("0x") || s.starts_with("0X")) s.erase(0, 2);
  if (s.empty() || s.find_first_not_of("0123456789abcdefABCDEF") != std::string::npos)
    throw InvalidArgument("invalid hex integer");
  BIGNUM* bn = nullptr;
  if (BN_hex2bn(&bn, s.c_str()) != static_cast<int>(s.size())) {
    BN_free(bn);
    throw InvalidArgument("invalid hex integer");
  }
  return BigInt(bn);
}

BigInt BigInt::from_dec(std::string_view dec) {
  std::string s(dec);
  if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos)
    throw InvalidArgument("invalid decimal integer");
  BIGNUM* bn = nullptr;
  if (BN_dec2bn(&bn, s.c_str()) != static_cast<int>(s.size())) {
    BN_free(bn);
    throw InvalidArgument("invalid decimal integer");
  }
  return BigInt(bn);
}

BigInt BigInt::from_bytes(ByteView big_endian) {
  return BigInt(BN_bin2bn(big_endian.data(), static_cast<int>(big_endian.size()), nullptr));
}

Bytes BigInt::to_bytes(std::size_t width) const {
  if (byte_length() > width) throw InvalidArgument("integer does not fit in requested width");
  Bytes out(width);
  if (width > 0 && BN_bn2binpad(bn_.get(), out.data(), static_cast<int>(width)) < 0)
    throw Error("BN_bn2binpad failed");
  return out;
}

Bytes BigInt::to_bytes() const { return to_bytes(byte_length()); }

std::string BigInt::to_hex() const {
  char* s = BN_bn2hex(bn_.get());
  if (s == nullptr) throw Error("BN_bn2hex failed");
  std::string out(s);
  OPENSSL_free(s);
  return out;
}

std::string BigInt::to_dec() const {
  char* s = BN_bn2dec(bn_.get());
  if (s == nullptr) throw Error("BN_bn2dec failed");
  std::string out(s);
  OPENSSL_free(s);
  return out;
}

std::size_t BigInt::bit_length() const { return static_cast<std::size_t>(BN_num_bits(bn_.get())); }

bool BigInt::is_zero() const { return BN_is_zero(bn_.get()) == 1; }

bool BigInt::is_odd() const { return BN_is_odd(bn_.get()) == 1; }

BigInt BigInt::minus(std::uint64_t v) const {
  BigInt out(*this);
  if (BN_sub_word(out.bn_.get(), v) != 1 || BN_is_negative(out.bn_.get()))
    throw InvalidArgument("BigInt subtraction underflow");
  return out;
}

BigInt BigInt::mod_exp(const BigInt& base, const BigInt& exp, const BigInt& m) {
  if (!m.is_odd()) throw InvalidArgument("modulus must be odd");
  std::unique_ptr<BN_CTX, CtxDeleter> ctx(BN_CTX_new());
  if (!ctx) throw Error("BN_CTX_new failed");
  BigInt out;
  if (BN_mod_exp_mont_consttime(out.bn_.get(), base.bn_.get(), exp.bn_.get(), m.bn_.get(), ctx.get(),
                                nullptr) != 1)
    throw Error("modular exponentiation failed");
  return out;
}

bool operator==(const BigInt& a, const BigInt& b) { return BN_cmp(a.bn_.get(), b.bn_.get()) == 0; }

std::strong_ordering operator<=>(const BigInt& a, const BigInt& b) {
  int c = BN_cmp(a.bn_.get(), b.bn_.get());
  if (c < 0) return std::strong_ordering::less;
  if (c > 0) return std::strong_ordering::greater;
  return std::strong_ordering::equal;
}

}  // namespace biokey
