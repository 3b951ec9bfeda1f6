#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

#include "biokey/bigint.hpp"
#include "biokey/crypto.hpp"
#include "biokey/error.hpp"
#include "biokey/revocable.hpp"

namespace biokey {

/// RFC 3526 2048-bit MODP prime, generator 2.
inline constexpr std::string_view kRfc3526Modulus2048Hex =
    "FFFFFFFFFFFFFFFFC90FDAA22168C234C4C6628B80DC1CD1"
    "29024E088A67CC74020BBEA63B139B22514A08798E3404DD"
    "EF9519B3CD3A431B302B0A6DF25F14374FE1356D6D51C245"
    "E485B576625E7EC6F44C42E9A637ED6B0BFF5CB6F406B7ED"
    "EE386BFB5A899FA5AE9F24117C4B1FE649286651ECE45B3D"
    "C2007CB8A163BF0598DA48361C55D39A69163FA8FD24CF5F"
    "83655D23DCA3AD961C62F356208552BB9ED529077096966D"
    "670C354E4ABC9804F1746C08CA18217C32905E462E36CE3B"
    "E39E772C180E86039B2783A2EC07A28FB5C55DF06F4C52C9"
    "DE2BCBF6955817183995497CEA956AE515D2261898FA0510"
    "15728E5A8AACAA68FFFFFFFFFFFFFFFF";

/// Fixed width of public values and intermediate keys on the wire and
/// before the final hash.
inline constexpr std::size_t kDhElementBytes = 256;

enum class KeyAgreementErrorKind {
  kInvalidGroup,
  kZeroDigest,
  kZeroExponent,
  kDegeneratePublicKey,
  kIntermediateOutOfRange,
  kMalformedEncoding,
};

class KeyAgreementError : public Error {
 public:
  KeyAgreementError(KeyAgreementErrorKind kind, const std::string& what) : Error(what), kind_(kind) {}
  KeyAgreementErrorKind kind() const { return kind_; }

 private:
  KeyAgreementErrorKind kind_;
};

struct DhGroup {
  BigInt modulus;
  BigInt generator;

  static DhGroup rfc3526_2048();
  /// Requires an odd modulus > 3, 2 <= generator < modulus, and a modulus
  /// that fits the fixed element width.
  void validate() const;
};

/// Two lines: hex modulus, decimal generator.
DhGroup parse_dh_group(std::string_view text);
std::string serialize_dh_group(const DhGroup& group);

/// 256-bit DH exponent. Wiped on destruction.
class PrivateKey {
 public:
  using Storage = std::array<std::uint8_t, 32>;

  explicit PrivateKey(const Storage& bytes) : bytes_(bytes) {}
  static PrivateKey from_u64(std::uint64_t v);
  PrivateKey(const PrivateKey&) = default;
  PrivateKey& operator=(const PrivateKey&) = default;
  ~PrivateKey() { secure_wipe(bytes_); }

  const Storage& bytes() const { return bytes_; }
  BigInt exponent() const { return BigInt::from_bytes(bytes_); }
  bool is_zero() const;

  friend bool operator==(const PrivateKey&, const PrivateKey&) = default;

 private:
  Storage bytes_;
};

struct PublicKey {
  BigInt value;

  friend bool operator==(const PublicKey&, const PublicKey&) = default;
};

/// Symmetric key for one session. The id is bookkeeping only; it never
/// enters the key bytes.
struct SessionKey {
  std::array<std::uint8_t, 32> key{};
  std::uint64_t session_id = 0;

  void zeroize() { secure_wipe(key); }

  friend bool operator==(const SessionKey&, const SessionKey&) = default;
};

/// SHA-256 of the packed template bytes.
PrivateKey derive_private_key(const RevocableTemplate& tpl);

PublicKey public_key(const DhGroup& group, const PrivateKey& prv);

/// other^x mod q. Rejects peer values outside (1, q-1).
BigInt shared_secret(const DhGroup& group, const PrivateKey& prv, const PublicKey& other);

/// SHA-256 over the 256-byte big-endian encoding of the intermediate key.
SessionKey session_key(const BigInt& intermediate, std::uint64_t session_id);

/// 256-byte big-endian encoding.
Bytes encode_public_key(const PublicKey& pub);
/// Decodes and range-checks against the group.
PublicKey decode_public_key(ByteView encoded, const DhGroup& group);

}  // namespace biokey
