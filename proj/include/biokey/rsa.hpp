#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <string_view>

#include "biokey/bytes.hpp"
#include "biokey/crypto.hpp"

struct evp_pkey_st;

namespace biokey {

inline constexpr std::size_t kRsaModulusBits = 2048;

/// RSA-2048 public key, carried as its DER SubjectPublicKeyInfo encoding.
class RsaPublicKey {
 public:
  /// Rejects anything that is not a canonically encoded 2048-bit RSA key.
  static RsaPublicKey from_der(ByteView der);

  const Bytes& der() const { return der_; }
  Digest fingerprint() const { return sha256(der_); }

  /// PKCS#1 v1.5 signature check over a SHA-256 digest.
  bool verify_digest(const Digest& digest, ByteView signature) const;

  /// RSA-OAEP with SHA-256 and MGF1-SHA-256.
  Bytes encrypt(ByteView plaintext) const;

  friend bool operator==(const RsaPublicKey& a, const RsaPublicKey& b) { return a.der_ == b.der_; }

 private:
  friend class RsaKeyPair;
  RsaPublicKey(std::shared_ptr<evp_pkey_st> key, Bytes der);

  std::shared_ptr<evp_pkey_st> key_;
  Bytes der_;
};

class RsaKeyPair {
 public:
  /// Deterministic for a deterministic `rng`: primes are found by incremental
  /// search from random odd starting points.
  static RsaKeyPair generate(RandomSource& rng, std::size_t bits = kRsaModulusBits);

  static RsaKeyPair from_pem(std::string_view pem);
  std::string to_pem() const;

  const RsaPublicKey& public_key() const { return public_; }

  /// Deterministic PKCS#1 v1.5 signature over a SHA-256 digest.
  Bytes sign_digest(const Digest& digest) const;
  Bytes decrypt(ByteView ciphertext) const;

 private:
  explicit RsaKeyPair(std::shared_ptr<evp_pkey_st> key);

  std::shared_ptr<evp_pkey_st> key_;
  RsaPublicKey public_;
};

}  // namespace biokey
