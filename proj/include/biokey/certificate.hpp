#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "biokey/crypto.hpp"
#include "biokey/error.hpp"
#include "biokey/rsa.hpp"

namespace biokey {

inline constexpr std::size_t kMaxUserIdBytes = 64;

/// User identifier: 1..64 bytes, no whitespace or control characters (it is
/// a field of the space-separated registry file).
struct Identity {
  std::string user_id;

  void validate() const;
  friend bool operator==(const Identity&, const Identity&) = default;
};

struct Certificate {
  Identity identity;
  RsaPublicKey user_public_key;
  Digest digest{};
  Bytes signature;
};

enum class CertificateErrorKind {
  kInvalidIdentity,
  kEnrollmentConflict,
  kMalformedPublicKey,
  kMalformedRequest,
  kMalformedEncoding,
  kDigestMismatch,
  kSignatureInvalid,
};

class CertificateError : public Error {
 public:
  CertificateError(CertificateErrorKind kind, const std::string& what) : Error(what), kind_(kind) {}
  CertificateErrorKind kind() const { return kind_; }

 private:
  CertificateErrorKind kind_;
};

/// SHA-256(public key DER || user id bytes).
Digest certificate_digest(const RsaPublicKey& user_pub, const Identity& identity);

/// [u16 id_len][id][u16 pub_len][pub DER][32-byte digest][u16 sig_len][sig], big-endian.
Bytes encode_certificate(const Certificate& cert);
/// Throws CertificateError{kMalformedEncoding} on any framing or key error.
Certificate decode_certificate(ByteView encoded);

/// Recomputes the digest, then checks the CA signature over it.
Identity verify_certificate(const RsaPublicKey& ca_pub, const Certificate& cert);
Identity verify_certificate(const RsaPublicKey& ca_pub, ByteView encoded);

struct RegistryEntry {
  std::string user_id;
  Digest public_key_fingerprint{};
  std::int64_t enrolled_at = 0;  // unix seconds

  friend bool operator==(const RegistryEntry&, const RegistryEntry&) = default;
};

/// "<user_id> <hex pub fingerprint> <timestamp>"
std::string format_registry_line(const RegistryEntry& entry);
std::vector<RegistryEntry> parse_registry(std::string_view text);

/// Hybrid-encrypts (identity, public key) to the CA: a fresh 256-bit key is
/// RSA-OAEP wrapped and the payload sealed with ChaCha20-Poly1305.
Bytes seal_enrollment_request(const RsaPublicKey& ca_pub, const Identity& identity,
                              const RsaPublicKey& user_pub, RandomSource& rng);

/// Issues certificates and keeps the enrollment registry. enroll() mutates
/// state; callers serialize access (single writer).
class CertificateAuthority {
 public:
  explicit CertificateAuthority(RsaKeyPair keypair);

  const RsaPublicKey& public_key() const { return keypair_.public_key(); }
  const RsaKeyPair& keypair() const { return keypair_; }

  Certificate enroll(const Identity& identity, const RsaPublicKey& user_pub, std::int64_t timestamp);
  /// Parses the DER first; a malformed key is rejected before any state change.
  Certificate enroll(const Identity& identity, ByteView user_pub_der, std::int64_t timestamp);
  Certificate enroll_sealed(ByteView sealed_request, std::int64_t timestamp);

  /// Restores registry entries (e.g. from a registry file) so duplicate ids
  /// keep being rejected across runs.
  void restore(const std::vector<RegistryEntry>& entries);

  bool is_enrolled(std::string_view user_id) const;
  const std::map<std::string, RegistryEntry, std::less<>>& registry() const { return registry_; }

 private:
  RsaKeyPair keypair_;
  std::map<std::string, RegistryEntry, std::less<>> registry_;
};

}  // namespace biokey
