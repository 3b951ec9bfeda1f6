#include "biokey/certificate.hpp"

#include <charconv>
#include <optional>

namespace biokey {

namespace {

Bytes encode_request_payload(const Identity& identity, const RsaPublicKey& user_pub) {
  Bytes out;
  put_u16(out, static_cast<std::uint16_t>(identity.user_id.size()));
  out.insert(out.end(), identity.user_id.begin(), identity.user_id.end());
  put_u16(out, static_cast<std::uint16_t>(user_pub.der().size()));
  out.insert(out.end(), user_pub.der().begin(), user_pub.der().end());
  return out;
}

}  // namespace

void Identity::validate() const {
  if (user_id.empty() || user_id.size() > kMaxUserIdBytes)
    throw CertificateError(CertificateErrorKind::kInvalidIdentity, "user id must be 1..64 bytes");
  for (unsigned char c : user_id)
    if (c <= 0x20 || c == 0x7f)
      throw CertificateError(CertificateErrorKind::kInvalidIdentity, "user id contains whitespace or control bytes");
}

Digest certificate_digest(const RsaPublicKey& user_pub, const Identity& identity) {
  Sha256 h;
  h.update(user_pub.der());
  h.update(as_bytes(identity.user_id));
  return h.finish();
}

Bytes encode_certificate(const Certificate& cert) {
  const auto& id = cert.identity.user_id;
  const auto& der = cert.user_public_key.der();
  if (id.size() > 0xFFFF || der.size() > 0xFFFF || cert.signature.size() > 0xFFFF)
    throw CertificateError(CertificateErrorKind::kMalformedEncoding, "certificate field too long");
  Bytes out;
  put_u16(out, static_cast<std::uint16_t>(id.size()));
  out.insert(out.end(), id.begin(), id.end());
  put_u16(out, static_cast<std::uint16_t>(der.size()));
  out.insert(out.end(), der.begin(), der.end());
  out.insert(out.end(), cert.digest.begin(), cert.digest.end());
  put_u16(out, static_cast<std::uint16_t>(cert.signature.size()));
  out.insert(out.end(), cert.signature.begin(), cert.signature.end());
  return out;
}

Certificate decode_certificate(ByteView encoded) {
  try {
    ByteReader r(encoded);
    auto id = r.take(r.u16());
    auto der = r.take(r.u16());
    auto digest = r.take(32);
    auto sig = r.take(r.u16());
    if (!r.done()) throw CertificateError(CertificateErrorKind::kMalformedEncoding, "trailing bytes after certificate");
    Certificate cert{Identity{std::string(id.begin(), id.end())}, RsaPublicKey::from_der(der), {},
                     Bytes(sig.begin(), sig.end())};
    std::copy(digest.begin(), digest.end(), cert.digest.begin());
    return cert;
  } catch (const CertificateError&) {
    throw;
  } catch (const Error& e) {
    throw CertificateError(CertificateErrorKind::kMalformedEncoding, std::string("malformed certificate: ") + e.what());
  }
}

Identity verify_certificate(const RsaPublicKey& ca_pub, const Certificate& cert) {
  if (certificate_digest(cert.user_public_key, cert.identity) != cert.digest)
    throw CertificateError(CertificateErrorKind::kDigestMismatch, "certificate digest mismatch");
  if (!ca_pub.verify_digest(cert.digest, cert.signature))
    throw CertificateError(CertificateErrorKind::kSignatureInvalid, "certificate signature invalid");
  return cert.identity;
}

Identity verify_certificate(const RsaPublicKey& ca_pub, ByteView encoded) {
  return verify_certificate(ca_pub, decode_certificate(encoded));
}

std::string format_registry_line(const RegistryEntry& entry) {
  return entry.user_id + " " + to_hex(entry.public_key_fingerprint) + " " + std::to_string(entry.enrolled_at);
}

std::vector<RegistryEntry> parse_registry(std::string_view text) {
  std::vector<RegistryEntry> out;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.empty()) continue;
    auto bad = [&] {
      return CertificateError(CertificateErrorKind::kMalformedEncoding,
                              "registry line " + std::to_string(line_no) + " malformed");
    };
    auto s1 = line.find(' ');
    auto s2 = s1 == std::string_view::npos ? s1 : line.find(' ', s1 + 1);
    if (s2 == std::string_view::npos || line.find(' ', s2 + 1) != std::string_view::npos) throw bad();
    RegistryEntry e;
    e.user_id = std::string(line.substr(0, s1));
    Bytes fp;
    try {
      fp = from_hex(line.substr(s1 + 1, s2 - s1 - 1));
    } catch (const InvalidArgument&) {
      throw bad();
    }
    if (fp.size() != e.public_key_fingerprint.size()) throw bad();
    std::copy(fp.begin(), fp.end(), e.public_key_fingerprint.begin());
    auto ts = line.substr(s2 + 1);
    auto [ptr, ec] = std::from_chars(ts.data(), ts.data() + ts.size(), e.enrolled_at);
    if (ec != std::errc() || ptr != ts.data() + ts.size()) throw bad();
    Identity{e.user_id}.validate();
    out.push_back(std::move(e));
  }
  return out;
}

Bytes seal_enrollment_request(const RsaPublicKey& ca_pub, const Identity& identity, const RsaPublicKey& user_pub,
                              RandomSource& rng) {
  identity.validate();
  aead::Key key{};
  rng.fill(key);
  Bytes wrapped = ca_pub.encrypt(key);
  Bytes sealed = aead::seal(key, aead::Nonce{}, {}, encode_request_payload(identity, user_pub));
  secure_wipe(key);
  Bytes out;
  put_u16(out, static_cast<std::uint16_t>(wrapped.size()));
  out.insert(out.end(), wrapped.begin(), wrapped.end());
  out.insert(out.end(), sealed.begin(), sealed.end());
  return out;
}

CertificateAuthority::CertificateAuthority(RsaKeyPair keypair) : keypair_(std::move(keypair)) {}

Certificate CertificateAuthority::enroll(const Identity& identity, const RsaPublicKey& user_pub,
                                         std::int64_t timestamp) {
  identity.validate();
  if (is_enrolled(identity.user_id))
    throw CertificateError(CertificateErrorKind::kEnrollmentConflict, "user id already enrolled: " + identity.user_id);
  Certificate cert{identity, user_pub, certificate_digest(user_pub, identity), {}};
  cert.signature = keypair_.sign_digest(cert.digest);
  registry_.emplace(identity.user_id, RegistryEntry{identity.user_id, user_pub.fingerprint(), timestamp});
  return cert;
}

Certificate CertificateAuthority::enroll(const Identity& identity, ByteView user_pub_der, std::int64_t timestamp) {
  std::optional<RsaPublicKey> pub;
  try {
    pub = RsaPublicKey::from_der(user_pub_der);
  } catch (const InvalidArgument& e) {
    throw CertificateError(CertificateErrorKind::kMalformedPublicKey, e.what());
  }
  return enroll(identity, *pub, timestamp);
}

Certificate CertificateAuthority::enroll_sealed(ByteView sealed_request, std::int64_t timestamp) {
  Bytes payload;
  try {
    ByteReader r(sealed_request);
    auto wrapped = r.take(r.u16());
    auto sealed = r.take(r.remaining());
    Bytes key_bytes = keypair_.decrypt(wrapped);
    if (key_bytes.size() != aead::kKeySize) throw Error("wrapped key has wrong size");
    aead::Key key{};
    std::copy(key_bytes.begin(), key_bytes.end(), key.begin());
    secure_wipe(key_bytes);
    auto opened = aead::open(key, aead::Nonce{}, {}, sealed);
    secure_wipe(key);
    if (!opened) throw Error("enrollment payload failed authentication");
    payload = std::move(*opened);
  } catch (const Error& e) {
    throw CertificateError(CertificateErrorKind::kMalformedRequest, std::string("bad enrollment request: ") + e.what());
  }

  Identity identity;
  Bytes der;
  try {
    ByteReader r(payload);
    auto id = r.take(r.u16());
    auto pub = r.take(r.u16());
    if (!r.done()) throw Error("trailing bytes");
    identity.user_id.assign(id.begin(), id.end());
    der.assign(pub.begin(), pub.end());
  } catch (const Error& e) {
    throw CertificateError(CertificateErrorKind::kMalformedRequest, std::string("bad enrollment payload: ") + e.what());
  }
  return enroll(identity, der, timestamp);
}

void CertificateAuthority::restore(const std::vector<RegistryEntry>& entries) {
  for (const auto& e : entries) {
    if (!registry_.emplace(e.user_id, e).second)
      throw CertificateError(CertificateErrorKind::kEnrollmentConflict, "duplicate registry entry: " + e.user_id);
  }
}

bool CertificateAuthority::is_enrolled(std::string_view user_id) const { return registry_.contains(user_id); }

}  // namespace biokey
