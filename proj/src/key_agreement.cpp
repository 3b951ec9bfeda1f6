#include "biokey/key_agreement.hpp"

#include <algorithm>

namespace biokey {

namespace {

void check_peer_value(const DhGroup& group, const BigInt& v) {
  if (v <= BigInt(1) || v >= group.modulus.minus(1))
    throw KeyAgreementError(KeyAgreementErrorKind::kDegeneratePublicKey, "degenerate DH public value");
}

}  // namespace

DhGroup DhGroup::rfc3526_2048() {
  return {BigInt::from_hex(kRfc3526Modulus2048Hex), BigInt(2)};
}

void DhGroup::validate() const {
  if (modulus <= BigInt(3) || !modulus.is_odd())
    throw KeyAgreementError(KeyAgreementErrorKind::kInvalidGroup, "DH modulus must be an odd integer > 3");
  if (modulus.byte_length() > kDhElementBytes)
    throw KeyAgreementError(KeyAgreementErrorKind::kInvalidGroup, "DH modulus exceeds 2048 bits");
  if (generator < BigInt(2) || generator >= modulus)
    throw KeyAgreementError(KeyAgreementErrorKind::kInvalidGroup, "DH generator must satisfy 2 <= g < q");
}

DhGroup parse_dh_group(std::string_view text) {
  const auto nl = text.find('\n');
  if (nl == std::string_view::npos)
    throw KeyAgreementError(KeyAgreementErrorKind::kInvalidGroup, "DH group file needs two lines");
  std::string_view gen = text.substr(nl + 1);
  while (!gen.empty() && (gen.back() == '\n' || gen.back() == ' ')) gen.remove_suffix(1);
  DhGroup group{BigInt(), BigInt()};
  try {
    group.modulus = BigInt::from_hex(text.substr(0, nl));
    group.generator = BigInt::from_dec(gen);
  } catch (const InvalidArgument& e) {
    throw KeyAgreementError(KeyAgreementErrorKind::kInvalidGroup, e.what());
  }
  group.validate();
  return group;
}

std::string serialize_dh_group(const DhGroup& group) {
  return group.modulus.to_hex() + "\n" + group.generator.to_dec() + "\n";
}

PrivateKey PrivateKey::from_u64(std::uint64_t v) {
  Storage s{};
  for (int i = 0; i < 8; ++i) s[31 - static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(v >> (8 * i));
  return PrivateKey(s);
}

bool PrivateKey::is_zero() const {
  return std::all_of(bytes_.begin(), bytes_.end(), [](std::uint8_t b) { return b == 0; });
}

PrivateKey derive_private_key(const RevocableTemplate& tpl) {
  Digest d = sha256(tpl.bits.bytes());
  PrivateKey key(d);
  secure_wipe(d);
  if (key.is_zero()) throw KeyAgreementError(KeyAgreementErrorKind::kZeroDigest, "template hashed to zero");
  return key;
}

PublicKey public_key(const DhGroup& group, const PrivateKey& prv) {
  group.validate();
  if (prv.is_zero()) throw KeyAgreementError(KeyAgreementErrorKind::kZeroExponent, "private exponent is zero");
  return {BigInt::mod_exp(group.generator, prv.exponent(), group.modulus)};
}

BigInt shared_secret(const DhGroup& group, const PrivateKey& prv, const PublicKey& other) {
  group.validate();
  if (prv.is_zero()) throw KeyAgreementError(KeyAgreementErrorKind::kZeroExponent, "private exponent is zero");
  check_peer_value(group, other.value);
  return BigInt::mod_exp(other.value, prv.exponent(), group.modulus);
}

SessionKey session_key(const BigInt& intermediate, std::uint64_t session_id) {
  if (intermediate < BigInt(2) || intermediate.byte_length() > kDhElementBytes)
    throw KeyAgreementError(KeyAgreementErrorKind::kIntermediateOutOfRange, "intermediate key out of range");
  Bytes encoded = intermediate.to_bytes(kDhElementBytes);
  SessionKey out;
  out.key = sha256(encoded);
  out.session_id = session_id;
  secure_wipe(encoded);
  return out;
}

Bytes encode_public_key(const PublicKey& pub) { return pub.value.to_bytes(kDhElementBytes); }

PublicKey decode_public_key(ByteView encoded, const DhGroup& group) {
  if (encoded.size() != kDhElementBytes)
    throw KeyAgreementError(KeyAgreementErrorKind::kMalformedEncoding, "DH public value must be 256 bytes");
  PublicKey pub{BigInt::from_bytes(encoded)};
  check_peer_value(group, pub.value);
  return pub;
}

}  // namespace biokey
