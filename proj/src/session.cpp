#include "biokey/session.hpp"

#include <limits>

namespace biokey {

Bytes encode_wire(const WireMessage& msg) {
  if (msg.payload.size() > std::numeric_limits<std::uint32_t>::max())
    throw ProtocolError(ProtocolErrorKind::kMalformed, "payload too large");
  Bytes out;
  out.reserve(5 + msg.payload.size());
  out.push_back(static_cast<std::uint8_t>(msg.type));
  put_u32(out, static_cast<std::uint32_t>(msg.payload.size()));
  out.insert(out.end(), msg.payload.begin(), msg.payload.end());
  return out;
}

WireMessage decode_wire(ByteView bytes) {
  try {
    ByteReader r(bytes);
    const auto type = r.u8();
    if (type < 0x01 || type > 0x04) throw ProtocolError(ProtocolErrorKind::kMalformed, "unknown message type");
    const auto len = r.u32();
    auto payload = r.take(len);
    if (!r.done()) throw ProtocolError(ProtocolErrorKind::kMalformed, "trailing bytes after frame");
    return {static_cast<MessageType>(type), Bytes(payload.begin(), payload.end())};
  } catch (const ProtocolError&) {
    throw;
  } catch (const Error&) {
    throw ProtocolError(ProtocolErrorKind::kMalformed, "truncated frame");
  }
}

std::uint64_t SealedMessage::counter() const {
  std::uint64_t v = 0;
  for (std::size_t i = 4; i < nonce.size(); ++i) v = v << 8 | nonce[i];
  return v;
}

Bytes encode_sealed(const SealedMessage& sealed) {
  Bytes out(sealed.nonce.begin(), sealed.nonce.end());
  out.insert(out.end(), sealed.ciphertext_and_tag.begin(), sealed.ciphertext_and_tag.end());
  return out;
}

SealedMessage decode_sealed(ByteView bytes) {
  if (bytes.size() < aead::kNonceSize + aead::kTagSize)
    throw ProtocolError(ProtocolErrorKind::kMalformed, "sealed message too short");
  SealedMessage out;
  std::copy(bytes.begin(), bytes.begin() + aead::kNonceSize, out.nonce.begin());
  out.ciphertext_and_tag.assign(bytes.begin() + aead::kNonceSize, bytes.end());
  return out;
}

std::string_view reason_name(AbortReason reason) {
  switch (reason) {
    case AbortReason::kMalformedMessage: return "malformed-message";
    case AbortReason::kCertificateVerification: return "certificate-verification";
    case AbortReason::kDegeneratePublicKey: return "degenerate-public-key";
    case AbortReason::kFeatureExtraction: return "feature-extraction";
    case AbortReason::kUnexpectedMessage: return "unexpected-message";
  }
  return "unknown";
}

WireMessage make_abort(AbortReason reason) {
  return {MessageType::kAbort, Bytes{static_cast<std::uint8_t>(reason)}};
}

std::string_view phase_name(Phase phase) {
  switch (phase) {
    case Phase::kIdle: return "Idle";
    case Phase::kCertSent: return "CertSent";
    case Phase::kPeerVerified: return "PeerVerified";
    case Phase::kPubKeySent: return "PubKeySent";
    case Phase::kEstablished: return "Established";
    case Phase::kFailed: return "Failed";
  }
  return "unknown";
}

HandshakeState::HandshakeState(HandshakeConfig config) : config_(std::move(config)) {}

HandshakeState::~HandshakeState() { wipe_secrets(); }

void HandshakeState::require_phase(Phase expected, std::string_view op) const {
  if (phase_ != expected)
    throw ProtocolError(ProtocolErrorKind::kWrongPhase,
                        std::string(op) + " not allowed in phase " + std::string(phase_name(phase_)));
}

void HandshakeState::wipe_secrets() {
  private_key_.reset();  // PrivateKey wipes itself
  if (session_key_) {
    session_key_->zeroize();
    if (zeroize_observer_) zeroize_observer_(session_key_->key);
    session_key_.reset();
  }
}

WireMessage HandshakeState::fail(AbortReason reason) {
  wipe_secrets();
  phase_ = Phase::kFailed;
  failure_ = reason;
  return make_abort(reason);
}

WireMessage HandshakeState::initiate() {
  require_phase(Phase::kIdle, "initiate");
  initiator_ = true;
  phase_ = Phase::kCertSent;
  return {MessageType::kCert, encode_certificate(config_.own_certificate)};
}

std::optional<WireMessage> HandshakeState::on_peer_certificate(const WireMessage& msg) {
  if (phase_ != Phase::kIdle && phase_ != Phase::kCertSent)
    throw ProtocolError(ProtocolErrorKind::kWrongPhase,
                        "peer certificate not expected in phase " + std::string(phase_name(phase_)));
  if (msg.type != MessageType::kCert) return fail(AbortReason::kUnexpectedMessage);

  std::optional<Certificate> cert;
  try {
    cert = decode_certificate(msg.payload);
  } catch (const CertificateError&) {
    return fail(AbortReason::kMalformedMessage);
  }

  try {
    Identity peer = verify_certificate(config_.ca_public_key, *cert);
    if (config_.expected_peer && peer.user_id != *config_.expected_peer)
      return fail(AbortReason::kCertificateVerification);
    peer_identity_ = std::move(peer);
  } catch (const CertificateError&) {
    return fail(AbortReason::kCertificateVerification);
  }

  const bool responder = phase_ == Phase::kIdle;
  phase_ = Phase::kPeerVerified;
  if (responder) return WireMessage{MessageType::kCert, encode_certificate(config_.own_certificate)};
  return std::nullopt;
}

WireMessage HandshakeState::exchange_dh(const MinutiaeSet& fingerprint, const TransformationKey& fresh_t) {
  require_phase(Phase::kPeerVerified, "exchange_dh");
  try {
    FeatureBitString features = extract_features(fingerprint, config_.quantization);
    RevocableTemplate tpl = permute(features, fresh_t);
    private_key_.emplace(derive_private_key(tpl));
    own_public_ = public_key(config_.group, *private_key_);
  } catch (const Error&) {
    return fail(AbortReason::kFeatureExtraction);
  }
  phase_ = Phase::kPubKeySent;
  return {MessageType::kDhPub, encode_public_key(*own_public_)};
}

std::optional<WireMessage> HandshakeState::establish(const WireMessage& peer_pub) {
  require_phase(Phase::kPubKeySent, "establish");
  if (peer_pub.type != MessageType::kDhPub) return fail(AbortReason::kUnexpectedMessage);
  if (peer_pub.payload.size() != kDhElementBytes) return fail(AbortReason::kMalformedMessage);
  try {
    PublicKey other = decode_public_key(peer_pub.payload, config_.group);
    BigInt intermediate = shared_secret(config_.group, *private_key_, other);
    session_key_ = biokey::session_key(intermediate, config_.session_id);
  } catch (const KeyAgreementError&) {
    return fail(AbortReason::kDegeneratePublicKey);
  }
  private_key_.reset();
  phase_ = Phase::kEstablished;
  return std::nullopt;
}

WireMessage HandshakeState::abort(AbortReason reason) { return fail(reason); }

void HandshakeState::on_abort(const WireMessage& msg) {
  AbortReason reason = AbortReason::kMalformedMessage;
  if (msg.type == MessageType::kAbort && msg.payload.size() == 1 && msg.payload[0] >= 0x01 && msg.payload[0] <= 0x05)
    reason = static_cast<AbortReason>(msg.payload[0]);
  wipe_secrets();
  phase_ = Phase::kFailed;
  failure_ = reason;
}

SealedMessage HandshakeState::seal(ByteView plaintext) {
  require_phase(Phase::kEstablished, "seal");
  if (send_counter_ == std::numeric_limits<std::uint64_t>::max())
    throw ProtocolError(ProtocolErrorKind::kCounterExhausted, "send counter exhausted");
  const std::uint64_t counter = ++send_counter_;
  SealedMessage out;
  out.nonce[3] = initiator_ ? 0 : 1;
  for (int i = 0; i < 8; ++i) out.nonce[4 + static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(counter >> (56 - 8 * i));
  out.ciphertext_and_tag = aead::seal(session_key_->key, out.nonce, {}, plaintext);
  return out;
}

Bytes HandshakeState::open(const SealedMessage& sealed) {
  require_phase(Phase::kEstablished, "open");
  const std::uint8_t peer_direction = initiator_ ? 1 : 0;
  if (sealed.nonce[0] != 0 || sealed.nonce[1] != 0 || sealed.nonce[2] != 0 || sealed.nonce[3] != peer_direction)
    throw ProtocolError(ProtocolErrorKind::kIntegrity, "nonce direction does not match the peer");
  auto plaintext = aead::open(session_key_->key, sealed.nonce, {}, sealed.ciphertext_and_tag);
  if (!plaintext) throw ProtocolError(ProtocolErrorKind::kIntegrity, "message failed authentication");
  if (sealed.counter() <= recv_counter_) {
    secure_wipe(*plaintext);
    throw ProtocolError(ProtocolErrorKind::kReplay, "stale or duplicate message counter");
  }
  recv_counter_ = sealed.counter();
  return std::move(*plaintext);
}

void HandshakeState::teardown() {
  wipe_secrets();
  phase_ = Phase::kIdle;
  initiator_ = false;
  peer_identity_.reset();
  own_public_.reset();
  failure_.reset();
  send_counter_ = 0;
  recv_counter_ = 0;
}

std::string export_transcript(const Transcript& transcript) {
  std::string out;
  for (const auto& rec : transcript) out += rec.from + " " + rec.to + " " + to_hex(rec.frame) + "\n";
  return out;
}

Transcript import_transcript(std::string_view text) {
  Transcript out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(pos, end - pos);
    pos = end + 1;
    if (line.empty()) continue;
    auto s1 = line.find(' ');
    auto s2 = s1 == std::string_view::npos ? s1 : line.find(' ', s1 + 1);
    if (s2 == std::string_view::npos) throw ProtocolError(ProtocolErrorKind::kMalformed, "malformed transcript line");
    TranscriptRecord rec{std::string(line.substr(0, s1)), std::string(line.substr(s1 + 1, s2 - s1 - 1)), {}};
    try {
      rec.frame = from_hex(line.substr(s2 + 1));
    } catch (const InvalidArgument&) {
      throw ProtocolError(ProtocolErrorKind::kMalformed, "malformed transcript hex");
    }
    out.push_back(std::move(rec));
  }
  return out;
}

}  // namespace biokey
