#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "biokey/certificate.hpp"
#include "biokey/crypto.hpp"
#include "biokey/features.hpp"
#include "biokey/key_agreement.hpp"
#include "biokey/minutiae.hpp"
#include "biokey/revocable.hpp"

namespace biokey {

enum class MessageType : std::uint8_t {
  kCert = 0x01,
  kDhPub = 0x02,
  kData = 0x03,
  kAbort = 0x04,
};

/// Frame: [type u8][u32 big-endian payload length][payload].
struct WireMessage {
  MessageType type = MessageType::kAbort;
  Bytes payload;

  friend bool operator==(const WireMessage&, const WireMessage&) = default;
};

Bytes encode_wire(const WireMessage& msg);
/// Exactly one frame; throws ProtocolError{kMalformed} otherwise.
WireMessage decode_wire(ByteView bytes);

/// Data payload: 12-byte nonce (big-endian 32-bit direction, 0 from the
/// initiator and 1 from the responder, then big-endian 64-bit counter)
/// followed by ciphertext and Poly1305 tag. Both directions share one key,
/// so the direction field keeps their nonces disjoint.
struct SealedMessage {
  aead::Nonce nonce{};
  Bytes ciphertext_and_tag;

  std::uint64_t counter() const;
  friend bool operator==(const SealedMessage&, const SealedMessage&) = default;
};

Bytes encode_sealed(const SealedMessage& sealed);
SealedMessage decode_sealed(ByteView bytes);

/// Machine-readable reason carried by 0x04 abort messages.
enum class AbortReason : std::uint8_t {
  kMalformedMessage = 0x01,
  kCertificateVerification = 0x02,
  kDegeneratePublicKey = 0x03,
  kFeatureExtraction = 0x04,
  kUnexpectedMessage = 0x05,
};

std::string_view reason_name(AbortReason reason);
WireMessage make_abort(AbortReason reason);

enum class Phase { kIdle, kCertSent, kPeerVerified, kPubKeySent, kEstablished, kFailed };

std::string_view phase_name(Phase phase);

enum class ProtocolErrorKind { kWrongPhase, kMalformed, kIntegrity, kReplay, kCounterExhausted };

class ProtocolError : public Error {
 public:
  ProtocolError(ProtocolErrorKind kind, const std::string& what) : Error(what), kind_(kind) {}
  ProtocolErrorKind kind() const { return kind_; }

 private:
  ProtocolErrorKind kind_;
};

struct HandshakeConfig {
  Certificate own_certificate;
  RsaPublicKey ca_public_key;
  /// When set, a peer certificate for any other identity is rejected.
  std::optional<std::string> expected_peer;
  DhGroup group = DhGroup::rfc3526_2048();
  QuantizationConfig quantization;
  std::uint64_t session_id = 0;
};

/// One side of the certificate-first handshake followed by DH and
/// authenticated messaging. Owned by a single logical session; not
/// thread-safe.
///
///   initiator: initiate -> on_peer_certificate -> exchange_dh -> establish
///   responder: on_peer_certificate (emits own cert) -> exchange_dh -> establish
///
/// Verification failures move the state to Failed and return an abort
/// message for the peer. Calling a step in the wrong phase throws
/// ProtocolError{kWrongPhase} and leaves the state unchanged.
class HandshakeState {
 public:
  explicit HandshakeState(HandshakeConfig config);
  ~HandshakeState();
  HandshakeState(const HandshakeState&) = delete;
  HandshakeState& operator=(const HandshakeState&) = delete;

  WireMessage initiate();

  /// Responder: own certificate on success. Initiator: nullopt on success.
  /// Either role: abort message on failure.
  std::optional<WireMessage> on_peer_certificate(const WireMessage& msg);

  /// Runs features -> permutation -> private key -> public key. Returns the
  /// 0x02 message, or an abort if the fingerprint cannot be used.
  WireMessage exchange_dh(const MinutiaeSet& fingerprint, const TransformationKey& fresh_t);

  /// nullopt on success (session_key() is then set); abort message on failure.
  std::optional<WireMessage> establish(const WireMessage& peer_pub);

  /// Local failure (e.g. an undecodable frame); returns the abort to send.
  WireMessage abort(AbortReason reason);

  /// Records a peer abort and fails the session.
  void on_abort(const WireMessage& msg);

  SealedMessage seal(ByteView plaintext);
  /// Verifies the tag, then requires the counter to exceed the last one seen.
  Bytes open(const SealedMessage& sealed);

  /// Wipes the session key and returns to Idle. The zeroize observer (if
  /// any) runs once per wiped key.
  void teardown();

  Phase phase() const { return phase_; }
  bool is_initiator() const { return initiator_; }
  const std::optional<Identity>& peer_identity() const { return peer_identity_; }
  const std::optional<SessionKey>& session_key() const { return session_key_; }
  const std::optional<PublicKey>& own_public_key() const { return own_public_; }
  std::optional<AbortReason> failure() const { return failure_; }
  std::uint64_t send_counter() const { return send_counter_; }
  std::uint64_t recv_counter() const { return recv_counter_; }

  /// Test instrumentation: called with the key buffer right after wiping.
  void set_zeroize_observer(std::function<void(std::span<const std::uint8_t>)> observer) {
    zeroize_observer_ = std::move(observer);
  }

 private:
  WireMessage fail(AbortReason reason);
  void require_phase(Phase expected, std::string_view op) const;
  void wipe_secrets();

  HandshakeConfig config_;
  Phase phase_ = Phase::kIdle;
  bool initiator_ = false;
  std::optional<Identity> peer_identity_;
  std::optional<PrivateKey> private_key_;
  std::optional<PublicKey> own_public_;
  std::optional<SessionKey> session_key_;
  std::optional<AbortReason> failure_;
  std::uint64_t send_counter_ = 0;
  std::uint64_t recv_counter_ = 0;
  std::function<void(std::span<const std::uint8_t>)> zeroize_observer_;
};

/// One delivered frame, as seen on the wire.
struct TranscriptRecord {
  std::string from;
  std::string to;
  Bytes frame;

  friend bool operator==(const TranscriptRecord&, const TranscriptRecord&) = default;
};

using Transcript = std::vector<TranscriptRecord>;

/// One line per frame: "<from> <to> <hex frame>".
std::string export_transcript(const Transcript& transcript);
Transcript import_transcript(std::string_view text);

}  // namespace biokey
