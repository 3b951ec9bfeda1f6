#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "biokey/certificate.hpp"
#include "biokey/key_agreement.hpp"
#include "biokey/minutiae.hpp"
#include "biokey/session.hpp"

namespace biokey {

/// A simulated user. The fingerprint is a live capture: it is used while a
/// session runs and never becomes part of the host's persisted state.
struct Party {
  Identity identity;
  RsaKeyPair rsa;
  Certificate certificate;
  MinutiaeSet fingerprint;
  std::uint64_t seed = 0;  // source of per-session transformation keys
};

/// What an attacker obtains by taking over a host mid-session.
struct HostState {
  TransformationKey transformation_key;
  SessionKey session_key;
  std::string rsa_private_pem;
  Bytes certificate;
};

enum class AdversaryMode { kNone, kPassive, kReplay, kMitm, kHostCompromise };

std::string_view mode_name(AdversaryMode mode);
AdversaryMode parse_mode(std::string_view name);

struct AdversaryPolicy {
  AdversaryMode mode = AdversaryMode::kNone;
  /// Every frame the adversary saw or injected.
  Transcript captured;
  /// Certificate substituted for the victims' certificates in Mitm mode.
  std::optional<Certificate> attacker_certificate;
  /// Private exponent used to substitute DH public values in Mitm mode.
  std::optional<PrivateKey> attacker_dh_key;
  /// Earlier transcript replayed towards the responder in Replay mode.
  Transcript replay_source;
  /// Raw secrets the adversary holds (stolen host state, derived keys).
  std::vector<Bytes> stolen;
};

struct ScriptedMessage {
  std::string sender;
  std::string text;
};

struct SimulationContext {
  RsaPublicKey ca_public_key;
  DhGroup group = DhGroup::rfc3526_2048();
  QuantizationConfig quantization;
  std::uint64_t session_id = 1;
  std::vector<ScriptedMessage> script;
};

/// Ordered, lossless delivery; the adversary (if any) sees every frame first.
class Channel {
 public:
  Channel(AdversaryPolicy& adversary, const DhGroup& group) : adversary_(adversary), group_(group) {}

  void send(const std::string& from, const std::string& to, const WireMessage& msg);
  std::optional<TranscriptRecord> next();
  const Transcript& delivered_log() const { return delivered_; }

 private:
  AdversaryPolicy& adversary_;
  const DhGroup& group_;
  std::deque<TranscriptRecord> pending_;
  Transcript delivered_;
};

struct SessionOutcome {
  bool established = false;
  bool attacker_learned_key = false;
  bool attacker_learned_plaintext = false;
  std::string failure_reason = "none";
  Transcript transcript;
  std::vector<std::string> delivered_plaintexts;
  /// Initiator host state at the end of the session, before teardown.
  std::optional<HostState> initiator_host;
};

/// Runs one handshake plus the scripted messages between initiator `a` and
/// responder `b` under the given adversary. Deterministic for fixed inputs.
SessionOutcome run_session(const Party& a, const Party& b, AdversaryPolicy& adversary, const SimulationContext& ctx);

struct SessionRecord {
  std::string initiator;
  std::string responder;
  Transcript transcript;
  SessionKey host_key;
};

struct ExposureReport {
  std::size_t compromised = 0;
  /// decrypts[i]: the compromised key opens at least one data frame of session i.
  std::vector<bool> decrypts;
  /// failures[i]: data frames of session i that failed authentication.
  std::vector<std::size_t> failures;

  bool confined() const;
};

/// Replays the compromised session's key against every recorded session.
ExposureReport host_compromise_probe(const std::vector<SessionRecord>& history, std::size_t compromised);

/// True when `key` opens some data frame in `transcript`.
bool key_opens_transcript(const SessionKey& key, const Transcript& transcript, std::size_t* failures = nullptr);

/// CA plus enrolled parties, built deterministically from a seed.
class SimulationWorld {
 public:
  static SimulationWorld create(std::uint64_t seed, const std::vector<std::string>& party_ids,
                                std::size_t n_minutiae = 40);

  const CertificateAuthority& ca() const { return ca_; }
  const Party& party(std::string_view id) const;
  /// Enrolled with the genuine CA under its own identity "mallory".
  const Party& attacker() const { return attacker_; }
  /// Claims `user_id` but is signed by an attacker-controlled CA.
  Certificate rogue_certificate(const std::string& user_id) const;

  SimulationContext context(std::uint64_t session_id, std::vector<ScriptedMessage> script = {}) const;

 private:
  SimulationWorld(CertificateAuthority ca, RsaKeyPair rogue_ca, Party attacker);

  CertificateAuthority ca_;
  RsaKeyPair rogue_ca_;
  Party attacker_;
  std::map<std::string, Party, std::less<>> parties_;
};

/// Text scenario definition:
///   parties <initiator> <responder>
///   adversary none|passive|replay|mitm|host-compromise
///   mitm-cert rogue|enrolled
///   sessions <count>          (host-compromise)
///   compromise <1-based index>
///   send <party> <text...>
struct ScenarioSpec {
  std::string initiator = "alice";
  std::string responder = "bob";
  AdversaryMode mode = AdversaryMode::kPassive;
  bool mitm_enrolled_attacker = false;
  std::size_t sessions = 3;
  std::size_t compromise = 2;
  std::vector<ScriptedMessage> script;
};

ScenarioSpec parse_scenario(std::string_view text);
ScenarioSpec default_scenario(AdversaryMode mode);

struct ScenarioResult {
  std::vector<std::pair<std::string, std::string>> records;
  bool expectations_hold = false;
};

ScenarioResult run_scenario(const ScenarioSpec& spec, std::uint64_t seed);
std::string format_records(const ScenarioResult& result);

}  // namespace biokey
