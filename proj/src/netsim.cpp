#include "biokey/netsim.hpp"

#include <algorithm>
#include <array>
#include <charconv>

namespace biokey {

std::string_view mode_name(AdversaryMode mode) {
  switch (mode) {
    case AdversaryMode::kNone: return "none";
    case AdversaryMode::kPassive: return "passive";
    case AdversaryMode::kReplay: return "replay";
    case AdversaryMode::kMitm: return "mitm";
    case AdversaryMode::kHostCompromise: return "host-compromise";
  }
  return "unknown";
}

AdversaryMode parse_mode(std::string_view name) {
  for (auto m : {AdversaryMode::kNone, AdversaryMode::kPassive, AdversaryMode::kReplay, AdversaryMode::kMitm,
                 AdversaryMode::kHostCompromise})
    if (mode_name(m) == name) return m;
  throw InvalidArgument("unknown adversary mode: " + std::string(name));
}

void Channel::send(const std::string& from, const std::string& to, const WireMessage& msg) {
  WireMessage out = msg;
  if (adversary_.mode == AdversaryMode::kMitm) {
    if (msg.type == MessageType::kCert && adversary_.attacker_certificate) {
      out.payload = encode_certificate(*adversary_.attacker_certificate);
    } else if (msg.type == MessageType::kDhPub && adversary_.attacker_dh_key) {
      // Only reachable if certificate checks let the attacker through: it
      // keeps the key it would share with the sender and substitutes its own.
      try {
        PublicKey victim = decode_public_key(msg.payload, group_);
        SessionKey k = session_key(shared_secret(group_, *adversary_.attacker_dh_key, victim), 0);
        adversary_.stolen.emplace_back(k.key.begin(), k.key.end());
      } catch (const KeyAgreementError&) {
      }
      out.payload = encode_public_key(public_key(group_, *adversary_.attacker_dh_key));
    }
  }
  TranscriptRecord rec{from, to, encode_wire(out)};
  if (adversary_.mode != AdversaryMode::kNone) adversary_.captured.push_back(rec);
  pending_.push_back(std::move(rec));
}

std::optional<TranscriptRecord> Channel::next() {
  if (pending_.empty()) return std::nullopt;
  TranscriptRecord rec = std::move(pending_.front());
  pending_.pop_front();
  delivered_.push_back(rec);
  return rec;
}

namespace {

struct Endpoint {
  const Party& party;
  HandshakeState state;
  TransformationKey fresh_t;
  std::string data_failure;
  std::vector<std::string> received;
};

TransformationKey fresh_transformation_key(const Party& p, std::uint64_t session_id) {
  DeterministicRandom rng(derive_seed(p.seed, session_id), "biokey.session-t");
  return TransformationKey::generate(rng, p.identity.user_id + "/session-" + std::to_string(session_id));
}

HandshakeConfig make_config(const Party& self, const Party& peer, const SimulationContext& ctx) {
  return {self.certificate, ctx.ca_public_key, peer.identity.user_id, ctx.group, ctx.quantization, ctx.session_id};
}

std::vector<WireMessage> handle(Endpoint& ep, const Bytes& frame) {
  if (ep.state.phase() == Phase::kFailed) return {};
  WireMessage msg;
  try {
    msg = decode_wire(frame);
  } catch (const ProtocolError&) {
    if (ep.state.phase() == Phase::kEstablished) {
      ep.data_failure = "malformed-message";
      return {};
    }
    return {ep.state.abort(AbortReason::kMalformedMessage)};
  }

  std::vector<WireMessage> out;
  const Phase phase = ep.state.phase();
  switch (msg.type) {
    case MessageType::kAbort:
      ep.state.on_abort(msg);
      break;
    case MessageType::kCert:
      if (phase != Phase::kIdle && phase != Phase::kCertSent) {
        out.push_back(ep.state.abort(AbortReason::kUnexpectedMessage));
        break;
      }
      if (auto reply = ep.state.on_peer_certificate(msg)) out.push_back(std::move(*reply));
      if (ep.state.phase() == Phase::kPeerVerified)
        out.push_back(ep.state.exchange_dh(ep.party.fingerprint, ep.fresh_t));
      break;
    case MessageType::kDhPub:
      if (phase != Phase::kPubKeySent) {
        out.push_back(ep.state.abort(AbortReason::kUnexpectedMessage));
        break;
      }
      if (auto reply = ep.state.establish(msg)) out.push_back(std::move(*reply));
      break;
    case MessageType::kData:
      if (phase != Phase::kEstablished) {
        out.push_back(ep.state.abort(AbortReason::kUnexpectedMessage));
        break;
      }
      try {
        Bytes pt = ep.state.open(decode_sealed(msg.payload));
        ep.received.emplace_back(pt.begin(), pt.end());
      } catch (const ProtocolError& e) {
        if (ep.data_failure.empty())
          ep.data_failure = e.kind() == ProtocolErrorKind::kReplay ? "replay"
                            : e.kind() == ProtocolErrorKind::kMalformed ? "malformed-message"
                                                                        : "integrity";
      }
      break;
  }
  return out;
}

bool contains(const Bytes& haystack, std::span<const std::uint8_t> needle) {
  if (needle.empty()) return false;
  return std::search(haystack.begin(), haystack.end(), needle.begin(), needle.end()) != haystack.end();
}

bool adversary_holds(const AdversaryPolicy& adv, std::span<const std::uint8_t> secret) {
  for (const auto& rec : adv.captured)
    if (contains(rec.frame, secret)) return true;
  for (const auto& s : adv.stolen)
    if (contains(s, secret)) return true;
  return false;
}

bool adversary_reads_plaintext(const AdversaryPolicy& adv, const std::vector<std::string>& plaintexts) {
  for (const auto& p : plaintexts)
    if (p.size() >= 4 && adversary_holds(adv, as_bytes(p))) return true;
  for (const auto& s : adv.stolen) {
    if (s.size() != aead::kKeySize) continue;
    SessionKey k;
    std::copy(s.begin(), s.end(), k.key.begin());
    if (key_opens_transcript(k, adv.captured)) return true;
  }
  return false;
}

void drive(Channel& channel, Endpoint& a, Endpoint& b) {
  while (auto rec = channel.next()) {
    const bool to_a = rec->to == a.party.identity.user_id;
    Endpoint& dst = to_a ? a : b;
    for (const auto& reply : handle(dst, rec->frame)) channel.send(rec->to, rec->from, reply);
  }
}

std::string first_failure(const Endpoint& a, const Endpoint& b) {
  if (a.state.failure()) return std::string(reason_name(*a.state.failure()));
  if (b.state.failure()) return std::string(reason_name(*b.state.failure()));
  if (!a.data_failure.empty()) return a.data_failure;
  if (!b.data_failure.empty()) return b.data_failure;
  return "none";
}

SessionOutcome run_replay(const Party& b, const Party& a, AdversaryPolicy& adv, const SimulationContext& ctx) {
  SessionOutcome outcome;
  Endpoint eb{b, HandshakeState(make_config(b, a, ctx)), fresh_transformation_key(b, ctx.session_id), {}, {}};
  // The genuine initiator is absent: B's replies go nowhere but the wire.
  for (const auto& rec : adv.replay_source) {
    if (rec.to != b.identity.user_id) continue;
    TranscriptRecord injected{rec.from, rec.to, rec.frame};
    adv.captured.push_back(injected);
    outcome.transcript.push_back(injected);
    for (const auto& reply : handle(eb, rec.frame)) {
      TranscriptRecord r{b.identity.user_id, rec.from, encode_wire(reply)};
      adv.captured.push_back(r);
      outcome.transcript.push_back(std::move(r));
    }
  }
  outcome.established = false;
  outcome.delivered_plaintexts = eb.received;
  if (eb.state.failure())
    outcome.failure_reason = reason_name(*eb.state.failure());
  else if (!eb.data_failure.empty())
    outcome.failure_reason = eb.data_failure;
  else if (eb.state.phase() != Phase::kEstablished)
    outcome.failure_reason = "incomplete-handshake";
  if (eb.state.session_key()) outcome.attacker_learned_key = adversary_holds(adv, eb.state.session_key()->key);
  outcome.attacker_learned_plaintext = !eb.received.empty() || adversary_reads_plaintext(adv, eb.received);
  eb.state.teardown();
  return outcome;
}

}  // namespace

SessionOutcome run_session(const Party& a, const Party& b, AdversaryPolicy& adversary, const SimulationContext& ctx) {
  if (a.identity.user_id == b.identity.user_id) throw InvalidArgument("session parties must differ");
  if (adversary.mode == AdversaryMode::kReplay) return run_replay(b, a, adversary, ctx);
  if (adversary.mode == AdversaryMode::kMitm && !adversary.attacker_certificate)
    throw InvalidArgument("mitm adversary needs an attacker certificate");

  Endpoint ea{a, HandshakeState(make_config(a, b, ctx)), fresh_transformation_key(a, ctx.session_id), {}, {}};
  Endpoint eb{b, HandshakeState(make_config(b, a, ctx)), fresh_transformation_key(b, ctx.session_id), {}, {}};
  Channel channel(adversary, ctx.group);

  channel.send(a.identity.user_id, b.identity.user_id, ea.state.initiate());
  drive(channel, ea, eb);

  const bool keys_agree = ea.state.phase() == Phase::kEstablished && eb.state.phase() == Phase::kEstablished &&
                          ea.state.session_key()->key == eb.state.session_key()->key;

  std::vector<std::string> sent;
  if (ea.state.phase() == Phase::kEstablished && eb.state.phase() == Phase::kEstablished) {
    for (const auto& m : ctx.script) {
      Endpoint& src = m.sender == a.identity.user_id ? ea : eb;
      const std::string& to = m.sender == a.identity.user_id ? b.identity.user_id : a.identity.user_id;
      SealedMessage sealed = src.state.seal(as_bytes(m.text));
      channel.send(src.party.identity.user_id, to, WireMessage{MessageType::kData, encode_sealed(sealed)});
      sent.push_back(m.text);
      drive(channel, ea, eb);
    }
  }

  SessionOutcome outcome;
  outcome.transcript = channel.delivered_log();
  outcome.established = keys_agree;
  outcome.failure_reason = first_failure(ea, eb);
  outcome.delivered_plaintexts = ea.received;
  outcome.delivered_plaintexts.insert(outcome.delivered_plaintexts.end(), eb.received.begin(), eb.received.end());

  if (ea.state.session_key()) {
    outcome.initiator_host = HostState{ea.fresh_t, *ea.state.session_key(), a.rsa.to_pem(),
                                       encode_certificate(a.certificate)};
    if (adversary.mode == AdversaryMode::kHostCompromise) {
      const HostState& h = *outcome.initiator_host;
      adversary.stolen.push_back(h.transformation_key.token);
      adversary.stolen.emplace_back(h.session_key.key.begin(), h.session_key.key.end());
      adversary.stolen.emplace_back(h.rsa_private_pem.begin(), h.rsa_private_pem.end());
      adversary.stolen.push_back(h.certificate);
    }
  }

  for (const Endpoint* ep : {&ea, &eb})
    if (ep->state.session_key() && adversary_holds(adversary, ep->state.session_key()->key))
      outcome.attacker_learned_key = true;
  outcome.attacker_learned_plaintext = adversary_reads_plaintext(adversary, sent);

  ea.state.teardown();
  eb.state.teardown();
  return outcome;
}

bool key_opens_transcript(const SessionKey& key, const Transcript& transcript, std::size_t* failures) {
  bool opened = false;
  std::size_t failed = 0;
  for (const auto& rec : transcript) {
    try {
      WireMessage msg = decode_wire(rec.frame);
      if (msg.type != MessageType::kData) continue;
      SealedMessage sealed = decode_sealed(msg.payload);
      if (aead::open(key.key, sealed.nonce, {}, sealed.ciphertext_and_tag))
        opened = true;
      else
        ++failed;
    } catch (const ProtocolError&) {
      ++failed;
    }
  }
  if (failures) *failures = failed;
  return opened;
}

bool ExposureReport::confined() const {
  for (std::size_t i = 0; i < decrypts.size(); ++i)
    if (decrypts[i] != (i == compromised)) return false;
  return true;
}

ExposureReport host_compromise_probe(const std::vector<SessionRecord>& history, std::size_t compromised) {
  if (history.empty()) throw InvalidArgument("no sessions to probe");
  if (compromised >= history.size()) throw InvalidArgument("compromised session index out of range");
  ExposureReport report;
  report.compromised = compromised;
  const SessionKey& stolen = history[compromised].host_key;
  for (const auto& rec : history) {
    std::size_t failed = 0;
    report.decrypts.push_back(key_opens_transcript(stolen, rec.transcript, &failed));
    report.failures.push_back(failed);
  }
  return report;
}

SimulationWorld::SimulationWorld(CertificateAuthority ca, RsaKeyPair rogue_ca, Party attacker)
    : ca_(std::move(ca)), rogue_ca_(std::move(rogue_ca)), attacker_(std::move(attacker)) {}

SimulationWorld SimulationWorld::create(std::uint64_t seed, const std::vector<std::string>& party_ids,
                                        std::size_t n_minutiae) {
  auto rsa_for = [&](std::uint64_t tag) {
    DeterministicRandom rng(derive_seed(seed, 0x5253, tag), "biokey.rsa");
    return RsaKeyPair::generate(rng);
  };
  auto make_party = [&](CertificateAuthority& ca, const std::string& id, std::uint64_t tag) {
    RsaKeyPair rsa = rsa_for(tag);
    Identity identity{id};
    DeterministicRandom req_rng(derive_seed(seed, 0x454e, tag), "biokey.enroll");
    Certificate cert = ca.enroll_sealed(seal_enrollment_request(ca.public_key(), identity, rsa.public_key(), req_rng),
                                        static_cast<std::int64_t>(tag));
    MinutiaeSet fp = synthesize_subject(n_minutiae, 388, 374, derive_seed(seed, 0x4650, tag));
    fp.subject_id = id;
    return Party{identity, std::move(rsa), std::move(cert), std::move(fp), derive_seed(seed, 0x5445, tag)};
  };

  CertificateAuthority ca(rsa_for(0));
  std::vector<Party> parties;
  std::uint64_t tag = 1;
  for (const auto& id : party_ids) parties.push_back(make_party(ca, id, tag++));
  Party attacker = make_party(ca, "mallory", 1000);

  SimulationWorld world(std::move(ca), rsa_for(2000), std::move(attacker));
  for (auto& p : parties) {
    std::string id = p.identity.user_id;
    world.parties_.emplace(std::move(id), std::move(p));
  }
  return world;
}

const Party& SimulationWorld::party(std::string_view id) const {
  auto it = parties_.find(id);
  if (it == parties_.end()) throw InvalidArgument("unknown party: " + std::string(id));
  return it->second;
}

Certificate SimulationWorld::rogue_certificate(const std::string& user_id) const {
  Identity identity{user_id};
  Certificate cert{identity, attacker_.rsa.public_key(), certificate_digest(attacker_.rsa.public_key(), identity), {}};
  cert.signature = rogue_ca_.sign_digest(cert.digest);
  return cert;
}

SimulationContext SimulationWorld::context(std::uint64_t session_id, std::vector<ScriptedMessage> script) const {
  SimulationContext ctx{ca_.public_key(), DhGroup::rfc3526_2048(), QuantizationConfig{}, 1, {}};
  ctx.session_id = session_id;
  ctx.script = std::move(script);
  return ctx;
}

ScenarioSpec parse_scenario(std::string_view text) {
  ScenarioSpec spec;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.empty() || line.starts_with('#')) continue;
    auto bad = [&](const std::string& why) {
      return InvalidArgument("scenario line " + std::to_string(line_no) + ": " + why);
    };
    auto sp = line.find(' ');
    std::string_view cmd = line.substr(0, sp);
    std::string_view rest = sp == std::string_view::npos ? std::string_view{} : line.substr(sp + 1);
    auto parse_count = [&](std::string_view s) {
      std::size_t v = 0;
      auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec != std::errc() || ptr != s.data() + s.size()) throw bad("expected a count");
      return v;
    };
    if (cmd == "parties") {
      auto s = rest.find(' ');
      if (s == std::string_view::npos || rest.find(' ', s + 1) != std::string_view::npos)
        throw bad("expected two party ids");
      spec.initiator = std::string(rest.substr(0, s));
      spec.responder = std::string(rest.substr(s + 1));
    } else if (cmd == "adversary") {
      try {
        spec.mode = parse_mode(rest);
      } catch (const InvalidArgument& e) {
        throw bad(e.what());
      }
    } else if (cmd == "mitm-cert") {
      if (rest == "rogue")
        spec.mitm_enrolled_attacker = false;
      else if (rest == "enrolled")
        spec.mitm_enrolled_attacker = true;
      else
        throw bad("mitm-cert must be rogue or enrolled");
    } else if (cmd == "sessions") {
      spec.sessions = parse_count(rest);
    } else if (cmd == "compromise") {
      spec.compromise = parse_count(rest);
    } else if (cmd == "send") {
      auto s = rest.find(' ');
      if (s == std::string_view::npos) throw bad("expected: send <party> <text>");
      spec.script.push_back({std::string(rest.substr(0, s)), std::string(rest.substr(s + 1))});
    } else {
      throw bad("unknown directive '" + std::string(cmd) + "'");
    }
  }
  if (spec.initiator == spec.responder) throw InvalidArgument("scenario parties must differ");
  for (const auto& m : spec.script)
    if (m.sender != spec.initiator && m.sender != spec.responder)
      throw InvalidArgument("scenario sender is not a party: " + m.sender);
  if (spec.mode == AdversaryMode::kHostCompromise && (spec.sessions < 1 || spec.compromise < 1 ||
                                                       spec.compromise > spec.sessions))
    throw InvalidArgument("compromise index must lie in 1..sessions");
  return spec;
}

ScenarioSpec default_scenario(AdversaryMode mode) {
  ScenarioSpec spec;
  spec.mode = mode;
  spec.script = {{"alice", "meet at the north gate at noon"},
                 {"bob", "acknowledged, bringing the documents"},
                 {"alice", "use the second entrance"}};
  return spec;
}

namespace {

std::string flag(bool v) { return v ? "true" : "false"; }

}  // namespace

ScenarioResult run_scenario(const ScenarioSpec& spec, std::uint64_t seed) {
  SimulationWorld world = SimulationWorld::create(seed, {spec.initiator, spec.responder});
  const Party& a = world.party(spec.initiator);
  const Party& b = world.party(spec.responder);

  ScenarioResult result;
  auto& rec = result.records;
  rec.emplace_back("scenario", std::string(mode_name(spec.mode)));
  bool ok = true;
  auto expect = [&](std::string_view what, bool holds) {
    rec.emplace_back("expect." + std::string(what), holds ? "pass" : "fail");
    ok = ok && holds;
  };
  auto report = [&](const SessionOutcome& o) {
    rec.emplace_back("established", flag(o.established));
    rec.emplace_back("attacker_learned_key", flag(o.attacker_learned_key));
    rec.emplace_back("attacker_learned_plaintext", flag(o.attacker_learned_plaintext));
    rec.emplace_back("failure_reason", o.failure_reason);
  };

  switch (spec.mode) {
    case AdversaryMode::kNone:
    case AdversaryMode::kPassive: {
      AdversaryPolicy adv;
      adv.mode = spec.mode;
      SessionOutcome o = run_session(a, b, adv, world.context(1, spec.script));
      report(o);
      AdversaryPolicy none;
      SessionOutcome baseline = run_session(a, b, none, world.context(1, spec.script));
      const bool same = baseline.transcript == o.transcript;
      rec.emplace_back("transcript_matches_baseline", flag(same));
      rec.emplace_back("messages_delivered", std::to_string(o.delivered_plaintexts.size()));
      expect("established", o.established);
      expect("key_not_learned", !o.attacker_learned_key);
      expect("plaintext_not_learned", !o.attacker_learned_plaintext);
      expect("transcript_unaltered", same);
      break;
    }
    case AdversaryMode::kReplay: {
      AdversaryPolicy recorder;
      recorder.mode = AdversaryMode::kPassive;
      SessionOutcome first = run_session(a, b, recorder, world.context(1, spec.script));
      AdversaryPolicy adv;
      adv.mode = AdversaryMode::kReplay;
      adv.replay_source = recorder.captured;
      adv.captured = recorder.captured;
      SessionOutcome o = run_session(a, b, adv, world.context(2, spec.script));
      report(o);
      rec.emplace_back("original_established", flag(first.established));
      rec.emplace_back("replayed_messages_accepted", std::to_string(o.delivered_plaintexts.size()));
      expect("not_established", !o.established);
      expect("replayed_data_rejected", o.delivered_plaintexts.empty());
      expect("key_not_learned", !o.attacker_learned_key);
      expect("plaintext_not_learned", !o.attacker_learned_plaintext);
      break;
    }
    case AdversaryMode::kMitm: {
      AdversaryPolicy adv;
      adv.mode = AdversaryMode::kMitm;
      adv.attacker_certificate =
          spec.mitm_enrolled_attacker ? world.attacker().certificate : world.rogue_certificate(spec.responder);
      DeterministicRandom rng(derive_seed(seed, 0x4d49), "biokey.mitm");
      Digest x{};
      rng.fill(x);
      adv.attacker_dh_key.emplace(x);
      SessionOutcome o = run_session(a, b, adv, world.context(1, spec.script));
      report(o);
      rec.emplace_back("attacker_certificate", spec.mitm_enrolled_attacker ? "enrolled" : "rogue-ca");
      expect("aborted_at_certificate", !o.established && o.failure_reason == "certificate-verification");
      expect("key_not_learned", !o.attacker_learned_key);
      expect("plaintext_not_learned", !o.attacker_learned_plaintext);
      break;
    }
    case AdversaryMode::kHostCompromise: {
      std::vector<SessionRecord> history;
      std::vector<std::size_t> learned;
      bool all_established = true;
      bool plaintext_learned = false;
      for (std::size_t s = 1; s <= spec.sessions; ++s) {
        AdversaryPolicy adv;
        adv.mode = s == spec.compromise ? AdversaryMode::kHostCompromise : AdversaryMode::kPassive;
        SessionOutcome o = run_session(a, b, adv, world.context(s, spec.script));
        all_established = all_established && o.established;
        if (o.attacker_learned_key) learned.push_back(s);
        plaintext_learned = plaintext_learned || o.attacker_learned_plaintext;
        if (!o.initiator_host) throw Error("session did not establish");
        history.push_back({spec.initiator, spec.responder, o.transcript, o.initiator_host->session_key});
      }
      ExposureReport exposure = host_compromise_probe(history, spec.compromise - 1);
      std::string decrypts, learned_s;
      for (std::size_t i = 0; i < exposure.decrypts.size(); ++i)
        decrypts += (i ? "," : "") + std::string(exposure.decrypts[i] ? "1" : "0");
      for (std::size_t i = 0; i < learned.size(); ++i) learned_s += (i ? "," : "") + std::to_string(learned[i]);
      rec.emplace_back("established", flag(all_established));
      rec.emplace_back("attacker_learned_key", flag(!learned.empty()));
      rec.emplace_back("attacker_learned_plaintext", flag(plaintext_learned));
      rec.emplace_back("failure_reason", "none");
      rec.emplace_back("sessions", std::to_string(spec.sessions));
      rec.emplace_back("compromised", std::to_string(spec.compromise));
      rec.emplace_back("learned_key_sessions", learned_s.empty() ? "-" : learned_s);
      rec.emplace_back("decrypts", decrypts);
      rec.emplace_back("exposure_confined", flag(exposure.confined()));
      expect("sessions_established", all_established);
      expect("key_learned_only_for_compromised",
             learned.size() == 1 && learned.front() == spec.compromise);
      expect("exposure_confined", exposure.confined());
      break;
    }
  }
  rec.emplace_back("result", ok ? "pass" : "fail");
  result.expectations_hold = ok;
  return result;
}

std::string format_records(const ScenarioResult& result) {
  std::string out;
  for (const auto& [k, v] : result.records) out += k + "=" + v + "\n";
  return out;
}

}  // namespace biokey
