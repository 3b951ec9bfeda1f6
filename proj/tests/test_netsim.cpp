#include <doctest.h>

#include <string>

#include "biokey/netsim.hpp"

using namespace biokey;

namespace {

const SimulationWorld& world() {
  static const SimulationWorld w = SimulationWorld::create(7, {"alice", "bob", "carol"});
  return w;
}

const std::vector<ScriptedMessage> kScript = {{"alice", "first message"}, {"bob", "second message"}};

std::string find(const ScenarioResult& r, const std::string& key) {
  for (const auto& [k, v] : r.records)
    if (k == key) return v;
  return "<missing>";
}

bool has_type(const Transcript& t, MessageType type) {
  for (const auto& rec : t)
    if (!rec.frame.empty() && rec.frame[0] == static_cast<std::uint8_t>(type)) return true;
  return false;
}

SessionRecord record_session(const Party& a, const Party& b, std::uint64_t id) {
  AdversaryPolicy adv;
  adv.mode = AdversaryMode::kPassive;
  SessionOutcome o = run_session(a, b, adv, world().context(id, kScript));
  REQUIRE(o.initiator_host);
  return {a.identity.user_id, b.identity.user_id, o.transcript, o.initiator_host->session_key};
}

}  // namespace

TEST_CASE("mode names round trip") {
  for (auto m : {AdversaryMode::kNone, AdversaryMode::kPassive, AdversaryMode::kReplay, AdversaryMode::kMitm,
                 AdversaryMode::kHostCompromise})
    CHECK(parse_mode(mode_name(m)) == m);
  CHECK_THROWS_AS(parse_mode("eavesdrop"), InvalidArgument);
}

TEST_CASE("world is enrolled under one CA") {
  const auto& w = world();
  for (const char* id : {"alice", "bob", "carol"}) {
    CHECK(verify_certificate(w.ca().public_key(), w.party(id).certificate).user_id == id);
    CHECK(w.ca().is_enrolled(id));
  }
  CHECK(w.ca().is_enrolled("mallory"));
  CHECK_THROWS_AS(verify_certificate(w.ca().public_key(), w.rogue_certificate("bob")), CertificateError);
  CHECK_THROWS_AS(w.party("dave"), InvalidArgument);
}

TEST_CASE("honest and passive sessions") {
  const auto& w = world();
  const Party& a = w.party("alice");
  const Party& b = w.party("bob");

  AdversaryPolicy none;
  SessionOutcome base = run_session(a, b, none, w.context(1, kScript));
  CHECK(base.established);
  CHECK(base.failure_reason == "none");
  CHECK(none.captured.empty());
  REQUIRE(base.delivered_plaintexts.size() == 2);
  // Frames: cert, cert, two DH values, two data.
  CHECK(base.transcript.size() == 6);

  AdversaryPolicy passive;
  passive.mode = AdversaryMode::kPassive;
  SessionOutcome o = run_session(a, b, passive, w.context(1, kScript));
  CHECK(o.established);
  CHECK(o.transcript == base.transcript);
  CHECK(passive.captured == o.transcript);
  CHECK_FALSE(o.attacker_learned_key);
  CHECK_FALSE(o.attacker_learned_plaintext);

  AdversaryPolicy again;
  again.mode = AdversaryMode::kPassive;
  SessionOutcome o2 = run_session(a, b, again, w.context(2, kScript));
  CHECK(o2.initiator_host->session_key.key != o.initiator_host->session_key.key);
  CHECK(o2.initiator_host->transformation_key.token != o.initiator_host->transformation_key.token);

  CHECK_THROWS_AS(run_session(a, a, passive, w.context(1)), InvalidArgument);
}

TEST_CASE("replayed transcript does not establish") {
  const auto& w = world();
  AdversaryPolicy rec;
  rec.mode = AdversaryMode::kPassive;
  run_session(w.party("alice"), w.party("bob"), rec, w.context(1, kScript));

  AdversaryPolicy adv;
  adv.mode = AdversaryMode::kReplay;
  adv.replay_source = rec.captured;
  SessionOutcome o = run_session(w.party("alice"), w.party("bob"), adv, w.context(2, kScript));
  CHECK_FALSE(o.established);
  CHECK(o.delivered_plaintexts.empty());
  CHECK_FALSE(o.attacker_learned_key);
  CHECK_FALSE(o.attacker_learned_plaintext);
  CHECK(o.failure_reason != "none");
}

TEST_CASE("man in the middle is stopped at the certificate") {
  const auto& w = world();
  for (bool enrolled : {false, true}) {
    CAPTURE(enrolled);
    AdversaryPolicy adv;
    adv.mode = AdversaryMode::kMitm;
    adv.attacker_certificate = enrolled ? w.attacker().certificate : w.rogue_certificate("bob");
    adv.attacker_dh_key.emplace(Digest{1, 2, 3});
    SessionOutcome o = run_session(w.party("alice"), w.party("bob"), adv, w.context(1, kScript));
    CHECK_FALSE(o.established);
    CHECK(o.failure_reason == "certificate-verification");
    CHECK_FALSE(has_type(o.transcript, MessageType::kDhPub));
    CHECK_FALSE(has_type(o.transcript, MessageType::kData));
    CHECK(adv.stolen.empty());
    CHECK_FALSE(o.attacker_learned_key);
    CHECK_FALSE(o.attacker_learned_plaintext);
  }
  AdversaryPolicy bare;
  bare.mode = AdversaryMode::kMitm;
  CHECK_THROWS_AS(run_session(w.party("alice"), w.party("bob"), bare, w.context(1)), InvalidArgument);
}

TEST_CASE("channel substitutes certificates in mitm mode") {
  const auto& w = world();
  AdversaryPolicy adv;
  adv.mode = AdversaryMode::kMitm;
  adv.attacker_certificate = w.attacker().certificate;
  Channel ch(adv, DhGroup::rfc3526_2048());
  ch.send("alice", "bob", WireMessage{MessageType::kCert, encode_certificate(w.party("alice").certificate)});
  auto rec = ch.next();
  REQUIRE(rec);
  CHECK(decode_certificate(decode_wire(rec->frame).payload).identity.user_id == "mallory");
  CHECK_FALSE(ch.next());
  CHECK(ch.delivered_log().size() == 1);
  CHECK(adv.captured.size() == 1);
}

TEST_CASE("host compromise exposes only the compromised session") {
  const auto& w = world();
  const Party& a = w.party("alice");
  const Party& b = w.party("bob");

  std::vector<SessionRecord> history;
  for (std::uint64_t s = 1; s <= 3; ++s) history.push_back(record_session(a, b, s));

  ExposureReport r = host_compromise_probe(history, 1);
  CHECK(r.decrypts == std::vector<bool>{false, true, false});
  CHECK(r.failures == std::vector<std::size_t>{2, 0, 2});
  CHECK(r.confined());

  ExposureReport single = host_compromise_probe({history[0]}, 0);
  CHECK(single.decrypts == std::vector<bool>{true});
  CHECK(single.confined());

  SessionRecord cross = record_session(a, w.party("carol"), 1);
  std::size_t failed = 0;
  CHECK_FALSE(key_opens_transcript(history[0].host_key, cross.transcript, &failed));
  CHECK(failed == 2);

  ExposureReport forged{0, {true, true}, {0, 0}};
  CHECK_FALSE(forged.confined());

  CHECK_THROWS_AS(host_compromise_probe({}, 0), InvalidArgument);
  CHECK_THROWS_AS(host_compromise_probe(history, 3), InvalidArgument);

  AdversaryPolicy adv;
  adv.mode = AdversaryMode::kHostCompromise;
  SessionOutcome o = run_session(a, b, adv, w.context(2, kScript));
  CHECK(o.established);
  CHECK(o.attacker_learned_key);
  CHECK(o.attacker_learned_plaintext);
  CHECK(o.initiator_host->session_key.key == history[1].host_key.key);
}

TEST_CASE("scenario parsing") {
  ScenarioSpec s = parse_scenario(
      "# comment\n"
      "parties carol dave\n"
      "adversary host-compromise\n"
      "sessions 4\n"
      "compromise 3\n"
      "send dave hello there\n");
  CHECK(s.initiator == "carol");
  CHECK(s.responder == "dave");
  CHECK(s.mode == AdversaryMode::kHostCompromise);
  CHECK(s.sessions == 4);
  CHECK(s.compromise == 3);
  REQUIRE(s.script.size() == 1);
  CHECK(s.script[0].text == "hello there");
  CHECK(parse_scenario("adversary mitm\nmitm-cert enrolled\n").mitm_enrolled_attacker);

  auto message = [](std::string_view text) -> std::string {
    try {
      parse_scenario(text);
    } catch (const InvalidArgument& e) {
      return e.what();
    }
    return "";
  };
  CHECK(message("\nbogus 1\n").starts_with("scenario line 2:"));
  CHECK(message("sessions x\n").starts_with("scenario line 1:"));
  CHECK(message("adversary sniff\n").starts_with("scenario line 1:"));
  CHECK(message("mitm-cert forged\n").starts_with("scenario line 1:"));
  CHECK(message("parties alice\n").starts_with("scenario line 1:"));
  CHECK(message("send alice\n").starts_with("scenario line 1:"));
  CHECK_FALSE(message("parties alice alice\n").empty());
  CHECK_FALSE(message("send carol hi\n").empty());
  CHECK_FALSE(message("adversary host-compromise\nsessions 2\ncompromise 3\n").empty());
  CHECK_FALSE(message("adversary host-compromise\ncompromise 0\n").empty());
}

TEST_CASE("default scenarios meet their expectations") {
  struct Want {
    AdversaryMode mode;
    const char* established;
    const char* reason;
  };
  for (const Want& want : {Want{AdversaryMode::kNone, "true", "none"}, Want{AdversaryMode::kPassive, "true", "none"},
                           Want{AdversaryMode::kReplay, "false", nullptr},
                           Want{AdversaryMode::kMitm, "false", "certificate-verification"},
                           Want{AdversaryMode::kHostCompromise, "true", "none"}}) {
    CAPTURE(mode_name(want.mode));
    ScenarioResult r = run_scenario(default_scenario(want.mode), 3);
    CHECK(r.expectations_hold);
    CHECK(find(r, "result") == "pass");
    CHECK(find(r, "established") == want.established);
    if (want.reason) CHECK(find(r, "failure_reason") == want.reason);
    if (want.mode == AdversaryMode::kHostCompromise) {
      CHECK(find(r, "decrypts") == "0,1,0");
      CHECK(find(r, "learned_key_sessions") == "2");
    }
  }
  ScenarioSpec enrolled = default_scenario(AdversaryMode::kMitm);
  enrolled.mitm_enrolled_attacker = true;
  CHECK(run_scenario(enrolled, 3).expectations_hold);

  const std::string once = format_records(run_scenario(default_scenario(AdversaryMode::kPassive), 5));
  CHECK(once == format_records(run_scenario(default_scenario(AdversaryMode::kPassive), 5)));
  CHECK(once.starts_with("scenario=passive\n"));
  CHECK(once.ends_with("result=pass\n"));
}
