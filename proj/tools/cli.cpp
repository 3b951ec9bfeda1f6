#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "biokey/certificate.hpp"
#include "biokey/crypto.hpp"
#include "biokey/evaluation.hpp"
#include "biokey/features.hpp"
#include "biokey/key_agreement.hpp"
#include "biokey/minutiae.hpp"
#include "biokey/netsim.hpp"
#include "biokey/revocable.hpp"
#include "biokey/rsa.hpp"
#include "biokey/session.hpp"

namespace biokey::cli {
namespace {

namespace fs = std::filesystem;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

Bytes read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  return Bytes(std::istreambuf_iterator<char>(in), {});
}

std::string read_text(const fs::path& path) {
  Bytes b = read_file(path);
  return std::string(b.begin(), b.end());
}

void write_file(const fs::path& path, std::string_view data, bool append = false) {
  std::ofstream out(path, std::ios::binary | (append ? std::ios::app : std::ios::trunc));
  if (!out) throw Error("cannot write " + path.string());
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) throw Error("write failed: " + path.string());
}

void write_bytes(const fs::path& path, ByteView data) {
  write_file(path, std::string_view(reinterpret_cast<const char*>(data.data()), data.size()));
}

QuantizationConfig quantization(unsigned n_p, double l_max) {
  try {
    return QuantizationConfig::with_total_bits(n_p, l_max);
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }
}

void emit(std::ostream& out, std::string_view key, const std::string& value) { out << key << '=' << value << '\n'; }

std::string fixed6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

// ---- ca-init / enroll

struct CaOptions {
  std::uint64_t seed = 0;
  std::string out;
};

const char* const kCaKeyFile = "ca_key.pem";
const char* const kCaPubFile = "ca_pub.der";
const char* const kRegistryFile = "registry.txt";

int cmd_ca_init(const CaOptions& o, std::ostream& out) {
  DeterministicRandom rng(o.seed, "biokey.ca");
  RsaKeyPair ca = RsaKeyPair::generate(rng);
  fs::create_directories(o.out);
  const fs::path dir(o.out);
  write_file(dir / kCaKeyFile, ca.to_pem());
  write_bytes(dir / kCaPubFile, ca.public_key().der());
  write_file(dir / kRegistryFile, "");
  emit(out, "ca_fingerprint", to_hex(ca.public_key().fingerprint()));
  emit(out, "ca_dir", o.out);
  return kExitOk;
}

struct EnrollOptions {
  std::string ca_dir;
  std::string id;
  std::uint64_t seed = 0;
  std::optional<std::int64_t> timestamp;
  std::string out;
};

int cmd_enroll(const EnrollOptions& o, std::ostream& out) {
  if (o.id.find('/') != std::string::npos || o.id.starts_with('.'))
    throw UsageError("user id cannot be used as a file name: " + o.id);
  Identity identity{o.id};
  try {
    identity.validate();
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  const fs::path ca_dir(o.ca_dir);
  CertificateAuthority ca(RsaKeyPair::from_pem(read_text(ca_dir / kCaKeyFile)));
  const fs::path registry = ca_dir / kRegistryFile;
  if (fs::exists(registry)) ca.restore(parse_registry(read_text(registry)));

  DeterministicRandom rng(o.seed, "biokey.user-rsa");
  RsaKeyPair user = RsaKeyPair::generate(rng);
  DeterministicRandom req_rng(derive_seed(o.seed, 1), "biokey.enroll");
  const Bytes request = seal_enrollment_request(ca.public_key(), identity, user.public_key(), req_rng);
  const std::int64_t ts = o.timestamp.value_or(
      std::chrono::duration_cast<std::chrono::seconds>(std::chrono::system_clock::now().time_since_epoch()).count());
  const Certificate cert = ca.enroll_sealed(request, ts);

  fs::create_directories(o.out);
  const fs::path dir(o.out);
  write_bytes(dir / (o.id + ".cert"), encode_certificate(cert));
  write_file(dir / (o.id + "_key.pem"), user.to_pem());
  write_file(registry, format_registry_line(ca.registry().at(o.id)) + "\n", true);
  emit(out, "user_id", o.id);
  emit(out, "public_key_fingerprint", to_hex(user.public_key().fingerprint()));
  emit(out, "enrolled_at", std::to_string(ts));
  emit(out, "certificate", (dir / (o.id + ".cert")).string());
  return kExitOk;
}

// ---- session

struct SessionOptions {
  std::string initiator = "alice";
  std::string responder = "bob";
  std::uint64_t seed = 0;
  unsigned n_p = 15;
  double l_max = 540;
  std::size_t minutiae = 40;
  std::string initiator_minutiae;
  std::string responder_minutiae;
  std::vector<std::string> sends;
  std::string transcript;
};

int cmd_session(const SessionOptions& o, std::ostream& out) {
  if (o.initiator == o.responder) throw UsageError("initiator and responder must differ");
  for (const auto& id : {o.initiator, o.responder}) {
    try {
      Identity{id}.validate();
    } catch (const Error& e) {
      throw UsageError(e.what());
    }
  }
  std::vector<ScriptedMessage> script;
  for (const auto& s : o.sends) {
    auto colon = s.find(':');
    if (colon == std::string::npos) throw UsageError("--send expects <party>:<text>");
    ScriptedMessage m{s.substr(0, colon), s.substr(colon + 1)};
    if (m.sender != o.initiator && m.sender != o.responder) throw UsageError("--send party is not in the session");
    script.push_back(std::move(m));
  }
  const QuantizationConfig q = quantization(o.n_p, o.l_max);

  SimulationWorld world = SimulationWorld::create(o.seed, {o.initiator, o.responder}, o.minutiae);
  Party a = world.party(o.initiator);
  Party b = world.party(o.responder);
  if (!o.initiator_minutiae.empty())
    a.fingerprint = parse_minutiae_file(read_file(o.initiator_minutiae), o.initiator);
  if (!o.responder_minutiae.empty())
    b.fingerprint = parse_minutiae_file(read_file(o.responder_minutiae), o.responder);

  SimulationContext ctx = world.context(1, std::move(script));
  ctx.quantization = q;
  AdversaryPolicy none;
  SessionOutcome outcome = run_session(a, b, none, ctx);

  if (!o.transcript.empty()) write_file(o.transcript, export_transcript(outcome.transcript));
  emit(out, "initiator", o.initiator);
  emit(out, "responder", o.responder);
  emit(out, "established", outcome.established ? "true" : "false");
  emit(out, "failure_reason", outcome.failure_reason);
  emit(out, "frames", std::to_string(outcome.transcript.size()));
  emit(out, "messages_delivered", std::to_string(outcome.delivered_plaintexts.size()));
  return outcome.established ? kExitOk : kExitProtocol;
}

// ---- attack

struct AttackOptions {
  std::string scenario;
  std::string scenario_file;
  std::uint64_t seed = 0;
  std::string out;
};

int cmd_attack(const AttackOptions& o, std::ostream& out) {
  if (o.scenario.empty() == o.scenario_file.empty())
    throw UsageError("give exactly one of --scenario and --scenario-file");
  ScenarioSpec spec;
  if (!o.scenario.empty()) {
    try {
      spec = default_scenario(parse_mode(o.scenario));
    } catch (const InvalidArgument& e) {
      throw UsageError(e.what());
    }
  } else {
    spec = parse_scenario(read_text(o.scenario_file));
  }
  const ScenarioResult result = run_scenario(spec, o.seed);
  const std::string records = format_records(result);
  if (!o.out.empty()) write_file(o.out, records);
  out << records;
  return result.expectations_hold ? kExitOk : kExitAssertion;
}

// ---- eval

struct EvalOptions {
  bool synthetic = false;
  std::string dataset;
  std::size_t subjects = 100;
  std::size_t impressions = 8;
  std::size_t minutiae = 40;
  std::uint64_t seed = 0;
  unsigned n_p = 15;
  double l_max = 540;
  double noise = 2.0;
  double drop = 0.05;
  std::string out;
  std::string summary;
  bool key_studies = false;
  std::size_t keys = 30;
};

/// Files named "<subject>_<impression>.<ext>"; impressions ordered numerically.
Dataset load_dataset(const fs::path& dir) {
  std::map<std::string, std::map<std::uint32_t, fs::path>> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string stem = entry.path().stem().string();
    const auto us = stem.rfind('_');
    if (us == std::string::npos || us == 0) continue;
    std::uint32_t imp = 0;
    const char* first = stem.data() + us + 1;
    const char* last = stem.data() + stem.size();
    auto [ptr, ec] = std::from_chars(first, last, imp);
    if (ec != std::errc() || ptr != last || first == last) continue;
    files[stem.substr(0, us)][imp] = entry.path();
  }
  Dataset ds;
  for (const auto& [subject, imps] : files) {
    std::vector<MinutiaeSet> sets;
    for (const auto& [imp, path] : imps) {
      try {
        sets.push_back(parse_minutiae_file(read_file(path), subject, imp));
      } catch (const MinutiaeError& e) {
        throw Error(path.filename().string() + ": " + e.what());
      }
    }
    ds.subjects.push_back(std::move(sets));
  }
  if (ds.subjects.size() < 2) throw Error("dataset needs at least 2 subjects: " + dir.string());
  for (const auto& s : ds.subjects)
    if (s.size() != ds.impressions() || s.size() < 2)
      throw Error("every subject needs the same number (>= 2) of impressions");
  return ds;
}

int cmd_eval(const EvalOptions& o, std::ostream& out) {
  if (o.synthetic == !o.dataset.empty()) throw UsageError("give exactly one of --synthetic and --dataset");
  const QuantizationConfig q = quantization(o.n_p, o.l_max);

  Dataset ds;
  if (o.synthetic) {
    DatasetConfig dc;
    dc.subjects = o.subjects;
    dc.impressions = o.impressions;
    dc.minutiae = o.minutiae;
    dc.seed = o.seed;
    dc.noise = PerturbationProfile{o.noise, 2.0 * o.noise, o.drop, 0.0, 0};
    ds = synthesize_dataset(dc);
  } else {
    ds = load_dataset(o.dataset);
  }

  DeterministicRandom key_rng(derive_seed(o.seed, 0x5443), "biokey.eval-shared-t");
  const TransformationKey shared = TransformationKey::generate(key_rng, "shared");
  const ScoreSet scores = template_scores(ds, q, shared);
  const auto roc = compute_roc(scores);
  const double e = eer(scores);
  const DistributionSummary gen = summarize(scores.genuine);
  const DistributionSummary imp = summarize(scores.impostor);

  std::string summary = summary_record("genuine_template_similarity", gen) +
                        summary_record("impostor_template_similarity", imp);
  emit(out, "subjects", std::to_string(ds.subjects.size()));
  emit(out, "impressions", std::to_string(ds.impressions()));
  emit(out, "n_p", std::to_string(q.n_p()));
  emit(out, "genuine_pairs", std::to_string(scores.genuine.size()));
  emit(out, "impostor_pairs", std::to_string(scores.impostor.size()));
  emit(out, "genuine_mean", fixed6(gen.mean));
  emit(out, "impostor_mean", fixed6(imp.mean));
  emit(out, "eer", fixed6(e));

  if (o.key_studies) {
    const DhGroup group = DhGroup::rfc3526_2048();
    const StudyResult ik = impostor_key_study(ds, q, group, derive_seed(o.seed, 0x494b));
    const StudyResult rv = revocability_study(ds, o.keys, q, derive_seed(o.seed, 0x5256));
    const auto keys = session_key_sample(ds, ds.subjects.size(), q, group, derive_seed(o.seed, 0x454e));
    Bytes pooled;
    for (const auto& k : keys) pooled.insert(pooled.end(), k.key.begin(), k.key.end());
    summary += summary_record("impostor_key_hamming", ik.summary) + summary_record("revocability_hamming", rv.summary);
    summary += "[session_key_entropy]\nkeys=" + std::to_string(keys.size()) +
               "\nbits_per_byte=" + fixed6(shannon_entropy(pooled)) + "\n";
    emit(out, "impostor_key_mean", fixed6(ik.summary.mean));
    emit(out, "revocability_mean", fixed6(rv.summary.mean));
    emit(out, "session_key_entropy", fixed6(shannon_entropy(pooled)));
  }

  if (!o.out.empty()) write_file(o.out, roc_csv(roc));
  if (!o.summary.empty()) write_file(o.summary, summary);
  return kExitOk;
}

// ---- keygen

struct KeygenOptions {
  std::string minutiae;
  std::string token;
  std::string group;
  std::uint64_t seed = 0;
  unsigned n_p = 15;
  double l_max = 540;
};

int cmd_keygen(const KeygenOptions& o, std::ostream& out) {
  const QuantizationConfig q = quantization(o.n_p, o.l_max);
  const MinutiaeSet set = parse_minutiae_file(read_file(o.minutiae));
  TransformationKey key;
  if (!o.token.empty()) {
    key = parse_transformation_key(read_text(o.token));
  } else {
    DeterministicRandom rng(o.seed, "biokey.keygen-t");
    key = TransformationKey::generate(rng, "keygen");
  }
  const DhGroup group = o.group.empty() ? DhGroup::rfc3526_2048() : parse_dh_group(read_text(o.group));

  const PairVectorSet pairs = all_pair_vectors(set);
  const FeatureBitString fbs = extract_features(set, q);
  const RevocableTemplate tpl = permute(fbs, key);
  const PrivateKey prv = derive_private_key(tpl);
  const PublicKey pub = public_key(group, prv);

  emit(out, "minutiae", std::to_string(set.minutiae.size()));
  emit(out, "pairs", std::to_string(pairs.vectors.size()));
  emit(out, "degenerate_pairs", std::to_string(pairs.degenerate_skipped));
  emit(out, "feature_bits", std::to_string(fbs.bits.size()));
  emit(out, "feature_popcount", std::to_string(fbs.bits.popcount()));
  emit(out, "feature_digest", to_hex(sha256(serialize_bits(fbs.bits))));
  emit(out, "template_digest", to_hex(sha256(serialize_bits(tpl.bits))));
  emit(out, "private_key_digest", to_hex(sha256(prv.bytes())));
  emit(out, "public_key_digest", to_hex(sha256(encode_public_key(pub))));
  return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Fingerprint-derived revocable session keys", "biokey"};
  app.require_subcommand(1);

  CaOptions ca;
  auto* ca_cmd = app.add_subcommand("ca-init", "Create a certificate authority");
  ca_cmd->add_option("--seed", ca.seed, "64-bit seed")->required();
  ca_cmd->add_option("--out", ca.out, "Output directory")->required();

  EnrollOptions en;
  auto* en_cmd = app.add_subcommand("enroll", "Generate a user key pair and enroll it with a CA");
  en_cmd->add_option("--ca", en.ca_dir, "CA directory (from ca-init)")->required();
  en_cmd->add_option("--id", en.id, "User id")->required();
  en_cmd->add_option("--seed", en.seed, "64-bit seed")->required();
  en_cmd->add_option("--timestamp", en.timestamp, "Enrollment time, unix seconds (default: now)");
  en_cmd->add_option("--out", en.out, "Directory for the certificate and user key")->required();

  SessionOptions se;
  auto* se_cmd = app.add_subcommand("session", "Run one handshake and message exchange");
  se_cmd->add_option("--initiator", se.initiator, "Initiator id")->capture_default_str();
  se_cmd->add_option("--responder", se.responder, "Responder id")->capture_default_str();
  se_cmd->add_option("--seed", se.seed, "64-bit seed")->required();
  se_cmd->add_option("--np", se.n_p, "Feature bits per pair vector")->capture_default_str();
  se_cmd->add_option("--lmax", se.l_max, "Largest pair length")->capture_default_str();
  se_cmd->add_option("--minutiae", se.minutiae, "Synthetic minutiae per party")->capture_default_str()
      ->check(CLI::Range(std::size_t{2}, std::size_t{10000}));
  se_cmd->add_option("--initiator-minutiae", se.initiator_minutiae, "Minutiae file for the initiator")
      ->check(CLI::ExistingFile);
  se_cmd->add_option("--responder-minutiae", se.responder_minutiae, "Minutiae file for the responder")
      ->check(CLI::ExistingFile);
  se_cmd->add_option("--send", se.sends, "Scripted message <party>:<text>");
  se_cmd->add_option("--transcript", se.transcript, "Write the wire transcript here");

  AttackOptions at;
  auto* at_cmd = app.add_subcommand("attack", "Run an adversary scenario");
  at_cmd->add_option("--scenario", at.scenario, "none|passive|replay|mitm|host-compromise");
  at_cmd->add_option("--scenario-file", at.scenario_file, "Scenario definition file")->check(CLI::ExistingFile);
  at_cmd->add_option("--seed", at.seed, "64-bit seed")->required();
  at_cmd->add_option("--out", at.out, "Also write the outcome record here");

  EvalOptions ev;
  auto* ev_cmd = app.add_subcommand("eval", "Genuine/impostor statistics and ROC");
  ev_cmd->add_flag("--synthetic", ev.synthetic, "Use a synthetic dataset");
  ev_cmd->add_option("--dataset", ev.dataset, "Directory of <subject>_<impression> minutiae files")
      ->check(CLI::ExistingDirectory);
  ev_cmd->add_option("--subjects", ev.subjects, "Synthetic subjects")->capture_default_str()
      ->check(CLI::Range(std::size_t{2}, std::size_t{100000}));
  ev_cmd->add_option("--impressions", ev.impressions, "Impressions per subject")->capture_default_str()
      ->check(CLI::Range(std::size_t{2}, std::size_t{1000}));
  ev_cmd->add_option("--minutiae", ev.minutiae, "Minutiae per synthetic subject")->capture_default_str()
      ->check(CLI::Range(std::size_t{2}, std::size_t{10000}));
  ev_cmd->add_option("--seed", ev.seed, "64-bit seed")->required();
  ev_cmd->add_option("--np", ev.n_p, "Feature bits per pair vector")->capture_default_str();
  ev_cmd->add_option("--lmax", ev.l_max, "Largest pair length")->capture_default_str();
  ev_cmd->add_option("--noise", ev.noise, "Position sigma in pixels (angle sigma = 2x, degrees)")
      ->capture_default_str()->check(CLI::NonNegativeNumber);
  ev_cmd->add_option("--drop", ev.drop, "Minutia drop rate")->capture_default_str()->check(CLI::Range(0.0, 1.0));
  ev_cmd->add_option("--out", ev.out, "ROC CSV output");
  ev_cmd->add_option("--summary", ev.summary, "Distribution summary output");
  ev_cmd->add_flag("--key-studies", ev.key_studies, "Also run impostor-key, revocability and entropy studies");
  ev_cmd->add_option("--keys", ev.keys, "Transformation keys per subject for revocability")->capture_default_str()
      ->check(CLI::Range(std::size_t{2}, std::size_t{10000}));

  KeygenOptions kg;
  auto* kg_cmd = app.add_subcommand("keygen", "Show pipeline stage digests for one minutiae file");
  kg_cmd->add_option("--minutiae", kg.minutiae, "Minutiae file")->required()->check(CLI::ExistingFile);
  kg_cmd->add_option("--token", kg.token, "Transformation key file (default: derived from --seed)")
      ->check(CLI::ExistingFile);
  kg_cmd->add_option("--group", kg.group, "DH group file (default: 2048-bit MODP group)")->check(CLI::ExistingFile);
  kg_cmd->add_option("--seed", kg.seed, "64-bit seed")->capture_default_str();
  kg_cmd->add_option("--np", kg.n_p, "Feature bits per pair vector")->capture_default_str();
  kg_cmd->add_option("--lmax", kg.l_max, "Largest pair length")->capture_default_str();

  if (argc <= 1) {
    err << app.help();
    return kExitUsage;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  try {
    if (*ca_cmd) return cmd_ca_init(ca, out);
    if (*en_cmd) return cmd_enroll(en, out);
    if (*se_cmd) return cmd_session(se, out);
    if (*at_cmd) return cmd_attack(at, out);
    if (*ev_cmd) return cmd_eval(ev, out);
    if (*kg_cmd) return cmd_keygen(kg, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n\n" << app.get_subcommands().front()->help();
    return kExitUsage;
  } catch (const ProtocolError& e) {
    err << "protocol failure: " << e.what() << '\n';
    return kExitProtocol;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace biokey::cli
