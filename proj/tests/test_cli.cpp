#include <doctest.h>

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "biokey/certificate.hpp"
#include "biokey/features.hpp"
#include "biokey/key_agreement.hpp"
#include "biokey/revocable.hpp"
#include "biokey/session.hpp"
#include "cli.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace biokey;

namespace {

const fs::path kData = BIOKEY_TEST_DATA;

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "biokey");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = biokey::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string value(const std::string& records, const std::string& key) {
  std::istringstream in(records);
  for (std::string line; std::getline(in, line);)
    if (line.starts_with(key + "=")) return line.substr(key.size() + 1);
  return "<missing>";
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("biokey-test-" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string str(const std::string& leaf = {}) const { return (leaf.empty() ? path : path / leaf).string(); }
};

}  // namespace

TEST_CASE("usage errors") {
  const Result none = invoke({});
  CHECK(none.code == cli::kExitUsage);
  CHECK_FALSE(none.err.empty());
  CHECK(invoke({"frobnicate"}).code == cli::kExitUsage);
  CHECK(invoke({"attack", "--scenario", "mitm"}).code == cli::kExitUsage);        // missing --seed
  CHECK(invoke({"attack", "--seed", "1"}).code == cli::kExitUsage);               // no scenario
  CHECK(invoke({"attack", "--scenario", "sniff", "--seed", "1"}).code == cli::kExitUsage);
  CHECK(invoke({"eval", "--seed", "1"}).code == cli::kExitUsage);                 // no dataset source
  CHECK(invoke({"eval", "--synthetic", "--seed", "1", "--np", "2"}).code != cli::kExitOk);
  CHECK(invoke({"session", "--seed", "1", "--initiator", "bob"}).code == cli::kExitUsage);
  CHECK(invoke({"session", "--seed", "1", "--send", "carol:hi"}).code == cli::kExitUsage);
  CHECK(invoke({"keygen", "--minutiae", (kData / "absent.txt").string()}).code == cli::kExitUsage);
  CHECK(invoke({"--help"}).code == cli::kExitOk);
}

TEST_CASE("attack scenarios") {
  const Result mitm = invoke({"attack", "--scenario", "mitm", "--seed", "1"});
  CHECK(mitm.code == cli::kExitOk);
  CHECK(value(mitm.out, "established") == "false");
  CHECK(value(mitm.out, "failure_reason") == "certificate-verification");
  CHECK(value(mitm.out, "result") == "pass");

  const Result file = invoke({"attack", "--scenario-file", (kData / "mitm.scenario").string(), "--seed", "1"});
  CHECK(file.code == cli::kExitOk);
  CHECK(value(file.out, "attacker_certificate") == "enrolled");

  const Result bad = invoke({"attack", "--scenario-file", (kData / "bad.scenario").string(), "--seed", "1"});
  CHECK(bad.code == cli::kExitData);
  CHECK(bad.err.find("line 2") != std::string::npos);

  TempDir dir("attack");
  const Result hc = invoke({"attack", "--scenario", "host-compromise", "--seed", "2", "--out", dir.str("hc.txt")});
  CHECK(hc.code == cli::kExitOk);
  CHECK(value(hc.out, "decrypts") == "0,1,0");
  CHECK(slurp(dir.path / "hc.txt") == hc.out);
}

TEST_CASE("session") {
  TempDir dir("session");
  const Result r = invoke({"session", "--seed", "4", "--np", "12", "--send", "alice:hello", "--send", "bob:hi there",
                        "--transcript", dir.str("t.txt")});
  CHECK(r.code == cli::kExitOk);
  CHECK(value(r.out, "established") == "true");
  CHECK(value(r.out, "frames") == "6");
  CHECK(value(r.out, "messages_delivered") == "2");
  CHECK(import_transcript(slurp(dir.path / "t.txt")).size() == 6);

  std::ofstream(dir.path / "one.txt") << "388 374\n10 10 0\n";
  const Result one = invoke({"session", "--seed", "4", "--initiator-minutiae", dir.str("one.txt")});
  CHECK(one.code == cli::kExitData);
  CHECK(one.err.find("insufficient minutiae") != std::string::npos);
  CHECK(invoke({"session", "--seed", "4", "--minutiae", "1"}).code == cli::kExitUsage);
}

TEST_CASE("keygen matches the library pipeline") {
  const std::string finger = (kData / "finger.txt").string();
  const std::string token = (kData / "token.txt").string();
  const std::string group = (kData / "toy_group.txt").string();
  const Result r = invoke({"keygen", "--minutiae", finger, "--token", token, "--group", group, "--np", "12"});
  REQUIRE(r.code == cli::kExitOk);
  CHECK(value(r.out, "minutiae") == "14");
  CHECK(value(r.out, "pairs") == std::to_string(oracle::choose2(14)));
  CHECK(value(r.out, "feature_bits") == "4096");

  const MinutiaeSet set = parse_minutiae_file(as_bytes(slurp(finger)));
  const FeatureBitString fbs = extract_features(set, QuantizationConfig::with_total_bits(12));
  const RevocableTemplate tpl = permute(fbs, parse_transformation_key(slurp(token)));
  const PrivateKey prv = derive_private_key(tpl);
  const PublicKey pub = public_key(parse_dh_group(slurp(group)), prv);
  CHECK(value(r.out, "feature_popcount") == std::to_string(fbs.bits.popcount()));
  CHECK(value(r.out, "template_digest") == to_hex(sha256(serialize_bits(tpl.bits))));
  CHECK(value(r.out, "private_key_digest") == to_hex(sha256(prv.bytes())));
  CHECK(value(r.out, "public_key_digest") == to_hex(sha256(encode_public_key(pub))));

  // Nothing but digests is printed.
  CHECK(r.out.find(to_hex(prv.bytes())) == std::string::npos);
  CHECK(r.out.find(to_hex(tpl.bits.bytes())) == std::string::npos);

  const Result other = invoke({"keygen", "--minutiae", finger, "--group", group, "--np", "12", "--seed", "9"});
  CHECK(value(other.out, "feature_digest") == value(r.out, "feature_digest"));
  CHECK(value(other.out, "template_digest") != value(r.out, "template_digest"));
}

TEST_CASE("ca-init and enroll") {
  TempDir dir("pki");
  const Result ca = invoke({"ca-init", "--seed", "11", "--out", dir.str("ca")});
  REQUIRE(ca.code == cli::kExitOk);
  CHECK(value(ca.out, "ca_fingerprint").size() == 64);
  CHECK(fs::exists(dir.path / "ca" / "ca_key.pem"));
  CHECK(fs::exists(dir.path / "ca" / "ca_pub.der"));

  const Result en = invoke({"enroll", "--ca", dir.str("ca"), "--id", "alice", "--seed", "12", "--timestamp", "1700000000",
                         "--out", dir.str("users")});
  REQUIRE(en.code == cli::kExitOk);
  CHECK(value(en.out, "enrolled_at") == "1700000000");
  const std::string der = slurp(dir.path / "ca" / "ca_pub.der");
  const RsaPublicKey ca_pub = RsaPublicKey::from_der(as_bytes(der));
  CHECK(to_hex(ca_pub.fingerprint()) == value(ca.out, "ca_fingerprint"));
  CHECK(verify_certificate(ca_pub, as_bytes(slurp(dir.path / "users" / "alice.cert"))).user_id == "alice");
  const auto registry = parse_registry(slurp(dir.path / "ca" / "registry.txt"));
  REQUIRE(registry.size() == 1);
  CHECK(registry[0].enrolled_at == 1700000000);

  const Result dup = invoke({"enroll", "--ca", dir.str("ca"), "--id", "alice", "--seed", "13", "--timestamp", "1",
                          "--out", dir.str("users")});
  CHECK(dup.code == cli::kExitData);
  CHECK(parse_registry(slurp(dir.path / "ca" / "registry.txt")).size() == 1);

  CHECK(invoke({"enroll", "--ca", dir.str("ca"), "--id", "../x", "--seed", "1", "--out", dir.str("users")}).code ==
        cli::kExitUsage);
  CHECK(invoke({"enroll", "--ca", dir.str("ca"), "--id", "two words", "--seed", "1", "--out", dir.str("users")}).code ==
        cli::kExitUsage);
}

TEST_CASE("eval is deterministic and persists no secrets") {
  TempDir a("eval-a"), b("eval-b");
  auto run_eval = [](const TempDir& d) {
    return invoke({"eval", "--synthetic", "--subjects", "6", "--impressions", "3", "--minutiae", "30", "--seed", "5",
                "--np", "12", "--key-studies", "--keys", "3", "--out", d.str("roc.csv"), "--summary",
                d.str("summary.txt")});
  };
  const Result ra = run_eval(a);
  const Result rb = run_eval(b);
  REQUIRE(ra.code == cli::kExitOk);
  CHECK(ra.out == rb.out);
  CHECK(slurp(a.path / "roc.csv") == slurp(b.path / "roc.csv"));
  CHECK(slurp(a.path / "summary.txt") == slurp(b.path / "summary.txt"));
  CHECK(value(ra.out, "genuine_pairs") == "18");
  CHECK(value(ra.out, "impostor_pairs") == "15");
  CHECK(slurp(a.path / "roc.csv").starts_with("threshold,far,frr,gar\n"));
  CHECK(slurp(a.path / "summary.txt").find("[revocability_hamming]") != std::string::npos);

  std::vector<std::string> names;
  for (const auto& e : fs::directory_iterator(a.path)) names.push_back(e.path().filename().string());
  std::sort(names.begin(), names.end());
  CHECK(names == std::vector<std::string>{"roc.csv", "summary.txt"});
  for (const auto& n : names) {
    const std::string text = slurp(a.path / n);
    CHECK(text.find("PRIVATE") == std::string::npos);
    // Only short decimal fields: no hex blob the size of a key or template.
    std::size_t run = 0, longest = 0;
    for (char c : text) {
      run = std::isxdigit(static_cast<unsigned char>(c)) ? run + 1 : 0;
      longest = std::max(longest, run);
    }
    CHECK(longest < 32);
  }

  const Result other = invoke({"eval", "--synthetic", "--subjects", "6", "--impressions", "3", "--minutiae", "30",
                            "--seed", "6", "--np", "12"});
  CHECK(other.out != invoke({"eval", "--synthetic", "--subjects", "6", "--impressions", "3", "--minutiae", "30",
                          "--seed", "5", "--np", "12"}).out);
}

TEST_CASE("eval over a dataset directory") {
  const Result r = invoke({"eval", "--dataset", (kData / "dataset").string(), "--seed", "1", "--np", "12"});
  REQUIRE(r.code == cli::kExitOk);
  CHECK(value(r.out, "subjects") == "3");
  CHECK(value(r.out, "impressions") == "2");
  CHECK(value(r.out, "genuine_pairs") == "3");
  CHECK(value(r.out, "impostor_pairs") == "3");
  CHECK(invoke({"eval", "--dataset", kData.string(), "--seed", "1"}).code == cli::kExitData);
}
