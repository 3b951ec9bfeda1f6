#include "biokey/evaluation.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdio>
#include <iterator>
#include <numeric>

#include "biokey/crypto.hpp"
#include "biokey/error.hpp"

namespace biokey {

DistributionSummary summarize(const std::vector<double>& samples) {
  if (samples.empty()) throw InvalidArgument("no samples to summarize");
  DistributionSummary s;
  s.count = samples.size();
  s.histogram.assign(kHistogramBins, 0);
  s.min = samples.front();
  s.max = samples.front();
  double sum = 0;
  for (double v : samples) {
    sum += v;
    s.min = std::min(s.min, v);
    s.max = std::max(s.max, v);
    auto bin = static_cast<std::ptrdiff_t>(std::floor(v * static_cast<double>(kHistogramBins)));
    bin = std::clamp<std::ptrdiff_t>(bin, 0, static_cast<std::ptrdiff_t>(kHistogramBins) - 1);
    ++s.histogram[static_cast<std::size_t>(bin)];
  }
  s.mean = sum / static_cast<double>(s.count);
  double sq = 0;
  for (double v : samples) sq += (v - s.mean) * (v - s.mean);
  s.std = std::sqrt(sq / static_cast<double>(s.count));
  // Guard the ordering invariant against summation rounding.
  s.mean = std::clamp(s.mean, s.min, s.max);
  return s;
}

double fraction_within(const std::vector<double>& samples, double lo, double hi) {
  if (samples.empty()) throw InvalidArgument("no samples");
  auto n = std::count_if(samples.begin(), samples.end(), [&](double v) { return v >= lo && v <= hi; });
  return static_cast<double>(n) / static_cast<double>(samples.size());
}

double hamming_fraction(const BitVector& a, const BitVector& b) {
  if (a.size() == 0) throw InvalidArgument("empty bit vectors");
  return static_cast<double>(a.hamming(b)) / static_cast<double>(a.size());
}

double hamming_fraction(ByteView a, ByteView b) {
  if (a.size() != b.size()) throw InvalidArgument("length mismatch");
  if (a.empty()) throw InvalidArgument("empty input");
  std::size_t d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d += static_cast<std::size_t>(std::popcount(static_cast<unsigned>(a[i] ^ b[i])));
  return static_cast<double>(d) / static_cast<double>(8 * a.size());
}

Pairings fvc_pairings(std::size_t n_subjects, std::size_t n_impressions) {
  if (n_subjects < 2 || n_impressions < 2) throw InvalidArgument("need at least 2 subjects and 2 impressions");
  Pairings p;
  p.genuine.reserve(n_subjects * n_impressions * (n_impressions - 1) / 2);
  p.impostor.reserve(n_subjects * (n_subjects - 1) / 2);
  for (std::size_t s = 0; s < n_subjects; ++s)
    for (std::size_t i = 0; i < n_impressions; ++i)
      for (std::size_t j = i + 1; j < n_impressions; ++j) p.genuine.push_back({{s, i}, {s, j}});
  for (std::size_t s = 0; s < n_subjects; ++s)
    for (std::size_t t = s + 1; t < n_subjects; ++t) p.impostor.push_back({{s, 0}, {t, 0}});
  return p;
}

Dataset synthesize_dataset(const DatasetConfig& cfg) {
  if (cfg.subjects < 2 || cfg.impressions < 1) throw InvalidArgument("dataset needs >= 2 subjects, >= 1 impression");
  cfg.noise.validate();
  Dataset ds;
  ds.subjects.resize(cfg.subjects);
  for (std::size_t s = 0; s < cfg.subjects; ++s) {
    MinutiaeSet master = synthesize_subject(cfg.minutiae, cfg.width, cfg.height, derive_seed(cfg.seed, s));
    master.subject_id = "subject-" + std::to_string(s);
    for (std::size_t i = 0; i < cfg.impressions; ++i) {
      PerturbationProfile p = cfg.noise;
      p.rng_seed = derive_seed(cfg.seed, s, i + 1);
      MinutiaeSet imp = perturb(master, p);
      imp.impression_id = static_cast<std::uint32_t>(i);
      ds.subjects[s].push_back(std::move(imp));
    }
  }
  return ds;
}

namespace {

void check_dataset(const Dataset& ds, std::size_t min_subjects, std::size_t min_impressions) {
  if (ds.subjects.size() < min_subjects) throw InvalidArgument("dataset has too few subjects");
  for (const auto& s : ds.subjects)
    if (s.size() < min_impressions || s.size() != ds.impressions())
      throw InvalidArgument("dataset impressions are missing or ragged");
}

StudyResult finish(std::vector<double> samples) {
  StudyResult r;
  r.summary = summarize(samples);
  r.samples = std::move(samples);
  return r;
}

TransformationKey subject_key(std::uint64_t seed, std::size_t subject, std::size_t k) {
  DeterministicRandom rng(derive_seed(seed, subject, k), "biokey.eval-t");
  return TransformationKey::generate(rng, "eval");
}

/// Session key between subjects s and t using their first impressions.
SessionKey pair_session_key(const FeatureBitString& fs, const FeatureBitString& ft, const TransformationKey& ks,
                            const TransformationKey& kt, const DhGroup& group, std::uint64_t session_id) {
  PrivateKey xs = derive_private_key(permute(fs, ks));
  PrivateKey xt = derive_private_key(permute(ft, kt));
  SessionKey k1 = session_key(shared_secret(group, xs, public_key(group, xt)), session_id);
  SessionKey k2 = session_key(shared_secret(group, xt, public_key(group, xs)), session_id);
  if (k1.key != k2.key) throw Error("key agreement diverged");
  return k1;
}

}  // namespace

ScoreSet template_scores(const Dataset& dataset, const QuantizationConfig& cfg, const TransformationKey& key) {
  check_dataset(dataset, 2, 2);
  KeyedPermutation perm(key, std::size_t{1} << cfg.n_p());
  std::vector<std::vector<BitVector>> tpl(dataset.subjects.size());
  for (std::size_t s = 0; s < dataset.subjects.size(); ++s)
    for (const auto& imp : dataset.subjects[s]) tpl[s].push_back(perm.apply(extract_features(imp, cfg).bits));

  const Pairings p = fvc_pairings(dataset.subjects.size(), dataset.impressions());
  ScoreSet scores;
  auto sim = [&](const Pairing& q) {
    return 1.0 - hamming_fraction(tpl[q.a.subject][q.a.impression], tpl[q.b.subject][q.b.impression]);
  };
  scores.genuine.reserve(p.genuine.size());
  scores.impostor.reserve(p.impostor.size());
  for (const auto& q : p.genuine) scores.genuine.push_back(sim(q));
  for (const auto& q : p.impostor) scores.impostor.push_back(sim(q));
  return scores;
}

StudyResult genuine_template_similarity_study(const Dataset& dataset, const QuantizationConfig& cfg,
                                              const TransformationKey& key) {
  return finish(template_scores(dataset, cfg, key).genuine);
}

StudyResult impostor_key_study(const Dataset& dataset, const QuantizationConfig& cfg, const DhGroup& group,
                               std::uint64_t seed) {
  check_dataset(dataset, 4, 1);
  const std::size_t n_pairs = dataset.subjects.size() / 2;
  std::vector<SessionKey> keys;
  keys.reserve(n_pairs);
  for (std::size_t k = 0; k < n_pairs; ++k) {
    const std::size_t s = 2 * k;
    const std::size_t t = 2 * k + 1;
    keys.push_back(pair_session_key(extract_features(dataset.subjects[s][0], cfg),
                                    extract_features(dataset.subjects[t][0], cfg), subject_key(seed, s, 0),
                                    subject_key(seed, t, 0), group, k + 1));
  }
  std::vector<double> samples;
  samples.reserve(n_pairs * (n_pairs - 1) / 2);
  for (std::size_t i = 0; i < n_pairs; ++i)
    for (std::size_t j = i + 1; j < n_pairs; ++j) samples.push_back(hamming_fraction(keys[i].key, keys[j].key));
  return finish(std::move(samples));
}

StudyResult revocability_study(const Dataset& dataset, std::size_t n_keys, const QuantizationConfig& cfg,
                               std::uint64_t seed) {
  check_dataset(dataset, 1, 1);
  if (n_keys < 2) throw InvalidArgument("revocability needs at least 2 transformation keys");
  std::vector<double> samples;
  samples.reserve(dataset.subjects.size() * (n_keys - 1));
  for (std::size_t s = 0; s < dataset.subjects.size(); ++s) {
    const FeatureBitString fbs = extract_features(dataset.subjects[s][0], cfg);
    const PrivateKey first = derive_private_key(permute(fbs, subject_key(seed, s, 0)));
    for (std::size_t k = 1; k < n_keys; ++k) {
      const PrivateKey other = derive_private_key(permute(fbs, subject_key(seed, s, k)));
      samples.push_back(hamming_fraction(first.bytes(), other.bytes()));
    }
  }
  return finish(std::move(samples));
}

std::vector<SessionKey> session_key_sample(const Dataset& dataset, std::size_t count, const QuantizationConfig& cfg,
                                           const DhGroup& group, std::uint64_t seed) {
  check_dataset(dataset, 2, 1);
  const std::size_t n = dataset.subjects.size();
  std::vector<FeatureBitString> features;
  features.reserve(n);
  for (const auto& s : dataset.subjects) features.push_back(extract_features(s[0], cfg));
  std::vector<SessionKey> keys;
  keys.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    const std::size_t s = k % n;
    const std::size_t t = (k + 1) % n;
    keys.push_back(pair_session_key(features[s], features[t], subject_key(seed, s, k + 1),
                                    subject_key(seed, t, k + 1), group, k + 1));
  }
  return keys;
}

double shannon_entropy(ByteView samples) {
  if (samples.empty()) throw InvalidArgument("entropy of empty input");
  std::array<std::size_t, 256> freq{};
  for (auto b : samples) ++freq[b];
  const double n = static_cast<double>(samples.size());
  double h = 0;
  for (auto c : freq) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / n;
    h -= p * std::log2(p);
  }
  return h <= 0 ? 0.0 : h;
}

std::vector<RocPoint> compute_roc(const ScoreSet& scores) {
  if (scores.genuine.empty() || scores.impostor.empty()) throw InvalidArgument("ROC needs genuine and impostor scores");
  std::vector<double> g = scores.genuine;
  std::vector<double> im = scores.impostor;
  std::sort(g.begin(), g.end());
  std::sort(im.begin(), im.end());
  std::vector<double> thresholds;
  thresholds.reserve(g.size() + im.size());
  std::merge(g.begin(), g.end(), im.begin(), im.end(), std::back_inserter(thresholds));
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

  std::vector<RocPoint> roc;
  roc.reserve(thresholds.size());
  for (double t : thresholds) {
    const auto rejected = std::lower_bound(g.begin(), g.end(), t) - g.begin();
    const auto accepted = im.end() - std::lower_bound(im.begin(), im.end(), t);
    RocPoint p;
    p.threshold = t;
    p.far = static_cast<double>(accepted) / static_cast<double>(im.size());
    p.frr = static_cast<double>(rejected) / static_cast<double>(g.size());
    p.gar = 1.0 - p.frr;
    roc.push_back(p);
  }
  return roc;
}

double eer(const ScoreSet& scores) {
  std::vector<RocPoint> roc = compute_roc(scores);
  roc.push_back({roc.back().threshold, 0.0, 1.0, 0.0});
  double prev_far = roc.front().far;
  double prev_d = roc.front().far - roc.front().frr;
  for (const auto& p : roc) {
    const double d = p.far - p.frr;
    if (d == 0) return p.far;
    if (d < 0) {
      const double w = prev_d / (prev_d - d);
      return prev_far + w * (p.far - prev_far);
    }
    prev_far = p.far;
    prev_d = d;
  }
  return 0.0;  // unreachable: the sentinel point always has d = -1
}

namespace {

std::string fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

std::string roc_csv(const std::vector<RocPoint>& roc) {
  std::string out = "threshold,far,frr,gar\n";
  for (const auto& p : roc)
    out += fixed(p.threshold) + "," + fixed(p.far) + "," + fixed(p.frr) + "," + fixed(p.gar) + "\n";
  return out;
}

std::string summary_record(const std::string& name, const DistributionSummary& s) {
  std::string out = "[" + name + "]\n";
  out += "count=" + std::to_string(s.count) + "\n";
  out += "mean=" + fixed(s.mean) + "\n";
  out += "std=" + fixed(s.std) + "\n";
  out += "min=" + fixed(s.min) + "\n";
  out += "max=" + fixed(s.max) + "\n";
  out += "histogram=";
  for (std::size_t i = 0; i < s.histogram.size(); ++i) out += (i ? "," : "") + std::to_string(s.histogram[i]);
  out += "\n";
  return out;
}

}  // namespace biokey
