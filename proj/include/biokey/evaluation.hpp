#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "biokey/bitvector.hpp"
#include "biokey/bytes.hpp"
#include "biokey/features.hpp"
#include "biokey/key_agreement.hpp"
#include "biokey/minutiae.hpp"
#include "biokey/revocable.hpp"

namespace biokey {

inline constexpr std::size_t kHistogramBins = 50;

struct ScoreSet {
  std::vector<double> genuine;
  std::vector<double> impostor;
};

/// Population statistics plus a fixed 50-bin histogram over [0, 1]; the
/// value 1.0 lands in the last bin.
struct DistributionSummary {
  std::size_t count = 0;
  double mean = 0;
  double std = 0;
  double min = 0;
  double max = 0;
  std::vector<std::size_t> histogram;
};

DistributionSummary summarize(const std::vector<double>& samples);

/// Fraction of samples in [lo, hi].
double fraction_within(const std::vector<double>& samples, double lo, double hi);

struct StudyResult {
  std::vector<double> samples;
  DistributionSummary summary;
};

double hamming_fraction(const BitVector& a, const BitVector& b);
double hamming_fraction(ByteView a, ByteView b);

struct ImpressionRef {
  std::size_t subject = 0;
  std::size_t impression = 0;
};

struct Pairing {
  ImpressionRef a;
  ImpressionRef b;
};

struct Pairings {
  std::vector<Pairing> genuine;
  std::vector<Pairing> impostor;
};

/// Genuine: every unordered impression pair within a subject.
/// Impostor: first impressions of every unordered subject pair.
Pairings fvc_pairings(std::size_t n_subjects, std::size_t n_impressions);

struct DatasetConfig {
  std::size_t subjects = 100;
  std::size_t impressions = 8;
  std::size_t minutiae = 40;
  std::uint32_t width = 388;
  std::uint32_t height = 374;
  PerturbationProfile noise{2.0, 4.0, 0.05, 0.0, 0};
  std::uint64_t seed = 0;
};

/// subjects[s][i]: impression i of subject s. Every impression is a
/// perturbed capture of a hidden master set.
struct Dataset {
  std::vector<std::vector<MinutiaeSet>> subjects;

  std::size_t impressions() const { return subjects.empty() ? 0 : subjects.front().size(); }
};

Dataset synthesize_dataset(const DatasetConfig& cfg);

/// Matching-bit fractions of revocable templates under one shared
/// transformation key (the stolen-token setting), over fvc_pairings.
ScoreSet template_scores(const Dataset& dataset, const QuantizationConfig& cfg, const TransformationKey& key);

StudyResult genuine_template_similarity_study(const Dataset& dataset, const QuantizationConfig& cfg,
                                              const TransformationKey& key);

/// Subjects are grouped into communicating pairs (0,1), (2,3), ...; each
/// pair agrees on a session key from first impressions and per-subject
/// transformation keys. Samples are Hamming fractions between the keys of
/// every two distinct pairs.
StudyResult impostor_key_study(const Dataset& dataset, const QuantizationConfig& cfg, const DhGroup& group,
                               std::uint64_t seed);

/// Per subject: private keys from the first impression under n_keys fresh
/// transformation keys, each compared with the first.
StudyResult revocability_study(const Dataset& dataset, std::size_t n_keys, const QuantizationConfig& cfg,
                               std::uint64_t seed);

/// `count` session keys from sessions between consecutive subjects, each
/// with fresh transformation keys.
std::vector<SessionKey> session_key_sample(const Dataset& dataset, std::size_t count, const QuantizationConfig& cfg,
                                           const DhGroup& group, std::uint64_t seed);

/// Bits per byte over byte-value frequencies; in [0, 8].
double shannon_entropy(ByteView samples);

struct RocPoint {
  double threshold = 0;
  double far = 0;
  double frr = 0;
  double gar = 0;
};

/// One point per distinct score, ascending threshold.
std::vector<RocPoint> compute_roc(const ScoreSet& scores);

/// Linear interpolation at the FAR/FRR crossing. Beyond the top score the
/// curve ends at FAR = 0, FRR = 1.
double eer(const ScoreSet& scores);

std::string roc_csv(const std::vector<RocPoint>& roc);

/// "key=value" lines; histogram as comma-separated counts.
std::string summary_record(const std::string& name, const DistributionSummary& summary);

}  // namespace biokey
