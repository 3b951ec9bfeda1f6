#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <tuple>

#include "biokey/evaluation.hpp"
#include "oracles.hpp"

using namespace biokey;

namespace {

const DhGroup kToy{BigInt(353), BigInt(3)};

Dataset small_dataset(std::size_t subjects, std::size_t impressions, std::uint64_t seed = 9) {
  DatasetConfig cfg;
  cfg.subjects = subjects;
  cfg.impressions = impressions;
  cfg.minutiae = 30;
  cfg.seed = seed;
  return synthesize_dataset(cfg);
}

}  // namespace

TEST_CASE("hamming fraction") {
  const Bytes zeros(32, 0x00);
  Bytes half(32, 0x00);
  std::fill(half.begin(), half.begin() + 16, 0xff);
  CHECK(hamming_fraction(zeros, half) == 0.5);  // 128 of 256 bits
  CHECK(hamming_fraction(zeros, Bytes(32, 0xff)) == 1.0);
  CHECK(hamming_fraction(half, half) == 0.0);
  CHECK_THROWS_AS(hamming_fraction(zeros, Bytes(31, 0)), InvalidArgument);
  CHECK_THROWS_AS(hamming_fraction(Bytes{}, Bytes{}), InvalidArgument);

  DeterministicRandom rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const Bytes a = rng.bytes(32), b = rng.bytes(32), c = rng.bytes(32);
    const double ab = hamming_fraction(a, b);
    CHECK(ab == static_cast<double>(oracle::hamming_bytes(a, b)) / 256.0);
    CHECK(ab == hamming_fraction(b, a));
    CHECK(hamming_fraction(a, c) <= ab + hamming_fraction(b, c) + 1e-12);
  }

  const BitVector x = BitVector::from_string("1100101");
  const BitVector y = BitVector::from_string("1010100");
  CHECK(hamming_fraction(x, y) == doctest::Approx(3.0 / 7.0));
  CHECK_THROWS_AS(hamming_fraction(BitVector{}, BitVector{}), InvalidArgument);
}

TEST_CASE("fvc pairings") {
  const Pairings full = fvc_pairings(100, 8);
  CHECK(full.genuine.size() == 2800);
  CHECK(full.impostor.size() == 4950);
  const Pairings tiny = fvc_pairings(2, 2);
  CHECK(tiny.genuine.size() == 2);
  CHECK(tiny.impostor.size() == 1);
  CHECK_THROWS_AS(fvc_pairings(1, 8), InvalidArgument);
  CHECK_THROWS_AS(fvc_pairings(5, 1), InvalidArgument);

  for (std::size_t n = 2; n <= 6; ++n)
    for (std::size_t m = 2; m <= 5; ++m) {
      using Key = std::tuple<std::size_t, std::size_t, std::size_t, std::size_t>;
      std::set<Key> want_g, want_i, got_g, got_i;
      for (std::size_t s = 0; s < n; ++s)
        for (std::size_t t = 0; t < n; ++t)
          for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < m; ++j) {
              if (s == t && i < j) want_g.insert({s, i, t, j});
              if (s < t && i == 0 && j == 0) want_i.insert({s, i, t, j});
            }
      const Pairings p = fvc_pairings(n, m);
      for (const auto& x : p.genuine) got_g.insert({x.a.subject, x.a.impression, x.b.subject, x.b.impression});
      for (const auto& x : p.impostor) got_i.insert({x.a.subject, x.a.impression, x.b.subject, x.b.impression});
      CHECK(got_g == want_g);
      CHECK(got_i == want_i);
      CHECK(p.genuine.size() == n * oracle::choose2(m));
      CHECK(p.impostor.size() == oracle::choose2(n));
    }
}

TEST_CASE("shannon entropy") {
  Bytes all(256);
  std::iota(all.begin(), all.end(), 0);
  CHECK(shannon_entropy(all) == doctest::Approx(8.0));
  CHECK(shannon_entropy(Bytes(100, 7)) == 0.0);
  CHECK(shannon_entropy(Bytes{1, 2, 1, 2}) == doctest::Approx(1.0));
  CHECK(shannon_entropy(Bytes{0, 0, 0, 1}) == doctest::Approx(-(0.75 * std::log2(0.75) + 0.25 * std::log2(0.25))));
  Bytes shuffled = all;
  std::reverse(shuffled.begin(), shuffled.end());
  std::rotate(shuffled.begin(), shuffled.begin() + 77, shuffled.end());
  CHECK(shannon_entropy(shuffled) == shannon_entropy(all));
  CHECK_THROWS_AS(shannon_entropy(Bytes{}), InvalidArgument);
}

TEST_CASE("summary statistics") {
  const std::vector<double> v = {0.0, 0.25, 0.5, 0.5, 1.0, 0.019, 0.02};
  const DistributionSummary s = summarize(v);
  CHECK(s.count == 7);
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / 7.0;
  double var = 0;
  for (double x : v) var += (x - mean) * (x - mean);
  CHECK(s.mean == doctest::Approx(mean));
  CHECK(s.std == doctest::Approx(std::sqrt(var / 7.0)));
  CHECK(s.min == 0.0);
  CHECK(s.max == 1.0);
  REQUIRE(s.histogram.size() == kHistogramBins);
  CHECK(std::accumulate(s.histogram.begin(), s.histogram.end(), std::size_t{0}) == 7);
  CHECK(s.histogram[0] == 2);   // 0.0, 0.019
  CHECK(s.histogram[1] == 1);   // 0.02
  CHECK(s.histogram[12] == 1);  // 0.25
  CHECK(s.histogram[25] == 2);
  CHECK(s.histogram[49] == 1);  // 1.0 lands in the last bin

  DeterministicRandom rng(3);
  std::vector<double> r(500);
  for (auto& x : r) x = static_cast<double>(rng.bytes(1)[0]) / 255.0;
  const DistributionSummary t = summarize(r);
  CHECK(t.min <= t.mean);
  CHECK(t.mean <= t.max);
  CHECK(t.std >= 0);
  CHECK(summarize({0.3, 0.3, 0.3}).std == 0.0);
  CHECK_THROWS_AS(summarize({}), InvalidArgument);

  CHECK(fraction_within({0.1, 0.4, 0.5, 0.6, 0.9}, 0.4, 0.6) == doctest::Approx(0.6));

  const std::string rec = summary_record("demo", summarize({0.5}));
  CHECK(rec.starts_with("[demo]\ncount=1\nmean=0.5"));
  CHECK(rec.find("histogram=0,0,") != std::string::npos);
}

TEST_CASE("ROC and EER") {
  SUBCASE("hand-computed curve") {
    const ScoreSet s{{0.3, 0.6, 0.9}, {0.2, 0.4, 0.7}};
    const auto roc = compute_roc(s);
    REQUIRE(roc.size() == 6);
    const double far[] = {1, 2.0 / 3, 2.0 / 3, 1.0 / 3, 1.0 / 3, 0};
    const double frr[] = {0, 0, 1.0 / 3, 1.0 / 3, 2.0 / 3, 2.0 / 3};
    for (std::size_t i = 0; i < 6; ++i) {
      CHECK(roc[i].far == doctest::Approx(far[i]));
      CHECK(roc[i].frr == doctest::Approx(frr[i]));
      CHECK(roc[i].gar == doctest::Approx(1 - frr[i]));
    }
    CHECK(eer(s) == doctest::Approx(1.0 / 3));
  }
  SUBCASE("separated and identical distributions") {
    CHECK(eer({{0.8, 0.9}, {0.1, 0.2}}) == 0.0);
    CHECK(eer({{0.5}, {0.5}}) == doctest::Approx(0.5));
    CHECK(eer({{0.1, 0.2}, {0.8, 0.9}}) == doctest::Approx(1.0));
  }
  SUBCASE("brute-force rates, monotone curve") {
    DeterministicRandom rng(11);
    ScoreSet s;
    for (int i = 0; i < 200; ++i) s.genuine.push_back(0.5 + rng.bytes(1)[0] / 512.0);
    for (int i = 0; i < 300; ++i) s.impostor.push_back(rng.bytes(1)[0] / 400.0);
    const auto roc = compute_roc(s);
    for (std::size_t i = 0; i < roc.size(); ++i) {
      const double t = roc[i].threshold;
      const double fa = static_cast<double>(std::count_if(s.impostor.begin(), s.impostor.end(), [&](double x) { return x >= t; }));
      const double fr = static_cast<double>(std::count_if(s.genuine.begin(), s.genuine.end(), [&](double x) { return x < t; }));
      CHECK(roc[i].far == fa / 300.0);
      CHECK(roc[i].frr == fr / 200.0);
      if (i > 0) {
        CHECK(roc[i].threshold > roc[i - 1].threshold);
        CHECK(roc[i].far <= roc[i - 1].far);
        CHECK(roc[i].frr >= roc[i - 1].frr);
      }
    }
    const double e = eer(s);
    CHECK(e >= 0.0);
    CHECK(e <= 1.0);
  }
  CHECK_THROWS_AS(compute_roc({{}, {0.1}}), InvalidArgument);

  const std::string csv = roc_csv(compute_roc({{0.75}, {0.25}}));
  CHECK(csv == "threshold,far,frr,gar\n0.250000,1.000000,0.000000,1.000000\n0.750000,0.000000,0.000000,1.000000\n");
}

TEST_CASE("synthetic dataset") {
  const Dataset d = small_dataset(4, 3);
  REQUIRE(d.subjects.size() == 4);
  CHECK(d.impressions() == 3);
  for (const auto& subj : d.subjects)
    for (const auto& imp : subj) {
      CHECK(imp.minutiae.size() <= 30);
      CHECK(imp.minutiae.size() >= 20);
      CHECK(imp.width == 388);
      CHECK(imp.height == 374);
    }
  const Dataset again = small_dataset(4, 3);
  CHECK(again.subjects[2][1].minutiae == d.subjects[2][1].minutiae);
  CHECK(small_dataset(4, 3, 10).subjects[2][1].minutiae != d.subjects[2][1].minutiae);
  CHECK(d.subjects[0][0].minutiae != d.subjects[0][1].minutiae);
}

TEST_CASE("studies") {
  const Dataset d = small_dataset(6, 3);
  const QuantizationConfig q = QuantizationConfig::with_total_bits(12);
  DeterministicRandom rng(1);
  const TransformationKey key = TransformationKey::generate(rng, "shared");

  const ScoreSet scores = template_scores(d, q, key);
  CHECK(scores.genuine.size() == 6 * 3);
  CHECK(scores.impostor.size() == 15);
  for (double v : scores.genuine) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
  // One-minus-Hamming between the permuted templates, recomputed directly.
  const KeyedPermutation perm(key, std::size_t{1} << 12);
  const BitVector t00 = perm.apply(extract_features(d.subjects[0][0], q).bits);
  const BitVector t01 = perm.apply(extract_features(d.subjects[0][1], q).bits);
  const BitVector t10 = perm.apply(extract_features(d.subjects[1][0], q).bits);
  CHECK(scores.genuine[0] == doctest::Approx(1.0 - oracle::hamming_bits(t00.to_string(), t01.to_string()) / 4096.0));
  CHECK(scores.impostor[0] == doctest::Approx(1.0 - oracle::hamming_bits(t00.to_string(), t10.to_string()) / 4096.0));

  const StudyResult g = genuine_template_similarity_study(d, q, key);
  CHECK(g.samples == scores.genuine);
  CHECK(g.summary.count == 18);

  const StudyResult imp = impostor_key_study(d, q, kToy, 4);
  CHECK(imp.samples.size() == 3);  // 3 communicating pairs
  CHECK(imp.samples == impostor_key_study(d, q, kToy, 4).samples);

  const StudyResult rev = revocability_study(d, 4, q, 4);
  CHECK(rev.samples.size() == 6 * 3);
  for (double v : rev.samples) CHECK(v > 0.0);

  const auto keys = session_key_sample(d, 8, q, DhGroup::rfc3526_2048(), 4);
  REQUIRE(keys.size() == 8);
  std::set<Bytes> distinct;
  for (const auto& k : keys) distinct.emplace(k.key.begin(), k.key.end());
  CHECK(distinct.size() == 8);
}
