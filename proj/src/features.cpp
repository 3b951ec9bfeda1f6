#include "biokey/features.hpp"

#include <cmath>
#include <numbers>

namespace biokey {

void QuantizationConfig::validate() const {
  if (n_l == 0 || n_alpha == 0 || n_beta == 0) throw InvalidArgument("each quantization field needs at least one bit");
  if (n_p() > kMaxFeatureBits) throw InvalidArgument("n_p must not exceed 24");
  if (!(std::isfinite(l_max) && l_max > 0.0)) throw InvalidArgument("l_max must be positive");
}

QuantizationConfig QuantizationConfig::with_total_bits(unsigned n_p, double l_max) {
  QuantizationConfig cfg;
  cfg.n_l = n_p / 3 + (n_p % 3 > 0 ? 1 : 0);
  cfg.n_alpha = n_p / 3 + (n_p % 3 > 1 ? 1 : 0);
  cfg.n_beta = n_p / 3;
  cfg.l_max = l_max;
  cfg.validate();
  return cfg;
}

std::string QuantizedCode::to_string() const {
  std::string s(n_p, '0');
  for (unsigned i = 0; i < n_p; ++i)
    if ((value >> (n_p - 1 - i)) & 1u) s[i] = '1';
  return s;
}

PairVector pair_vector(const OrientedPoint& from, const OrientedPoint& to) {
  const double dx = to.x - from.x;
  const double dy = to.y - from.y;
  if (dx == 0.0 && dy == 0.0) throw FeatureError(FeatureErrorKind::kDegeneratePair, "coincident minutiae pair");

  const double t = from.theta * std::numbers::pi / 180.0;
  const double X = dx * std::cos(t) + dy * std::sin(t);
  const double Y = dx * std::sin(t) - dy * std::cos(t);

  PairVector v;
  v.length = std::hypot(X, Y);
  v.alpha = normalize_degrees(std::atan2(Y, X) * 180.0 / std::numbers::pi);
  v.beta = normalize_degrees(v.alpha + to.theta - from.theta);
  return v;
}

PairVector pair_vector(const Minutia& from, const Minutia& to) {
  return pair_vector(OrientedPoint{static_cast<double>(from.x), static_cast<double>(from.y), from.theta},
                     OrientedPoint{static_cast<double>(to.x), static_cast<double>(to.y), to.theta});
}

PairVectorSet all_pair_vectors(const MinutiaeSet& set) {
  const auto& ms = set.minutiae;
  if (ms.size() < 2) throw FeatureError(FeatureErrorKind::kInsufficientMinutiae, "insufficient minutiae");
  PairVectorSet out;
  out.vectors.reserve(ms.size() * (ms.size() - 1) / 2);
  for (std::size_t i = 0; i + 1 < ms.size(); ++i) {
    for (std::size_t j = i + 1; j < ms.size(); ++j) {
      if (ms[i].x == ms[j].x && ms[i].y == ms[j].y) {
        ++out.degenerate_skipped;
        continue;
      }
      out.vectors.push_back(pair_vector(ms[i], ms[j]));
    }
  }
  return out;
}

namespace {

std::uint32_t bin_index(double value, double range, unsigned bits) {
  const std::uint32_t bins = 1u << bits;
  const double scaled = std::floor(value * static_cast<double>(bins) / range);
  if (!(scaled > 0.0)) return 0;
  if (scaled >= static_cast<double>(bins)) return bins - 1;
  return static_cast<std::uint32_t>(scaled);
}

}  // namespace

QuantizedCode quantize(const PairVector& v, const QuantizationConfig& cfg) {
  cfg.validate();
  const std::uint32_t l_bin = bin_index(v.length, cfg.l_max, cfg.n_l);
  const std::uint32_t a_bin = bin_index(v.alpha, 360.0, cfg.n_alpha);
  const std::uint32_t b_bin = bin_index(v.beta, 360.0, cfg.n_beta);
  return {(l_bin << (cfg.n_alpha + cfg.n_beta)) | (a_bin << cfg.n_beta) | b_bin, cfg.n_p()};
}

FeatureBitString bin_to_bitstring(std::span<const PairVector> vectors, const QuantizationConfig& cfg) {
  cfg.validate();
  if (vectors.empty()) throw FeatureError(FeatureErrorKind::kEmptyInput, "no pair vectors to bin");
  FeatureBitString out{BitVector(std::size_t{1} << cfg.n_p()), cfg.n_p()};
  for (const auto& v : vectors) out.bits.set(quantize(v, cfg).value);
  return out;
}

FeatureBitString extract_features(const MinutiaeSet& set, const QuantizationConfig& cfg) {
  auto pairs = all_pair_vectors(set);
  return bin_to_bitstring(pairs.vectors, cfg);
}

Bytes serialize_bits(const BitVector& bits) {
  if (bits.size() > 0xFFFFFFFFu) throw InvalidArgument("bit vector too long to encode");
  Bytes out;
  out.reserve(4 + bits.bytes().size());
  put_u32(out, static_cast<std::uint32_t>(bits.size()));
  out.insert(out.end(), bits.bytes().begin(), bits.bytes().end());
  return out;
}

BitVector deserialize_bits(ByteView encoded) {
  try {
    ByteReader r(encoded);
    const std::uint32_t n_bits = r.u32();
    auto packed = r.take((static_cast<std::size_t>(n_bits) + 7) / 8);
    if (!r.done()) throw FeatureError(FeatureErrorKind::kMalformedEncoding, "trailing bytes after bit string");
    return BitVector::from_bytes(packed, n_bits);
  } catch (const FeatureError&) {
    throw;
  } catch (const Error& e) {
    throw FeatureError(FeatureErrorKind::kMalformedEncoding, std::string("malformed bit string: ") + e.what());
  }
}

}  // namespace biokey
