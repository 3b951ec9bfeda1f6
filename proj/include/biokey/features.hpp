#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "biokey/bitvector.hpp"
#include "biokey/error.hpp"
#include "biokey/minutiae.hpp"

namespace biokey {

/// Distance and relative angles of a minutiae pair, oriented from i to j.
struct PairVector {
  double length = 0.0;  // pixels
  double alpha = 0.0;   // degrees, [0, 360)
  double beta = 0.0;    // degrees, [0, 360)
};

/// Real-valued oriented point; lets invariance checks use exact rotations.
struct OrientedPoint {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;  // degrees
};

struct QuantizationConfig {
  unsigned n_l = 5;
  unsigned n_alpha = 5;
  unsigned n_beta = 5;
  double l_max = 540.0;

  unsigned n_p() const { return n_l + n_alpha + n_beta; }
  void validate() const;

  /// Splits `n_p` bits as evenly as possible, remainder going to L first.
  static QuantizationConfig with_total_bits(unsigned n_p, double l_max = 540.0);
};

inline constexpr unsigned kMaxFeatureBits = 24;

/// n_p-bit quantized pair code: L bits, then alpha bits, then beta bits.
struct QuantizedCode {
  std::uint32_t value = 0;
  unsigned n_p = 0;

  std::string to_string() const;
};

struct FeatureBitString {
  BitVector bits;  // length 2^n_p
  unsigned n_p = 0;
};

enum class FeatureErrorKind { kDegeneratePair, kInsufficientMinutiae, kEmptyInput, kMalformedEncoding };

class FeatureError : public Error {
 public:
  FeatureError(FeatureErrorKind kind, const std::string& what) : Error(what), kind_(kind) {}
  FeatureErrorKind kind() const { return kind_; }

 private:
  FeatureErrorKind kind_;
};

PairVector pair_vector(const OrientedPoint& from, const OrientedPoint& to);
PairVector pair_vector(const Minutia& from, const Minutia& to);

struct PairVectorSet {
  std::vector<PairVector> vectors;
  std::size_t degenerate_skipped = 0;
};

/// One vector per unordered pair, directed i -> j for i < j in list order.
/// Coincident-position pairs are skipped and counted.
PairVectorSet all_pair_vectors(const MinutiaeSet& set);

QuantizedCode quantize(const PairVector& v, const QuantizationConfig& cfg);

/// Sets bit `code` for every vector's quantized code.
FeatureBitString bin_to_bitstring(std::span<const PairVector> vectors, const QuantizationConfig& cfg);

/// all_pair_vectors followed by bin_to_bitstring.
FeatureBitString extract_features(const MinutiaeSet& set, const QuantizationConfig& cfg);

/// [u32 big-endian bit count][packed bytes].
Bytes serialize_bits(const BitVector& bits);
BitVector deserialize_bits(ByteView encoded);

}  // namespace biokey
