#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "biokey/bytes.hpp"
#include "biokey/error.hpp"

namespace biokey {

/// A ridge ending or bifurcation: pixel position and orientation in degrees.
struct Minutia {
  std::uint32_t x = 0;
  std::uint32_t y = 0;
  double theta = 0.0;  // [0, 360)

  friend bool operator==(const Minutia&, const Minutia&) = default;
};

struct MinutiaeSet {
  std::string subject_id;
  std::uint32_t impression_id = 0;
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::vector<Minutia> minutiae;

  std::size_t size() const { return minutiae.size(); }

  friend bool operator==(const MinutiaeSet&, const MinutiaeSet&) = default;
};

/// Intra-subject capture variation applied by perturb().
struct PerturbationProfile {
  double translation_sigma = 0.0;  // pixels, per axis
  double rotation_sigma = 0.0;     // degrees
  double drop_rate = 0.0;
  double spurious_rate = 0.0;
  std::uint64_t rng_seed = 0;

  void validate() const;
};

enum class MinutiaeErrorKind {
  kMalformedHeader,
  kMalformedLine,
  kNonNumeric,
  kAngleOutOfRange,
  kOutOfBounds,
  kDuplicateMinutia,
  kInsufficientMinutiae,
};

class MinutiaeError : public Error {
 public:
  /// `line` is 1-based; 0 when the error is not tied to a file line.
  MinutiaeError(MinutiaeErrorKind kind, std::size_t line, const std::string& what);

  MinutiaeErrorKind kind() const { return kind_; }
  std::size_t line() const { return line_; }

 private:
  MinutiaeErrorKind kind_;
  std::size_t line_;
};

/// Maps any finite angle into [0, 360).
double normalize_degrees(double degrees);

/// Reads the "<width> <height>" / "<x> <y> <theta>" text format. Lines
/// starting with '#' and blank lines are skipped; minutiae order is kept.
MinutiaeSet parse_minutiae_file(ByteView bytes, std::string subject_id = {},
                                std::uint32_t impression_id = 0);

/// Canonical form: no comments, theta in shortest round-trip decimal.
std::string serialize_minutiae(const MinutiaeSet& set);

/// Throws MinutiaeError if the set violates the type invariants.
void validate(const MinutiaeSet& set);

/// Uniform positions in [0,width]x[0,height] (distinct), uniform angles.
MinutiaeSet synthesize_subject(std::size_t n_minutiae, std::uint32_t width, std::uint32_t height,
                               std::uint64_t seed);

/// Drops round(drop_rate*n) minutiae, jitters the survivors with Gaussian
/// noise, then appends round(spurious_rate*n) uniform spurious minutiae.
MinutiaeSet perturb(const MinutiaeSet& set, const PerturbationProfile& profile);

/// SplitMix64-style mixing used to derive independent sub-seeds.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0);

}  // namespace biokey
