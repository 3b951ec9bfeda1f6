#include "biokey/minutiae.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>
#include <random>
#include <set>
#include <string_view>
#include <tuple>

namespace biokey {

namespace {

// mt19937_64 is fully specified by the standard; the conversions below avoid
// the implementation-defined std:: distributions so outputs are portable.
class SampleRng {
 public:
  explicit SampleRng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  std::uint32_t uniform_int(std::uint32_t hi_inclusive) {
    return static_cast<std::uint32_t>(engine_() % (static_cast<std::uint64_t>(hi_inclusive) + 1));
  }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
    has_spare_ = true;
    return r * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

bool parse_u32(std::string_view s, std::uint32_t& out) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

bool parse_double(std::string_view s, double& out) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

using MinutiaKey = std::tuple<std::uint32_t, std::uint32_t, double>;

std::uint32_t jitter(std::uint32_t v, double noise, std::uint32_t limit) {
  double moved = std::round(static_cast<double>(v) + noise);
  moved = std::clamp(moved, 0.0, static_cast<double>(limit));
  return static_cast<std::uint32_t>(moved);
}

}  // namespace

MinutiaeError::MinutiaeError(MinutiaeErrorKind kind, std::size_t line, const std::string& what)
    : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), kind_(kind), line_(line) {}

void PerturbationProfile::validate() const {
  auto finite_nonneg = [](double v) { return std::isfinite(v) && v >= 0.0; };
  if (!finite_nonneg(translation_sigma) || !finite_nonneg(rotation_sigma))
    throw InvalidArgument("perturbation sigmas must be finite and non-negative");
  if (!(drop_rate >= 0.0 && drop_rate <= 1.0) || !(spurious_rate >= 0.0 && spurious_rate <= 1.0))
    throw InvalidArgument("perturbation rates must lie in [0, 1]");
}

double normalize_degrees(double degrees) {
  double r = std::fmod(degrees, 360.0);
  if (r < 0.0) r += 360.0;
  if (r >= 360.0) r = 0.0;
  return r + 0.0;  // folds -0.0 into +0.0
}

MinutiaeSet parse_minutiae_file(ByteView bytes, std::string subject_id, std::uint32_t impression_id) {
  std::string_view text(reinterpret_cast<const char*>(bytes.data()), bytes.size());
  MinutiaeSet set;
  set.subject_id = std::move(subject_id);
  set.impression_id = impression_id;

  bool have_header = false;
  std::size_t line_no = 0;
  std::set<MinutiaKey> seen;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;

    if (line.starts_with('#')) continue;
    auto fields = split_fields(line);
    if (fields.empty()) continue;

    if (!have_header) {
      if (fields.size() != 2 || !parse_u32(fields[0], set.width) || !parse_u32(fields[1], set.height))
        throw MinutiaeError(MinutiaeErrorKind::kMalformedHeader, line_no, "malformed header, expected \"<width> <height>\"");
      have_header = true;
      continue;
    }

    if (fields.size() != 3)
      throw MinutiaeError(MinutiaeErrorKind::kMalformedLine, line_no, "expected \"<x> <y> <theta>\"");
    Minutia m;
    double theta = 0.0;
    if (!parse_u32(fields[0], m.x) || !parse_u32(fields[1], m.y) || !parse_double(fields[2], theta))
      throw MinutiaeError(MinutiaeErrorKind::kNonNumeric, line_no, "non-numeric minutia field");
    if (!std::isfinite(theta))
      throw MinutiaeError(MinutiaeErrorKind::kAngleOutOfRange, line_no, "angle out of range");
    m.theta = normalize_degrees(theta);
    if (m.x > set.width || m.y > set.height)
      throw MinutiaeError(MinutiaeErrorKind::kOutOfBounds, line_no, "minutia outside declared image");
    if (!seen.emplace(m.x, m.y, m.theta).second)
      throw MinutiaeError(MinutiaeErrorKind::kDuplicateMinutia, line_no, "duplicate minutia");
    set.minutiae.push_back(m);
  }

  if (!have_header)
    throw MinutiaeError(MinutiaeErrorKind::kMalformedHeader, std::max<std::size_t>(line_no, 1), "missing header");
  if (set.minutiae.size() < 2)
    throw MinutiaeError(MinutiaeErrorKind::kInsufficientMinutiae, line_no, "insufficient minutiae");
  return set;
}

std::string serialize_minutiae(const MinutiaeSet& set) {
  std::string out = std::to_string(set.width) + " " + std::to_string(set.height) + "\n";
  for (const auto& m : set.minutiae) {
    out += std::to_string(m.x);
    out += ' ';
    out += std::to_string(m.y);
    out += ' ';
    out += format_double(m.theta);
    out += '\n';
  }
  return out;
}

void validate(const MinutiaeSet& set) {
  if (set.minutiae.size() < 2)
    throw MinutiaeError(MinutiaeErrorKind::kInsufficientMinutiae, 0, "insufficient minutiae");
  std::set<MinutiaKey> seen;
  for (const auto& m : set.minutiae) {
    if (!(m.theta >= 0.0 && m.theta < 360.0))
      throw MinutiaeError(MinutiaeErrorKind::kAngleOutOfRange, 0, "angle out of range");
    if (m.x > set.width || m.y > set.height)
      throw MinutiaeError(MinutiaeErrorKind::kOutOfBounds, 0, "minutia outside declared image");
    if (!seen.emplace(m.x, m.y, m.theta).second)
      throw MinutiaeError(MinutiaeErrorKind::kDuplicateMinutia, 0, "duplicate minutia");
  }
}

MinutiaeSet synthesize_subject(std::size_t n_minutiae, std::uint32_t width, std::uint32_t height,
                               std::uint64_t seed) {
  if (n_minutiae < 2)
    throw MinutiaeError(MinutiaeErrorKind::kInsufficientMinutiae, 0, "insufficient minutiae");
  const auto positions = (static_cast<std::uint64_t>(width) + 1) * (static_cast<std::uint64_t>(height) + 1);
  if (n_minutiae > positions) throw InvalidArgument("more minutiae than distinct image positions");

  SampleRng rng(seed);
  MinutiaeSet set;
  set.subject_id = "synthetic-" + std::to_string(seed);
  set.width = width;
  set.height = height;
  std::set<std::pair<std::uint32_t, std::uint32_t>> used;
  while (set.minutiae.size() < n_minutiae) {
    Minutia m;
    m.x = rng.uniform_int(width);
    m.y = rng.uniform_int(height);
    m.theta = normalize_degrees(rng.uniform() * 360.0);
    if (used.emplace(m.x, m.y).second) set.minutiae.push_back(m);
  }
  return set;
}

MinutiaeSet perturb(const MinutiaeSet& set, const PerturbationProfile& profile) {
  profile.validate();
  SampleRng rng(profile.rng_seed);
  const std::size_t n = set.minutiae.size();

  std::vector<bool> dropped(n, false);
  const auto n_drop = static_cast<std::size_t>(std::llround(profile.drop_rate * static_cast<double>(n)));
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  for (std::size_t i = 0; i < n_drop && i < n; ++i) {
    auto j = i + rng.uniform_int(static_cast<std::uint32_t>(n - i - 1));
    std::swap(order[i], order[j]);
    dropped[order[i]] = true;
  }

  MinutiaeSet out;
  out.subject_id = set.subject_id;
  out.impression_id = set.impression_id;
  out.width = set.width;
  out.height = set.height;
  std::set<MinutiaKey> seen;
  auto push_unique = [&](const Minutia& m) {
    if (seen.emplace(m.x, m.y, m.theta).second) out.minutiae.push_back(m);
  };

  for (std::size_t i = 0; i < n; ++i) {
    if (dropped[i]) continue;
    const Minutia& src = set.minutiae[i];
    Minutia m;
    m.x = jitter(src.x, profile.translation_sigma * rng.normal(), set.width);
    m.y = jitter(src.y, profile.translation_sigma * rng.normal(), set.height);
    m.theta = normalize_degrees(src.theta + profile.rotation_sigma * rng.normal());
    push_unique(m);
  }

  const auto n_spurious = static_cast<std::size_t>(std::llround(profile.spurious_rate * static_cast<double>(n)));
  for (std::size_t i = 0; i < n_spurious; ++i) {
    Minutia m;
    m.x = rng.uniform_int(set.width);
    m.y = rng.uniform_int(set.height);
    m.theta = normalize_degrees(rng.uniform() * 360.0);
    push_unique(m);
  }

  if (out.minutiae.size() < 2)
    throw MinutiaeError(MinutiaeErrorKind::kInsufficientMinutiae, 0, "insufficient minutiae");
  return out;
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(mix(mix(base) ^ a) ^ (b * 0xd6e8feb86659fd93ULL));
}

}  // namespace biokey
