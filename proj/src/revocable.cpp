#include "biokey/revocable.hpp"

#include <algorithm>
#include <bit>

#include "biokey/error.hpp"

namespace biokey {

__extension__ typedef unsigned __int128 u128;

TransformationKey TransformationKey::generate(RandomSource& rng, std::string label, std::size_t token_bytes) {
  if (token_bytes == 0) throw InvalidArgument("transformation key token must be non-empty");
  return {rng.bytes(token_bytes), std::move(label)};
}

void TransformationKey::validate() const {
  if (token.empty()) throw InvalidArgument("transformation key token must be non-empty");
  if (label.find('\n') != std::string::npos) throw InvalidArgument("transformation key label must be one line");
}

std::vector<std::uint64_t> index_stream(const TransformationKey& key, std::uint64_t n, std::size_t count) {
  key.validate();
  if (n == 0) throw InvalidArgument("index range must be positive");
  std::vector<std::uint64_t> out;
  out.reserve(count);
  Bytes input(key.token);
  const std::size_t counter_at = input.size();
  const bool pow2 = (n & (n - 1)) == 0;
  input.resize(counter_at + 8);
  for (std::size_t i = 1; i <= count; ++i) {
    for (int b = 0; b < 8; ++b) input[counter_at + static_cast<std::size_t>(b)] = static_cast<std::uint8_t>(i >> (56 - 8 * b));
    const Digest d = sha256(input);
    std::uint64_t r = 0;
    if (pow2) {
      for (int b = 24; b < 32; ++b) r = (r << 8) | d[static_cast<std::size_t>(b)];
      r &= n - 1;
    } else {
      for (int w = 0; w < 4; ++w) {
        std::uint64_t word = 0;
        for (int b = 0; b < 8; ++b) word = (word << 8) | d[static_cast<std::size_t>(8 * w + b)];
        r = static_cast<std::uint64_t>(((static_cast<u128>(r) << 64) | word) % n);
      }
    }
    out.push_back(r + 1);
  }
  return out;
}

namespace {

void check_indices(std::size_t n_bits, std::span<const std::uint64_t> indices) {
  if (indices.size() != n_bits) throw InvalidArgument("swap schedule length must equal bit length");
  for (auto j : indices)
    if (j < 1 || j > n_bits) throw InvalidArgument("swap index out of range");
}

}  // namespace

BitVector apply_swaps(BitVector bits, std::span<const std::uint64_t> indices) {
  check_indices(bits.size(), indices);
  for (std::size_t i = 0; i < indices.size(); ++i) bits.swap_bits(i, indices[i] - 1);
  return bits;
}

BitVector undo_swaps(BitVector bits, std::span<const std::uint64_t> indices) {
  check_indices(bits.size(), indices);
  for (std::size_t i = indices.size(); i-- > 0;) bits.swap_bits(i, indices[i] - 1);
  return bits;
}

KeyedPermutation::KeyedPermutation(const TransformationKey& key, std::size_t n_bits)
    : indices_(index_stream(key, n_bits, n_bits)) {}

BitVector KeyedPermutation::apply(const BitVector& bits) const { return apply_swaps(bits, indices_); }

BitVector KeyedPermutation::invert(const BitVector& bits) const { return undo_swaps(bits, indices_); }

RevocableTemplate permute(const FeatureBitString& fbs, const TransformationKey& key) {
  KeyedPermutation perm(key, fbs.bits.size());
  return {perm.apply(fbs.bits), key.label};
}

FeatureBitString invert(const RevocableTemplate& tpl, const TransformationKey& key) {
  const std::size_t n = tpl.bits.size();
  if (!std::has_single_bit(n)) throw InvalidArgument("template length must be a power of two");
  KeyedPermutation perm(key, n);
  return {perm.invert(tpl.bits), static_cast<unsigned>(std::countr_zero(n))};
}

TransformationKey parse_transformation_key(std::string_view text) {
  const auto nl = text.find('\n');
  if (nl == std::string_view::npos) throw InvalidArgument("transformation key file needs two lines");
  std::string_view hex = text.substr(0, nl);
  std::string_view label = text.substr(nl + 1);
  if (label.ends_with('\n')) label.remove_suffix(1);
  if (std::find(label.begin(), label.end(), '\n') != label.end())
    throw InvalidArgument("transformation key file has extra lines");
  TransformationKey key{from_hex(hex), std::string(label)};
  key.validate();
  return key;
}

std::string serialize_transformation_key(const TransformationKey& key) {
  key.validate();
  return to_hex(key.token) + "\n" + key.label + "\n";
}

}  // namespace biokey
