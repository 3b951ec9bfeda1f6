#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "biokey/bitvector.hpp"
#include "biokey/crypto.hpp"
#include "biokey/features.hpp"

namespace biokey {

inline constexpr std::size_t kDefaultTokenBytes = 16;

/// User-specific secret seeding the template permutation. Revoking a
/// template means issuing a new token.
struct TransformationKey {
  Bytes token;
  std::string label;

  static TransformationKey generate(RandomSource& rng, std::string label,
                                    std::size_t token_bytes = kDefaultTokenBytes);
  void validate() const;

  friend bool operator==(const TransformationKey&, const TransformationKey&) = default;
};

/// Permuted feature bit string plus the label of the key that produced it.
struct RevocableTemplate {
  BitVector bits;
  std::string key_label;
};

/// i-th value (1-based i) = 1 + (SHA-256(token || be64(i)) mod n).
std::vector<std::uint64_t> index_stream(const TransformationKey& key, std::uint64_t n, std::size_t count);

/// Sequential swap loop: for i = 1..N swap bit i with bit indices[i-1]
/// (1-based positions). `indices` must hold N values in [1, N].
BitVector apply_swaps(BitVector bits, std::span<const std::uint64_t> indices);
/// Replays the swaps of apply_swaps in reverse order.
BitVector undo_swaps(BitVector bits, std::span<const std::uint64_t> indices);

/// Caches the index stream of one key for one string length.
class KeyedPermutation {
 public:
  KeyedPermutation(const TransformationKey& key, std::size_t n_bits);

  BitVector apply(const BitVector& bits) const;
  BitVector invert(const BitVector& bits) const;
  std::size_t size() const { return indices_.size(); }

 private:
  std::vector<std::uint64_t> indices_;
};

RevocableTemplate permute(const FeatureBitString& fbs, const TransformationKey& key);

/// Exact inverse of permute under the same key. A different key yields a
/// valid but unrelated bit string; that is not detectable here.
FeatureBitString invert(const RevocableTemplate& tpl, const TransformationKey& key);

/// Two-line text form: hex token, then label.
TransformationKey parse_transformation_key(std::string_view text);
std::string serialize_transformation_key(const TransformationKey& key);

}  // namespace biokey
