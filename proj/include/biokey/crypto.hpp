#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>

#include "biokey/bytes.hpp"

namespace biokey {

using Digest = std::array<std::uint8_t, 32>;

Digest sha256(ByteView data);

/// Incremental SHA-256. Copyable so a common prefix can be hashed once.
class Sha256 {
 public:
  Sha256();
  Sha256(const Sha256& other);
  Sha256& operator=(const Sha256& other);
  Sha256(Sha256&&) noexcept = default;
  Sha256& operator=(Sha256&&) noexcept = default;
  ~Sha256();

  Sha256& update(ByteView data);
  Digest finish();

 private:
  struct Ctx;
  std::unique_ptr<Ctx> ctx_;
};

/// Overwrites the buffer in a way the optimizer may not elide.
void secure_wipe(std::span<std::uint8_t> data);

/// Source of key material. Production callers use SystemRandom; simulations
/// and reproducible CLI runs use DeterministicRandom.
class RandomSource {
 public:
  virtual ~RandomSource() = default;
  virtual void fill(std::span<std::uint8_t> out) = 0;

  std::uint64_t next_u64();
  Bytes bytes(std::size_t n);
};

class SystemRandom final : public RandomSource {
 public:
  void fill(std::span<std::uint8_t> out) override;
};

/// Hash-counter generator: block i = SHA-256(domain || seed || i).
class DeterministicRandom final : public RandomSource {
 public:
  explicit DeterministicRandom(std::uint64_t seed, std::string_view domain = "biokey.drbg");
  void fill(std::span<std::uint8_t> out) override;

 private:
  Bytes prefix_;
  std::uint64_t counter_ = 0;
  Digest block_{};
  std::size_t used_ = block_.size();
};

namespace aead {

inline constexpr std::size_t kKeySize = 32;
inline constexpr std::size_t kNonceSize = 12;
inline constexpr std::size_t kTagSize = 16;

using Key = std::array<std::uint8_t, kKeySize>;
using Nonce = std::array<std::uint8_t, kNonceSize>;

/// ChaCha20-Poly1305. Returns ciphertext || tag.
Bytes seal(const Key& key, const Nonce& nonce, ByteView aad, ByteView plaintext);

/// nullopt when the tag does not verify.
std::optional<Bytes> open(const Key& key, const Nonce& nonce, ByteView aad,
                          ByteView ciphertext_and_tag);

}  // namespace aead

}  // namespace biokey
