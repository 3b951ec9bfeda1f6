#include "biokey/crypto.hpp"

#include <openssl/crypto.h>
#include <openssl/evp.h>
#include <openssl/rand.h>

#include <cstring>

#include "biokey/error.hpp"

namespace biokey {

namespace {

const EVP_MD* sha256_md() {
  static EVP_MD* md = EVP_MD_fetch(nullptr, "SHA256", nullptr);
  if (md == nullptr) throw Error("SHA-256 unavailable");
  return md;
}

struct CipherCtxDeleter {
  void operator()(EVP_CIPHER_CTX* c) const { EVP_CIPHER_CTX_free(c); }
};
using CipherCtx = std::unique_ptr<EVP_CIPHER_CTX, CipherCtxDeleter>;

}  // namespace

struct Sha256::Ctx {
  EVP_MD_CTX* md = EVP_MD_CTX_new();
  ~Ctx() { EVP_MD_CTX_free(md); }
};

Sha256::Sha256() : ctx_(std::make_unique<Ctx>()) {
  if (ctx_->md == nullptr || EVP_DigestInit_ex2(ctx_->md, sha256_md(), nullptr) != 1)
    throw Error("SHA-256 init failed");
}

Sha256::Sha256(const Sha256& other) : ctx_(std::make_unique<Ctx>()) {
  if (EVP_MD_CTX_copy_ex(ctx_->md, other.ctx_->md) != 1) throw Error("SHA-256 copy failed");
}

Sha256& Sha256::operator=(const Sha256& other) {
  if (this != &other) {
    if (EVP_MD_CTX_copy_ex(ctx_->md, other.ctx_->md) != 1) throw Error("SHA-256 copy failed");
  }
  return *this;
}

Sha256::~Sha256() = default;

Sha256& Sha256::update(ByteView data) {
  if (EVP_DigestUpdate(ctx_->md, data.data(), data.size()) != 1) throw Error("SHA-256 update failed");
  return *this;
}

Digest Sha256::finish() {
  Digest out{};
  unsigned int len = 0;
  if (EVP_DigestFinal_ex(ctx_->md, out.data(), &len) != 1 || len != out.size())
    throw Error("SHA-256 final failed");
  return out;
}

Digest sha256(ByteView data) {
  thread_local EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  Digest out{};
  unsigned int len = 0;
  if (EVP_DigestInit_ex2(ctx, sha256_md(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx, data.data(), data.size()) != 1 ||
      EVP_DigestFinal_ex(ctx, out.data(), &len) != 1)
    throw Error("SHA-256 failed");
  return out;
}

void secure_wipe(std::span<std::uint8_t> data) { OPENSSL_cleanse(data.data(), data.size()); }

std::uint64_t RandomSource::next_u64() {
  std::array<std::uint8_t, 8> b{};
  fill(b);
  std::uint64_t v = 0;
  for (auto x : b) v = v << 8 | x;
  return v;
}

Bytes RandomSource::bytes(std::size_t n) {
  Bytes out(n);
  fill(out);
  return out;
}

void SystemRandom::fill(std::span<std::uint8_t> out) {
  if (out.empty()) return;
  if (RAND_bytes(out.data(), static_cast<int>(out.size())) != 1) throw Error("system RNG failure");
}

DeterministicRandom::DeterministicRandom(std::uint64_t seed, std::string_view domain) {
  auto d = as_bytes(domain);
  prefix_.assign(d.begin(), d.end());
  prefix_.push_back(0);
  put_u64(prefix_, seed);
}

void DeterministicRandom::fill(std::span<std::uint8_t> out) {
  for (auto& byte : out) {
    if (used_ == block_.size()) {
      Bytes input = prefix_;
      put_u64(input, counter_++);
      block_ = sha256(input);
      used_ = 0;
    }
    byte = block_[used_++];
  }
}

namespace aead {

Bytes seal(const Key& key, const Nonce& nonce, ByteView aad, ByteView plaintext) {
  CipherCtx ctx(EVP_CIPHER_CTX_new());
  if (!ctx || EVP_EncryptInit_ex(ctx.get(), EVP_chacha20_poly1305(), nullptr, key.data(), nonce.data()) != 1)
    throw Error("AEAD init failed");
  int len = 0;
  if (!aad.empty() &&
      EVP_EncryptUpdate(ctx.get(), nullptr, &len, aad.data(), static_cast<int>(aad.size())) != 1)
    throw Error("AEAD aad failed");
  Bytes out(plaintext.size() + kTagSize);
  int written = 0;
  if (!plaintext.empty()) {
    if (EVP_EncryptUpdate(ctx.get(), out.data(), &len, plaintext.data(),
                          static_cast<int>(plaintext.size())) != 1)
      throw Error("AEAD encrypt failed");
    written = len;
  }
  if (EVP_EncryptFinal_ex(ctx.get(), out.data() + written, &len) != 1) throw Error("AEAD final failed");
  written += len;
  if (EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_AEAD_GET_TAG, kTagSize, out.data() + written) != 1)
    throw Error("AEAD tag failed");
  out.resize(static_cast<std::size_t>(written) + kTagSize);
  return out;
}

std::optional<Bytes> open(const Key& key, const Nonce& nonce, ByteView aad, ByteView ciphertext_and_tag) {
  if (ciphertext_and_tag.size() < kTagSize) return std::nullopt;
  const auto ct_len = ciphertext_and_tag.size() - kTagSize;
  CipherCtx ctx(EVP_CIPHER_CTX_new());
  if (!ctx || EVP_DecryptInit_ex(ctx.get(), EVP_chacha20_poly1305(), nullptr, key.data(), nonce.data()) != 1)
    throw Error("AEAD init failed");
  int len = 0;
  if (!aad.empty() &&
      EVP_DecryptUpdate(ctx.get(), nullptr, &len, aad.data(), static_cast<int>(aad.size())) != 1)
    throw Error("AEAD aad failed");
  Bytes out(ct_len);
  int written = 0;
  if (ct_len > 0) {
    if (EVP_DecryptUpdate(ctx.get(), out.data(), &len, ciphertext_and_tag.data(), static_cast<int>(ct_len)) != 1)
      return std::nullopt;
    written = len;
  }
  Bytes tag(ciphertext_and_tag.begin() + static_cast<std::ptrdiff_t>(ct_len), ciphertext_and_tag.end());
  if (EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_AEAD_SET_TAG, kTagSize, tag.data()) != 1)
    throw Error("AEAD tag set failed");
  if (EVP_DecryptFinal_ex(ctx.get(), out.data() + written, &len) != 1) {
    secure_wipe(out);
    return std::nullopt;
  }
  return out;
}

}  // namespace aead

}  // namespace biokey
