#include "biokey/rsa.hpp"

#include <openssl/bio.h>
#include <openssl/bn.h>
#include <openssl/core_names.h>
#include <openssl/evp.h>
#include <openssl/param_build.h>
#include <openssl/pem.h>
#include <openssl/rsa.h>
#include <openssl/x509.h>

#include "biokey/error.hpp"

namespace biokey {

namespace {

constexpr unsigned long kPublicExponent = 65537;

struct BnFree {
  void operator()(BIGNUM* b) const { BN_clear_free(b); }
};
struct BnCtxFree {
  void operator()(BN_CTX* c) const { BN_CTX_free(c); }
};
struct PkeyCtxFree {
  void operator()(EVP_PKEY_CTX* c) const { EVP_PKEY_CTX_free(c); }
};
struct BioFree {
  void operator()(BIO* b) const { BIO_free(b); }
};
struct ParamBldFree {
  void operator()(OSSL_PARAM_BLD* b) const { OSSL_PARAM_BLD_free(b); }
};
struct ParamFree {
  void operator()(OSSL_PARAM* p) const { OSSL_PARAM_free(p); }
};

using Bn = std::unique_ptr<BIGNUM, BnFree>;
using PkeyCtx = std::unique_ptr<EVP_PKEY_CTX, PkeyCtxFree>;

Bn new_bn() {
  Bn b(BN_new());
  if (!b) throw Error("BN_new failed");
  return b;
}

std::shared_ptr<EVP_PKEY> wrap(EVP_PKEY* k) {
  if (k == nullptr) throw Error("EVP_PKEY allocation failed");
  return {k, EVP_PKEY_free};
}

Bytes encode_public(EVP_PKEY* key) {
  int len = i2d_PUBKEY(key, nullptr);
  if (len <= 0) throw Error("public key encoding failed");
  Bytes der(static_cast<std::size_t>(len));
  unsigned char* p = der.data();
  if (i2d_PUBKEY(key, &p) != len) throw Error("public key encoding failed");
  return der;
}

Bn random_prime(RandomSource& rng, std::size_t bits, BN_CTX* ctx) {
  Bytes seed = rng.bytes(bits / 8);
  seed.front() |= 0xC0;  // top two bits set so p*q has exactly 2*bits bits
  seed.back() |= 0x01;
  Bn p(BN_bin2bn(seed.data(), static_cast<int>(seed.size()), nullptr));
  if (!p) throw Error("BN_bin2bn failed");
  secure_wipe(seed);
  for (;;) {
    if (BN_mod_word(p.get(), kPublicExponent) != 1 && BN_check_prime(p.get(), ctx, nullptr) == 1) return p;
    if (BN_add_word(p.get(), 2) != 1) throw Error("BN_add_word failed");
  }
}

void check(int rc, const char* what) {
  if (rc != 1) throw Error(what);
}

}  // namespace

RsaPublicKey::RsaPublicKey(std::shared_ptr<evp_pkey_st> key, Bytes der)
    : key_(std::move(key)), der_(std::move(der)) {}

RsaPublicKey RsaPublicKey::from_der(ByteView der) {
  const unsigned char* p = der.data();
  EVP_PKEY* raw = d2i_PUBKEY(nullptr, &p, static_cast<long>(der.size()));
  if (raw == nullptr) throw InvalidArgument("malformed RSA public key");
  auto key = wrap(raw);
  if (p != der.data() + der.size()) throw InvalidArgument("trailing bytes after RSA public key");
  if (EVP_PKEY_get_base_id(raw) != EVP_PKEY_RSA) throw InvalidArgument("public key is not RSA");
  if (static_cast<std::size_t>(EVP_PKEY_get_bits(raw)) != kRsaModulusBits)
    throw InvalidArgument("RSA public key must be 2048 bits");
  Bytes canonical = encode_public(raw);
  if (!std::equal(canonical.begin(), canonical.end(), der.begin(), der.end()))
    throw InvalidArgument("non-canonical RSA public key encoding");
  return RsaPublicKey(std::move(key), std::move(canonical));
}

bool RsaPublicKey::verify_digest(const Digest& digest, ByteView signature) const {
  PkeyCtx ctx(EVP_PKEY_CTX_new(key_.get(), nullptr));
  if (!ctx) throw Error("EVP_PKEY_CTX_new failed");
  check(EVP_PKEY_verify_init(ctx.get()), "verify init failed");
  check(EVP_PKEY_CTX_set_rsa_padding(ctx.get(), RSA_PKCS1_PADDING), "set padding failed");
  check(EVP_PKEY_CTX_set_signature_md(ctx.get(), EVP_sha256()), "set md failed");
  return EVP_PKEY_verify(ctx.get(), signature.data(), signature.size(), digest.data(), digest.size()) == 1;
}

Bytes RsaPublicKey::encrypt(ByteView plaintext) const {
  PkeyCtx ctx(EVP_PKEY_CTX_new(key_.get(), nullptr));
  if (!ctx) throw Error("EVP_PKEY_CTX_new failed");
  check(EVP_PKEY_encrypt_init(ctx.get()), "encrypt init failed");
  check(EVP_PKEY_CTX_set_rsa_padding(ctx.get(), RSA_PKCS1_OAEP_PADDING), "set padding failed");
  check(EVP_PKEY_CTX_set_rsa_oaep_md(ctx.get(), EVP_sha256()), "set oaep md failed");
  check(EVP_PKEY_CTX_set_rsa_mgf1_md(ctx.get(), EVP_sha256()), "set mgf1 md failed");
  std::size_t len = 0;
  check(EVP_PKEY_encrypt(ctx.get(), nullptr, &len, plaintext.data(), plaintext.size()), "encrypt failed");
  Bytes out(len);
  check(EVP_PKEY_encrypt(ctx.get(), out.data(), &len, plaintext.data(), plaintext.size()), "encrypt failed");
  out.resize(len);
  return out;
}

RsaKeyPair::RsaKeyPair(std::shared_ptr<evp_pkey_st> key)
    : key_(key), public_([&] {
        Bytes der = encode_public(key.get());
        const unsigned char* p = der.data();
        auto pub = wrap(d2i_PUBKEY(nullptr, &p, static_cast<long>(der.size())));
        return RsaPublicKey(std::move(pub), std::move(der));
      }()) {}

RsaKeyPair RsaKeyPair::generate(RandomSource& rng, std::size_t bits) {
  if (bits < 1024 || bits % 16 != 0) throw InvalidArgument("unsupported RSA modulus size");
  std::unique_ptr<BN_CTX, BnCtxFree> ctx(BN_CTX_new());
  if (!ctx) throw Error("BN_CTX_new failed");

  Bn p = random_prime(rng, bits / 2, ctx.get());
  Bn q = random_prime(rng, bits / 2, ctx.get());
  while (BN_cmp(p.get(), q.get()) == 0) q = random_prime(rng, bits / 2, ctx.get());

  Bn n = new_bn(), e = new_bn(), d = new_bn(), pm1 = new_bn(), qm1 = new_bn(), g = new_bn(),
     lambda = new_bn(), dmp1 = new_bn(), dmq1 = new_bn(), iqmp = new_bn(), phi = new_bn();
  check(BN_set_word(e.get(), kPublicExponent), "BN_set_word failed");
  check(BN_mul(n.get(), p.get(), q.get(), ctx.get()), "BN_mul failed");
  check(BN_sub(pm1.get(), p.get(), BN_value_one()), "BN_sub failed");
  check(BN_sub(qm1.get(), q.get(), BN_value_one()), "BN_sub failed");
  check(BN_gcd(g.get(), pm1.get(), qm1.get(), ctx.get()), "BN_gcd failed");
  check(BN_mul(phi.get(), pm1.get(), qm1.get(), ctx.get()), "BN_mul failed");
  check(BN_div(lambda.get(), nullptr, phi.get(), g.get(), ctx.get()), "BN_div failed");
  if (BN_mod_inverse(d.get(), e.get(), lambda.get(), ctx.get()) == nullptr) throw Error("no RSA private exponent");
  check(BN_mod(dmp1.get(), d.get(), pm1.get(), ctx.get()), "BN_mod failed");
  check(BN_mod(dmq1.get(), d.get(), qm1.get(), ctx.get()), "BN_mod failed");
  if (BN_mod_inverse(iqmp.get(), q.get(), p.get(), ctx.get()) == nullptr) throw Error("no CRT coefficient");

  std::unique_ptr<OSSL_PARAM_BLD, ParamBldFree> bld(OSSL_PARAM_BLD_new());
  if (!bld) throw Error("OSSL_PARAM_BLD_new failed");
  check(OSSL_PARAM_BLD_push_BN(bld.get(), OSSL_PKEY_PARAM_RSA_N, n.get()), "param n");
  check(OSSL_PARAM_BLD_push_BN(bld.get(), OSSL_PKEY_PARAM_RSA_E, e.get()), "param e");
  check(OSSL_PARAM_BLD_push_BN(bld.get(), OSSL_PKEY_PARAM_RSA_D, d.get()), "param d");
  check(OSSL_PARAM_BLD_push_BN(bld.get(), OSSL_PKEY_PARAM_RSA_FACTOR1, p.get()), "param p");
  check(OSSL_PARAM_BLD_push_BN(bld.get(), OSSL_PKEY_PARAM_RSA_FACTOR2, q.get()), "param q");
  check(OSSL_PARAM_BLD_push_BN(bld.get(), OSSL_PKEY_PARAM_RSA_EXPONENT1, dmp1.get()), "param dmp1");
  check(OSSL_PARAM_BLD_push_BN(bld.get(), OSSL_PKEY_PARAM_RSA_EXPONENT2, dmq1.get()), "param dmq1");
  check(OSSL_PARAM_BLD_push_BN(bld.get(), OSSL_PKEY_PARAM_RSA_COEFFICIENT1, iqmp.get()), "param iqmp");
  std::unique_ptr<OSSL_PARAM, ParamFree> params(OSSL_PARAM_BLD_to_param(bld.get()));
  if (!params) throw Error("OSSL_PARAM_BLD_to_param failed");

  PkeyCtx pctx(EVP_PKEY_CTX_new_from_name(nullptr, "RSA", nullptr));
  if (!pctx) throw Error("EVP_PKEY_CTX_new_from_name failed");
  check(EVP_PKEY_fromdata_init(pctx.get()), "fromdata init failed");
  EVP_PKEY* raw = nullptr;
  check(EVP_PKEY_fromdata(pctx.get(), &raw, EVP_PKEY_KEYPAIR, params.get()), "fromdata failed");
  return RsaKeyPair(wrap(raw));
}

RsaKeyPair RsaKeyPair::from_pem(std::string_view pem) {
  std::unique_ptr<BIO, BioFree> bio(BIO_new_mem_buf(pem.data(), static_cast<int>(pem.size())));
  if (!bio) throw Error("BIO_new_mem_buf failed");
  EVP_PKEY* raw = PEM_read_bio_PrivateKey(bio.get(), nullptr, nullptr, nullptr);
  if (raw == nullptr) throw InvalidArgument("malformed RSA private key PEM");
  auto key = wrap(raw);
  if (EVP_PKEY_get_base_id(raw) != EVP_PKEY_RSA) throw InvalidArgument("private key is not RSA");
  return RsaKeyPair(std::move(key));
}

std::string RsaKeyPair::to_pem() const {
  std::unique_ptr<BIO, BioFree> bio(BIO_new(BIO_s_mem()));
  if (!bio) throw Error("BIO_new failed");
  check(PEM_write_bio_PrivateKey(bio.get(), key_.get(), nullptr, nullptr, 0, nullptr, nullptr),
        "PEM write failed");
  char* data = nullptr;
  long len = BIO_get_mem_data(bio.get(), &data);
  return std::string(data, static_cast<std::size_t>(len));
}

Bytes RsaKeyPair::sign_digest(const Digest& digest) const {
  PkeyCtx ctx(EVP_PKEY_CTX_new(key_.get(), nullptr));
  if (!ctx) throw Error("EVP_PKEY_CTX_new failed");
  check(EVP_PKEY_sign_init(ctx.get()), "sign init failed");
  check(EVP_PKEY_CTX_set_rsa_padding(ctx.get(), RSA_PKCS1_PADDING), "set padding failed");
  check(EVP_PKEY_CTX_set_signature_md(ctx.get(), EVP_sha256()), "set md failed");
  std::size_t len = 0;
  check(EVP_PKEY_sign(ctx.get(), nullptr, &len, digest.data(), digest.size()), "sign failed");
  Bytes sig(len);
  check(EVP_PKEY_sign(ctx.get(), sig.data(), &len, digest.data(), digest.size()), "sign failed");
  sig.resize(len);
  return sig;
}

Bytes RsaKeyPair::decrypt(ByteView ciphertext) const {
  PkeyCtx ctx(EVP_PKEY_CTX_new(key_.get(), nullptr));
  if (!ctx) throw Error("EVP_PKEY_CTX_new failed");
  check(EVP_PKEY_decrypt_init(ctx.get()), "decrypt init failed");
  check(EVP_PKEY_CTX_set_rsa_padding(ctx.get(), RSA_PKCS1_OAEP_PADDING), "set padding failed");
  check(EVP_PKEY_CTX_set_rsa_oaep_md(ctx.get(), EVP_sha256()), "set oaep md failed");
  check(EVP_PKEY_CTX_set_rsa_mgf1_md(ctx.get(), EVP_sha256()), "set mgf1 md failed");
  std::size_t len = 0;
  check(EVP_PKEY_decrypt(ctx.get(), nullptr, &len, ciphertext.data(), ciphertext.size()), "decrypt failed");
  Bytes out(len);
  if (EVP_PKEY_decrypt(ctx.get(), out.data(), &len, ciphertext.data(), ciphertext.size()) != 1)
    throw InvalidArgument("RSA decryption failed");
  out.resize(len);
  return out;
}

}  // namespace biokey
