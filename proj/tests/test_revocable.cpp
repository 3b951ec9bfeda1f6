#include <doctest.h>

#include <string>
#include <vector>

#include "biokey/crypto.hpp"
#include "biokey/error.hpp"
#include "biokey/features.hpp"
#include "biokey/key_agreement.hpp"
#include "biokey/revocable.hpp"
#include "oracles.hpp"

using namespace biokey;

namespace {

TransformationKey counting_token() {
  TransformationKey k;
  for (int i = 0; i < 16; ++i) k.token.push_back(static_cast<std::uint8_t>(i));
  k.label = "t";
  return k;
}

std::uint64_t oracle_index(const TransformationKey& k, std::uint64_t i, std::uint64_t n) {
  Bytes counter;
  put_u64(counter, i);
  Sha256 h;
  h.update(k.token).update(counter);
  return oracle::digest_mod(h.finish(), n) + 1;
}

BitVector random_bits(RandomSource& rng, std::size_t n, unsigned one_in = 2) {
  BitVector v(n);
  for (std::size_t i = 0; i < n; ++i)
    if (rng.next_u64() % one_in == 0) v.set(i);
  return v;
}

}  // namespace

TEST_CASE("index stream") {
  const TransformationKey k = counting_token();
  for (auto j : index_stream(k, 1, 50)) CHECK(j == 1);

  // Reference values from an independent SHA-256 + big-integer reduction.
  CHECK(index_stream(k, 32768, 3) == std::vector<std::uint64_t>{12859, 1003, 8283});
  CHECK(index_stream(k, 4096, 3) == std::vector<std::uint64_t>{571, 1003, 91});
  CHECK(index_stream(k, 1000, 3) == std::vector<std::uint64_t>{59, 723, 715});

  for (std::uint64_t n : {2ULL, 15ULL, 1000ULL, 32768ULL, 0xFFFFFFFFFFFFFFC5ULL}) {
    auto s = index_stream(k, n, 64);
    REQUIRE(s.size() == 64);
    for (std::size_t i = 0; i < s.size(); ++i) CHECK(s[i] == oracle_index(k, i + 1, n));
  }
  CHECK(index_stream(k, 32768, 100) == index_stream(k, 32768, 100));
  CHECK_THROWS_AS(index_stream(k, 0, 1), InvalidArgument);
}

TEST_CASE("paper walkthrough: 5 <-> 1, then 11 <-> 2") {
  const std::string bits = "110010001100101";
  std::vector<std::uint64_t> idx{5, 11};
  for (std::uint64_t i = 3; i <= 15; ++i) idx.push_back(i);  // remaining swaps are no-ops
  BitVector out = apply_swaps(BitVector::from_string(bits), idx);

  std::string want = bits;
  std::swap(want[4], want[0]);
  std::swap(want[10], want[1]);
  CHECK(out.to_string() == want);
  CHECK(out.to_string() == oracle::swap_loop(bits, idx));
  CHECK(undo_swaps(out, idx).to_string() == bits);
}

TEST_CASE("apply_swaps matches the reference swap loop") {
  DeterministicRandom rng(1);
  for (std::size_t n : {1u, 2u, 15u, 64u, 257u, 1024u}) {
    BitVector v = random_bits(rng, n);
    std::vector<std::uint64_t> idx;
    for (std::size_t i = 0; i < n; ++i) idx.push_back(1 + rng.next_u64() % n);
    CHECK(apply_swaps(v, idx).to_string() == oracle::swap_loop(v.to_string(), idx));
    CHECK(undo_swaps(apply_swaps(v, idx), idx) == v);
  }
  std::vector<std::uint64_t> bad{1, 0};
  CHECK_THROWS_AS(apply_swaps(BitVector(2), bad), InvalidArgument);
  std::vector<std::uint64_t> big{1, 3};
  CHECK_THROWS_AS(apply_swaps(BitVector(2), big), InvalidArgument);
  std::vector<std::uint64_t> short_idx{1};
  CHECK_THROWS_AS(apply_swaps(BitVector(2), short_idx), InvalidArgument);
}

TEST_CASE("permute examples") {
  DeterministicRandom rng(2);
  const TransformationKey k = TransformationKey::generate(rng, "user");
  CHECK(k.token.size() == kDefaultTokenBytes);

  FeatureBitString zeros{BitVector(32768), 15};
  CHECK(permute(zeros, k).bits.popcount() == 0);
  CHECK(permute(zeros, k).key_label == "user");

  FeatureBitString ones{BitVector(32768), 15};
  for (std::size_t i = 0; i < 32768; ++i) ones.bits.set(i);
  CHECK(invert(permute(ones, k), k).bits == ones.bits);

  FeatureBitString single{BitVector(4096), 12};
  single.bits.set(867);
  RevocableTemplate t = permute(single, k);
  CHECK(t.bits.popcount() == 1);
  std::string ref(4096, '0');
  ref[867] = '1';
  CHECK(t.bits.to_string() == oracle::swap_loop(ref, index_stream(k, 4096, 4096)));
}

TEST_CASE("permute is a popcount-preserving bijection") {
  DeterministicRandom rng(3);
  const TransformationKey k = TransformationKey::generate(rng, "k");
  FeatureBitString x{random_bits(rng, 32768, 20), 15};
  RevocableTemplate t = permute(x, k);
  CHECK(t.bits.size() == x.bits.size());
  CHECK(t.bits.popcount() == x.bits.popcount());
  FeatureBitString back = invert(t, k);
  CHECK(back.bits == x.bits);
  CHECK(back.n_p == 15);

  int differ = 0;
  for (int i = 0; i < 100; ++i) {
    const TransformationKey other = TransformationKey::generate(rng, "other");
    differ += invert(t, other).bits != x.bits;
  }
  CHECK(differ == 100);

  KeyedPermutation perm(k, 1024);
  CHECK(perm.size() == 1024);
  BitVector a = random_bits(rng, 1024);
  BitVector b = a;
  b.flip(17);
  CHECK(perm.apply(a) != perm.apply(b));
  CHECK(perm.apply(a).hamming(perm.apply(b)) == 1);
  CHECK(perm.apply(a) == apply_swaps(a, index_stream(k, 1024, 1024)));

  RevocableTemplate odd{BitVector(15), "k"};
  CHECK_THROWS_AS(invert(odd, k), InvalidArgument);
}

TEST_CASE("revocability: independent keys decorrelate templates and private keys") {
  DeterministicRandom rng(4);
  const std::size_t n = 1024;
  BitVector base = random_bits(rng, n);

  double template_total = 0;
  double key_total = 0;
  const int pairs = 1000;
  for (int i = 0; i < pairs; ++i) {
    const TransformationKey k1 = TransformationKey::generate(rng, "a");
    const TransformationKey k2 = TransformationKey::generate(rng, "b");
    RevocableTemplate t1{KeyedPermutation(k1, n).apply(base), "a"};
    RevocableTemplate t2{KeyedPermutation(k2, n).apply(base), "b"};
    template_total += double(t1.bits.hamming(t2.bits)) / double(n);
    key_total += double(oracle::hamming_bytes(derive_private_key(t1).bytes(), derive_private_key(t2).bytes())) / 256.0;
  }
  const double popcount_fraction = double(base.popcount()) / double(n);
  const double expected = 2 * popcount_fraction * (1 - popcount_fraction);
  CHECK(template_total / pairs == doctest::Approx(expected).epsilon(0.05));
  CHECK(key_total / pairs >= 0.48);
  CHECK(key_total / pairs <= 0.52);
}

TEST_CASE("transformation key file format") {
  DeterministicRandom rng(5);
  const TransformationKey k = TransformationKey::generate(rng, "alice session 1");
  const std::string text = serialize_transformation_key(k);
  CHECK(text == to_hex(k.token) + "\nalice session 1\n");
  CHECK(parse_transformation_key(text) == k);
  CHECK(parse_transformation_key(to_hex(k.token) + "\nalice session 1") == k);
  CHECK_THROWS_AS(parse_transformation_key("0011"), InvalidArgument);
  CHECK_THROWS_AS(parse_transformation_key("zz\nlabel\n"), InvalidArgument);
  CHECK_THROWS_AS(parse_transformation_key("\nlabel\n"), InvalidArgument);
  CHECK_THROWS_AS(parse_transformation_key("00\nlabel\nextra\n"), InvalidArgument);
  CHECK_THROWS_AS(TransformationKey::generate(rng, "x", 0), InvalidArgument);
}
