#include <gtest/gtest.h>

#include <set>
#include <stdexcept>

#include "smsim/bytes.hpp"
#include "smsim/crypto.hpp"

namespace smsim {
namespace {

TEST(Bytes, HexRoundTrip) {
  const Bytes b = {0x00, 0x01, 0xab, 0xff};
  EXPECT_EQ(to_hex(b), "0001abff");
  EXPECT_EQ(from_hex("0001ABff"), b);
  EXPECT_THROW(from_hex("abc"), std::invalid_argument);
  EXPECT_THROW(from_hex("zz"), std::invalid_argument);
}

TEST(Bytes, ShortCodes) {
  EXPECT_TRUE(is_short_code("32665"));
  EXPECT_TRUE(is_short_code("827438"));
  EXPECT_FALSE(is_short_code("3266"));
  EXPECT_FALSE(is_short_code("3105554347"));
  EXPECT_FALSE(is_short_code("3266a"));
}

TEST(Bytes, MixSeedSeparatesStreams) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t s = 0; s < 64; ++s) seen.insert(mix_seed(42, s));
  EXPECT_EQ(seen.size(), 64u);
  EXPECT_EQ(mix_seed(42, 3), mix_seed(42, 3));
}

// Vectors computed with Python hashlib / hmac.
TEST(Crypto, HashVectors) {
  EXPECT_EQ(to_hex(crypto::hash("SHA-256", to_bytes("abc"))),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_EQ(to_hex(crypto::hash("MD5", to_bytes("abc"))), "900150983cd24fb0d6963f7d28e17f72");
  EXPECT_EQ(to_hex(crypto::keyed_hash("SHA-256", to_bytes("key"),
                                      to_bytes("The quick brown fox jumps over the lazy dog"))),
            "f7bc83f430538424b13298e6aa6fb143ef4d59a14946175997479dbc2d1a3cd8");
}

TEST(Crypto, UnknownLabelRejected) {
  EXPECT_FALSE(crypto::is_supported_hash("SHA-3"));
  EXPECT_THROW(crypto::hash("SHA-3", to_bytes("x")), crypto::CryptoError);
}

TEST(Crypto, EqualTags) {
  EXPECT_TRUE(crypto::equal_tags(from_hex("0102"), from_hex("0102")));
  EXPECT_FALSE(crypto::equal_tags(from_hex("0102"), from_hex("0103")));
  EXPECT_FALSE(crypto::equal_tags(from_hex("0102"), from_hex("010203")));
}

}  // namespace
}  // namespace smsim
