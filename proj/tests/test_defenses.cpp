#include <gtest/gtest.h>

#include <random>

#include "smsim/defenses.hpp"

namespace smsim::defenses {
namespace {

const Bytes kSecret = to_bytes("WXM889");

sms::SmsPdu hello(const std::string& text = "hello") {
  return sms::make_deliver("3105554347", "32665", sms::UserData::ascii(text));
}

TEST(Mac, CanonicalBytesGolden) {
  EXPECT_EQ(to_hex(canonical_bytes("3105554347", "32665", 0, to_bytes("hello"))),
            "0000000a333130353535343334370000000533323636350000000800000000000000000000000568656c6c6f");
}

TEST(Mac, TagGoldens) {
  const Bytes canon = canonical_bytes("3105554347", "32665", 0, to_bytes("hello"));
  EXPECT_EQ(to_hex(compute_tag(kSecret, canon, {20, "SHA-256"})), "8f6df459be0943ab9006551bd8ea2be05ad1ec7c");
  EXPECT_EQ(to_hex(compute_tag(kSecret, canon, {16, "SHA-1"})), "0d34028ce6828b5fe7920cb35911e2a3");
}

TEST(Mac, ProtectThenVerify) {
  const MacConfig cfg;
  const auto tagged = protect(hello(), "3105554347", kSecret, cfg, 0);
  EXPECT_EQ(tagged.bearer.user_data.encoding, sms::Encoding::Octet);
  EXPECT_EQ(tagged.bearer.user_data.payload.size(), 5 + cfg.tag_length);
  SequenceState seq;
  const auto r = verify_and_strip(sms::decode_pdu(sms::encode_pdu(tagged)), kSecret, cfg, seq);
  EXPECT_EQ(r.status, AuthStatus::Verified);
  EXPECT_EQ(to_text(r.payload), "hello");
  EXPECT_EQ(seq.next_expected, 1u);
}

TEST(Mac, CapacityLimit) {
  const Bytes tag(20, 0xaa);
  EXPECT_NO_THROW(attach_tag(hello(std::string(120, 'a')), tag));
  EXPECT_THROW(attach_tag(hello(std::string(125, 'a')), tag), DefenseError);
}

TEST(Mac, EveryBitFlipIsCaught) {
  const MacConfig cfg;
  std::mt19937_64 rng(1);
  const auto tagged = protect(hello("Like Lakers Nation"), "3105554347", kSecret, cfg, 0);
  for (int i = 0; i < 256; ++i) {
    auto copy = tagged;
    auto& payload = copy.bearer.user_data.payload;
    const std::size_t bit = rng() % (payload.size() * 8);
    payload[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
    SequenceState seq;
    EXPECT_EQ(verify_and_strip(copy, kSecret, cfg, seq).status, AuthStatus::Invalid) << "bit " << bit;
    EXPECT_EQ(seq.next_expected, 0u);
  }
}

TEST(Mac, ChangedAddressesAreCaught) {
  const MacConfig cfg;
  auto tagged = protect(hello(), "3105554347", kSecret, cfg, 0);
  SequenceState seq;
  auto other_orig = tagged;
  other_orig.orig = sms::SmsAddress::dtmf("3105552501");
  EXPECT_EQ(verify_and_strip(other_orig, kSecret, cfg, seq).status, AuthStatus::Invalid);
  auto other_dest = tagged;
  other_dest.dest = sms::SmsAddress::dtmf("90999");
  EXPECT_EQ(verify_and_strip(other_dest, kSecret, cfg, seq).status, AuthStatus::Invalid);
  EXPECT_EQ(verify_and_strip(tagged, to_bytes("ABC123"), cfg, seq).status, AuthStatus::Invalid);
}

TEST(Mac, SequenceWindowAndReplay) {
  const MacConfig cfg;
  SequenceState seq;
  const auto at4 = protect(hello(), "3105554347", kSecret, cfg, 4);
  const auto at5 = protect(hello(), "3105554347", kSecret, cfg, 5);
  EXPECT_EQ(verify_and_strip(at5, kSecret, cfg, seq).status, AuthStatus::Invalid);
  const auto r = verify_and_strip(at4, kSecret, cfg, seq);
  EXPECT_EQ(r.status, AuthStatus::Verified);
  EXPECT_EQ(r.sequence, 4u);
  EXPECT_EQ(verify_and_strip(at4, kSecret, cfg, seq).status, AuthStatus::Invalid);
  EXPECT_EQ(verify_and_strip(at5, kSecret, cfg, seq).status, AuthStatus::Verified);
}

TEST(Mac, NoSecretMeansUnauthenticated) {
  SequenceState seq;
  const auto r = verify_and_strip(hello(), std::nullopt, MacConfig{}, seq);
  EXPECT_EQ(r.status, AuthStatus::Unauthenticated);
  EXPECT_EQ(to_text(r.payload), "hello");
}

TEST(Mac, ConfigValidation) {
  EXPECT_NO_THROW((MacConfig{20, "SHA-256"}.validate()));
  EXPECT_NO_THROW((MacConfig{16, "SHA-1"}.validate()));
  EXPECT_NO_THROW((MacConfig{16, "MD5"}.validate()));
  EXPECT_THROW((MacConfig{15, "SHA-256"}.validate()), DefenseError);
  EXPECT_THROW((MacConfig{21, "SHA-256"}.validate()), DefenseError);
  EXPECT_THROW((MacConfig{20, "MD5"}.validate()), DefenseError);
  EXPECT_THROW((MacConfig{20, "CRC32"}.validate()), DefenseError);
  for (std::size_t n = 16; n <= 20; ++n) EXPECT_LE((MacConfig{n, "SHA-256"}.overhead_fraction()), kMaxOverheadFraction);
}

TEST(Secrets, OnlyOverSecureWeb) {
  SecretStore store;
  std::mt19937_64 rng(4);
  EXPECT_THROW(store.provision("3105554347", "Facebook", Channel::Text, rng), DefenseError);
  EXPECT_EQ(store.size(), 0u);
  const auto a = store.provision("3105554347", "Facebook", Channel::SecureWeb, rng);
  EXPECT_TRUE(SecretCode::well_formed(a.code));
  const auto b = store.provision("3105554347", "Facebook", Channel::SecureWeb, rng);
  EXPECT_EQ(store.size(), 1u);
  EXPECT_EQ(store.lookup("3105554347", "Facebook")->code, b.code);
  EXPECT_FALSE(store.lookup("3105554347", "Red Cross").has_value());
  EXPECT_THROW(store.install("x", "y", {"wxm889"}), DefenseError);
}

TEST(Secrets, CodeShape) {
  EXPECT_TRUE(SecretCode::well_formed("WXM889"));
  for (const char* bad : {"WX889", "WXM88", "wxm889", "WXM8891", "1XM889", "WXMA89"}) {
    EXPECT_FALSE(SecretCode::well_formed(bad)) << bad;
  }
}

}  // namespace
}  // namespace smsim::defenses
