#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "smsim/sip_codec.hpp"
#include "smsim/sms_codec.hpp"

namespace smsim::sip {
namespace {

DeviceProfile profile() {
  return {"3105554347", "2001:db8:1:100::1", "2001:db8:1:fe03:fa:104:0:5", from_hex("00112233"), 0};
}

SipEnvelope sample_message(DeviceProfile& p, std::string_view from = "3105554347") {
  return build_message_request(p, from, "32665", sms::encode_pdu(sms::make_submit("32665", sms::UserData::ascii("F"))));
}

TEST(SipCodec, BuildsValidMessage) {
  auto p = profile();
  const auto env = sample_message(p);
  std::string why;
  EXPECT_TRUE(validate_message_headers(env, &why)) << why;
  EXPECT_EQ(env.request().request_uri, "tel:32665;phone-context=vzims.com");
  EXPECT_EQ(*env.header("From"), "<tel:3105554347>");
  EXPECT_EQ(*env.header("P-Preferred-Identity"), "<tel:3105554347>");
  EXPECT_EQ(*env.header("Content-Type"), "application/vnd.3gpp2.sms");
  EXPECT_EQ(p.call_id_counter, 1u);
}

TEST(SipCodec, FromIsNotCheckedAgainstProfile) {
  auto p = profile();
  const auto env = sample_message(p, "3105550000");
  EXPECT_EQ(tel_number(*env.header("From")), "3105550000");
  EXPECT_TRUE(validate_message_headers(env));
}

TEST(SipCodec, SerializeParseRoundTrip) {
  auto p = profile();
  const auto env = sample_message(p);
  EXPECT_EQ(parse(serialize(env)), env);
}

TEST(SipCodec, HeaderOrderDoesNotMatter) {
  auto p = profile();
  const auto base = sample_message(p);
  std::mt19937_64 rng(99);
  for (int i = 0; i < 500; ++i) {
    SipEnvelope env = base;
    std::shuffle(env.headers.begin(), env.headers.end(), rng);
    const auto back = parse(serialize(env));
    ASSERT_EQ(back, env) << i;
    ASSERT_TRUE(validate_message_headers(back)) << i;
    ASSERT_EQ(back.header("Call-ID"), base.header("Call-ID"));
  }
}

TEST(SipCodec, ValidationCatchesTampering) {
  auto p = profile();
  auto dup = sample_message(p);
  dup.headers.push_back({"From", "<tel:1>"});
  EXPECT_FALSE(validate_message_headers(dup));
  auto filler = sample_message(p);
  filler.set_header("Max-Forwards", "69");
  EXPECT_FALSE(validate_message_headers(filler));
  auto extra = sample_message(p);
  extra.headers.push_back({"X-Extra", "1"});
  EXPECT_FALSE(validate_message_headers(extra));
}

TEST(SipCodec, ParseRejectsBadContentLength) {
  auto p = profile();
  auto env = sample_message(p);
  env.set_header("Content-Length", "3");
  EXPECT_THROW(parse(serialize(env)), SipError);
  EXPECT_THROW(parse(to_bytes("garbage")), SipError);
}

TEST(SipCodec, TelNumber) {
  EXPECT_EQ(tel_number("<tel:32665>"), "32665");
  EXPECT_EQ(tel_number("tel:32665;phone-context=vzims.com"), "32665");
  EXPECT_EQ(tel_number("<sip:user@host>"), std::nullopt);
  EXPECT_EQ(tel_number("<tel:>"), std::nullopt);
}

// Python: sha256(b"00ff:abc:REGISTER:sip:ims").hexdigest()
TEST(SipCodec, DigestVector) {
  const DigestChallenge ch{"ims", "abc", "SHA-256"};
  EXPECT_EQ(compute_digest_response(from_hex("00ff"), ch, "REGISTER", "sip:ims"),
            "8d5363a2146333efdfdb2fe89f79bcf422b483cf4449552ac9a872496483dc90");
}

TEST(SipCodec, ChallengeAndCredentialsRoundTrip) {
  const DigestChallenge ch{"ims.example", "0123abcd", "SHA-256"};
  EXPECT_EQ(parse_challenge(format_challenge(ch)), ch);
  const DigestCredentials cr{"3105554347", "ims.example", "0123abcd", "sip:ims.example", "ff00", "SHA-256"};
  EXPECT_EQ(parse_credentials(format_credentials(cr)), cr);
  EXPECT_THROW(parse_challenge("Basic realm=\"x\""), SipError);
}

TEST(SipCodec, ResponsesRequireChallenge) {
  EXPECT_THROW(build_response(401), SipError);
  EXPECT_THROW(build_response(440, DigestChallenge{"r", "n", "SHA-256"}), SipError);
  const auto r = build_response(440, DigestChallenge{"r", "n", "SHA-256"}, std::string("Approve?"));
  EXPECT_EQ(r.status().code, 440);
  EXPECT_TRUE(r.header("WWW-Authenticate"));
}

TEST(SipCodec, RespondToCopiesDialogHeaders) {
  auto p = profile();
  const auto req = sample_message(p);
  const auto resp = respond_to(req, 200);
  EXPECT_EQ(resp.header("Call-ID"), req.header("Call-ID"));
  EXPECT_EQ(resp.header("CSeq"), req.header("CSeq"));
}

TEST(SipCodec, IntegrityTagDetectsChanges) {
  auto p = profile();
  auto env = sample_message(p);
  const Bytes key = from_hex("a1a2a3a4");
  attach_integrity_tag(key, env);
  EXPECT_TRUE(verify_integrity_tag(key, env));
  EXPECT_FALSE(verify_integrity_tag(from_hex("a1a2a3a5"), env));
  auto forged = env;
  forged.set_header("From", "<tel:3105550000>");
  EXPECT_FALSE(verify_integrity_tag(key, forged));
  auto untagged = sample_message(p);
  EXPECT_FALSE(verify_integrity_tag(key, untagged));
}

}  // namespace
}  // namespace smsim::sip
