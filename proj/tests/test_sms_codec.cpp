#include <gtest/gtest.h>

#include <random>

#include "smsim/sms_codec.hpp"

namespace smsim::sms {
namespace {

// Golden bytes from an independent Python bit-packing oracle.
TEST(SmsCodec, AddressGolden) {
  EXPECT_EQ(to_hex(encode_address(SmsAddress::dtmf("32665"))), "014c9994");
  EXPECT_EQ(to_hex(encode_address(SmsAddress::dtmf("90999"))), "0166a664");
  EXPECT_EQ(to_hex(encode_address(SmsAddress::dtmf("1"))), "0044");
  EXPECT_EQ(decode_address(from_hex("0166a664")).digits, "90999");
}

TEST(SmsCodec, UserDataGolden) {
  EXPECT_EQ(to_hex(pack_user_data(UserData::ascii("yyyy8"))), "102f9f3e7cb8");
  const UserData ud = unpack_user_data(from_hex("102f9f3e7cb8"));
  EXPECT_EQ(ud.encoding, Encoding::SevenBitAscii);
  EXPECT_EQ(ud.num_fields(), 5u);
  EXPECT_EQ(ud.text(), "yyyy8");
}

TEST(SmsCodec, CaptureGolden) {
  SmsPdu pdu;
  pdu.dest = SmsAddress::dtmf("32665");
  pdu.bearer.kind = MessageKind::Deliver;
  pdu.bearer.user_data = UserData::ascii("yyyy8");
  const Bytes wire = encode_pdu(pdu);
  EXPECT_EQ(to_hex(wire), "00000210020404014c9994080d00031000000106102f9f3e7cb8");
  EXPECT_EQ(decode_pdu(wire), pdu);
}

TEST(SmsCodec, PackedSizeMatchesFormula) {
  for (std::size_t n = 0; n <= kMaxSevenBitChars; ++n) {
    const UserData ud = UserData::ascii(std::string(n, 'a'));
    EXPECT_EQ(pack_user_data(ud).size(), packed_ascii_size(n)) << n;
  }
}

TEST(SmsCodec, Limits) {
  EXPECT_THROW(pack_user_data(UserData::ascii(std::string(kMaxSevenBitChars + 1, 'a'))), CodecError);
  EXPECT_THROW(pack_user_data(UserData::octets(Bytes(kMaxOctetPayload + 1, 0))), CodecError);
  EXPECT_THROW(encode_address(SmsAddress::dtmf(std::string(kMaxAddressDigits + 1, '1'))), CodecError);
  EXPECT_THROW(encode_address(SmsAddress::dtmf("12a")), CodecError);
  EXPECT_THROW(pack_user_data(UserData::ascii("caf\xc3\xa9")), CodecError);
  EXPECT_THROW(pack_user_data(UserData::ascii("two\nlines")), CodecError);
}

TEST(SmsCodec, RejectsTruncatedInput) {
  const Bytes wire = encode_pdu(make_submit("32665", UserData::ascii("hello")));
  for (std::size_t cut = 0; cut < wire.size(); ++cut) {
    EXPECT_THROW(decode_pdu(ByteView(wire.data(), cut)), CodecError) << cut;
  }
}

TEST(SmsCodec, RandomPdusRoundTrip) {
  std::mt19937_64 rng(1234);
  auto digits = [&](std::size_t lo, std::size_t hi) {
    std::string s(std::uniform_int_distribution<std::size_t>(lo, hi)(rng), '0');
    for (auto& c : s) c = "0123456789*#"[std::uniform_int_distribution<int>(0, 11)(rng)];
    return s;
  };
  for (int i = 0; i < 1000; ++i) {
    SmsPdu pdu;
    pdu.dest = SmsAddress::dtmf(digits(1, kMaxAddressDigits));
    if (rng() % 2) pdu.orig = SmsAddress::dtmf(digits(1, kMaxAddressDigits));
    pdu.bearer.kind = pdu.orig ? MessageKind::Deliver : MessageKind::Submit;
    pdu.bearer.message_id = static_cast<std::uint16_t>(rng());
    if (rng() % 2) {
      std::string text(std::uniform_int_distribution<std::size_t>(0, kMaxSevenBitChars)(rng), ' ');
      for (auto& c : text) c = static_cast<char>(std::uniform_int_distribution<int>(0x20, 0x7e)(rng));
      pdu.bearer.user_data = UserData::ascii(text);
    } else {
      Bytes data(std::uniform_int_distribution<std::size_t>(0, kMaxOctetPayload)(rng));
      for (auto& b : data) b = static_cast<std::uint8_t>(rng());
      pdu.bearer.user_data = UserData::octets(data);
    }
    ASSERT_EQ(decode_pdu(encode_pdu(pdu)), pdu) << "iteration " << i;
  }
}

}  // namespace
}  // namespace smsim::sms
