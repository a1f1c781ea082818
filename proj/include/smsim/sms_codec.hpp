#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "smsim/bytes.hpp"

// IS-637-A point-to-point transport layer with the bearer-data teleservice
// layer nested under parameter 0x08.
//
// Transport layer:  msg_type(1 byte = 0x00) { param_id(1) length(1) value }*
//   0x00 teleservice identifier (2 bytes big-endian, always 4098)
//   0x02 originating address (mobile-terminated only)
//   0x04 destination address
//   0x08 bearer data  { sub_id(1) length(1) value }*
//        0x00 message identifier: kind(4) id(16) reserved(4)
//        0x01 user data: encoding(5) num_fields(8) payload, zero padded
namespace smsim::sms {

class CodecError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::uint16_t kCdmaMessagingTeleservice = 4098;
inline constexpr std::size_t kMaxAddressDigits = 20;
inline constexpr std::size_t kMaxOctetPayload = 140;
inline constexpr std::size_t kMaxSevenBitChars = 160;

enum class DigitMode : std::uint8_t { Dtmf4Bit = 0, Ascii8Bit = 1 };
enum class NumberMode : std::uint8_t { AnsiT1607 = 0, DataNetwork = 1 };

struct SmsAddress {
  DigitMode digit_mode = DigitMode::Dtmf4Bit;
  NumberMode number_mode = NumberMode::AnsiT1607;
  std::string digits;

  static SmsAddress dtmf(std::string_view digits) { return {DigitMode::Dtmf4Bit, NumberMode::AnsiT1607, std::string(digits)}; }
  friend bool operator==(const SmsAddress&, const SmsAddress&) = default;
};

enum class Encoding : std::uint8_t { Octet = 0, SevenBitAscii = 2 };

struct UserData {
  Encoding encoding = Encoding::SevenBitAscii;
  /// Characters (SevenBitAscii) or raw bytes (Octet); num_fields is its size.
  Bytes payload;

  static UserData ascii(std::string_view text) { return {Encoding::SevenBitAscii, to_bytes(text)}; }
  static UserData octets(Bytes data) { return {Encoding::Octet, std::move(data)}; }

  std::size_t num_fields() const { return payload.size(); }
  std::string text() const { return to_text(payload); }
  friend bool operator==(const UserData&, const UserData&) = default;
};

enum class MessageKind : std::uint8_t { Deliver = 1, Submit = 2 };

struct BearerData {
  MessageKind kind = MessageKind::Submit;
  std::uint16_t message_id = 0;
  UserData user_data;
  friend bool operator==(const BearerData&, const BearerData&) = default;
};

struct SmsPdu {
  std::uint16_t teleservice_id = kCdmaMessagingTeleservice;
  SmsAddress dest;
  std::optional<SmsAddress> orig;  // absent for mobile-originated submissions
  BearerData bearer;
  friend bool operator==(const SmsPdu&, const SmsPdu&) = default;
};

Bytes encode_address(const SmsAddress& addr);
SmsAddress decode_address(ByteView bytes);

Bytes pack_user_data(const UserData& ud);
UserData unpack_user_data(ByteView bytes);

Bytes encode_pdu(const SmsPdu& pdu);
SmsPdu decode_pdu(ByteView bytes);

/// Mobile-originated submission: no originating address.
SmsPdu make_submit(std::string_view dest, UserData ud, std::uint16_t message_id = 0);
/// Mobile-terminated delivery with the originating address filled in.
SmsPdu make_deliver(std::string_view orig, std::string_view dest, UserData ud, std::uint16_t message_id = 0);

/// Bytes occupied by a packed SevenBitAscii user data of n characters.
constexpr std::size_t packed_ascii_size(std::size_t n) { return (5 + 8 + 7 * n + 7) / 8; }

}  // namespace smsim::sms
