#include "smsim/sms_codec.hpp"

#include <array>
#include <set>

namespace smsim::sms {

namespace {

class BitWriter {
 public:
  void put(std::uint32_t value, unsigned nbits) {
    for (unsigned i = nbits; i-- > 0;) {
      if (bit_ % 8 == 0) out_.push_back(0);
      if ((value >> i) & 1U) out_.back() |= static_cast<std::uint8_t>(0x80U >> (bit_ % 8));
      ++bit_;
    }
  }
  // Trailing bits of the last byte are already zero.
  Bytes finish() && { return std::move(out_); }

 private:
  Bytes out_;
  std::size_t bit_ = 0;
};

class BitReader {
 public:
  explicit BitReader(ByteView data) : data_(data) {}

  std::uint32_t get(unsigned nbits, const char* what) {
    if (remaining() < nbits) throw CodecError(std::string("truncated ") + what);
    std::uint32_t v = 0;
    for (unsigned i = 0; i < nbits; ++i, ++bit_) {
      v = (v << 1) | ((data_[bit_ / 8] >> (7 - bit_ % 8)) & 1U);
    }
    return v;
  }
  std::size_t remaining() const { return data_.size() * 8 - bit_; }

  // Everything left must be padding inside the final byte, and zero.
  void expect_zero_padding(const char* what) {
    if (remaining() >= 8) throw CodecError(std::string("trailing bytes after ") + what);
    while (remaining() > 0) {
      if (get(1, what) != 0) throw CodecError(std::string("nonzero pad bits in ") + what);
    }
  }

 private:
  ByteView data_;
  std::size_t bit_ = 0;
};

std::uint8_t dtmf_code(char c) {
  if (c >= '1' && c <= '9') return static_cast<std::uint8_t>(c - '0');
  switch (c) {
    case '0': return 10;
    case '*': return 11;
    case '#': return 12;
    default: throw CodecError(std::string("invalid DTMF digit '") + c + "'");
  }
}

char dtmf_char(std::uint32_t code) {
  static constexpr std::array<char, 13> kTable = {'?', '1', '2', '3', '4', '5', '6', '7', '8', '9', '0', '*', '#'};
  if (code == 0 || code > 12) throw CodecError("invalid DTMF digit code " + std::to_string(code));
  return kTable[code];
}

void check_address(const SmsAddress& addr) {
  if (addr.digits.empty()) throw CodecError("missing destination address digits");
  if (addr.digits.size() > kMaxAddressDigits) throw CodecError("address longer than 20 digits");
  if (addr.digit_mode == DigitMode::Dtmf4Bit) {
    for (char c : addr.digits) dtmf_code(c);
  }
}

bool printable(std::uint8_t c) { return c >= 0x20 && c <= 0x7e; }

void check_user_data(const UserData& ud) {
  switch (ud.encoding) {
    case Encoding::SevenBitAscii:
      if (ud.payload.size() > kMaxSevenBitChars) throw CodecError("7-bit user data exceeds 160 characters");
      for (std::uint8_t c : ud.payload) {
        if (!printable(c)) throw CodecError("non-printable character 0x" + to_hex(ByteView(&c, 1)) + " in 7-bit user data");
      }
      break;
    case Encoding::Octet:
      if (ud.payload.size() > kMaxOctetPayload) throw CodecError("octet user data exceeds 140 bytes");
      break;
    default:
      throw CodecError("unsupported user data encoding");
  }
}

void put_record(Bytes& out, std::uint8_t id, const Bytes& value) {
  if (value.size() > 0xff) throw CodecError("parameter value longer than 255 bytes");
  out.push_back(id);
  out.push_back(static_cast<std::uint8_t>(value.size()));
  out.insert(out.end(), value.begin(), value.end());
}

struct Record {
  std::uint8_t id;
  ByteView value;
};

// Splits {id, len, value}* and rejects duplicates and overruns.
std::vector<Record> split_records(ByteView data, const char* layer) {
  std::vector<Record> records;
  std::set<std::uint8_t> seen;
  std::size_t pos = 0;
  while (pos < data.size()) {
    if (data.size() - pos < 2) throw CodecError(std::string("truncated record header in ") + layer);
    const std::uint8_t id = data[pos];
    const std::size_t len = data[pos + 1];
    pos += 2;
    if (data.size() - pos < len) throw CodecError(std::string("bad record length in ") + layer);
    if (!seen.insert(id).second) throw CodecError(std::string("duplicate record in ") + layer);
    records.push_back({id, data.subspan(pos, len)});
    pos += len;
  }
  return records;
}

constexpr std::uint8_t kP2PMessage = 0x00;
constexpr std::uint8_t kParamTeleservice = 0x00;
constexpr std::uint8_t kParamOrigAddress = 0x02;
constexpr std::uint8_t kParamDestAddress = 0x04;
constexpr std::uint8_t kParamBearerData = 0x08;
constexpr std::uint8_t kSubMessageId = 0x00;
constexpr std::uint8_t kSubUserData = 0x01;

}  // namespace

Bytes encode_address(const SmsAddress& addr) {
  check_address(addr);
  BitWriter w;
  w.put(static_cast<std::uint32_t>(addr.digit_mode), 1);
  w.put(static_cast<std::uint32_t>(addr.number_mode), 1);
  w.put(static_cast<std::uint32_t>(addr.digits.size()), 8);
  for (char c : addr.digits) {
    if (addr.digit_mode == DigitMode::Dtmf4Bit) {
      w.put(dtmf_code(c), 4);
    } else {
      w.put(static_cast<std::uint8_t>(c), 8);
    }
  }
  return std::move(w).finish();
}

SmsAddress decode_address(ByteView bytes) {
  BitReader r(bytes);
  SmsAddress addr;
  addr.digit_mode = static_cast<DigitMode>(r.get(1, "address"));
  addr.number_mode = static_cast<NumberMode>(r.get(1, "address"));
  const std::uint32_t n = r.get(8, "address");
  if (n == 0 || n > kMaxAddressDigits) throw CodecError("address field count out of range: " + std::to_string(n));
  for (std::uint32_t i = 0; i < n; ++i) {
    if (addr.digit_mode == DigitMode::Dtmf4Bit) {
      addr.digits.push_back(dtmf_char(r.get(4, "address digits")));
    } else {
      addr.digits.push_back(static_cast<char>(r.get(8, "address digits")));
    }
  }
  r.expect_zero_padding("address");
  return addr;
}

Bytes pack_user_data(const UserData& ud) {
  check_user_data(ud);
  BitWriter w;
  w.put(static_cast<std::uint32_t>(ud.encoding), 5);
  w.put(static_cast<std::uint32_t>(ud.payload.size()), 8);
  const unsigned width = ud.encoding == Encoding::SevenBitAscii ? 7 : 8;
  for (std::uint8_t c : ud.payload) w.put(c, width);
  return std::move(w).finish();
}

UserData unpack_user_data(ByteView bytes) {
  BitReader r(bytes);
  UserData ud;
  const std::uint32_t enc = r.get(5, "user data");
  if (enc == static_cast<std::uint32_t>(Encoding::SevenBitAscii)) {
    ud.encoding = Encoding::SevenBitAscii;
  } else if (enc == static_cast<std::uint32_t>(Encoding::Octet)) {
    ud.encoding = Encoding::Octet;
  } else {
    throw CodecError("unsupported user data encoding " + std::to_string(enc));
  }
  const std::uint32_t n = r.get(8, "user data");
  const unsigned width = ud.encoding == Encoding::SevenBitAscii ? 7 : 8;
  if (r.remaining() < static_cast<std::size_t>(n) * width) {
    throw CodecError("truncated user data: " + std::to_string(n) + " fields declared");
  }
  for (std::uint32_t i = 0; i < n; ++i) ud.payload.push_back(static_cast<std::uint8_t>(r.get(width, "user data")));
  r.expect_zero_padding("user data");
  check_user_data(ud);
  return ud;
}

Bytes encode_pdu(const SmsPdu& pdu) {
  if (pdu.teleservice_id != kCdmaMessagingTeleservice) {
    throw CodecError("unsupported teleservice " + std::to_string(pdu.teleservice_id));
  }
  if (pdu.dest.digits.empty()) throw CodecError("missing destination address");
  if (static_cast<unsigned>(pdu.bearer.kind) == 0 || static_cast<unsigned>(pdu.bearer.kind) > 15) {
    throw CodecError("invalid message kind");
  }
  Bytes out{kP2PMessage};
  put_record(out, kParamTeleservice,
             Bytes{static_cast<std::uint8_t>(pdu.teleservice_id >> 8), static_cast<std::uint8_t>(pdu.teleservice_id & 0xff)});
  if (pdu.orig) put_record(out, kParamOrigAddress, encode_address(*pdu.orig));
  put_record(out, kParamDestAddress, encode_address(pdu.dest));

  BitWriter id;
  id.put(static_cast<std::uint32_t>(pdu.bearer.kind), 4);
  id.put(pdu.bearer.message_id, 16);
  id.put(0, 4);
  Bytes bearer;
  put_record(bearer, kSubMessageId, std::move(id).finish());
  put_record(bearer, kSubUserData, pack_user_data(pdu.bearer.user_data));
  put_record(out, kParamBearerData, bearer);
  return out;
}

SmsPdu decode_pdu(ByteView bytes) {
  if (bytes.empty()) throw CodecError("empty PDU");
  if (bytes[0] != kP2PMessage) throw CodecError("unsupported transport message type");
  SmsPdu pdu;
  bool have_teleservice = false, have_dest = false, have_bearer = false;
  for (const Record& rec : split_records(bytes.subspan(1), "transport layer")) {
    switch (rec.id) {
      case kParamTeleservice:
        if (rec.value.size() != 2) throw CodecError("bad teleservice length");
        pdu.teleservice_id = static_cast<std::uint16_t>((rec.value[0] << 8) | rec.value[1]);
        if (pdu.teleservice_id != kCdmaMessagingTeleservice) {
          throw CodecError("unsupported teleservice " + std::to_string(pdu.teleservice_id));
        }
        have_teleservice = true;
        break;
      case kParamOrigAddress:
        pdu.orig = decode_address(rec.value);
        break;
      case kParamDestAddress:
        pdu.dest = decode_address(rec.value);
        have_dest = true;
        break;
      case kParamBearerData: {
        bool have_id = false, have_ud = false;
        for (const Record& sub : split_records(rec.value, "bearer data")) {
          if (sub.id == kSubMessageId) {
            if (sub.value.size() != 3) throw CodecError("bad message identifier length");
            BitReader r(sub.value);
            const std::uint32_t kind = r.get(4, "message identifier");
            if (kind != static_cast<std::uint32_t>(MessageKind::Deliver) &&
                kind != static_cast<std::uint32_t>(MessageKind::Submit)) {
              throw CodecError("unsupported message kind " + std::to_string(kind));
            }
            pdu.bearer.kind = static_cast<MessageKind>(kind);
            pdu.bearer.message_id = static_cast<std::uint16_t>(r.get(16, "message identifier"));
            if (r.get(4, "message identifier") != 0) throw CodecError("nonzero reserved bits in message identifier");
            have_id = true;
          } else if (sub.id == kSubUserData) {
            pdu.bearer.user_data = unpack_user_data(sub.value);
            have_ud = true;
          } else {
            throw CodecError("unknown bearer data subparameter " + std::to_string(sub.id));
          }
        }
        if (!have_id || !have_ud) throw CodecError("incomplete bearer data");
        have_bearer = true;
        break;
      }
      default:
        throw CodecError("unknown mandatory parameter " + std::to_string(rec.id));
    }
  }
  if (!have_teleservice) throw CodecError("missing teleservice identifier");
  if (!have_dest) throw CodecError("missing destination address");
  if (!have_bearer) throw CodecError("missing bearer data");
  return pdu;
}

SmsPdu make_submit(std::string_view dest, UserData ud, std::uint16_t message_id) {
  SmsPdu pdu;
  pdu.dest = SmsAddress::dtmf(dest);
  pdu.bearer = {MessageKind::Submit, message_id, std::move(ud)};
  return pdu;
}

SmsPdu make_deliver(std::string_view orig, std::string_view dest, UserData ud, std::uint16_t message_id) {
  SmsPdu pdu;
  pdu.dest = SmsAddress::dtmf(dest);
  pdu.orig = SmsAddress::dtmf(orig);
  pdu.bearer = {MessageKind::Deliver, message_id, std::move(ud)};
  return pdu;
}

}  // namespace smsim::sms
