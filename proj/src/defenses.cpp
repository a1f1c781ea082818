#include "smsim/defenses.hpp"

#include "smsim/crypto.hpp"

namespace smsim::defenses {

void MacConfig::validate() const {
  if (tag_length < 16 || tag_length > 20) throw DefenseError("MAC tag length must be 16..20 bytes");
  if (overhead_fraction() > kMaxOverheadFraction) throw DefenseError("MAC overhead exceeds 14.3% of an SMS");
  if (!crypto::is_supported_hash(hash_label)) throw DefenseError("unsupported MAC hash: " + hash_label);
  if (crypto::keyed_hash(hash_label, {}, {}).size() < tag_length) {
    throw DefenseError("hash " + hash_label + " is shorter than the tag length");
  }
}

bool SecretCode::well_formed(std::string_view code) {
  if (code.size() != 6) return false;
  for (std::size_t i = 0; i < 3; ++i) {
    if (code[i] < 'A' || code[i] > 'Z') return false;
  }
  for (std::size_t i = 3; i < 6; ++i) {
    if (code[i] < '0' || code[i] > '9') return false;
  }
  return true;
}

SecretCode SecretStore::provision(const std::string& phone, const std::string& provider, Channel channel,
                                  std::mt19937_64& rng) {
  if (channel != Channel::SecureWeb) {
    throw DefenseError("secret codes must not be provisioned over text; use the secure web channel");
  }
  std::uniform_int_distribution<int> letter(0, 25), digit(0, 9);
  SecretCode secret;
  for (int i = 0; i < 3; ++i) secret.code.push_back(static_cast<char>('A' + letter(rng)));
  for (int i = 0; i < 3; ++i) secret.code.push_back(static_cast<char>('0' + digit(rng)));
  secrets_[{phone, provider}] = secret;
  return secret;
}

void SecretStore::install(const std::string& phone, const std::string& provider, SecretCode code) {
  if (!SecretCode::well_formed(code.code)) throw DefenseError("malformed secret code");
  secrets_[{phone, provider}] = std::move(code);
}

std::optional<SecretCode> SecretStore::lookup(const std::string& phone, const std::string& provider) const {
  auto it = secrets_.find({phone, provider});
  if (it == secrets_.end()) return std::nullopt;
  return it->second;
}

namespace {
void put_field(Bytes& out, ByteView field) {
  const auto n = static_cast<std::uint32_t>(field.size());
  for (int shift = 24; shift >= 0; shift -= 8) out.push_back(static_cast<std::uint8_t>(n >> shift));
  out.insert(out.end(), field.begin(), field.end());
}
}  // namespace

Bytes canonical_bytes(std::string_view orig_number, std::string_view dest, std::uint64_t sequence_number,
                      ByteView payload) {
  Bytes out;
  put_field(out, to_bytes(orig_number));
  put_field(out, to_bytes(dest));
  Bytes seq(8);
  for (int i = 0; i < 8; ++i) seq[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(sequence_number >> (56 - 8 * i));
  put_field(out, seq);
  put_field(out, payload);
  return out;
}

Bytes compute_tag(ByteView secret, ByteView canonical, const MacConfig& cfg) {
  Bytes full = crypto::keyed_hash(cfg.hash_label, secret, canonical);
  if (full.size() < cfg.tag_length) throw DefenseError("keyed hash shorter than tag length");
  full.resize(cfg.tag_length);
  return full;
}

sms::SmsPdu attach_tag(sms::SmsPdu pdu, ByteView tag) {
  auto& ud = pdu.bearer.user_data;
  if (ud.payload.size() + tag.size() > kSmsCapacity) {
    throw DefenseError("payload of " + std::to_string(ud.payload.size()) + " bytes leaves no room for a " +
                       std::to_string(tag.size()) + "-byte tag");
  }
  ud.encoding = sms::Encoding::Octet;
  ud.payload.insert(ud.payload.end(), tag.begin(), tag.end());
  return pdu;
}

sms::SmsPdu protect(sms::SmsPdu pdu, std::string_view orig_number, ByteView secret, const MacConfig& cfg,
                    std::uint64_t sequence_number) {
  const Bytes canonical =
      canonical_bytes(orig_number, pdu.dest.digits, sequence_number, pdu.bearer.user_data.payload);
  const Bytes tag = compute_tag(secret, canonical, cfg);
  return attach_tag(std::move(pdu), tag);
}

std::string_view to_string(AuthStatus s) {
  switch (s) {
    case AuthStatus::Verified: return "verified";
    case AuthStatus::Unauthenticated: return "unauthenticated";
    case AuthStatus::Invalid: return "invalid";
  }
  return "?";
}

VerifyResult verify_and_strip(const sms::SmsPdu& pdu, const std::optional<Bytes>& secret, const MacConfig& cfg,
                              SequenceState& seq_state) {
  const Bytes& payload = pdu.bearer.user_data.payload;
  if (!secret) return {payload, AuthStatus::Unauthenticated, std::nullopt};
  if (!pdu.orig || payload.size() < cfg.tag_length) return {payload, AuthStatus::Invalid, std::nullopt};

  const ByteView body(payload.data(), payload.size() - cfg.tag_length);
  const ByteView tag(payload.data() + body.size(), cfg.tag_length);
  for (std::uint64_t seq = seq_state.next_expected; seq < seq_state.next_expected + SequenceState::kWindow; ++seq) {
    const Bytes expected = compute_tag(*secret, canonical_bytes(pdu.orig->digits, pdu.dest.digits, seq, body), cfg);
    if (crypto::equal_tags(expected, tag)) {
      seq_state.next_expected = seq + 1;
      return {Bytes(body.begin(), body.end()), AuthStatus::Verified, seq};
    }
  }
  return {payload, AuthStatus::Invalid, std::nullopt};
}

}  // namespace smsim::defenses
