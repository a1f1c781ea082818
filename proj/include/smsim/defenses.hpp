#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

#include "smsim/bytes.hpp"
#include "smsim/sms_codec.hpp"

// Per-message MAC runtime authentication between a phone and a service
// provider, keyed by a secret code provisioned over a secure web channel.
namespace smsim::defenses {

class DefenseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Capacity of one SMS user data field in bytes.
inline constexpr std::size_t kSmsCapacity = 140;
inline constexpr double kMaxOverheadFraction = 0.143;

struct MacConfig {
  std::size_t tag_length = 20;
  std::string hash_label = "SHA-256";

  /// 16 <= tag_length <= 20, overhead within budget, hash label known.
  void validate() const;
  double overhead_fraction() const { return static_cast<double>(tag_length) / kSmsCapacity; }
};

/// Three uppercase letters followed by three digits, e.g. "WXM889".
struct SecretCode {
  std::string code;
  Bytes bytes() const { return to_bytes(code); }
  static bool well_formed(std::string_view code);
};

enum class Channel { SecureWeb, Text };

/// Secrets shared between (phone, provider) pairs.
class SecretStore {
 public:
  /// Only SecureWeb is allowed; a Text channel throws DefenseError. A second
  /// provision for the same pair replaces the first.
  SecretCode provision(const std::string& phone, const std::string& provider, Channel channel, std::mt19937_64& rng);
  void install(const std::string& phone, const std::string& provider, SecretCode code);
  std::optional<SecretCode> lookup(const std::string& phone, const std::string& provider) const;
  std::size_t size() const { return secrets_.size(); }

 private:
  std::map<std::pair<std::string, std::string>, SecretCode> secrets_;
};

/// Length-prefixed concatenation: u32be(len) || field, for orig, dest,
/// the big-endian 8-byte sequence number and the payload.
Bytes canonical_bytes(std::string_view orig_number, std::string_view dest, std::uint64_t sequence_number,
                      ByteView payload);

/// First tag_length bytes of the keyed hash of `canonical` under `secret`.
Bytes compute_tag(ByteView secret, ByteView canonical, const MacConfig& cfg);

/// Appends the tag to the user data and switches the encoding to Octet.
/// Throws DefenseError when payload + tag exceeds 140 bytes.
sms::SmsPdu attach_tag(sms::SmsPdu pdu, ByteView tag);

/// Computes the tag for (orig_number, pdu.dest, sequence, payload) and attaches it.
sms::SmsPdu protect(sms::SmsPdu pdu, std::string_view orig_number, ByteView secret, const MacConfig& cfg,
                    std::uint64_t sequence_number);

enum class AuthStatus { Verified, Unauthenticated, Invalid };
std::string_view to_string(AuthStatus s);

/// Receiver-side expectation of the sender's next sequence number.
struct SequenceState {
  static constexpr std::uint64_t kWindow = 5;
  std::uint64_t next_expected = 0;
};

struct VerifyResult {
  Bytes payload;
  AuthStatus status = AuthStatus::Unauthenticated;
  std::optional<std::uint64_t> sequence;
};

/// Unauthenticated when no secret exists for the pair (payload returned as
/// is). Otherwise tries sequence numbers in [next_expected, next_expected+5):
/// Verified strips the tag and advances the state; Invalid leaves it alone.
VerifyResult verify_and_strip(const sms::SmsPdu& pdu, const std::optional<Bytes>& secret, const MacConfig& cfg,
                              SequenceState& seq_state);

}  // namespace smsim::defenses
