#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "smsim/bytes.hpp"

namespace smsim::sip {

class SipError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::uint16_t kSipPort = 5060;
inline constexpr std::string_view kDefaultPhoneContext = "vzims.com";
inline constexpr std::string_view kSmsContentType = "application/vnd.3gpp2.sms";
inline constexpr std::string_view kApprovalHeader = "X-Approval-Info";
inline constexpr std::string_view kIntegrityHeader = "X-Sim-Ipsec-Tag";

struct RequestLine {
  std::string method;
  std::string request_uri;
  friend bool operator==(const RequestLine&, const RequestLine&) = default;
};

struct StatusLine {
  int code = 200;
  std::string reason;
  friend bool operator==(const StatusLine&, const StatusLine&) = default;
};

struct Header {
  std::string name;
  std::string value;
  friend bool operator==(const Header&, const Header&) = default;
};

/// A SIP request or response with ordered headers and a binary body.
class SipEnvelope {
 public:
  std::variant<RequestLine, StatusLine> start;
  std::vector<Header> headers;
  Bytes body;

  bool is_request() const { return std::holds_alternative<RequestLine>(start); }
  const RequestLine& request() const;
  const StatusLine& status() const;
  bool is_method(std::string_view method) const;

  /// First header with this name (case-insensitive).
  std::optional<std::string> header(std::string_view name) const;
  std::size_t count(std::string_view name) const;
  /// Replaces the first occurrence, or appends.
  void set_header(std::string_view name, std::string value);
  void remove_header(std::string_view name);
  /// Replaces the body and keeps Content-Length in step.
  void set_body(Bytes body);

  friend bool operator==(const SipEnvelope&, const SipEnvelope&) = default;
};

Bytes serialize(const SipEnvelope& env);
SipEnvelope parse(ByteView bytes);

/// Realtime profile a device fills its MESSAGE headers from.
struct DeviceProfile {
  std::string phone_number;
  std::string device_address;
  std::string ims_server_address;
  Bytes auth_key;
  std::uint64_t call_id_counter = 0;
};

std::string tel_uri(std::string_view number);
/// Number of a `<tel:NNN;...>` or `tel:NNN` value; nullopt when absent.
std::optional<std::string> tel_number(std::string_view header_value);

/// Builds the SMS-carrying MESSAGE. `from_number` goes verbatim into From and
/// P-Preferred-Identity; the codec never checks it against the profile.
SipEnvelope build_message_request(DeviceProfile& profile, std::string_view from_number,
                                  std::string_view recipient, Bytes body,
                                  std::string_view phone_context = kDefaultPhoneContext);

/// Checks the MESSAGE carries each profile-derived header exactly once plus the
/// fixed filler set. On failure returns false and names the problem in `why`.
bool validate_message_headers(const SipEnvelope& env, std::string* why = nullptr);

struct DigestChallenge {
  std::string realm;
  std::string nonce;
  std::string algorithm_label = "SHA-256";
  friend bool operator==(const DigestChallenge&, const DigestChallenge&) = default;
};

struct DigestCredentials {
  std::string username;
  std::string realm;
  std::string nonce;
  std::string uri;
  std::string response;
  std::string algorithm_label = "SHA-256";
  friend bool operator==(const DigestCredentials&, const DigestCredentials&) = default;
};

std::string format_challenge(const DigestChallenge& ch);
DigestChallenge parse_challenge(std::string_view value);
std::string format_credentials(const DigestCredentials& cr);
DigestCredentials parse_credentials(std::string_view value);

/// hex(Hash(hex(key) ":" nonce ":" method ":" uri)), hash chosen by the
/// challenge's algorithm label.
std::string compute_digest_response(ByteView auth_key, const DigestChallenge& challenge,
                                    std::string_view method, std::string_view request_uri);

std::string reason_phrase(int code);

/// 401 and 440 require a challenge; 440 also requires display text.
SipEnvelope build_response(int code, const std::optional<DigestChallenge>& challenge = std::nullopt,
                           const std::optional<std::string>& display_text = std::nullopt);

/// build_response with Via/From/To/Call-ID/CSeq copied from the request.
SipEnvelope respond_to(const SipEnvelope& request, int code,
                       const std::optional<DigestChallenge>& challenge = std::nullopt,
                       const std::optional<std::string>& display_text = std::nullopt);

SipEnvelope build_register_request(DeviceProfile& profile, std::string_view realm,
                                   const std::optional<DigestCredentials>& credentials = std::nullopt);

// Simulated IPsec-3GPP integrity: a keyed tag over the envelope serialized
// without the tag header.
std::string integrity_tag(ByteView session_key, const SipEnvelope& env);
void attach_integrity_tag(ByteView session_key, SipEnvelope& env);
bool verify_integrity_tag(ByteView session_key, const SipEnvelope& env);

}  // namespace smsim::sip
