#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "smsim/bytes.hpp"
#include "smsim/netsim.hpp"
#include "smsim/sip_codec.hpp"
#include "smsim/sms_codec.hpp"

// The carrier side: IMS registrar and MESSAGE router, SMSC store-and-forward,
// the interconnect used between network elements, and short-code aggregators.
namespace smsim::ims {

class PolicyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::uint16_t kInterconnectPort = 5070;
inline constexpr std::uint16_t kAggregatorPort = 5080;
inline constexpr std::uint16_t kProviderPort = 5090;

/// Added by the carrier to every MESSAGE it relays: "spoofed=0" or "spoofed=1".
inline constexpr std::string_view kOriginAuditHeader = "X-Origin-Audit";
/// Set on the report the SMSC returns to a sender after delivery.
inline constexpr std::string_view kDeliveryReportHeader = "X-Delivery-Report";

enum class SecurityMode { DigestOnly, Ipsec3gpp };
enum class OriginCheck { None, CarrierScope, Strict };
enum class OriginVerdict { Accept, Reject };

/// Accepts DIGEST_ONLY and IPSEC_3GPP; TLS, IPSEC_IKE and IPSEC_MAIN are
/// recognised but not modeled and throw PolicyError, as does anything else.
SecurityMode parse_security_mode(std::string_view name);
OriginCheck parse_origin_check(std::string_view name);
std::string_view to_string(SecurityMode m);
std::string_view to_string(OriginCheck c);

struct RateLimit {
  std::size_t max_msgs = 0;
  SimTime window = 30 * kMinute;
};

struct ApprovalTriggers {
  std::set<std::string> premium_codes;
  std::optional<std::size_t> burst_threshold;
  SimTime burst_window = 30 * kMinute;

  bool active() const { return !premium_codes.empty() || burst_threshold.has_value(); }
};

struct CarrierPolicy {
  std::string carrier_id;
  SecurityMode security_mode = SecurityMode::DigestOnly;
  OriginCheck origin_check = OriginCheck::None;
  std::optional<RateLimit> rate_limit;
  ApprovalTriggers approval;
  /// 2G/3G circuit-switched baseline: the originating address is set by the
  /// network, which behaves like STRICT.
  bool legacy_cs = false;
  std::string phone_context = std::string(sip::kDefaultPhoneContext);
  std::string realm = "ims.mnc000.mcc310.3gppnetwork.org";
  std::string hash_label = "SHA-256";

  OriginCheck effective_origin_check() const { return legacy_cs ? OriginCheck::Strict : origin_check; }
};

/// `carrier_numbers` are the numbers assigned within the checking carrier.
OriginVerdict origin_check(std::string_view from_number, std::string_view auth_identity, OriginCheck mode,
                           const std::set<std::string>& carrier_numbers);

/// Admits at most max_msgs per key in any window of length `window`: a
/// message at time t is admitted iff fewer than max_msgs admitted messages
/// fall in (t - window, t].
class SlidingWindowLimiter {
 public:
  SlidingWindowLimiter(std::size_t max_msgs, SimTime window);
  bool admit(const std::string& key, SimTime now);
  /// Admitted messages for `key` inside (now - window, now].
  std::size_t count(const std::string& key, SimTime now);

 private:
  void expire(std::deque<SimTime>& q, SimTime now) const;

  std::size_t max_;
  SimTime window_;
  std::map<std::string, std::deque<SimTime>> admitted_;
};

/// Where things live, shared by every network element of one simulation.
struct Directory {
  std::map<std::string, std::string> number_carrier;       // subscriber number -> carrier id
  std::map<std::string, net::Endpoint> carrier_interconnect;  // carrier id -> interconnect endpoint
  std::map<std::string, net::Endpoint> short_code_aggregator;  // short code -> aggregator endpoint
  std::set<net::Endpoint> network_elements;                 // sources trusted on interconnect ports

  std::optional<std::string> carrier_of(const std::string& number) const;
  std::optional<net::Endpoint> interconnect_for_number(const std::string& number) const;
  bool is_carrier_interconnect(const net::Endpoint& ep) const;
};

/// MESSAGE exchanged between network elements (carrier, aggregator, provider).
sip::SipEnvelope relay_message(std::string_view from, std::string_view to, Bytes body, std::string call_id,
                               std::optional<bool> spoofed = std::nullopt);
/// "spoofed=1" -> true; absent header -> false.
bool audit_spoofed(const sip::SipEnvelope& env);

struct Registration {
  enum class State { Challenged, Registered };
  std::string identity;
  net::Endpoint endpoint;
  std::optional<Bytes> session_key;
  std::optional<std::string> nonce_issued;
  State state = State::Challenged;
};

/// A MESSAGE answered with 440 and waiting for the user's approval.
struct HeldMessage {
  std::string identity;
  sip::SipEnvelope request;
  sip::DigestChallenge challenge;
  net::Endpoint src;
};

class Carrier {
 public:
  static constexpr SimTime kRetryInterval = 60 * kSecond;
  static constexpr SimTime kMaxRetention = 24 * kHour;
  static constexpr std::size_t kQueueCapacity = 10000;

  Carrier(net::Fabric& fabric, Directory& directory, CarrierPolicy policy, std::string ims_address,
          std::uint64_t seed);
  Carrier(const Carrier&) = delete;
  Carrier& operator=(const Carrier&) = delete;

  void add_subscriber(const std::string& number, Bytes auth_key);
  bool is_subscriber(const std::string& number) const { return subscribers_.contains(number); }
  const std::set<std::string>& numbers() const { return numbers_; }

  const CarrierPolicy& policy() const { return policy_; }
  const std::string& id() const { return policy_.carrier_id; }
  net::Endpoint ims_endpoint() const { return {address_, sip::kSipPort}; }
  net::Endpoint interconnect_endpoint() const { return {address_, kInterconnectPort}; }

  /// Devices report going on and offline; only reachable registered numbers
  /// get immediate delivery.
  void set_reachable(const std::string& number, bool reachable);
  const Registration* registration(const std::string& number) const;

  sip::SipEnvelope handle_register(const sip::SipEnvelope& request, const net::Endpoint& src);
  sip::SipEnvelope handle_message(const sip::SipEnvelope& request, const net::Endpoint& src);

  /// Store-and-forward delivery of a mobile-terminated PDU. On success a
  /// delivery report goes to `report_to` when it is a registered subscriber.
  void smsc_forward(sms::SmsPdu deliver, const std::string& recipient,
                    const std::optional<std::string>& report_to = std::nullopt);

  std::size_t smsc_queue_size() const { return queued_; }
  const std::map<std::string, std::uint64_t>& counters() const { return counters_; }
  std::uint64_t counter(const std::string& name) const;
  const std::map<std::string, HeldMessage>& held() const { return held_; }

 private:
  void on_device_datagram(const net::Datagram& d);
  void on_interconnect_datagram(const net::Datagram& d);
  sip::SipEnvelope reject(const sip::SipEnvelope& request, int code, std::string_view why,
                          std::string_view counter);
  sip::SipEnvelope route(const sip::SipEnvelope& request, const std::string& identity);
  void attempt_delivery(std::uint64_t entry_id);
  std::string fresh_nonce();
  std::optional<std::string> identity_for_address(const std::string& addr) const;
  void bump(const std::string& name, std::uint64_t by = 1) { counters_[name] += by; }

  struct Pending {
    sms::SmsPdu pdu;
    std::string recipient;
    std::optional<std::string> report_to;
    SimTime first_attempt = 0;
    int attempts = 0;
  };

  net::Fabric& fabric_;
  Directory& directory_;
  CarrierPolicy policy_;
  std::string address_;
  std::mt19937_64 rng_;
  std::map<std::string, Bytes> subscribers_;
  std::set<std::string> numbers_;
  std::map<std::string, Registration> registrations_;
  std::map<std::string, std::string> address_identity_;
  std::set<std::string> unreachable_;
  std::optional<SlidingWindowLimiter> limiter_;
  SlidingWindowLimiter burst_;
  std::map<std::string, HeldMessage> held_;
  std::map<std::uint64_t, Pending> pending_;
  std::uint64_t next_pending_ = 1;
  std::size_t queued_ = 0;
  std::uint64_t relay_counter_ = 0;
  std::map<std::string, std::uint64_t> counters_;
};

struct ProviderRoute {
  std::string provider_id;
  net::Endpoint endpoint;
  std::vector<std::string> keywords;  // uppercase; used when several providers share a code
};

/// Pass-through router between carriers and the providers behind short codes.
/// Shared codes are dispatched by the first word of the text; replies without
/// a keyword (e.g. "YES") follow the provider that phone last reached.
class Aggregator {
 public:
  Aggregator(net::Fabric& fabric, Directory& directory, std::string id, net::Endpoint endpoint, bool carrier_only);
  Aggregator(const Aggregator&) = delete;
  Aggregator& operator=(const Aggregator&) = delete;

  void add_route(const std::string& short_code, ProviderRoute route);
  const std::string& id() const { return id_; }
  net::Endpoint endpoint() const { return endpoint_; }

  /// Applied to every mobile-originated MESSAGE before it is forwarded.
  std::function<void(sip::SipEnvelope&)> mutation_hook;

  /// Provider chosen for `text` from `phone` to `short_code`.
  std::optional<ProviderRoute> select(const std::string& short_code, const std::string& phone,
                                      std::string_view text);

  const std::map<std::string, std::uint64_t>& counters() const { return counters_; }

 private:
  void on_datagram(const net::Datagram& d);

  net::Fabric& fabric_;
  Directory& directory_;
  std::string id_;
  net::Endpoint endpoint_;
  bool carrier_only_;
  std::map<std::string, std::vector<ProviderRoute>> routes_;
  std::set<net::Endpoint> provider_endpoints_;
  std::map<std::pair<std::string, std::string>, std::string> affinity_;
  std::map<std::string, std::uint64_t> counters_;
};

}  // namespace smsim::ims
