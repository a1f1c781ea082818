#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "smsim/bytes.hpp"
#include "smsim/defenses.hpp"
#include "smsim/netsim.hpp"
#include "smsim/sip_codec.hpp"
#include "smsim/sms_codec.hpp"

namespace smsim::providers {

class CatalogError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ServiceModel { ReqResp, SubNotif };
enum class EnrollmentKind { OneStep, TwoStep, ThreeStepSimple, FourStepSimple, FourStepAuthCode, AlwaysOn };
enum class RuntimeAuth { None, WeakConfirm, Mac };
enum class Threat { AccountAbuse, Donation, SpamLawsuit, None };

std::string_view to_string(ServiceModel v);
std::string_view to_string(EnrollmentKind v);
std::string_view to_string(RuntimeAuth v);
std::string_view to_string(Threat v);
ServiceModel parse_service_model(std::string_view s);
EnrollmentKind parse_enrollment_kind(std::string_view s);
RuntimeAuth parse_runtime_auth(std::string_view s);
Threat parse_threat(std::string_view s);

struct ProviderRecord {
  std::string no;  // Fortune ranking, "NA" when unranked
  std::string name;
  std::string industry;
  std::string short_code;
  ServiceModel service_model = ServiceModel::SubNotif;
  EnrollmentKind enrollment = EnrollmentKind::OneStep;
  std::string operations;
  bool non_query_ops = false;  // offers commands beyond balance/status queries
  bool money = false;
  RuntimeAuth runtime_auth = RuntimeAuth::None;
  bool enroll_web = false;
  bool enroll_text = false;
  std::optional<Threat> threat;  // catalog ground truth
  bool exception = false;        // ground truth "No" the classifier cannot explain
  std::vector<std::string> keywords;
  std::string trigger_text;           // text that requests an auth code, e.g. "F"
  std::vector<std::string> assumed;  // fields not stated by the source table
};

ProviderRecord record_from_json(const nlohmann::json& j);
nlohmann::json record_to_json(const ProviderRecord& r);
std::vector<ProviderRecord> parse_catalog(const nlohmann::json& j);
/// The 64-row catalog shipped with the library.
const std::vector<ProviderRecord>& builtin_catalog();
std::vector<ProviderRecord> load_catalog(const std::string& path);

/// Rules, first match wins:
///  1. money, AlwaysOn, runtime auth None or WeakConfirm      -> Donation
///  2. ReqResp, runtime auth None, non-query operations       -> AccountAbuse
///  3. SubNotif with OneStep or ThreeStepSimple enrollment, or
///     FourStepSimple that also enrolls by text                -> SpamLawsuit
///  4. otherwise                                               -> None
Threat classify_threat(const ProviderRecord& r);

struct AuditRow {
  std::string name;
  std::string short_code;
  Threat predicted = Threat::None;
  std::optional<Threat> truth;
  bool exception = false;
  bool match = false;
};

struct AuditResult {
  std::vector<AuditRow> rows;
  std::size_t matches = 0;
  std::size_t predicted_vulnerable = 0;
  /// predicted_vulnerable with exception rows taken at their catalog label.
  std::size_t audited_vulnerable = 0;
  std::size_t truth_vulnerable = 0;
  std::vector<std::string> mismatches;
  std::vector<std::string> exceptions;
};

AuditResult audit_catalog(const std::vector<ProviderRecord>& records);

// ---- enrollment state machines ----

enum class EnrollState { Idle, WebPending, PendingConfirmReply, PendingAuthCode, Subscribed };
std::string_view to_string(EnrollState s);

enum class EventKind {
  WebSignup,       // phone number typed into a public web form, no login
  WebLoginSignup,  // phone number added from a logged-in web session
  TextJoin,        // subscription keyword texted to the short code
  TextFixedReply,  // token such as YES
  TextTrigger,     // designated text asking for an auth code
  WebCodeEntry,    // auth code typed into the logged-in web session
  TextOther,
};

struct EnrollEvent {
  EventKind kind = EventKind::TextOther;
  std::string token;  // reply token or entered code
};

inline constexpr SimTime kAuthCodeLifetime = 10 * kMinute;

struct Enrollment {
  EnrollState state = EnrollState::Idle;
  std::string code;
  SimTime code_expiry = 0;
  bool web_session = false;  // the pending code was requested from a logged-in session
  SimTime last_event = 0;
};

struct EnrollContext {
  EnrollmentKind kind = EnrollmentKind::OneStep;
  bool enroll_text = true;
  bool has_trigger = false;
};

struct EnrollStep {
  Enrollment next;
  std::optional<std::string> outgoing_text;
  bool ignored = false;
};

/// True for YES, Y and GO, in any case.
bool is_fixed_reply(std::string_view token);

/// Total transition function; unknown or out-of-place events leave the state
/// unchanged and set `ignored`.
EnrollStep enrollment_advance(const EnrollContext& ctx, const Enrollment& current, const EnrollEvent& event,
                              SimTime now, std::mt19937_64& rng);

// ---- provider nodes ----

struct ActivityEntry {
  SimTime time = 0;
  std::string action;  // status, add_friend, like, subscribe, unsubscribe
  std::string text;
  std::string origin_phone;
  bool spoofed = false;
};

struct SocialAccount {
  std::string account_id;
  std::string display_name;
  std::optional<std::string> bound_phone;
  std::set<std::string> friends;
  std::set<std::string> likes;
  std::set<std::string> following;
  std::set<std::string> pending_friend_requests;  // account ids asking to befriend this one
  std::vector<ActivityEntry> activity_log;
};

struct Charge {
  SimTime time = 0;
  std::string keyword;
  std::int64_t amount = 0;
  bool spoofed = false;
};

struct PendingDonation {
  std::string keyword;
  std::int64_t amount = 0;
  SimTime deadline = 0;
  bool spoofed = false;
};

struct ProviderOptions {
  defenses::MacConfig mac;
  const defenses::SecretStore* secrets = nullptr;
  SimTime notification_period = 24 * kHour;
  SimTime donation_window = 15 * kMinute;
  std::int64_t donation_amount = 10;
  std::uint64_t seed = 0;
};

/// A service provider listening behind an aggregator. Incoming texts arrive as
/// relayed MESSAGEs; outgoing texts are sent back through the aggregator.
class ProviderNode {
 public:
  ProviderNode(net::Fabric& fabric, ProviderRecord record, net::Endpoint self, net::Endpoint aggregator,
               ProviderOptions options);
  virtual ~ProviderNode() = default;
  ProviderNode(const ProviderNode&) = delete;
  ProviderNode& operator=(const ProviderNode&) = delete;

  const ProviderRecord& record() const { return record_; }
  const std::string& id() const { return id_; }
  net::Endpoint endpoint() const { return self_; }
  const std::map<std::string, std::uint64_t>& counters() const { return counters_; }
  std::uint64_t counter(const std::string& name) const;

  /// Entry point for a text that reached this provider. Applies runtime MAC
  /// verification when configured, then hands the text to the service.
  void receive_text(const std::string& from_phone, const sms::SmsPdu& pdu, bool spoofed);

  // Web-side actions (simulation events, not network traffic).
  virtual void web_signup(const std::string& phone);
  virtual void web_login_signup(const std::string& phone);
  virtual bool web_enter_code(const std::string& phone, const std::string& code);

  /// Enrollment state of `phone`; AlwaysOn providers report Subscribed.
  EnrollState enrollment_state(const std::string& phone) const;
  std::size_t subscribed_count() const;

 protected:
  virtual void on_text(const std::string& from_phone, const std::string& text, bool spoofed) = 0;

  void send_text(const std::string& phone, const std::string& text);
  /// Runs the enrollment machine for `phone` and texts any outgoing message.
  EnrollStep advance(const std::string& phone, const EnrollEvent& event, bool spoofed);
  EnrollEvent classify_text(std::string_view text) const;
  void bump(const std::string& name, std::uint64_t by = 1) { counters_[name] += by; }
  SimTime now() const { return fabric_.now(); }

  net::Fabric& fabric_;
  ProviderRecord record_;
  std::string id_;
  net::Endpoint self_;
  net::Endpoint aggregator_;
  ProviderOptions options_;
  std::mt19937_64 rng_;
  std::map<std::string, Enrollment> enrollments_;
  std::set<std::string> spoof_touched_;  // a spoofed text moved this phone's enrollment
  std::set<std::string> spoof_enrolled_;

 private:
  void on_datagram(const net::Datagram& d);

  std::map<std::string, defenses::SequenceState> inbound_seq_;
  std::map<std::string, std::uint64_t> outbound_seq_;
  std::uint64_t call_counter_ = 0;
  std::map<std::string, std::uint64_t> counters_;
};

/// Subscription and notification services; ReqResp variants answer queries.
class SubscriptionService : public ProviderNode {
 public:
  SubscriptionService(net::Fabric& fabric, ProviderRecord record, net::Endpoint self, net::Endpoint aggregator,
                      ProviderOptions options);

  /// One promotional text per subscribed phone. Returns the number sent.
  std::size_t notification_tick();
  /// Promotions received by phones whose enrollment was spoofed.
  const std::map<std::string, std::uint64_t>& unsolicited() const { return unsolicited_; }
  std::uint64_t unsolicited_total() const;

 protected:
  void on_text(const std::string& from_phone, const std::string& text, bool spoofed) override;

 private:
  std::map<std::string, std::uint64_t> unsolicited_;
};

/// Text service of a social network: phone binding by auth code, then status
/// updates, friend requests, page likes and follows by text.
class SocialService : public ProviderNode {
 public:
  SocialService(net::Fabric& fabric, ProviderRecord record, net::Endpoint self, net::Endpoint aggregator,
                ProviderOptions options);

  void create_account(const std::string& account_id, const std::string& display_name);
  /// The logged-in account asks to bind `phone`; a code follows once the
  /// phone texts the trigger (or immediately when there is no trigger).
  void web_add_phone(const std::string& account_id, const std::string& phone);
  bool web_enter_code(const std::string& phone, const std::string& code) override;
  /// Direct binding for scenario setup.
  void bind(const std::string& account_id, const std::string& phone);

  bool accept_friend_request(const std::string& account_id, const std::string& requester_id);
  /// Statuses of `owner_id` that `viewer_id` may see (self or friends).
  std::vector<ActivityEntry> visible_statuses(const std::string& viewer_id, const std::string& owner_id) const;

  const SocialAccount* account(const std::string& account_id) const;
  const SocialAccount* account_for_phone(const std::string& phone) const;
  std::size_t page_likes(const std::string& page) const;

 protected:
  void on_text(const std::string& from_phone, const std::string& text, bool spoofed) override;

 private:
  SocialAccount* find_target(const std::string& name_or_number);
  std::map<std::string, SocialAccount> accounts_;
  std::map<std::string, std::string> phone_account_;
  std::map<std::string, std::string> binding_requests_;  // phone -> account awaiting binding
};

/// Always-on donation keywords confirmed by a "YES" reply.
class DonationService : public ProviderNode {
 public:
  DonationService(net::Fabric& fabric, ProviderRecord record, net::Endpoint self, net::Endpoint aggregator,
                  ProviderOptions options);

  const std::map<std::string, std::vector<Charge>>& ledger() const { return ledger_; }
  std::int64_t total_charged() const;
  std::size_t charge_count() const;
  std::size_t spoofed_charge_count() const;

 protected:
  void on_text(const std::string& from_phone, const std::string& text, bool spoofed) override;

 private:
  std::map<std::string, PendingDonation> pending_;
  std::map<std::string, std::vector<Charge>> ledger_;
};

/// Social for ReqResp records with non-query operations and no money; Donation
/// for AlwaysOn records; Subscription otherwise.
std::unique_ptr<ProviderNode> make_provider(net::Fabric& fabric, ProviderRecord record, net::Endpoint self,
                                            net::Endpoint aggregator, ProviderOptions options);

}  // namespace smsim::providers
