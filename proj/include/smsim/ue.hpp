#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "smsim/bytes.hpp"
#include "smsim/defenses.hpp"
#include "smsim/netsim.hpp"
#include "smsim/sip_codec.hpp"

// Simulated handsets. The app path goes through the OS messaging stack and its
// gates (short-code confirmation, 30-per-30-minutes cap); the raw path builds
// the MESSAGE itself and writes it to a UDP socket, skipping both.
namespace smsim::ue {

class DeviceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Role { Honest, Attacker };
enum class Decision { Approve, Deny };

/// Stand-in for the user answering a confirmation dialog.
class ApprovalPolicy {
 public:
  enum class Kind { AutoApprove, AutoDeny, Script };

  static ApprovalPolicy auto_approve() { return ApprovalPolicy(Kind::AutoApprove, {}); }
  static ApprovalPolicy auto_deny() { return ApprovalPolicy(Kind::AutoDeny, {}); }
  static ApprovalPolicy script(std::vector<Decision> decisions) { return ApprovalPolicy(Kind::Script, std::move(decisions)); }

  /// Next decision; nullopt once a script is exhausted (the dialog stays open).
  std::optional<Decision> decide();
  Kind kind() const { return kind_; }
  std::size_t consulted() const { return consulted_; }

 private:
  ApprovalPolicy(Kind kind, std::vector<Decision> script) : kind_(kind), script_(std::move(script)) {}
  Kind kind_;
  std::vector<Decision> script_;
  std::size_t next_ = 0;
  std::size_t consulted_ = 0;
};

enum class SendResult { Sent, AwaitingUserConfirm, AwaitingRateApproval, Blocked };
std::string_view to_string(SendResult r);

/// The default route marks the Internet interface; the IMS server is the
/// destination of a route on another interface (lowest interface name wins).
/// Returns (address, interface).
std::pair<std::string, std::string> discover_ims_address(std::string_view routing_table_text);

struct InboxEntry {
  SimTime at = 0;
  std::string from;
  std::string text;
  defenses::AuthStatus auth = defenses::AuthStatus::Unauthenticated;
};

struct SendRecord {
  std::string call_id;
  std::string from;
  std::string recipient;
  std::string text;
  bool raw = false;
  SimTime sent_at = 0;
  net::Endpoint source;
  sip::SipEnvelope request;
  std::optional<int> final_code;
  int challenges = 0;
  bool abandoned = false;
};

struct SecondMessage {
  std::string text;
  SimTime delay = 0;
};

struct AttackScript {
  std::vector<std::string> victim_numbers;
  std::string target_code;
  std::string message_template;  // "{victim}" is replaced by the victim number
  SimTime inter_message_delay = 0;
  std::optional<SecondMessage> second_message;
};

std::string render_template(std::string_view message_template, std::string_view victim);

struct DeviceConfig {
  std::string number;
  std::string carrier_id;
  Role role = Role::Honest;
  ApprovalPolicy approval = ApprovalPolicy::auto_approve();
  Bytes auth_key;
  std::string device_address;
  std::vector<net::RouteEntry> routing_table;
  std::string realm;
  std::string phone_context = std::string(sip::kDefaultPhoneContext);
  std::string hash_label = "SHA-256";
  bool ipsec = false;
  /// The attacker's own stack answers 440 challenges on raw sends.
  bool raw_answers_440 = true;
  bool inbox_enabled = true;
  defenses::MacConfig mac;
  std::uint64_t seed = 0;
};

class Device {
 public:
  static constexpr std::size_t kAppWindowCap = 30;
  static constexpr SimTime kAppWindow = 30 * kMinute;

  Device(net::Fabric& fabric, DeviceConfig config);
  Device(const Device&) = delete;
  Device& operator=(const Device&) = delete;

  const std::string& number() const { return config_.number; }
  const DeviceConfig& config() const { return config_; }
  const sip::DeviceProfile& profile() const { return profile_; }
  const std::string& ims_interface() const { return ims_interface_; }
  net::Endpoint sip_endpoint() const { return {config_.device_address, sip::kSipPort}; }

  /// Starts the REGISTER / 401 / REGISTER / 200 exchange; the outcome is known
  /// once the fabric has run.
  void register_with_ims();
  bool registered() const { return registered_; }
  bool registration_failed() const { return registration_failed_; }

  /// OS messaging app: honest From, both device gates.
  SendResult send_sms_app(const std::string& recipient, const std::string& text);
  /// Raw datagram from a fresh source port with any From; no gates.
  std::string attacker_send_raw(const std::string& from_number, const std::string& recipient,
                                const std::string& text);
  /// Pipelined: every victim's first message goes out on the inter-message
  /// cadence; second messages are scheduled independently after their delay.
  void run_attack_script(const AttackScript& script);

  void set_online(bool online);
  bool online() const { return online_; }
  void set_inbox_enabled(bool enabled) { config_.inbox_enabled = enabled; }
  /// Called with the new reachability whenever the device goes on or offline.
  std::function<void(const std::string&, bool)> on_reachability;

  /// Secret shared with the provider behind `short_code`; app-path texts to
  /// that code then carry a MAC.
  void add_secret(const std::string& short_code, defenses::SecretCode secret);

  const std::vector<InboxEntry>& inbox() const { return inbox_; }
  const std::vector<SendRecord>& sends() const { return sends_; }
  const SendRecord* send_record(const std::string& call_id) const;
  std::size_t app_window_count() const { return app_window_count_; }
  ApprovalPolicy& approval() { return config_.approval; }
  const std::map<std::string, std::uint64_t>& counters() const { return counters_; }
  std::uint64_t counter(const std::string& name) const;

 private:
  void on_datagram(const net::Datagram& d);
  void on_response(const sip::SipEnvelope& resp);
  void on_register_response(const sip::SipEnvelope& resp);
  void on_incoming_message(const sip::SipEnvelope& req);
  void handle_440(SendRecord& rec, const sip::SipEnvelope& resp);
  std::string dispatch(const std::string& from, const std::string& recipient, const std::string& text, bool raw);
  void transmit(SendRecord& rec);
  std::uint16_t ephemeral_port();
  void bump(const std::string& name, std::uint64_t by = 1) { counters_[name] += by; }

  net::Fabric& fabric_;
  DeviceConfig config_;
  sip::DeviceProfile profile_;
  std::string ims_interface_;
  std::mt19937_64 rng_;
  bool registered_ = false;
  bool registration_failed_ = false;
  bool online_ = true;
  std::optional<sip::DigestChallenge> last_challenge_;
  std::optional<Bytes> session_key_;
  std::set<std::uint16_t> bound_ports_;
  std::size_t app_window_count_ = 0;
  SimTime app_window_start_ = 0;
  std::vector<SendRecord> sends_;
  std::map<std::string, std::size_t> by_call_id_;
  std::map<std::string, defenses::SecretCode> secrets_;
  std::map<std::string, std::uint64_t> mac_seq_;
  std::map<std::string, defenses::SequenceState> inbound_seq_;
  std::vector<InboxEntry> inbox_;
  std::map<std::string, std::uint64_t> counters_;
};

}  // namespace smsim::ue
