#include "smsim/providers.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <sstream>

#include "smsim/ims_core.hpp"

namespace smsim::providers {

namespace {

std::string upper(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::toupper(c); });
  return out;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::pair<std::string, std::string> split_command(std::string_view text) {
  const std::string t = trim(text);
  const auto sp = t.find(' ');
  if (sp == std::string::npos) return {upper(t), {}};
  return {upper(t.substr(0, sp)), trim(t.substr(sp + 1))};
}

constexpr std::string_view kSubscribedText = "You are subscribed. Reply STOP to cancel.";
constexpr std::string_view kConfirmText = "Reply YES to confirm your subscription.";

std::string fresh_code(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> dist(0, 999999);
  char buf[8];
  std::snprintf(buf, sizeof buf, "%06d", dist(rng));
  return buf;
}

}  // namespace

std::string_view to_string(EnrollState s) {
  switch (s) {
    case EnrollState::Idle: return "Idle";
    case EnrollState::WebPending: return "WebPending";
    case EnrollState::PendingConfirmReply: return "PendingConfirmReply";
    case EnrollState::PendingAuthCode: return "PendingAuthCode";
    case EnrollState::Subscribed: return "Subscribed";
  }
  return "?";
}

bool is_fixed_reply(std::string_view token) {
  const std::string t = upper(trim(token));
  return t == "YES" || t == "Y" || t == "GO";
}

EnrollStep enrollment_advance(const EnrollContext& ctx, const Enrollment& current, const EnrollEvent& event,
                              SimTime now, std::mt19937_64& rng) {
  EnrollStep step{current, std::nullopt, true};
  auto go = [&](EnrollState to, std::optional<std::string> text = std::nullopt) {
    step.next.state = to;
    step.next.last_event = now;
    step.outgoing_text = std::move(text);
    step.ignored = false;
    return step;
  };
  auto issue_code = [&](bool web_session) {
    step.next.code = fresh_code(rng);
    step.next.code_expiry = now + kAuthCodeLifetime;
    step.next.web_session = web_session;
    return go(EnrollState::PendingAuthCode, "Your confirmation code is " + step.next.code);
  };
  const EnrollState s = current.state;
  const EventKind e = event.kind;
  const bool fixed_reply = e == EventKind::TextFixedReply && is_fixed_reply(event.token);

  if (ctx.kind == EnrollmentKind::AlwaysOn) {
    step.next.state = EnrollState::Subscribed;
    return step;
  }
  if (s == EnrollState::Subscribed) return step;

  switch (ctx.kind) {
    case EnrollmentKind::OneStep:
      if (e == EventKind::WebSignup || e == EventKind::TextJoin) return go(EnrollState::Subscribed, std::string(kSubscribedText));
      break;
    case EnrollmentKind::TwoStep:
      if (e == EventKind::WebLoginSignup) return go(EnrollState::Subscribed, std::string(kSubscribedText));
      break;
    case EnrollmentKind::ThreeStepSimple:
      if (s == EnrollState::Idle && (e == EventKind::TextJoin || e == EventKind::WebSignup)) {
        return go(EnrollState::PendingConfirmReply, std::string(kConfirmText));
      }
      if (s == EnrollState::PendingConfirmReply && fixed_reply) return go(EnrollState::Subscribed, std::string(kSubscribedText));
      break;
    case EnrollmentKind::FourStepSimple:
      if (s == EnrollState::Idle && (e == EventKind::WebLoginSignup || (e == EventKind::TextJoin && ctx.enroll_text))) {
        return go(EnrollState::PendingConfirmReply, std::string(kConfirmText));
      }
      if (s == EnrollState::PendingConfirmReply && fixed_reply) return go(EnrollState::Subscribed, std::string(kSubscribedText));
      break;
    case EnrollmentKind::FourStepAuthCode:
      if (e == EventKind::WebLoginSignup) {
        if (ctx.has_trigger) {
          step.next.code.clear();
          step.next.web_session = true;
          return go(EnrollState::WebPending);
        }
        return issue_code(true);
      }
      if (e == EventKind::TextTrigger && ctx.has_trigger) {
        const bool web = s == EnrollState::WebPending || (s == EnrollState::PendingAuthCode && current.web_session);
        return issue_code(web);
      }
      if (e == EventKind::WebCodeEntry && s == EnrollState::PendingAuthCode && current.web_session &&
          !current.code.empty() && event.token == current.code && now <= current.code_expiry) {
        step.next.code.clear();
        step.next.web_session = false;
        return go(EnrollState::Subscribed, std::string(kSubscribedText));
      }
      break;
    case EnrollmentKind::AlwaysOn:
      break;
  }
  return step;
}

// ---- ProviderNode ----

ProviderNode::ProviderNode(net::Fabric& fabric, ProviderRecord record, net::Endpoint self, net::Endpoint aggregator,
                           ProviderOptions options)
    : fabric_(fabric),
      record_(std::move(record)),
      id_(record_.short_code + "/" + record_.name),
      self_(std::move(self)),
      aggregator_(std::move(aggregator)),
      options_(std::move(options)),
      rng_(options_.seed) {
  if (record_.runtime_auth == RuntimeAuth::Mac) options_.mac.validate();
  fabric_.register_endpoint(self_, [this](const net::Datagram& d) { on_datagram(d); });
}

std::uint64_t ProviderNode::counter(const std::string& name) const {
  auto it = counters_.find(name);
  return it == counters_.end() ? 0 : it->second;
}

void ProviderNode::on_datagram(const net::Datagram& d) {
  try {
    const sip::SipEnvelope env = sip::parse(d.payload);
    const auto from = sip::tel_number(env.header("From").value_or(""));
    if (!from) {
      bump("dropped_malformed");
      return;
    }
    receive_text(*from, sms::decode_pdu(env.body), ims::audit_spoofed(env));
  } catch (const std::exception& e) {
    bump("dropped_malformed");
    fabric_.note("provider " + record_.name + " malformed input: " + e.what());
  }
}

void ProviderNode::receive_text(const std::string& from_phone, const sms::SmsPdu& pdu, bool spoofed) {
  bump("texts_received");
  std::string text;
  if (record_.runtime_auth == RuntimeAuth::Mac) {
    std::optional<Bytes> secret;
    if (options_.secrets) {
      if (auto code = options_.secrets->lookup(from_phone, id_)) secret = code->bytes();
    }
    const auto result = defenses::verify_and_strip(pdu, secret, options_.mac, inbound_seq_[from_phone]);
    switch (result.status) {
      case defenses::AuthStatus::Verified:
        bump("mac_verified");
        if (spoofed) bump("verified_spoofed");
        text = to_text(result.payload);
        break;
      case defenses::AuthStatus::Invalid:
        bump("mac_invalid");
        fabric_.note("provider " + record_.name + " discard invalid MAC from " + from_phone);
        return;
      case defenses::AuthStatus::Unauthenticated:
        bump("mac_unauthenticated");
        fabric_.note("provider " + record_.name + " discard unauthenticated text from " + from_phone);
        return;
    }
  } else {
    text = pdu.bearer.user_data.text();
  }
  on_text(from_phone, text, spoofed);
}

void ProviderNode::send_text(const std::string& phone, const std::string& text) {
  sms::SmsPdu pdu = sms::make_deliver(record_.short_code, phone, sms::UserData::ascii(text));
  if (record_.runtime_auth == RuntimeAuth::Mac && options_.secrets) {
    if (auto code = options_.secrets->lookup(phone, id_)) {
      pdu = defenses::protect(std::move(pdu), record_.short_code, code->bytes(), options_.mac, outbound_seq_[phone]++);
    }
  }
  const std::string call_id = "p" + std::to_string(++call_counter_) + "@" + record_.short_code;
  fabric_.send_datagram(self_, aggregator_,
                        sip::serialize(ims::relay_message(record_.short_code, phone, sms::encode_pdu(pdu), call_id)),
                        "MESSAGE");
  bump("texts_sent");
}

EnrollEvent ProviderNode::classify_text(std::string_view text) const {
  const std::string t = trim(text);
  const auto [word, rest] = split_command(t);
  if (rest.empty() && is_fixed_reply(word)) return {EventKind::TextFixedReply, word};
  if (!record_.trigger_text.empty() && upper(t) == upper(record_.trigger_text)) return {EventKind::TextTrigger, {}};
  if (word == "JOIN" || word == "START" || word == "SUBSCRIBE" ||
      std::find(record_.keywords.begin(), record_.keywords.end(), word) != record_.keywords.end()) {
    return {EventKind::TextJoin, word};
  }
  return {EventKind::TextOther, t};
}

EnrollStep ProviderNode::advance(const std::string& phone, const EnrollEvent& event, bool spoofed) {
  const EnrollContext ctx{record_.enrollment, record_.enroll_text, !record_.trigger_text.empty()};
  Enrollment& e = enrollments_[phone];
  const EnrollState before = e.state;
  EnrollStep step = enrollment_advance(ctx, e, event, now(), rng_);
  e = step.next;
  if (step.ignored) {
    bump("enroll_ignored");
    fabric_.note("provider " + record_.name + " ignored enrollment event from " + phone);
    return step;
  }
  if (spoofed) spoof_touched_.insert(phone);
  if (before != EnrollState::Subscribed && e.state == EnrollState::Subscribed) {
    bump("enrolled");
    if (spoof_touched_.contains(phone)) {
      spoof_enrolled_.insert(phone);
      bump("enrolled_spoofed");
    }
    fabric_.note("provider " + record_.name + " enrolled " + phone);
  }
  if (step.outgoing_text) send_text(phone, *step.outgoing_text);
  return step;
}

void ProviderNode::web_signup(const std::string& phone) { advance(phone, {EventKind::WebSignup, {}}, false); }

void ProviderNode::web_login_signup(const std::string& phone) {
  advance(phone, {EventKind::WebLoginSignup, {}}, false);
}

bool ProviderNode::web_enter_code(const std::string& phone, const std::string& code) {
  const bool was = enrollment_state(phone) == EnrollState::Subscribed;
  advance(phone, {EventKind::WebCodeEntry, code}, false);
  return !was && enrollment_state(phone) == EnrollState::Subscribed;
}

EnrollState ProviderNode::enrollment_state(const std::string& phone) const {
  if (record_.enrollment == EnrollmentKind::AlwaysOn) return EnrollState::Subscribed;
  auto it = enrollments_.find(phone);
  return it == enrollments_.end() ? EnrollState::Idle : it->second.state;
}

std::size_t ProviderNode::subscribed_count() const {
  return static_cast<std::size_t>(std::count_if(enrollments_.begin(), enrollments_.end(), [](const auto& kv) {
    return kv.second.state == EnrollState::Subscribed;
  }));
}

// ---- SubscriptionService ----

SubscriptionService::SubscriptionService(net::Fabric& fabric, ProviderRecord record, net::Endpoint self,
                                         net::Endpoint aggregator, ProviderOptions options)
    : ProviderNode(fabric, std::move(record), std::move(self), std::move(aggregator), std::move(options)) {}

void SubscriptionService::on_text(const std::string& from_phone, const std::string& text, bool spoofed) {
  const auto [word, rest] = split_command(text);
  if (word == "STOP" && rest.empty()) {
    if (enrollment_state(from_phone) != EnrollState::Idle) {
      enrollments_[from_phone] = Enrollment{};
      spoof_touched_.erase(from_phone);
      spoof_enrolled_.erase(from_phone);
      bump("unsubscribed");
      send_text(from_phone, "You are unsubscribed.");
    }
    return;
  }
  const EnrollEvent ev = classify_text(text);
  if (enrollment_state(from_phone) == EnrollState::Subscribed && record_.service_model == ServiceModel::ReqResp) {
    bump("queries_answered");
    send_text(from_phone, record_.name + ": request received.");
    return;
  }
  advance(from_phone, ev, spoofed);
}

std::size_t SubscriptionService::notification_tick() {
  std::size_t sent = 0;
  for (const auto& [phone, e] : enrollments_) {
    if (e.state != EnrollState::Subscribed) continue;
    send_text(phone, record_.name + " special offer of the day.");
    ++sent;
    if (spoof_enrolled_.contains(phone)) ++unsolicited_[phone];
  }
  bump("notifications_sent", sent);
  return sent;
}

std::uint64_t SubscriptionService::unsolicited_total() const {
  std::uint64_t total = 0;
  for (const auto& [phone, n] : unsolicited_) total += n;
  return total;
}

// ---- SocialService ----

SocialService::SocialService(net::Fabric& fabric, ProviderRecord record, net::Endpoint self, net::Endpoint aggregator,
                             ProviderOptions options)
    : ProviderNode(fabric, std::move(record), std::move(self), std::move(aggregator), std::move(options)) {}

void SocialService::create_account(const std::string& account_id, const std::string& display_name) {
  if (accounts_.contains(account_id)) throw CatalogError("duplicate account " + account_id);
  SocialAccount a;
  a.account_id = account_id;
  a.display_name = display_name;
  accounts_[account_id] = std::move(a);
}

void SocialService::web_add_phone(const std::string& account_id, const std::string& phone) {
  auto it = accounts_.find(account_id);
  if (it == accounts_.end() || it->second.bound_phone || phone_account_.contains(phone)) {
    bump("bind_refused");
    return;
  }
  binding_requests_[phone] = account_id;
  web_login_signup(phone);
}

bool SocialService::web_enter_code(const std::string& phone, const std::string& code) {
  auto req = binding_requests_.find(phone);
  if (req == binding_requests_.end()) {
    bump("bind_failed");
    return false;
  }
  if (!ProviderNode::web_enter_code(phone, code)) {
    bump("bind_failed");
    return false;
  }
  const std::string account_id = req->second;
  binding_requests_.erase(req);
  bind(account_id, phone);
  return true;
}

void SocialService::bind(const std::string& account_id, const std::string& phone) {
  SocialAccount& a = accounts_.at(account_id);
  if (a.bound_phone || phone_account_.contains(phone)) throw CatalogError("phone or account already bound");
  a.bound_phone = phone;
  phone_account_[phone] = account_id;
  Enrollment& e = enrollments_[phone];
  e.state = EnrollState::Subscribed;
  e.code.clear();
  bump("bound");
  fabric_.note("provider " + record_.name + " bound " + phone + " to " + account_id);
}

bool SocialService::accept_friend_request(const std::string& account_id, const std::string& requester_id) {
  auto a = accounts_.find(account_id);
  auto r = accounts_.find(requester_id);
  if (a == accounts_.end() || r == accounts_.end() || !a->second.pending_friend_requests.erase(requester_id)) {
    return false;
  }
  a->second.friends.insert(requester_id);
  r->second.friends.insert(account_id);
  return true;
}

std::vector<ActivityEntry> SocialService::visible_statuses(const std::string& viewer_id,
                                                           const std::string& owner_id) const {
  std::vector<ActivityEntry> out;
  const SocialAccount* owner = account(owner_id);
  if (!owner || (viewer_id != owner_id && !owner->friends.contains(viewer_id))) return out;
  for (const auto& e : owner->activity_log) {
    if (e.action == "status") out.push_back(e);
  }
  return out;
}

const SocialAccount* SocialService::account(const std::string& account_id) const {
  auto it = accounts_.find(account_id);
  return it == accounts_.end() ? nullptr : &it->second;
}

const SocialAccount* SocialService::account_for_phone(const std::string& phone) const {
  auto it = phone_account_.find(phone);
  return it == phone_account_.end() ? nullptr : account(it->second);
}

std::size_t SocialService::page_likes(const std::string& page) const {
  return static_cast<std::size_t>(std::count_if(accounts_.begin(), accounts_.end(),
                                                [&](const auto& kv) { return kv.second.likes.contains(page); }));
}

SocialAccount* SocialService::find_target(const std::string& name_or_number) {
  const std::string wanted = upper(name_or_number);
  for (auto& [id, a] : accounts_) {
    if (upper(a.display_name) == wanted || upper(id) == wanted) return &a;
  }
  auto it = phone_account_.find(name_or_number);
  return it == phone_account_.end() ? nullptr : &accounts_.at(it->second);
}

void SocialService::on_text(const std::string& from_phone, const std::string& text, bool spoofed) {
  auto bound = phone_account_.find(from_phone);
  if (bound == phone_account_.end()) {
    const EnrollEvent ev = classify_text(text);
    if (ev.kind == EventKind::TextTrigger) {
      advance(from_phone, ev, spoofed);
    } else {
      bump("unbound_texts");
      send_text(from_phone, "This phone is not linked to an account.");
    }
    return;
  }
  SocialAccount& acct = accounts_.at(bound->second);
  const auto [command, arg] = split_command(text);
  ActivityEntry entry{now(), "status", trim(text), from_phone, spoofed};
  if (command == "ADD" && !arg.empty()) {
    SocialAccount* target = find_target(arg);
    if (!target || target == &acct) {
      bump("command_errors");
      send_text(from_phone, "No user named " + arg + ".");
      return;
    }
    target->pending_friend_requests.insert(acct.account_id);
    entry.action = "add_friend";
  } else if (command == "LIKE" && !arg.empty()) {
    acct.likes.insert(arg);
    entry.action = "like";
  } else if ((command == "SUBSCRIBE" || command == "UNSUBSCRIBE") && !arg.empty()) {
    SocialAccount* target = find_target(arg);
    if (!target) {
      bump("command_errors");
      send_text(from_phone, "No user named " + arg + ".");
      return;
    }
    if (command == "SUBSCRIBE") {
      acct.following.insert(target->account_id);
      entry.action = "subscribe";
    } else {
      acct.following.erase(target->account_id);
      entry.action = "unsubscribe";
    }
  }
  acct.activity_log.push_back(entry);
  bump("actions");
  if (spoofed) bump("actions_spoofed");
  fabric_.note("provider " + record_.name + " " + entry.action + " on " + acct.account_id + " via " + from_phone +
               (spoofed ? " spoofed" : ""));
}

// ---- DonationService ----

DonationService::DonationService(net::Fabric& fabric, ProviderRecord record, net::Endpoint self,
                                 net::Endpoint aggregator, ProviderOptions options)
    : ProviderNode(fabric, std::move(record), std::move(self), std::move(aggregator), std::move(options)) {}

void DonationService::on_text(const std::string& from_phone, const std::string& text, bool spoofed) {
  const auto [word, rest] = split_command(text);
  if (std::find(record_.keywords.begin(), record_.keywords.end(), word) != record_.keywords.end()) {
    pending_[from_phone] = PendingDonation{word, options_.donation_amount, now() + options_.donation_window, spoofed};
    bump("pledges");
    send_text(from_phone, "Reply YES to donate $" + std::to_string(options_.donation_amount) + " to " +
                              record_.name + ".");
    return;
  }
  if (rest.empty() && is_fixed_reply(word)) {
    auto it = pending_.find(from_phone);
    if (it == pending_.end() || now() > it->second.deadline) {
      if (it != pending_.end()) pending_.erase(it);
      bump("ignored_replies");
      return;
    }
    const Charge charge{now(), it->second.keyword, it->second.amount, spoofed || it->second.spoofed};
    pending_.erase(it);
    ledger_[from_phone].push_back(charge);
    bump("charges");
    if (charge.spoofed) bump("charges_spoofed");
    fabric_.note("provider " + record_.name + " charged " + from_phone + " " + std::to_string(charge.amount) +
                 (charge.spoofed ? " spoofed" : ""));
    send_text(from_phone, "Thank you for your donation to " + record_.name + ".");
    return;
  }
  bump("help_replies");
  send_text(from_phone, "Text " + (record_.keywords.empty() ? std::string("GIVE") : record_.keywords.front()) + " to " +
                            record_.short_code + " to donate.");
}

std::int64_t DonationService::total_charged() const {
  std::int64_t total = 0;
  for (const auto& [phone, charges] : ledger_) {
    for (const auto& c : charges) total += c.amount;
  }
  return total;
}

std::size_t DonationService::charge_count() const {
  std::size_t n = 0;
  for (const auto& [phone, charges] : ledger_) n += charges.size();
  return n;
}

std::size_t DonationService::spoofed_charge_count() const {
  std::size_t n = 0;
  for (const auto& [phone, charges] : ledger_) {
    n += static_cast<std::size_t>(std::count_if(charges.begin(), charges.end(), [](const Charge& c) { return c.spoofed; }));
  }
  return n;
}

std::unique_ptr<ProviderNode> make_provider(net::Fabric& fabric, ProviderRecord record, net::Endpoint self,
                                            net::Endpoint aggregator, ProviderOptions options) {
  if (record.enrollment == EnrollmentKind::AlwaysOn) {
    return std::make_unique<DonationService>(fabric, std::move(record), std::move(self), std::move(aggregator),
                                             std::move(options));
  }
  if (record.service_model == ServiceModel::ReqResp && record.non_query_ops && !record.money) {
    return std::make_unique<SocialService>(fabric, std::move(record), std::move(self), std::move(aggregator),
                                           std::move(options));
  }
  return std::make_unique<SubscriptionService>(fabric, std::move(record), std::move(self), std::move(aggregator),
                                               std::move(options));
}

}  // namespace smsim::providers
