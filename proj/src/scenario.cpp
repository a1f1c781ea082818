#include "smsim/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <set>
#include <sstream>

namespace smsim::scenario {

using providers::DonationService;
using providers::ProviderNode;
using providers::SocialService;
using providers::SubscriptionService;
using report::SimReport;

const std::vector<ScenarioInfo>& scenario_catalog() {
  static const std::vector<ScenarioInfo> kCatalog = {
      {"facebook_individual", "spoofed status, friend request and page like posted to one victim's social account"},
      {"like_farm", "many victims made to like one page through spoofed texts"},
      {"privacy_leak", "victims befriend the attacker and post their own number as a status"},
      {"donation", "pipelined keyword + YES donations charged to 100 victims"},
      {"spam_subscribe", "spoofed enrollments in notification services, then days of promotions"},
      {"rate_measure", "app path versus raw path send counts over 30 virtual minutes"},
      {"defense_mac", "attack suite against providers that verify a per-message MAC"},
      {"defense_440", "attack suite with carrier 440 approval challenges, with and without strict origin"},
      {"defense_strict_origin", "attack suite with From bound to the registered identity"},
      {"table1_audit", "threat classifier compared with the 64-row provider catalog"},
      {"legacy_baseline", "attack suite on circuit-switched carriers plus a direct spoof to the aggregator"},
  };
  return kCatalog;
}

bool is_known_scenario(std::string_view name) {
  const auto& c = scenario_catalog();
  return std::any_of(c.begin(), c.end(), [&](const ScenarioInfo& i) { return i.name == name; });
}

namespace {

constexpr std::string_view kCodePrefix = "Your confirmation code is ";

SimReport start_report(const ScenarioConfig& c) {
  SimReport r;
  r.scenario = c.scenario;
  r.seed = c.seed;
  return r;
}

std::string describe(std::uint64_t got, std::uint64_t want) {
  return "got " + std::to_string(got) + ", expected " + std::to_string(want);
}

void collect(World& w, SimReport& r, const std::string& prefix = "") {
  for (const auto& c : w.carriers()) r.add_all(prefix + "carrier." + c->id(), c->counters());
  r.add_all(prefix + "aggregator." + w.aggregator().id(), w.aggregator().counters());
  for (const auto& p : w.providers()) {
    if (!p->counters().empty()) r.add_all(prefix + "provider." + p->record().name, p->counters());
  }
  std::map<std::string, std::map<std::string, std::uint64_t>> by_role;
  for (const auto& [number, d] : w.devices()) {
    auto& sums = by_role[d->config().role == ue::Role::Attacker ? "attacker" : "honest"];
    for (const auto& [k, v] : d->counters()) sums[k] += v;
  }
  for (const auto& [role, sums] : by_role) r.add_all(prefix + "devices." + role, sums);
  const auto& s = w.fabric().stats();
  r.set(prefix + "network", "datagrams_sent", s.sent);
  r.set(prefix + "network", "datagrams_delivered", s.delivered);
  r.set(prefix + "network", "end_time_ms", w.fabric().now());
  const std::string tag = prefix.empty() ? "" : "[" + prefix.substr(0, prefix.size() - 1) + "] ";
  for (const auto& e : w.fabric().event_log()) r.event_log.push_back(tag + e);
}

void finish(World& w, const ScenarioConfig& c) { w.run_until(std::max(w.fabric().now(), c.duration_ms)); }

std::string require_param(const ScenarioConfig& c, const std::string& key) {
  const auto v = c.param<std::string>(key, "");
  if (v.empty()) throw ConfigError("scenario " + c.scenario + " needs parameter '" + key + "'");
  return v;
}

ue::Device& attacker_device(World& w, const ScenarioConfig& c) {
  const std::string n = require_param(c, "attacker");
  if (!w.has_device(n)) throw ConfigError("attacker " + n + " has no device");
  ue::Device& d = w.device(n);
  if (d.config().role != ue::Role::Attacker) throw ConfigError("device " + n + " is not an attacker");
  return d;
}

/// Honest devices in configuration order, minus `exclude`.
std::vector<std::string> honest_numbers(const ScenarioConfig& c, const std::set<std::string>& exclude = {}) {
  std::vector<std::string> out;
  for (const auto& d : c.devices) {
    if (d.role == ue::Role::Honest && !exclude.contains(d.number)) out.push_back(d.number);
  }
  return out;
}

/// Whether a raw spoof of `victim` by `attacker` should reach `provider` and be acted on.
bool spoof_expected(World& w, ue::Device& attacker, const std::string& victim, const ProviderNode& provider) {
  const ims::Carrier& carrier = w.carrier(attacker.config().carrier_id);
  const auto& policy = carrier.policy();
  if (policy.security_mode == ims::SecurityMode::Ipsec3gpp) return false;
  if (provider.record().runtime_auth == providers::RuntimeAuth::Mac) return false;
  switch (policy.effective_origin_check()) {
    case ims::OriginCheck::Strict:
      return victim == attacker.number();
    case ims::OriginCheck::CarrierScope:
      if (!carrier.is_subscriber(victim)) return false;
      break;
    case ims::OriginCheck::None:
      break;
  }
  if (policy.approval.active() && !attacker.config().raw_answers_440) return false;
  return true;
}

std::optional<std::string> latest_code(const ue::Device& d, const std::string& from) {
  const auto& inbox = d.inbox();
  for (auto it = inbox.rbegin(); it != inbox.rend(); ++it) {
    if (it->from == from && it->text.starts_with(kCodePrefix)) return it->text.substr(kCodePrefix.size());
  }
  return std::nullopt;
}

/// Logged-in web session adds the phone, the phone texts the trigger, and the
/// code it receives is typed back into the web session.
bool bind_by_text(World& w, SocialService& social, const std::string& account_id, ue::Device& phone) {
  social.web_add_phone(account_id, phone.number());
  const auto& rec = social.record();
  if (!rec.trigger_text.empty() && phone.send_sms_app(rec.short_code, rec.trigger_text) != ue::SendResult::Sent) {
    return false;
  }
  w.run_until(w.fabric().now() + 5 * kSecond);
  const auto code = latest_code(phone, rec.short_code);
  return code && social.web_enter_code(phone.number(), *code);
}

std::string account_for(const std::string& number) { return "acct-" + number; }

ProviderNode& provider_for_code(World& w, const std::string& code) {
  for (const auto& p : w.providers()) {
    if (p->record().short_code == code) return *p;
  }
  throw ConfigError("no provider behind short code " + code);
}

std::uint64_t routed_short_code(World& w) {
  std::uint64_t n = 0;
  for (const auto& c : w.carriers()) n += c->counter("routed_short_code");
  return n;
}

// ---- facebook_individual ----

SimReport run_facebook_individual(const ScenarioConfig& c) {
  SimReport r = start_report(c);
  World w(c);
  w.register_all();
  const std::string victim = require_param(c, "victim");
  const auto commands = c.param<std::vector<std::string>>("commands", {});
  const SimTime spacing = c.param<SimTime>("command_spacing_ms", kSecond);
  ue::Device& attacker = attacker_device(w, c);
  ue::Device& phone = w.device(victim);
  auto& fb = w.provider_as<SocialService>("Facebook");
  fb.create_account("victim", "Victim");
  fb.create_account("bob", "Bob");

  const bool bound = bind_by_text(w, fb, "victim", phone);
  r.check("victim phone bound by web session, trigger text and code", bound,
          bound ? "" : "the code never reached the victim's inbox or was refused");
  const std::size_t sent_before = phone.sends().size();
  const SimTime t0 = w.fabric().now() + kSecond;
  const std::string code = fb.record().short_code;
  for (std::size_t i = 0; i < commands.size(); ++i) {
    w.fabric().schedule_at(t0 + static_cast<SimTime>(i) * spacing,
                           [&attacker, victim, code, cmd = commands[i]] { attacker.attacker_send_raw(victim, code, cmd); });
  }
  finish(w, c);

  const auto* acct = fb.account("victim");
  std::size_t found = 0;
  std::size_t spoofed_entries = 0;
  for (const auto& cmd : commands) {
    const bool hit = std::any_of(acct->activity_log.begin(), acct->activity_log.end(), [&](const auto& e) {
      return e.text == cmd && e.origin_phone == victim && e.spoofed;
    });
    found += hit ? 1 : 0;
  }
  for (const auto& e : acct->activity_log) spoofed_entries += e.spoofed ? 1 : 0;
  const std::size_t victim_sent = phone.sends().size() - sent_before;
  const bool expected = spoof_expected(w, attacker, victim, fb);
  r.set("facebook", "commands_sent", commands.size());
  r.set("facebook", "commands_in_victim_log", found);
  r.set("facebook", "victim_log_entries", acct->activity_log.size());
  r.set("facebook", "victim_sent_during_attack", victim_sent);
  r.set("facebook", "spoof_expected", expected);
  if (expected) {
    r.check("every command appears in the victim's log with the victim's number", found == commands.size(),
            describe(found, commands.size()));
  } else {
    r.check("no spoofed command reaches the victim's account", spoofed_entries == 0, describe(spoofed_entries, 0));
  }
  r.check("victim device sent nothing during the attack", victim_sent == 0, describe(victim_sent, 0));
  collect(w, r);
  return r;
}

// ---- like_farm ----

SimReport run_like_farm(const ScenarioConfig& c) {
  SimReport r = start_report(c);
  World w(c);
  w.register_all();
  ue::Device& attacker = attacker_device(w, c);
  const auto victims = honest_numbers(c);
  const std::string page = c.param<std::string>("page", "Lakers Nation");
  const SimTime spacing = c.param<SimTime>("send_interval_ms", 730);
  auto& fb = w.provider_as<SocialService>("Facebook");
  for (const auto& v : victims) {
    fb.create_account(account_for(v), "User " + v);
    fb.bind(account_for(v), v);
  }
  const SimTime t0 = w.fabric().now() + kSecond;
  const std::string code = fb.record().short_code;
  const std::string text = "Like " + page;
  for (std::size_t i = 0; i < victims.size(); ++i) {
    w.fabric().schedule_at(t0 + static_cast<SimTime>(i) * spacing,
                           [&attacker, v = victims[i], code, text] { attacker.attacker_send_raw(v, code, text); });
  }
  if (!victims.empty()) {
    // A repeated like from the same account must not count twice.
    w.fabric().schedule_at(t0 + static_cast<SimTime>(victims.size()) * spacing,
                           [&attacker, v = victims.front(), code, text] { attacker.attacker_send_raw(v, code, text); });
  }
  finish(w, c);
  std::size_t expected = 0;
  for (const auto& v : victims) expected += spoof_expected(w, attacker, v, fb) ? 1 : 0;
  const std::size_t likes = fb.page_likes(page);
  r.set("like_farm", "victims", victims.size());
  r.set("like_farm", "page_likes", likes);
  r.check("page like count equals the number of spoofable victims", likes == expected, describe(likes, expected));
  collect(w, r);
  return r;
}

// ---- privacy_leak ----

SimReport run_privacy_leak(const ScenarioConfig& c) {
  SimReport r = start_report(c);
  World w(c);
  w.register_all();
  ue::Device& attacker = attacker_device(w, c);
  const auto victims = honest_numbers(c);
  const std::string attacker_account = c.param<std::string>("attacker_account", "ResearchTwo");
  const std::string status_template = c.param<std::string>("status_template", "My number is {victim}");
  const SimTime spacing = c.param<SimTime>("send_interval_ms", 730);
  auto& fb = w.provider_as<SocialService>("Facebook");
  fb.create_account(attacker_account, attacker_account);
  for (const auto& v : victims) {
    fb.create_account(account_for(v), "User " + v);
    fb.bind(account_for(v), v);
  }
  const SimTime t0 = w.fabric().now() + kSecond;
  const std::string code = fb.record().short_code;
  for (std::size_t i = 0; i < victims.size(); ++i) {
    const SimTime at = t0 + static_cast<SimTime>(2 * i) * spacing;
    w.fabric().schedule_at(at, [&attacker, v = victims[i], code, add = "Add " + attacker_account] {
      attacker.attacker_send_raw(v, code, add);
    });
    w.fabric().schedule_at(at + spacing, [&attacker, v = victims[i], code, status = ue::render_template(status_template, victims[i])] {
      attacker.attacker_send_raw(v, code, status);
    });
  }
  finish(w, c);

  auto leaked_count = [&] {
    std::size_t n = 0;
    for (const auto& v : victims) {
      const auto seen = fb.visible_statuses(attacker_account, account_for(v));
      if (std::any_of(seen.begin(), seen.end(), [&](const auto& e) { return e.text.find(v) != std::string::npos; })) ++n;
    }
    return n;
  };
  const std::size_t before = leaked_count();
  std::size_t accepted = 0;
  const auto pending = fb.account(attacker_account)->pending_friend_requests;
  for (const auto& requester : pending) accepted += fb.accept_friend_request(attacker_account, requester) ? 1 : 0;
  const std::size_t leaked = leaked_count();
  std::size_t expected = 0;
  for (const auto& v : victims) expected += spoof_expected(w, attacker, v, fb) ? 1 : 0;
  r.set("privacy_leak", "victims", victims.size());
  r.set("privacy_leak", "friend_requests_accepted", accepted);
  r.set("privacy_leak", "visible_before_accepting", before);
  r.set("privacy_leak", "numbers_leaked", leaked);
  r.check("statuses stay private until the attacker accepts", before == 0, describe(before, 0));
  r.check("attacker reads the number of every spoofable victim", leaked == expected, describe(leaked, expected));
  collect(w, r);
  return r;
}

// ---- donation ----

SimReport run_donation(const ScenarioConfig& c) {
  SimReport r = start_report(c);
  World w(c);
  w.register_all();
  ue::Device& attacker = attacker_device(w, c);
  const auto victims = honest_numbers(c);
  const std::string target = c.param<std::string>("target_code", "90999");
  auto* charity = dynamic_cast<DonationService*>(&provider_for_code(w, target));
  if (!charity) throw ConfigError("short code " + target + " is not a donation service");
  ue::AttackScript script;
  script.victim_numbers = victims;
  script.target_code = target;
  script.message_template = c.param<std::string>("keyword", "REDCROSS");
  script.inter_message_delay = c.param<SimTime>("send_interval_ms", 730);
  script.second_message = ue::SecondMessage{c.param<std::string>("confirm_text", "YES"),
                                            c.param<SimTime>("second_delay_ms", 5 * kSecond)};
  const SimTime t0 = w.fabric().now() + kSecond;
  w.fabric().schedule_at(t0, [&attacker, script] { attacker.run_attack_script(script); });
  finish(w, c);

  std::size_t expected = 0;
  for (const auto& v : victims) expected += spoof_expected(w, attacker, v, *charity) ? 1 : 0;
  const std::size_t charges = charity->charge_count();
  const auto total = static_cast<std::uint64_t>(charity->total_charged());
  const std::uint64_t routed = routed_short_code(w);
  const std::uint64_t amount = 10;
  r.set("donation", "victims", victims.size());
  r.set("donation", "charges", charges);
  r.set("donation", "spoofed_charges", charity->spoofed_charge_count());
  r.set("donation", "total_charged", total);
  r.set("donation", "routed_messages", routed);
  r.check("one charge per spoofable victim", charges == expected, describe(charges, expected));
  r.check("total charged", total == expected * amount, describe(total, expected * amount));
  r.check("two routed messages per spoofable victim", routed == 2 * expected, describe(routed, 2 * expected));
  collect(w, r);
  return r;
}

// ---- spam_subscribe ----

SimReport run_spam_subscribe(const ScenarioConfig& c) {
  SimReport r = start_report(c);
  World w(c);
  w.register_all();
  ue::Device& attacker = attacker_device(w, c);
  const auto victims = c.param<std::vector<std::string>>("victims", honest_numbers(c));
  const std::string join = c.param<std::string>("join_text", "JOIN");
  const std::string confirm = c.param<std::string>("confirm_text", "YES");
  const SimTime confirm_delay = c.param<SimTime>("confirm_delay_ms", 5 * kSecond);
  const SimTime period = c.param<SimTime>("notification_period_ms", 24 * kHour);

  std::vector<SubscriptionService*> services;
  for (const auto& p : w.providers()) {
    if (auto* s = dynamic_cast<SubscriptionService*>(p.get())) services.push_back(s);
  }
  const SimTime t0 = w.fabric().now() + kSecond;
  SimTime at = t0;
  for (const auto& v : victims) {
    if (!w.has_device(v)) throw ConfigError("spam victim " + v + " has no device");
    for (auto* s : services) {
      const std::string code = s->record().short_code;
      w.fabric().schedule_at(at, [&attacker, v, code, join] { attacker.attacker_send_raw(v, code, join); });
      w.fabric().schedule_at(at + confirm_delay,
                             [&attacker, v, code, confirm] { attacker.attacker_send_raw(v, code, confirm); });
      at += 10 * kSecond;
    }
  }
  w.schedule_notifications(c.duration_ms);
  finish(w, c);

  const auto ticks = static_cast<std::uint64_t>(period > 0 ? c.duration_ms / period : 0);
  for (auto* s : services) {
    const auto& rec = s->record();
    const bool spam_model = providers::classify_threat(rec) == providers::Threat::SpamLawsuit;
    std::uint64_t expected = 0;
    for (const auto& v : victims) expected += (spam_model && spoof_expected(w, attacker, v, *s)) ? 1 : 0;
    const std::uint64_t enrolled = s->counter("enrolled_spoofed");
    const std::string group = "spam." + rec.name;
    r.set(group, "enrollment", std::string(providers::to_string(rec.enrollment)));
    r.set(group, "spoofed_enrollments", enrolled);
    r.set(group, "unsolicited_notifications", s->unsolicited_total());
    r.check(rec.name + " spoofed enrollments", enrolled == expected, describe(enrolled, expected));
    if (rec.service_model == providers::ServiceModel::SubNotif) {
      r.check(rec.name + " promotions to spoof-enrolled victims", s->unsolicited_total() == expected * ticks,
              describe(s->unsolicited_total(), expected * ticks));
    }
    if (rec.enrollment == providers::EnrollmentKind::ThreeStepSimple && expected > 0) {
      for (const auto& v : victims) {
        if (w.device(v).config().inbox_enabled) continue;
        const bool subscribed = s->enrollment_state(v) == providers::EnrollState::Subscribed;
        r.check(rec.name + " enrolls " + v + " whose inbox is disabled", subscribed,
                std::string(providers::to_string(s->enrollment_state(v))));
      }
    }
  }
  r.set("spam", "notification_ticks", ticks);
  collect(w, r);
  return r;
}

// ---- rate_measure ----

struct RateRun {
  std::uint64_t count = 0;
  SimTime window_end = 0;
};

RateRun measure_rate(const ScenarioConfig& c, bool raw, std::optional<ims::RateLimit> limit, SimReport& r,
                     const std::string& prefix) {
  ScenarioConfig cfg = c;
  for (auto& carrier : cfg.carriers) carrier.policy.rate_limit = limit;
  World w(cfg);
  w.register_all();
  ue::Device& attacker = attacker_device(w, cfg);
  ue::Device& app = w.device(require_param(cfg, "app_sender"));
  const SimTime service = cfg.param<SimTime>("service_time_ms", 730);
  if (service <= 0) throw ConfigError("service_time_ms must be positive");
  const SimTime window = cfg.param<SimTime>("window_ms", 30 * kMinute);
  const SimTime t0 = w.fabric().now() + kSecond;
  std::uint64_t app_sent = 0;
  for (SimTime t = t0; t < t0 + window; t += service) {
    if (raw) {
      w.fabric().schedule_at(t, [&attacker, to = app.number(), from = attacker.number()] {
        attacker.attacker_send_raw(from, to, "rate probe");
      });
    } else {
      w.fabric().schedule_at(t, [&app, &app_sent, to = attacker.number()] {
        if (app.send_sms_app(to, "rate probe") == ue::SendResult::Sent) ++app_sent;
      });
    }
  }
  w.run_until(t0 + window + 10 * kSecond);
  collect(w, r, prefix);
  return {raw ? attacker.counter("raw_accepted") : app_sent, t0 + window};
}

SimReport run_rate_measure(const ScenarioConfig& c) {
  SimReport r = start_report(c);
  const auto limit = c.param<std::size_t>("throttle_limit", 1002);
  const SimTime window = c.param<SimTime>("window_ms", 30 * kMinute);
  const auto reference = c.param<double>("reference_raw_count", 2459.0);
  const auto tolerance = c.param<double>("raw_tolerance", 0.02);
  const auto min_ratio = c.param<double>("min_ratio", 33.0);

  const auto app = measure_rate(c, false, std::nullopt, r, "app.");
  const auto raw = measure_rate(c, true, std::nullopt, r, "raw.");
  const auto throttled = measure_rate(c, true, ims::RateLimit{limit, window}, r, "throttled.");
  const double deviation = reference > 0 ? std::abs(static_cast<double>(raw.count) - reference) / reference : 0.0;
  const double ratio = app.count ? static_cast<double>(throttled.count) / static_cast<double>(app.count) : 0.0;
  r.set("rate", "app_sent", app.count);
  r.set("rate", "raw_unthrottled_accepted", raw.count);
  r.set("rate", "raw_throttled_accepted", throttled.count);
  r.set("rate", "raw_deviation_from_reference", deviation);
  r.set("rate", "throttled_to_app_ratio", ratio);
  r.check("app path stops at the 30-message window cap", app.count == ue::Device::kAppWindowCap,
          describe(app.count, ue::Device::kAppWindowCap));
  std::ostringstream d;
  d << raw.count << " vs reference " << reference << " (deviation " << deviation << ")";
  r.check("raw path unthrottled count within tolerance", deviation <= tolerance, d.str());
  r.check("raw path under the carrier limit", throttled.count == limit, describe(throttled.count, limit));
  std::ostringstream q;
  q << "ratio " << ratio << ", minimum " << min_ratio;
  r.check("throttled raw path outpaces the app path", ratio >= min_ratio, q.str());
  return r;
}

// ---- attack suite ----

struct SuiteOutcome {
  std::uint64_t victims = 0;
  std::uint64_t fb_spoofed_actions = 0;
  std::uint64_t fb_legit_actions = 0;
  std::uint64_t charges = 0;
  std::uint64_t spoofed_charges = 0;
  std::uint64_t legit_charges = 0;
  std::uint64_t spoofed_enrollments = 0;
  std::uint64_t mac_verified = 0;
  std::uint64_t mac_verified_spoofed = 0;
  std::uint64_t mac_rejected = 0;
  std::uint64_t legit_to_mac_providers = 0;
  std::uint64_t challenges_440 = 0;
};

using SuiteExtra = std::function<void(World&, SimTime)>;

/// The social-account, donation and subscription attacks together, plus a
/// little legitimate traffic from honest users.
SuiteOutcome run_suite(const ScenarioConfig& c, SimReport& r, const std::string& prefix,
                       const SuiteExtra& extra = {}) {
  World w(c);
  w.register_all();
  ue::Device& attacker = attacker_device(w, c);
  const std::string victim = require_param(c, "victim");
  const std::string donor = require_param(c, "legit_donor");
  const auto commands = c.param<std::vector<std::string>>("commands", {});
  const std::string keyword = c.param<std::string>("donation_keyword", "REDCROSS");
  const std::string confirm = c.param<std::string>("confirm_text", "YES");
  const SimTime spacing = c.param<SimTime>("send_interval_ms", 730);
  const SimTime second = c.param<SimTime>("second_delay_ms", 5 * kSecond);

  auto& fb = w.provider_as<SocialService>("Facebook");
  auto& charity = w.provider_as<DonationService>("Red Cross");
  auto& staples = w.provider_as<SubscriptionService>("Staple");
  auto& costco = w.provider_as<SubscriptionService>("Costco");
  fb.create_account("victim", "Victim");
  fb.create_account("bob", "Bob");
  fb.bind("victim", victim);

  const SimTime t0 = w.fabric().now() + kSecond;
  auto& f = w.fabric();
  ue::Device& victim_phone = w.device(victim);
  ue::Device& donor_phone = w.device(donor);
  f.schedule_at(t0, [&victim_phone, code = fb.record().short_code] {
    victim_phone.send_sms_app(code, "Back from the game");
  });
  f.schedule_at(t0 + kSecond, [&donor_phone, code = charity.record().short_code, keyword] {
    donor_phone.send_sms_app(code, keyword);
  });
  f.schedule_at(t0 + kSecond + second, [&donor_phone, code = charity.record().short_code, confirm] {
    donor_phone.send_sms_app(code, confirm);
  });

  for (std::size_t i = 0; i < commands.size(); ++i) {
    f.schedule_at(t0 + 10 * kSecond + static_cast<SimTime>(i) * kSecond,
                  [&attacker, victim, code = fb.record().short_code, cmd = commands[i]] {
                    attacker.attacker_send_raw(victim, code, cmd);
                  });
  }
  f.schedule_at(t0 + 15 * kSecond, [&attacker, victim, code = staples.record().short_code] {
    attacker.attacker_send_raw(victim, code, "JOIN");
  });
  f.schedule_at(t0 + 16 * kSecond, [&attacker, victim, code = costco.record().short_code] {
    attacker.attacker_send_raw(victim, code, "JOIN");
  });
  f.schedule_at(t0 + 16 * kSecond + second, [&attacker, victim, code = costco.record().short_code, confirm] {
    attacker.attacker_send_raw(victim, code, confirm);
  });

  ue::AttackScript script;
  script.victim_numbers = honest_numbers(c, {donor});
  script.target_code = charity.record().short_code;
  script.message_template = keyword;
  script.inter_message_delay = spacing;
  script.second_message = ue::SecondMessage{confirm, second};
  f.schedule_at(t0 + 25 * kSecond, [&attacker, script] { attacker.run_attack_script(script); });
  if (extra) extra(w, t0);
  finish(w, c);

  SuiteOutcome o;
  o.victims = script.victim_numbers.size();
  o.fb_spoofed_actions = fb.counter("actions_spoofed");
  o.fb_legit_actions = fb.counter("actions") - o.fb_spoofed_actions;
  o.charges = charity.charge_count();
  o.spoofed_charges = charity.spoofed_charge_count();
  o.legit_charges = o.charges - o.spoofed_charges;
  o.spoofed_enrollments = staples.counter("enrolled_spoofed") + costco.counter("enrolled_spoofed");
  std::set<std::string> mac_codes;
  for (const auto& p : w.providers()) {
    if (p->record().runtime_auth != providers::RuntimeAuth::Mac) continue;
    mac_codes.insert(p->record().short_code);
    o.mac_verified += p->counter("mac_verified");
    o.mac_verified_spoofed += p->counter("verified_spoofed");
    o.mac_rejected += p->counter("mac_invalid") + p->counter("mac_unauthenticated");
  }
  for (const auto& [number, d] : w.devices()) {
    for (const auto& s : d->sends()) {
      if (!s.raw && mac_codes.contains(s.recipient) && s.final_code == 200) ++o.legit_to_mac_providers;
    }
  }
  for (const auto& cptr : w.carriers()) o.challenges_440 += cptr->counter("challenged_440");

  const std::string g = prefix + "suite";
  r.set(g, "victims", o.victims);
  r.set(g, "social_spoofed_actions", o.fb_spoofed_actions);
  r.set(g, "social_legit_actions", o.fb_legit_actions);
  r.set(g, "charges", o.charges);
  r.set(g, "spoofed_charges", o.spoofed_charges);
  r.set(g, "legit_charges", o.legit_charges);
  r.set(g, "spoofed_enrollments", o.spoofed_enrollments);
  r.set(g, "mac_verified", o.mac_verified);
  r.set(g, "mac_verified_spoofed", o.mac_verified_spoofed);
  r.set(g, "mac_rejected", o.mac_rejected);
  r.set(g, "legit_to_mac_providers", o.legit_to_mac_providers);
  r.set(g, "challenges_440", o.challenges_440);
  collect(w, r, prefix);
  return o;
}

/// Alternating legitimate and tampered texts from one bound phone; the
/// aggregator flips one random bit of every second message's user data.
std::pair<std::uint64_t, std::uint64_t> run_tamper(const ScenarioConfig& c, SimReport& r) {
  World w(c);
  w.register_all();
  const std::string victim = require_param(c, "victim");
  const auto count = c.param<std::size_t>("tamper_count", 256);
  auto& fb = w.provider_as<SocialService>("Facebook");
  fb.create_account("victim", "Victim");
  fb.bind("victim", victim);
  const std::string code = fb.record().short_code;
  std::mt19937_64 rng(mix_seed(c.seed, 77));
  std::uint64_t seen = 0;
  std::uint64_t flipped = 0;
  w.aggregator().mutation_hook = [&](sip::SipEnvelope& env) {
    sms::SmsPdu pdu = sms::decode_pdu(env.body);
    if (pdu.dest.digits != code || ++seen % 2 == 1) return;
    auto& payload = pdu.bearer.user_data.payload;
    if (payload.empty()) return;
    std::uniform_int_distribution<std::size_t> bit(0, payload.size() * 8 - 1);
    const std::size_t b = bit(rng);
    payload[b / 8] ^= static_cast<std::uint8_t>(1u << (b % 8));
    env.set_body(sms::encode_pdu(pdu));
    ++flipped;
  };
  ue::Device& phone = w.device(victim);
  const SimTime t0 = w.fabric().now() + kSecond;
  for (std::size_t i = 0; i < 2 * count; ++i) {
    w.fabric().schedule_at(t0 + static_cast<SimTime>(i) * kSecond, [&phone, code, i] {
      phone.send_sms_app(code, "status " + std::to_string(i));
    });
  }
  w.run_until(t0 + static_cast<SimTime>(2 * count) * kSecond + 10 * kSecond);
  r.set("tamper", "messages", 2 * count);
  r.set("tamper", "flipped", flipped);
  r.set("tamper", "detected", fb.counter("mac_invalid"));
  r.set("tamper", "verified", fb.counter("mac_verified"));
  collect(w, r, "tamper.");
  return {flipped, fb.counter("mac_invalid")};
}

void check_spoofs_blocked(SimReport& r, const SuiteOutcome& o, const std::string& label) {
  r.check(label + ": no social actions from spoofed texts", o.fb_spoofed_actions == 0,
          describe(o.fb_spoofed_actions, 0));
  r.check(label + ": no charges from spoofed texts", o.spoofed_charges == 0, describe(o.spoofed_charges, 0));
}

SimReport run_defense_mac(const ScenarioConfig& c) {
  SimReport r = start_report(c);
  if (!c.defenses.mac) throw ConfigError("defense_mac needs a defenses.mac block");
  const SuiteOutcome o = run_suite(c, r, "");
  check_spoofs_blocked(r, o, "MAC");
  r.check("no spoofed text verifies", o.mac_verified_spoofed == 0, describe(o.mac_verified_spoofed, 0));
  r.check("every legitimate text to a MAC provider verifies",
          o.legit_to_mac_providers > 0 && o.mac_verified == o.legit_to_mac_providers,
          describe(o.mac_verified, o.legit_to_mac_providers));
  const double overhead = c.defenses.mac->config.overhead_fraction();
  r.set("mac", "tag_length", c.defenses.mac->config.tag_length);
  r.set("mac", "overhead_fraction", overhead);
  std::ostringstream d;
  d << overhead;
  r.check("tag overhead within 14.3% of the SMS capacity", overhead <= defenses::kMaxOverheadFraction, d.str());
  const auto [flipped, detected] = run_tamper(c, r);
  const auto want = c.param<std::size_t>("tamper_count", 256);
  r.check("every single-bit tamper is detected", flipped == want && detected == want,
          std::to_string(detected) + "/" + std::to_string(flipped) + " of " + std::to_string(want));
  return r;
}

SimReport run_defense_440(const ScenarioConfig& c) {
  SimReport r = start_report(c);
  if (!c.defenses.approval || !c.defenses.approval->active()) {
    throw ConfigError("defense_440 needs defenses.approval_triggers with premium codes or a burst threshold");
  }
  ScenarioConfig open = c;
  open.defenses.strict_origin = false;
  const SuiteOutcome a = run_suite(open, r, "challenge_only.");
  ScenarioConfig strict = c;
  strict.defenses.strict_origin = true;
  const SuiteOutcome b = run_suite(strict, r, "challenge_strict.");

  // Without strict origin the attacker's own stack answers the 440 sent to
  // its source address, so the challenge alone stops nothing.
  r.check("440 only: attacker answers its own challenges and spoofed charges go through",
          a.challenges_440 > 0 && a.spoofed_charges == a.victims, describe(a.spoofed_charges, a.victims));
  check_spoofs_blocked(r, b, "440 + strict origin");
  r.check("440 + strict origin: the approved legitimate donation is charged", b.legit_charges == 1,
          describe(b.legit_charges, 1));
  return r;
}

void record_matrix(SimReport& r, const std::vector<SpoofCase>& cases, const std::string& group) {
  std::uint64_t delivered = 0;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    delivered += cases[i].delivered ? 1 : 0;
    r.set(group, "case" + std::to_string(i) + "_" + cases[i].spoofed_from + "_to_" + cases[i].recipient,
          cases[i].delivered);
  }
  r.set(group, "delivered", delivered);
}

SimReport run_defense_strict_origin(const ScenarioConfig& c) {
  SimReport r = start_report(c);
  ScenarioConfig cfg = c;
  cfg.defenses.strict_origin = true;
  const SuiteOutcome o = run_suite(cfg, r, "");
  check_spoofs_blocked(r, o, "strict origin");
  r.check("strict origin: no spoofed enrollments", o.spoofed_enrollments == 0, describe(o.spoofed_enrollments, 0));
  r.check("strict origin: legitimate social update still posted", o.fb_legit_actions == 1,
          describe(o.fb_legit_actions, 1));
  r.check("strict origin: legitimate donation still charged", o.legit_charges == 1, describe(o.legit_charges, 1));
  const auto cases = run_spoof_matrix(ims::OriginCheck::Strict, c.seed);
  record_matrix(r, cases, "spoof_matrix");
  const auto delivered = static_cast<std::uint64_t>(std::count_if(cases.begin(), cases.end(), [](auto& s) { return s.delivered; }));
  r.check("strict origin: no cross- or same-carrier spoof delivered", delivered == 0, describe(delivered, 0));
  return r;
}

SimReport run_legacy_baseline(const ScenarioConfig& c) {
  SimReport r = start_report(c);
  std::uint64_t non_carrier_rejected = 0;
  std::uint64_t pledges_before = 0;
  std::uint64_t pledges_after = 0;
  const std::string victim = require_param(c, "victim");
  auto extra = [&](World& w, SimTime t0) {
    // A host outside any carrier writes straight to the aggregator.
    ue::Device& attacker = attacker_device(w, c);
    auto& charity = w.provider_as<DonationService>("Red Cross");
    const std::string code = charity.record().short_code;
    w.fabric().schedule_at(t0 + 200 * kSecond, [&w, &attacker, &charity, &pledges_before, victim, code] {
      pledges_before = charity.counter("pledges");
      const sms::SmsPdu pdu = sms::make_deliver(victim, code, sms::UserData::ascii("REDCROSS"));
      w.fabric().send_datagram({attacker.config().device_address, 40000}, w.aggregator().endpoint(),
                               sip::serialize(ims::relay_message(victim, code, sms::encode_pdu(pdu), "direct-1", true)),
                               "MESSAGE");
    });
    w.fabric().schedule_at(t0 + 205 * kSecond, [&w, &charity, &non_carrier_rejected, &pledges_after] {
      non_carrier_rejected = w.aggregator().counters().contains("rejected_non_carrier")
                                 ? w.aggregator().counters().at("rejected_non_carrier")
                                 : 0;
      pledges_after = charity.counter("pledges");
    });
  };
  const SuiteOutcome o = run_suite(c, r, "", extra);
  check_spoofs_blocked(r, o, "circuit-switched");
  r.check("circuit-switched: no spoofed enrollments", o.spoofed_enrollments == 0, describe(o.spoofed_enrollments, 0));
  r.set("network_spoof", "aggregator_rejected", non_carrier_rejected);
  r.set("network_spoof", "pledges_created", pledges_after - pledges_before);
  r.check("aggregator drops text that did not come from a carrier",
          non_carrier_rejected == 1 && pledges_after == pledges_before, describe(non_carrier_rejected, 1));
  return r;
}

// ---- table1_audit ----

SimReport run_table1_audit(const ScenarioConfig& c) {
  SimReport r = start_report(c);
  std::vector<providers::ProviderRecord> records;
  try {
    records = c.providers.catalog == "builtin" ? providers::builtin_catalog()
                                               : providers::load_catalog(c.providers.catalog);
  } catch (const providers::CatalogError& e) {
    throw ConfigError(e.what());
  }
  records.insert(records.end(), c.providers.records.begin(), c.providers.records.end());
  const auto audit = providers::audit_catalog(records);
  nlohmann::json matrix = nlohmann::json::array();
  for (const auto& row : audit.rows) {
    matrix.push_back({{"name", row.name},
                      {"short_code", row.short_code},
                      {"predicted", std::string(providers::to_string(row.predicted))},
                      {"truth", row.truth ? std::string(providers::to_string(*row.truth)) : std::string("unknown")},
                      {"match", row.match},
                      {"exception", row.exception}});
  }
  r.threat_matrix = std::move(matrix);
  const auto expected = c.param<std::size_t>("expected_vulnerable", 53);
  const auto min_matches = c.param<std::size_t>("min_matches", 61);
  r.set("audit", "rows", audit.rows.size());
  r.set("audit", "matches", audit.matches);
  r.set("audit", "predicted_vulnerable", audit.predicted_vulnerable);
  r.set("audit", "audited_vulnerable", audit.audited_vulnerable);
  r.set("audit", "catalog_vulnerable", audit.truth_vulnerable);
  r.set("audit", "mismatches", audit.mismatches.size());
  r.check("vulnerable count", audit.audited_vulnerable == expected, describe(audit.audited_vulnerable, expected));
  r.check("per-row agreement", audit.matches >= min_matches,
          std::to_string(audit.matches) + " of " + std::to_string(audit.rows.size()) + ", minimum " +
              std::to_string(min_matches));
  std::set<std::string> exceptions(audit.exceptions.begin(), audit.exceptions.end());
  const bool only_exceptions = std::all_of(audit.mismatches.begin(), audit.mismatches.end(),
                                           [&](const std::string& n) { return exceptions.contains(n); });
  std::string names;
  for (const auto& n : audit.mismatches) names += (names.empty() ? "" : ", ") + n;
  r.check("mismatches only on exception rows", only_exceptions, names.empty() ? "none" : names);
  return r;
}

}  // namespace

std::vector<SpoofCase> run_spoof_matrix(ims::OriginCheck mode, std::uint64_t seed) {
  ScenarioConfig c;
  c.scenario = "spoof_matrix";
  c.seed = seed;
  c.network.seed = mix_seed(seed, 1);
  c.providers.include_all = false;
  for (const char* id : {"OP-I", "OP-II"}) {
    CarrierSpec s;
    s.policy.carrier_id = id;
    s.policy.origin_check = mode;
    c.carriers.push_back(s);
  }
  auto add = [&](const std::string& number, const std::string& carrier, ue::Role role) {
    DeviceSpec d;
    d.number = number;
    d.carrier = carrier;
    d.role = role;
    c.devices.push_back(d);
  };
  const std::string attacker = "3105552501";
  add(attacker, "OP-I", ue::Role::Attacker);
  add("3105554347", "OP-I", ue::Role::Honest);
  add("3105554348", "OP-I", ue::Role::Honest);
  add("4155550100", "OP-II", ue::Role::Honest);
  add("4155550101", "OP-II", ue::Role::Honest);

  World w(c);
  w.register_all();
  std::vector<SpoofCase> cases;
  for (const std::string from : {"3105554347", "4155550100"}) {
    for (const std::string to : {"3105554348", "4155550101"}) {
      cases.push_back({from, to, w.carrier("OP-I").is_subscriber(from), false});
    }
  }
  ue::Device& dev = w.device(attacker);
  const SimTime t0 = w.fabric().now() + kSecond;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    w.fabric().schedule_at(t0 + static_cast<SimTime>(i) * kSecond, [&dev, &cases, i] {
      dev.attacker_send_raw(cases[i].spoofed_from, cases[i].recipient, "probe " + std::to_string(i));
    });
  }
  w.run_until(t0 + 10 * kSecond);
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const auto& inbox = w.device(cases[i].recipient).inbox();
    cases[i].delivered = std::any_of(inbox.begin(), inbox.end(), [&](const ue::InboxEntry& e) {
      return e.from == cases[i].spoofed_from && e.text == "probe " + std::to_string(i);
    });
  }
  return cases;
}

report::SimReport run_scenario(const ScenarioConfig& config) {
  const std::string& s = config.scenario;
  if (s == "facebook_individual") return run_facebook_individual(config);
  if (s == "like_farm") return run_like_farm(config);
  if (s == "privacy_leak") return run_privacy_leak(config);
  if (s == "donation") return run_donation(config);
  if (s == "spam_subscribe") return run_spam_subscribe(config);
  if (s == "rate_measure") return run_rate_measure(config);
  if (s == "defense_mac") return run_defense_mac(config);
  if (s == "defense_440") return run_defense_440(config);
  if (s == "defense_strict_origin") return run_defense_strict_origin(config);
  if (s == "table1_audit") return run_table1_audit(config);
  if (s == "legacy_baseline") return run_legacy_baseline(config);
  throw ConfigError("unknown scenario '" + s + "'");
}

}  // namespace smsim::scenario
