// Acceptance gate: one PASS/FAIL line per criterion, non-zero exit on any FAIL.
#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>

#include "enrollment_search.hpp"
#include "smsim/bytes.hpp"
#include "smsim/report.hpp"
#include "smsim/scenario.hpp"
#include "smsim/sms_codec.hpp"

namespace {

using namespace smsim;
using report::SimReport;

// Pinned tolerances.
constexpr double kRawReference = 2459.0;
constexpr double kRawTolerance = 0.02;
constexpr std::uint64_t kAppCap = 30;
constexpr std::uint64_t kThrottle = 1002;
constexpr double kMinRatio = 33.0;
constexpr std::uint64_t kDonationVictims = 100;
constexpr std::uint64_t kDonationAmount = 10;
constexpr std::uint64_t kVulnerable = 53;
constexpr std::uint64_t kMinMatches = 61;
constexpr double kMaxOverhead = 0.143;
constexpr std::uint64_t kTamperFlips = 256;
constexpr int kEnrollSeeds = 100;

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool cond, const std::string& what) {
    if (!cond) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

std::uint64_t u(const SimReport& r, const std::string& key) {
  const auto& v = r.get(key);
  return v.is_number() ? v.get<std::uint64_t>() : 0;
}

double f(const SimReport& r, const std::string& key) {
  const auto& v = r.get(key);
  return v.is_number() ? v.get<double>() : -1.0;
}

SimReport run_default(const std::string& name) { return scenario::run_scenario(scenario::default_config(name)); }

void criterion_codec(Outcome& o) {
  sms::SmsPdu pdu;
  pdu.teleservice_id = 4098;
  pdu.dest = sms::SmsAddress::dtmf("32665");
  pdu.bearer.kind = sms::MessageKind::Deliver;
  pdu.bearer.user_data = sms::UserData::ascii("yyyy8");
  const Bytes wire = sms::encode_pdu(pdu);
  const std::string hex = to_hex(wire);
  o.detail << hex;
  o.require(hex == "00000210020404014c9994080d00031000000106102f9f3e7cb8", "golden bytes");
  o.require(pdu.dest.digits.size() == 5 && pdu.bearer.user_data.num_fields() == 5, "num_fields 5");
  o.require(sms::decode_pdu(wire) == pdu, "decode roundtrip");
}

void criterion_spoof_matrix(Outcome& o) {
  for (auto mode : {ims::OriginCheck::None, ims::OriginCheck::CarrierScope, ims::OriginCheck::Strict}) {
    const auto cases = scenario::run_spoof_matrix(mode, 11);
    std::size_t correct = 0;
    std::size_t delivered = 0;
    for (const auto& c : cases) {
      bool want = false;
      switch (mode) {
        case ims::OriginCheck::None: want = true; break;
        case ims::OriginCheck::CarrierScope: want = c.from_attacker_carrier; break;
        case ims::OriginCheck::Strict: want = false; break;
      }
      correct += c.delivered == want ? 1 : 0;
      delivered += c.delivered ? 1 : 0;
    }
    o.detail << ' ' << ims::to_string(mode) << " " << correct << "/4 correct (" << delivered << " delivered)";
    o.require(cases.size() == 4 && correct == 4, std::string(ims::to_string(mode)));
  }
}

void criterion_facebook(Outcome& o) {
  const SimReport r = run_default("facebook_individual");
  const auto found = u(r, "facebook.commands_in_victim_log");
  const auto sent = u(r, "facebook.victim_sent_during_attack");
  o.detail << "commands in victim log " << found << "/3, victim sent " << sent;
  o.require(found == 3, "three commands in the victim's log");
  o.require(u(r, "facebook.victim_log_entries") == 3, "log holds exactly the three commands");
  o.require(sent == 0, "victim sent nothing");
  o.require(r.passed(), "scenario verdicts");
}

void criterion_rate(Outcome& o) {
  const SimReport r = run_default("rate_measure");
  const auto app = u(r, "rate.app_sent");
  const auto raw = u(r, "rate.raw_unthrottled_accepted");
  const auto throttled = u(r, "rate.raw_throttled_accepted");
  const double ratio = app ? static_cast<double>(throttled) / static_cast<double>(app) : 0.0;
  const double dev = std::abs(static_cast<double>(raw) - kRawReference) / kRawReference;
  o.detail << "app " << app << ", raw " << raw << " (" << dev * 100 << "% off 2459), throttled " << throttled
           << ", ratio " << ratio;
  o.require(app == kAppCap, "app path 30");
  o.require(dev <= kRawTolerance, "raw within 2%");
  o.require(throttled == kThrottle, "throttled 1002");
  o.require(ratio >= kMinRatio, "ratio >= 33");
}

void criterion_donation(Outcome& o) {
  const SimReport r = run_default("donation");
  const auto charges = u(r, "donation.charges");
  const auto total = u(r, "donation.total_charged");
  const auto routed = u(r, "donation.routed_messages");
  o.detail << "charges " << charges << ", total " << total << ", routed " << routed;
  o.require(charges == kDonationVictims, "100 charges");
  o.require(total == kDonationVictims * kDonationAmount, "total 1000");
  o.require(routed == 2 * kDonationVictims, "200 routed");
  const SimReport d = run_default("defense_440");
  const auto spoofed = u(d, "challenge_strict.suite.spoofed_charges");
  o.detail << "; 440 + STRICT spoofed charges " << spoofed << " (440 alone: "
           << u(d, "challenge_only.suite.spoofed_charges") << ")";
  o.require(!d.get("challenge_strict.suite.spoofed_charges").is_null() && spoofed == 0, "440 + STRICT zero");
}

void criterion_enrollment(Outcome& o) {
  using providers::EnrollContext;
  using providers::EnrollmentKind;
  testing::Capabilities attacker;  // texts and public forms only, no inbox
  int four_step_safe = 0, one_step_open = 0, three_step_open = 0;
  for (int seed = 0; seed < kEnrollSeeds; ++seed) {
    const bool four_trigger = testing::enrollable({EnrollmentKind::FourStepAuthCode, true, true}, attacker, seed);
    const bool four_plain = testing::enrollable({EnrollmentKind::FourStepAuthCode, true, false}, attacker, seed);
    four_step_safe += (!four_trigger && !four_plain) ? 1 : 0;
    one_step_open += testing::enrollable({EnrollmentKind::OneStep, true, false}, attacker, seed) ? 1 : 0;
    three_step_open += testing::enrollable({EnrollmentKind::ThreeStepSimple, true, false}, attacker, seed) ? 1 : 0;
  }
  o.detail << "seeds " << kEnrollSeeds << ": FourStepAuthCode safe " << four_step_safe << ", OneStep open "
           << one_step_open << ", ThreeStepSimple open " << three_step_open;
  o.require(four_step_safe == kEnrollSeeds, "FourStepAuthCode never spoof-enrollable");
  o.require(one_step_open == kEnrollSeeds && three_step_open == kEnrollSeeds, "OneStep and ThreeStepSimple enrollable");
  const SimReport r = run_default("spam_subscribe");
  const auto costco = u(r, "spam.Costco.spoofed_enrollments");
  o.detail << "; three-step sim enrollments " << costco << " incl. inbox-disabled victim";
  o.require(costco == 2 && r.passed(), "three-step attack with inbox disabled");
}

void criterion_audit(Outcome& o) {
  const SimReport r = run_default("table1_audit");
  const auto vulnerable = u(r, "audit.audited_vulnerable");
  const auto matches = u(r, "audit.matches");
  std::set<std::string> mismatched;
  std::set<std::string> exceptions;
  for (const auto& row : r.threat_matrix) {
    if (!row.at("match").get<bool>()) mismatched.insert(row.at("name").get<std::string>());
    if (row.at("exception").get<bool>()) exceptions.insert(row.at("name").get<std::string>());
  }
  o.detail << "vulnerable " << vulnerable << "/" << r.threat_matrix.size() << ", matches " << matches
           << ", mismatches " << mismatched.size() << " (all exception rows: " << (mismatched == exceptions) << ")";
  o.require(r.threat_matrix.size() == 64, "64 rows");
  o.require(vulnerable == kVulnerable, "53 vulnerable");
  o.require(matches >= kMinMatches, "61 matches");
  o.require(mismatched == exceptions && exceptions.size() == 3, "mismatches are the exception rows");
}

void criterion_mac(Outcome& o) {
  const SimReport r = run_default("defense_mac");
  const auto actions = u(r, "suite.social_spoofed_actions");
  const auto charges = u(r, "suite.spoofed_charges");
  const auto verified = u(r, "suite.mac_verified");
  const auto legit = u(r, "suite.legit_to_mac_providers");
  const double overhead = f(r, "mac.overhead_fraction");
  const auto flipped = u(r, "tamper.flipped");
  const auto detected = u(r, "tamper.detected");
  o.detail << "spoofed actions " << actions << ", spoofed charges " << charges << ", legit verified " << verified << "/"
           << legit << ", overhead " << overhead << ", tamper " << detected << "/" << flipped;
  o.require(actions == 0 && charges == 0, "no spoofed effect");
  o.require(legit > 0 && verified == legit, "legit 100% verified");
  o.require(overhead >= 0 && overhead <= kMaxOverhead, "overhead");
  o.require(flipped == kTamperFlips && detected == kTamperFlips, "256/256 tamper");
}

void criterion_determinism(Outcome& o) {
  std::size_t identical = 0;
  const auto& catalog = scenario::scenario_catalog();
  for (const auto& s : catalog) {
    const std::string name(s.name);
    const auto a = report::render(run_default(name), report::Format::Structured);
    const auto b = report::render(run_default(name), report::Format::Structured);
    if (a == b) {
      ++identical;
    } else {
      o.require(false, name);
    }
  }
  o.detail << identical << "/" << catalog.size() << " scenarios byte-identical";
}

struct Criterion {
  int id;
  std::string name;
  double max_seconds;
  std::function<void(Outcome&)> body;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "codec golden", 1.0, criterion_codec},
      {2, "spoofing matrix", 5.0, criterion_spoof_matrix},
      {3, "social account attack", 5.0, criterion_facebook},
      {4, "rate reproduction", 10.0, criterion_rate},
      {5, "donation attack", 5.0, criterion_donation},
      {6, "enrollment soundness", 30.0, criterion_enrollment},
      {7, "catalog audit", 1.0, criterion_audit},
      {8, "MAC defense", 10.0, criterion_mac},
      {9, "determinism", 120.0, criterion_determinism},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      c.body(o);
    } catch (const std::exception& e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    o.require(secs <= c.max_seconds, "runtime");
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << c.id << " (" << c.name << "): " << o.detail.str()
              << " [" << secs << " s]" << std::endl;
    failed += o.pass ? 0 : 1;
  }
  return failed == 0 ? 0 : 1;
}
