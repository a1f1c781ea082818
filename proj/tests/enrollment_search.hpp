#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "smsim/providers.hpp"

namespace smsim::testing {

/// What the party driving the enrollment can do to the victim's number.
struct Capabilities {
  bool texts = true;            // JOIN, YES, trigger and free text under the victim's number
  bool public_web_form = true;  // typing the number into a form with no login
  bool victim_session = false;  // adding the number from the victim's logged-in session
  bool inbox_access = false;    // reading codes texted to the victim
};

/// Exhaustive search over event sequences up to `max_len`, one minute apart.
/// Code entry without inbox access always submits a wrong code. Returns true
/// when some sequence reaches Subscribed.
inline bool enrollable(const providers::EnrollContext& ctx, const Capabilities& cap, std::uint64_t seed,
                       int max_len = 6) {
  using providers::EnrollEvent;
  using providers::Enrollment;
  using providers::EventKind;

  std::vector<EventKind> alphabet;
  if (cap.texts) {
    alphabet.insert(alphabet.end(),
                    {EventKind::TextJoin, EventKind::TextFixedReply, EventKind::TextTrigger, EventKind::TextOther});
  }
  if (cap.public_web_form) alphabet.push_back(EventKind::WebSignup);
  if (cap.victim_session) alphabet.push_back(EventKind::WebLoginSignup);
  alphabet.push_back(EventKind::WebCodeEntry);

  struct Frame {
    Enrollment state;
    std::mt19937_64 rng;
    int depth;
  };
  std::vector<Frame> stack{{Enrollment{}, std::mt19937_64(seed), 0}};
  while (!stack.empty()) {
    Frame f = std::move(stack.back());
    stack.pop_back();
    if (f.state.state == providers::EnrollState::Subscribed) return true;
    if (f.depth == max_len) continue;
    const SimTime now = (f.depth + 1) * kMinute;
    for (EventKind k : alphabet) {
      EnrollEvent ev{k, {}};
      if (k == EventKind::TextJoin) ev.token = "JOIN";
      if (k == EventKind::TextFixedReply) ev.token = "YES";
      if (k == EventKind::TextOther) ev.token = "HELLO";
      if (k == EventKind::WebCodeEntry) {
        if (cap.inbox_access) {
          ev.token = f.state.code;
        } else {
          // A guess that differs from the issued code in its last digit.
          ev.token = f.state.code.empty() ? "000000" : f.state.code;
          if (!f.state.code.empty()) ev.token.back() = ev.token.back() == '9' ? '0' : static_cast<char>(ev.token.back() + 1);
        }
      }
      std::mt19937_64 rng = f.rng;
      const auto step = providers::enrollment_advance(ctx, f.state, ev, now, rng);
      if (step.ignored) continue;
      stack.push_back({step.next, std::move(rng), f.depth + 1});
    }
  }
  return false;
}

}  // namespace smsim::testing
