#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "smsim/world.hpp"

namespace smsim::testing {

inline nlohmann::json test_device(const std::string& number, const std::string& role = "honest",
                                  nlohmann::json approval = "AutoApprove") {
  return {{"number", number}, {"carrier", "OP-I"}, {"role", role}, {"approval_policy", std::move(approval)}};
}

/// One carrier, three handsets (victim, attacker, peer) and Facebook plus Red
/// Cross behind the aggregator. Top-level keys of `patch` replace the base.
inline scenario::ScenarioConfig small_config(const nlohmann::json& patch = nlohmann::json::object()) {
  nlohmann::json doc = {
      {"scenario", "facebook_individual"},
      {"seed", 9},
      {"carriers",
       {{{"carrier_id", "OP-I"}, {"security_mode", "DIGEST_ONLY"}, {"origin_check", "NONE"}},
        {{"carrier_id", "OP-II"}, {"numbers", {"4155550100"}}}}},
      {"devices",
       {test_device("3105554347"), test_device("3105552501", "attacker"), test_device("3105554348")}},
      {"providers", {{"catalog", "builtin"}, {"include", {"Facebook", "Red Cross"}}}},
  };
  for (const auto& [k, v] : patch.items()) doc[k] = v;
  return scenario::parse_config(doc);
}

}  // namespace smsim::testing
