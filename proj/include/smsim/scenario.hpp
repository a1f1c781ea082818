#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "smsim/ims_core.hpp"
#include "smsim/report.hpp"
#include "smsim/world.hpp"

namespace smsim::scenario {

struct ScenarioInfo {
  std::string_view name;
  std::string_view description;
};

/// The named scenarios, in presentation order.
const std::vector<ScenarioInfo>& scenario_catalog();
bool is_known_scenario(std::string_view name);

/// Builds the world for `config`, runs it to its duration and evaluates the
/// scenario's verdicts. Throws ConfigError for invalid configurations.
report::SimReport run_scenario(const ScenarioConfig& config);

/// One spoofed MESSAGE on a two-carrier topology. The attacker sits on OP-I.
struct SpoofCase {
  std::string spoofed_from;
  std::string recipient;
  bool from_attacker_carrier = false;
  bool delivered = false;  // recipient's inbox shows the text from spoofed_from
};

/// From in {OP-I victim, OP-II victim} x recipient in {OP-I, OP-II}, with both
/// carriers running `mode`.
std::vector<SpoofCase> run_spoof_matrix(ims::OriginCheck mode, std::uint64_t seed);

}  // namespace smsim::scenario
