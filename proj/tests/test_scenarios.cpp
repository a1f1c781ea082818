#include <gtest/gtest.h>

#include <fstream>

#include <nlohmann/json.hpp>

#include "smsim/report.hpp"
#include "smsim/scenario.hpp"

namespace smsim::scenario {
namespace {

using nlohmann::json;

class EveryScenario : public ::testing::TestWithParam<std::string> {};

TEST_P(EveryScenario, PassesWithDefaults) {
  const auto r = run_scenario(default_config(GetParam()));
  EXPECT_EQ(r.scenario, GetParam());
  EXPECT_FALSE(r.verdicts.empty());
  for (const auto& v : r.verdicts) EXPECT_TRUE(v.pass) << v.name << ": " << v.detail;
}

TEST_P(EveryScenario, StructuredOutputIsReproducible) {
  const auto a = report::render(run_scenario(default_config(GetParam())), report::Format::Structured);
  const auto b = report::render(run_scenario(default_config(GetParam())), report::Format::Structured);
  EXPECT_EQ(a, b);
  EXPECT_NO_THROW((void)json::parse(a));
}

std::vector<std::string> all_names() {
  std::vector<std::string> out;
  for (const auto& s : scenario_catalog()) out.emplace_back(s.name);
  return out;
}

INSTANTIATE_TEST_SUITE_P(Catalog, EveryScenario, ::testing::ValuesIn(all_names()),
                         [](const auto& info) { return info.param; });

TEST(Scenarios, CatalogHasElevenEntries) {
  EXPECT_EQ(scenario_catalog().size(), 11u);
  EXPECT_TRUE(is_known_scenario("donation"));
  EXPECT_FALSE(is_known_scenario("nope"));
}

TEST(Scenarios, SeedChangesTheRun) {
  auto c = default_config("donation");
  const auto a = report::render(run_scenario(c), report::Format::Structured);
  c.seed = 99;
  const auto b = report::render(run_scenario(c), report::Format::Structured);
  EXPECT_NE(a, b);
}

TEST(Config, Errors) {
  EXPECT_THROW(parse_config({{"scenario", "nope"}, {"seed", 1}}), ConfigError);
  EXPECT_THROW(parse_config({{"scenario", "donation"}}), ConfigError);
  EXPECT_THROW(parse_config({{"scenario", "donation"}, {"seed", -1}}), ConfigError);
  EXPECT_THROW(parse_config({{"scenario", "donation"}, {"seed", "7"}}), ConfigError);
  EXPECT_THROW(parse_config({{"scenario", "donation"},
                             {"seed", 1},
                             {"carriers", {{{"carrier_id", "OP-I"}, {"origin_check", "SOMETIMES"}}}}}),
               ConfigError);
  EXPECT_THROW(parse_config({{"scenario", "donation"},
                             {"seed", 1},
                             {"carriers", {{{"carrier_id", "OP-I"}, {"security_mode", "TLS"}}}}}),
               ConfigError);
  EXPECT_THROW(run_scenario(parse_config({{"scenario", "donation"},
                                          {"seed", 1},
                                          {"devices", {{{"number", "3105552501"}, {"carrier", "OP-IX"}}}}})),
               ConfigError);
  EXPECT_THROW(load_config("/nonexistent/config.json"), ConfigError);
}

TEST(Config, ParamsMergeOverDefaults) {
  const auto c = parse_config({{"scenario", "like_farm"}, {"seed", 2}, {"params", {{"page", "Other Page"}}}});
  EXPECT_EQ(c.params.at("page"), "Other Page");
  EXPECT_EQ(c.params.at("attacker"), "3105552501");
}

TEST(Config, LoadsFromFile) {
  const std::string path = ::testing::TempDir() + "smsim_like_farm.json";
  {
    std::ofstream out(path);
    out << R"({"scenario": "like_farm", "seed": 2})";
  }
  const auto c = load_config(path);
  EXPECT_EQ(c.scenario, "like_farm");
  EXPECT_EQ(c.devices.size(), 51u);
}

TEST(Scenarios, LikeFarmLikesPerVictim) {
  const auto r = run_scenario(default_config("like_farm"));
  EXPECT_EQ(r.get("like_farm.page_likes"), 50);
  EXPECT_EQ(r.get("like_farm.victims"), 50);
}

TEST(Scenarios, StrictOriginStopsTheSocialAttack) {
  auto doc = default_config_json("facebook_individual");
  doc["defenses"] = {{"strict_origin", true}};
  const auto r = run_scenario(parse_config(doc));
  EXPECT_EQ(r.get("facebook.commands_in_victim_log"), 0);
  EXPECT_TRUE(r.passed());
}

TEST(Scenarios, NoOriginCheckLetsForeignNumbersThrough) {
  const auto cases = run_spoof_matrix(ims::OriginCheck::None, 1);
  ASSERT_EQ(cases.size(), 4u);
  for (const auto& c : cases) EXPECT_TRUE(c.delivered) << c.spoofed_from << " -> " << c.recipient;
}

TEST(Scenarios, AuditThreatMatrixRows) {
  const auto r = run_scenario(default_config("table1_audit"));
  ASSERT_EQ(r.threat_matrix.size(), 64u);
  for (const auto& row : r.threat_matrix) {
    EXPECT_TRUE(row.contains("name"));
    EXPECT_TRUE(row.contains("predicted"));
  }
}

TEST(Report, EmptyRunStillRenders) {
  report::SimReport r;
  r.scenario = "empty";
  const json j = json::parse(report::render(r, report::Format::Structured));
  EXPECT_EQ(j.at("scenario"), "empty");
  EXPECT_TRUE(j.at("event_log").empty());
  EXPECT_TRUE(j.at("passed").get<bool>());
  EXPECT_NE(report::render(r, report::Format::Text, true).find("empty"), std::string::npos);
}

TEST(Report, FormatsAndChecks) {
  EXPECT_EQ(report::parse_format("json"), report::Format::Structured);
  EXPECT_THROW(report::parse_format("xml"), std::exception);
  report::SimReport r;
  r.set("g", "n", 3);
  EXPECT_EQ(r.get("g.n"), 3);
  EXPECT_TRUE(r.get("g.missing").is_null());
  EXPECT_FALSE(r.check("fails", false, "x"));
  EXPECT_FALSE(r.passed());
}

}  // namespace
}  // namespace smsim::scenario
