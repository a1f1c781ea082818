#pragma once

#include <cstdint>
#include <map>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace smsim::report {

struct Verdict {
  std::string name;
  bool pass = false;
  std::string detail;
};

/// Outcome of one scenario run. Counters are keyed "group.name"; the group is
/// everything before the last dot.
struct SimReport {
  std::string scenario;
  std::uint64_t seed = 0;
  std::map<std::string, nlohmann::json> counters;
  nlohmann::json threat_matrix;  // null unless the scenario audits a catalog
  std::vector<std::string> event_log;
  std::vector<Verdict> verdicts;

  void set(const std::string& group, const std::string& name, nlohmann::json value);
  void add_all(const std::string& group, const std::map<std::string, std::uint64_t>& values);
  /// Records a verdict and returns `pass`.
  bool check(std::string name, bool pass, std::string detail);
  const nlohmann::json& get(const std::string& key) const;
  bool passed() const;
};

enum class Format { Text, Structured };
Format parse_format(std::string_view name);

nlohmann::json to_json(const SimReport& r);
/// Structured output is one JSON document with sorted keys; text output is a
/// table per counter group. The event log is included in text output only
/// when `verbose` is set.
void emit_report(const SimReport& r, Format format, std::ostream& out, bool verbose = false);
std::string render(const SimReport& r, Format format, bool verbose = false);

}  // namespace smsim::report
