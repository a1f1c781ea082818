#include "smsim/report.hpp"

#include <algorithm>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace smsim::report {

using nlohmann::json;

void SimReport::set(const std::string& group, const std::string& name, json value) {
  counters[group + "." + name] = std::move(value);
}

void SimReport::add_all(const std::string& group, const std::map<std::string, std::uint64_t>& values) {
  for (const auto& [k, v] : values) set(group, k, v);
}

bool SimReport::check(std::string name, bool pass, std::string detail) {
  verdicts.push_back({std::move(name), pass, std::move(detail)});
  return pass;
}

const json& SimReport::get(const std::string& key) const {
  static const json kNull;
  auto it = counters.find(key);
  return it == counters.end() ? kNull : it->second;
}

bool SimReport::passed() const {
  return std::all_of(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return v.pass; });
}

Format parse_format(std::string_view name) {
  if (name == "text") return Format::Text;
  if (name == "structured" || name == "json") return Format::Structured;
  throw std::invalid_argument("unknown report format " + std::string(name));
}

namespace {

std::pair<std::string, std::string> split_key(const std::string& key) {
  const auto dot = key.rfind('.');
  if (dot == std::string::npos) return {"", key};
  return {key.substr(0, dot), key.substr(dot + 1)};
}

std::string cell(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_float()) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(4) << v.get<double>();
    return s.str();
  }
  return v.dump();
}

}  // namespace

json to_json(const SimReport& r) {
  json counters = json::object();
  for (const auto& [key, value] : r.counters) {
    const auto [group, name] = split_key(key);
    counters[group][name] = value;
  }
  json verdicts = json::array();
  for (const auto& v : r.verdicts) verdicts.push_back({{"name", v.name}, {"pass", v.pass}, {"detail", v.detail}});
  return {{"scenario", r.scenario},
          {"seed", r.seed},
          {"passed", r.passed()},
          {"counters", counters},
          {"threat_matrix", r.threat_matrix},
          {"verdicts", verdicts},
          {"event_log", r.event_log}};
}

void emit_report(const SimReport& r, Format format, std::ostream& out, bool verbose) {
  if (format == Format::Structured) {
    out << to_json(r).dump(2) << '\n';
    return;
  }
  out << "scenario " << r.scenario << "  seed " << r.seed << "  " << (r.passed() ? "PASS" : "FAIL") << '\n';
  std::string current;
  bool first = true;
  for (const auto& [key, value] : r.counters) {
    const auto [group, name] = split_key(key);
    if (first || group != current) {
      out << "\n[" << group << "]\n";
      current = group;
      first = false;
    }
    out << "  " << std::left << std::setw(32) << name << ' ' << cell(value) << '\n';
  }
  if (r.threat_matrix.is_array()) {
    out << "\n[threat_matrix]\n";
    out << "  " << std::left << std::setw(28) << "provider" << std::setw(8) << "code" << std::setw(14) << "predicted"
        << std::setw(14) << "catalog" << "match\n";
    for (const auto& row : r.threat_matrix) {
      out << "  " << std::left << std::setw(28) << row.value("name", "") << std::setw(8) << row.value("short_code", "")
          << std::setw(14) << row.value("predicted", "") << std::setw(14) << row.value("truth", "")
          << (row.value("match", false) ? "yes" : (row.value("exception", false) ? "no (exception)" : "no")) << '\n';
    }
  }
  out << "\n[verdicts]\n";
  for (const auto& v : r.verdicts) {
    out << "  " << (v.pass ? "PASS " : "FAIL ") << v.name;
    if (!v.detail.empty()) out << ": " << v.detail;
    out << '\n';
  }
  if (verbose) {
    out << "\n[event_log]\n";
    for (const auto& e : r.event_log) out << "  " << e << '\n';
  }
}

std::string render(const SimReport& r, Format format, bool verbose) {
  std::ostringstream s;
  emit_report(r, format, s, verbose);
  return s.str();
}

}  // namespace smsim::report
