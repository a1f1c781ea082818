#include <array>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "smsim/providers.hpp"

namespace smsim::providers {

namespace detail {
extern const std::string_view kCatalogJson;
}

namespace {

template <typename E, std::size_t N>
E lookup(const std::array<std::pair<E, std::string_view>, N>& table, std::string_view s, const char* what) {
  for (const auto& [value, name] : table) {
    if (name == s) return value;
  }
  throw CatalogError(std::string("unknown ") + what + ": " + std::string(s));
}

template <typename E, std::size_t N>
std::string_view name_of(const std::array<std::pair<E, std::string_view>, N>& table, E v) {
  for (const auto& [value, name] : table) {
    if (value == v) return name;
  }
  return "?";
}

constexpr std::array<std::pair<ServiceModel, std::string_view>, 2> kServiceModels{{
    {ServiceModel::ReqResp, "ReqResp"},
    {ServiceModel::SubNotif, "SubNotif"},
}};
constexpr std::array<std::pair<EnrollmentKind, std::string_view>, 6> kEnrollmentKinds{{
    {EnrollmentKind::OneStep, "OneStep"},
    {EnrollmentKind::TwoStep, "TwoStep"},
    {EnrollmentKind::ThreeStepSimple, "ThreeStepSimple"},
    {EnrollmentKind::FourStepSimple, "FourStepSimple"},
    {EnrollmentKind::FourStepAuthCode, "FourStepAuthCode"},
    {EnrollmentKind::AlwaysOn, "AlwaysOn"},
}};
constexpr std::array<std::pair<RuntimeAuth, std::string_view>, 3> kRuntimeAuths{{
    {RuntimeAuth::None, "None"},
    {RuntimeAuth::WeakConfirm, "WeakConfirm"},
    {RuntimeAuth::Mac, "Mac"},
}};
constexpr std::array<std::pair<Threat, std::string_view>, 4> kThreats{{
    {Threat::AccountAbuse, "AccountAbuse"},
    {Threat::Donation, "Donation"},
    {Threat::SpamLawsuit, "SpamLawsuit"},
    {Threat::None, "None"},
}};

}  // namespace

std::string_view to_string(ServiceModel v) { return name_of(kServiceModels, v); }
std::string_view to_string(EnrollmentKind v) { return name_of(kEnrollmentKinds, v); }
std::string_view to_string(RuntimeAuth v) { return name_of(kRuntimeAuths, v); }
std::string_view to_string(Threat v) { return name_of(kThreats, v); }
ServiceModel parse_service_model(std::string_view s) { return lookup(kServiceModels, s, "service model"); }
EnrollmentKind parse_enrollment_kind(std::string_view s) { return lookup(kEnrollmentKinds, s, "enrollment kind"); }
RuntimeAuth parse_runtime_auth(std::string_view s) { return lookup(kRuntimeAuths, s, "runtime auth"); }
Threat parse_threat(std::string_view s) { return lookup(kThreats, s, "threat"); }

ProviderRecord record_from_json(const nlohmann::json& j) {
  try {
    ProviderRecord r;
    r.no = j.value("no", "NA");
    r.name = j.at("name").get<std::string>();
    r.industry = j.value("industry", "");
    r.short_code = j.at("short_code").get<std::string>();
    if (!is_short_code(r.short_code)) throw CatalogError("invalid short code " + r.short_code);
    r.service_model = parse_service_model(j.at("service_model").get<std::string>());
    r.enrollment = parse_enrollment_kind(j.at("enrollment").get<std::string>());
    r.operations = j.value("operations", "");
    r.non_query_ops = j.value("non_query_ops", false);
    r.money = j.value("money", false);
    r.runtime_auth = parse_runtime_auth(j.value("runtime_auth", "None"));
    r.enroll_web = j.value("enroll_web", false);
    r.enroll_text = j.value("enroll_text", false);
    if (j.contains("threat") && !j.at("threat").is_null()) r.threat = parse_threat(j.at("threat").get<std::string>());
    r.exception = j.value("exception", false);
    r.keywords = j.value("keywords", std::vector<std::string>{});
    r.trigger_text = j.value("trigger_text", "");
    r.assumed = j.value("assumed", std::vector<std::string>{});
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw CatalogError(std::string("bad provider record: ") + e.what());
  }
}

nlohmann::json record_to_json(const ProviderRecord& r) {
  nlohmann::json j;
  j["no"] = r.no;
  j["name"] = r.name;
  j["industry"] = r.industry;
  j["short_code"] = r.short_code;
  j["service_model"] = to_string(r.service_model);
  j["enrollment"] = to_string(r.enrollment);
  j["operations"] = r.operations;
  j["non_query_ops"] = r.non_query_ops;
  j["money"] = r.money;
  j["runtime_auth"] = to_string(r.runtime_auth);
  j["enroll_web"] = r.enroll_web;
  j["enroll_text"] = r.enroll_text;
  j["threat"] = r.threat ? nlohmann::json(to_string(*r.threat)) : nlohmann::json(nullptr);
  j["exception"] = r.exception;
  j["keywords"] = r.keywords;
  j["trigger_text"] = r.trigger_text;
  j["assumed"] = r.assumed;
  return j;
}

std::vector<ProviderRecord> parse_catalog(const nlohmann::json& j) {
  if (!j.is_array()) throw CatalogError("catalog must be a JSON array of provider records");
  std::vector<ProviderRecord> out;
  std::set<std::string> names;
  for (const auto& item : j) {
    out.push_back(record_from_json(item));
    if (!names.insert(out.back().name).second) throw CatalogError("duplicate provider " + out.back().name);
  }
  return out;
}

const std::vector<ProviderRecord>& builtin_catalog() {
  static const std::vector<ProviderRecord> catalog = parse_catalog(nlohmann::json::parse(detail::kCatalogJson));
  return catalog;
}

std::vector<ProviderRecord> load_catalog(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CatalogError("cannot open catalog " + path);
  try {
    return parse_catalog(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw CatalogError("catalog " + path + ": " + e.what());
  }
}

Threat classify_threat(const ProviderRecord& r) {
  const bool weak_auth = r.runtime_auth == RuntimeAuth::None || r.runtime_auth == RuntimeAuth::WeakConfirm;
  if (r.money && r.enrollment == EnrollmentKind::AlwaysOn && weak_auth) return Threat::Donation;
  if (r.service_model == ServiceModel::ReqResp && r.runtime_auth == RuntimeAuth::None && r.non_query_ops) {
    return Threat::AccountAbuse;
  }
  if (r.service_model == ServiceModel::SubNotif &&
      (r.enrollment == EnrollmentKind::OneStep || r.enrollment == EnrollmentKind::ThreeStepSimple ||
       (r.enrollment == EnrollmentKind::FourStepSimple && r.enroll_text))) {
    return Threat::SpamLawsuit;
  }
  return Threat::None;
}

AuditResult audit_catalog(const std::vector<ProviderRecord>& records) {
  AuditResult out;
  for (const auto& r : records) {
    AuditRow row{r.name, r.short_code, classify_threat(r), r.threat, r.exception, false};
    row.match = r.threat && *r.threat == row.predicted;
    if (row.match) ++out.matches;
    if (!row.match) out.mismatches.push_back(r.name);
    if (r.exception) out.exceptions.push_back(r.name);
    if (row.predicted != Threat::None) ++out.predicted_vulnerable;
    const Threat audited = (r.exception && r.threat) ? *r.threat : row.predicted;
    if (audited != Threat::None) ++out.audited_vulnerable;
    if (r.threat && *r.threat != Threat::None) ++out.truth_vulnerable;
    out.rows.push_back(std::move(row));
  }
  return out;
}

}  // namespace smsim::providers
