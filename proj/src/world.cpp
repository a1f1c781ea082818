#include "smsim/world.hpp"

#include <fstream>
#include <sstream>

#include "smsim/crypto.hpp"

namespace smsim::scenario {

using nlohmann::json;

ue::ApprovalPolicy ApprovalSpec::make() const {
  if (kind == "AutoApprove") return ue::ApprovalPolicy::auto_approve();
  if (kind == "AutoDeny") return ue::ApprovalPolicy::auto_deny();
  if (kind == "Script") {
    std::vector<ue::Decision> decisions;
    for (const auto& s : script) {
      if (s == "approve") {
        decisions.push_back(ue::Decision::Approve);
      } else if (s == "deny") {
        decisions.push_back(ue::Decision::Deny);
      } else {
        throw ConfigError("approval script entries must be \"approve\" or \"deny\", got \"" + s + "\"");
      }
    }
    return ue::ApprovalPolicy::script(std::move(decisions));
  }
  throw ConfigError("unknown approval policy " + kind);
}

namespace {

const json kOpOne = {{"carrier_id", "OP-I"}, {"security_mode", "DIGEST_ONLY"}, {"origin_check", "CARRIER_SCOPE"}};
const json kOpTwo = {{"carrier_id", "OP-II"},
                     {"security_mode", "DIGEST_ONLY"},
                     {"origin_check", "CARRIER_SCOPE"},
                     {"numbers", {"4155550100", "4155550101"}}};

constexpr const char* kVictim = "3105554347";
constexpr const char* kAttacker = "3105552501";

json device(const std::string& number, const std::string& role, const std::string& approval = "AutoApprove") {
  return {{"number", number}, {"carrier", "OP-I"}, {"role", role}, {"approval_policy", approval}};
}

json victim_range(const std::string& start, int count) {
  return {{"range", {{"start", start}, {"count", count}}}, {"carrier", "OP-I"}, {"role", "honest"}};
}

/// Facebook, Red Cross and two notification services against 100 victims.
json attack_suite_base(const std::string& name) {
  return {
      {"scenario", name},
      {"seed", 7},
      {"duration_ms", 240000},
      {"carriers", {kOpOne, kOpTwo}},
      {"devices",
       {device(kAttacker, "attacker"), device("3105550010", "honest"), victim_range("3105554300", 100)}},
      {"providers", {{"catalog", "builtin"}, {"include", {"Facebook", "Red Cross", "Staple", "Costco"}}}},
      {"params",
       {{"victim", kVictim},
        {"attacker", kAttacker},
        {"legit_donor", "3105550010"},
        {"commands", {"Hi...", "Add Bob", "Like Lakers Nation"}},
        {"donation_keyword", "REDCROSS"},
        {"confirm_text", "YES"},
        {"send_interval_ms", 730},
        {"second_delay_ms", 5000}}},
  };
}

json make_defaults(const std::string& name) {
  if (name == "facebook_individual") {
    return {{"scenario", name},
            {"seed", 1},
            {"duration_ms", 60000},
            {"carriers", {kOpOne, kOpTwo}},
            {"devices", {device(kVictim, "honest"), device(kAttacker, "attacker")}},
            {"providers", {{"catalog", "builtin"}, {"include", {"Facebook"}}}},
            {"params",
             {{"victim", kVictim},
              {"attacker", kAttacker},
              {"commands", {"Hi...", "Add Bob", "Like Lakers Nation"}},
              {"command_spacing_ms", 1000}}}};
  }
  if (name == "like_farm") {
    return {{"scenario", name},
            {"seed", 2},
            {"duration_ms", 120000},
            {"carriers", {kOpOne, kOpTwo}},
            {"devices", {device(kAttacker, "attacker"), victim_range("3105557000", 50)}},
            {"providers", {{"catalog", "builtin"}, {"include", {"Facebook"}}}},
            {"params", {{"attacker", kAttacker}, {"page", "Lakers Nation"}, {"send_interval_ms", 730}}}};
  }
  if (name == "privacy_leak") {
    return {{"scenario", name},
            {"seed", 3},
            {"duration_ms", 120000},
            {"carriers", {kOpOne, kOpTwo}},
            {"devices", {device(kAttacker, "attacker"), victim_range("3105558000", 10)}},
            {"providers", {{"catalog", "builtin"}, {"include", {"Facebook"}}}},
            {"params",
             {{"attacker", kAttacker},
              {"attacker_account", "ResearchTwo"},
              {"status_template", "My number is {victim}"},
              {"send_interval_ms", 730}}}};
  }
  if (name == "donation") {
    return {{"scenario", name},
            {"seed", 4},
            {"duration_ms", 180000},
            {"carriers", {kOpOne, kOpTwo}},
            {"devices", {device(kAttacker, "attacker"), victim_range("3105554300", 100)}},
            {"providers", {{"catalog", "builtin"}, {"include", {"Red Cross"}}}},
            {"params",
             {{"attacker", kAttacker},
              {"target_code", "90999"},
              {"keyword", "REDCROSS"},
              {"confirm_text", "YES"},
              {"send_interval_ms", 730},
              {"second_delay_ms", 5000}}}};
  }
  if (name == "spam_subscribe") {
    json quiet = device(kVictim, "honest");
    quiet["inbox_enabled"] = false;
    return {{"scenario", name},
            {"seed", 5},
            {"duration_ms", 3 * kHour * 24 + kMinute},
            {"carriers", {kOpOne, kOpTwo}},
            {"devices", {device(kAttacker, "attacker"), quiet, device("3105554348", "honest")}},
            {"providers", {{"catalog", "builtin"}, {"include", {"Staple", "Costco", "JP Morgan Chase"}}}},
            {"params",
             {{"attacker", kAttacker},
              {"victims", {kVictim, "3105554348"}},
              {"join_text", "JOIN"},
              {"confirm_text", "YES"},
              {"confirm_delay_ms", 5000},
              {"notification_period_ms", 24 * kHour}}}};
  }
  if (name == "rate_measure") {
    return {{"scenario", name},
            {"seed", 6},
            {"duration_ms", 30 * kMinute},
            {"carriers", {kOpOne}},
            {"devices", {device("3105550001", "honest", "AutoDeny"), device(kAttacker, "attacker")}},
            {"providers", {{"catalog", "builtin"}, {"include", json::array()}}},
            {"params",
             {{"app_sender", "3105550001"},
              {"attacker", kAttacker},
              {"service_time_ms", 730},
              {"throttle_limit", 1002},
              {"reference_raw_count", 2459},
              {"raw_tolerance", 0.02},
              {"min_ratio", 33.0}}}};
  }
  if (name == "defense_mac") {
    json j = attack_suite_base(name);
    j["defenses"] = {{"mac", {{"tag_length", 20}, {"hash_label", "SHA-256"}, {"providers", {"Facebook", "Red Cross"}}}}};
    json one = kOpOne, two = kOpTwo;
    one["origin_check"] = "NONE";
    two["origin_check"] = "NONE";
    j["carriers"] = {one, two};
    j["params"]["tamper_count"] = 256;
    return j;
  }
  if (name == "defense_440") {
    json j = attack_suite_base(name);
    j["defenses"] = {{"approval_triggers", {{"premium_codes", {"90999"}}}}};
    j["devices"][2]["approval_policy"] = "AutoDeny";
    return j;
  }
  if (name == "defense_strict_origin") {
    json j = attack_suite_base(name);
    j["defenses"] = {{"strict_origin", true}};
    return j;
  }
  if (name == "legacy_baseline") {
    json j = attack_suite_base(name);
    json one = kOpOne, two = kOpTwo;
    one["legacy_cs"] = true;
    two["legacy_cs"] = true;
    j["carriers"] = {one, two};
    return j;
  }
  if (name == "table1_audit") {
    return {{"scenario", name},
            {"seed", 8},
            {"duration_ms", 0},
            {"carriers", json::array()},
            {"devices", json::array()},
            {"providers", {{"catalog", "builtin"}, {"include", json::array()}}},
            {"params", {{"expected_vulnerable", 53}, {"min_matches", 61}}}};
  }
  throw ConfigError("unknown scenario '" + name + "' (see list-scenarios)");
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("field '") + key + "' has the wrong type");
  }
}

std::string increment_number(const std::string& start, std::uint64_t offset) {
  std::string out = start;
  std::uint64_t carry = offset;
  for (auto it = out.rbegin(); it != out.rend() && carry; ++it) {
    const std::uint64_t v = static_cast<std::uint64_t>(*it - '0') + carry;
    *it = static_cast<char>('0' + v % 10);
    carry = v / 10;
  }
  if (carry) throw ConfigError("number range overflows " + start);
  return out;
}

ims::ApprovalTriggers parse_triggers(const json& j) {
  ims::ApprovalTriggers t;
  for (const auto& c : get_or(j, "premium_codes", std::vector<std::string>{})) {
    if (!is_short_code(c)) throw ConfigError("premium code " + c + " is not a short code");
    t.premium_codes.insert(c);
  }
  if (j.contains("burst_threshold") && !j.at("burst_threshold").is_null()) {
    t.burst_threshold = j.at("burst_threshold").get<std::size_t>();
  }
  t.burst_window = get_or<SimTime>(j, "burst_window_ms", t.burst_window);
  return t;
}

CarrierSpec parse_carrier(const json& j) {
  CarrierSpec c;
  auto& p = c.policy;
  p.carrier_id = get_or<std::string>(j, "carrier_id", "");
  if (p.carrier_id.empty()) throw ConfigError("carrier block needs a carrier_id");
  try {
    p.security_mode = ims::parse_security_mode(get_or<std::string>(j, "security_mode", "DIGEST_ONLY"));
    p.origin_check = ims::parse_origin_check(get_or<std::string>(j, "origin_check", "NONE"));
  } catch (const ims::PolicyError& e) {
    throw ConfigError("carrier " + p.carrier_id + ": " + e.what());
  }
  if (j.contains("rate_limit") && !j.at("rate_limit").is_null()) {
    const json& rl = j.at("rate_limit");
    p.rate_limit = ims::RateLimit{get_or<std::size_t>(rl, "max_msgs", 0), get_or<SimTime>(rl, "window_ms", 30 * kMinute)};
    if (p.rate_limit->max_msgs == 0 || p.rate_limit->window <= 0) {
      throw ConfigError("carrier " + p.carrier_id + ": rate_limit needs max_msgs > 0 and window_ms > 0");
    }
  }
  p.approval = parse_triggers(j);
  p.legacy_cs = get_or(j, "legacy_cs", false);
  p.phone_context = get_or<std::string>(j, "phone_context", p.phone_context);
  p.realm = get_or<std::string>(j, "realm", p.realm);
  c.numbers = get_or(j, "numbers", std::vector<std::string>{});
  return c;
}

std::vector<DeviceSpec> parse_devices(const json& j) {
  std::vector<DeviceSpec> out;
  for (const auto& d : j) {
    DeviceSpec base;
    base.carrier = get_or<std::string>(d, "carrier", "");
    const std::string role = get_or<std::string>(d, "role", "honest");
    if (role == "honest") {
      base.role = ue::Role::Honest;
    } else if (role == "attacker") {
      base.role = ue::Role::Attacker;
    } else {
      throw ConfigError("device role must be honest or attacker, got " + role);
    }
    if (d.contains("approval_policy")) {
      const json& a = d.at("approval_policy");
      if (a.is_string()) {
        base.approval.kind = a.get<std::string>();
      } else if (a.is_object() && a.contains("script")) {
        base.approval.kind = "Script";
        base.approval.script = a.at("script").get<std::vector<std::string>>();
      } else {
        throw ConfigError("approval_policy must be a policy name or {\"script\": [...]}");
      }
      base.approval.make();
    }
    base.inbox_enabled = get_or(d, "inbox_enabled", true);
    base.online = get_or(d, "online", true);
    base.raw_answers_440 = get_or(d, "raw_answers_440", true);
    if (d.contains("range")) {
      const std::string start = get_or<std::string>(d.at("range"), "start", "");
      const auto count = get_or<std::uint64_t>(d.at("range"), "count", 0);
      if (!is_digit_string(start)) throw ConfigError("device range start must be digits");
      for (std::uint64_t i = 0; i < count; ++i) {
        DeviceSpec s = base;
        s.number = increment_number(start, i);
        out.push_back(std::move(s));
      }
    } else {
      base.number = get_or<std::string>(d, "number", "");
      if (!is_digit_string(base.number) || is_short_code(base.number)) {
        throw ConfigError("device number '" + base.number + "' is not a subscriber number");
      }
      out.push_back(std::move(base));
    }
  }
  return out;
}

ProviderSpec parse_providers(const json& j) {
  ProviderSpec p;
  if (j.is_string()) {
    p.catalog = j.get<std::string>();
    return p;
  }
  p.catalog = get_or<std::string>(j, "catalog", "builtin");
  p.include_all = !j.contains("include");
  p.include = get_or(j, "include", std::vector<std::string>{});
  if (j.contains("records")) {
    try {
      p.records = providers::parse_catalog(j.at("records"));
    } catch (const providers::CatalogError& e) {
      throw ConfigError(e.what());
    }
  }
  return p;
}

DefenseSpec parse_defenses(const json& j) {
  DefenseSpec d;
  if (j.contains("mac") && !j.at("mac").is_null()) {
    const json& m = j.at("mac");
    MacSpec mac;
    mac.config.tag_length = get_or<std::size_t>(m, "tag_length", mac.config.tag_length);
    mac.config.hash_label = get_or<std::string>(m, "hash_label", mac.config.hash_label);
    try {
      mac.config.validate();
    } catch (const defenses::DefenseError& e) {
      throw ConfigError(std::string("defenses.mac: ") + e.what());
    }
    mac.providers = get_or(m, "providers", std::vector<std::string>{});
    d.mac = std::move(mac);
  }
  d.strict_origin = get_or(j, "strict_origin", false);
  for (const char* key : {"approval_triggers", "approval"}) {
    if (j.contains(key) && !j.at(key).is_null()) d.approval = parse_triggers(j.at(key));
  }
  return d;
}

}  // namespace

json default_config_json(const std::string& scenario) { return make_defaults(scenario); }

ScenarioConfig parse_config(const json& doc) {
  if (!doc.is_object()) throw ConfigError("configuration must be a JSON object");
  const std::string name = get_or<std::string>(doc, "scenario", "");
  if (name.empty()) throw ConfigError("configuration needs a scenario name");
  json merged = make_defaults(name);
  for (const auto& [key, value] : doc.items()) {
    if (key == "params" && value.is_object() && merged.contains("params")) {
      for (const auto& [pk, pv] : value.items()) merged["params"][pk] = pv;
    } else {
      merged[key] = value;
    }
  }
  if (!doc.contains("seed") || !doc.at("seed").is_number_integer() || doc.at("seed").get<std::int64_t>() < 0) {
    throw ConfigError("configuration needs a non-negative integer seed");
  }

  ScenarioConfig c;
  c.scenario = name;
  c.seed = get_or<std::uint64_t>(merged, "seed", 0);
  c.duration_ms = get_or<SimTime>(merged, "duration_ms", 0);
  if (c.duration_ms < 0) throw ConfigError("duration_ms must be non-negative");
  if (merged.contains("network")) {
    const json& n = merged.at("network");
    c.network.latency_ms = get_or<SimTime>(n, "latency_ms", c.network.latency_ms);
    c.network.jitter_ms = get_or<SimTime>(n, "jitter_ms", c.network.jitter_ms);
    c.aggregator_carrier_only = get_or(n, "aggregator_carrier_only", true);
    if (c.network.latency_ms < 0 || c.network.jitter_ms < 0) throw ConfigError("latency and jitter must be >= 0");
  }
  c.network.seed = mix_seed(c.seed, 1);
  for (const auto& cj : get_or(merged, "carriers", json::array())) c.carriers.push_back(parse_carrier(cj));
  c.devices = parse_devices(get_or(merged, "devices", json::array()));
  c.providers = parse_providers(get_or(merged, "providers", json("builtin")));
  c.defenses = parse_defenses(get_or(merged, "defenses", json::object()));
  c.params = get_or(merged, "params", json::object());
  if (!c.params.is_object()) throw ConfigError("params must be an object");
  return c;
}

ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + path + ": " + e.what());
  }
  return parse_config(doc);
}

ScenarioConfig default_config(const std::string& scenario) { return parse_config(make_defaults(scenario)); }

// ---- World ----

std::string World::ims_address(std::size_t carrier_index) {
  std::ostringstream s;
  s << "2001:db8:" << std::hex << (carrier_index + 1) << ":fe03:fa:104:0:5";
  return s.str();
}

std::string World::device_address(std::size_t carrier_index, std::size_t device_index) {
  std::ostringstream s;
  s << "2001:db8:" << std::hex << (carrier_index + 1) << ":100::" << (device_index + 1);
  return s.str();
}

World::World(const ScenarioConfig& config)
    : config_(config), fabric_(std::make_unique<net::Fabric>(config.network)), rng_(mix_seed(config.seed, 2)) {
  std::map<std::string, std::size_t> carrier_index;
  for (std::size_t k = 0; k < config_.carriers.size(); ++k) {
    ims::CarrierPolicy policy = config_.carriers[k].policy;
    if (config_.defenses.strict_origin) policy.origin_check = ims::OriginCheck::Strict;
    if (config_.defenses.approval) policy.approval = *config_.defenses.approval;
    if (carrier_index.contains(policy.carrier_id)) throw ConfigError("duplicate carrier " + policy.carrier_id);
    carrier_index[policy.carrier_id] = k;
    carriers_.push_back(std::make_unique<ims::Carrier>(*fabric_, directory_, policy, ims_address(k),
                                                       mix_seed(config_.seed, 100 + k)));
  }

  auto key_for = [&](const std::string& number) {
    return crypto::hash("SHA-256", to_bytes(number + "#" + std::to_string(config_.seed)));
  };
  try {
    for (std::size_t k = 0; k < config_.carriers.size(); ++k) {
      for (const auto& n : config_.carriers[k].numbers) carriers_[k]->add_subscriber(n, key_for(n));
    }
    for (const auto& d : config_.devices) {
      auto it = carrier_index.find(d.carrier);
      if (it == carrier_index.end()) throw ConfigError("device " + d.number + " names unknown carrier " + d.carrier);
      carriers_[it->second]->add_subscriber(d.number, key_for(d.number));
    }
  } catch (const ims::PolicyError& e) {
    throw ConfigError(e.what());
  }

  aggregator_ = std::make_unique<ims::Aggregator>(*fabric_, directory_, "agg-1",
                                                  net::Endpoint{"2001:db8:a::1", ims::kAggregatorPort},
                                                  config_.aggregator_carrier_only);

  std::vector<providers::ProviderRecord> records;
  try {
    records = config_.providers.catalog == "builtin" ? providers::builtin_catalog()
                                                     : providers::load_catalog(config_.providers.catalog);
  } catch (const providers::CatalogError& e) {
    throw ConfigError(e.what());
  }
  records.insert(records.end(), config_.providers.records.begin(), config_.providers.records.end());
  std::vector<providers::ProviderRecord> selected;
  if (config_.providers.include_all) {
    selected = records;
  }
  for (const auto& name : config_.providers.include) {
    auto it = std::find_if(records.begin(), records.end(), [&](const auto& r) { return r.name == name; });
    if (it == records.end()) throw ConfigError("provider " + name + " is not in the catalog");
    selected.push_back(*it);
  }
  if (config_.defenses.mac) {
    for (const auto& name : config_.defenses.mac->providers) {
      auto it = std::find_if(selected.begin(), selected.end(), [&](const auto& r) { return r.name == name; });
      if (it == selected.end()) throw ConfigError("MAC provider " + name + " is not instantiated");
      it->runtime_auth = providers::RuntimeAuth::Mac;
    }
  }
  for (std::size_t i = 0; i < selected.size(); ++i) {
    std::ostringstream addr;
    addr << "2001:db8:b::" << std::hex << (i + 1);
    providers::ProviderOptions opts;
    if (config_.defenses.mac) opts.mac = config_.defenses.mac->config;
    opts.secrets = &secrets_;
    opts.notification_period = config_.param<SimTime>("notification_period_ms", opts.notification_period);
    opts.seed = mix_seed(config_.seed, 1000 + i);
    auto node = providers::make_provider(*fabric_, selected[i], {addr.str(), ims::kProviderPort},
                                         aggregator_->endpoint(), opts);
    aggregator_->add_route(selected[i].short_code, {node->id(), node->endpoint(), selected[i].keywords});
    providers_.push_back(std::move(node));
  }

  std::map<std::string, std::size_t> per_carrier;
  for (const auto& spec : config_.devices) {
    const std::size_t k = carrier_index.at(spec.carrier);
    const std::size_t j = per_carrier[spec.carrier]++;
    ue::DeviceConfig dc;
    dc.number = spec.number;
    dc.carrier_id = spec.carrier;
    dc.role = spec.role;
    dc.approval = spec.approval.make();
    dc.auth_key = key_for(spec.number);
    dc.device_address = device_address(k, j);
    // Some handset models put IMS on rmnet0 and the Internet on rmnet1.
    const bool swapped = j % 2 == 1;
    dc.routing_table = {
        {"default", "fe80::5dc8", swapped ? "rmnet1" : "rmnet0", 1024},
        {ims_address(k), "fe80::1", swapped ? "rmnet0" : "rmnet1", std::nullopt},
    };
    const auto& policy = carriers_[k]->policy();
    dc.realm = policy.realm;
    dc.phone_context = policy.phone_context;
    dc.hash_label = policy.hash_label;
    dc.ipsec = policy.security_mode == ims::SecurityMode::Ipsec3gpp;
    dc.raw_answers_440 = spec.raw_answers_440;
    dc.inbox_enabled = spec.inbox_enabled;
    if (config_.defenses.mac) dc.mac = config_.defenses.mac->config;
    dc.seed = mix_seed(config_.seed, 5000 + devices_.size());
    if (devices_.contains(spec.number)) throw ConfigError("duplicate device " + spec.number);
    auto dev = std::make_unique<ue::Device>(*fabric_, dc);
    ims::Carrier* carrier = carriers_[k].get();
    dev->on_reachability = [carrier](const std::string& number, bool up) { carrier->set_reachable(number, up); };
    devices_[spec.number] = std::move(dev);
  }

  if (config_.defenses.mac) {
    for (const auto& p : providers_) {
      if (p->record().runtime_auth != providers::RuntimeAuth::Mac) continue;
      for (const auto& [number, dev] : devices_) {
        const auto code = secrets_.provision(number, p->id(), defenses::Channel::SecureWeb, rng_);
        dev->add_secret(p->record().short_code, code);
      }
    }
  }
}

ims::Carrier& World::carrier(const std::string& id) {
  for (auto& c : carriers_) {
    if (c->id() == id) return *c;
  }
  throw ConfigError("no carrier " + id);
}

ue::Device& World::device(const std::string& number) {
  auto it = devices_.find(number);
  if (it == devices_.end()) throw ConfigError("no device " + number);
  return *it->second;
}

providers::ProviderNode& World::provider(const std::string& name) {
  for (auto& p : providers_) {
    if (p->record().name == name) return *p;
  }
  throw ConfigError("no provider " + name);
}

void World::register_all() {
  for (auto& [number, dev] : devices_) dev->register_with_ims();
  fabric_->run_until(fabric_->now() + kSecond);
  for (std::size_t i = 0; i < config_.devices.size(); ++i) {
    const auto& spec = config_.devices[i];
    ue::Device& dev = *devices_.at(spec.number);
    if (!dev.registered()) throw ConfigError("device " + spec.number + " failed to register");
    if (!spec.online) dev.set_online(false);
  }
}

void World::schedule_notifications(SimTime until) {
  for (auto& p : providers_) {
    auto* sub = dynamic_cast<providers::SubscriptionService*>(p.get());
    if (!sub || sub->record().service_model != providers::ServiceModel::SubNotif) continue;
    const SimTime period = config_.param<SimTime>("notification_period_ms", 24 * kHour);
    if (period <= 0) throw ConfigError("notification period must be positive");
    for (SimTime t = period; t <= until; t += period) {
      fabric_->schedule_at(t, [sub] { sub->notification_tick(); });
    }
  }
}

}  // namespace smsim::scenario
