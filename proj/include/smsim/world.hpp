#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "smsim/defenses.hpp"
#include "smsim/ims_core.hpp"
#include "smsim/netsim.hpp"
#include "smsim/providers.hpp"
#include "smsim/ue.hpp"

namespace smsim::scenario {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ApprovalSpec {
  std::string kind = "AutoApprove";  // AutoApprove | AutoDeny | Script
  std::vector<std::string> script;   // "approve" / "deny"
  ue::ApprovalPolicy make() const;
};

struct CarrierSpec {
  ims::CarrierPolicy policy;
  std::vector<std::string> numbers;  // subscribers without a simulated handset
};

struct DeviceSpec {
  std::string number;
  std::string carrier;
  ue::Role role = ue::Role::Honest;
  ApprovalSpec approval;
  bool inbox_enabled = true;
  bool online = true;
  bool raw_answers_440 = true;
};

struct MacSpec {
  defenses::MacConfig config;
  std::vector<std::string> providers;  // provider names switched to MAC runtime auth
};

struct DefenseSpec {
  std::optional<MacSpec> mac;
  bool strict_origin = false;
  std::optional<ims::ApprovalTriggers> approval;
};

struct ProviderSpec {
  std::string catalog = "builtin";   // "builtin" or a path to a catalog file
  bool include_all = true;           // no include list given
  std::vector<std::string> include;  // names to instantiate
  std::vector<providers::ProviderRecord> records;  // inline additions
};

struct ScenarioConfig {
  std::string scenario;
  std::uint64_t seed = 0;
  SimTime duration_ms = 0;
  net::FabricConfig network;
  bool aggregator_carrier_only = true;
  std::vector<CarrierSpec> carriers;
  std::vector<DeviceSpec> devices;
  ProviderSpec providers;
  DefenseSpec defenses;
  nlohmann::json params = nlohmann::json::object();

  /// Scenario parameter with a fallback.
  template <typename T>
  T param(const std::string& key, T fallback) const {
    if (!params.contains(key)) return fallback;
    try {
      return params.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      throw ConfigError("parameter '" + key + "' has the wrong type");
    }
  }
};

/// Parses a configuration document. Missing sections are filled from the
/// defaults of the named scenario; present sections replace them, except
/// params, which are merged key by key.
ScenarioConfig parse_config(const nlohmann::json& doc);
ScenarioConfig load_config(const std::string& path);
/// Defaults for a named scenario; throws ConfigError for unknown names.
nlohmann::json default_config_json(const std::string& scenario);
ScenarioConfig default_config(const std::string& scenario);

/// Every network element of one simulation, wired through a Directory.
class World {
 public:
  explicit World(const ScenarioConfig& config);
  World(const World&) = delete;
  World& operator=(const World&) = delete;

  net::Fabric& fabric() { return *fabric_; }
  const ims::Directory& directory() const { return directory_; }
  ims::Carrier& carrier(const std::string& id);
  const std::vector<std::unique_ptr<ims::Carrier>>& carriers() const { return carriers_; }
  ims::Aggregator& aggregator() { return *aggregator_; }
  ue::Device& device(const std::string& number);
  bool has_device(const std::string& number) const { return devices_.contains(number); }
  const std::map<std::string, std::unique_ptr<ue::Device>>& devices() const { return devices_; }
  providers::ProviderNode& provider(const std::string& name);
  const std::vector<std::unique_ptr<providers::ProviderNode>>& providers() const { return providers_; }
  defenses::SecretStore& secrets() { return secrets_; }

  template <typename T>
  T& provider_as(const std::string& name) {
    auto* p = dynamic_cast<T*>(&provider(name));
    if (!p) throw ConfigError("provider " + name + " does not offer the required service");
    return *p;
  }

  /// Registers every device and runs until the exchanges settle; throws when
  /// a device fails to register.
  void register_all();
  /// Notification ticks at every multiple of the period up to `until`.
  void schedule_notifications(SimTime until);
  void run_until(SimTime t) { fabric_->run_until(t); }

  /// Address assigned to the n-th device (0-based) of the k-th carrier (0-based).
  static std::string device_address(std::size_t carrier_index, std::size_t device_index);
  static std::string ims_address(std::size_t carrier_index);

 private:
  ScenarioConfig config_;
  std::unique_ptr<net::Fabric> fabric_;
  ims::Directory directory_;
  std::vector<std::unique_ptr<ims::Carrier>> carriers_;
  std::unique_ptr<ims::Aggregator> aggregator_;
  std::vector<std::unique_ptr<providers::ProviderNode>> providers_;
  std::map<std::string, std::unique_ptr<ue::Device>> devices_;
  defenses::SecretStore secrets_;
  std::mt19937_64 rng_;
};

}  // namespace smsim::scenario
