#pragma once

// Scenario config: a versioned JSON document describing devices, the
// legitimate AP, attack templates, the fake AP, and campaign settings.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "ecsim/campaign.hpp"

namespace ecsim {

inline constexpr int kSchemaVersion = 1;

// Per-field replacements applied on top of a built-in profile.
struct ProfileOverrides {
  std::optional<EnergyBand> e_base;
  std::map<ProtocolPayload, double> e_max;
  // Inner nullopt means "never disconnects".
  std::optional<std::optional<std::uint64_t>> ar_threshold_np;
  std::optional<std::optional<std::uint64_t>> ar_threshold_hp;
  // Inner nullopt means "survives".
  std::map<ProtocolPayload, std::optional<double>> sd_ref_min;
  std::optional<double> reception_linear_limit;
  std::optional<double> reception_gamma;
  std::optional<MinuteRange> fap_connect_range;
  std::optional<double> fap_e_level;
  std::optional<double> fap_e_max;
  std::optional<double> fap_attach_success;
  std::optional<double> supply_voltage;
  std::optional<RateRange> threshold_search;

  bool empty() const;
  friend bool operator==(const ProfileOverrides&, const ProfileOverrides&) = default;
};

struct DeviceConfig {
  std::string id;
  std::string profile;  // built-in profile name
  ProfileOverrides overrides;
  double fap_injection_minutes = 10.0;

  friend bool operator==(const DeviceConfig&, const DeviceConfig&) = default;
};

enum class OutputFormat { Csv, Json };

struct ScenarioConfig {
  int schema_version = kSchemaVersion;
  std::uint64_t seed = 0;
  std::vector<DeviceConfig> devices;
  AccessPoint ap = default_access_point();
  std::vector<FloodTemplate> attack_matrix;
  FloodTemplate ddos;
  bool fap_enabled = true;
  double signal_margin = 10.0;
  InjectionPlan injection;
  double baseline_minutes = 30.0;
  bool measure_tables = true;
  std::optional<std::string> output_directory;
  std::set<OutputFormat> formats{OutputFormat::Csv, OutputFormat::Json};

  friend bool operator==(const ScenarioConfig&, const ScenarioConfig&) = default;
};

// The shipped scenario: the default campaign plan expressed as config.
ScenarioConfig default_config(std::uint64_t seed);

// Throws ValidationError listing every problem. Parse failures name the line.
ScenarioConfig parse_config(std::string_view text);
ScenarioConfig load_config(const std::filesystem::path& path);
std::string write_config(const ScenarioConfig& config);

std::shared_ptr<const DeviceProfile> resolve_profile(const DeviceConfig& device);
CampaignPlan to_plan(const ScenarioConfig& config);

}  // namespace ecsim
