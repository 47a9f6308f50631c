#pragma once

// Victim-device behavior: calibrated profiles, packet-reception saturation,
// disconnect thresholds and survival durations, the per-second energy response,
// and the meter that samples it.

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ecsim/flood_spec.hpp"
#include "ecsim/netsim.hpp"
#include "ecsim/ports.hpp"
#include "ecsim/rng.hpp"

namespace ecsim {

enum class DeviceClass { RaspberryPi, Arduino };
std::string_view to_string(DeviceClass c);
std::optional<DeviceClass> parse_device_class(std::string_view text);

struct EnergyBand {
  double lo = 0.0;
  double hi = 0.0;

  double mid() const { return 0.5 * (lo + hi); }
  bool contains(double e) const { return e >= lo && e <= hi; }
  friend bool operator==(const EnergyBand&, const EnergyBand&) = default;
};

struct MinuteRange {
  double min = 0.0;
  double max = 0.0;
  friend bool operator==(const MinuteRange&, const MinuteRange&) = default;
};

struct RateRange {
  std::uint64_t lo = 0;
  std::uint64_t hi = 0;
  friend bool operator==(const RateRange&, const RateRange&) = default;
};

using ProtocolPayload = std::pair<Protocol, PayloadClass>;

struct DeviceProfile {
  std::string name;
  DeviceClass device_class = DeviceClass::RaspberryPi;
  PortTable ports;

  EnergyBand e_base;                                            // J/s when idle
  std::map<ProtocolPayload, double> e_max;                      // J/s ceilings, open ports
  std::optional<std::uint64_t> ar_threshold_np;                 // nullopt: never disconnects
  std::optional<std::uint64_t> ar_threshold_hp;
  std::map<ProtocolPayload, std::optional<double>> sd_ref_min;  // survival at threshold

  double reception_linear_limit = 0.0;  // pps received 1:1 up to here
  double reception_gamma = 0.0;         // log-saturation scale above the limit

  MinuteRange fap_connect_range;
  double fap_e_level = 0.0;         // J/s the fake-AP injection must exceed
  double fap_e_max = 0.0;           // ceiling of the injection curve
  double fap_attach_success = 1.0;  // chance one attract attempt ends in association

  double supply_voltage = 5.0;
  RateRange threshold_search;

  std::optional<std::uint64_t> ar_threshold(PayloadClass p) const {
    return p == PayloadClass::NoPayload ? ar_threshold_np : ar_threshold_hp;
  }
  std::optional<double> sd_ref(Protocol proto, PayloadClass p) const;
  // Attack ceiling after the port-state attenuation (closed/filtered halve the rise).
  double ceiling(Protocol proto, PayloadClass p, std::optional<PortState> port) const;
};

std::vector<std::string> validate(const DeviceProfile& profile);

std::vector<std::string> builtin_profile_names();
// Throws Error for an unknown name.
std::shared_ptr<const DeviceProfile> builtin_profile(std::string_view name);

// Received packets per second for a given send rate: linear up to the limit,
// logarithmic above it.
double reception_rate(double sent, const DeviceProfile& profile);

// Received-rate equivalent of the payload class's attack-rate threshold.
std::optional<double> received_threshold(const DeviceProfile& profile, PayloadClass p);

struct DisconnectVerdict {
  bool disconnects = false;
  double sd_minutes = 0.0;  // meaningful only when disconnects

  static DisconnectVerdict survives() { return {}; }
  static DisconnectVerdict at(double minutes) { return {true, minutes}; }
};

// Survival duration scales inversely with how far the received rate sits above
// the threshold, anchored at the reference duration at the threshold itself.
DisconnectVerdict disconnect_check(double received, const FloodSpec& spec,
                                   const DeviceProfile& profile, double elapsed_minutes);

Transport transport_of(Protocol p);
// Without a selector: the lowest open port, else the lowest open|filtered one.
std::optional<std::uint32_t> resolve_port(const FloodSpec& spec, const DeviceProfile& profile);
std::optional<PortState> targeted_port_state(const FloodSpec& spec, const DeviceProfile& profile);

// Rate at which the saturating energy curve of the given ceiling reaches 95%.
double saturation_constant(const DeviceProfile& profile, double ceiling);
// Send rate the saturation constant is calibrated at: the largest rate that does
// not disconnect, or the rate cap when nothing disconnects.
std::uint64_t calibration_rate(const DeviceProfile& profile);

// Closed-form flood energy (J/s), without jitter.
double attack_energy_rate(double received, const FloodSpec& spec, const DeviceProfile& profile);
// Closed-form energy under fake-AP injection (J/s).
double fap_energy_rate(double received, const DeviceProfile& profile);

// Seeded noise for the meter: baseline draws and UDP fluctuation.
class EnergyNoise {
 public:
  explicit EnergyNoise(std::uint64_t seed)
      : baseline_(mix_seed(seed, 0xba5e)), jitter_(mix_seed(seed, 0x0dd)) {}

  double baseline(const EnergyBand& band) { return baseline_.uniform(band.lo, band.hi); }
  double jitter() { return jitter_.symmetric(); }

 private:
  DeterministicStream baseline_;
  DeterministicStream jitter_;
};

inline constexpr double kUdpJitterFraction = 0.05;

// Energy for one second. With no flood the value is a seeded draw inside the
// baseline band; UDP floods get a seeded +/-5% fluctuation of the rise.
double energy_rate(double received, const FloodSpec* spec, const DeviceProfile& profile,
                   EnergyNoise& noise);

struct EnergySample {
  SimTime t = 0;
  double voltage = 0.0;
  double current = 0.0;
  double watts = 0.0;
  double joules = 0.0;
};

enum class EnergySource { Idle, Flood, Injection };
std::string_view to_string(EnergySource s);

struct MeterRecord {
  EnergySample sample;
  double received_pps = 0.0;
  BindingKind binding = BindingKind::Disconnected;
  EnergySource source = EnergySource::Idle;

  bool associated() const { return binding != BindingKind::Disconnected; }
};

// Runtime state of one victim on the timeline.
class Victim {
 public:
  Victim(NodeId node, std::shared_ptr<const DeviceProfile> profile, std::uint64_t seed);

  NodeId node() const { return node_; }
  const DeviceProfile& profile() const { return *profile_; }
  std::shared_ptr<const DeviceProfile> shared_profile() const { return profile_; }

  bool powered() const { return powered_; }
  void power_on() { powered_ = true; }
  void power_off() { powered_ = false; }

  struct Absorbed {
    std::uint64_t processed = 0;
    bool disconnected = false;
  };
  // Feeds one delivered batch for the current tick. elapsed_seconds counts the
  // sending flood's active seconds including this one.
  Absorbed absorb(Simulator& sim, const FloodSpec& spec, std::uint64_t delivered,
                  EnergySource source, std::int64_t elapsed_seconds);

  // Received pps in the current tick (0 when nothing arrived).
  double received_now(const Simulator& sim) const;

  // Steady-state energy under fake-AP injection; throws unless the device is
  // bound to a fake AP and injection traffic is arriving this tick.
  double energy_rate_fap(const Simulator& sim) const;

  EnergySample sample_meter(const Simulator& sim);
  const std::vector<MeterRecord>& trace() const { return trace_; }

 private:
  NodeId node_;
  std::shared_ptr<const DeviceProfile> profile_;
  bool powered_ = true;
  EnergyNoise noise_;
  std::vector<MeterRecord> trace_;

  SimTime load_tick_ = -1;
  std::uint64_t load_delivered_ = 0;
  std::optional<FloodSpec> load_spec_;
  EnergySource load_source_ = EnergySource::Idle;
  double progress_ = 0.0;
  double progress_at_tick_start_ = 0.0;
};

// All victims on one timeline plus the once-per-second meter.
class Fleet {
 public:
  Victim& add(NodeId node, std::shared_ptr<const DeviceProfile> profile, std::uint64_t seed);
  Victim& at(NodeId node);
  const Victim& at(NodeId node) const;
  Victim* find(NodeId node);
  std::vector<NodeId> nodes() const;

  // Samples every powered victim at the Measure stage of each tick from now+1 on.
  void start_metering(Simulator& sim);

 private:
  std::map<NodeId, std::unique_ptr<Victim>> victims_;
  bool metering_ = false;
};

}  // namespace ecsim
