#pragma once

// Campaign orchestration: baseline -> scan -> EC-DDoS -> DDoS disconnect ->
// fake-AP takeover, plus the threshold / survival measurements and the
// attribution of above-baseline energy to its source.

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ecsim/attacker.hpp"
#include "ecsim/devicemodel.hpp"
#include "ecsim/fakeap.hpp"
#include "ecsim/netsim.hpp"

namespace ecsim {

AccessPoint default_access_point();

struct TestbedOptions {
  bool metering = true;
};

// One isolated simulated network: legitimate AP, attacker, victims, and
// optionally a fake AP, all on a single timeline.
class Testbed {
 public:
  Testbed(const AccessPoint& legit, std::uint64_t seed, TestbedOptions options = {});
  Testbed(const Testbed&) = delete;
  Testbed& operator=(const Testbed&) = delete;

  // Adds a powered-on victim associated to the legitimate AP.
  NodeId add_device(const std::string& name, std::shared_ptr<const DeviceProfile> profile);
  NodeId device(std::string_view name) const;

  Simulator& sim() { return *sim_; }
  const Simulator& sim() const { return *sim_; }
  Fleet& fleet() { return *fleet_; }
  const Fleet& fleet() const { return *fleet_; }
  Attacker& attacker() { return *attacker_; }
  NodeId legit_ap() const { return legit_ap_; }
  std::uint64_t seed() const { return seed_; }

  FakeAccessPoint& deploy_fake_ap(double signal_margin, std::vector<Protocol> injection_mix);
  FakeAccessPoint* fake_ap() { return fake_ap_.get(); }

  void run_for(SimTime seconds) { sim_->advance(sim_->now() + seconds); }
  // Device -> its AP, e.g. sensor readings.
  std::uint64_t send_telemetry(NodeId device, std::uint64_t count,
                               Protocol protocol = Protocol::Udp);

 private:
  std::uint64_t seed_;
  std::unique_ptr<Simulator> sim_;
  std::unique_ptr<Fleet> fleet_;
  std::unique_ptr<Attacker> attacker_;
  std::unique_ptr<FakeAccessPoint> fake_ap_;
  NodeId legit_ap_ = 0;
  std::size_t device_count_ = 0;
};

// Attack-rate threshold; nullopt when even the rate cap never disconnects.
struct Threshold {
  std::optional<std::uint64_t> pps;

  bool unbounded() const { return !pps; }
  friend bool operator==(const Threshold&, const Threshold&) = default;
};

struct SurvivalMeasurement {
  bool disconnected = false;
  std::optional<double> sd_minutes;
};

// Floods a fresh single-device testbed at `rate` for up to `max_minutes`.
SurvivalMeasurement measure_survival(std::shared_ptr<const DeviceProfile> profile,
                                     Protocol protocol, PayloadClass payload, std::uint64_t rate,
                                     double max_minutes = kMaxFloodMinutes);
bool disconnects_at_rate(std::shared_ptr<const DeviceProfile> profile, Protocol protocol,
                         PayloadClass payload, std::uint64_t rate,
                         double max_minutes = kMaxFloodMinutes);

// Binary search over integer pps for the lowest rate that disconnects within
// the maximum duration, starting from the profile's search range.
Threshold find_threshold_ar(std::shared_ptr<const DeviceProfile> profile, Protocol protocol,
                            PayloadClass payload);

struct FloodTemplate {
  Protocol protocol = Protocol::IcmpEcho;
  PayloadClass payload = PayloadClass::NoPayload;
  std::optional<PortSelector> port;
  std::optional<std::uint64_t> rate;  // default depends on the phase
  double duration_minutes = 10.0;

  FloodSpec to_spec(NodeId target, std::uint64_t rate_if_unset) const;
  friend bool operator==(const FloodTemplate&, const FloodTemplate&) = default;
};

struct InjectionPlan {
  std::vector<Protocol> mix{Protocol::TcpSyn, Protocol::Udp, Protocol::IcmpEcho};
  PayloadClass payload = PayloadClass::NoPayload;
  std::optional<std::uint64_t> rate;  // default: just below the NP threshold
  friend bool operator==(const InjectionPlan&, const InjectionPlan&) = default;
};

struct DevicePlan {
  std::string id;
  std::shared_ptr<const DeviceProfile> profile;
  double fap_injection_minutes = 10.0;
};

struct CampaignPlan {
  std::vector<DevicePlan> devices;
  AccessPoint ap = default_access_point();
  double baseline_minutes = 30.0;
  std::vector<FloodTemplate> attack_matrix;
  FloodTemplate ddos;
  bool fap_enabled = true;
  double signal_margin = 10.0;
  InjectionPlan injection;
  bool measure_tables = true;
  std::uint64_t seed = 0;
};

inline constexpr double kMinBaselineMinutes = 30.0;

std::vector<std::string> validate(const CampaignPlan& plan);

// Shipped plan: both built-in devices, one 10-minute EC-DDoS per protocol, an
// ICMP disconnect, and fake-AP injection lengths calibrated per device.
CampaignPlan default_plan(std::uint64_t seed);

enum class PhaseKind { Baseline, EcDdos, Ddos, Fap };
std::string_view to_string(PhaseKind k);

struct TraceRow {
  SimTime t = 0;
  double joules = 0.0;
  double received_pps = 0.0;
  bool associated = false;
  EnergySource source = EnergySource::Idle;
};

struct BaselineStats {
  std::string device;
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
  EnergyBand band;
  std::size_t samples = 0;
  SimTime start = 0;  // first sample at start + 1
  SimTime end = 0;
  std::vector<TraceRow> trace;
};

struct AttackRecord {
  std::string device;
  PhaseKind kind = PhaseKind::EcDdos;
  FloodSpec spec;
  SimTime start = 0;
  SimTime end = 0;
  std::vector<TraceRow> trace;
  FloodCounters counters;
  std::optional<double> disconnect_minutes;
  Threshold threshold;
  std::optional<double> sd_minutes;
  double e1 = 0.0;  // baseline mean
  double e2 = 0.0;  // mean over this phase
  double peak = 0.0;
};

struct FapRecord {
  std::string device;
  bool connected = false;
  int attempts = 0;
  std::vector<double> attempt_delays_min;
  std::optional<double> connect_minutes;  // from attract to association
  SimTime attract_start = 0;
  SimTime injection_start = 0;
  SimTime injection_end = 0;
  std::vector<TraceRow> trace;  // injection window
  FloodCounters counters;
  std::uint64_t captured_packets = 0;
  std::vector<CaptureEntry> capture;  // per-tick summaries from capture start
  double mean = 0.0;
  double peak = 0.0;
};

struct PortScanRow {
  std::string device;
  PortScanReport report;
};

struct SurvivalCell {
  std::string device;
  Protocol protocol = Protocol::IcmpEcho;
  PayloadClass payload = PayloadClass::NoPayload;
  Threshold threshold;
  std::optional<double> sd_minutes;
};

enum class AttackSource { EcDdos, Fap };

struct SourcedJoules {
  AttackSource source = AttackSource::EcDdos;
  double joules = 0.0;
};

struct Attribution {
  double ec_ddos = 0.0;  // fraction
  double fap = 0.0;
  double ec_ddos_joules = 0.0;
  double fap_joules = 0.0;
};

// Splits the above-baseline joules by source; nullopt when nothing rose above it.
std::optional<Attribution> attribute_energy(std::span<const SourcedJoules> samples,
                                            double baseline_mean);

struct DeviceAttribution {
  std::string device;
  std::optional<Attribution> split;
};

struct CampaignReport {
  std::uint64_t seed = 0;
  bool completed = false;
  std::optional<std::string> failure;
  std::vector<BaselineStats> baseline;
  std::optional<ScanReport> network_scan;
  std::vector<PortScanRow> port_scans;
  std::vector<SurvivalCell> survival;
  std::vector<AttackRecord> attacks;
  std::vector<FapRecord> fap;
  std::vector<DeviceAttribution> attribution;
  std::optional<Attribution> overall;
  std::map<std::string, DeviceClass> device_classes;
};

// Thrown when a phase fails inside run_full_campaign; carries what ran so far.
class CampaignFailure : public Error {
 public:
  CampaignFailure(const std::string& what, CampaignReport partial)
      : Error(what), partial_(std::move(partial)) {}
  const CampaignReport& partial() const { return partial_; }

 private:
  CampaignReport partial_;
};

class Campaign {
 public:
  explicit Campaign(CampaignPlan plan);

  const CampaignPlan& plan() const { return plan_; }
  Testbed& testbed() { return *testbed_; }

  std::vector<BaselineStats> run_phase_baseline();
  std::vector<BaselineStats> run_phase_baseline(double minutes);
  ScanReport run_phase_scan();
  AttackRecord run_phase_ecddos(std::string_view device, const FloodTemplate& tmpl);
  AttackRecord run_phase_ddos_disconnect(std::string_view device, const FloodTemplate& tmpl);
  FapRecord run_phase_fap(std::string_view device);
  Threshold find_threshold_ar(std::string_view device, Protocol protocol, PayloadClass payload);
  void measure_tables();

  // Everything recorded so far, with attribution computed over it.
  CampaignReport report() const;

 private:
  struct DeviceState {
    const DevicePlan* plan = nullptr;
    NodeId node = 0;
    std::optional<double> baseline_mean;
    bool ddos_disconnected = false;
    bool fap_done = false;
  };

  DeviceState& state(std::string_view device);
  std::vector<TraceRow> rows(NodeId node, SimTime from, SimTime to) const;
  void require_baseline(const DeviceState& st) const;

  CampaignPlan plan_;
  std::unique_ptr<Testbed> testbed_;
  std::map<std::string, DeviceState, std::less<>> devices_;
  CampaignReport report_;
};

CampaignReport run_full_campaign(const CampaignPlan& plan);

}  // namespace ecsim
