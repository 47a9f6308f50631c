#include "ecsim/devicemodel.hpp"

#include <algorithm>
#include <cmath>

namespace ecsim {

namespace {

constexpr double kSaturationPoint = 0.95;
constexpr double kProgressEpsilon = 1e-9;

double saturating(double base, double ceiling, double received, double kappa) {
  return base + (ceiling - base) * (1.0 - std::exp(-received / kappa));
}

}  // namespace

std::string_view to_string(DeviceClass c) {
  return c == DeviceClass::RaspberryPi ? "raspberry_pi" : "arduino";
}

std::optional<DeviceClass> parse_device_class(std::string_view text) {
  if (text == "raspberry_pi") return DeviceClass::RaspberryPi;
  if (text == "arduino") return DeviceClass::Arduino;
  return std::nullopt;
}

std::string_view to_string(EnergySource s) {
  switch (s) {
    case EnergySource::Idle: return "idle";
    case EnergySource::Flood: return "flood";
    case EnergySource::Injection: return "injection";
  }
  return "?";
}

std::optional<double> DeviceProfile::sd_ref(Protocol proto, PayloadClass p) const {
  if (auto it = sd_ref_min.find({proto, p}); it != sd_ref_min.end()) return it->second;
  return std::nullopt;
}

double DeviceProfile::ceiling(Protocol proto, PayloadClass p, std::optional<PortState> port) const {
  auto it = e_max.find({proto, p});
  if (it == e_max.end()) {
    throw Error("profile '" + name + "' has no energy ceiling for " +
                std::string(to_string(proto)) + "/" + std::string(to_string(p)));
  }
  const double full = it->second;
  if (port && (*port == PortState::Closed || *port == PortState::Filtered)) {
    return e_base.mid() + 0.5 * (full - e_base.mid());
  }
  return full;
}

std::vector<std::string> validate(const DeviceProfile& profile) {
  std::vector<std::string> problems;
  const std::string who = "profile '" + profile.name + "': ";
  if (!(profile.e_base.lo > 0.0) || profile.e_base.lo > profile.e_base.hi) {
    problems.push_back(who + "baseline band must satisfy 0 < lo <= hi");
  }
  for (const auto& [key, ceiling] : profile.e_max) {
    if (ceiling < profile.e_base.hi) {
      problems.push_back(who + "ceiling for " + std::string(to_string(key.first)) +
                         " is below the baseline band");
    } else if (ceiling - profile.e_base.mid() <= (1.0 - kSaturationPoint) * ceiling) {
      problems.push_back(who + "ceiling for " + std::string(to_string(key.first)) +
                         " is too close to baseline to reach 95%");
    }
  }
  for (Protocol p : {Protocol::TcpSyn, Protocol::Udp, Protocol::IcmpEcho}) {
    for (PayloadClass c : {PayloadClass::NoPayload, PayloadClass::HighPayload}) {
      if (!profile.e_max.contains({p, c})) {
        problems.push_back(who + "missing energy ceiling for " + std::string(to_string(p)) +
                           "/" + std::string(to_string(c)));
      }
    }
  }
  if (profile.ar_threshold_np && profile.ar_threshold_hp &&
      *profile.ar_threshold_hp > *profile.ar_threshold_np) {
    problems.push_back(who + "HP threshold must not exceed NP threshold");
  }
  if (!profile.ar_threshold_np && profile.ar_threshold_hp) {
    problems.push_back(who + "HP threshold bounded while NP is unbounded");
  }
  for (auto t : {profile.ar_threshold_np, profile.ar_threshold_hp}) {
    if (t && (*t == 0 || *t > kRateCapPps)) {
      problems.push_back(who + "thresholds must lie in (0, rate cap]");
    }
  }
  for (const auto& [key, sd] : profile.sd_ref_min) {
    if (sd && !(*sd > 0.0)) problems.push_back(who + "survival durations must be positive");
  }
  if (!(profile.reception_linear_limit > 0.0)) {
    problems.push_back(who + "reception linear limit must be positive");
  }
  if (!(profile.reception_gamma > 0.0)) problems.push_back(who + "reception gamma must be positive");
  if (!(profile.fap_connect_range.min > 0.0) ||
      profile.fap_connect_range.min > profile.fap_connect_range.max) {
    problems.push_back(who + "fake-AP connect range must satisfy 0 < min <= max");
  }
  if (!(profile.fap_e_level > profile.e_base.hi)) {
    problems.push_back(who + "fake-AP energy level must exceed the baseline band");
  }
  if (!(profile.fap_e_max * kSaturationPoint > profile.fap_e_level)) {
    problems.push_back(who + "fake-AP ceiling must put its 95% point above the fake-AP level");
  }
  if (!(profile.fap_attach_success > 0.0 && profile.fap_attach_success <= 1.0)) {
    problems.push_back(who + "fake-AP attach success must be in (0, 1]");
  }
  if (!(profile.supply_voltage > 0.0)) problems.push_back(who + "supply voltage must be positive");
  if (profile.threshold_search.lo == 0 ||
      profile.threshold_search.lo > profile.threshold_search.hi ||
      profile.threshold_search.hi > kRateCapPps) {
    problems.push_back(who + "threshold search range must satisfy 0 < lo <= hi <= cap");
  }
  if (!profile.ports.reconciles()) problems.push_back(who + "port table summary out of sync");
  return problems;
}

double reception_rate(double sent, const DeviceProfile& profile) {
  if (sent <= 0.0) return 0.0;
  const double limit = profile.reception_linear_limit;
  if (sent <= limit) return sent;
  const double gamma = profile.reception_gamma;
  return limit + gamma * std::log1p((sent - limit) / gamma);
}

std::optional<double> received_threshold(const DeviceProfile& profile, PayloadClass p) {
  if (auto t = profile.ar_threshold(p)) return reception_rate(static_cast<double>(*t), profile);
  return std::nullopt;
}

DisconnectVerdict disconnect_check(double received, const FloodSpec& spec,
                                   const DeviceProfile& profile, double elapsed_minutes) {
  if (elapsed_minutes > spec.max_duration_minutes + 1e-9) {
    throw Error("disconnect check past the flood's maximum duration");
  }
  const auto threshold = received_threshold(profile, spec.payload);
  const auto sd = profile.sd_ref(spec.protocol, spec.payload);
  if (!threshold || !sd || received < *threshold) return DisconnectVerdict::survives();
  const double minutes = *sd * (*threshold / received);
  return DisconnectVerdict::at(std::min(minutes, spec.max_duration_minutes));
}

Transport transport_of(Protocol p) {
  return p == Protocol::Udp ? Transport::Udp : Transport::Tcp;
}

std::optional<std::uint32_t> resolve_port(const FloodSpec& spec, const DeviceProfile& profile) {
  if (spec.protocol == Protocol::IcmpEcho) return std::nullopt;
  const Transport t = transport_of(spec.protocol);
  if (!spec.dst_port) {
    // No selector: the lowest open port, else the lowest open|filtered one.
    for (PortState s : {PortState::Open, PortState::OpenFiltered}) {
      if (auto slot = profile.ports.lowest_in_state(t, s)) return slot;
    }
    throw Error("no " + std::string(to_string(t)) + " port that is open or open|filtered on '" +
                profile.name + "'");
  }
  if (const auto* slot = std::get_if<std::uint32_t>(&*spec.dst_port)) return *slot;
  const PortState wanted = std::get<PortState>(*spec.dst_port);
  if (auto slot = profile.ports.lowest_in_state(t, wanted)) return slot;
  throw Error("no " + std::string(to_string(t)) + " port in state " +
              std::string(to_string(wanted)) + " on '" + profile.name + "'");
}

std::optional<PortState> targeted_port_state(const FloodSpec& spec, const DeviceProfile& profile) {
  const auto slot = resolve_port(spec, profile);
  if (!slot) return std::nullopt;
  // Unscanned slots behave like closed ports.
  return profile.ports.state(transport_of(spec.protocol), *slot).value_or(PortState::Closed);
}

std::uint64_t calibration_rate(const DeviceProfile& profile) {
  if (profile.ar_threshold_np) return *profile.ar_threshold_np - 1;
  return kRateCapPps;
}

double saturation_constant(const DeviceProfile& profile, double ceiling) {
  const double base = profile.e_base.mid();
  const double at = reception_rate(static_cast<double>(calibration_rate(profile)), profile);
  return at / std::log((ceiling - base) / ((1.0 - kSaturationPoint) * ceiling));
}

double attack_energy_rate(double received, const FloodSpec& spec, const DeviceProfile& profile) {
  const double ceiling =
      profile.ceiling(spec.protocol, spec.payload, targeted_port_state(spec, profile));
  return saturating(profile.e_base.mid(), ceiling, std::max(received, 0.0),
                    saturation_constant(profile, ceiling));
}

double fap_energy_rate(double received, const DeviceProfile& profile) {
  return saturating(profile.e_base.mid(), profile.fap_e_max, std::max(received, 0.0),
                    saturation_constant(profile, profile.fap_e_max));
}

double energy_rate(double received, const FloodSpec* spec, const DeviceProfile& profile,
                   EnergyNoise& noise) {
  if (spec == nullptr) return noise.baseline(profile.e_base);
  const double e = attack_energy_rate(received, *spec, profile);
  if (spec->protocol != Protocol::Udp || received <= 0.0) return e;
  const double ceiling =
      profile.ceiling(spec->protocol, spec->payload, targeted_port_state(*spec, profile));
  const double swing = kUdpJitterFraction * (e - profile.e_base.mid()) * noise.jitter();
  // Reflect upward swings that would touch the ceiling.
  return e + swing < ceiling ? e + swing : e - std::abs(swing);
}

Victim::Victim(NodeId node, std::shared_ptr<const DeviceProfile> profile, std::uint64_t seed)
    : node_(node), profile_(std::move(profile)), noise_(seed) {
  if (!profile_) throw Error("victim needs a profile");
}

Victim::Absorbed Victim::absorb(Simulator& sim, const FloodSpec& spec, std::uint64_t delivered,
                                EnergySource source, std::int64_t elapsed_seconds) {
  const SimTime t = sim.now();
  if (t != load_tick_) {
    progress_at_tick_start_ = load_tick_ == t - 1 ? progress_ : 0.0;
    load_tick_ = t;
    load_delivered_ = 0;
  }
  const double before = std::round(reception_rate(static_cast<double>(load_delivered_), *profile_));
  load_delivered_ += delivered;
  load_spec_ = spec;
  load_source_ = source;
  const double received = reception_rate(static_cast<double>(load_delivered_), *profile_);

  Absorbed out;
  // Whole packets, rounded so values on an integer do not lose one to float error.
  out.processed = static_cast<std::uint64_t>(std::round(received) - before);

  const auto verdict =
      disconnect_check(received, spec, *profile_, static_cast<double>(elapsed_seconds) / 60.0);
  progress_ = progress_at_tick_start_ + (verdict.disconnects ? 1.0 / (verdict.sd_minutes * 60.0) : 0.0);
  if (progress_ >= 1.0 - kProgressEpsilon && sim.association(node_).bound.associated()) {
    sim.disassociate(node_, "flood");
    out.disconnected = true;
    progress_ = 0.0;
    progress_at_tick_start_ = 0.0;
  }
  return out;
}

double Victim::received_now(const Simulator& sim) const {
  if (load_tick_ != sim.now()) return 0.0;
  return reception_rate(static_cast<double>(load_delivered_), *profile_);
}

double Victim::energy_rate_fap(const Simulator& sim) const {
  if (sim.association(node_).bound.kind != BindingKind::Fake) {
    throw Error("energy_rate_fap: device is not associated to a fake AP");
  }
  if (load_tick_ != sim.now() || load_source_ != EnergySource::Injection) {
    throw Error("energy_rate_fap: no malicious injection is reaching the device");
  }
  return fap_energy_rate(received_now(sim), *profile_);
}

EnergySample Victim::sample_meter(const Simulator& sim) {
  if (!powered_) throw Error("cannot sample a powered-off device");
  const double received = received_now(sim);
  const BindingKind binding = sim.association(node_).bound.kind;

  double joules = 0.0;
  EnergySource source = EnergySource::Idle;
  if (received > 0.0 && load_source_ == EnergySource::Injection) {
    joules = fap_energy_rate(received, *profile_);
    source = EnergySource::Injection;
  } else if (received > 0.0) {
    joules = energy_rate(received, &*load_spec_, *profile_, noise_);
    source = EnergySource::Flood;
  } else {
    joules = energy_rate(0.0, nullptr, *profile_, noise_);
  }
  if (binding == BindingKind::Fake) source = EnergySource::Injection;

  EnergySample s;
  s.t = sim.now();
  s.voltage = profile_->supply_voltage;
  s.watts = joules;  // one-second window
  s.joules = s.watts * 1.0;
  s.current = s.watts / s.voltage;
  trace_.push_back(MeterRecord{s, received, binding, source});
  return s;
}

Victim& Fleet::add(NodeId node, std::shared_ptr<const DeviceProfile> profile, std::uint64_t seed) {
  auto [it, inserted] = victims_.try_emplace(node, nullptr);
  if (!inserted) throw Error("node " + std::to_string(node) + " already has a victim");
  it->second = std::make_unique<Victim>(node, std::move(profile), seed);
  return *it->second;
}

Victim& Fleet::at(NodeId node) {
  if (auto* v = find(node)) return *v;
  throw Error("node " + std::to_string(node) + " is not a victim device");
}

const Victim& Fleet::at(NodeId node) const { return const_cast<Fleet&>(*this).at(node); }

Victim* Fleet::find(NodeId node) {
  auto it = victims_.find(node);
  return it == victims_.end() ? nullptr : it->second.get();
}

std::vector<NodeId> Fleet::nodes() const {
  std::vector<NodeId> out;
  for (const auto& [id, v] : victims_) out.push_back(id);
  return out;
}

void Fleet::start_metering(Simulator& sim) {
  if (metering_) return;
  metering_ = true;
  // Self-rescheduling tick; each firing samples every powered victim.
  struct Tick {
    Fleet* fleet;
    void operator()(Simulator& s) const {
      for (auto& [id, v] : fleet->victims_) {
        if (v->powered()) v->sample_meter(s);
      }
      s.schedule(s.now() + 1, "meter", *this, EventStage::Measure);
    }
  };
  sim.schedule(sim.now() + 1, "meter", Tick{this}, EventStage::Measure);
}

}  // namespace ecsim
