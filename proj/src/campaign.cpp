#include "ecsim/campaign.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>

namespace ecsim {

std::string_view to_string(PhaseKind k) {
  switch (k) {
    case PhaseKind::Baseline: return "baseline";
    case PhaseKind::EcDdos: return "ec-ddos";
    case PhaseKind::Ddos: return "ddos";
    case PhaseKind::Fap: return "fap";
  }
  return "?";
}

FloodSpec FloodTemplate::to_spec(NodeId target, std::uint64_t rate_if_unset) const {
  FloodSpec spec;
  spec.protocol = protocol;
  spec.target = target;
  spec.dst_port = protocol == Protocol::IcmpEcho ? std::nullopt : port;
  spec.rate = rate.value_or(rate_if_unset);
  spec.payload = payload;
  if (protocol == Protocol::TcpSyn) spec.tcp_flags = kSyn;
  spec.max_duration_minutes = duration_minutes;
  return spec;
}

namespace {

std::vector<std::string> validate_template(const FloodTemplate& t, const std::string& where) {
  std::vector<std::string> problems;
  if (t.protocol == Protocol::IcmpEcho && t.port) {
    problems.push_back(where + ": icmp floods take no port selector");
  }
  if (t.rate && *t.rate > kRateCapPps) problems.push_back(where + ": rate exceeds cap");
  if (!(t.duration_minutes >= kMinFloodMinutes && t.duration_minutes <= kMaxFloodMinutes)) {
    problems.push_back(where + ": duration must be within [8, 30] minutes");
  }
  return problems;
}

void append(std::vector<std::string>& into, std::vector<std::string> more) {
  into.insert(into.end(), std::make_move_iterator(more.begin()),
              std::make_move_iterator(more.end()));
}

double mean_of(const std::vector<TraceRow>& rows) {
  if (rows.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& r : rows) sum += r.joules;
  return sum / static_cast<double>(rows.size());
}

double peak_of(const std::vector<TraceRow>& rows) {
  double peak = 0.0;
  for (const auto& r : rows) peak = std::max(peak, r.joules);
  return peak;
}

}  // namespace

std::vector<std::string> validate(const CampaignPlan& plan) {
  std::vector<std::string> problems;
  if (plan.devices.empty()) problems.push_back("device list must not be empty");
  if (!(plan.baseline_minutes >= kMinBaselineMinutes)) {
    problems.push_back("baseline_minutes must be >= 30");
  }
  if (plan.attack_matrix.empty()) problems.push_back("attack matrix must not be empty");
  if (!(plan.signal_margin > 0.0)) problems.push_back("fap signal margin must be positive");
  if (plan.injection.mix.empty()) problems.push_back("fap injection mix must not be empty");
  if (plan.injection.rate && *plan.injection.rate > kRateCapPps) {
    problems.push_back("fap injection rate exceeds cap");
  }
  append(problems, validate(plan.ap));
  if (plan.ap.is_fake) problems.push_back("the legitimate AP cannot be fake");
  for (std::size_t i = 0; i < plan.attack_matrix.size(); ++i) {
    append(problems, validate_template(plan.attack_matrix[i], "attack[" + std::to_string(i) + "]"));
  }
  append(problems, validate_template(plan.ddos, "ddos"));
  std::vector<std::string> seen;
  for (const auto& d : plan.devices) {
    if (d.id.empty()) problems.push_back("device id must not be empty");
    if (!std::all_of(d.id.begin(), d.id.end(), [](unsigned char ch) {
          return std::isalnum(ch) || ch == '_' || ch == '-';
        })) {
      problems.push_back("device id '" + d.id + "' may only use letters, digits, '_' and '-'");
    }
    if (std::find(seen.begin(), seen.end(), d.id) != seen.end()) {
      problems.push_back("duplicate device id '" + d.id + "'");
    }
    seen.push_back(d.id);
    if (!d.profile) {
      problems.push_back("device '" + d.id + "' has no profile");
      continue;
    }
    append(problems, validate(*d.profile));
    if (!(d.fap_injection_minutes >= kMinFloodMinutes &&
          d.fap_injection_minutes <= kMaxFloodMinutes)) {
      problems.push_back("device '" + d.id + "': fap injection minutes must be within [8, 30]");
    }
  }
  return problems;
}

CampaignPlan default_plan(std::uint64_t seed) {
  CampaignPlan plan;
  plan.seed = seed;
  // Injection lengths chosen so each device's above-baseline energy splits
  // roughly 55/45 between the flood phases and the fake AP.
  plan.devices.push_back({"raspberry_pi", builtin_profile("raspberry_pi"), 22.0});
  plan.devices.push_back({"arduino", builtin_profile("arduino"), 10.0});
  plan.attack_matrix = {
      FloodTemplate{Protocol::TcpSyn, PayloadClass::NoPayload, std::nullopt, std::nullopt, 10.0},
      FloodTemplate{Protocol::IcmpEcho, PayloadClass::NoPayload, std::nullopt, std::nullopt, 10.0},
      FloodTemplate{Protocol::Udp, PayloadClass::NoPayload, std::nullopt, std::nullopt, 10.0},
  };
  plan.ddos = FloodTemplate{Protocol::IcmpEcho, PayloadClass::NoPayload, std::nullopt,
                            std::nullopt, kMaxFloodMinutes};
  return plan;
}

std::optional<Attribution> attribute_energy(std::span<const SourcedJoules> samples,
                                            double baseline_mean) {
  Attribution a;
  for (const auto& s : samples) {
    const double above = std::max(0.0, s.joules - baseline_mean);
    (s.source == AttackSource::EcDdos ? a.ec_ddos_joules : a.fap_joules) += above;
  }
  const double total = a.ec_ddos_joules + a.fap_joules;
  if (!(total > 0.0)) return std::nullopt;
  a.ec_ddos = a.ec_ddos_joules / total;
  a.fap = 1.0 - a.ec_ddos;
  return a;
}

Campaign::Campaign(CampaignPlan plan) : plan_(std::move(plan)) {
  if (auto problems = validate(plan_); !problems.empty()) throw ValidationError(problems);
  testbed_ = std::make_unique<Testbed>(plan_.ap, plan_.seed);
  report_.seed = plan_.seed;
  for (const auto& d : plan_.devices) {
    DeviceState st;
    st.plan = &d;
    st.node = testbed_->add_device(d.id, d.profile);
    devices_.emplace(d.id, st);
    report_.device_classes[d.id] = d.profile->device_class;
  }
}

Campaign::DeviceState& Campaign::state(std::string_view device) {
  auto it = devices_.find(device);
  if (it == devices_.end()) throw Error("unknown device '" + std::string(device) + "'");
  return it->second;
}

void Campaign::require_baseline(const DeviceState& st) const {
  if (!st.baseline_mean) {
    throw Error("phase order: '" + st.plan->id + "' has no completed baseline");
  }
}

std::vector<TraceRow> Campaign::rows(NodeId node, SimTime from, SimTime to) const {
  std::vector<TraceRow> out;
  for (const auto& rec : testbed_->fleet().at(node).trace()) {
    if (rec.sample.t < from || rec.sample.t > to) continue;
    out.push_back(TraceRow{rec.sample.t, rec.sample.joules, rec.received_pps, rec.associated(),
                           rec.source});
  }
  return out;
}

std::vector<BaselineStats> Campaign::run_phase_baseline() {
  return run_phase_baseline(plan_.baseline_minutes);
}

std::vector<BaselineStats> Campaign::run_phase_baseline(double minutes) {
  if (!(minutes >= kMinBaselineMinutes)) {
    throw ValidationError("baseline needs at least 30 minutes of samples");
  }
  auto& sim = testbed_->sim();
  for (auto& [id, st] : devices_) {
    if (!testbed_->fleet().at(st.node).powered()) throw Error("device '" + id + "' is powered off");
    if (!sim.association(st.node).bound.associated()) {
      throw Error("device '" + id + "' is offline");
    }
  }
  const SimTime start = sim.now();
  const auto seconds = static_cast<SimTime>(std::llround(minutes * 60.0));
  testbed_->run_for(seconds);

  std::vector<BaselineStats> out;
  for (const auto& d : plan_.devices) {
    DeviceState& st = devices_.at(d.id);
    BaselineStats b;
    b.device = d.id;
    b.band = d.profile->e_base;
    b.start = start;
    b.end = start + seconds;
    b.trace = rows(st.node, start + 1, start + seconds);
    b.samples = b.trace.size();
    b.mean = mean_of(b.trace);
    b.max = peak_of(b.trace);
    b.min = b.trace.empty() ? 0.0 : b.trace.front().joules;
    for (const auto& r : b.trace) b.min = std::min(b.min, r.joules);
    st.baseline_mean = b.mean;
    out.push_back(b);
    report_.baseline.push_back(std::move(b));
  }
  return out;
}

ScanReport Campaign::run_phase_scan() {
  for (auto& [id, st] : devices_) require_baseline(st);
  auto& attacker = testbed_->attacker();
  ScanReport scan = attacker.scan_network();
  report_.network_scan = scan;
  for (const auto& d : plan_.devices) {
    const NodeId node = devices_.at(d.id).node;
    for (Transport t : {Transport::Tcp, Transport::Udp}) {
      report_.port_scans.push_back(PortScanRow{d.id, attacker.scan_ports(node, t)});
    }
  }
  return scan;
}

AttackRecord Campaign::run_phase_ecddos(std::string_view device, const FloodTemplate& tmpl) {
  DeviceState& st = state(device);
  require_baseline(st);
  const DeviceProfile& profile = *st.plan->profile;
  const auto threshold = profile.ar_threshold(tmpl.payload);
  const std::uint64_t default_rate = threshold ? *threshold - 1 : kRateCapPps;
  FloodSpec spec = tmpl.to_spec(st.node, default_rate);
  if (threshold && spec.rate >= *threshold) {
    throw ValidationError("this is a DDoS spec, not EC-DDoS: rate " + std::to_string(spec.rate) +
                          " >= threshold " + std::to_string(*threshold));
  }
  auto& sim = testbed_->sim();
  if (!sim.association(st.node).bound.associated()) {
    throw Error("device '" + st.plan->id + "' is offline");
  }

  AttackRecord rec;
  rec.device = st.plan->id;
  rec.kind = PhaseKind::EcDdos;
  rec.spec = spec;
  rec.start = sim.now();
  const FloodHandle flood = testbed_->attacker().launch_flood(spec);
  testbed_->run_for(spec.duration_seconds());
  rec.counters = testbed_->attacker().stop_flood(flood);
  rec.end = sim.now();
  rec.trace = rows(st.node, rec.start + 1, rec.end);
  rec.threshold = Threshold{threshold};
  rec.e1 = *st.baseline_mean;
  rec.e2 = mean_of(rec.trace);
  rec.peak = peak_of(rec.trace);
  if (rec.counters.target_disconnected_at) {
    rec.disconnect_minutes =
        static_cast<double>(*rec.counters.target_disconnected_at - rec.start) / 60.0;
  }
  report_.attacks.push_back(rec);
  return rec;
}

AttackRecord Campaign::run_phase_ddos_disconnect(std::string_view device,
                                                 const FloodTemplate& tmpl) {
  DeviceState& st = state(device);
  require_baseline(st);
  const DeviceProfile& profile = *st.plan->profile;
  const auto threshold = profile.ar_threshold(tmpl.payload);
  FloodSpec spec = tmpl.to_spec(st.node, threshold.value_or(kRateCapPps));
  if (threshold && spec.rate < *threshold) {
    throw ValidationError("rate " + std::to_string(spec.rate) + " is below the disconnect threshold " +
                          std::to_string(*threshold) + "; use an EC-DDoS phase");
  }
  auto& sim = testbed_->sim();
  if (!sim.association(st.node).bound.associated()) {
    throw Error("device '" + st.plan->id + "' is offline");
  }

  AttackRecord rec;
  rec.device = st.plan->id;
  rec.kind = PhaseKind::Ddos;
  rec.spec = spec;
  rec.start = sim.now();
  const FloodHandle flood = testbed_->attacker().launch_flood(spec);
  while (flood.active() && !flood.counters().target_disconnected_at) testbed_->run_for(1);
  rec.counters = testbed_->attacker().stop_flood(flood);
  rec.end = sim.now();
  rec.trace = rows(st.node, rec.start + 1, rec.end);
  rec.threshold = Threshold{threshold};
  rec.e1 = *st.baseline_mean;
  rec.e2 = mean_of(rec.trace);
  rec.peak = peak_of(rec.trace);
  if (rec.counters.target_disconnected_at) {
    rec.disconnect_minutes =
        static_cast<double>(*rec.counters.target_disconnected_at - rec.start) / 60.0;
    rec.sd_minutes = rec.disconnect_minutes;
    st.ddos_disconnected = true;
  }
  report_.attacks.push_back(rec);
  return rec;
}

FapRecord Campaign::run_phase_fap(std::string_view device) {
  DeviceState& st = state(device);
  auto& sim = testbed_->sim();
  if (!st.ddos_disconnected) {
    throw Error("phase order: fake-AP phase needs a prior DDoS disconnect of '" + st.plan->id + "'");
  }
  if (sim.association(st.node).bound.associated()) {
    throw Error("phase order: '" + st.plan->id + "' is associated again; fake-AP takeover needs it disconnected");
  }
  if (st.fap_done) throw Error("fake-AP phase already ran for '" + st.plan->id + "'");

  FakeAccessPoint* fap = testbed_->fake_ap();
  if (fap == nullptr) fap = &testbed_->deploy_fake_ap(plan_.signal_margin, plan_.injection.mix);
  fap->start_broadcasting();
  fap->enable_monitoring();

  FapRecord rec;
  rec.device = st.plan->id;
  rec.attract_start = sim.now();
  const auto attraction = fap->attract(st.node);
  while (attraction->pending()) testbed_->run_for(1);
  rec.attempts = attraction->attempts;
  rec.attempt_delays_min = attraction->attempt_delays_min;
  st.fap_done = true;
  if (!attraction->connected_at) {
    report_.fap.push_back(rec);
    return rec;
  }
  rec.connected = true;
  rec.connect_minutes = attraction->connect_minutes();

  const DeviceProfile& profile = *st.plan->profile;
  FloodTemplate inject;
  inject.protocol = plan_.injection.mix.front();
  inject.payload = plan_.injection.payload;
  inject.rate = plan_.injection.rate;
  inject.duration_minutes = st.plan->fap_injection_minutes;
  const FloodSpec spec = inject.to_spec(st.node, calibration_rate(profile));

  const CaptureSlice capture = fap->capture(st.node);
  rec.injection_start = sim.now();
  const FloodHandle flood = fap->inject_malicious(st.node, spec);
  testbed_->run_for(spec.duration_seconds());
  rec.counters = stop_flood(sim, flood);
  rec.injection_end = sim.now();
  rec.trace = rows(st.node, rec.injection_start + 1, rec.injection_end);
  rec.capture = capture.entries();
  rec.captured_packets = capture.packet_count();
  rec.mean = mean_of(rec.trace);
  rec.peak = peak_of(rec.trace);
  report_.fap.push_back(rec);
  return rec;
}

Threshold Campaign::find_threshold_ar(std::string_view device, Protocol protocol,
                                      PayloadClass payload) {
  DeviceState& st = state(device);
  if (!testbed_->sim().association(st.node).bound.associated()) {
    throw Error("device '" + st.plan->id + "' is offline");
  }
  return ecsim::find_threshold_ar(st.plan->profile, protocol, payload);
}

void Campaign::measure_tables() {
  for (const auto& d : plan_.devices) {
    for (PayloadClass payload : {PayloadClass::NoPayload, PayloadClass::HighPayload}) {
      for (Protocol proto : {Protocol::IcmpEcho, Protocol::TcpSyn, Protocol::Udp}) {
        SurvivalCell cell;
        cell.device = d.id;
        cell.protocol = proto;
        cell.payload = payload;
        cell.threshold = ecsim::find_threshold_ar(d.profile, proto, payload);
        const std::uint64_t rate = cell.threshold.pps.value_or(kRateCapPps);
        cell.sd_minutes = measure_survival(d.profile, proto, payload, rate).sd_minutes;
        report_.survival.push_back(cell);
      }
    }
  }
}

CampaignReport Campaign::report() const {
  CampaignReport out = report_;
  out.attribution.clear();
  std::vector<SourcedJoules> everything;
  double weighted_baseline = 0.0;
  for (const auto& d : plan_.devices) {
    const DeviceState& st = devices_.at(d.id);
    DeviceAttribution da;
    da.device = d.id;
    if (st.baseline_mean) {
      std::vector<SourcedJoules> samples;
      auto take = [&](const std::vector<TraceRow>& rows) {
        for (const auto& r : rows) {
          if (r.source == EnergySource::Injection) {
            samples.push_back({AttackSource::Fap, r.joules});
          } else if (r.source == EnergySource::Flood) {
            samples.push_back({AttackSource::EcDdos, r.joules});
          }
        }
      };
      for (const auto& a : report_.attacks) {
        if (a.device == d.id) take(a.trace);
      }
      for (const auto& f : report_.fap) {
        if (f.device == d.id) take(f.trace);
      }
      da.split = attribute_energy(samples, *st.baseline_mean);
      for (const auto& s : samples) {
        everything.push_back({s.source, s.joules - *st.baseline_mean});
      }
    }
    out.attribution.push_back(std::move(da));
  }
  out.overall = attribute_energy(everything, weighted_baseline);
  return out;
}

CampaignReport run_full_campaign(const CampaignPlan& plan) {
  Campaign campaign(plan);
  try {
    campaign.run_phase_baseline();
    campaign.run_phase_scan();
    if (plan.measure_tables) campaign.measure_tables();
    for (const auto& d : plan.devices) {
      bool gained = false;
      for (const auto& tmpl : plan.attack_matrix) {
        const AttackRecord rec = campaign.run_phase_ecddos(d.id, tmpl);
        gained = gained || rec.e1 < rec.e2;
      }
      // Take the device over only once flooding has shown an energy gain.
      if (!gained) continue;
      const AttackRecord ddos = campaign.run_phase_ddos_disconnect(d.id, plan.ddos);
      if (plan.fap_enabled && ddos.disconnect_minutes) campaign.run_phase_fap(d.id);
    }
  } catch (const Error& e) {
    CampaignReport partial = campaign.report();
    partial.completed = false;
    partial.failure = e.what();
    throw CampaignFailure(e.what(), std::move(partial));
  }
  CampaignReport report = campaign.report();
  report.completed = true;
  return report;
}

}  // namespace ecsim
