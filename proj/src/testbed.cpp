#include "ecsim/campaign.hpp"

namespace ecsim {

AccessPoint default_access_point() {
  AccessPoint ap;
  ap.ssid = "ward-3-iot";
  ap.bssid = *MacAddress::parse("a4:2b:b0:10:20:30");
  ap.channel = 6;
  ap.security_profile = "wpa2-psk";
  ap.signal_strength = -55.0;
  return ap;
}

Testbed::Testbed(const AccessPoint& legit, std::uint64_t seed, TestbedOptions options)
    : seed_(seed), sim_(std::make_unique<Simulator>()), fleet_(std::make_unique<Fleet>()) {
  if (legit.is_fake) throw Error("the legitimate AP cannot be fake");
  legit_ap_ = sim_->add_access_point("ap", legit);
  sim_->set_broadcasting(legit_ap_, true);
  const NodeId attacker = sim_->add_station("attacker", legit.ssid, legit.security_profile);
  sim_->associate(attacker, legit_ap_);
  attacker_ = std::make_unique<Attacker>(*sim_, *fleet_, attacker);
  if (options.metering) fleet_->start_metering(*sim_);
}

NodeId Testbed::add_device(const std::string& name, std::shared_ptr<const DeviceProfile> profile) {
  if (sim_->find(name)) throw ValidationError("duplicate node name '" + name + "'");
  const AccessPoint& ap = sim_->access_point(legit_ap_);
  const NodeId id = sim_->add_station(name, ap.ssid, ap.security_profile);
  fleet_->add(id, std::move(profile), mix_seed(seed_, 0x1000 + device_count_++));
  sim_->associate(id, legit_ap_);
  return id;
}

NodeId Testbed::device(std::string_view name) const {
  const auto id = sim_->find(name);
  if (!id || fleet_->find(*id) == nullptr) {
    throw Error("unknown device '" + std::string(name) + "'");
  }
  return *id;
}

FakeAccessPoint& Testbed::deploy_fake_ap(double signal_margin, std::vector<Protocol> injection_mix) {
  if (fake_ap_) throw Error("fake AP already deployed");
  fake_ap_ = std::make_unique<FakeAccessPoint>(*sim_, *fleet_, sim_->access_point(legit_ap_),
                                               signal_margin, std::move(injection_mix), seed_);
  return *fake_ap_;
}

std::uint64_t Testbed::send_telemetry(NodeId device, std::uint64_t count, Protocol protocol) {
  const auto& bound = sim_->association(device).bound;
  Packet p;
  p.src = device;
  p.dst = bound.ap.value_or(legit_ap_);
  p.protocol = protocol;
  if (protocol != Protocol::IcmpEcho) p.dst_port = 1883;
  p.timestamp = sim_->now();
  return sim_->deliver(PacketBatch{p, count});
}

SurvivalMeasurement measure_survival(std::shared_ptr<const DeviceProfile> profile,
                                     Protocol protocol, PayloadClass payload, std::uint64_t rate,
                                     double max_minutes) {
  Testbed bed(default_access_point(), 0, TestbedOptions{.metering = false});
  const NodeId target = bed.add_device("probe-target", std::move(profile));
  FloodSpec spec;
  spec.protocol = protocol;
  spec.target = target;
  spec.rate = rate;
  spec.payload = payload;
  spec.max_duration_minutes = max_minutes;
  const SimTime start = bed.sim().now();
  const FloodHandle flood = bed.attacker().launch_flood(spec);
  while (flood.active() && !flood.counters().target_disconnected_at) bed.run_for(1);
  bed.attacker().stop_flood(flood);

  SurvivalMeasurement out;
  if (const auto at = flood.counters().target_disconnected_at) {
    out.disconnected = true;
    out.sd_minutes = static_cast<double>(*at - start) / 60.0;
  }
  return out;
}

bool disconnects_at_rate(std::shared_ptr<const DeviceProfile> profile, Protocol protocol,
                         PayloadClass payload, std::uint64_t rate, double max_minutes) {
  return measure_survival(std::move(profile), protocol, payload, rate, max_minutes).disconnected;
}

Threshold find_threshold_ar(std::shared_ptr<const DeviceProfile> profile, Protocol protocol,
                            PayloadClass payload) {
  auto disconnects = [&](std::uint64_t r) {
    return disconnects_at_rate(profile, protocol, payload, r);
  };
  std::uint64_t lo = profile->threshold_search.lo;
  std::uint64_t hi = profile->threshold_search.hi;
  if (!disconnects(hi)) {
    if (!disconnects(kRateCapPps)) return Threshold{};
    lo = hi + 1;
    hi = kRateCapPps;
  }
  // Invariant: disconnects(hi); everything below lo is unknown or survives.
  while (lo < hi) {
    const std::uint64_t mid = lo + (hi - lo) / 2;
    if (disconnects(mid)) {
      hi = mid;
    } else {
      lo = mid + 1;
    }
  }
  return Threshold{hi};
}

}  // namespace ecsim
