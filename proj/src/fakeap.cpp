#include "ecsim/fakeap.hpp"

#include <cmath>
#include <ostream>

namespace ecsim {

std::string_view to_string(FakeApMode m) {
  switch (m) {
    case FakeApMode::Dormant: return "dormant";
    case FakeApMode::Broadcasting: return "broadcasting";
    case FakeApMode::Monitoring: return "monitoring";
  }
  return "?";
}

std::string_view to_string(Direction d) { return d == Direction::Inbound ? "inbound" : "outbound"; }

AccessPoint clone_ap(const AccessPoint& legit, double signal_margin) {
  if (legit.is_fake) throw Error("cannot clone a fake AP");
  if (!(signal_margin > 0.0)) throw ValidationError("margin must be positive");
  AccessPoint fake = legit;
  fake.signal_strength = legit.signal_strength + signal_margin;
  fake.is_fake = true;
  return fake;
}

std::optional<double> Attraction::connect_minutes() const {
  if (!connected_at) return std::nullopt;
  return static_cast<double>(*connected_at - started) / 60.0;
}

std::vector<CaptureEntry> CaptureSlice::entries() const {
  std::vector<CaptureEntry> out;
  for (std::size_t i = begin_; i < log_->size(); ++i) {
    if ((*log_)[i].device == device_) out.push_back((*log_)[i]);
  }
  return out;
}

std::uint64_t CaptureSlice::packet_count() const {
  std::uint64_t n = 0;
  for (const auto& e : entries()) n += e.count;
  return n;
}

std::uint64_t CaptureSlice::packet_count(SimTime from, SimTime to) const {
  std::uint64_t n = 0;
  for (const auto& e : entries()) {
    if (e.t >= from && e.t <= to) n += e.count;
  }
  return n;
}

FakeAccessPoint::FakeAccessPoint(Simulator& sim, Fleet& fleet, const AccessPoint& legit,
                                 double signal_margin, std::vector<Protocol> injection_mix,
                                 std::uint64_t seed)
    : sim_(sim),
      fleet_(fleet),
      node_(sim.add_access_point("fake-ap", clone_ap(legit, signal_margin))),
      clone_of_(legit.bssid),
      injection_mix_(std::move(injection_mix)),
      rng_(mix_seed(seed, 0xfa4e)) {
  sim_.add_delivery_observer(
      [this](const PacketBatch& b, std::uint64_t delivered) { on_delivery(b, delivered); });
}

void FakeAccessPoint::start_broadcasting() {
  sim_.set_broadcasting(node_, true);
  if (mode_ == FakeApMode::Dormant) mode_ = FakeApMode::Broadcasting;
}

void FakeAccessPoint::enable_monitoring() {
  if (mode_ == FakeApMode::Dormant) throw Error("monitoring before broadcasting");
  mode_ = FakeApMode::Monitoring;
}

bool FakeAccessPoint::connected(NodeId device) const {
  const auto& b = sim_.association(device).bound;
  return b.kind == BindingKind::Fake && b.ap == node_;
}

std::shared_ptr<const Attraction> FakeAccessPoint::attract(NodeId device) {
  fleet_.at(device);
  if (sim_.association(device).bound.associated()) {
    throw Error("still associated: '" + sim_.name(device) + "' has a live AP connection");
  }
  if (mode_ == FakeApMode::Dormant) start_broadcasting();
  auto a = std::make_shared<Attraction>();
  a->device = device;
  a->started = sim_.now();
  schedule_attempt(a);
  return a;
}

void FakeAccessPoint::schedule_attempt(const std::shared_ptr<Attraction>& a) {
  const DeviceProfile& profile = fleet_.at(a->device).profile();
  const MinuteRange range = profile.fap_connect_range;
  const double delay_min = rng_.uniform(range.min, range.max);
  const bool succeeds = rng_.next_unit() < profile.fap_attach_success;
  ++a->attempts;
  a->attempt_delays_min.push_back(delay_min);

  const SimTime attempt_start = sim_.now();
  if (succeeds) {
    const SimTime at = attempt_start + static_cast<SimTime>(std::llround(delay_min * 60.0));
    sim_.schedule(at, "fap-attach", [this, a](Simulator& s) {
      // A device that got its legitimate link back is out of reach.
      if (s.association(a->device).bound.associated()) {
        a->failed = true;
        return;
      }
      const auto best = s.strongest_visible_ap(a->device);
      if (!best || *best != node_) {
        a->failed = true;
        return;
      }
      s.associate(a->device, node_);
      a->connected_at = s.now();
    });
    return;
  }
  const SimTime retry_at = attempt_start + static_cast<SimTime>(std::llround(range.max * 60.0));
  sim_.schedule(retry_at, "fap-retry", [this, a](Simulator& s) {
    if (s.association(a->device).bound.associated()) {
      a->failed = true;
    } else if (a->attempts >= kMaxAttractAttempts) {
      a->failed = true;
    } else {
      schedule_attempt(a);
    }
  });
}

CaptureSlice FakeAccessPoint::capture(NodeId device) {
  if (mode_ == FakeApMode::Dormant) throw Error("monitoring before broadcasting");
  if (mode_ != FakeApMode::Monitoring) throw Error("capture requires monitoring mode");
  if (!connected(device)) {
    throw Error("'" + sim_.name(device) + "' is not connected to the fake AP");
  }
  capturing_.insert(device);
  return CaptureSlice(&log_, device, log_.size());
}

void FakeAccessPoint::on_delivery(const PacketBatch& batch, std::uint64_t delivered) {
  if (mode_ != FakeApMode::Monitoring || delivered == 0) return;
  const Packet& p = batch.packet;
  const bool inbound = capturing_.contains(p.dst) && connected(p.dst);
  const bool outbound = capturing_.contains(p.src) && connected(p.src);
  if (!inbound && !outbound) return;
  log_.push_back(CaptureEntry{sim_.now(), inbound ? p.dst : p.src,
                              inbound ? Direction::Inbound : Direction::Outbound, p.protocol,
                              p.payload_bytes, delivered});
}

FloodHandle FakeAccessPoint::inject_malicious(NodeId device, const FloodSpec& spec) {
  if (!connected(device)) {
    throw Error("'" + sim_.name(device) + "' is not connected to the fake AP");
  }
  if (spec.target != device) throw Error("injection spec targets a different device");
  if (auto it = injections_.find(device); it != injections_.end() && it->second.active()) {
    stop_flood(sim_, it->second);
  }
  FloodOptions options;
  options.source = EnergySource::Injection;
  options.protocol_mix = injection_mix_;
  options.mix_seed = mix_seed(rng_.next_index(~0ULL), device);
  options.label = "fap-inject";
  options.keep_going = [this, device](const Simulator&) { return connected(device); };
  auto handle = start_flood(sim_, fleet_, node_, spec, std::move(options));
  injections_[device] = handle;
  return handle;
}

FakeApState FakeAccessPoint::state() const {
  FakeApState s;
  s.clone_of = clone_of_;
  s.mode = mode_;
  for (NodeId id : fleet_.nodes()) {
    if (connected(id)) s.connected_devices.insert(id);
  }
  s.capture_log = log_;
  for (const auto& [id, h] : injections_) {
    if (h.active()) s.injection_active.emplace(id, h.spec());
  }
  return s;
}

void write_capture_csv(std::ostream& out, const std::vector<CaptureEntry>& entries) {
  out << "t,direction,protocol,bytes\n";
  for (const auto& e : entries) {
    for (std::uint64_t i = 0; i < e.count; ++i) {
      out << e.t << ',' << to_string(e.direction) << ',' << to_string(e.protocol) << ','
          << e.bytes << '\n';
    }
  }
}

}  // namespace ecsim
