#include "ecsim/attacker.hpp"

#include <algorithm>

namespace ecsim {

namespace detail {

struct FloodState {
  std::uint64_t id = 0;
  FloodSpec spec;
  FloodOptions options;
  FloodCounters counters;
  NodeId src = 0;
  std::optional<EventHandle> next;
  DeterministicStream mix;
  std::optional<std::uint16_t> port;  // resolved once for non-mixed floods

  explicit FloodState(std::uint64_t seed) : mix(seed) {}
};

}  // namespace detail

namespace {

std::optional<std::uint16_t> wire_port(const FloodSpec& spec, const DeviceProfile& profile) {
  const auto slot = resolve_port(spec, profile);
  if (!slot) return std::nullopt;
  if (*slot > 65535) {
    throw Error("scan slot " + std::to_string(*slot) + " is not a wire port");
  }
  return static_cast<std::uint16_t>(*slot);
}

FloodSpec second_spec(detail::FloodState& st) {
  FloodSpec spec = st.spec;
  if (st.options.protocol_mix.empty()) return spec;
  spec.protocol = st.options.protocol_mix[st.mix.next_index(st.options.protocol_mix.size())];
  spec.dst_port.reset();
  spec.tcp_flags = spec.protocol == Protocol::TcpSyn ? std::optional<TcpFlags>(kSyn) : std::nullopt;
  return spec;
}

void finish(Simulator& sim, detail::FloodState& st) {
  if (st.next) sim.cancel(*st.next);
  st.next.reset();
  st.counters.stopped = true;
}

void schedule_batch(Simulator& sim, Fleet& fleet, std::shared_ptr<detail::FloodState> st);

void fire_batch(Simulator& sim, Fleet& fleet, const std::shared_ptr<detail::FloodState>& st) {
  st->next.reset();
  if (st->counters.stopped) return;
  if (st->options.keep_going && !st->options.keep_going(sim)) {
    finish(sim, *st);
    return;
  }
  Victim& victim = fleet.at(st->spec.target);
  const FloodSpec spec = second_spec(*st);

  Packet p;
  p.src = st->src;
  p.dst = spec.target;
  p.protocol = spec.protocol;
  p.dst_port = st->options.protocol_mix.empty() ? st->port : wire_port(spec, victim.profile());
  p.payload_bytes = payload_bytes(spec.payload);
  p.tcp_flags = spec.tcp_flags;
  p.timestamp = sim.now();

  const std::int64_t elapsed = ++st->counters.active_seconds;
  st->counters.sent += spec.rate;
  const std::uint64_t delivered = sim.deliver(PacketBatch{p, spec.rate});
  st->counters.delivered += delivered;
  if (delivered > 0) {
    const auto absorbed = victim.absorb(sim, spec, delivered, st->options.source, elapsed);
    st->counters.processed += absorbed.processed;
    if (absorbed.disconnected && !st->counters.target_disconnected_at) {
      st->counters.target_disconnected_at = sim.now();
    }
  }
  if (elapsed >= st->spec.duration_seconds()) {
    st->counters.stopped = true;
    return;
  }
  schedule_batch(sim, fleet, st);
}

void schedule_batch(Simulator& sim, Fleet& fleet, std::shared_ptr<detail::FloodState> st) {
  const std::string label = st->options.label + "#" + std::to_string(st->id);
  st->next = sim.schedule(
      sim.now() + 1, label, [&fleet, st](Simulator& s) { fire_batch(s, fleet, st); },
      EventStage::Traffic);
}

}  // namespace

std::uint64_t FloodHandle::id() const { return state_->id; }
const FloodSpec& FloodHandle::spec() const { return state_->spec; }
const FloodCounters& FloodHandle::counters() const { return state_->counters; }

FloodHandle start_flood(Simulator& sim, Fleet& fleet, NodeId src, const FloodSpec& spec,
                        FloodOptions options) {
  if (auto problems = validate(spec); !problems.empty()) throw ValidationError(problems);
  if (!sim.has_node(src)) throw Error("unknown flood source " + std::to_string(src));
  if (!sim.has_node(spec.target) || fleet.find(spec.target) == nullptr) {
    throw Error("unknown flood target " + std::to_string(spec.target));
  }
  auto st = std::make_shared<detail::FloodState>(options.mix_seed);
  st->id = sim.next_serial();
  st->spec = spec;
  st->src = src;
  st->options = std::move(options);
  if (st->options.protocol_mix.empty()) {
    st->port = wire_port(spec, fleet.at(spec.target).profile());
  }
  if (spec.duration_seconds() > 0) {
    schedule_batch(sim, fleet, st);
  } else {
    st->counters.stopped = true;
  }
  return FloodHandle(st);
}

FloodCounters stop_flood(Simulator& sim, const FloodHandle& handle) {
  if (!handle.valid()) throw Error("invalid flood handle");
  if (!handle.state_->counters.stopped) finish(sim, *handle.state_);
  return handle.state_->counters;
}

std::string device_ip(std::size_t index) { return "10.0.0." + std::to_string(index + 1); }

MacAddress device_mac(std::size_t index) {
  return MacAddress({0x02, 0x00, 0x00, 0x00, static_cast<std::uint8_t>((index + 1) >> 8),
                     static_cast<std::uint8_t>(index + 1)});
}

Attacker::Attacker(Simulator& sim, Fleet& fleet, NodeId self)
    : sim_(sim), fleet_(fleet), self_(self) {
  if (!sim_.has_node(self_)) throw Error("attacker node does not exist");
}

void Attacker::require_on_network() const {
  if (!sim_.association(self_).bound.associated()) {
    throw Error("attacker not on network");
  }
}

ScanReport Attacker::scan_network() {
  require_on_network();
  ScanReport report;
  const auto nodes = fleet_.nodes();
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    DeviceScan d;
    d.device = nodes[i];
    d.name = sim_.name(nodes[i]);
    d.online = sim_.association(nodes[i]).bound.associated();
    d.ip = device_ip(i);
    d.mac = device_mac(i);
    report.devices.push_back(std::move(d));
  }
  sim_.advance(sim_.now() + 1);
  report.timestamp = sim_.now();
  history_.push_back(report);
  return report;
}

PortScanReport Attacker::scan_ports(NodeId device, Transport protocol, PortRange range) {
  require_on_network();
  const Victim& victim = fleet_.at(device);
  if (!sim_.association(device).bound.associated()) {
    throw Error("host down: '" + sim_.name(device) + "'");
  }
  PortScanReport report;
  report.device = device;
  report.protocol = protocol;
  report.scanned_range = range;
  report.counts = victim.profile().ports.count_in(protocol, range);
  sim_.advance(sim_.now() + 1);
  return report;
}

FloodHandle Attacker::launch_flood(const FloodSpec& spec) {
  FloodOptions options;
  options.label = "flood";
  return start_flood(sim_, fleet_, self_, spec, std::move(options));
}

FloodCounters Attacker::stop_flood(const FloodHandle& handle) {
  return ecsim::stop_flood(sim_, handle);
}

}  // namespace ecsim
