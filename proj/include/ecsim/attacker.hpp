#pragma once

// Adversary node: network and port scans, and per-second flood generation.

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ecsim/devicemodel.hpp"
#include "ecsim/flood_spec.hpp"
#include "ecsim/netsim.hpp"
#include "ecsim/ports.hpp"

namespace ecsim {

struct DeviceScan {
  NodeId device = 0;
  std::string name;
  bool online = false;
  std::string ip;
  MacAddress mac;
};

struct ScanReport {
  SimTime timestamp = 0;
  std::vector<DeviceScan> devices;
};

struct PortScanReport {
  NodeId device = 0;
  Transport protocol = Transport::Tcp;
  PortStateCounts counts;
  PortRange scanned_range;
};

struct FloodCounters {
  std::uint64_t sent = 0;
  std::uint64_t delivered = 0;
  std::uint64_t processed = 0;
  std::int64_t active_seconds = 0;
  bool stopped = false;
  std::optional<SimTime> target_disconnected_at;
};

struct FloodOptions {
  EnergySource source = EnergySource::Flood;
  // When non-empty, each second's batch uses a protocol drawn from this list.
  std::vector<Protocol> protocol_mix;
  std::uint64_t mix_seed = 0;
  // Checked before every batch; returning false stops the flood.
  std::function<bool(const Simulator&)> keep_going;
  std::string label = "flood";
};

namespace detail {
struct FloodState;
}

class FloodHandle {
 public:
  FloodHandle() = default;

  bool valid() const { return state_ != nullptr; }
  std::uint64_t id() const;
  const FloodSpec& spec() const;
  const FloodCounters& counters() const;
  bool active() const { return valid() && !counters().stopped; }

 private:
  friend FloodHandle start_flood(Simulator&, Fleet&, NodeId, const FloodSpec&, FloodOptions);
  friend FloodCounters stop_flood(Simulator&, const FloodHandle&);
  explicit FloodHandle(std::shared_ptr<detail::FloodState> s) : state_(std::move(s)) {}

  std::shared_ptr<detail::FloodState> state_;
};

// Schedules one batch of spec.rate packets per second, from now+1 until
// spec's maximum duration elapses or the flood is stopped.
FloodHandle start_flood(Simulator& sim, Fleet& fleet, NodeId src, const FloodSpec& spec,
                        FloodOptions options);
// Idempotent.
FloodCounters stop_flood(Simulator& sim, const FloodHandle& handle);

std::string device_ip(std::size_t index);
MacAddress device_mac(std::size_t index);

class Attacker {
 public:
  Attacker(Simulator& sim, Fleet& fleet, NodeId self);

  NodeId node() const { return self_; }

  ScanReport scan_network();
  PortScanReport scan_ports(NodeId device, Transport protocol, PortRange range = PortRange::all());
  FloodHandle launch_flood(const FloodSpec& spec);
  FloodCounters stop_flood(const FloodHandle& handle);

  const std::vector<ScanReport>& scan_history() const { return history_; }

 private:
  void require_on_network() const;

  Simulator& sim_;
  Fleet& fleet_;
  NodeId self_;
  std::vector<ScanReport> history_;
};

}  // namespace ecsim
