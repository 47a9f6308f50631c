#pragma once

// Evil-twin access point: clones the legitimate AP, attracts devices that lost
// their connection, logs their traffic, and injects energy-draining floods.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ecsim/attacker.hpp"
#include "ecsim/devicemodel.hpp"
#include "ecsim/netsim.hpp"

namespace ecsim {

enum class FakeApMode { Dormant, Broadcasting, Monitoring };
std::string_view to_string(FakeApMode m);

enum class Direction { Inbound, Outbound };
std::string_view to_string(Direction d);

// Summary of `count` identical packets seen in one tick.
struct CaptureEntry {
  SimTime t = 0;
  NodeId device = 0;
  Direction direction = Direction::Inbound;
  Protocol protocol = Protocol::IcmpEcho;
  std::uint32_t bytes = 0;
  std::uint64_t count = 0;
};

struct FakeApState {
  MacAddress clone_of;
  FakeApMode mode = FakeApMode::Dormant;
  std::set<NodeId> connected_devices;
  std::vector<CaptureEntry> capture_log;
  std::map<NodeId, FloodSpec> injection_active;
};

// Returns the evil twin of `legit`: same identity, stronger signal.
AccessPoint clone_ap(const AccessPoint& legit, double signal_margin);

inline constexpr int kMaxAttractAttempts = 3;

struct Attraction {
  NodeId device = 0;
  SimTime started = 0;
  int attempts = 0;
  std::vector<double> attempt_delays_min;  // drawn delay of each attempt
  std::optional<SimTime> connected_at;
  bool failed = false;

  bool pending() const { return !connected_at && !failed; }
  std::optional<double> connect_minutes() const;
};

// Read view over the capture log for one device, from the tick capture began.
class CaptureSlice {
 public:
  CaptureSlice(const std::vector<CaptureEntry>* log, NodeId device, std::size_t begin)
      : log_(log), device_(device), begin_(begin) {}

  std::vector<CaptureEntry> entries() const;
  std::uint64_t packet_count() const;
  std::uint64_t packet_count(SimTime from, SimTime to) const;

 private:
  const std::vector<CaptureEntry>* log_;
  NodeId device_;
  std::size_t begin_;
};

class FakeAccessPoint {
 public:
  FakeAccessPoint(Simulator& sim, Fleet& fleet, const AccessPoint& legit, double signal_margin,
                  std::vector<Protocol> injection_mix, std::uint64_t seed);

  NodeId node() const { return node_; }
  const AccessPoint& identity() const { return sim_.access_point(node_); }

  void start_broadcasting();
  // Requires broadcasting.
  void enable_monitoring();
  FakeApMode mode() const { return mode_; }

  // Starts pulling a disconnected device over. Each attempt waits a seeded delay
  // from the device's connect range; an attempt that fails is retried when the
  // range maximum has passed, up to kMaxAttractAttempts in total.
  std::shared_ptr<const Attraction> attract(NodeId device);

  CaptureSlice capture(NodeId device);

  // Injection stops by itself once the device leaves the fake AP.
  FloodHandle inject_malicious(NodeId device, const FloodSpec& spec);

  FakeApState state() const;
  const std::vector<CaptureEntry>& capture_log() const { return log_; }

 private:
  void schedule_attempt(const std::shared_ptr<Attraction>& a);
  void on_delivery(const PacketBatch& batch, std::uint64_t delivered);
  bool connected(NodeId device) const;

  Simulator& sim_;
  Fleet& fleet_;
  NodeId node_;
  MacAddress clone_of_;
  FakeApMode mode_ = FakeApMode::Dormant;
  std::vector<Protocol> injection_mix_;
  DeterministicStream rng_;
  std::set<NodeId> capturing_;
  std::vector<CaptureEntry> log_;
  std::map<NodeId, FloodHandle> injections_;
};

// CSV with header `t,direction,protocol,bytes`, one row per packet.
void write_capture_csv(std::ostream& out, const std::vector<CaptureEntry>& entries);

}  // namespace ecsim
