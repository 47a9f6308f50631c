#pragma once

// Simulation core: one-second clock with a staged event queue, access points,
// station association state machine, and packet delivery between nodes.

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "ecsim/error.hpp"

namespace ecsim {

using SimTime = std::int64_t;  // whole seconds since simulation start
using NodeId = std::uint32_t;

inline constexpr std::uint32_t kNoPayloadBytes = 0;
inline constexpr std::uint32_t kHighPayloadBytes = 1500;

enum class Protocol { TcpSyn, Udp, IcmpEcho };

enum class PayloadClass { NoPayload, HighPayload };

std::string_view to_string(Protocol p);
std::string_view to_string(PayloadClass p);
std::optional<Protocol> parse_protocol(std::string_view text);
std::optional<PayloadClass> parse_payload_class(std::string_view text);

constexpr std::uint32_t payload_bytes(PayloadClass p) {
  return p == PayloadClass::NoPayload ? kNoPayloadBytes : kHighPayloadBytes;
}

enum TcpFlag : std::uint8_t {
  kSyn = 1 << 0,
  kAck = 1 << 1,
  kFin = 1 << 2,
  kPsh = 1 << 3,
  kUrg = 1 << 4,
};
using TcpFlags = std::uint8_t;

class MacAddress {
 public:
  constexpr MacAddress() = default;
  constexpr explicit MacAddress(std::array<std::uint8_t, 6> bytes) : bytes_(bytes) {}

  static std::optional<MacAddress> parse(std::string_view text);
  std::string to_string() const;
  const std::array<std::uint8_t, 6>& bytes() const { return bytes_; }

  friend auto operator<=>(const MacAddress&, const MacAddress&) = default;

 private:
  std::array<std::uint8_t, 6> bytes_{};
};

struct AccessPoint {
  std::string ssid;
  MacAddress bssid;
  int channel = 1;
  std::string security_profile;
  double signal_strength = -60.0;
  bool is_fake = false;

  friend bool operator==(const AccessPoint&, const AccessPoint&) = default;
};

// Checks channel range; returns the problems found.
std::vector<std::string> validate(const AccessPoint& ap);

struct Packet {
  NodeId src = 0;
  NodeId dst = 0;
  Protocol protocol = Protocol::IcmpEcho;
  std::optional<std::uint16_t> dst_port;
  std::uint32_t payload_bytes = 0;
  std::optional<TcpFlags> tcp_flags;
  SimTime timestamp = 0;
};

// Throws ValidationError if the packet breaks the port/payload rules.
void validate(const Packet& p);

// Identical packets sent within one second, carried as a count.
struct PacketBatch {
  Packet packet;
  std::uint64_t count = 0;
};

enum class BindingKind { Disconnected, Legitimate, Fake };
std::string_view to_string(BindingKind k);

struct Binding {
  BindingKind kind = BindingKind::Disconnected;
  std::optional<NodeId> ap;
  std::optional<MacAddress> bssid;

  bool associated() const { return kind != BindingKind::Disconnected; }
  friend bool operator==(const Binding&, const Binding&) = default;
};

struct Transition {
  SimTime t = 0;
  Binding from;
  Binding to;
  std::string reason;
};

struct AssociationState {
  NodeId device = 0;
  Binding bound;
  SimTime since = 0;
  std::vector<Transition> history;
};

// Events sharing a timestamp run stage by stage; inside a stage, by insertion order.
enum class EventStage : std::uint8_t { Control = 0, Traffic = 1, Measure = 2 };

struct EventHandle {
  std::uint64_t id = 0;
};

struct FiredEvent {
  std::uint64_t id = 0;
  SimTime t = 0;
  EventStage stage = EventStage::Control;
  std::string label;

  friend bool operator==(const FiredEvent&, const FiredEvent&) = default;
};

enum class DeliveryOutcome { Delivered, Dropped };

class Simulator {
 public:
  using Callback = std::function<void(Simulator&)>;
  using DeliveryObserver = std::function<void(const PacketBatch&, std::uint64_t delivered)>;

  Simulator() = default;
  Simulator(const Simulator&) = delete;
  Simulator& operator=(const Simulator&) = delete;

  SimTime now() const { return now_; }

  EventHandle schedule(SimTime at, std::string label, Callback fn,
                       EventStage stage = EventStage::Control);
  bool cancel(EventHandle handle);
  std::vector<FiredEvent> advance(SimTime to);
  std::size_t pending() const { return queue_.size(); }

  // Per-simulator counter for naming objects (floods, captures) deterministically.
  std::uint64_t next_serial() { return ++serial_; }

  // Every event fired so far, in firing order.
  const std::vector<FiredEvent>& event_log() const { return log_; }

  NodeId add_station(std::string name, std::string known_ssid = {},
                     std::string known_security = {});
  NodeId add_access_point(std::string name, AccessPoint ap);

  bool has_node(NodeId id) const { return id < nodes_.size(); }
  bool is_access_point(NodeId id) const;
  const std::string& name(NodeId id) const;
  std::optional<NodeId> find(std::string_view name) const;
  std::size_t node_count() const { return nodes_.size(); }

  const AccessPoint& access_point(NodeId ap) const;
  void set_broadcasting(NodeId ap, bool on);
  bool broadcasting(NodeId ap) const;
  // Strongest broadcasting AP the station would accept (matching ssid and security).
  std::optional<NodeId> strongest_visible_ap(NodeId station) const;

  const AssociationState& associate(NodeId station, NodeId ap);
  // No-op (and no history entry) when the station is already disconnected.
  const AssociationState& disassociate(NodeId station, std::string reason);
  const AssociationState& association(NodeId station) const;

  DeliveryOutcome deliver(const Packet& p);
  // Returns how many packets of the batch were delivered (all or none).
  std::uint64_t deliver(const PacketBatch& batch);
  std::uint64_t dropped(NodeId dst) const;

  void add_delivery_observer(DeliveryObserver observer);

 private:
  struct Node {
    std::string name;
    bool is_ap = false;
    AccessPoint ap;
    bool broadcasting = false;
    std::string known_ssid;
    std::string known_security;
    AssociationState assoc;
    std::uint64_t dropped = 0;
  };

  struct Key {
    SimTime t;
    EventStage stage;
    std::uint64_t seq;
    friend auto operator<=>(const Key&, const Key&) = default;
  };

  struct Pending {
    std::string label;
    Callback fn;
  };

  Node& node(NodeId id);
  const Node& node(NodeId id) const;
  Node& station(NodeId id);
  const Node& station(NodeId id) const;
  bool reachable(NodeId src, NodeId ap) const;
  void record(Node& n, Binding to, std::string reason);

  SimTime now_ = 0;
  std::uint64_t next_seq_ = 1;
  std::uint64_t serial_ = 0;
  std::map<Key, Pending> queue_;
  std::unordered_map<std::uint64_t, Key> keys_;
  std::vector<FiredEvent> log_;
  std::vector<Node> nodes_;
  std::vector<DeliveryObserver> observers_;
};

}  // namespace ecsim
