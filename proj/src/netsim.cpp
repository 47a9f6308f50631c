#include "ecsim/netsim.hpp"

#include <charconv>
#include <cstdio>

namespace ecsim {

std::string_view to_string(Protocol p) {
  switch (p) {
    case Protocol::TcpSyn: return "tcp";
    case Protocol::Udp: return "udp";
    case Protocol::IcmpEcho: return "icmp";
  }
  return "?";
}

std::string_view to_string(PayloadClass p) {
  return p == PayloadClass::NoPayload ? "np" : "hp";
}

std::optional<Protocol> parse_protocol(std::string_view text) {
  if (text == "tcp" || text == "tcp_syn") return Protocol::TcpSyn;
  if (text == "udp") return Protocol::Udp;
  if (text == "icmp" || text == "icmp_echo") return Protocol::IcmpEcho;
  return std::nullopt;
}

std::optional<PayloadClass> parse_payload_class(std::string_view text) {
  if (text == "np") return PayloadClass::NoPayload;
  if (text == "hp") return PayloadClass::HighPayload;
  return std::nullopt;
}

std::string_view to_string(BindingKind k) {
  switch (k) {
    case BindingKind::Disconnected: return "disconnected";
    case BindingKind::Legitimate: return "legitimate";
    case BindingKind::Fake: return "fake";
  }
  return "?";
}

std::optional<MacAddress> MacAddress::parse(std::string_view text) {
  if (text.size() != 17) return std::nullopt;
  std::array<std::uint8_t, 6> bytes{};
  for (std::size_t i = 0; i < 6; ++i) {
    const char* first = text.data() + i * 3;
    if (i < 5 && first[2] != ':') return std::nullopt;
    unsigned value = 0;
    auto [ptr, ec] = std::from_chars(first, first + 2, value, 16);
    if (ec != std::errc{} || ptr != first + 2) return std::nullopt;
    bytes[i] = static_cast<std::uint8_t>(value);
  }
  return MacAddress(bytes);
}

std::string MacAddress::to_string() const {
  char buf[18];
  std::snprintf(buf, sizeof buf, "%02x:%02x:%02x:%02x:%02x:%02x", bytes_[0], bytes_[1],
                bytes_[2], bytes_[3], bytes_[4], bytes_[5]);
  return buf;
}

std::vector<std::string> validate(const AccessPoint& ap) {
  std::vector<std::string> problems;
  if (ap.channel < 1 || ap.channel > 14) {
    problems.push_back("ap channel must be within 1-14");
  }
  if (ap.ssid.empty()) problems.push_back("ap ssid must not be empty");
  return problems;
}

void validate(const Packet& p) {
  std::vector<std::string> problems;
  if (p.protocol == Protocol::IcmpEcho && p.dst_port) {
    problems.push_back("icmp packets carry no port");
  }
  if (p.protocol != Protocol::IcmpEcho && !p.dst_port) {
    problems.push_back("tcp/udp packets need a destination port");
  }
  if (p.payload_bytes != kNoPayloadBytes && p.payload_bytes != kHighPayloadBytes) {
    problems.push_back("payload must be 0 or 1500 bytes");
  }
  if (p.tcp_flags && p.protocol != Protocol::TcpSyn) {
    problems.push_back("tcp flags on a non-tcp packet");
  }
  if (!problems.empty()) throw ValidationError(std::move(problems));
}

EventHandle Simulator::schedule(SimTime at, std::string label, Callback fn, EventStage stage) {
  if (at < now_) {
    throw Error("past event: '" + label + "' at t=" + std::to_string(at) +
                " < now=" + std::to_string(now_));
  }
  const Key key{at, stage, next_seq_++};
  queue_.emplace(key, Pending{std::move(label), std::move(fn)});
  keys_.emplace(key.seq, key);
  return EventHandle{key.seq};
}

bool Simulator::cancel(EventHandle handle) {
  auto it = keys_.find(handle.id);
  if (it == keys_.end()) return false;
  queue_.erase(it->second);
  keys_.erase(it);
  return true;
}

std::vector<FiredEvent> Simulator::advance(SimTime to) {
  if (to < now_) {
    throw Error("cannot advance backwards to t=" + std::to_string(to));
  }
  std::vector<FiredEvent> fired;
  while (!queue_.empty() && queue_.begin()->first.t <= to) {
    auto it = queue_.begin();
    const Key key = it->first;
    Pending ev = std::move(it->second);
    queue_.erase(it);
    keys_.erase(key.seq);
    now_ = key.t;
    FiredEvent record{key.seq, key.t, key.stage, std::move(ev.label)};
    ev.fn(*this);
    log_.push_back(record);
    fired.push_back(std::move(record));
  }
  now_ = to;
  return fired;
}

NodeId Simulator::add_station(std::string name, std::string known_ssid,
                              std::string known_security) {
  const auto id = static_cast<NodeId>(nodes_.size());
  Node n;
  n.name = std::move(name);
  n.known_ssid = std::move(known_ssid);
  n.known_security = std::move(known_security);
  n.assoc.device = id;
  n.assoc.since = now_;
  nodes_.push_back(std::move(n));
  return id;
}

NodeId Simulator::add_access_point(std::string name, AccessPoint ap) {
  if (auto problems = validate(ap); !problems.empty()) throw ValidationError(problems);
  const auto id = static_cast<NodeId>(nodes_.size());
  Node n;
  n.name = std::move(name);
  n.is_ap = true;
  n.ap = std::move(ap);
  n.assoc.device = id;
  nodes_.push_back(std::move(n));
  return id;
}

Simulator::Node& Simulator::node(NodeId id) {
  if (!has_node(id)) throw Error("unknown node " + std::to_string(id));
  return nodes_[id];
}

const Simulator::Node& Simulator::node(NodeId id) const {
  if (!has_node(id)) throw Error("unknown node " + std::to_string(id));
  return nodes_[id];
}

Simulator::Node& Simulator::station(NodeId id) {
  Node& n = node(id);
  if (n.is_ap) throw Error("node '" + n.name + "' is an access point, not a station");
  return n;
}

const Simulator::Node& Simulator::station(NodeId id) const {
  const Node& n = node(id);
  if (n.is_ap) throw Error("node '" + n.name + "' is an access point, not a station");
  return n;
}

bool Simulator::is_access_point(NodeId id) const { return node(id).is_ap; }

const std::string& Simulator::name(NodeId id) const { return node(id).name; }

std::optional<NodeId> Simulator::find(std::string_view name) const {
  for (NodeId i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].name == name) return i;
  }
  return std::nullopt;
}

const AccessPoint& Simulator::access_point(NodeId ap) const {
  const Node& n = node(ap);
  if (!n.is_ap) throw Error("node '" + n.name + "' is not an access point");
  return n.ap;
}

void Simulator::set_broadcasting(NodeId ap, bool on) {
  Node& n = node(ap);
  if (!n.is_ap) throw Error("node '" + n.name + "' is not an access point");
  n.broadcasting = on;
}

bool Simulator::broadcasting(NodeId ap) const {
  const Node& n = node(ap);
  return n.is_ap && n.broadcasting;
}

std::optional<NodeId> Simulator::strongest_visible_ap(NodeId station_id) const {
  const Node& st = station(station_id);
  std::optional<NodeId> best;
  for (NodeId i = 0; i < nodes_.size(); ++i) {
    const Node& n = nodes_[i];
    if (!n.is_ap || !n.broadcasting) continue;
    if (!st.known_ssid.empty() && n.ap.ssid != st.known_ssid) continue;
    if (!st.known_security.empty() && n.ap.security_profile != st.known_security) continue;
    if (!best || n.ap.signal_strength > nodes_[*best].ap.signal_strength) best = i;
  }
  return best;
}

void Simulator::record(Node& n, Binding to, std::string reason) {
  n.assoc.history.push_back(Transition{now_, n.assoc.bound, to, std::move(reason)});
  n.assoc.bound = std::move(to);
  n.assoc.since = now_;
}

const AssociationState& Simulator::associate(NodeId station_id, NodeId ap_id) {
  Node& st = station(station_id);
  const Node& apn = node(ap_id);
  if (!apn.is_ap) throw Error("node '" + apn.name + "' is not an access point");
  if (st.assoc.bound.associated()) {
    throw Error(apn.ap.is_fake ? "still associated: '" + st.name + "' is bound to an access point"
                               : "'" + st.name + "' is already associated");
  }
  if (!st.known_security.empty() && apn.ap.security_profile != st.known_security) {
    throw Error("security mismatch between '" + st.name + "' and '" + apn.name + "'");
  }
  Binding to{apn.ap.is_fake ? BindingKind::Fake : BindingKind::Legitimate, ap_id, apn.ap.bssid};
  record(st, std::move(to), "associate");
  return st.assoc;
}

const AssociationState& Simulator::disassociate(NodeId station_id, std::string reason) {
  Node& st = station(station_id);
  if (st.assoc.bound.associated()) record(st, Binding{}, std::move(reason));
  return st.assoc;
}

const AssociationState& Simulator::association(NodeId station_id) const {
  return station(station_id).assoc;
}

bool Simulator::reachable(NodeId src, NodeId ap) const {
  if (src == ap) return true;
  const Node& s = node(src);
  return !s.is_ap && s.assoc.bound.ap == ap;
}

DeliveryOutcome Simulator::deliver(const Packet& p) {
  return deliver(PacketBatch{p, 1}) == 1 ? DeliveryOutcome::Delivered : DeliveryOutcome::Dropped;
}

std::uint64_t Simulator::deliver(const PacketBatch& batch) {
  const Packet& p = batch.packet;
  node(p.src);
  Node& dst = node(p.dst);
  bool ok = false;
  if (dst.is_ap) {
    ok = reachable(p.src, p.dst);
  } else if (dst.assoc.bound.ap) {
    ok = reachable(p.src, *dst.assoc.bound.ap);
  }
  const std::uint64_t delivered = ok ? batch.count : 0;
  dst.dropped += batch.count - delivered;
  for (const auto& obs : observers_) obs(batch, delivered);
  return delivered;
}

std::uint64_t Simulator::dropped(NodeId dst) const { return node(dst).dropped; }

void Simulator::add_delivery_observer(DeliveryObserver observer) {
  observers_.push_back(std::move(observer));
}

}  // namespace ecsim
