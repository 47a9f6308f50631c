#include "ecsim/ports.hpp"

#include <cmath>

#include "ecsim/error.hpp"
#include "ecsim/flood_spec.hpp"

namespace ecsim {

std::string_view to_string(PortState s) {
  switch (s) {
    case PortState::Open: return "open";
    case PortState::Closed: return "closed";
    case PortState::Filtered: return "filtered";
    case PortState::OpenFiltered: return "open_filtered";
  }
  return "?";
}

std::string_view to_string(Transport t) { return t == Transport::Tcp ? "tcp" : "udp"; }

std::optional<PortState> parse_port_state(std::string_view text) {
  if (text == "open") return PortState::Open;
  if (text == "closed") return PortState::Closed;
  if (text == "filtered") return PortState::Filtered;
  if (text == "open_filtered" || text == "open-filtered" || text == "open|filtered") {
    return PortState::OpenFiltered;
  }
  return std::nullopt;
}

std::optional<Transport> parse_transport(std::string_view text) {
  if (text == "tcp") return Transport::Tcp;
  if (text == "udp") return Transport::Udp;
  return std::nullopt;
}

std::uint64_t& PortStateCounts::operator[](PortState s) {
  switch (s) {
    case PortState::Open: return open;
    case PortState::Closed: return closed;
    case PortState::Filtered: return filtered;
    case PortState::OpenFiltered: return open_filtered;
  }
  return open;
}

std::uint64_t PortStateCounts::operator[](PortState s) const {
  return const_cast<PortStateCounts&>(*this)[s];
}

void PortTable::set(Transport t, std::uint32_t slot, PortState s) {
  auto& m = map(t);
  auto& counts = summary(t);
  auto [it, inserted] = m.try_emplace(slot, s);
  if (!inserted) {
    --counts[it->second];
    it->second = s;
  }
  ++counts[s];
}

std::uint32_t PortTable::fill(Transport t, std::uint32_t from, std::uint64_t count, PortState s) {
  const auto& m = map(t);
  std::uint32_t slot = from;
  for (std::uint64_t placed = 0; placed < count; ++slot) {
    if (m.contains(slot)) continue;
    set(t, slot, s);
    ++placed;
  }
  return slot;
}

std::optional<PortState> PortTable::state(Transport t, std::uint32_t slot) const {
  const auto& m = slots(t);
  if (auto it = m.find(slot); it != m.end()) return it->second;
  return std::nullopt;
}

PortStateCounts PortTable::count_in(Transport t, PortRange range) const {
  PortStateCounts out;
  if (range.empty || range.lo > range.hi) return out;
  const auto& m = slots(t);
  for (auto it = m.lower_bound(range.lo); it != m.end() && it->first <= range.hi; ++it) {
    ++out[it->second];
  }
  return out;
}

std::optional<std::uint32_t> PortTable::lowest_in_state(Transport t, PortState s) const {
  for (const auto& [slot, state] : slots(t)) {
    if (state == s) return slot;
  }
  return std::nullopt;
}

const std::map<std::uint32_t, PortState>& PortTable::slots(Transport t) const {
  return t == Transport::Tcp ? tcp_ : udp_;
}

bool PortTable::reconciles() const {
  for (Transport t : {Transport::Tcp, Transport::Udp}) {
    if (count_in(t, PortRange::all()) != counts(t)) return false;
  }
  return true;
}

std::int64_t FloodSpec::duration_seconds() const {
  return static_cast<std::int64_t>(std::llround(max_duration_minutes * 60.0));
}

std::vector<std::string> validate(const FloodSpec& spec) {
  std::vector<std::string> problems;
  if (spec.rate > kRateCapPps) {
    problems.push_back("rate exceeds cap (" + std::to_string(spec.rate) + " > " +
                       std::to_string(kRateCapPps) + " pps)");
  }
  if (spec.protocol == Protocol::IcmpEcho && spec.dst_port) {
    problems.push_back("icmp floods take no port selector");
  }
  if (!(spec.max_duration_minutes >= kMinFloodMinutes &&
        spec.max_duration_minutes <= kMaxFloodMinutes)) {
    problems.push_back("max duration must be within [8, 30] minutes");
  }
  if (spec.tcp_flags && spec.protocol != Protocol::TcpSyn) {
    problems.push_back("tcp flags given for a non-tcp flood");
  }
  return problems;
}

}  // namespace ecsim
