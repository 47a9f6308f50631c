#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string_view>

namespace ecsim {

enum class PortState { Open, Closed, Filtered, OpenFiltered };
enum class Transport { Tcp, Udp };

std::string_view to_string(PortState s);
std::string_view to_string(Transport t);
std::optional<PortState> parse_port_state(std::string_view text);
std::optional<Transport> parse_transport(std::string_view text);

struct PortStateCounts {
  std::uint64_t open = 0;
  std::uint64_t closed = 0;
  std::uint64_t filtered = 0;
  std::uint64_t open_filtered = 0;

  std::uint64_t total() const { return open + closed + filtered + open_filtered; }
  std::uint64_t& operator[](PortState s);
  std::uint64_t operator[](PortState s) const;
  friend bool operator==(const PortStateCounts&, const PortStateCounts&) = default;
};

// Closed interval of scan slots.
struct PortRange {
  std::uint32_t lo = 0;
  std::uint32_t hi = std::numeric_limits<std::uint32_t>::max();
  bool empty = false;

  static PortRange all() { return {}; }
  static PortRange none() { return {0, 0, true}; }
  bool contains(std::uint32_t port) const { return !empty && port >= lo && port <= hi; }
  friend bool operator==(const PortRange&, const PortRange&) = default;
};

// Per-transport map from scan slot to state. Slots up to 65535 are wire ports;
// the Raspberry Pi TCP scan reports more results than the 16-bit port space
// holds, so the table keys on the scan's slot numbering instead.
class PortTable {
 public:
  void set(Transport t, std::uint32_t slot, PortState s);
  // Assigns `count` consecutive free slots starting at `from` to state `s`.
  std::uint32_t fill(Transport t, std::uint32_t from, std::uint64_t count, PortState s);

  std::optional<PortState> state(Transport t, std::uint32_t slot) const;
  const PortStateCounts& counts(Transport t) const { return summary(t); }
  PortStateCounts count_in(Transport t, PortRange range) const;
  std::optional<std::uint32_t> lowest_in_state(Transport t, PortState s) const;
  const std::map<std::uint32_t, PortState>& slots(Transport t) const;

  // True when the maintained summaries equal a fresh tally of the maps.
  bool reconciles() const;

 private:
  PortStateCounts& summary(Transport t) { return t == Transport::Tcp ? tcp_counts_ : udp_counts_; }
  const PortStateCounts& summary(Transport t) const {
    return t == Transport::Tcp ? tcp_counts_ : udp_counts_;
  }
  std::map<std::uint32_t, PortState>& map(Transport t) { return t == Transport::Tcp ? tcp_ : udp_; }

  std::map<std::uint32_t, PortState> tcp_;
  std::map<std::uint32_t, PortState> udp_;
  PortStateCounts tcp_counts_;
  PortStateCounts udp_counts_;
};

}  // namespace ecsim
