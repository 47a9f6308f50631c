#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "ecsim/netsim.hpp"
#include "ecsim/ports.hpp"

namespace ecsim {

inline constexpr std::uint64_t kRateCapPps = 100'000;
inline constexpr double kMinFloodMinutes = 8.0;
inline constexpr double kMaxFloodMinutes = 30.0;

// Either an explicit scan slot or "the lowest slot in this state".
using PortSelector = std::variant<std::uint32_t, PortState>;

struct FloodSpec {
  Protocol protocol = Protocol::IcmpEcho;
  NodeId target = 0;
  std::optional<PortSelector> dst_port;
  std::uint64_t rate = 0;  // packets per second
  PayloadClass payload = PayloadClass::NoPayload;
  std::optional<TcpFlags> tcp_flags;
  double max_duration_minutes = kMaxFloodMinutes;

  std::int64_t duration_seconds() const;
};

std::vector<std::string> validate(const FloodSpec& spec);

}  // namespace ecsim
