#include <gtest/gtest.h>

#include "ecsim/campaign.hpp"

using namespace ecsim;

namespace {

struct Bed {
  Testbed bed{default_access_point(), 17};
  NodeId pi = bed.add_device("raspberry_pi", builtin_profile("raspberry_pi"));
  NodeId uno = bed.add_device("arduino", builtin_profile("arduino"));
};

FloodSpec flood(NodeId target, Protocol proto, PayloadClass payload, std::uint64_t rate,
                double minutes = 8) {
  FloodSpec s;
  s.protocol = proto;
  s.target = target;
  s.payload = payload;
  s.rate = rate;
  s.max_duration_minutes = minutes;
  return s;
}

}  // namespace

TEST(ScanNetwork, BothDevicesOnlineWithDistinctAddresses) {
  Bed b;
  const auto r = b.bed.attacker().scan_network();
  ASSERT_EQ(r.devices.size(), 2u);
  EXPECT_TRUE(r.devices[0].online);
  EXPECT_TRUE(r.devices[1].online);
  EXPECT_EQ(r.devices[0].ip, "10.0.0.1");
  EXPECT_EQ(r.devices[1].ip, "10.0.0.2");
  EXPECT_NE(r.devices[0].mac, r.devices[1].mac);
  EXPECT_EQ(r.timestamp, 1);
}

TEST(ScanNetwork, DisconnectedDeviceOffline) {
  Bed b;
  b.bed.sim().disassociate(b.uno, "test");
  const auto r = b.bed.attacker().scan_network();
  EXPECT_TRUE(r.devices[0].online);
  EXPECT_FALSE(r.devices[1].online);
}

TEST(ScanNetwork, AttackerOffNetworkRejected) {
  Bed b;
  b.bed.sim().disassociate(b.bed.attacker().node(), "test");
  EXPECT_THROW(b.bed.attacker().scan_network(), Error);
}

TEST(ScanNetwork, HistoryReplaysAssociationChanges) {
  Bed b;
  auto& sim = b.bed.sim();
  auto& atk = b.bed.attacker();
  atk.scan_network();
  sim.disassociate(b.uno, "flood");
  atk.scan_network();
  auto& fap = b.bed.deploy_fake_ap(10, {Protocol::Udp});
  fap.start_broadcasting();
  sim.associate(b.uno, fap.node());
  atk.scan_network();
  std::vector<bool> seen;
  for (const auto& s : atk.scan_history()) seen.push_back(s.devices[1].online);
  EXPECT_EQ(seen, (std::vector<bool>{true, false, true}));
  // The oracle: replaying recorded transitions at each scan timestamp.
  const auto& hist = sim.association(b.uno).history;
  for (const auto& s : atk.scan_history()) {
    bool online = false;
    for (const auto& tr : hist) {
      if (tr.t < s.timestamp) online = tr.to.associated();
    }
    EXPECT_EQ(online, s.devices[1].online);
  }
}

TEST(ScanPorts, RaspberryPiTcpFullRange) {
  Bed b;
  const auto r = b.bed.attacker().scan_ports(b.pi, Transport::Tcp);
  EXPECT_EQ(r.counts, (PortStateCounts{3, 0, 65389, 998}));
}

TEST(ScanPorts, ArduinoUdpFirstThousand) {
  Bed b;
  const auto r = b.bed.attacker().scan_ports(b.uno, Transport::Udp, {1, 1000, false});
  EXPECT_EQ(r.counts, (PortStateCounts{0, 0, 0, 1000}));
  EXPECT_EQ(r.counts.total(), 1000u);
}

TEST(ScanPorts, EmptyRangeAllZero) {
  Bed b;
  const auto r = b.bed.attacker().scan_ports(b.pi, Transport::Tcp, PortRange::none());
  EXPECT_EQ(r.counts.total(), 0u);
}

TEST(ScanPorts, OfflineHostDown) {
  Bed b;
  b.bed.sim().disassociate(b.pi, "test");
  try {
    b.bed.attacker().scan_ports(b.pi, Transport::Tcp);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("host down"), std::string::npos);
  }
}

TEST(Flood, SentIsRateTimesSeconds) {
  Bed b;
  const auto h = b.bed.attacker().launch_flood(
      flood(b.pi, Protocol::IcmpEcho, PayloadClass::NoPayload, 500, 8));
  b.bed.run_for(600);
  EXPECT_FALSE(h.active());
  EXPECT_EQ(h.counters().sent, 500u * 480u);
  EXPECT_EQ(h.counters().active_seconds, 480);
}

TEST(Flood, StopAtSixtySecondsAndIdempotent) {
  Bed b;
  auto& atk = b.bed.attacker();
  const auto h = atk.launch_flood(flood(b.pi, Protocol::IcmpEcho, PayloadClass::NoPayload, 500));
  b.bed.run_for(60);
  const auto first = atk.stop_flood(h);
  EXPECT_EQ(first.sent, 30000u);
  b.bed.run_for(60);
  const auto second = atk.stop_flood(h);
  EXPECT_EQ(second.sent, first.sent);
  EXPECT_EQ(second.delivered, first.delivered);
  EXPECT_LE(second.delivered, second.sent);
}

TEST(Flood, DeliveredMatchesRecountedDeliveries) {
  Bed b;
  std::uint64_t recount = 0;
  b.bed.sim().add_delivery_observer([&](const PacketBatch& batch, std::uint64_t delivered) {
    if (batch.packet.dst == b.uno) recount += delivered;
  });
  auto& atk = b.bed.attacker();
  const auto h = atk.launch_flood(flood(b.uno, Protocol::Udp, PayloadClass::NoPayload, 1000));
  b.bed.run_for(300);
  const auto c = atk.stop_flood(h);
  EXPECT_EQ(c.delivered, recount);
  EXPECT_LE(c.processed, c.delivered);
  EXPECT_LE(c.delivered, c.sent);
  // The device dropped off mid-flood, so later batches were not delivered.
  EXPECT_TRUE(c.target_disconnected_at);
  EXPECT_LT(c.delivered, c.sent);
}

TEST(Flood, ArduinoTcpHighPayloadAtThresholdDisconnects) {
  Bed b;
  const auto h = b.bed.attacker().launch_flood(
      flood(b.uno, Protocol::TcpSyn, PayloadClass::HighPayload, 200, 30));
  b.bed.run_for(1800);
  ASSERT_TRUE(h.counters().target_disconnected_at);
  EXPECT_FALSE(b.bed.sim().association(b.uno).bound.associated());
}

TEST(Flood, ArduinoUdpBelowThresholdSurvivesThirtyMinutes) {
  Bed b;
  const auto h = b.bed.attacker().launch_flood(
      flood(b.uno, Protocol::Udp, PayloadClass::NoPayload, 799, 30));
  b.bed.run_for(1800);
  EXPECT_FALSE(h.counters().target_disconnected_at);
  EXPECT_TRUE(b.bed.sim().association(b.uno).bound.associated());
  EXPECT_EQ(h.counters().active_seconds, 1800);
}

TEST(Flood, InvalidSpecsRejected) {
  Bed b;
  auto& atk = b.bed.attacker();
  auto s = flood(b.pi, Protocol::IcmpEcho, PayloadClass::NoPayload, kRateCapPps + 1);
  try {
    atk.launch_flood(s);
    FAIL() << "expected an error";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("rate exceeds cap"), std::string::npos);
  }
  s.rate = 100;
  s.max_duration_minutes = 5;
  EXPECT_THROW(atk.launch_flood(s), ValidationError);
  s.max_duration_minutes = 8;
  s.dst_port = PortState::Open;
  EXPECT_THROW(atk.launch_flood(s), ValidationError);
  s.dst_port.reset();
  s.target = 999;
  EXPECT_THROW(atk.launch_flood(s), Error);
}

TEST(Flood, BelowThresholdNeverDisconnectsAnyDuration) {
  for (double minutes : {8.0, 15.0, 30.0}) {
    for (const char* name : {"raspberry_pi", "arduino"}) {
      const auto profile = builtin_profile(name);
      for (PayloadClass c : {PayloadClass::NoPayload, PayloadClass::HighPayload}) {
        const auto thr = profile->ar_threshold(c);
        const std::uint64_t rate = thr ? *thr - 1 : kRateCapPps;
        for (Protocol proto : {Protocol::IcmpEcho, Protocol::TcpSyn, Protocol::Udp}) {
          EXPECT_FALSE(disconnects_at_rate(profile, proto, c, rate, minutes))
              << name << " " << to_string(proto) << " " << minutes;
        }
      }
    }
  }
}

TEST(Flood, FloodTimelineIsDeterministic) {
  auto run = [] {
    Bed b;
    auto& atk = b.bed.attacker();
    atk.launch_flood(flood(b.uno, Protocol::Udp, PayloadClass::NoPayload, 600));
    atk.launch_flood(flood(b.pi, Protocol::TcpSyn, PayloadClass::NoPayload, 12000));
    b.bed.run_for(700);
    std::vector<double> joules;
    for (const auto& r : b.bed.fleet().at(b.uno).trace()) joules.push_back(r.sample.joules);
    return std::pair{b.bed.sim().event_log(), joules};
  };
  EXPECT_EQ(run(), run());
}
