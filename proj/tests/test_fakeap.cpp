#include <gtest/gtest.h>

#include <sstream>

#include "ecsim/campaign.hpp"

using namespace ecsim;

namespace {

struct Bed {
  explicit Bed(std::uint64_t seed = 5) : bed(default_access_point(), seed) {}
  Testbed bed;
  NodeId pi = bed.add_device("raspberry_pi", builtin_profile("raspberry_pi"));
  NodeId uno = bed.add_device("arduino", builtin_profile("arduino"));
};

FloodSpec injection(NodeId target, std::uint64_t rate, double minutes = 8) {
  FloodSpec s;
  s.protocol = Protocol::Udp;
  s.target = target;
  s.rate = rate;
  s.max_duration_minutes = minutes;
  return s;
}

// Disconnects `dev`, attracts it to a monitoring fake AP, and runs until attached.
FakeAccessPoint& takeover(Bed& b, NodeId dev) {
  b.bed.sim().disassociate(dev, "flood");
  auto* fap = b.bed.fake_ap();
  if (fap == nullptr) fap = &b.bed.deploy_fake_ap(10, {Protocol::TcpSyn, Protocol::Udp, Protocol::IcmpEcho});
  fap->start_broadcasting();
  fap->enable_monitoring();
  const auto a = fap->attract(dev);
  while (a->pending()) b.bed.run_for(1);
  if (!a->connected_at) throw Error("attract failed in test setup");
  return *fap;
}

}  // namespace

TEST(CloneAp, CopiesIdentityAndBoostsSignal) {
  AccessPoint legit = default_access_point();
  legit.signal_strength = -50;
  const AccessPoint fake = clone_ap(legit, 10);
  EXPECT_EQ(fake.ssid, legit.ssid);
  EXPECT_EQ(fake.bssid, legit.bssid);
  EXPECT_EQ(fake.channel, legit.channel);
  EXPECT_EQ(fake.security_profile, legit.security_profile);
  EXPECT_DOUBLE_EQ(fake.signal_strength, -40);
  EXPECT_TRUE(fake.is_fake);
}

TEST(CloneAp, NonPositiveMarginRejected) {
  try {
    clone_ap(default_access_point(), 0);
    FAIL() << "expected an error";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("margin must be positive"), std::string::npos);
  }
}

TEST(CloneAp, FakeOfFakeRejected) {
  const AccessPoint fake = clone_ap(default_access_point(), 5);
  EXPECT_THROW(clone_ap(fake, 5), Error);
}

TEST(Attract, RaspberryPiWithinThreeToFiveMinutes) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Bed b(seed);
    b.bed.sim().disassociate(b.pi, "flood");
    auto& fap = b.bed.deploy_fake_ap(10, {Protocol::Udp});
    fap.start_broadcasting();
    const auto a = fap.attract(b.pi);
    while (a->pending()) b.bed.run_for(1);
    ASSERT_TRUE(a->connected_at);
    EXPECT_EQ(a->attempts, 1);
    EXPECT_GE(*a->connect_minutes(), 3.0);
    EXPECT_LE(*a->connect_minutes(), 5.0);
    EXPECT_EQ(b.bed.sim().association(b.pi).bound.kind, BindingKind::Fake);
  }
}

TEST(Attract, ArduinoAttemptsWithinSevenToTenMinutes) {
  int retried = 0;
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    Bed b(seed);
    b.bed.sim().disassociate(b.uno, "flood");
    auto& fap = b.bed.deploy_fake_ap(10, {Protocol::Udp});
    fap.start_broadcasting();
    const auto a = fap.attract(b.uno);
    while (a->pending()) b.bed.run_for(1);
    EXPECT_LE(a->attempts, kMaxAttractAttempts);
    for (double d : a->attempt_delays_min) {
      EXPECT_GE(d, 7.0);
      EXPECT_LE(d, 10.0);
    }
    if (a->connected_at) {
      EXPECT_LE(*a->connect_minutes(), kMaxAttractAttempts * 10.0);
    }
    if (a->attempts > 1) ++retried;
  }
  EXPECT_GT(retried, 0);
}

TEST(Attract, StillAssociatedRejected) {
  Bed b;
  auto& fap = b.bed.deploy_fake_ap(10, {Protocol::Udp});
  fap.start_broadcasting();
  try {
    fap.attract(b.pi);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("still associated"), std::string::npos);
  }
}

TEST(Attract, DeviceBackOnLegitimateApIsNotTaken) {
  Bed b;
  b.bed.sim().disassociate(b.pi, "flood");
  auto& fap = b.bed.deploy_fake_ap(10, {Protocol::Udp});
  fap.start_broadcasting();
  const auto a = fap.attract(b.pi);
  b.bed.run_for(60);
  b.bed.sim().associate(b.pi, b.bed.legit_ap());
  while (a->pending()) b.bed.run_for(1);
  EXPECT_TRUE(a->failed);
  EXPECT_EQ(b.bed.sim().association(b.pi).bound.kind, BindingKind::Legitimate);
}

TEST(Capture, MonitoringBeforeBroadcastingRejected) {
  Bed b;
  auto& fap = b.bed.deploy_fake_ap(10, {Protocol::Udp});
  try {
    fap.enable_monitoring();
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("monitoring before broadcasting"), std::string::npos);
  }
}

TEST(Capture, TelemetryLoggedOutbound) {
  Bed b;
  auto& fap = takeover(b, b.pi);
  const auto slice = fap.capture(b.pi);
  EXPECT_EQ(slice.packet_count(), 0u);
  b.bed.send_telemetry(b.pi, 10);
  const auto entries = slice.entries();
  ASSERT_EQ(entries.size(), 1u);
  EXPECT_EQ(entries[0].direction, Direction::Outbound);
  EXPECT_EQ(slice.packet_count(), 10u);

  std::ostringstream csv;
  write_capture_csv(csv, entries);
  std::istringstream lines(csv.str());
  std::string line;
  int rows = 0;
  std::getline(lines, line);
  EXPECT_EQ(line, "t,direction,protocol,bytes");
  while (std::getline(lines, line)) {
    EXPECT_NE(line.find(",outbound,udp,0"), std::string::npos);
    ++rows;
  }
  EXPECT_EQ(rows, 10);
}

TEST(Capture, InjectionCountedInbound) {
  Bed b;
  auto& fap = takeover(b, b.pi);
  const auto slice = fap.capture(b.pi);
  const SimTime start = b.bed.sim().now();
  const auto h = fap.inject_malicious(b.pi, injection(b.pi, 100));
  b.bed.run_for(60);
  stop_flood(b.bed.sim(), h);
  EXPECT_EQ(slice.packet_count(), 6000u);
  EXPECT_EQ(slice.packet_count(start + 1, start + 60), h.counters().delivered);
  for (const auto& e : slice.entries()) EXPECT_EQ(e.direction, Direction::Inbound);
  const auto& log = fap.capture_log();
  for (std::size_t i = 1; i < log.size(); ++i) EXPECT_LE(log[i - 1].t, log[i].t);
}

TEST(Capture, RequiresConnectedDevice) {
  Bed b;
  auto& fap = b.bed.deploy_fake_ap(10, {Protocol::Udp});
  fap.start_broadcasting();
  fap.enable_monitoring();
  EXPECT_THROW(fap.capture(b.pi), Error);
}

TEST(Inject, SteadyStateEnergyAboveLevels) {
  for (const char* name : {"raspberry_pi", "arduino"}) {
    Bed b;
    const NodeId dev = std::string(name) == "arduino" ? b.uno : b.pi;
    const auto& profile = b.bed.fleet().at(dev).profile();
    auto& fap = takeover(b, dev);
    fap.inject_malicious(dev, injection(dev, calibration_rate(profile)));
    b.bed.run_for(1);
    EXPECT_GT(b.bed.fleet().at(dev).energy_rate_fap(b.bed.sim()), profile.fap_e_level);
    b.bed.run_for(120);
    for (auto it = b.bed.fleet().at(dev).trace().rbegin(); it != b.bed.fleet().at(dev).trace().rbegin() + 60; ++it) {
      EXPECT_GT(it->sample.joules, profile.fap_e_level);
      EXPECT_EQ(it->source, EnergySource::Injection);
    }
  }
}

TEST(Inject, StopsWhenDeviceLeavesAndRefusesMore) {
  Bed b;
  auto& fap = takeover(b, b.pi);
  const auto h = fap.inject_malicious(b.pi, injection(b.pi, 1000));
  b.bed.run_for(30);
  b.bed.sim().disassociate(b.pi, "left");
  b.bed.run_for(5);
  EXPECT_FALSE(h.active());
  EXPECT_EQ(h.counters().active_seconds, 30);
  EXPECT_THROW(fap.inject_malicious(b.pi, injection(b.pi, 1000)), Error);
}

TEST(Inject, NotConnectedRejected) {
  Bed b;
  auto& fap = b.bed.deploy_fake_ap(10, {Protocol::Udp});
  fap.start_broadcasting();
  EXPECT_THROW(fap.inject_malicious(b.pi, injection(b.pi, 100)), Error);
}

TEST(FakeApStateView, ReportsModeConnectionsAndInjections) {
  Bed b;
  auto& fap = takeover(b, b.uno);
  fap.inject_malicious(b.uno, injection(b.uno, 300));
  const auto s = fap.state();
  EXPECT_EQ(s.mode, FakeApMode::Monitoring);
  EXPECT_EQ(s.clone_of, default_access_point().bssid);
  EXPECT_EQ(s.connected_devices, (std::set<NodeId>{b.uno}));
  ASSERT_TRUE(s.injection_active.contains(b.uno));
  EXPECT_EQ(s.injection_active.at(b.uno).rate, 300u);
}
