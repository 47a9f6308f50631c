// Acceptance run: one PASS/FAIL line per criterion. The optional argument is the
// path of the ec-attack-sim binary, used to check real process exit statuses.

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "ecsim/campaign.hpp"
#include "ecsim/config.hpp"
#include "ecsim/report.hpp"
#include "oracles.hpp"
#include "strict_csv.hpp"

using namespace ecsim;
namespace fs = std::filesystem;

namespace {

std::string g_sim_binary;

// Collects failure details for one criterion.
struct Check {
  std::vector<std::string> failures;
  void expect(bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  }
};

const std::vector<Protocol> kProtocols{Protocol::TcpSyn, Protocol::IcmpEcho, Protocol::Udp};
const std::vector<PayloadClass> kPayloads{PayloadClass::NoPayload, PayloadClass::HighPayload};

std::string name(Protocol p) { return std::string(to_string(p)); }

FloodTemplate tmpl(Protocol proto, PayloadClass payload = PayloadClass::NoPayload,
                   double minutes = 10) {
  FloodTemplate t;
  t.protocol = proto;
  t.payload = payload;
  t.duration_minutes = minutes;
  return t;
}

CampaignPlan quick_plan(std::uint64_t seed) {
  CampaignPlan plan = default_plan(seed);
  plan.measure_tables = false;
  return plan;
}

void port_scans(Check& c) {
  Testbed bed(default_access_point(), 1, TestbedOptions{.metering = false});
  const NodeId pi = bed.add_device("raspberry_pi", builtin_profile("raspberry_pi"));
  const NodeId uno = bed.add_device("arduino", builtin_profile("arduino"));
  auto& atk = bed.attacker();
  // Field order: open, closed, filtered, open_filtered.
  c.expect(atk.scan_ports(pi, Transport::Tcp).counts == PortStateCounts{3, 0, 65389, 998}, "rpi tcp");
  c.expect(atk.scan_ports(pi, Transport::Udp).counts == PortStateCounts{4, 0, 0, 700}, "rpi udp");
  c.expect(atk.scan_ports(uno, Transport::Tcp).counts == PortStateCounts{1, 0, 22, 1000}, "arduino tcp");
  c.expect(atk.scan_ports(uno, Transport::Udp).counts == PortStateCounts{0, 0, 0, 1000}, "arduino udp");
}

void thresholds(Check& c) {
  const auto pi = builtin_profile("raspberry_pi");
  const auto uno = builtin_profile("arduino");
  for (Protocol proto : kProtocols) {
    const auto p = name(proto);
    c.expect(find_threshold_ar(uno, proto, PayloadClass::NoPayload).pps == 800u, "arduino np " + p);
    c.expect(find_threshold_ar(uno, proto, PayloadClass::HighPayload).pps == 200u, "arduino hp " + p);
    c.expect(find_threshold_ar(pi, proto, PayloadClass::NoPayload).pps == 20000u, "rpi np " + p);
    c.expect(find_threshold_ar(pi, proto, PayloadClass::HighPayload).unbounded(), "rpi hp " + p);
  }
}

void survival(Check& c) {
  struct Row {
    const char* device;
    PayloadClass payload;
    double tcp, icmp, udp;  // minutes; negative means "survives"
  };
  const Row rows[] = {
      {"raspberry_pi", PayloadClass::NoPayload, 6.2, 7.58, 7.8},
      {"raspberry_pi", PayloadClass::HighPayload, -1, -1, -1},
      {"arduino", PayloadClass::NoPayload, 3.3, 3.6, 3.8},
      {"arduino", PayloadClass::HighPayload, 2.44, 3.13, 2.44},
  };
  for (const auto& r : rows) {
    const auto profile = builtin_profile(r.device);
    const auto thr = find_threshold_ar(profile, Protocol::TcpSyn, r.payload);
    const std::uint64_t rate = thr.pps ? *thr.pps : kRateCapPps;
    const double expected[] = {r.tcp, r.icmp, r.udp};
    for (std::size_t i = 0; i < kProtocols.size(); ++i) {
      const auto m = measure_survival(profile, kProtocols[i], r.payload, rate);
      const std::string label = std::string(r.device) + " " + std::string(to_string(r.payload)) + " " +
                                name(kProtocols[i]);
      if (expected[i] < 0) {
        c.expect(!m.sd_minutes, label + " should survive");
      } else {
        c.expect(m.sd_minutes && std::abs(*m.sd_minutes - expected[i]) <= 0.05 * expected[i],
                 label + " sd " + (m.sd_minutes ? format_number(*m.sd_minutes) : "none"));
      }
    }
  }
}

void reception(Check& c) {
  const auto pi = builtin_profile("raspberry_pi");
  const auto uno = builtin_profile("arduino");
  const double r = reception_rate(15000, *pi);
  c.expect(r >= 14500 && r <= 14600, "R(15000) = " + format_number(r));
  DeterministicStream rng(2024);
  for (int i = 0; i < 10000; ++i) {
    const double sent = rng.uniform(0.0, static_cast<double>(kRateCapPps));
    if (reception_rate(sent, *pi) > sent || reception_rate(sent, *uno) > sent) {
      c.expect(false, "received > sent at " + format_number(sent));
      return;
    }
  }
}

void baseline(Check& c) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    Campaign camp(quick_plan(seed));
    for (const auto& b : camp.run_phase_baseline()) {
      const bool pi = b.device == "raspberry_pi";
      const double lo = pi ? 1.410 : 1.060;
      const double hi = pi ? 1.420 : 1.065;
      c.expect(b.mean >= lo && b.mean <= hi, b.device + " mean " + format_number(b.mean));
      for (const auto& row : b.trace) {
        if (row.joules < lo || row.joules > hi) {
          c.expect(false, b.device + " sample " + format_number(row.joules));
          break;
        }
      }
      c.expect(b.samples == 1800, b.device + " sample count");
    }
  }
}

void ceilings(Check& c) {
  const std::map<std::string, std::vector<double>> expected{
      {"raspberry_pi", {3.3, 3.6, 3.5}}, {"arduino", {1.75, 1.25, 1.50}}};
  Campaign camp(quick_plan(1));
  camp.run_phase_baseline();
  for (const auto& [device, ceils] : expected) {
    for (std::size_t i = 0; i < kProtocols.size(); ++i) {
      const auto r = camp.run_phase_ecddos(device, tmpl(kProtocols[i]));
      const double ceiling = ceils[i];
      const std::string label = device + " " + name(kProtocols[i]);
      // The curve is calibrated to sit on 95% at this rate; allow for float rounding.
      c.expect(r.peak >= 0.95 * ceiling * (1 - 1e-12), label + " peak " + format_number(r.peak));
      c.expect(r.peak <= ceiling, label + " exceeds ceiling");
      c.expect(!r.disconnect_minutes, label + " disconnected");
      for (const auto& row : r.trace) {
        if (!row.associated) {
          c.expect(false, label + " lost association");
          break;
        }
      }
    }
  }
}

void fake_ap(Check& c) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto report = run_full_campaign(quick_plan(seed));
    for (const auto& f : report.fap) {
      const bool pi = f.device == "raspberry_pi";
      const std::string label = f.device + " seed " + std::to_string(seed);
      c.expect(f.attempts <= kMaxAttractAttempts, label + " attempts");
      for (double d : f.attempt_delays_min) {
        const bool ok = pi ? (d >= 3 && d <= 5) : (d >= 7 && d <= 10);
        c.expect(ok, label + " delay " + format_number(d));
      }
      if (!f.connected) continue;
      const double floor = pi ? 4.00 : 2.00;
      c.expect(f.mean > floor, label + " mean " + format_number(f.mean));
    }
  }
}

void attribution(Check& c) {
  const auto report = run_full_campaign(default_plan(1));
  if (!report.overall) {
    c.expect(false, "no attribution");
    return;
  }
  c.expect(std::abs(report.overall->ec_ddos - 0.55) <= 0.05,
           "ec-ddos " + format_number(report.overall->ec_ddos));
  c.expect(std::abs(report.overall->fap - 0.45) <= 0.05, "fap " + format_number(report.overall->fap));
}

void properties(Check& c) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    c.expect(report_json(run_full_campaign(quick_plan(seed))) ==
                 report_json(run_full_campaign(quick_plan(seed))),
             "report differs for seed " + std::to_string(seed));
  }
  int bounded = 0;
  for (const char* device : {"raspberry_pi", "arduino"}) {
    const auto p = builtin_profile(device);
    for (PayloadClass payload : kPayloads) {
      const auto thr = find_threshold_ar(p, Protocol::TcpSyn, payload);
      if (!thr.pps) continue;
      for (Protocol proto : kProtocols) {
        ++bounded;
        const std::string label = std::string(device) + " " + name(proto);
        c.expect(disconnects_at_rate(p, proto, payload, *thr.pps), label + " at threshold");
        c.expect(!disconnects_at_rate(p, proto, payload, *thr.pps - 1), label + " below threshold");
      }
    }
  }
  // Three bounded (device, payload) pairs, each checked on all three protocols.
  c.expect(bounded == 9, "bounded cases " + std::to_string(bounded));
  const auto uno = builtin_profile("arduino");
  for (PayloadClass payload : kPayloads) {
    c.expect(find_threshold_ar(uno, Protocol::Udp, payload).pps ==
                 oracle::linear_scan_threshold(uno, Protocol::Udp, payload, 100, 800),
             "binary search vs linear scan");
  }
  DeterministicStream rng(99);
  for (const char* device : {"raspberry_pi", "arduino"}) {
    const auto p = builtin_profile(device);
    for (int i = 0; i < 2000; ++i) {
      const double a = rng.uniform(0.0, static_cast<double>(kRateCapPps));
      const double b = a + rng.uniform(0.0, 1000.0);
      const double ra = reception_rate(a, *p);
      const double rb = reception_rate(b, *p);
      FloodSpec spec;
      spec.protocol = kProtocols[static_cast<std::size_t>(i) % 3];
      spec.rate = 1;
      if (ra > rb || attack_energy_rate(ra, spec, *p) > attack_energy_rate(rb, spec, *p)) {
        c.expect(false, std::string(device) + " not monotone near " + format_number(a));
        break;
      }
    }
  }
  // Random phase orderings: a fake association never replaces a live legitimate one.
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    DeterministicStream order(mix_seed(seed, 5));
    Campaign camp(quick_plan(seed));
    auto& bed = camp.testbed();
    for (int step = 0; step < 6; ++step) {
      const std::string device = order.next_index(2) == 0 ? "raspberry_pi" : "arduino";
      try {
        switch (order.next_index(4)) {
          case 0: camp.run_phase_baseline(); break;
          case 1: camp.run_phase_ecddos(device, tmpl(Protocol::IcmpEcho)); break;
          case 2: camp.run_phase_ddos_disconnect(device, tmpl(Protocol::IcmpEcho)); break;
          default: camp.run_phase_fap(device); break;
        }
      } catch (const Error&) {
      }
    }
    for (NodeId d : bed.fleet().nodes()) {
      for (const auto& tr : bed.sim().association(d).history) {
        if (tr.to.kind == BindingKind::Fake && tr.from.kind != BindingKind::Disconnected) {
          c.expect(false, "fake association over a live link, seed " + std::to_string(seed));
        }
      }
    }
  }
}

int run_binary(const std::string& args, const fs::path& dir) {
  const std::string cmd = "'" + g_sim_binary + "' --out '" + dir.string() + "' " + args +
                          " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void formats(Check& c) {
  const fs::path dir = fs::temp_directory_path() / "ecsim_acceptance";
  fs::remove_all(dir);
  const auto report = run_full_campaign(default_plan(1));
  write_campaign_artifacts(report, dir, true, true);
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    try {
      const auto text = strict_csv::read_file(entry.path());
      if (entry.path().extension() == ".json") {
        static_cast<void>(nlohmann::json::parse(text));
      } else {
        const auto t = strict_csv::parse(text, entry.path().parent_path().filename() == "figures");
        if (entry.path().parent_path().filename() == "traces" &&
            t.header != std::vector<std::string>{"t", "joules", "received_pps", "associated"}) {
          c.expect(false, entry.path().string() + " header");
        }
      }
    } catch (const std::exception& e) {
      c.expect(false, entry.path().string() + ": " + e.what());
    }
  }
  fs::remove_all(dir);

  if (g_sim_binary.empty()) {
    c.expect(false, "no ec-attack-sim path given");
    return;
  }
  fs::create_directories(dir);
  c.expect(run_binary("threshold --device arduino --protocol tcp --payload np", dir) == 0, "success path");
  c.expect(run_binary("flood --device raspberry_pi --protocol tcp --rate 200000", dir) == 2,
           "validation path");
  std::ofstream(dir / ".lock") << "held\n";
  c.expect(run_binary("threshold --device arduino --protocol tcp", dir) == 1, "runtime path");
  fs::remove_all(dir);
}

}  // namespace

int main(int argc, char** argv) {
  if (argc > 1) g_sim_binary = argv[1];
  const std::vector<std::pair<std::string, std::function<void(Check&)>>> criteria{
      {"1 port-scan fidelity", port_scans},   {"2 threshold AR", thresholds},
      {"3 survival durations", survival},     {"4 reception saturation", reception},
      {"5 baseline energy", baseline},        {"6 EC-DDoS ceilings", ceilings},
      {"7 fake-AP phase", fake_ap},           {"8 attribution split", attribution},
      {"9 property suite", properties},       {"10 format suite", formats},
  };
  int failed = 0;
  for (const auto& [label, fn] : criteria) {
    Check c;
    try {
      fn(c);
    } catch (const std::exception& e) {
      c.failures.push_back(std::string("exception: ") + e.what());
    }
    if (c.failures.empty()) {
      std::cout << "PASS " << label << '\n';
    } else {
      ++failed;
      std::cout << "FAIL " << label;
      for (const auto& f : c.failures) std::cout << " | " << f;
      std::cout << '\n';
    }
  }
  return failed == 0 ? 0 : 1;
}
