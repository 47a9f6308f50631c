#include "ecsim/cli.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <ostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "ecsim/config.hpp"
#include "ecsim/report.hpp"

namespace ecsim {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Exclusive claim on an output directory for the lifetime of one run.
class OutputLock {
 public:
  explicit OutputLock(const fs::path& dir) : path_(dir / ".lock") {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error("cannot create output directory '" + dir.string() + "': " + ec.message());
    fd_ = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd_ < 0) {
      if (errno == EEXIST) {
        throw Error("output directory '" + dir.string() + "' is locked by another run (" +
                    path_.string() + ")");
      }
      throw Error("cannot lock '" + dir.string() + "': " + std::strerror(errno));
    }
  }
  OutputLock(const OutputLock&) = delete;
  OutputLock& operator=(const OutputLock&) = delete;
  ~OutputLock() {
    ::close(fd_);
    ::unlink(path_.c_str());
  }

 private:
  fs::path path_;
  int fd_ = -1;
};

struct GlobalOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
};

ScenarioConfig scenario(const GlobalOptions& g) {
  ScenarioConfig c = g.config_path.empty() ? default_config(1) : load_config(g.config_path);
  if (g.seed) c.seed = *g.seed;
  return c;
}

fs::path output_dir(const GlobalOptions& g, const ScenarioConfig& c) {
  if (!g.out_dir.empty()) return g.out_dir;
  if (const char* env = std::getenv("EC_ATTACK_SIM_OUT"); env != nullptr && *env != '\0') return env;
  if (c.output_directory) return *c.output_directory;
  return "ec-attack-sim-out";
}

void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << text;
}

const DeviceConfig& find_device(const ScenarioConfig& c, const std::string& id) {
  for (const auto& d : c.devices) {
    if (d.id == id) return d;
  }
  std::string known;
  for (const auto& d : c.devices) known += (known.empty() ? "" : ", ") + d.id;
  throw ValidationError("unknown device '" + id + "' (config has: " + known + ")");
}

Protocol need_protocol(const std::string& text) {
  if (auto p = parse_protocol(text)) return *p;
  throw ValidationError("unknown protocol '" + text + "' (tcp, udp, icmp)");
}

PayloadClass need_payload(const std::string& text) {
  if (auto p = parse_payload_class(text)) return *p;
  throw ValidationError("unknown payload class '" + text + "' (np, hp)");
}

// Testbed holding every configured device, in config order.
std::unique_ptr<Testbed> build_testbed(const ScenarioConfig& c) {
  auto bed = std::make_unique<Testbed>(c.ap, c.seed);
  for (const auto& d : c.devices) bed->add_device(d.id, resolve_profile(d));
  return bed;
}

PortRange parse_range(const std::string& text) {
  if (text.empty()) return PortRange::all();
  const auto dash = text.find('-');
  try {
    if (dash == std::string::npos) throw std::invalid_argument("no dash");
    std::size_t used = 0;
    const auto lo = std::stoul(text.substr(0, dash), &used);
    if (used != dash) throw std::invalid_argument("lo");
    const std::string hi_text = text.substr(dash + 1);
    const auto hi = std::stoul(hi_text, &used);
    if (used != hi_text.size()) throw std::invalid_argument("hi");
    if (lo > hi) return PortRange::none();
    return PortRange{static_cast<std::uint32_t>(lo), static_cast<std::uint32_t>(hi), false};
  } catch (const std::logic_error&) {
    throw ValidationError("range must look like LO-HI, got '" + text + "'");
  }
}

json counts_json(const PortStateCounts& c) {
  return {{"open", c.open},
          {"closed", c.closed},
          {"filtered", c.filtered},
          {"open_filtered", c.open_filtered},
          {"total", c.total()}};
}

int cmd_scan(const GlobalOptions& g, const std::string& device, const std::string& protocol,
             const std::string& range_text, std::ostream& out) {
  const ScenarioConfig c = scenario(g);
  if (!device.empty()) find_device(c, device);
  std::vector<Transport> transports{Transport::Tcp, Transport::Udp};
  if (!protocol.empty()) {
    const auto t = parse_transport(protocol);
    if (!t) throw ValidationError("port scans cover tcp or udp, got '" + protocol + "'");
    transports = {*t};
  }
  const PortRange range = parse_range(range_text);
  const fs::path dir = output_dir(g, c);
  OutputLock lock(dir);

  auto bed = build_testbed(c);
  const ScanReport net = bed->attacker().scan_network();
  json doc;
  doc["seed"] = c.seed;
  json hosts = json::array();
  for (const auto& d : net.devices) {
    hosts.push_back({{"device", d.name},
                     {"status", d.online ? "online" : "offline"},
                     {"ip", d.ip},
                     {"mac", d.mac.to_string()}});
  }
  doc["network"] = hosts;
  json ports = json::array();
  for (const auto& d : c.devices) {
    if (!device.empty() && d.id != device) continue;
    for (Transport t : transports) {
      const PortScanReport r = bed->attacker().scan_ports(bed->device(d.id), t, range);
      json range_json = r.scanned_range.empty
                            ? json(nullptr)
                            : json{{"lo", r.scanned_range.lo}, {"hi", r.scanned_range.hi}};
      ports.push_back({{"device", d.id},
                       {"protocol", to_string(t)},
                       {"range", range_json},
                       {"counts", counts_json(r.counts)}});
    }
  }
  doc["ports"] = ports;
  const std::string text = doc.dump(2) + "\n";
  write_text(dir / "scan.json", text);
  out << text;
  return kExitOk;
}

struct FloodArgs {
  std::string device;
  std::string protocol;
  std::string payload = "np";
  std::uint64_t rate = 0;
  double duration_min = 10.0;
  std::string port;
};

int cmd_flood(const GlobalOptions& g, const FloodArgs& a, std::ostream& out) {
  const ScenarioConfig c = scenario(g);
  const DeviceConfig& dev = find_device(c, a.device);
  FloodSpec spec;
  spec.protocol = need_protocol(a.protocol);
  spec.payload = need_payload(a.payload);
  spec.rate = a.rate;
  spec.max_duration_minutes = a.duration_min;
  if (spec.protocol == Protocol::TcpSyn) spec.tcp_flags = kSyn;
  if (!a.port.empty()) {
    if (auto s = parse_port_state(a.port)) {
      spec.dst_port = *s;
    } else {
      try {
        std::size_t used = 0;
        const auto slot = std::stoul(a.port, &used);
        if (used != a.port.size()) throw std::invalid_argument("port");
        spec.dst_port = static_cast<std::uint32_t>(slot);
      } catch (const std::logic_error&) {
        throw ValidationError("port must be a number or a port state, got '" + a.port + "'");
      }
    }
  }
  if (auto problems = validate(spec); !problems.empty()) throw ValidationError(problems);

  const fs::path dir = output_dir(g, c);
  OutputLock lock(dir);
  auto bed = build_testbed(c);
  spec.target = bed->device(dev.id);
  const SimTime start = bed->sim().now();
  const FloodHandle flood = bed->attacker().launch_flood(spec);
  while (flood.active()) bed->run_for(1);
  const FloodCounters counters = bed->attacker().stop_flood(flood);

  std::vector<TraceRow> rows;
  for (const auto& rec : bed->fleet().at(spec.target).trace()) {
    if (rec.sample.t <= start) continue;
    rows.push_back(TraceRow{rec.sample.t, rec.sample.joules, rec.received_pps, rec.associated(),
                            rec.source});
  }
  double peak = 0.0;
  double sum = 0.0;
  for (const auto& r : rows) {
    peak = std::max(peak, r.joules);
    sum += r.joules;
  }
  const std::string trace_name = "flood_" + dev.id + ".csv";
  json doc = {{"seed", c.seed},
              {"device", dev.id},
              {"protocol", to_string(spec.protocol)},
              {"payload", to_string(spec.payload)},
              {"rate_pps", spec.rate},
              {"max_duration_minutes", round6(spec.max_duration_minutes)},
              {"sent", counters.sent},
              {"delivered", counters.delivered},
              {"processed", counters.processed},
              {"active_seconds", counters.active_seconds},
              {"mean_joules", round6(rows.empty() ? 0.0 : sum / static_cast<double>(rows.size()))},
              {"peak_joules", round6(peak)},
              {"trace", trace_name}};
  if (counters.target_disconnected_at) {
    doc["disconnect_minutes"] = round6(static_cast<double>(*counters.target_disconnected_at - start) / 60.0);
  } else {
    doc["disconnect_minutes"] = nullptr;
  }
  const std::string text = doc.dump(2) + "\n";
  if (c.formats.contains(OutputFormat::Json)) write_text(dir / "flood.json", text);
  if (c.formats.contains(OutputFormat::Csv)) {
    std::ofstream csv(dir / trace_name, std::ios::binary | std::ios::trunc);
    write_trace_csv(csv, rows);
  }
  out << text;
  return kExitOk;
}

int cmd_threshold(const GlobalOptions& g, const std::string& device, const std::string& protocol,
                  const std::string& payload, std::ostream& out) {
  const ScenarioConfig c = scenario(g);
  const DeviceConfig& dev = find_device(c, device);
  const Protocol proto = need_protocol(protocol);
  const PayloadClass pay = need_payload(payload);
  const fs::path dir = output_dir(g, c);
  OutputLock lock(dir);
  const Threshold t = find_threshold_ar(resolve_profile(dev), proto, pay);
  const json doc = {{"device", dev.id},
                    {"protocol", to_string(proto)},
                    {"payload", to_string(pay)},
                    {"threshold_pps", t.pps ? json(*t.pps) : json("unbounded")}};
  write_text(dir / "threshold.json", doc.dump(2) + "\n");
  out << (t.pps ? std::to_string(*t.pps) : std::string("unbounded")) << '\n';
  return kExitOk;
}

void write_captures(const CampaignReport& report, const fs::path& dir, std::int64_t seconds) {
  for (const auto& f : report.fap) {
    if (!f.connected) continue;
    std::vector<CaptureEntry> window;
    for (const auto& e : f.capture) {
      if (e.t <= f.injection_start + seconds) window.push_back(e);
    }
    fs::create_directories(dir / "captures");
    std::ofstream out(dir / "captures" / (f.device + ".csv"), std::ios::binary | std::ios::trunc);
    write_capture_csv(out, window);
  }
}

int cmd_campaign(const GlobalOptions& g, std::int64_t capture_seconds, std::ostream& out,
                 std::ostream& err) {
  const ScenarioConfig c = scenario(g);
  const CampaignPlan plan = to_plan(c);
  const fs::path dir = output_dir(g, c);
  OutputLock lock(dir);
  const bool csv = c.formats.contains(OutputFormat::Csv);
  const bool js = c.formats.contains(OutputFormat::Json);
  CampaignReport report;
  try {
    report = run_full_campaign(plan);
  } catch (const CampaignFailure& failure) {
    write_campaign_artifacts(failure.partial(), dir, csv, js);
    err << "campaign failed: " << failure.what() << " (partial report in " << dir.string() << ")\n";
    return kExitRuntime;
  }
  write_campaign_artifacts(report, dir, csv, js);
  if (capture_seconds > 0 && csv) write_captures(report, dir, capture_seconds);
  out << "campaign complete, seed " << report.seed << ", artifacts in " << dir.string() << '\n';
  for (const auto& a : report.attribution) {
    if (!a.split) continue;
    out << a.device << ": ec-ddos " << format_number(a.split->ec_ddos) << ", fap "
        << format_number(a.split->fap) << '\n';
  }
  if (report.overall) {
    out << "overall: ec-ddos " << format_number(report.overall->ec_ddos) << ", fap "
        << format_number(report.overall->fap) << '\n';
  }
  return kExitOk;
}

int cmd_emit(const GlobalOptions& g, const std::vector<std::string>& names, std::ostream& out) {
  std::vector<FigureId> ids;
  for (const auto& n : names) {
    const auto id = parse_figure_id(n);
    if (!id) throw ValidationError("unknown figure '" + n + "' (fig5..fig9, table1, table2)");
    ids.push_back(*id);
  }
  if (ids.empty()) ids = all_figures();
  const ScenarioConfig c = scenario(g);
  const CampaignPlan plan = to_plan(c);
  const fs::path dir = output_dir(g, c);
  OutputLock lock(dir);
  const CampaignReport report = run_full_campaign(plan);
  // Resolve every figure before writing any, so a missing phase leaves no partial set.
  std::vector<FigureData> figures;
  for (FigureId id : ids) figures.push_back(figure_data(report, id));
  for (const auto& f : figures) {
    const fs::path path = dir / "figures" / (std::string(to_string(f.id)) + ".csv");
    fs::create_directories(path.parent_path());
    std::ofstream file(path, std::ios::binary | std::ios::trunc);
    write_figure_csv(file, f);
    out << path.string() << '\n';
  }
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Deterministic simulator of DDoS, EC-DDoS and fake-AP attacks on IoT devices",
               "ec-attack-sim"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOptions g;
  std::uint64_t seed = 0;
  app.add_option("--config", g.config_path, "Scenario config (JSON); built-in scenario if omitted");
  auto* seed_opt = app.add_option("--seed", seed, "Seed, overrides the config");
  app.add_option("--out", g.out_dir, "Output directory (default: $EC_ATTACK_SIM_OUT)");

  auto* scan = app.add_subcommand("scan", "Network and port scan");
  std::string scan_device, scan_protocol, scan_range;
  scan->add_option("--device", scan_device, "Device id (default: all)");
  scan->add_option("--protocol", scan_protocol, "tcp or udp (default: both)");
  scan->add_option("--range", scan_range, "Slot range LO-HI (default: all)");

  auto* flood = app.add_subcommand("flood", "Run one flood against a device");
  FloodArgs fa;
  flood->add_option("--device", fa.device, "Device id")->required();
  flood->add_option("--protocol", fa.protocol, "tcp, udp or icmp")->required();
  flood->add_option("--payload", fa.payload, "np or hp");
  flood->add_option("--rate", fa.rate, "Packets per second")->required();
  flood->add_option("--duration-min", fa.duration_min, "Flood length in minutes, 8 to 30");
  flood->add_option("--port", fa.port, "Port slot or port state (tcp/udp only)");

  auto* threshold = app.add_subcommand("threshold", "Search the disconnect threshold rate");
  std::string th_device, th_protocol, th_payload = "np";
  threshold->add_option("--device", th_device, "Device id")->required();
  threshold->add_option("--protocol", th_protocol, "tcp, udp or icmp")->required();
  threshold->add_option("--payload", th_payload, "np or hp");

  auto* campaign = app.add_subcommand("campaign", "Run the full attack campaign");
  std::int64_t capture_seconds = 0;
  campaign->add_option("--capture-seconds", capture_seconds,
                       "Export the first N seconds of each fake-AP capture as CSV");

  auto* emit = app.add_subcommand("emit", "Run the campaign and write figure data");
  std::vector<std::string> figures;
  emit->add_option("--figure", figures, "fig5..fig9, table1, table2 (default: all)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitValidation;
  }
  if (seed_opt->count() > 0) g.seed = seed;

  try {
    if (scan->parsed()) return cmd_scan(g, scan_device, scan_protocol, scan_range, out);
    if (flood->parsed()) return cmd_flood(g, fa, out);
    if (threshold->parsed()) return cmd_threshold(g, th_device, th_protocol, th_payload, out);
    if (campaign->parsed()) return cmd_campaign(g, capture_seconds, out, err);
    if (emit->parsed()) return cmd_emit(g, figures, out);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitRuntime;
}

}  // namespace ecsim
