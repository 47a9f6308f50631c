#include "ecsim/report.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>

#include <json.hpp>

namespace ecsim {

using nlohmann::json;

std::string format_number(double v) {
  if (v == 0.0 || !std::isfinite(v)) return v == 0.0 ? "0" : (std::isnan(v) ? "nan" : "inf");
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 6);
  return std::string(buf, res.ptr);
}

double round6(double v) {
  if (v == 0.0 || !std::isfinite(v)) return v == 0.0 ? 0.0 : v;
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::scientific, 5);
  double out = 0.0;
  std::from_chars(buf, res.ptr, out);
  return out;
}

void write_trace_csv(std::ostream& out, const std::vector<TraceRow>& rows) {
  out << kTraceHeader << '\n';
  for (const auto& r : rows) {
    out << r.t << ',' << format_number(r.joules) << ',' << format_number(r.received_pps) << ','
        << (r.associated ? 1 : 0) << '\n';
  }
}

std::string trace_file(const BaselineStats& b) { return "traces/" + b.device + "_baseline.csv"; }

std::string trace_file(const AttackRecord& a, std::size_t index) {
  return "traces/" + a.device + "_" + std::to_string(index) + "_" + std::string(to_string(a.kind)) +
         "_" + std::string(to_string(a.spec.protocol)) + "_" +
         std::string(to_string(a.spec.payload)) + ".csv";
}

std::string trace_file(const FapRecord& f) { return "traces/" + f.device + "_fap.csv"; }

namespace {

json num(double v) { return round6(v); }

json opt_num(const std::optional<double>& v) { return v ? num(*v) : json(nullptr); }

json threshold_json(const Threshold& t) { return t.pps ? json(*t.pps) : json("unbounded"); }

json counters_json(const FloodCounters& c) {
  return {{"sent", c.sent},
          {"delivered", c.delivered},
          {"processed", c.processed},
          {"active_seconds", c.active_seconds}};
}

json port_json(const FloodSpec& s) {
  if (!s.dst_port) return nullptr;
  if (const auto* slot = std::get_if<std::uint32_t>(&*s.dst_port)) return *slot;
  return to_string(std::get<PortState>(*s.dst_port));
}

json counts_json(const PortStateCounts& c) {
  return {{"open", c.open},
          {"closed", c.closed},
          {"filtered", c.filtered},
          {"open_filtered", c.open_filtered},
          {"total", c.total()}};
}

json attribution_json(const std::optional<Attribution>& a) {
  if (!a) return nullptr;
  return {{"ec_ddos", num(a->ec_ddos)},
          {"fap", num(a->fap)},
          {"ec_ddos_joules", num(a->ec_ddos_joules)},
          {"fap_joules", num(a->fap_joules)}};
}

}  // namespace

std::string report_json(const CampaignReport& r) {
  json doc;
  doc["seed"] = r.seed;
  doc["completed"] = r.completed;
  doc["failure"] = r.failure ? json(*r.failure) : json(nullptr);

  json devices = json::array();
  for (const auto& [id, cls] : r.device_classes) {
    devices.push_back({{"id", id}, {"class", to_string(cls)}});
  }
  doc["devices"] = devices;

  json baseline = json::array();
  for (const auto& b : r.baseline) {
    baseline.push_back({{"device", b.device},
                        {"mean", num(b.mean)},
                        {"min", num(b.min)},
                        {"max", num(b.max)},
                        {"band", {{"lo", num(b.band.lo)}, {"hi", num(b.band.hi)}}},
                        {"samples", b.samples},
                        {"start", b.start},
                        {"end", b.end},
                        {"trace", trace_file(b)}});
  }
  doc["baseline"] = baseline;

  if (r.network_scan) {
    json scan = json::array();
    for (const auto& d : r.network_scan->devices) {
      scan.push_back({{"device", d.name},
                      {"status", d.online ? "online" : "offline"},
                      {"ip", d.ip},
                      {"mac", d.mac.to_string()}});
    }
    doc["network_scan"] = {{"timestamp", r.network_scan->timestamp}, {"devices", scan}};
  } else {
    doc["network_scan"] = nullptr;
  }

  json ports = json::array();
  for (const auto& p : r.port_scans) {
    json range = p.report.scanned_range.empty
                     ? json(nullptr)
                     : json{{"lo", p.report.scanned_range.lo}, {"hi", p.report.scanned_range.hi}};
    ports.push_back({{"device", p.device},
                     {"protocol", to_string(p.report.protocol)},
                     {"range", range},
                     {"counts", counts_json(p.report.counts)}});
  }
  doc["port_scans"] = ports;

  json survival = json::array();
  for (const auto& s : r.survival) {
    survival.push_back({{"device", s.device},
                        {"protocol", to_string(s.protocol)},
                        {"payload", to_string(s.payload)},
                        {"threshold_pps", threshold_json(s.threshold)},
                        {"sd_minutes", s.sd_minutes ? num(*s.sd_minutes) : json("none")}});
  }
  doc["survival"] = survival;

  json attacks = json::array();
  for (std::size_t i = 0; i < r.attacks.size(); ++i) {
    const AttackRecord& a = r.attacks[i];
    attacks.push_back({{"device", a.device},
                       {"kind", to_string(a.kind)},
                       {"protocol", to_string(a.spec.protocol)},
                       {"payload", to_string(a.spec.payload)},
                       {"port", port_json(a.spec)},
                       {"rate_pps", a.spec.rate},
                       {"max_duration_minutes", num(a.spec.max_duration_minutes)},
                       {"start", a.start},
                       {"end", a.end},
                       {"threshold_pps", threshold_json(a.threshold)},
                       {"disconnect_minutes", opt_num(a.disconnect_minutes)},
                       {"sd_minutes", opt_num(a.sd_minutes)},
                       {"e1", num(a.e1)},
                       {"e2", num(a.e2)},
                       {"peak", num(a.peak)},
                       {"counters", counters_json(a.counters)},
                       {"trace", trace_file(a, i)}});
  }
  doc["attacks"] = attacks;

  json fap = json::array();
  for (const auto& f : r.fap) {
    json delays = json::array();
    for (double d : f.attempt_delays_min) delays.push_back(num(d));
    json entry = {{"device", f.device},
                  {"connected", f.connected},
                  {"attempts", f.attempts},
                  {"attempt_delays_minutes", delays},
                  {"connect_minutes", opt_num(f.connect_minutes)},
                  {"attract_start", f.attract_start}};
    if (f.connected) {
      entry["injection_start"] = f.injection_start;
      entry["injection_end"] = f.injection_end;
      entry["mean"] = num(f.mean);
      entry["peak"] = num(f.peak);
      entry["captured_packets"] = f.captured_packets;
      entry["counters"] = counters_json(f.counters);
      entry["trace"] = trace_file(f);
    }
    fap.push_back(entry);
  }
  doc["fap"] = fap;

  json per_device = json::array();
  for (const auto& a : r.attribution) {
    per_device.push_back({{"device", a.device}, {"split", attribution_json(a.split)}});
  }
  doc["attribution"] = {{"devices", per_device}, {"overall", attribution_json(r.overall)}};
  return doc.dump(2) + "\n";
}

namespace {

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << content;
  if (!out) throw Error("write failed for '" + path.string() + "'");
}

template <class Fn>
void write_with(const std::filesystem::path& path, Fn&& fn) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  fn(out);
  if (!out) throw Error("write failed for '" + path.string() + "'");
}

}  // namespace

std::vector<std::string> write_campaign_artifacts(const CampaignReport& report,
                                                  const std::filesystem::path& dir, bool csv,
                                                  bool json_out) {
  std::vector<std::string> skipped;
  if (json_out) write_file(dir / "report.json", report_json(report));
  if (!csv) return skipped;
  for (const auto& b : report.baseline) {
    write_with(dir / trace_file(b), [&](std::ostream& o) { write_trace_csv(o, b.trace); });
  }
  for (std::size_t i = 0; i < report.attacks.size(); ++i) {
    const auto& a = report.attacks[i];
    write_with(dir / trace_file(a, i), [&](std::ostream& o) { write_trace_csv(o, a.trace); });
  }
  for (const auto& f : report.fap) {
    if (!f.connected) continue;
    write_with(dir / trace_file(f), [&](std::ostream& o) { write_trace_csv(o, f.trace); });
  }
  for (FigureId id : all_figures()) {
    FigureData fig;
    try {
      fig = figure_data(report, id);
    } catch (const Error&) {
      skipped.emplace_back(to_string(id));
      continue;
    }
    write_with(dir / "figures" / (std::string(to_string(id)) + ".csv"),
               [&](std::ostream& o) { write_figure_csv(o, fig); });
  }
  return skipped;
}

}  // namespace ecsim
