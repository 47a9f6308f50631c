#include <algorithm>
#include <ostream>

#include "ecsim/report.hpp"

namespace ecsim {

std::string_view to_string(FigureId id) {
  switch (id) {
    case FigureId::Fig5: return "fig5";
    case FigureId::Fig6: return "fig6";
    case FigureId::Fig7: return "fig7";
    case FigureId::Fig8: return "fig8";
    case FigureId::Fig9: return "fig9";
    case FigureId::Table1: return "table1";
    case FigureId::Table2: return "table2";
  }
  return "?";
}

std::vector<FigureId> all_figures() {
  return {FigureId::Fig5, FigureId::Fig6,   FigureId::Fig7,  FigureId::Fig8,
          FigureId::Fig9, FigureId::Table1, FigureId::Table2};
}

std::optional<FigureId> parse_figure_id(std::string_view text) {
  for (FigureId id : all_figures()) {
    if (to_string(id) == text) return id;
  }
  return std::nullopt;
}

namespace {

std::string port_text(const FloodSpec& s) {
  if (!s.dst_port) return "none";
  if (const auto* slot = std::get_if<std::uint32_t>(&*s.dst_port)) return std::to_string(*slot);
  return std::string(to_string(std::get<PortState>(*s.dst_port)));
}

bool has_class(const CampaignReport& r, const std::string& device, DeviceClass cls) {
  const auto it = r.device_classes.find(device);
  return it != r.device_classes.end() && it->second == cls;
}

[[noreturn]] void missing(FigureId id, const std::string& what) {
  throw Error(std::string(to_string(id)) + " needs " + what + ", which did not run");
}

FigureData ecddos_traces(const CampaignReport& r, FigureId id, DeviceClass cls) {
  FigureData f;
  f.id = id;
  f.comment = "EC-DDoS energy traces on " + std::string(to_string(cls)) +
              " devices; t_s counts seconds from attack start";
  f.columns = {"device", "protocol", "payload", "port", "t_s", "joules", "received_pps"};
  for (const auto& a : r.attacks) {
    if (a.kind != PhaseKind::EcDdos || !has_class(r, a.device, cls)) continue;
    for (const auto& row : a.trace) {
      f.rows.push_back({a.device, std::string(to_string(a.spec.protocol)),
                        std::string(to_string(a.spec.payload)), port_text(a.spec),
                        std::to_string(row.t - a.start), format_number(row.joules),
                        format_number(row.received_pps)});
    }
  }
  if (f.rows.empty()) {
    missing(id, "an ec-ddos phase on a " + std::string(to_string(cls)) + " device");
  }
  return f;
}

}  // namespace

FigureData figure_data(const CampaignReport& r, FigureId id) {
  FigureData f;
  f.id = id;
  switch (id) {
    case FigureId::Fig5: {
      f.comment = "mean energy before (e1) and during (e2) each EC-DDoS attack, J/s";
      f.columns = {"device", "protocol", "payload", "port", "rate_pps", "e1_jps", "e2_jps", "peak_jps"};
      for (const auto& a : r.attacks) {
        if (a.kind != PhaseKind::EcDdos) continue;
        f.rows.push_back({a.device, std::string(to_string(a.spec.protocol)),
                          std::string(to_string(a.spec.payload)), port_text(a.spec),
                          std::to_string(a.spec.rate), format_number(a.e1), format_number(a.e2),
                          format_number(a.peak)});
      }
      if (f.rows.empty()) missing(id, "an ec-ddos phase");
      return f;
    }
    case FigureId::Fig6: return ecddos_traces(r, id, DeviceClass::RaspberryPi);
    case FigureId::Fig7: return ecddos_traces(r, id, DeviceClass::Arduino);
    case FigureId::Fig8: {
      f.comment = "energy under fake-AP injection; t_s counts seconds from injection start";
      f.columns = {"device", "connect_minutes", "t_s", "joules", "received_pps"};
      for (const auto& fap : r.fap) {
        if (!fap.connected) continue;
        for (const auto& row : fap.trace) {
          f.rows.push_back({fap.device, format_number(fap.connect_minutes.value_or(0.0)),
                            std::to_string(row.t - fap.injection_start), format_number(row.joules),
                            format_number(row.received_pps)});
        }
      }
      if (f.rows.empty()) missing(id, "the fap phase");
      return f;
    }
    case FigureId::Fig9: {
      f.comment = "share of above-baseline energy by attack source, all devices";
      f.columns = {"source", "fraction", "joules"};
      if (!r.overall) missing(id, "an attack phase with above-baseline energy");
      f.rows.push_back({"ec_ddos", format_number(r.overall->ec_ddos),
                        format_number(r.overall->ec_ddos_joules)});
      f.rows.push_back({"fap", format_number(r.overall->fap), format_number(r.overall->fap_joules)});
      return f;
    }
    case FigureId::Table1: {
      f.comment = "port scan results per device and transport";
      f.columns = {"device", "protocol", "open", "closed", "filtered", "open_filtered", "total"};
      for (const auto& p : r.port_scans) {
        const auto& c = p.report.counts;
        f.rows.push_back({p.device, std::string(to_string(p.report.protocol)),
                          std::to_string(c.open), std::to_string(c.closed),
                          std::to_string(c.filtered), std::to_string(c.open_filtered),
                          std::to_string(c.total())});
      }
      if (f.rows.empty()) missing(id, "the port scan");
      return f;
    }
    case FigureId::Table2: {
      f.comment = "threshold attack rate and survival minutes at that rate";
      f.columns = {"device", "payload", "threshold_pps", "sd_icmp_min", "sd_tcp_min", "sd_udp_min"};
      std::vector<std::pair<std::string, PayloadClass>> keys;
      for (const auto& s : r.survival) {
        const std::pair key{s.device, s.payload};
        if (std::find(keys.begin(), keys.end(), key) == keys.end()) keys.push_back(key);
      }
      for (const auto& [device, payload] : keys) {
        std::vector<std::string> row{device, std::string(to_string(payload)), ""};
        for (Protocol proto : {Protocol::IcmpEcho, Protocol::TcpSyn, Protocol::Udp}) {
          std::string cell = "none";
          for (const auto& s : r.survival) {
            if (s.device != device || s.payload != payload || s.protocol != proto) continue;
            if (row[2].empty()) row[2] = s.threshold.pps ? std::to_string(*s.threshold.pps) : "unbounded";
            if (s.sd_minutes) cell = format_number(*s.sd_minutes);
          }
          row.push_back(cell);
        }
        f.rows.push_back(std::move(row));
      }
      if (f.rows.empty()) missing(id, "the threshold and survival measurements");
      return f;
    }
  }
  throw Error("unknown figure");
}

void write_figure_csv(std::ostream& out, const FigureData& f) {
  out << "# " << to_string(f.id) << ": " << f.comment << '\n';
  for (std::size_t i = 0; i < f.columns.size(); ++i) out << (i ? "," : "") << f.columns[i];
  out << '\n';
  for (const auto& row : f.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
    out << '\n';
  }
}

}  // namespace ecsim
