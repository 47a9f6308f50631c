#include "ecsim/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace ecsim {

using nlohmann::json;

bool ProfileOverrides::empty() const { return *this == ProfileOverrides{}; }

namespace {

double default_injection_minutes(std::string_view profile) {
  for (const auto& d : default_plan(0).devices) {
    if (d.profile->name == profile) return d.fap_injection_minutes;
  }
  return 10.0;
}

std::string key_of(const ProtocolPayload& k) {
  return std::string(to_string(k.first)) + "/" + std::string(to_string(k.second));
}

std::optional<ProtocolPayload> parse_key(std::string_view text) {
  const auto slash = text.find('/');
  if (slash == std::string_view::npos) return std::nullopt;
  const auto proto = parse_protocol(text.substr(0, slash));
  const auto payload = parse_payload_class(text.substr(slash + 1));
  if (!proto || !payload) return std::nullopt;
  return ProtocolPayload{*proto, *payload};
}

// Walks a JSON document, collecting every problem instead of stopping at the first.
class Reader {
 public:
  std::vector<std::string> problems;

  void fail(const std::string& path, const std::string& what) {
    problems.push_back(path + ": " + what);
  }

  // Flags members of `obj` not listed in `known`.
  void only(const json& obj, const std::string& path, std::initializer_list<std::string_view> known) {
    for (const auto& [k, v] : obj.items()) {
      if (std::find(known.begin(), known.end(), k) == known.end()) {
        fail(path + "." + k, "unknown field");
      }
    }
  }

  bool object(const json& j, const std::string& path) {
    if (j.is_object()) return true;
    fail(path, "expected an object");
    return false;
  }

  template <class T>
  void number(const json& obj, const std::string& path, std::string_view key, T& out) {
    const auto it = obj.find(std::string(key));
    if (it == obj.end()) return;
    read_number(*it, path + "." + std::string(key), out);
  }

  template <class T>
  bool read_number(const json& j, const std::string& path, T& out) {
    if constexpr (std::is_floating_point_v<T>) {
      if (j.is_number()) {
        out = j.get<T>();
        return true;
      }
      fail(path, "expected a number");
    } else {
      if (j.is_number_unsigned() || (j.is_number_integer() && j.get<std::int64_t>() >= 0)) {
        out = j.get<T>();
        return true;
      }
      fail(path, "expected a non-negative integer");
    }
    return false;
  }

  void boolean(const json& obj, const std::string& path, std::string_view key, bool& out) {
    const auto it = obj.find(std::string(key));
    if (it == obj.end()) return;
    if (it->is_boolean()) {
      out = it->get<bool>();
    } else {
      fail(path + "." + std::string(key), "expected true or false");
    }
  }

  bool string(const json& j, const std::string& path, std::string& out) {
    if (j.is_string()) {
      out = j.get<std::string>();
      return true;
    }
    fail(path, "expected a string");
    return false;
  }

  void protocol(const json& j, const std::string& path, Protocol& out) {
    std::string s;
    if (!string(j, path, s)) return;
    if (auto p = parse_protocol(s)) {
      out = *p;
    } else {
      fail(path, "unknown protocol '" + s + "' (tcp, udp, icmp)");
    }
  }

  void payload(const json& j, const std::string& path, PayloadClass& out) {
    std::string s;
    if (!string(j, path, s)) return;
    if (auto p = parse_payload_class(s)) {
      out = *p;
    } else {
      fail(path, "unknown payload class '" + s + "' (np, hp)");
    }
  }

  FloodTemplate flood(const json& j, const std::string& path) {
    FloodTemplate t;
    if (!object(j, path)) return t;
    only(j, path, {"protocol", "payload", "port", "rate", "duration_minutes"});
    if (j.contains("protocol")) {
      protocol(j["protocol"], path + ".protocol", t.protocol);
    } else {
      fail(path + ".protocol", "missing");
    }
    if (j.contains("payload")) payload(j["payload"], path + ".payload", t.payload);
    if (j.contains("port")) {
      const json& p = j["port"];
      if (p.is_string()) {
        if (auto s = parse_port_state(p.get<std::string>())) {
          t.port = *s;
        } else {
          fail(path + ".port", "unknown port state '" + p.get<std::string>() + "'");
        }
      } else {
        std::uint32_t slot = 0;
        if (read_number(p, path + ".port", slot)) t.port = slot;
      }
    }
    if (j.contains("rate")) {
      std::uint64_t r = 0;
      if (read_number(j["rate"], path + ".rate", r)) t.rate = r;
    }
    number(j, path, "duration_minutes", t.duration_minutes);
    return t;
  }

  std::optional<std::uint64_t> threshold(const json& j, const std::string& path) {
    if (j.is_string() && j.get<std::string>() == "unbounded") return std::nullopt;
    std::uint64_t v = 0;
    if (!j.is_number()) {
      fail(path, "expected an integer or \"unbounded\"");
      return std::nullopt;
    }
    read_number(j, path, v);
    return v;
  }

  ProfileOverrides overrides(const json& j, const std::string& path) {
    ProfileOverrides o;
    if (!object(j, path)) return o;
    only(j, path,
         {"e_base", "e_max", "ar_threshold_np", "ar_threshold_hp", "sd_ref_min",
          "reception_linear_limit", "reception_gamma", "fap_connect_range", "fap_e_level",
          "fap_e_max", "fap_attach_success", "supply_voltage", "threshold_search"});
    if (j.contains("e_base") && object(j["e_base"], path + ".e_base")) {
      EnergyBand b;
      only(j["e_base"], path + ".e_base", {"lo", "hi"});
      number(j["e_base"], path + ".e_base", "lo", b.lo);
      number(j["e_base"], path + ".e_base", "hi", b.hi);
      o.e_base = b;
    }
    if (j.contains("e_max") && object(j["e_max"], path + ".e_max")) {
      for (const auto& [k, v] : j["e_max"].items()) {
        const auto key = parse_key(k);
        if (!key) {
          fail(path + ".e_max." + k, "expected a key like \"tcp/np\"");
          continue;
        }
        double e = 0.0;
        if (read_number(v, path + ".e_max." + k, e)) o.e_max[*key] = e;
      }
    }
    if (j.contains("ar_threshold_np")) {
      o.ar_threshold_np = threshold(j["ar_threshold_np"], path + ".ar_threshold_np");
    }
    if (j.contains("ar_threshold_hp")) {
      o.ar_threshold_hp = threshold(j["ar_threshold_hp"], path + ".ar_threshold_hp");
    }
    if (j.contains("sd_ref_min") && object(j["sd_ref_min"], path + ".sd_ref_min")) {
      for (const auto& [k, v] : j["sd_ref_min"].items()) {
        const auto key = parse_key(k);
        if (!key) {
          fail(path + ".sd_ref_min." + k, "expected a key like \"tcp/np\"");
          continue;
        }
        if (v.is_string() && v.get<std::string>() == "none") {
          o.sd_ref_min[*key] = std::nullopt;
          continue;
        }
        double sd = 0.0;
        if (read_number(v, path + ".sd_ref_min." + k, sd)) o.sd_ref_min[*key] = sd;
      }
    }
    auto opt_number = [&](std::string_view key, std::optional<double>& out) {
      if (!j.contains(std::string(key))) return;
      double v = 0.0;
      if (read_number(j[std::string(key)], path + "." + std::string(key), v)) out = v;
    };
    opt_number("reception_linear_limit", o.reception_linear_limit);
    opt_number("reception_gamma", o.reception_gamma);
    opt_number("fap_e_level", o.fap_e_level);
    opt_number("fap_e_max", o.fap_e_max);
    opt_number("fap_attach_success", o.fap_attach_success);
    opt_number("supply_voltage", o.supply_voltage);
    if (j.contains("fap_connect_range") && object(j["fap_connect_range"], path + ".fap_connect_range")) {
      MinuteRange r;
      only(j["fap_connect_range"], path + ".fap_connect_range", {"min", "max"});
      number(j["fap_connect_range"], path + ".fap_connect_range", "min", r.min);
      number(j["fap_connect_range"], path + ".fap_connect_range", "max", r.max);
      o.fap_connect_range = r;
    }
    if (j.contains("threshold_search") && object(j["threshold_search"], path + ".threshold_search")) {
      RateRange r;
      only(j["threshold_search"], path + ".threshold_search", {"lo", "hi"});
      number(j["threshold_search"], path + ".threshold_search", "lo", r.lo);
      number(j["threshold_search"], path + ".threshold_search", "hi", r.hi);
      o.threshold_search = r;
    }
    return o;
  }
};

int line_of(std::string_view text, std::size_t byte) {
  const std::size_t end = std::min(byte == 0 ? 0 : byte - 1, text.size());
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<long>(end), '\n'));
}

json flood_json(const FloodTemplate& t) {
  json j;
  j["protocol"] = to_string(t.protocol);
  j["payload"] = to_string(t.payload);
  if (t.port) {
    if (const auto* slot = std::get_if<std::uint32_t>(&*t.port)) {
      j["port"] = *slot;
    } else {
      j["port"] = to_string(std::get<PortState>(*t.port));
    }
  }
  if (t.rate) j["rate"] = *t.rate;
  j["duration_minutes"] = t.duration_minutes;
  return j;
}

json threshold_json(const std::optional<std::uint64_t>& t) {
  return t ? json(*t) : json("unbounded");
}

json overrides_json(const ProfileOverrides& o) {
  json j = json::object();
  if (o.e_base) j["e_base"] = {{"lo", o.e_base->lo}, {"hi", o.e_base->hi}};
  if (!o.e_max.empty()) {
    json m = json::object();
    for (const auto& [k, v] : o.e_max) m[key_of(k)] = v;
    j["e_max"] = m;
  }
  if (o.ar_threshold_np) j["ar_threshold_np"] = threshold_json(*o.ar_threshold_np);
  if (o.ar_threshold_hp) j["ar_threshold_hp"] = threshold_json(*o.ar_threshold_hp);
  if (!o.sd_ref_min.empty()) {
    json m = json::object();
    for (const auto& [k, v] : o.sd_ref_min) m[key_of(k)] = v ? json(*v) : json("none");
    j["sd_ref_min"] = m;
  }
  if (o.reception_linear_limit) j["reception_linear_limit"] = *o.reception_linear_limit;
  if (o.reception_gamma) j["reception_gamma"] = *o.reception_gamma;
  if (o.fap_connect_range) {
    j["fap_connect_range"] = {{"min", o.fap_connect_range->min}, {"max", o.fap_connect_range->max}};
  }
  if (o.fap_e_level) j["fap_e_level"] = *o.fap_e_level;
  if (o.fap_e_max) j["fap_e_max"] = *o.fap_e_max;
  if (o.fap_attach_success) j["fap_attach_success"] = *o.fap_attach_success;
  if (o.supply_voltage) j["supply_voltage"] = *o.supply_voltage;
  if (o.threshold_search) {
    j["threshold_search"] = {{"lo", o.threshold_search->lo}, {"hi", o.threshold_search->hi}};
  }
  return j;
}

void append(std::vector<std::string>& into, const std::vector<std::string>& more) {
  into.insert(into.end(), more.begin(), more.end());
}

}  // namespace

ScenarioConfig default_config(std::uint64_t seed) {
  const CampaignPlan plan = default_plan(seed);
  ScenarioConfig c;
  c.seed = seed;
  for (const auto& d : plan.devices) {
    c.devices.push_back(DeviceConfig{d.id, d.profile->name, {}, d.fap_injection_minutes});
  }
  c.ap = plan.ap;
  c.attack_matrix = plan.attack_matrix;
  c.ddos = plan.ddos;
  c.fap_enabled = plan.fap_enabled;
  c.signal_margin = plan.signal_margin;
  c.injection = plan.injection;
  c.baseline_minutes = plan.baseline_minutes;
  c.measure_tables = plan.measure_tables;
  return c;
}

std::shared_ptr<const DeviceProfile> resolve_profile(const DeviceConfig& device) {
  auto base = builtin_profile(device.profile);
  if (device.overrides.empty()) return base;
  DeviceProfile p = *base;
  const ProfileOverrides& o = device.overrides;
  if (o.e_base) p.e_base = *o.e_base;
  for (const auto& [k, v] : o.e_max) p.e_max[k] = v;
  if (o.ar_threshold_np) p.ar_threshold_np = *o.ar_threshold_np;
  if (o.ar_threshold_hp) p.ar_threshold_hp = *o.ar_threshold_hp;
  for (const auto& [k, v] : o.sd_ref_min) p.sd_ref_min[k] = v;
  if (o.reception_linear_limit) p.reception_linear_limit = *o.reception_linear_limit;
  if (o.reception_gamma) p.reception_gamma = *o.reception_gamma;
  if (o.fap_connect_range) p.fap_connect_range = *o.fap_connect_range;
  if (o.fap_e_level) p.fap_e_level = *o.fap_e_level;
  if (o.fap_e_max) p.fap_e_max = *o.fap_e_max;
  if (o.fap_attach_success) p.fap_attach_success = *o.fap_attach_success;
  if (o.supply_voltage) p.supply_voltage = *o.supply_voltage;
  if (o.threshold_search) p.threshold_search = *o.threshold_search;
  return std::make_shared<const DeviceProfile>(std::move(p));
}

CampaignPlan to_plan(const ScenarioConfig& c) {
  CampaignPlan plan;
  plan.seed = c.seed;
  for (const auto& d : c.devices) {
    plan.devices.push_back(DevicePlan{d.id, resolve_profile(d), d.fap_injection_minutes});
  }
  plan.ap = c.ap;
  plan.attack_matrix = c.attack_matrix;
  plan.ddos = c.ddos;
  plan.fap_enabled = c.fap_enabled;
  plan.signal_margin = c.signal_margin;
  plan.injection = c.injection;
  plan.baseline_minutes = c.baseline_minutes;
  plan.measure_tables = c.measure_tables;
  return plan;
}

ScenarioConfig parse_config(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError("parse error at line " + std::to_string(line_of(text, e.byte)) + ": " +
                          e.what());
  }

  Reader r;
  const ScenarioConfig defaults = default_config(0);
  ScenarioConfig c = defaults;
  c.devices.clear();
  if (!r.object(doc, "config")) throw ValidationError(r.problems);
  r.only(doc, "config",
         {"schema_version", "seed", "devices", "ap", "attacker", "fap", "campaign", "output"});

  if (doc.contains("schema_version") && r.read_number(doc["schema_version"], "config.schema_version", c.schema_version) &&
             c.schema_version != kSchemaVersion) {
    r.fail("config.schema_version",
           "unsupported version " + std::to_string(c.schema_version) + " (expected " +
               std::to_string(kSchemaVersion) + ")");
  }
  if (!doc.contains("seed")) {
    r.fail("config.seed", "missing seed (determinism requires one)");
  } else {
    r.read_number(doc["seed"], "config.seed", c.seed);
  }

  if (!doc.contains("devices") || !doc["devices"].is_array()) {
    r.fail("config.devices", "expected a list of devices");
  } else {
    std::size_t i = 0;
    for (const json& d : doc["devices"]) {
      const std::string path = "config.devices[" + std::to_string(i++) + "]";
      if (!r.object(d, path)) continue;
      r.only(d, path, {"id", "profile", "overrides", "fap_injection_minutes"});
      DeviceConfig dc;
      if (!d.contains("profile")) {
        r.fail(path + ".profile", "missing");
      } else if (r.string(d["profile"], path + ".profile", dc.profile)) {
        const auto names = builtin_profile_names();
        if (std::find(names.begin(), names.end(), dc.profile) == names.end()) {
          r.fail(path + ".profile", "unknown profile '" + dc.profile + "'");
        }
      }
      dc.id = dc.profile;
      if (d.contains("id")) r.string(d["id"], path + ".id", dc.id);
      if (d.contains("overrides")) dc.overrides = r.overrides(d["overrides"], path + ".overrides");
      dc.fap_injection_minutes = default_injection_minutes(dc.profile);
      r.number(d, path, "fap_injection_minutes", dc.fap_injection_minutes);
      c.devices.push_back(std::move(dc));
    }
  }

  if (doc.contains("ap") && r.object(doc["ap"], "config.ap")) {
    const json& ap = doc["ap"];
    r.only(ap, "config.ap", {"ssid", "bssid", "channel", "security", "signal_strength"});
    if (ap.contains("ssid")) r.string(ap["ssid"], "config.ap.ssid", c.ap.ssid);
    std::string bssid;
    if (ap.contains("bssid") && r.string(ap["bssid"], "config.ap.bssid", bssid)) {
      if (auto mac = MacAddress::parse(bssid)) {
        c.ap.bssid = *mac;
      } else {
        r.fail("config.ap.bssid", "expected six hex octets like a4:2b:b0:10:20:30");
      }
    }
    if (ap.contains("channel")) {
      if (ap["channel"].is_number_integer()) {
        c.ap.channel = ap["channel"].get<int>();
      } else {
        r.fail("config.ap.channel", "expected an integer");
      }
    }
    if (ap.contains("security")) r.string(ap["security"], "config.ap.security", c.ap.security_profile);
    r.number(ap, "config.ap", "signal_strength", c.ap.signal_strength);
  }

  if (doc.contains("attacker") && r.object(doc["attacker"], "config.attacker")) {
    const json& a = doc["attacker"];
    r.only(a, "config.attacker", {"attack_matrix", "ddos"});
    if (a.contains("attack_matrix")) {
      if (!a["attack_matrix"].is_array()) {
        r.fail("config.attacker.attack_matrix", "expected a list");
      } else {
        c.attack_matrix.clear();
        std::size_t i = 0;
        for (const json& t : a["attack_matrix"]) {
          c.attack_matrix.push_back(
              r.flood(t, "config.attacker.attack_matrix[" + std::to_string(i++) + "]"));
        }
      }
    }
    if (a.contains("ddos")) c.ddos = r.flood(a["ddos"], "config.attacker.ddos");
  }

  if (doc.contains("fap") && r.object(doc["fap"], "config.fap")) {
    const json& f = doc["fap"];
    r.only(f, "config.fap", {"enabled", "signal_margin", "injection"});
    r.boolean(f, "config.fap", "enabled", c.fap_enabled);
    r.number(f, "config.fap", "signal_margin", c.signal_margin);
    if (f.contains("injection") && r.object(f["injection"], "config.fap.injection")) {
      const json& inj = f["injection"];
      r.only(inj, "config.fap.injection", {"mix", "payload", "rate"});
      if (inj.contains("mix")) {
        if (!inj["mix"].is_array()) {
          r.fail("config.fap.injection.mix", "expected a list of protocols");
        } else {
          c.injection.mix.clear();
          std::size_t i = 0;
          for (const json& p : inj["mix"]) {
            Protocol proto{};
            r.protocol(p, "config.fap.injection.mix[" + std::to_string(i++) + "]", proto);
            c.injection.mix.push_back(proto);
          }
        }
      }
      if (inj.contains("payload")) r.payload(inj["payload"], "config.fap.injection.payload", c.injection.payload);
      if (inj.contains("rate")) {
        std::uint64_t rate = 0;
        if (r.read_number(inj["rate"], "config.fap.injection.rate", rate)) c.injection.rate = rate;
      }
    }
  }

  if (doc.contains("campaign") && r.object(doc["campaign"], "config.campaign")) {
    const json& cp = doc["campaign"];
    r.only(cp, "config.campaign", {"baseline_minutes", "measure_tables"});
    r.number(cp, "config.campaign", "baseline_minutes", c.baseline_minutes);
    r.boolean(cp, "config.campaign", "measure_tables", c.measure_tables);
  }

  if (doc.contains("output") && r.object(doc["output"], "config.output")) {
    const json& o = doc["output"];
    r.only(o, "config.output", {"directory", "formats"});
    std::string dir;
    if (o.contains("directory") && r.string(o["directory"], "config.output.directory", dir)) {
      c.output_directory = dir;
    }
    if (o.contains("formats")) {
      if (!o["formats"].is_array()) {
        r.fail("config.output.formats", "expected a list");
      } else {
        c.formats.clear();
        for (const json& f : o["formats"]) {
          std::string s;
          if (!r.string(f, "config.output.formats", s)) continue;
          if (s == "csv") {
            c.formats.insert(OutputFormat::Csv);
          } else if (s == "json") {
            c.formats.insert(OutputFormat::Json);
          } else {
            r.fail("config.output.formats", "unknown format '" + s + "' (csv, json)");
          }
        }
      }
    }
  }

  // Fields that failed to read keep their defaults, so semantic checks still make sense.
  {
    std::vector<std::string> semantic;
    CampaignPlan plan;
    try {
      plan = to_plan(c);
    } catch (const Error& e) {
      semantic.push_back(e.what());
    }
    if (semantic.empty()) append(semantic, validate(plan));
    for (auto& p : semantic) r.problems.push_back("config: " + p);
  }
  if (!r.problems.empty()) throw ValidationError(r.problems);
  return c;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read config '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string write_config(const ScenarioConfig& c) {
  json doc;
  doc["schema_version"] = c.schema_version;
  doc["seed"] = c.seed;
  json devices = json::array();
  for (const auto& d : c.devices) {
    json j;
    j["id"] = d.id;
    j["profile"] = d.profile;
    j["fap_injection_minutes"] = d.fap_injection_minutes;
    if (!d.overrides.empty()) j["overrides"] = overrides_json(d.overrides);
    devices.push_back(j);
  }
  doc["devices"] = devices;
  doc["ap"] = {{"ssid", c.ap.ssid},
               {"bssid", c.ap.bssid.to_string()},
               {"channel", c.ap.channel},
               {"security", c.ap.security_profile},
               {"signal_strength", c.ap.signal_strength}};
  json matrix = json::array();
  for (const auto& t : c.attack_matrix) matrix.push_back(flood_json(t));
  doc["attacker"] = {{"attack_matrix", matrix}, {"ddos", flood_json(c.ddos)}};
  json mix = json::array();
  for (Protocol p : c.injection.mix) mix.push_back(to_string(p));
  json injection = {{"mix", mix}, {"payload", to_string(c.injection.payload)}};
  if (c.injection.rate) injection["rate"] = *c.injection.rate;
  doc["fap"] = {{"enabled", c.fap_enabled}, {"signal_margin", c.signal_margin}, {"injection", injection}};
  doc["campaign"] = {{"baseline_minutes", c.baseline_minutes}, {"measure_tables", c.measure_tables}};
  json output = json::object();
  if (c.output_directory) output["directory"] = *c.output_directory;
  json formats = json::array();
  for (OutputFormat f : c.formats) formats.push_back(f == OutputFormat::Csv ? "csv" : "json");
  output["formats"] = formats;
  doc["output"] = output;
  return doc.dump(2) + "\n";
}

}  // namespace ecsim
