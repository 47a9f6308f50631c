#include <gtest/gtest.h>

#include <json.hpp>
#include <sstream>

#include "ecsim/config.hpp"
#include "ecsim/report.hpp"
#include "strict_csv.hpp"

using namespace ecsim;
using nlohmann::json;

namespace {

bool contains(const std::string& text, const std::string& part) {
  return text.find(part) != std::string::npos;
}

std::string validation_message(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ValidationError& e) {
    return e.what();
  }
  return {};
}

const CampaignReport& seed1_report() {
  static const CampaignReport r = [] {
    ScenarioConfig c = default_config(1);
    c.measure_tables = true;
    return run_full_campaign(to_plan(c));
  }();
  return r;
}

}  // namespace

TEST(Config, DefaultRoundTrips) {
  const ScenarioConfig c = default_config(4);
  EXPECT_EQ(parse_config(write_config(c)), c);
}

TEST(Config, DefaultMatchesDefaultPlan) {
  const CampaignPlan a = to_plan(default_config(2));
  const CampaignPlan b = default_plan(2);
  EXPECT_EQ(a.attack_matrix, b.attack_matrix);
  EXPECT_EQ(a.ddos, b.ddos);
  EXPECT_EQ(a.seed, b.seed);
  ASSERT_EQ(a.devices.size(), b.devices.size());
  for (std::size_t i = 0; i < a.devices.size(); ++i) {
    EXPECT_EQ(a.devices[i].id, b.devices[i].id);
    EXPECT_EQ(a.devices[i].fap_injection_minutes, b.devices[i].fap_injection_minutes);
  }
}

TEST(Config, MinimalArduinoFillsDefaults) {
  const auto c = parse_config(R"({"seed": 11, "devices": [{"id": "uno", "profile": "arduino"}]})");
  EXPECT_EQ(c.seed, 11u);
  ASSERT_EQ(c.devices.size(), 1u);
  EXPECT_EQ(c.devices[0].profile, "arduino");
  EXPECT_TRUE(c.devices[0].overrides.empty());
  EXPECT_EQ(c.baseline_minutes, 30.0);
  EXPECT_TRUE(c.fap_enabled);
  EXPECT_EQ(c.ap, default_access_point());
  EXPECT_EQ(c.formats.size(), 2u);
}

TEST(Config, SeedRequired) {
  const auto msg = validation_message(R"({"devices": [{"id": "uno", "profile": "arduino"}]})");
  EXPECT_TRUE(contains(msg, "missing seed")) << msg;
}

TEST(Config, ShortBaselineViolation) {
  const auto msg = validation_message(
      R"({"seed": 1, "devices": [{"id": "uno", "profile": "arduino"}], "campaign": {"baseline_minutes": 10}})");
  EXPECT_TRUE(contains(msg, "baseline")) << msg;
  EXPECT_TRUE(contains(msg, "30")) << msg;
}

TEST(Config, EveryViolationListed) {
  const auto msg = validation_message(R"({"devices": [], "surprise": 1})");
  EXPECT_TRUE(contains(msg, "missing seed")) << msg;
  EXPECT_TRUE(contains(msg, "surprise")) << msg;
  EXPECT_TRUE(contains(msg, "device")) << msg;
}

TEST(Config, ParseErrorNamesLine) {
  const auto msg = validation_message("{\n  \"seed\": 1,\n  \"devices\": [\n    {\"id\": }\n  ]\n}\n");
  EXPECT_TRUE(contains(msg, "parse error at line 4")) << msg;
}

TEST(Config, UnknownProfileRejected) {
  const auto msg = validation_message(R"({"seed": 1, "devices": [{"id": "x", "profile": "toaster"}]})");
  EXPECT_TRUE(contains(msg, "toaster")) << msg;
}

TEST(Config, OverridesApplied) {
  const auto c = parse_config(R"({"seed": 1, "devices": [{"id": "uno", "profile": "arduino",
      "overrides": {"ar_threshold_np": "unbounded", "ar_threshold_hp": "unbounded",
      "fap_e_max": 2.5}}]})");
  const auto p = resolve_profile(c.devices[0]);
  EXPECT_FALSE(p->ar_threshold(PayloadClass::NoPayload));
  EXPECT_DOUBLE_EQ(p->fap_e_max, 2.5);
  EXPECT_EQ(parse_config(write_config(c)), c);
}

TEST(Config, MissingFileIsValidationError) {
  EXPECT_THROW(load_config("/nonexistent/scenario.json"), ValidationError);
}

TEST(Numbers, SixSignificantDigits) {
  EXPECT_EQ(format_number(7.583333333), "7.58333");
  EXPECT_EQ(format_number(14544.0), "14544");
  EXPECT_EQ(format_number(0.0), "0");
  EXPECT_DOUBLE_EQ(round6(1.4149234567), 1.41492);
}

TEST(TraceCsv, ExactHeaderAndStrictRows) {
  const auto& r = seed1_report();
  std::ostringstream out;
  write_trace_csv(out, r.attacks.front().trace);
  const auto table = strict_csv::parse(out.str());
  EXPECT_EQ(table.header, (std::vector<std::string>{"t", "joules", "received_pps", "associated"}));
  EXPECT_EQ(table.rows.size(), r.attacks.front().trace.size());
  for (const auto& row : table.rows) {
    EXPECT_TRUE(strict_csv::is_number(row[0]));
    EXPECT_TRUE(strict_csv::is_number(row[1]));
    EXPECT_TRUE(row[3] == "0" || row[3] == "1");
  }
}

TEST(ReportJson, StableKeysAndStrictParse) {
  const auto doc = json::parse(report_json(seed1_report()));
  for (const char* key : {"seed", "completed", "baseline", "attacks", "fap", "attribution"}) {
    EXPECT_TRUE(doc.contains(key)) << key;
  }
  EXPECT_TRUE(doc["completed"].get<bool>());
  EXPECT_EQ(doc["attacks"].size(), seed1_report().attacks.size());
  EXPECT_TRUE(doc["attribution"]["overall"].is_object());
}

TEST(Figures, AllSchemasConsistent) {
  for (FigureId id : all_figures()) {
    const auto fig = figure_data(seed1_report(), id);
    std::ostringstream out;
    write_figure_csv(out, fig);
    const auto table = strict_csv::parse(out.str(), true);
    EXPECT_EQ(table.header, fig.columns) << to_string(id);
    EXPECT_FALSE(table.rows.empty()) << to_string(id);
    EXPECT_EQ(parse_figure_id(to_string(id)), id);
  }
}

TEST(Figures, TableOneCounts) {
  const auto fig = figure_data(seed1_report(), FigureId::Table1);
  std::vector<std::string> lines;
  for (const auto& row : fig.rows) {
    std::string s;
    for (const auto& cell : row) s += cell + ",";
    lines.push_back(s);
  }
  const std::vector<std::string> expected{
      "raspberry_pi,tcp,3,0,65389,998,66390,", "raspberry_pi,udp,4,0,0,700,704,",
      "arduino,tcp,1,0,22,1000,1023,", "arduino,udp,0,0,0,1000,1000,"};
  EXPECT_EQ(lines, expected);
}

TEST(Figures, FigNineSplit) {
  const auto fig = figure_data(seed1_report(), FigureId::Fig9);
  ASSERT_EQ(fig.rows.size(), 2u);
  EXPECT_EQ(fig.rows[0][0], "ec_ddos");
  EXPECT_EQ(fig.rows[1][0], "fap");
  EXPECT_NEAR(std::stod(fig.rows[0][1]), 0.55, 0.05);
}

TEST(Figures, MissingPhaseNamed) {
  ScenarioConfig c = default_config(1);
  c.fap_enabled = false;
  c.measure_tables = false;
  const auto r = run_full_campaign(to_plan(c));
  try {
    figure_data(r, FigureId::Fig8);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_TRUE(contains(e.what(), "did not run")) << e.what();
  }
  EXPECT_THROW(figure_data(r, FigureId::Table2), Error);
  EXPECT_NO_THROW(figure_data(r, FigureId::Fig5));
}

TEST(Artifacts, EveryFileParsesStrictly) {
  const auto dir = std::filesystem::temp_directory_path() / "ecsim_artifacts_test";
  std::filesystem::remove_all(dir);
  const auto skipped = write_campaign_artifacts(seed1_report(), dir, true, true);
  EXPECT_TRUE(skipped.empty());
  std::size_t csv = 0;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const auto text = strict_csv::read_file(entry.path());
    if (entry.path().extension() == ".json") {
      EXPECT_NO_THROW(static_cast<void>(json::parse(text))) << entry.path();
    } else if (entry.path().extension() == ".csv") {
      EXPECT_NO_THROW(strict_csv::parse(text, entry.path().parent_path().filename() == "figures"))
          << entry.path();
      ++csv;
    }
  }
  EXPECT_GT(csv, 10u);
  const auto doc = json::parse(strict_csv::read_file(dir / "report.json"));
  for (const auto& a : doc["attacks"]) {
    EXPECT_TRUE(std::filesystem::exists(dir / a["trace"].get<std::string>()));
  }
  std::filesystem::remove_all(dir);
}

TEST(Config, ShippedDefaultMatchesBuiltIn) {
  EXPECT_EQ(load_config(std::filesystem::path(ECSIM_SOURCE_DIR) / "configs" / "default.json"), default_config(1));
}
