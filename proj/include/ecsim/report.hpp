#pragma once

// Persisted outputs: the JSON campaign report, per-phase CSV traces, and the
// plot-ready figure tables. Every number is written with 6 significant digits.

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "ecsim/campaign.hpp"

namespace ecsim {

// Locale-independent, 6 significant digits, shortest form.
std::string format_number(double v);
// Rounds to 6 significant digits.
double round6(double v);

inline constexpr std::string_view kTraceHeader = "t,joules,received_pps,associated";

void write_trace_csv(std::ostream& out, const std::vector<TraceRow>& rows);

// Artifact file name of each phase trace, relative to the output directory.
std::string trace_file(const BaselineStats& b);
std::string trace_file(const AttackRecord& a, std::size_t index);
std::string trace_file(const FapRecord& f);

std::string report_json(const CampaignReport& report);

enum class FigureId { Fig5, Fig6, Fig7, Fig8, Fig9, Table1, Table2 };
std::string_view to_string(FigureId id);
std::optional<FigureId> parse_figure_id(std::string_view text);
std::vector<FigureId> all_figures();

struct FigureData {
  FigureId id = FigureId::Fig5;
  std::string comment;               // written as the leading '#' line
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
};

// Throws Error naming the absent phase when the report lacks what the figure needs.
FigureData figure_data(const CampaignReport& report, FigureId id);
void write_figure_csv(std::ostream& out, const FigureData& figure);

// Writes report.json, traces/ and figures/ under `dir` per the requested formats.
// Figures whose phases did not run are skipped; their names are returned.
std::vector<std::string> write_campaign_artifacts(const CampaignReport& report,
                                                  const std::filesystem::path& dir, bool csv,
                                                  bool json);

}  // namespace ecsim
