#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "aeb/aggregation.hpp"
#include "aeb/scoring.hpp"

namespace aeb {

enum class ReportFormat { Csv, Markdown, Html };

std::string_view to_string(ReportFormat format);
std::string_view file_extension(ReportFormat format);
ReportFormat parse_report_format(std::string_view name);

enum class ScoreKind { FS, MPS };

// Rounds to two decimals and drops trailing zeros: 0.9, 0.07, 0, 0.71.
std::string format_decimal2(double value);
// "mean±std", or "NA" for a missing value.
std::string format_score_cell(const std::optional<ScoreValue>& value);
// "12.86%", "-100.00%", "0.00%", "inf".
std::string format_percent_cell(const RelCell& cell);

struct ParsedScoreCell {
  bool not_applicable = false;
  double mean = 0.0;
  double std = 0.0;
};

// Inverses of the formatters. Throw SchemaError on malformed text.
ParsedScoreCell parse_score_cell(std::string_view text);
RelCell parse_percent_cell(std::string_view text);

// Scenario-level table: rows are scenario codes in protocol order, columns
// vehicles in natural order.
struct ScenarioTable {
  std::string title;  // e.g. FREQ_SCORE_MEAN_DAY_EU
  std::vector<std::string> vehicles;
  std::vector<std::string> scenarios;
  std::vector<std::optional<ScoreValue>> cells;  // row-major by scenario
};

std::string scenario_table_title(ScoreKind kind, Light light, std::string_view region);

ScenarioTable build_scenario_table(std::span<const ScenarioScore> scores,
                                   const ProtocolDefinition& protocol, ScoreKind kind,
                                   Light light, std::string_view region);

std::string vehicle_label(std::string_view id);

std::string render(const ScenarioTable& table, ReportFormat format);

std::string matrix_title(const RelativityMatrix& matrix);
std::string render(const RelativityMatrix& matrix, ReportFormat format);

// Background colour for a relative cell on a red-to-green scale centred on
// 0% and saturating at +-100%.
std::string cell_colour(const RelCell& cell);

struct ParsedMatrix {
  std::vector<std::string> labels;
  std::vector<RelCell> cells;  // row-major
};

ParsedMatrix parse_matrix_csv(std::string_view csv);

}  // namespace aeb
