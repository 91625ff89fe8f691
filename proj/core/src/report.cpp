#include "aeb/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "aeb/error.hpp"

namespace aeb {

namespace {

constexpr std::string_view kPlusMinus = "\xC2\xB1";  // U+00B1

std::string html_escape(std::string_view text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '&':
        out += "&amp;";
        break;
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      case '"':
        out += "&quot;";
        break;
      default:
        out.push_back(c);
    }
  }
  return out;
}

std::string csv_field(std::string_view text) {
  if (text.find_first_of(",\"\n") == std::string_view::npos) return std::string(text);
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  return out + "\"";
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cell.push_back('"');
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cell.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      cells.push_back(std::move(cell));
      cell.clear();
    } else {
      cell.push_back(c);
    }
  }
  cells.push_back(std::move(cell));
  return cells;
}

double parse_double(std::string_view text, std::string_view what) {
  const std::string s(text);
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw SchemaError(std::string(what) + ": '" + s + "' is not a number");
  }
}

// Rows of label + cells rendered to the requested format.
std::string render_grid(const std::string& title, const std::string& corner,
                        const std::vector<std::string>& columns,
                        const std::vector<std::string>& row_labels,
                        const std::vector<std::string>& cells,
                        const std::vector<std::string>& colours, ReportFormat format) {
  const std::size_t n_cols = columns.size();
  std::ostringstream out;
  switch (format) {
    case ReportFormat::Csv:
      out << csv_field(corner);
      for (const auto& c : columns) out << ',' << csv_field(c);
      out << '\n';
      for (std::size_t r = 0; r < row_labels.size(); ++r) {
        out << csv_field(row_labels[r]);
        for (std::size_t c = 0; c < n_cols; ++c) out << ',' << csv_field(cells[r * n_cols + c]);
        out << '\n';
      }
      break;
    case ReportFormat::Markdown:
      out << "## " << title << "\n\n| " << corner << " |";
      for (const auto& c : columns) out << ' ' << c << " |";
      out << "\n|---|";
      for (std::size_t c = 0; c < n_cols; ++c) out << "---:|";
      out << '\n';
      for (std::size_t r = 0; r < row_labels.size(); ++r) {
        out << "| " << row_labels[r] << " |";
        for (std::size_t c = 0; c < n_cols; ++c) out << ' ' << cells[r * n_cols + c] << " |";
        out << '\n';
      }
      break;
    case ReportFormat::Html:
      out << "<!DOCTYPE html>\n<html>\n<head>\n<meta charset=\"utf-8\">\n<title>"
          << html_escape(title) << "</title>\n"
          << "<style>table{border-collapse:collapse;font-family:sans-serif;font-size:12px}"
             "td,th{border:1px solid #999;padding:2px 6px;text-align:right}"
             "th{background:#eee}</style>\n</head>\n<body>\n<h2>"
          << html_escape(title) << "</h2>\n<table>\n<tr><th>" << html_escape(corner) << "</th>";
      for (const auto& c : columns) out << "<th>" << html_escape(c) << "</th>";
      out << "</tr>\n";
      for (std::size_t r = 0; r < row_labels.size(); ++r) {
        out << "<tr><th>" << html_escape(row_labels[r]) << "</th>";
        for (std::size_t c = 0; c < n_cols; ++c) {
          const auto& colour = colours.empty() ? std::string() : colours[r * n_cols + c];
          out << "<td";
          if (!colour.empty()) out << " style=\"background:" << colour << "\"";
          out << '>' << html_escape(cells[r * n_cols + c]) << "</td>";
        }
        out << "</tr>\n";
      }
      out << "</table>\n</body>\n</html>\n";
      break;
  }
  return out.str();
}

std::string group_title(ScenarioGroup group) {
  switch (group) {
    case ScenarioGroup::C2C:
      return "Car-to-Car";
    case ScenarioGroup::C2VRU:
      return "Car-to-VRU";
    case ScenarioGroup::C2O:
      return "Car-to-Object";
  }
  return "?";
}

}  // namespace

std::string_view to_string(ReportFormat format) {
  switch (format) {
    case ReportFormat::Csv:
      return "csv";
    case ReportFormat::Markdown:
      return "markdown";
    case ReportFormat::Html:
      return "html";
  }
  return "?";
}

std::string_view file_extension(ReportFormat format) {
  switch (format) {
    case ReportFormat::Csv:
      return "csv";
    case ReportFormat::Markdown:
      return "md";
    case ReportFormat::Html:
      return "html";
  }
  return "txt";
}

ReportFormat parse_report_format(std::string_view name) {
  if (name == "csv") return ReportFormat::Csv;
  if (name == "markdown" || name == "md") return ReportFormat::Markdown;
  if (name == "html") return ReportFormat::Html;
  throw UnknownKeyError("unknown report format '" + std::string(name) + "'");
}

std::string format_decimal2(double value) {
  char buffer[64];
  std::snprintf(buffer, sizeof buffer, "%.2f", value);
  std::string text = buffer;
  if (text.find('.') != std::string::npos) {
    while (text.back() == '0') text.pop_back();
    if (text.back() == '.') text.pop_back();
  }
  if (text == "-0") text = "0";
  return text;
}

std::string format_score_cell(const std::optional<ScoreValue>& value) {
  if (!value) return "NA";
  return format_decimal2(value->mean) + std::string(kPlusMinus) + format_decimal2(value->std);
}

std::string format_percent_cell(const RelCell& cell) {
  if (!cell.finite()) return "inf";
  char buffer[64];
  std::snprintf(buffer, sizeof buffer, "%.2f%%", cell.percent());
  std::string text = buffer;
  if (text == "-0.00%") text = "0.00%";
  return text;
}

ParsedScoreCell parse_score_cell(std::string_view text) {
  if (text == "NA") return {true, 0.0, 0.0};
  const auto pos = text.find(kPlusMinus);
  if (pos == std::string_view::npos) {
    throw SchemaError("score cell '" + std::string(text) + "' lacks a \xC2\xB1 separator");
  }
  return {false, parse_double(text.substr(0, pos), "score cell mean"),
          parse_double(text.substr(pos + kPlusMinus.size()), "score cell std")};
}

RelCell parse_percent_cell(std::string_view text) {
  if (text == "inf") return {RelCell::Kind::PosInf, 0.0};
  if (text.empty() || text.back() != '%') {
    throw SchemaError("percent cell '" + std::string(text) + "' must end in %");
  }
  return {RelCell::Kind::Finite,
          parse_double(text.substr(0, text.size() - 1), "percent cell") / 100.0};
}

std::string scenario_table_title(ScoreKind kind, Light light, std::string_view region) {
  std::string title = kind == ScoreKind::FS ? "FREQ_SCORE_MEAN_" : "MIT_POW_";
  title += light == Light::Day ? "DAY_" : "NIGHT_";
  for (char c : region) title.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  return title;
}

std::string vehicle_label(std::string_view id) { return "ID " + std::string(id); }

ScenarioTable build_scenario_table(std::span<const ScenarioScore> scores,
                                   const ProtocolDefinition& protocol, ScoreKind kind,
                                   Light light, std::string_view region) {
  ScenarioTable table;
  table.title = scenario_table_title(kind, light, region);
  for (const auto& s : scores) {
    if (std::find(table.vehicles.begin(), table.vehicles.end(), s.vehicle) ==
        table.vehicles.end()) {
      table.vehicles.push_back(s.vehicle);
    }
  }
  std::sort(table.vehicles.begin(), table.vehicles.end(),
            [](const std::string& a, const std::string& b) { return natural_less(a, b); });
  for (const auto& spec : protocol.scenarios()) table.scenarios.push_back(spec.code);

  table.cells.resize(table.scenarios.size() * table.vehicles.size());
  for (const auto& s : scores) {
    if (s.light != light || s.not_applicable) continue;
    const auto row = std::find(table.scenarios.begin(), table.scenarios.end(), s.scenario) -
                     table.scenarios.begin();
    const auto col = std::find(table.vehicles.begin(), table.vehicles.end(), s.vehicle) -
                     table.vehicles.begin();
    if (static_cast<std::size_t>(row) == table.scenarios.size()) continue;
    table.cells[row * table.vehicles.size() + col] = kind == ScoreKind::FS ? s.fs : s.mps;
  }
  return table;
}

std::string render(const ScenarioTable& table, ReportFormat format) {
  std::vector<std::string> columns;
  for (const auto& v : table.vehicles) columns.push_back(vehicle_label(v));
  std::vector<std::string> cells;
  cells.reserve(table.cells.size());
  for (const auto& c : table.cells) cells.push_back(format_score_cell(c));
  return render_grid(table.title, "MODEL", columns, table.scenarios, cells, {}, format);
}

std::string matrix_title(const RelativityMatrix& matrix) {
  return std::string(matrix.metric == Metric::Freq ? "Relative Frequency Scores, "
                                                   : "Relative Mitigation Power Scores, ") +
         group_title(matrix.group) + " (" + matrix.region + ")";
}

std::string cell_colour(const RelCell& cell) {
  double t = cell.finite() ? std::clamp(cell.ratio, -1.0, 1.0) : 1.0;
  int r = 255, g = 255, b = 255;
  if (t > 0) {
    r = b = static_cast<int>(std::lround(255.0 * (1.0 - t)));
  } else if (t < 0) {
    g = b = static_cast<int>(std::lround(255.0 * (1.0 + t)));
  }
  char buffer[16];
  std::snprintf(buffer, sizeof buffer, "#%02x%02x%02x", r, g, b);
  return buffer;
}

std::string render(const RelativityMatrix& matrix, ReportFormat format) {
  std::vector<std::string> labels;
  for (const auto& v : matrix.order) labels.push_back(vehicle_label(v));
  std::vector<std::string> cells, colours;
  for (const auto& c : matrix.cells) {
    cells.push_back(format_percent_cell(c));
    colours.push_back(cell_colour(c));
  }
  return render_grid(matrix_title(matrix), "", labels, labels, cells, colours, format);
}

ParsedMatrix parse_matrix_csv(std::string_view csv) {
  ParsedMatrix parsed;
  std::istringstream in{std::string(csv)};
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    if (header) {
      parsed.labels.assign(fields.begin() + 1, fields.end());
      header = false;
      continue;
    }
    if (fields.size() != parsed.labels.size() + 1) {
      throw SchemaError("matrix row '" + fields.front() + "' has the wrong number of cells");
    }
    for (std::size_t i = 1; i < fields.size(); ++i) {
      parsed.cells.push_back(parse_percent_cell(fields[i]));
    }
  }
  if (parsed.cells.size() != parsed.labels.size() * parsed.labels.size()) {
    throw SchemaError("matrix is not square");
  }
  return parsed;
}

}  // namespace aeb
