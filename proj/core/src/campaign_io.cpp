#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "aeb/campaign.hpp"
#include "aeb/error.hpp"
#include "json.hpp"

namespace aeb {

namespace {

using Json = nlohmann::json;
using OrderedJson = nlohmann::ordered_json;

constexpr const char* kColumns[] = {"vehicle",      "scenario",     "light",     "vut_speed",
                                    "tg_speed",     "overlap",      "outcome",   "impact_speed",
                                    "intervention", "projected",    "pre_test"};

[[noreturn]] void line_fail(std::size_t line, const std::string& what) {
  throw SchemaError("log line " + std::to_string(line) + ": " + what);
}

// Field values as loosely typed cells; JSON-lines and CSV both reduce to this.
struct RawRecord {
  std::map<std::string, std::string> text;   // CSV cells / JSON strings
  std::map<std::string, Json> json;          // JSON values (JSON-lines only)
};

int integral(double value, std::size_t line, const std::string& field) {
  if (!std::isfinite(value) || std::floor(value) != value) {
    line_fail(line, field + ": expected an integral km/h or percent value");
  }
  return static_cast<int>(value);
}

double parse_number(const std::string& cell, std::size_t line, const std::string& field) {
  try {
    std::size_t used = 0;
    double v = std::stod(cell, &used);
    if (used != cell.size()) throw std::invalid_argument(cell);
    return v;
  } catch (const std::exception&) {
    line_fail(line, field + ": '" + cell + "' is not a number");
  }
}

bool parse_bool(const std::string& cell, std::size_t line, const std::string& field) {
  if (cell == "true" || cell == "1") return true;
  if (cell == "false" || cell == "0") return false;
  line_fail(line, field + ": '" + cell + "' is not a boolean");
}

class FieldReader {
 public:
  FieldReader(const RawRecord& raw, std::size_t line) : raw_(raw), line_(line) {}

  bool present(const std::string& field) const {
    if (auto it = raw_.json.find(field); it != raw_.json.end()) return !it->second.is_null();
    if (auto it = raw_.text.find(field); it != raw_.text.end()) return !it->second.empty();
    return false;
  }

  std::string string(const std::string& field) const {
    if (!present(field)) line_fail(line_, field + ": missing required field");
    if (auto it = raw_.json.find(field); it != raw_.json.end()) {
      if (!it->second.is_string()) line_fail(line_, field + ": expected a string");
      return it->second.get<std::string>();
    }
    return raw_.text.at(field);
  }

  double number(const std::string& field) const {
    if (!present(field)) line_fail(line_, field + ": missing required field");
    if (auto it = raw_.json.find(field); it != raw_.json.end()) {
      if (!it->second.is_number()) line_fail(line_, field + ": expected a number");
      return it->second.get<double>();
    }
    return parse_number(raw_.text.at(field), line_, field);
  }

  int integer(const std::string& field) const { return integral(number(field), line_, field); }

  bool boolean(const std::string& field) const {
    if (!present(field)) return false;
    if (auto it = raw_.json.find(field); it != raw_.json.end()) {
      if (!it->second.is_boolean()) line_fail(line_, field + ": expected a boolean");
      return it->second.get<bool>();
    }
    return parse_bool(raw_.text.at(field), line_, field);
  }

 private:
  const RawRecord& raw_;
  std::size_t line_;
};

TestRecord to_record(const RawRecord& raw, std::size_t line, const ProtocolDefinition& protocol) {
  FieldReader f(raw, line);
  TestRecord record;
  record.vehicle = f.string("vehicle");
  if (record.vehicle.empty()) line_fail(line, "vehicle: must not be empty");

  record.config.scenario = f.string("scenario");
  const auto* spec = protocol.find(record.config.scenario);
  if (spec == nullptr) line_fail(line, "scenario: unknown scenario '" + record.config.scenario + "'");
  record.config.group = spec->group;
  try {
    record.config.light = parse_light(f.string("light"));
    record.outcome.kind = parse_outcome_kind(f.string("outcome"));
    if (f.present("pre_test")) record.pre_test = parse_pre_test(f.string("pre_test"));
  } catch (const UnknownKeyError& e) {
    line_fail(line, e.what());
  }
  record.config.vut_speed = f.integer("vut_speed");
  if (f.present("tg_speed")) record.config.tg_speed = f.integer("tg_speed");
  record.config.overlap = f.integer("overlap");
  if (f.present("impact_speed")) record.outcome.impact_speed = f.number("impact_speed");
  record.outcome.intervention = f.boolean("intervention");
  record.outcome.projected = f.boolean("projected");
  return record;
}

std::vector<std::string> split_csv(const std::string& line, std::size_t line_no) {
  std::vector<std::string> cells;
  std::string cell;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cell.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
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
  if (quoted) line_fail(line_no, "unterminated quoted field");
  cells.push_back(std::move(cell));
  return cells;
}

std::string csv_escape(const std::string& value) {
  if (value.find_first_of(",\"\n") == std::string::npos) return value;
  std::string out = "\"";
  for (char c : value) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string format_speed(double v) {
  // Shortest representation that round-trips, matching the JSON writer.
  return OrderedJson(v).dump();
}

std::string strip(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

std::vector<TestRecord> parse_log_records(std::string_view text,
                                          const ProtocolDefinition& protocol) {
  std::vector<TestRecord> records;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  std::optional<LogFormat> format;
  std::vector<std::string> header;

  while (std::getline(in, line)) {
    ++line_no;
    line = strip(line);
    if (line.empty()) continue;
    if (!format) {
      format = line.front() == '{' ? LogFormat::JsonLines : LogFormat::Csv;
      if (*format == LogFormat::Csv) {
        header = split_csv(line, line_no);
        for (auto& h : header) h = strip(h);
        for (const char* required : {"vehicle", "scenario", "light", "vut_speed", "overlap",
                                     "outcome"}) {
          if (std::find(header.begin(), header.end(), required) == header.end()) {
            line_fail(line_no, std::string("CSV header lacks column '") + required + "'");
          }
        }
        continue;
      }
    }

    RawRecord raw;
    if (*format == LogFormat::JsonLines) {
      Json node;
      try {
        node = Json::parse(line);
      } catch (const Json::parse_error& e) {
        line_fail(line_no, std::string("malformed JSON: ") + e.what());
      }
      if (!node.is_object()) line_fail(line_no, "expected a JSON object");
      for (auto& [key, value] : node.items()) raw.json[key] = value;
    } else {
      auto cells = split_csv(line, line_no);
      if (cells.size() != header.size()) {
        line_fail(line_no, "expected " + std::to_string(header.size()) + " columns, found " +
                               std::to_string(cells.size()));
      }
      for (std::size_t i = 0; i < cells.size(); ++i) raw.text[header[i]] = strip(cells[i]);
    }
    records.push_back(to_record(raw, line_no, protocol));
  }
  return records;
}

CampaignLog load_log(const std::string& path, std::shared_ptr<const ProtocolDefinition> protocol) {
  CampaignLog log;
  log.records = parse_log_records(read_text_file(path), *protocol);
  log.protocol = std::move(protocol);
  return log;
}

std::string serialize_log_records(const std::vector<TestRecord>& records, LogFormat format) {
  std::ostringstream out;
  if (format == LogFormat::JsonLines) {
    for (const auto& r : records) {
      OrderedJson node;
      node["vehicle"] = r.vehicle;
      node["scenario"] = r.config.scenario;
      node["light"] = std::string(to_string(r.config.light));
      node["vut_speed"] = r.config.vut_speed;
      if (r.config.tg_speed) {
        node["tg_speed"] = *r.config.tg_speed;
      } else {
        node["tg_speed"] = nullptr;
      }
      node["overlap"] = r.config.overlap;
      node["outcome"] = std::string(to_string(r.outcome.kind));
      if (r.outcome.impact_speed) node["impact_speed"] = *r.outcome.impact_speed;
      node["intervention"] = r.outcome.intervention;
      node["projected"] = r.outcome.projected;
      if (r.pre_test) node["pre_test"] = std::string(to_string(*r.pre_test));
      out << node.dump() << "\n";
    }
    return out.str();
  }

  for (std::size_t i = 0; i < std::size(kColumns); ++i) out << (i ? "," : "") << kColumns[i];
  out << "\n";
  for (const auto& r : records) {
    out << csv_escape(r.vehicle) << ',' << csv_escape(r.config.scenario) << ','
        << to_string(r.config.light) << ',' << r.config.vut_speed << ',';
    if (r.config.tg_speed) out << *r.config.tg_speed;
    out << ',' << r.config.overlap << ',' << to_string(r.outcome.kind) << ',';
    if (r.outcome.impact_speed) out << format_speed(*r.outcome.impact_speed);
    out << ',' << (r.outcome.intervention ? "true" : "false") << ','
        << (r.outcome.projected ? "true" : "false") << ',';
    if (r.pre_test) out << to_string(*r.pre_test);
    out << "\n";
  }
  return out.str();
}

std::vector<VehicleProfile> parse_vehicles(std::string_view json_text) {
  Json doc;
  try {
    doc = Json::parse(json_text);
  } catch (const Json::parse_error& e) {
    throw SchemaError(std::string("vehicles: malformed JSON: ") + e.what());
  }
  const Json* list = &doc;
  if (doc.is_object()) {
    auto it = doc.find("vehicles");
    if (it == doc.end()) throw SchemaError("vehicles: object has no 'vehicles' array");
    list = &*it;
  }
  if (!list->is_array()) throw SchemaError("vehicles: expected an array");

  std::vector<VehicleProfile> vehicles;
  std::set<std::string> ids;
  for (std::size_t i = 0; i < list->size(); ++i) {
    const auto& node = (*list)[i];
    const std::string where = "vehicles[" + std::to_string(i) + "]";
    if (!node.is_object() || !node.contains("id") || !node["id"].is_string()) {
      throw SchemaError(where + ".id: missing or not a string");
    }
    VehicleProfile v;
    v.id = node["id"].get<std::string>();
    if (!ids.insert(v.id).second) throw SchemaError(where + ".id: duplicate vehicle id " + v.id);
    if (auto it = node.find("model_year"); it != node.end() && !it->is_null()) {
      if (!it->is_number_integer()) throw SchemaError(where + ".model_year: expected an integer");
      v.model_year = it->get<int>();
    }
    if (auto it = node.find("mass"); it != node.end()) {
      if (!it->is_number() || it->get<double>() <= 0.0) {
        throw SchemaError(where + ".mass: expected a positive number (kg)");
      }
      v.mass_kg = it->get<double>();
    }
    if (auto it = node.find("sensors"); it != node.end()) {
      if (!it->is_array()) throw SchemaError(where + ".sensors: expected an array");
      for (const auto& s : *it) {
        if (!s.is_string()) throw SchemaError(where + ".sensors: expected strings");
        try {
          v.sensors.push_back(parse_sensor(s.get<std::string>()));
        } catch (const UnknownKeyError& e) {
          throw SchemaError(where + ".sensors: " + e.what());
        }
      }
    }
    if (auto it = node.find("is_prototype"); it != node.end()) {
      if (!it->is_boolean()) throw SchemaError(where + ".is_prototype: expected a boolean");
      v.is_prototype = it->get<bool>();
    }
    vehicles.push_back(std::move(v));
  }
  return vehicles;
}

std::vector<VehicleProfile> load_vehicles(const std::string& path) {
  return parse_vehicles(read_text_file(path));
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_text_file(const std::string& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path + "'");
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw IoError("write failed for '" + path + "'");
}

}  // namespace aeb
