#include "aeb/protocol.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "aeb/error.hpp"
#include "json.hpp"

namespace aeb {

namespace {

using Json = nlohmann::json;
using OrderedJson = nlohmann::ordered_json;

std::string where(std::size_t index, const std::string& code) {
  std::ostringstream out;
  out << "scenarios[" << index << "]";
  if (!code.empty()) out << " (" << code << ")";
  return out.str();
}

[[noreturn]] void schema_fail(const std::string& location, const std::string& field,
                              const std::string& what) {
  throw SchemaError(location + "." + field + ": " + what);
}

int require_int(const Json& node, const std::string& location, const std::string& field) {
  if (!node.is_number_integer()) schema_fail(location, field, "expected an integer");
  return node.get<int>();
}

std::vector<SpeedRange> parse_ranges(const Json& node, const std::string& location,
                                     const std::string& field) {
  if (!node.is_array() || node.empty()) schema_fail(location, field, "expected a non-empty array");
  std::vector<SpeedRange> ranges;
  for (std::size_t i = 0; i < node.size(); ++i) {
    const auto& pair = node[i];
    const std::string sub = field + "[" + std::to_string(i) + "]";
    if (!pair.is_array() || pair.size() != 2) schema_fail(location, sub, "expected [min, max]");
    ranges.push_back({require_int(pair[0], location, sub), require_int(pair[1], location, sub)});
  }
  return ranges;
}

std::vector<int> parse_int_list(const Json& node, const std::string& location,
                                const std::string& field) {
  if (!node.is_array()) schema_fail(location, field, "expected an array");
  std::vector<int> values;
  for (std::size_t i = 0; i < node.size(); ++i) {
    values.push_back(require_int(node[i], location, field + "[" + std::to_string(i) + "]"));
  }
  return values;
}

const Json& require(const Json& obj, const char* field, const std::string& location) {
  auto it = obj.find(field);
  if (it == obj.end()) schema_fail(location, field, "missing required field");
  return *it;
}

std::string require_string(const Json& obj, const char* field, const std::string& location) {
  const auto& node = require(obj, field, location);
  if (!node.is_string()) schema_fail(location, field, "expected a string");
  return node.get<std::string>();
}

ScenarioSpec parse_scenario(const Json& node, std::size_t index) {
  std::string location = where(index, "");
  if (!node.is_object()) throw SchemaError(location + ": expected an object");

  ScenarioSpec spec;
  spec.code = require_string(node, "code", location);
  location = where(index, spec.code);

  try {
    spec.group = parse_group(require_string(node, "group", location));
  } catch (const UnknownKeyError& e) {
    schema_fail(location, "group", e.what());
  }

  spec.speed_step = require_int(require(node, "speed_step", location), location, "speed_step");

  if (auto it = node.find("tg_speeds"); it != node.end() && !it->is_null()) {
    spec.tg_speeds = parse_int_list(*it, location, "tg_speeds");
  }
  if (auto it = node.find("tg_mode"); it != node.end()) {
    if (!it->is_string()) schema_fail(location, "tg_mode", "expected a string");
    try {
      spec.tg_mode = parse_target_speed_mode(it->get<std::string>());
    } catch (const UnknownKeyError& e) {
      schema_fail(location, "tg_mode", e.what());
    }
  }
  if (auto it = node.find("requires_pretest"); it != node.end()) {
    if (!it->is_boolean()) schema_fail(location, "requires_pretest", "expected a boolean");
    spec.requires_pretest = it->get<bool>();
  }
  if (auto it = node.find("description"); it != node.end()) {
    if (!it->is_string()) schema_fail(location, "description", "expected a string");
    spec.description = it->get<std::string>();
  }

  const auto default_ranges =
      parse_ranges(require(node, "vut_speed_ranges", location), location, "vut_speed_ranges");
  const auto default_overlaps =
      parse_int_list(require(node, "overlaps", location), location, "overlaps");

  const auto& lights = require(node, "lights", location);
  if (!lights.is_array() || lights.empty()) {
    schema_fail(location, "lights", "expected a non-empty array");
  }
  std::set<Light> seen;
  for (std::size_t i = 0; i < lights.size(); ++i) {
    const std::string field = "lights[" + std::to_string(i) + "]";
    if (!lights[i].is_string()) schema_fail(location, field, "expected \"day\" or \"night\"");
    Light light{};
    try {
      light = parse_light(lights[i].get<std::string>());
    } catch (const UnknownKeyError& e) {
      schema_fail(location, field, e.what());
    }
    if (!seen.insert(light).second) schema_fail(location, field, "duplicate light");
  }

  for (Light light : seen) {  // std::set<Light> iterates day before night
    LightVariant variant{light, default_ranges, default_overlaps};
    const std::string key{to_string(light)};
    if (auto it = node.find(key); it != node.end()) {
      if (!it->is_object()) schema_fail(location, key, "expected an object");
      const std::string sub = location + "." + key;
      if (auto r = it->find("vut_speed_ranges"); r != it->end()) {
        variant.vut_speed_ranges = parse_ranges(*r, sub, "vut_speed_ranges");
      }
      if (auto o = it->find("overlaps"); o != it->end()) {
        variant.overlaps = parse_int_list(*o, sub, "overlaps");
      }
    }
    std::sort(variant.overlaps.begin(), variant.overlaps.end());
    spec.variants.push_back(std::move(variant));
  }

  // Overrides for lights that are not licensed are almost certainly typos.
  for (Light light : kAllLights) {
    if (!seen.count(light) && node.contains(std::string(to_string(light)))) {
      schema_fail(location, std::string(to_string(light)),
                  "settings given for a light that is not listed in lights");
    }
  }

  try {
    validate_scenario(spec);
  } catch (const LatticeError& e) {
    throw LatticeError(location + ": " + e.what());
  } catch (const SchemaError& e) {
    throw SchemaError(location + ": " + e.what());
  }
  return spec;
}

OrderedJson ranges_to_json(const std::vector<SpeedRange>& ranges) {
  OrderedJson out = OrderedJson::array();
  for (const auto& r : ranges) out.push_back({r.min_kmh, r.max_kmh});
  return out;
}

}  // namespace

std::string_view to_string(ScenarioGroup group) {
  switch (group) {
    case ScenarioGroup::C2C:
      return "C2C";
    case ScenarioGroup::C2VRU:
      return "C2VRU";
    case ScenarioGroup::C2O:
      return "C2O";
  }
  return "?";
}

std::string_view to_string(Light light) { return light == Light::Day ? "day" : "night"; }

ScenarioGroup parse_group(std::string_view name) {
  for (auto group : kAllGroups) {
    if (to_string(group) == name) return group;
  }
  throw UnknownKeyError("unknown scenario group '" + std::string(name) + "'");
}

Light parse_light(std::string_view name) {
  if (name == "day") return Light::Day;
  if (name == "night") return Light::Night;
  throw UnknownKeyError("unknown light '" + std::string(name) + "' (expected day or night)");
}

std::string_view to_string(TargetSpeedMode mode) {
  switch (mode) {
    case TargetSpeedMode::Crossed:
      return "crossed";
    case TargetSpeedMode::Paired:
      return "paired";
    case TargetSpeedMode::Range:
      return "range";
  }
  return "?";
}

TargetSpeedMode parse_target_speed_mode(std::string_view name) {
  if (name == "crossed") return TargetSpeedMode::Crossed;
  if (name == "paired") return TargetSpeedMode::Paired;
  if (name == "range") return TargetSpeedMode::Range;
  throw UnknownKeyError("unknown tg_mode '" + std::string(name) + "'");
}

bool ScenarioSpec::licenses(Light light) const { return variant(light) != nullptr; }

const LightVariant* ScenarioSpec::variant(Light light) const {
  for (const auto& v : variants) {
    if (v.light == light) return &v;
  }
  return nullptr;
}

std::string describe(const TestConfig& config) {
  std::ostringstream out;
  out << config.scenario << "/" << to_string(config.light) << " vut=" << config.vut_speed;
  if (config.tg_speed) out << " tg=" << *config.tg_speed;
  out << " overlap=" << config.overlap;
  return out.str();
}

SeriesKey series_key(const ScenarioSpec& spec, const TestConfig& config) {
  SeriesKey key{config.scenario, config.light, config.overlap, std::nullopt};
  if (spec.tg_mode == TargetSpeedMode::Crossed) key.tg_speed = config.tg_speed;
  return key;
}

void validate_scenario(const ScenarioSpec& spec) {
  if (spec.code.empty()) throw SchemaError("code: must not be empty");
  if (spec.speed_step <= 0) throw SchemaError("speed_step: must be > 0");
  if (spec.variants.empty()) throw SchemaError("lights: at least one light is required");
  for (int tg : spec.tg_speeds) {
    if (tg < 0) throw SchemaError("tg_speeds: speeds must be >= 0");
  }
  if (spec.tg_mode == TargetSpeedMode::Range &&
      (spec.tg_speeds.size() != 2 || spec.tg_speeds[0] > spec.tg_speeds[1])) {
    throw SchemaError("tg_speeds: tg_mode 'range' needs exactly [lo, hi] with lo <= hi");
  }
  for (const auto& variant : spec.variants) {
    const std::string light{to_string(variant.light)};
    if (variant.vut_speed_ranges.empty()) {
      throw SchemaError(light + ".vut_speed_ranges: at least one range is required");
    }
    for (const auto& r : variant.vut_speed_ranges) {
      const std::string text =
          "[" + std::to_string(r.min_kmh) + ", " + std::to_string(r.max_kmh) + "]";
      if (r.min_kmh < 0 || r.min_kmh > r.max_kmh) {
        throw SchemaError(light + ".vut_speed_ranges: invalid range " + text);
      }
      if ((r.max_kmh - r.min_kmh) % spec.speed_step != 0) {
        throw LatticeError(light + ".vut_speed_ranges: range " + text +
                           " is not divisible by speed_step " + std::to_string(spec.speed_step));
      }
    }
    if (spec.tg_mode == TargetSpeedMode::Paired &&
        spec.tg_speeds.size() != variant.vut_speed_ranges.size()) {
      throw SchemaError(light + ".tg_speeds: tg_mode 'paired' needs one target speed per range");
    }
    if (variant.overlaps.empty()) throw SchemaError(light + ".overlaps: must not be empty");
    std::set<int> unique;
    for (int overlap : variant.overlaps) {
      if (overlap <= 0 || overlap > 100) {
        throw SchemaError(light + ".overlaps: " + std::to_string(overlap) +
                          " is outside (0, 100]");
      }
      if (!unique.insert(overlap).second) {
        throw SchemaError(light + ".overlaps: duplicate " + std::to_string(overlap));
      }
    }
  }
}

ProtocolDefinition::ProtocolDefinition(std::vector<ScenarioSpec> scenarios,
                                       std::string provenance, std::vector<std::string> notes)
    : scenarios_(std::move(scenarios)),
      provenance_(std::move(provenance)),
      notes_(std::move(notes)) {
  std::set<std::string> codes;
  for (std::size_t i = 0; i < scenarios_.size(); ++i) {
    validate_scenario(scenarios_[i]);
    if (!codes.insert(scenarios_[i].code).second) {
      throw SchemaError(where(i, scenarios_[i].code) + ".code: duplicate scenario code");
    }
  }
}

const ScenarioSpec* ProtocolDefinition::find(std::string_view code) const {
  for (const auto& spec : scenarios_) {
    if (spec.code == code) return &spec;
  }
  return nullptr;
}

const ScenarioSpec& ProtocolDefinition::at(std::string_view code) const {
  if (const auto* spec = find(code)) return *spec;
  throw UnknownKeyError("unknown scenario '" + std::string(code) + "'");
}

bool ProtocolDefinition::contains(const TestConfig& config) const {
  const auto* spec = find(config.scenario);
  if (spec == nullptr || spec->group != config.group) return false;
  const auto* variant = spec->variant(config.light);
  if (variant == nullptr) return false;
  if (!std::binary_search(variant->overlaps.begin(), variant->overlaps.end(), config.overlap)) {
    return false;
  }
  const auto lattice = speed_lattice(*spec, config.light);
  if (!std::binary_search(lattice.begin(), lattice.end(), config.vut_speed)) return false;
  const auto targets = target_speeds_at(*spec, config.light, config.vut_speed);
  return std::find(targets.begin(), targets.end(), config.tg_speed) != targets.end();
}

std::size_t ProtocolDefinition::config_count() const { return enumerate_configs(*this).size(); }

std::vector<int> speed_lattice(const std::vector<SpeedRange>& ranges, int step) {
  std::set<int> speeds;
  for (const auto& r : ranges) {
    for (int v = r.min_kmh; v <= r.max_kmh; v += step) speeds.insert(v);
  }
  return {speeds.begin(), speeds.end()};
}

std::vector<int> speed_lattice(const ScenarioSpec& spec, Light light) {
  const auto* variant = spec.variant(light);
  if (variant == nullptr) return {};
  return speed_lattice(variant->vut_speed_ranges, spec.speed_step);
}

std::vector<std::optional<int>> target_speeds_at(const ScenarioSpec& spec, Light light,
                                                 int vut_speed) {
  if (spec.tg_speeds.empty()) return {std::nullopt};
  switch (spec.tg_mode) {
    case TargetSpeedMode::Crossed: {
      std::set<int> sorted(spec.tg_speeds.begin(), spec.tg_speeds.end());
      return {sorted.begin(), sorted.end()};
    }
    case TargetSpeedMode::Range:
      return {spec.tg_speeds.front()};
    case TargetSpeedMode::Paired: {
      const auto* variant = spec.variant(light);
      if (variant == nullptr) return {};
      std::optional<int> best;
      int best_width = 0;
      for (std::size_t i = 0; i < variant->vut_speed_ranges.size(); ++i) {
        const auto& r = variant->vut_speed_ranges[i];
        if (vut_speed < r.min_kmh || vut_speed > r.max_kmh) continue;
        const int width = r.max_kmh - r.min_kmh;
        if (!best || width < best_width) {
          best = spec.tg_speeds[i];
          best_width = width;
        }
      }
      if (!best) return {};
      return {best};
    }
  }
  return {};
}

std::vector<TestConfig> enumerate_configs(const ScenarioSpec& spec, Light light) {
  std::vector<TestConfig> configs;
  const auto* variant = spec.variant(light);
  if (variant == nullptr) return configs;
  const auto lattice = speed_lattice(spec, light);
  for (int overlap : variant->overlaps) {
    for (int speed : lattice) {
      for (const auto& tg : target_speeds_at(spec, light, speed)) {
        configs.push_back({spec.code, spec.group, speed, tg, overlap, light});
      }
    }
  }
  return configs;
}

std::vector<TestConfig> enumerate_configs(const ProtocolDefinition& protocol,
                                          const ConfigFilter& filter) {
  if (filter.scenario && protocol.find(*filter.scenario) == nullptr) {
    throw UnknownKeyError("filter names unknown scenario '" + *filter.scenario + "'");
  }
  if (filter.group) {
    const bool any = std::any_of(protocol.scenarios().begin(), protocol.scenarios().end(),
                                 [&](const ScenarioSpec& s) { return s.group == *filter.group; });
    if (!any) {
      throw UnknownKeyError("filter names group '" + std::string(to_string(*filter.group)) +
                            "' which has no scenarios");
    }
  }
  std::vector<TestConfig> configs;
  for (const auto& spec : protocol.scenarios()) {
    if (filter.scenario && spec.code != *filter.scenario) continue;
    if (filter.group && spec.group != *filter.group) continue;
    for (Light light : kAllLights) {
      if (filter.light && light != *filter.light) continue;
      auto part = enumerate_configs(spec, light);
      configs.insert(configs.end(), std::make_move_iterator(part.begin()),
                     std::make_move_iterator(part.end()));
    }
  }
  return configs;
}

ProtocolDefinition parse_protocol(std::string_view json_text) {
  Json doc;
  try {
    doc = Json::parse(json_text);
  } catch (const Json::parse_error& e) {
    throw SchemaError(std::string("protocol: malformed JSON: ") + e.what());
  }
  if (!doc.is_object()) throw SchemaError("protocol: top level must be an object");
  auto it = doc.find("scenarios");
  if (it == doc.end() || !it->is_array()) {
    throw SchemaError("protocol.scenarios: missing or not an array");
  }
  std::vector<ScenarioSpec> scenarios;
  for (std::size_t i = 0; i < it->size(); ++i) scenarios.push_back(parse_scenario((*it)[i], i));

  std::string provenance;
  if (auto p = doc.find("provenance"); p != doc.end() && p->is_string()) {
    provenance = p->get<std::string>();
  }
  std::vector<std::string> notes;
  if (auto n = doc.find("notes"); n != doc.end()) {
    if (!n->is_array()) throw SchemaError("protocol.notes: expected an array of strings");
    for (const auto& line : *n) {
      if (!line.is_string()) throw SchemaError("protocol.notes: expected an array of strings");
      notes.push_back(line.get<std::string>());
    }
  }
  return ProtocolDefinition(std::move(scenarios), std::move(provenance), std::move(notes));
}

ProtocolDefinition load_protocol(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open protocol file '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_protocol(buffer.str());
}

std::string serialize_protocol(const ProtocolDefinition& protocol) {
  OrderedJson doc;
  doc["provenance"] = protocol.provenance();
  if (!protocol.notes().empty()) doc["notes"] = protocol.notes();
  doc["scenarios"] = OrderedJson::array();
  for (const auto& spec : protocol.scenarios()) {
    const auto& base = spec.variants.front();
    OrderedJson node;
    node["code"] = spec.code;
    node["group"] = std::string(to_string(spec.group));
    node["vut_speed_ranges"] = ranges_to_json(base.vut_speed_ranges);
    if (spec.tg_speeds.empty()) {
      node["tg_speeds"] = nullptr;
    } else {
      node["tg_speeds"] = spec.tg_speeds;
    }
    node["tg_mode"] = std::string(to_string(spec.tg_mode));
    node["speed_step"] = spec.speed_step;
    node["overlaps"] = base.overlaps;
    node["lights"] = OrderedJson::array();
    for (const auto& v : spec.variants) node["lights"].push_back(std::string(to_string(v.light)));
    node["requires_pretest"] = spec.requires_pretest;
    node["description"] = spec.description;
    for (std::size_t i = 1; i < spec.variants.size(); ++i) {
      const auto& v = spec.variants[i];
      OrderedJson override_node = OrderedJson::object();
      if (v.vut_speed_ranges != base.vut_speed_ranges) {
        override_node["vut_speed_ranges"] = ranges_to_json(v.vut_speed_ranges);
      }
      if (v.overlaps != base.overlaps) override_node["overlaps"] = v.overlaps;
      if (!override_node.empty()) node[std::string(to_string(v.light))] = override_node;
    }
    doc["scenarios"].push_back(std::move(node));
  }
  return doc.dump(2) + "\n";
}

}  // namespace aeb
