#include "aeb/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "aeb/error.hpp"
#include "aeb/impact.hpp"
#include "json.hpp"

namespace aeb {

std::uint64_t fnv1a64(std::string_view text, std::uint64_t basis) {
  std::uint64_t h = basis;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

namespace {

using Json = nlohmann::json;

double number_or(const Json& node, const char* field, double fallback, const std::string& where) {
  auto it = node.find(field);
  if (it == node.end()) return fallback;
  if (!it->is_number()) throw SchemaError(where + "." + field + ": expected a number");
  return it->get<double>();
}

std::set<std::string> string_set(const Json& node, const char* field, const std::string& where) {
  std::set<std::string> out;
  auto it = node.find(field);
  if (it == node.end()) return out;
  if (!it->is_array()) throw SchemaError(where + "." + field + ": expected an array of strings");
  for (const auto& s : *it) {
    if (!s.is_string()) throw SchemaError(where + "." + field + ": expected strings");
    out.insert(s.get<std::string>());
  }
  return out;
}

void check_scenario(const ProtocolDefinition& protocol, const std::string& code,
                    const std::string& where) {
  if (protocol.find(code) == nullptr) {
    throw UnknownKeyError(where + ": oracle spec references unknown scenario '" + code + "'");
  }
}

VehicleOracleSpec parse_vehicle(const Json& node, std::size_t index,
                                const ProtocolDefinition& protocol) {
  const std::string where = "vehicles[" + std::to_string(index) + "]";
  VehicleOracleSpec v;
  // Profile fields share the vehicle-file schema.
  v.profile = parse_vehicles(Json::array({node}).dump()).front();

  auto oracle_it = node.find("oracle");
  if (oracle_it == node.end()) return v;
  const Json& o = *oracle_it;
  const std::string ow = where + ".oracle";
  if (!o.is_object()) throw SchemaError(ow + ": expected an object");

  const std::string kind = o.value("kind", std::string("avoid_all"));
  if (kind == "avoid_all") {
    v.kind = VehicleOracleSpec::Kind::AvoidAll;
  } else if (kind == "passive") {
    v.kind = VehicleOracleSpec::Kind::Passive;
  } else if (kind == "thresholds") {
    v.kind = VehicleOracleSpec::Kind::Thresholds;
  } else if (kind == "parametric") {
    v.kind = VehicleOracleSpec::Kind::Parametric;
  } else {
    throw SchemaError(ow + ".kind: unknown oracle kind '" + kind + "'");
  }

  if (auto it = o.find("thresholds"); it != o.end()) {
    if (!it->is_array()) throw SchemaError(ow + ".thresholds: expected an array");
    for (std::size_t i = 0; i < it->size(); ++i) {
      const auto& t = (*it)[i];
      const std::string tw = ow + ".thresholds[" + std::to_string(i) + "]";
      if (!t.is_object() || !t.contains("scenario") || !t["scenario"].is_string()) {
        throw SchemaError(tw + ".scenario: missing or not a string");
      }
      ThresholdRule rule;
      rule.scenario = t["scenario"].get<std::string>();
      check_scenario(protocol, rule.scenario, tw);
      if (t.contains("light")) {
        try {
          rule.light = parse_light(t["light"].get<std::string>());
        } catch (const std::exception& e) {
          throw SchemaError(tw + ".light: " + e.what());
        }
      }
      if (t.contains("overlap")) {
        if (!t["overlap"].is_number_integer()) throw SchemaError(tw + ".overlap: expected an integer");
        rule.overlap = t["overlap"].get<int>();
      }
      if (!t.contains("fail_speed") || !t["fail_speed"].is_number_integer()) {
        throw SchemaError(tw + ".fail_speed: missing or not an integer");
      }
      rule.fail_speed = t["fail_speed"].get<int>();
      rule.impact_fraction = number_or(t, "impact_fraction", 1.0, tw);
      if (!(rule.impact_fraction > 0.0 && rule.impact_fraction <= 1.0)) {
        throw SchemaError(tw + ".impact_fraction: must lie in (0, 1]");
      }
      v.thresholds.push_back(std::move(rule));
    }
  }
  if (auto it = o.find("default_fail_speed"); it != o.end() && !it->is_null()) {
    if (!it->is_number_integer()) throw SchemaError(ow + ".default_fail_speed: expected an integer");
    v.default_fail_speed = it->get<int>();
  }

  auto& b = v.braking;
  b.decel_mps2 = number_or(o, "decel_mps2", b.decel_mps2, ow);
  b.latency_s = number_or(o, "latency_s", b.latency_s, ow);
  b.max_response_kmh = number_or(o, "max_response_kmh", b.max_response_kmh, ow);
  b.range_jitter_m = number_or(o, "range_jitter_m", b.range_jitter_m, ow);
  if (auto it = o.find("detection_range_m"); it != o.end()) {
    if (!it->is_object()) throw SchemaError(ow + ".detection_range_m: expected {day, night}");
    b.day_range_m = number_or(*it, "day", b.day_range_m, ow + ".detection_range_m");
    b.night_range_m = number_or(*it, "night", b.night_range_m, ow + ".detection_range_m");
  }
  if (b.decel_mps2 <= 0.0 || b.latency_s < 0.0 || b.day_range_m < 0.0 || b.night_range_m < 0.0 ||
      b.range_jitter_m < 0.0) {
    throw SchemaError(ow + ": braking parameters must be non-negative (deceleration > 0)");
  }
  if (auto it = o.find("group_factor"); it != o.end()) {
    if (!it->is_object()) throw SchemaError(ow + ".group_factor: expected an object");
    for (auto& [name, value] : it->items()) {
      try {
        b.group_factor[parse_group(name)] = value.get<double>();
      } catch (const std::exception& e) {
        throw SchemaError(ow + ".group_factor." + name + ": " + e.what());
      }
    }
  }
  if (auto it = o.find("scenario_factor"); it != o.end()) {
    if (!it->is_object()) throw SchemaError(ow + ".scenario_factor: expected an object");
    for (auto& [name, value] : it->items()) {
      check_scenario(protocol, name, ow + ".scenario_factor");
      if (!value.is_number()) throw SchemaError(ow + ".scenario_factor." + name + ": expected a number");
      b.scenario_factor[name] = value.get<double>();
    }
  }

  v.pretest_fail = string_set(o, "pretest_fail", ow);
  for (const auto& code : v.pretest_fail) check_scenario(protocol, code, ow + ".pretest_fail");
  v.skip = string_set(o, "skip", ow);
  for (const auto& entry : v.skip) {
    const auto slash = entry.rfind('/');
    std::string code = entry;
    if (slash != std::string::npos) {
      const auto suffix = entry.substr(slash + 1);
      if (suffix == "day" || suffix == "night") code = entry.substr(0, slash);
    }
    check_scenario(protocol, code, ow + ".skip");
  }
  return v;
}

class ThresholdOracle final : public BrakingOracle {
 public:
  explicit ThresholdOracle(const VehicleOracleSpec& spec) : spec_(spec) {}

  TestOutcome respond(const TestConfig& config) override {
    std::optional<int> fail = spec_.default_fail_speed;
    double fraction = 1.0;
    for (const auto& rule : spec_.thresholds) {
      if (rule.scenario != config.scenario) continue;
      if (rule.light && *rule.light != config.light) continue;
      if (rule.overlap && *rule.overlap != config.overlap) continue;
      fail = rule.fail_speed;
      fraction = rule.impact_fraction;
      break;
    }
    if (!fail || config.vut_speed < *fail) return TestOutcome::avoided();
    const double impact = std::round(config.vut_speed * fraction * 10.0) / 10.0;
    if (impact <= 0.0) return TestOutcome::avoided();
    return TestOutcome::impacted(impact, fraction < 1.0);
  }

  bool pretest(const ScenarioSpec& spec, int, Light) override {
    return !spec_.pretest_fail.count(spec.code);
  }

 private:
  const VehicleOracleSpec& spec_;
};

class ParametricOracle final : public BrakingOracle {
 public:
  ParametricOracle(const VehicleOracleSpec& vehicle, const OracleSpec& spec, std::uint64_t seed)
      : vehicle_(vehicle), spec_(spec), seed_(seed) {}

  TestOutcome respond(const TestConfig& config) override {
    const auto& b = vehicle_.braking;
    const double factor = factor_for(config.group, config.scenario);
    const bool moving = spec_.moving_target_scenarios.count(config.scenario) && config.tg_speed;
    const double tg = moving ? static_cast<double>(*config.tg_speed) : 0.0;
    const double closing_kmh = std::max(0.0, config.vut_speed - tg);

    double range = (config.light == Light::Day ? b.day_range_m : b.night_range_m) * factor;
    if (b.range_jitter_m > 0.0 && range > 0.0) {
      std::mt19937_64 rng(
          fnv1a64(std::to_string(seed_) + "|" + vehicle_.profile.id + "|" + describe(config)));
      std::uniform_real_distribution<double> jitter(-b.range_jitter_m, b.range_jitter_m);
      range = std::max(0.0, range + jitter(rng));
    }
    if (range <= 0.0 || closing_kmh > b.max_response_kmh) {
      return TestOutcome::impacted(config.vut_speed, false);
    }
    const double braking_distance = range - kmh_to_mps(closing_kmh) * b.latency_s;
    double residual = closing_kmh;
    if (braking_distance > 0.0) {
      residual = project_impact_speed({closing_kmh, b.decel_mps2, braking_distance});
    }
    residual = std::round(residual * 10.0) / 10.0;
    if (residual <= 0.0) return TestOutcome::avoided();
    const double impact = std::min<double>(config.vut_speed, residual + tg);
    return TestOutcome::impacted(impact, true);
  }

  bool pretest(const ScenarioSpec& spec, int, Light light) override {
    if (vehicle_.pretest_fail.count(spec.code)) return false;
    const auto& b = vehicle_.braking;
    const double range = (light == Light::Day ? b.day_range_m : b.night_range_m) *
                         factor_for(spec.group, spec.code);
    return range > 0.0;
  }

 private:
  double factor_for(ScenarioGroup group, const std::string& code) const {
    const auto& b = vehicle_.braking;
    double f = 1.0;
    if (auto it = b.group_factor.find(group); it != b.group_factor.end()) f *= it->second;
    if (auto it = b.scenario_factor.find(code); it != b.scenario_factor.end()) f *= it->second;
    return std::max(0.0, f);
  }

  const VehicleOracleSpec& vehicle_;
  const OracleSpec& spec_;
  std::uint64_t seed_;
};

// Night series are cut at the speed where the matching day series failed:
// those tests are judged rather than driven.
class NightCapOracle final : public BrakingOracle {
 public:
  NightCapOracle(BrakingOracle& inner, const ScenarioSpec& spec,
                 const std::map<SeriesKey, int>& caps)
      : inner_(inner), spec_(spec), caps_(caps) {}

  TestOutcome respond(const TestConfig& config) override {
    auto it = caps_.find(series_key(spec_, config));
    if (it != caps_.end() && config.vut_speed >= it->second) return TestOutcome::judged_failed();
    return inner_.respond(config);
  }
  bool pretest(const ScenarioSpec& spec, int overlap, Light light) override {
    return inner_.pretest(spec, overlap, light);
  }

 private:
  BrakingOracle& inner_;
  const ScenarioSpec& spec_;
  const std::map<SeriesKey, int>& caps_;
};

bool skipped(const VehicleOracleSpec& v, const ScenarioSpec& spec, Light light) {
  return v.skip.count(spec.code) ||
         v.skip.count(spec.code + "/" + std::string(to_string(light)));
}

}  // namespace

OracleSpec parse_oracle_spec(std::string_view json_text, const ProtocolDefinition& protocol) {
  Json doc;
  try {
    doc = Json::parse(json_text);
  } catch (const Json::parse_error& e) {
    throw SchemaError(std::string("oracle spec: malformed JSON: ") + e.what());
  }
  if (!doc.is_object()) throw SchemaError("oracle spec: expected an object");
  OracleSpec spec;
  if (auto it = doc.find("seed"); it != doc.end()) {
    if (!it->is_number_unsigned()) throw SchemaError("oracle spec.seed: expected an unsigned integer");
    spec.seed = it->get<std::uint64_t>();
  }
  if (auto it = doc.find("stop_on_impact"); it != doc.end()) {
    if (!it->is_boolean()) throw SchemaError("oracle spec.stop_on_impact: expected a boolean");
    spec.run_options.stop_on_impact = it->get<bool>();
  }
  if (doc.contains("moving_target_scenarios")) {
    spec.moving_target_scenarios = string_set(doc, "moving_target_scenarios", "oracle spec");
  }
  auto vehicles = doc.find("vehicles");
  if (vehicles == doc.end() || !vehicles->is_array()) {
    throw SchemaError("oracle spec.vehicles: missing or not an array");
  }
  std::set<std::string> ids;
  for (std::size_t i = 0; i < vehicles->size(); ++i) {
    auto v = parse_vehicle((*vehicles)[i], i, protocol);
    if (!ids.insert(v.profile.id).second) {
      throw SchemaError("oracle spec.vehicles[" + std::to_string(i) + "]: duplicate id");
    }
    spec.vehicles.push_back(std::move(v));
  }
  return spec;
}

OracleSpec load_oracle_spec(const std::string& path, const ProtocolDefinition& protocol) {
  return parse_oracle_spec(read_text_file(path), protocol);
}

std::unique_ptr<BrakingOracle> make_oracle(const VehicleOracleSpec& vehicle,
                                           const OracleSpec& spec, std::uint64_t seed) {
  using Kind = VehicleOracleSpec::Kind;
  switch (vehicle.kind) {
    case Kind::AvoidAll: {
      const auto* v = &vehicle;
      return std::make_unique<FunctionOracle>(
          [](const TestConfig&) { return TestOutcome::avoided(); },
          [v](const ScenarioSpec& s, int, Light) { return !v->pretest_fail.count(s.code); });
    }
    case Kind::Passive:
      return std::make_unique<FunctionOracle>(
          [](const TestConfig& c) { return TestOutcome::impacted(c.vut_speed, false); },
          [](const ScenarioSpec&, int, Light) { return false; });
    case Kind::Thresholds:
      return std::make_unique<ThresholdOracle>(vehicle);
    case Kind::Parametric:
      return std::make_unique<ParametricOracle>(vehicle, spec, seed);
  }
  return nullptr;
}

CampaignLog simulate_campaign(std::shared_ptr<const ProtocolDefinition> protocol,
                              const OracleSpec& spec, std::uint64_t seed) {
  CampaignLog log;
  log.protocol = protocol;
  for (const auto& vehicle : spec.vehicles) {
    log.vehicles.push_back(vehicle.profile);
    auto oracle = make_oracle(vehicle, spec, seed);
    for (const auto& scenario : protocol->scenarios()) {
      // First failing day speed per series, keyed with the light erased.
      std::map<SeriesKey, int> day_failure;
      for (Light light : kAllLights) {
        const auto* variant = scenario.variant(light);
        if (variant == nullptr || skipped(vehicle, scenario, light)) continue;
        for (int overlap : variant->overlaps) {
          BrakingOracle& active = *oracle;
          NightCapOracle capped(active, scenario, day_failure);
          auto records = run_scenario(light == Light::Day ? active : capped, vehicle.profile.id,
                                      scenario, overlap, light, scenario.requires_pretest,
                                      spec.run_options);
          if (light == Light::Day) {
            for (const auto& r : records) {
              if (!r.outcome.failed()) continue;
              auto key = series_key(scenario, r.config);
              key.light = Light::Night;
              auto [it, fresh] = day_failure.emplace(key, r.config.vut_speed);
              if (!fresh) it->second = std::min(it->second, r.config.vut_speed);
            }
          }
          log.records.insert(log.records.end(), std::make_move_iterator(records.begin()),
                             std::make_move_iterator(records.end()));
        }
      }
    }
  }
  return log;
}

}  // namespace aeb
