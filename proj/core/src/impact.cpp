#include "aeb/impact.hpp"

#include <cmath>
#include <stdexcept>

#include "aeb/campaign.hpp"
#include "aeb/error.hpp"
#include "json.hpp"

namespace aeb {

double project_impact_speed(const InterventionSample& sample) {
  const double v = sample.speed_at_intervention_kmh;
  const double a = sample.deceleration_mps2;
  const double d = sample.distance_to_target_m;
  if (!std::isfinite(v) || !std::isfinite(a) || !std::isfinite(d)) {
    throw std::invalid_argument("intervention sample must be finite");
  }
  if (v < 0.0) throw std::invalid_argument("speed at intervention must be >= 0");
  if (a < 0.0) throw std::invalid_argument("deceleration must be >= 0");
  if (d < 0.0) throw std::invalid_argument("distance to target must be >= 0");

  const double v_mps = kmh_to_mps(v);
  const double residual_sq = v_mps * v_mps - 2.0 * a * d;
  if (residual_sq <= 0.0) return 0.0;
  return mps_to_kmh(std::sqrt(residual_sq));
}

std::string_view to_string(GeometryRule rule) {
  return rule == GeometryRule::Linear ? "linear" : "unit";
}

GeometryRule parse_geometry_rule(std::string_view name) {
  if (name == "linear") return GeometryRule::Linear;
  if (name == "unit") return GeometryRule::Unit;
  throw UnknownKeyError("unknown geometry rule '" + std::string(name) + "'");
}

double ImpactPowerModel::geometry_factor(int overlap_percent) const {
  if (geometry == GeometryRule::Unit) return 1.0;
  return static_cast<double>(overlap_percent) / 100.0;
}

double mu_pow(const ImpactPowerModel& model, const TestConfig& config, double vut_mass_kg,
              double impact_speed_kmh) {
  if (!(impact_speed_kmh >= 0.0)) throw std::invalid_argument("impact speed must be >= 0");
  if (!(vut_mass_kg > 0.0)) throw std::invalid_argument("VUT mass must be > 0");

  const double g = model.geometry_factor(config.overlap);
  if (config.group == ScenarioGroup::C2C) {
    auto it = model.tg_mass_kg.find(ScenarioGroup::C2C);
    if (it == model.tg_mass_kg.end()) throw UnknownKeyError("impact model has no C2C target mass");
    const double tg_mass = it->second;
    if (!(tg_mass > 0.0)) throw std::invalid_argument("C2C target mass must be > 0");
    const double reduced = vut_mass_kg * tg_mass / (vut_mass_kg + tg_mass);
    double dv_kmh = impact_speed_kmh;
    if (!model.crossing_scenarios.count(config.scenario) && config.tg_speed) {
      dv_kmh = std::abs(impact_speed_kmh - *config.tg_speed);
    }
    const double dv = kmh_to_mps(dv_kmh);
    return 0.5 * reduced * dv * dv * g;
  }
  if (config.group == ScenarioGroup::C2VRU || config.group == ScenarioGroup::C2O) {
    const double v = kmh_to_mps(impact_speed_kmh);
    return 0.5 * vut_mass_kg * v * v * g;
  }
  throw UnknownKeyError("impact model has no rule for this scenario group");
}

double passive_mu_pow(const ImpactPowerModel& model, const TestConfig& config,
                      double vut_mass_kg) {
  return mu_pow(model, config, vut_mass_kg, static_cast<double>(config.vut_speed));
}

ImpactPowerModel parse_impact_model(std::string_view json_text) {
  using Json = nlohmann::json;
  Json doc;
  try {
    doc = Json::parse(json_text);
  } catch (const Json::parse_error& e) {
    throw SchemaError(std::string("impact_model: malformed JSON: ") + e.what());
  }
  if (!doc.is_object()) throw SchemaError("impact_model: expected an object");
  if (auto it = doc.find("impact_model"); it != doc.end()) doc = *it;
  if (!doc.is_object()) throw SchemaError("impact_model: expected an object");

  ImpactPowerModel model;
  if (auto it = doc.find("name"); it != doc.end()) {
    if (!it->is_string()) throw SchemaError("impact_model.name: expected a string");
    model.name = it->get<std::string>();
  }
  if (auto it = doc.find("tg_mass_defaults"); it != doc.end()) {
    if (!it->is_object()) throw SchemaError("impact_model.tg_mass_defaults: expected an object");
    for (auto& [key, value] : it->items()) {
      ScenarioGroup group{};
      try {
        group = parse_group(key);
      } catch (const UnknownKeyError& e) {
        throw SchemaError(std::string("impact_model.tg_mass_defaults: ") + e.what());
      }
      if (!value.is_number() || value.get<double>() < 0.0) {
        throw SchemaError("impact_model.tg_mass_defaults." + key + ": expected a number >= 0");
      }
      model.tg_mass_kg[group] = value.get<double>();
    }
  }
  if (auto it = doc.find("geometry_factor"); it != doc.end()) {
    if (!it->is_string()) throw SchemaError("impact_model.geometry_factor: expected a string");
    try {
      model.geometry = parse_geometry_rule(it->get<std::string>());
    } catch (const UnknownKeyError& e) {
      throw SchemaError(std::string("impact_model.geometry_factor: ") + e.what());
    }
  }
  if (auto it = doc.find("crossing_scenarios"); it != doc.end()) {
    if (!it->is_array()) throw SchemaError("impact_model.crossing_scenarios: expected an array");
    model.crossing_scenarios.clear();
    for (const auto& code : *it) {
      if (!code.is_string()) {
        throw SchemaError("impact_model.crossing_scenarios: expected strings");
      }
      model.crossing_scenarios.insert(code.get<std::string>());
    }
  }
  return model;
}

ImpactPowerModel load_impact_model(const std::string& path) {
  return parse_impact_model(read_text_file(path));
}

}  // namespace aeb
