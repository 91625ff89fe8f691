#pragma once

#include <map>
#include <set>
#include <string>
#include <string_view>

#include "aeb/protocol.hpp"

namespace aeb {

inline constexpr double kKmhPerMps = 3.6;

constexpr double kmh_to_mps(double kmh) { return kmh / kKmhPerMps; }
constexpr double mps_to_kmh(double mps) { return mps * kKmhPerMps; }

// State of the VUT at the moment a test driver took over.
struct InterventionSample {
  double speed_at_intervention_kmh = 0.0;
  double deceleration_mps2 = 0.0;
  double distance_to_target_m = 0.0;
};

// Impact speed the VUT would have reached had it kept decelerating uniformly
// over the remaining distance: sqrt(max(0, v^2 - 2 a d)). Zero means the
// projection predicts full avoidance. Throws std::invalid_argument on
// negative or non-finite inputs.
double project_impact_speed(const InterventionSample& sample);

enum class GeometryRule {
  Linear,  // g(overlap) = overlap / 100
  Unit,    // g(overlap) = 1
};

std::string_view to_string(GeometryRule rule);
GeometryRule parse_geometry_rule(std::string_view name);

// Pluggable impact-power model. The default is a kinetic-energy proxy:
//   C2C:       1/2 * m_vut m_tg / (m_vut + m_tg) * dv^2 * g(overlap)
//   C2VRU/C2O: 1/2 * m_vut * v^2 * g(overlap)
// where dv = |v_impact - v_target| along the travel axis, or v_impact for
// crossing-path scenarios whose target moves orthogonally.
struct ImpactPowerModel {
  std::string name = "kinetic_energy";
  // Target masses per group. Only C2C uses its entry; VRU and object targets
  // are treated as negligible next to the VUT.
  std::map<ScenarioGroup, double> tg_mass_kg = {
      {ScenarioGroup::C2C, 1500.0}, {ScenarioGroup::C2VRU, 0.0}, {ScenarioGroup::C2O, 0.0}};
  GeometryRule geometry = GeometryRule::Linear;
  std::set<std::string> crossing_scenarios = {"CCFtap", "CCscp left", "CCscp right"};

  double geometry_factor(int overlap_percent) const;
};

// Energy proxy in joules. Throws std::invalid_argument for negative speed or
// non-positive masses, UnknownKeyError for a group without a target mass.
double mu_pow(const ImpactPowerModel& model, const TestConfig& config, double vut_mass_kg,
              double impact_speed_kmh);

// Impact power of a vehicle without active safety: it hits at test speed.
double passive_mu_pow(const ImpactPowerModel& model, const TestConfig& config,
                      double vut_mass_kg);

// Reads the `impact_model` section (or a bare section object) of a JSON
// campaign config. Unspecified fields keep their defaults.
ImpactPowerModel parse_impact_model(std::string_view json_text);
ImpactPowerModel load_impact_model(const std::string& path);

}  // namespace aeb
