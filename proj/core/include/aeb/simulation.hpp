#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "aeb/campaign.hpp"
#include "aeb/protocol.hpp"

namespace aeb {

// Explicit failure thresholds: every configuration matching a rule fails at
// and above `fail_speed`; below it the test is avoided.
struct ThresholdRule {
  std::string scenario;
  std::optional<Light> light;
  std::optional<int> overlap;
  int fail_speed = 0;
  // Impact speed as a fraction of test speed for failed tests; 1 = no braking.
  double impact_fraction = 1.0;
};

// Kinematic braking model: the AEB sees the target at a detection range,
// reacts after a latency and brakes at constant deceleration.
struct ParametricBraking {
  double decel_mps2 = 9.0;
  double latency_s = 0.3;
  double day_range_m = 40.0;
  double night_range_m = 25.0;
  double max_response_kmh = 130.0;  // no activation above this closing speed
  double range_jitter_m = 0.0;      // uniform +- jitter, seeded per test
  std::map<ScenarioGroup, double> group_factor;
  std::map<std::string, double> scenario_factor;
};

struct VehicleOracleSpec {
  enum class Kind { AvoidAll, Passive, Thresholds, Parametric };

  VehicleProfile profile;
  Kind kind = Kind::AvoidAll;
  std::vector<ThresholdRule> thresholds;
  std::optional<int> default_fail_speed;  // thresholds: for unmatched configs
  ParametricBraking braking;
  std::set<std::string> pretest_fail;  // scenario codes whose pre-test fails
  // "CODE" skips a scenario, "CODE/day" or "CODE/night" one light of it.
  std::set<std::string> skip;
};

struct OracleSpec {
  std::optional<std::uint64_t> seed;
  RunOptions run_options;
  std::set<std::string> moving_target_scenarios = {"CCRm", "CPLA", "CBLA"};
  std::vector<VehicleOracleSpec> vehicles;
};

// Throws SchemaError; UnknownKeyError when a rule names a scenario the
// protocol does not define.
OracleSpec parse_oracle_spec(std::string_view json_text, const ProtocolDefinition& protocol);
OracleSpec load_oracle_spec(const std::string& path, const ProtocolDefinition& protocol);

// Oracle for one vehicle; deterministic for a given seed.
std::unique_ptr<BrakingOracle> make_oracle(const VehicleOracleSpec& vehicle,
                                           const OracleSpec& spec, std::uint64_t seed);

// Runs the full escalation procedure for every vehicle and scenario setting.
// Day series run first; a night series stops (judged) at the speed where the
// matching day series failed.
CampaignLog simulate_campaign(std::shared_ptr<const ProtocolDefinition> protocol,
                              const OracleSpec& spec, std::uint64_t seed);

// Stable 64-bit FNV-1a, used to derive per-test random streams.
std::uint64_t fnv1a64(std::string_view text, std::uint64_t basis = 14695981039346656037ULL);

}  // namespace aeb
