#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "aeb/campaign.hpp"
#include "aeb/impact.hpp"
#include "aeb/protocol.hpp"
#include "aeb/scoring.hpp"

namespace aeb {

// (scenario code, light) identifies a weighted scenario instance.
using ScenarioInstance = std::pair<std::string, Light>;

// Regional statistical relevance of each scenario instance.
struct WeightTable {
  std::string region;
  std::map<ScenarioInstance, double> weights;
  // Instances that make up each group, in table order.
  std::map<ScenarioGroup, std::vector<ScenarioInstance>> groups;
  // Optional region-specific weights for configurations inside a scenario.
  ConfigWeights config_weights;

  double weight(const ScenarioInstance& instance) const;
};

// Checks the table against a protocol: every instance exists, belongs to the
// group it is listed under, and every group has positive total weight.
// Throws SchemaError.
void validate_weight_table(const WeightTable& table, const ProtocolDefinition& protocol);

// JSON: {region, weights: [{scenario, light, w}], groups: {C2C: [...], ...},
//        config_weights?: [{scenario, light?, overlap?, vut_speed?, tg_speed?, w}]}
// Group members are {scenario, light} objects or "scenario/light" strings.
// When `groups` is absent every weighted instance joins its protocol group.
WeightTable parse_weight_table(std::string_view json_text, const ProtocolDefinition& protocol);
WeightTable load_weight_table(const std::string& path, const ProtocolDefinition& protocol);

enum class NaPolicy {
  Exclude,    // drop NA instances and renormalize over the rest
  CountZero,  // keep NA instances with score 0
};

// Weighted group frequency score over the instances of `group`. `scores`
// are the scenario scores of a single vehicle. Throws ScoringError when an
// instance has no score or the applicable weight sums to zero.
ScoreValue aggregate_fs(std::span<const ScenarioScore> scores, const WeightTable& table,
                        ScenarioGroup group, NaPolicy policy = NaPolicy::Exclude);

using PassivePowers = std::map<ScenarioInstance, double>;

// Impact-power weighted group mitigation score.
ScoreValue aggregate_mps(std::span<const ScenarioScore> scores, const WeightTable& table,
                         ScenarioGroup group, const PassivePowers& passive_powers,
                         NaPolicy policy = NaPolicy::Exclude);

// mu_pow(s) per scenario instance: configuration-weighted mean passive impact
// power for a vehicle of the given mass.
PassivePowers passive_powers(const ProtocolDefinition& protocol, const ImpactPowerModel& model,
                             double vut_mass_kg, const ConfigWeights* weights = nullptr);

struct GroupScore {
  std::string vehicle;
  ScenarioGroup group = ScenarioGroup::C2C;
  std::string region;
  ScoreValue fs;
  ScoreValue mps;
};

// Group scores of every vehicle in `scores` for one group and region. Under
// NaPolicy::Exclude a vehicle without any applicable instance in the group is
// left out.
std::vector<GroupScore> aggregate_group(std::span<const ScenarioScore> scores,
                                        const CampaignLog& log, const WeightTable& table,
                                        const ImpactPowerModel& model, ScenarioGroup group,
                                        NaPolicy policy = NaPolicy::Exclude);

enum class Metric { Freq, MP };

std::string_view to_string(Metric metric);

// Relative performance rel(x|y) = score(x)/score(y) - 1, kept as a fraction.
struct RelCell {
  enum class Kind { Finite, PosInf };
  Kind kind = Kind::Finite;
  double ratio = 0.0;  // meaningful when Finite; -1 means -100%

  bool finite() const { return kind == Kind::Finite; }
  double percent() const { return ratio * 100.0; }

  friend bool operator==(const RelCell&, const RelCell&) = default;
};

// Both zero -> 0; y = 0 < x -> +inf; x = 0 < y -> -100%. Throws
// std::invalid_argument for negative or non-finite scores.
RelCell relativity(double score_x, double score_y);

struct RelativityMatrix {
  Metric metric = Metric::Freq;
  ScenarioGroup group = ScenarioGroup::C2C;
  std::string region;
  std::vector<std::string> order;  // best first
  std::vector<double> scores;      // nominal scores aligned with `order`
  std::vector<RelCell> cells;      // row-major, cells[row * n + col] = rel(row | col)

  std::size_t size() const { return order.size(); }
  const RelCell& at(std::size_t row, std::size_t col) const { return cells[row * size() + col]; }
};

// Rows and columns ranked by descending nominal score, ties by natural
// vehicle id order.
RelativityMatrix build_matrix(std::span<const GroupScore> group_scores, Metric metric);

}  // namespace aeb
