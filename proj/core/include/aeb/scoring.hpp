#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "aeb/campaign.hpp"
#include "aeb/impact.hpp"
#include "aeb/protocol.hpp"

namespace aeb {

// A score with its speed-uncertainty envelope. `lower` and `upper` are the
// evaluations with the failure speed moved down / up by the speed shift;
// mean and std (population) are taken over {lower, nominal, upper}.
struct ScoreValue {
  double nominal = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  double mean = 0.0;
  double std = 0.0;

  static ScoreValue from_triple(double nominal, double lower, double upper);
  static ScoreValue zero() { return {}; }
};

struct ConfigOutcome {
  TestConfig config;
  TestOutcome outcome;
};

// Intra-scenario configuration weights. A rule matches a configuration when
// every field it sets agrees; the first matching rule wins and unmatched
// configurations weigh 1.
class ConfigWeights {
 public:
  struct Rule {
    std::string scenario;
    std::optional<Light> light;
    std::optional<int> overlap;
    std::optional<int> vut_speed;
    std::optional<int> tg_speed;
    double weight = 1.0;
  };

  void add(Rule rule) { rules_.push_back(std::move(rule)); }
  bool empty() const { return rules_.empty(); }
  const std::vector<Rule>& rules() const { return rules_; }
  double weight(const TestConfig& config) const;

 private:
  std::vector<Rule> rules_;
};

struct ScoringOptions {
  // Failure-speed uncertainty applied to the envelope, km/h.
  double speed_shift_kmh = 5.0;
};

// Frequency score for one (scenario, light): weighted fraction of avoided
// configurations (a passive vehicle collides with probability one).
// Throws ScoringError when a configuration of the enumeration has no outcome
// or a weight is not strictly positive.
ScoreValue frequency_score(const ScenarioSpec& spec, Light light,
                           std::span<const ConfigOutcome> outcomes,
                           const ConfigWeights* weights = nullptr,
                           const ScoringOptions& options = {});

// Mitigation power score: 1 - E[mu_pow(x)] / E[mu_pow(passive)] over the
// enumerated configurations. Avoided tests contribute zero impact power and
// judged failures the full passive power.
ScoreValue mitigation_power_score(const ScenarioSpec& spec, Light light,
                                  std::span<const ConfigOutcome> outcomes,
                                  const ImpactPowerModel& model, double vut_mass_kg,
                                  const ConfigWeights* weights = nullptr,
                                  const ScoringOptions& options = {});

struct ScenarioScore {
  std::string vehicle;
  std::string scenario;
  ScenarioGroup group = ScenarioGroup::C2C;
  Light light = Light::Day;
  std::optional<ScoreValue> fs;
  std::optional<ScoreValue> mps;
  std::size_t configs_used = 0;
  // Scenario not licensed in this light, or never tested by this vehicle.
  bool not_applicable = false;
};

// Outcomes of one vehicle for every configuration of (spec, light), after
// filling speeds above a series failure as judged. Empty optional when the
// vehicle has no record at all for the pair. Throws ScoringError when a
// configuration is neither recorded nor implied.
std::optional<std::vector<ConfigOutcome>> scenario_outcomes(const CampaignLog& log,
                                                            const std::string& vehicle,
                                                            const ScenarioSpec& spec, Light light);

// One score per (vehicle, scenario, light), vehicles in natural order, then
// protocol scenario order, then day before night. Night judgements implied by
// day failures are expanded first.
std::vector<ScenarioScore> score_campaign(const CampaignLog& log, const ImpactPowerModel& model,
                                          const ConfigWeights* weights = nullptr,
                                          const ScoringOptions& options = {});

}  // namespace aeb
