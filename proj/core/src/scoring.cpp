#include "aeb/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "aeb/error.hpp"

namespace aeb {

ScoreValue ScoreValue::from_triple(double nominal, double lower, double upper) {
  ScoreValue v{nominal, lower, upper, 0.0, 0.0};
  v.mean = nominal + ((lower - nominal) + (upper - nominal)) / 3.0;
  const double dl = lower - v.mean;
  const double dn = nominal - v.mean;
  const double du = upper - v.mean;
  v.std = std::sqrt((dl * dl + dn * dn + du * du) / 3.0);
  return v;
}

double ConfigWeights::weight(const TestConfig& config) const {
  for (const auto& rule : rules_) {
    if (rule.scenario != config.scenario) continue;
    if (rule.light && *rule.light != config.light) continue;
    if (rule.overlap && *rule.overlap != config.overlap) continue;
    if (rule.vut_speed && *rule.vut_speed != config.vut_speed) continue;
    if (rule.tg_speed && rule.tg_speed != config.tg_speed) continue;
    return rule.weight;
  }
  return 1.0;
}

namespace {

// Per-configuration view used by both scores, in enumeration order.
struct Entry {
  const TestConfig* config = nullptr;
  const TestOutcome* outcome = nullptr;
  double weight = 1.0;
  bool flips_to_failed = false;   // under the lower (-shift) evaluation
  bool flips_to_avoided = false;  // under the upper (+shift) evaluation
};

std::vector<Entry> prepare(const ScenarioSpec& spec, Light light,
                           std::span<const ConfigOutcome> outcomes, const ConfigWeights* weights,
                           const ScoringOptions& options) {
  const auto configs = enumerate_configs(spec, light);
  if (configs.empty()) {
    throw ScoringError(spec.code + " is not licensed in " + std::string(to_string(light)));
  }

  std::map<TestConfig, const ConfigOutcome*> by_config;
  for (const auto& o : outcomes) {
    if (o.outcome.kind == OutcomeKind::NotExecuted) continue;
    if (!by_config.emplace(o.config, &o).second) {
      throw ScoringError(describe(o.config) + ": duplicate outcome");
    }
  }

  std::vector<Entry> entries;
  entries.reserve(configs.size());
  for (const auto& config : configs) {
    auto it = by_config.find(config);
    if (it == by_config.end()) throw ScoringError(describe(config) + ": missing outcome");
    Entry e;
    e.config = &it->second->config;
    e.outcome = &it->second->outcome;
    e.weight = weights ? weights->weight(config) : 1.0;
    if (!(e.weight > 0.0) || !std::isfinite(e.weight)) {
      throw ScoringError(describe(config) + ": configuration weight must be > 0");
    }
    entries.push_back(e);
  }
  if (by_config.size() != entries.size()) {
    throw ScoringError(spec.code + ": outcomes for configurations outside the enumeration");
  }

  // Failure speed per series: the lowest speed whose outcome is not avoided.
  // The envelope only applies to series that avoided at least one test below
  // their failure; a series that never responded stays at its passive value.
  std::map<SeriesKey, std::vector<Entry*>> series;
  for (auto& e : entries) series[series_key(spec, *e.config)].push_back(&e);
  const double shift = options.speed_shift_kmh;
  for (auto& [key, members] : series) {
    std::optional<int> failure;
    for (const auto* e : members) {
      if (e->outcome->failed() && (!failure || e->config->vut_speed < *failure)) {
        failure = e->config->vut_speed;
      }
    }
    if (!failure) continue;
    const bool avoided_below = std::any_of(members.begin(), members.end(), [&](const Entry* e) {
      return e->outcome->kind == OutcomeKind::Avoided && e->config->vut_speed < *failure;
    });
    if (!avoided_below) continue;
    for (auto* e : members) {
      const double v = e->config->vut_speed;
      if (e->outcome->kind == OutcomeKind::Avoided && v >= *failure - shift && v < *failure) {
        e->flips_to_failed = true;
      }
      if (e->outcome->failed() && v >= *failure && v < *failure + shift) {
        e->flips_to_avoided = true;
      }
    }
  }
  return entries;
}

}  // namespace

ScoreValue frequency_score(const ScenarioSpec& spec, Light light,
                           std::span<const ConfigOutcome> outcomes, const ConfigWeights* weights,
                           const ScoringOptions& options) {
  const auto entries = prepare(spec, light, outcomes, weights, options);
  double total = 0.0, nominal = 0.0, lower = 0.0, upper = 0.0;
  for (const auto& e : entries) {
    total += e.weight;
    const bool avoided = e.outcome->kind == OutcomeKind::Avoided;
    if (avoided) nominal += e.weight;
    if (avoided && !e.flips_to_failed) lower += e.weight;
    if (avoided || e.flips_to_avoided) upper += e.weight;
  }
  return ScoreValue::from_triple(nominal / total, lower / total, upper / total);
}

ScoreValue mitigation_power_score(const ScenarioSpec& spec, Light light,
                                  std::span<const ConfigOutcome> outcomes,
                                  const ImpactPowerModel& model, double vut_mass_kg,
                                  const ConfigWeights* weights, const ScoringOptions& options) {
  const auto entries = prepare(spec, light, outcomes, weights, options);
  const double shift = options.speed_shift_kmh;
  double passive_total = 0.0, nominal = 0.0, lower = 0.0, upper = 0.0;
  for (const auto& e : entries) {
    const auto& config = *e.config;
    const auto& outcome = *e.outcome;
    const double passive = passive_mu_pow(model, config, vut_mass_kg);
    passive_total += e.weight * passive;

    double base = 0.0;
    double worse = 0.0;   // lower score: more impact power
    double better = 0.0;  // upper score: less impact power
    switch (outcome.kind) {
      case OutcomeKind::Avoided:
        base = better = 0.0;
        worse = e.flips_to_failed ? passive : 0.0;
        break;
      case OutcomeKind::JudgedFailed:
        base = worse = passive;
        better = e.flips_to_avoided ? 0.0 : passive;
        break;
      case OutcomeKind::Impacted: {
        if (!outcome.impact_speed) throw ScoringError(describe(config) + ": missing impact_speed");
        const double v = *outcome.impact_speed;
        base = mu_pow(model, config, vut_mass_kg, v);
        worse = better = base;
        // Only measured speed reductions carry a speed uncertainty; an
        // impact at full test speed is the passive outcome.
        if (v < config.vut_speed) {
          worse = std::max(base, mu_pow(model, config, vut_mass_kg,
                                        std::min<double>(config.vut_speed, v + shift)));
          better = std::min(base, mu_pow(model, config, vut_mass_kg, std::max(0.0, v - shift)));
        }
        if (e.flips_to_avoided) better = 0.0;
        break;
      }
      case OutcomeKind::NotExecuted:
        throw ScoringError(describe(config) + ": not executed");
    }
    nominal += e.weight * base;
    lower += e.weight * worse;
    upper += e.weight * better;
  }
  if (!(passive_total > 0.0)) {
    throw ScoringError(spec.code + ": passive impact power is zero for every configuration");
  }
  return ScoreValue::from_triple(1.0 - nominal / passive_total, 1.0 - lower / passive_total,
                                 1.0 - upper / passive_total);
}

std::optional<std::vector<ConfigOutcome>> scenario_outcomes(const CampaignLog& log,
                                                            const std::string& vehicle,
                                                            const ScenarioSpec& spec, Light light) {
  std::map<TestConfig, const TestOutcome*> recorded;
  for (const auto& r : log.records) {
    if (r.vehicle != vehicle || r.config.scenario != spec.code || r.config.light != light) continue;
    if (r.outcome.kind == OutcomeKind::NotExecuted) continue;
    recorded.emplace(r.config, &r.outcome);
  }
  if (recorded.empty()) return std::nullopt;

  std::map<SeriesKey, int> failure;
  for (const auto& [config, outcome] : recorded) {
    if (!outcome->failed()) continue;
    auto key = series_key(spec, config);
    auto [it, fresh] = failure.emplace(key, config.vut_speed);
    if (!fresh) it->second = std::min(it->second, config.vut_speed);
  }

  std::vector<ConfigOutcome> out;
  for (auto& config : enumerate_configs(spec, light)) {
    if (auto it = recorded.find(config); it != recorded.end()) {
      out.push_back({config, *it->second});
      continue;
    }
    auto f = failure.find(series_key(spec, config));
    if (f != failure.end() && config.vut_speed > f->second) {
      out.push_back({config, TestOutcome::judged_failed()});
      continue;
    }
    throw ScoringError("vehicle " + vehicle + ", " + describe(config) +
                       ": no outcome recorded or implied");
  }
  return out;
}

std::vector<ScenarioScore> score_campaign(const CampaignLog& log, const ImpactPowerModel& model,
                                          const ConfigWeights* weights,
                                          const ScoringOptions& options) {
  if (!log.protocol) throw ScoringError("campaign log has no protocol");
  const CampaignLog expanded = expand_night_judgements(log);
  std::vector<ScenarioScore> scores;
  for (const auto& vehicle : expanded.vehicle_ids()) {
    const double mass = expanded.vehicle_mass(vehicle);
    for (const auto& spec : expanded.protocol->scenarios()) {
      for (Light light : kAllLights) {
        ScenarioScore score{vehicle, spec.code, spec.group, light, {}, {}, 0, true};
        if (spec.licenses(light)) {
          if (auto outcomes = scenario_outcomes(expanded, vehicle, spec, light)) {
            score.not_applicable = false;
            score.configs_used = outcomes->size();
            score.fs = frequency_score(spec, light, *outcomes, weights, options);
            score.mps =
                mitigation_power_score(spec, light, *outcomes, model, mass, weights, options);
          }
        }
        scores.push_back(std::move(score));
      }
    }
  }
  return scores;
}

}  // namespace aeb
