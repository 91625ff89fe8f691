#include "aeb/campaign.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "aeb/error.hpp"

namespace aeb {

std::string_view to_string(Sensor sensor) {
  switch (sensor) {
    case Sensor::Radar:
      return "radar";
    case Sensor::CornerRadar:
      return "corner_radar";
    case Sensor::Camera:
      return "camera";
    case Sensor::Lidar:
      return "lidar";
  }
  return "?";
}

Sensor parse_sensor(std::string_view name) {
  for (auto s : {Sensor::Radar, Sensor::CornerRadar, Sensor::Camera, Sensor::Lidar}) {
    if (to_string(s) == name) return s;
  }
  throw UnknownKeyError("unknown sensor '" + std::string(name) + "'");
}

std::string_view to_string(OutcomeKind kind) {
  switch (kind) {
    case OutcomeKind::Avoided:
      return "avoided";
    case OutcomeKind::Impacted:
      return "impacted";
    case OutcomeKind::JudgedFailed:
      return "judged_failed";
    case OutcomeKind::NotExecuted:
      return "not_executed";
  }
  return "?";
}

OutcomeKind parse_outcome_kind(std::string_view name) {
  for (auto k : {OutcomeKind::Avoided, OutcomeKind::Impacted, OutcomeKind::JudgedFailed,
                 OutcomeKind::NotExecuted}) {
    if (to_string(k) == name) return k;
  }
  throw UnknownKeyError("unknown outcome '" + std::string(name) + "'");
}

std::string_view to_string(PreTest pre_test) {
  return pre_test == PreTest::Passed ? "passed" : "failed";
}

PreTest parse_pre_test(std::string_view name) {
  if (name == "passed") return PreTest::Passed;
  if (name == "failed") return PreTest::Failed;
  throw UnknownKeyError("unknown pre_test value '" + std::string(name) + "'");
}

std::string outcome_violation(const TestOutcome& outcome, const TestConfig& config) {
  switch (outcome.kind) {
    case OutcomeKind::Impacted:
      if (!outcome.impact_speed) return "impacted record without impact_speed";
      if (!std::isfinite(*outcome.impact_speed) || *outcome.impact_speed <= 0.0 ||
          *outcome.impact_speed > config.vut_speed) {
        std::ostringstream out;
        out << "impact_speed " << *outcome.impact_speed << " outside (0, " << config.vut_speed
            << "]";
        return out.str();
      }
      return {};
    case OutcomeKind::Avoided:
      if (outcome.impact_speed) return "avoided record carries an impact_speed";
      return {};
    case OutcomeKind::JudgedFailed:
    case OutcomeKind::NotExecuted:
      if (outcome.impact_speed || outcome.intervention || outcome.projected) {
        return std::string(to_string(outcome.kind)) + " record carries measurements";
      }
      return {};
  }
  return {};
}

const VehicleProfile* CampaignLog::find_vehicle(std::string_view id) const {
  for (const auto& v : vehicles) {
    if (v.id == id) return &v;
  }
  return nullptr;
}

std::vector<std::string> CampaignLog::vehicle_ids() const {
  std::set<std::string> ids;
  for (const auto& v : vehicles) ids.insert(v.id);
  for (const auto& r : records) ids.insert(r.vehicle);
  std::vector<std::string> out(ids.begin(), ids.end());
  std::sort(out.begin(), out.end(),
            [](const std::string& a, const std::string& b) { return natural_less(a, b); });
  return out;
}

double CampaignLog::vehicle_mass(std::string_view id) const {
  const auto* v = find_vehicle(id);
  return v ? v->mass_kg : kDefaultVehicleMassKg;
}

bool natural_less(std::string_view a, std::string_view b) {
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    const bool da = std::isdigit(static_cast<unsigned char>(a[i])) != 0;
    const bool db = std::isdigit(static_cast<unsigned char>(b[j])) != 0;
    if (da && db) {
      std::size_t ei = i, ej = j;
      while (ei < a.size() && std::isdigit(static_cast<unsigned char>(a[ei]))) ++ei;
      while (ej < b.size() && std::isdigit(static_cast<unsigned char>(b[ej]))) ++ej;
      auto na = a.substr(i, ei - i);
      auto nb = b.substr(j, ej - j);
      while (na.size() > 1 && na.front() == '0') na.remove_prefix(1);
      while (nb.size() > 1 && nb.front() == '0') nb.remove_prefix(1);
      if (na.size() != nb.size()) return na.size() < nb.size();
      if (na != nb) return na < nb;
      i = ei;
      j = ej;
    } else {
      if (a[i] != b[j]) return a[i] < b[j];
      ++i;
      ++j;
    }
  }
  if (a.size() - i != b.size() - j) return a.size() - i < b.size() - j;
  return a < b;
}

namespace {

bool stops_series(const TestOutcome& outcome, const RunOptions& options) {
  if (options.stop_on_impact) return outcome.failed();
  return outcome.kind == OutcomeKind::JudgedFailed ||
         (outcome.kind == OutcomeKind::Impacted && !outcome.intervention);
}

}  // namespace

std::vector<TestRecord> run_scenario(BrakingOracle& oracle, const std::string& vehicle,
                                     const ScenarioSpec& spec, int overlap, Light light,
                                     bool requires_pretest, const RunOptions& options) {
  const auto* variant = spec.variant(light);
  if (variant == nullptr ||
      std::find(variant->overlaps.begin(), variant->overlaps.end(), overlap) ==
          variant->overlaps.end()) {
    throw UnknownKeyError(spec.code + ": overlap " + std::to_string(overlap) + " in " +
                          std::string(to_string(light)) + " is not licensed");
  }

  // Group the lattice configs of this (overlap, light) into escalation series.
  std::map<SeriesKey, std::vector<TestConfig>> series;
  for (auto& config : enumerate_configs(spec, light)) {
    if (config.overlap != overlap) continue;
    series[series_key(spec, config)].push_back(std::move(config));
  }

  std::optional<PreTest> pre_test;
  if (requires_pretest) {
    pre_test = oracle.pretest(spec, overlap, light) ? PreTest::Passed : PreTest::Failed;
  }

  std::vector<TestRecord> records;
  for (auto& [key, configs] : series) {
    // enumerate_configs already yields ascending speed within a series.
    bool stopped = pre_test == PreTest::Failed;
    for (auto& config : configs) {
      TestOutcome outcome = TestOutcome::judged_failed();
      if (!stopped) {
        outcome = oracle.respond(config);
        if (outcome.kind == OutcomeKind::NotExecuted) {
          throw OutcomeError(describe(config) + ": oracle returned not_executed");
        }
        if (auto why = outcome_violation(outcome, config); !why.empty()) {
          throw OutcomeError(describe(config) + ": " + why);
        }
        stopped = stops_series(outcome, options);
      }
      records.push_back({vehicle, std::move(config), outcome, pre_test});
    }
  }
  return records;
}

CampaignLog expand_night_judgements(const CampaignLog& log) {
  CampaignLog out = log;
  if (!log.protocol) return out;
  const auto& protocol = *log.protocol;

  std::set<std::pair<std::string, TestConfig>> present;
  for (const auto& r : log.records) present.emplace(r.vehicle, r.config);

  for (const auto& r : log.records) {
    if (r.config.light != Light::Day || !r.outcome.failed()) continue;
    TestConfig night = r.config;
    night.light = Light::Night;
    if (!protocol.contains(night)) continue;
    if (!present.emplace(r.vehicle, night).second) continue;
    out.records.push_back({r.vehicle, std::move(night), TestOutcome::judged_failed(), std::nullopt});
  }
  return out;
}

std::vector<Diagnostic> validate_log(const CampaignLog& log, const RunOptions& options) {
  std::vector<Diagnostic> diagnostics;
  auto report = [&](std::size_t index, const std::string& message) {
    const auto& r = log.records[index];
    diagnostics.push_back(
        {index, "record " + std::to_string(index + 1) + " [" + r.vehicle + " " +
                    describe(r.config) + "]: " + message});
  };

  std::map<std::pair<std::string, TestConfig>, std::size_t> first_seen;
  // Lowest failing speed per (vehicle, series).
  std::map<std::pair<std::string, SeriesKey>, int> failure_speed;
  const bool check_vehicles = !log.vehicles.empty();

  for (std::size_t i = 0; i < log.records.size(); ++i) {
    const auto& r = log.records[i];
    if (check_vehicles && log.find_vehicle(r.vehicle) == nullptr) {
      report(i, "vehicle '" + r.vehicle + "' is not in the vehicle list");
    }
    if (log.protocol && !log.protocol->contains(r.config)) {
      report(i, "configuration is not part of the protocol");
    }
    if (auto why = outcome_violation(r.outcome, r.config); !why.empty()) report(i, why);

    auto [it, inserted] = first_seen.emplace(std::make_pair(r.vehicle, r.config), i);
    if (!inserted) {
      report(i, "duplicate of record " + std::to_string(it->second + 1));
    }

    if (!log.protocol) continue;
    const auto* spec = log.protocol->find(r.config.scenario);
    if (spec == nullptr) continue;
    if (stops_series(r.outcome, options)) {
      auto key = std::make_pair(r.vehicle, series_key(*spec, r.config));
      auto [f, fresh] = failure_speed.emplace(key, r.config.vut_speed);
      if (!fresh) f->second = std::min(f->second, r.config.vut_speed);
    }
  }

  if (log.protocol) {
    for (std::size_t i = 0; i < log.records.size(); ++i) {
      const auto& r = log.records[i];
      if (!r.outcome.executed()) continue;
      const auto* spec = log.protocol->find(r.config.scenario);
      if (spec == nullptr) continue;
      auto f = failure_speed.find({r.vehicle, series_key(*spec, r.config)});
      if (f != failure_speed.end() && r.config.vut_speed > f->second) {
        report(i, "executed above a failure at " + std::to_string(f->second) +
                      " km/h in the same series");
      }
    }
  }

  std::stable_sort(diagnostics.begin(), diagnostics.end(),
                   [](const Diagnostic& a, const Diagnostic& b) {
                     return a.record_index < b.record_index;
                   });
  return diagnostics;
}

int completion_percent(std::size_t expected, std::size_t executed, std::size_t judged) {
  if (expected == 0) return 0;
  const double percent =
      100.0 * static_cast<double>(executed + judged) / static_cast<double>(expected);
  return static_cast<int>(std::lround(percent));
}

std::vector<CompletionStats> completion_stats(const CampaignLog& log) {
  const std::size_t expected = log.protocol ? log.protocol->config_count() : 0;
  std::vector<CompletionStats> stats;
  for (const auto& id : log.vehicle_ids()) {
    CompletionStats s{id, expected, 0, 0, 0};
    for (const auto& r : log.records) {
      if (r.vehicle != id) continue;
      if (r.outcome.executed()) ++s.executed;
      if (r.outcome.kind == OutcomeKind::JudgedFailed) ++s.judged;
    }
    s.completion_percent = completion_percent(s.expected, s.executed, s.judged);
    stats.push_back(std::move(s));
  }
  return stats;
}

}  // namespace aeb
