#pragma once

// Brute-force reference implementations used as oracles by the tests. They
// deliberately avoid the library's incremental bookkeeping: lattices are
// rebuilt from the raw ranges, escalation is a scan over independently
// evaluated speeds, and scores are direct sums over every configuration.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "aeb/campaign.hpp"
#include "aeb/impact.hpp"
#include "aeb/protocol.hpp"
#include "aeb/scoring.hpp"

namespace aeb::ref {

inline std::string data_path(const std::string& name) { return std::string(AEB_DATA_DIR) + "/" + name; }
inline std::string fixture_path(const std::string& name) {
  return std::string(AEB_FIXTURE_DIR) + "/" + name;
}

inline std::shared_ptr<const ProtocolDefinition> bundled_protocol() {
  static const auto protocol =
      std::make_shared<const ProtocolDefinition>(load_protocol(data_path("protocol_swissre.json")));
  return protocol;
}

inline std::vector<int> lattice(const std::vector<SpeedRange>& ranges, int step) {
  std::set<int> speeds;
  for (const auto& r : ranges) {
    for (int v = r.min_kmh; v <= r.max_kmh; v += step) speeds.insert(v);
  }
  return {speeds.begin(), speeds.end()};
}

// Target speed of a lattice speed under paired mode: narrowest containing range.
inline int paired_target(const LightVariant& variant, const std::vector<int>& tg, int v) {
  int best = -1, width = 1 << 30;
  for (std::size_t i = 0; i < variant.vut_speed_ranges.size(); ++i) {
    const auto& r = variant.vut_speed_ranges[i];
    if (v < r.min_kmh || v > r.max_kmh) continue;
    if (r.max_kmh - r.min_kmh < width) {
      width = r.max_kmh - r.min_kmh;
      best = tg[i];
    }
  }
  return best;
}

// Configurations as a list of series, each ascending in VUT speed.
inline std::vector<std::vector<TestConfig>> series_of(const ScenarioSpec& spec, Light light,
                                                      std::optional<int> only_overlap = {}) {
  std::vector<std::vector<TestConfig>> out;
  const auto* variant = spec.variant(light);
  if (variant == nullptr) return out;
  const auto speeds = lattice(variant->vut_speed_ranges, spec.speed_step);
  for (int overlap : variant->overlaps) {
    if (only_overlap && *only_overlap != overlap) continue;
    std::vector<std::optional<int>> crossed{std::nullopt};
    if (spec.tg_mode == TargetSpeedMode::Crossed && !spec.tg_speeds.empty()) {
      crossed.assign(spec.tg_speeds.begin(), spec.tg_speeds.end());
    }
    for (auto tg_cross : crossed) {
      std::vector<TestConfig> s;
      for (int v : speeds) {
        TestConfig c{spec.code, spec.group, v, std::nullopt, overlap, light};
        if (spec.tg_mode == TargetSpeedMode::Crossed) {
          c.tg_speed = tg_cross;
        } else if (spec.tg_mode == TargetSpeedMode::Range) {
          c.tg_speed = spec.tg_speeds.front();
        } else {
          c.tg_speed = paired_target(*variant, spec.tg_speeds, v);
        }
        s.push_back(c);
      }
      out.push_back(std::move(s));
    }
  }
  return out;
}

// Escalation by scanning: every speed is evaluated independently, then the
// first stopping outcome marks everything above it judged.
inline std::vector<TestRecord> brute_force_run(
    const std::function<TestOutcome(const TestConfig&)>& respond, bool pretest_passes,
    const std::string& vehicle, const ScenarioSpec& spec, int overlap, Light light,
    bool requires_pretest, bool stop_on_impact) {
  std::vector<TestRecord> out;
  std::optional<PreTest> pre;
  if (requires_pretest) pre = pretest_passes ? PreTest::Passed : PreTest::Failed;
  for (const auto& s : series_of(spec, light, overlap)) {
    std::vector<TestOutcome> all;
    for (const auto& c : s) all.push_back(respond(c));
    std::size_t stop = s.size();
    for (std::size_t i = 0; i < all.size(); ++i) {
      const auto& o = all[i];
      const bool stops = stop_on_impact ? (o.kind != OutcomeKind::Avoided)
                                        : (o.kind == OutcomeKind::JudgedFailed ||
                                           (o.kind == OutcomeKind::Impacted && !o.intervention));
      if (stops) {
        stop = i;
        break;
      }
    }
    for (std::size_t i = 0; i < s.size(); ++i) {
      const bool executed = pre != PreTest::Failed && i <= stop;
      out.push_back({vehicle, s[i], executed ? all[i] : TestOutcome::judged_failed(), pre});
    }
  }
  return out;
}

// Impact energy written out from first principles, J.
inline double energy(const ImpactPowerModel& model, const TestConfig& c, double m_vut, double v_kmh) {
  const double g = model.geometry == GeometryRule::Linear ? c.overlap / 100.0 : 1.0;
  double v = v_kmh / 3.6;
  if (c.group == ScenarioGroup::C2C) {
    const double m_tg = model.tg_mass_kg.at(ScenarioGroup::C2C);
    if (!model.crossing_scenarios.count(c.scenario) && c.tg_speed) {
      v = std::abs(v_kmh - *c.tg_speed) / 3.6;
    }
    return 0.5 * (m_vut * m_tg / (m_vut + m_tg)) * v * v * g;
  }
  return 0.5 * m_vut * v * v * g;
}

struct Truth {
  TestConfig config;
  TestOutcome outcome;
};

struct RefScores {
  double fs[3];   // nominal, lower, upper
  double mps[3];
  bool any_flip = false;
  bool any_measured_shift = false;
};

// Threshold-shift formulation of the envelope: in each series with failure
// speed v_f (and an avoided test below it) the lower evaluation fails every
// speed >= v_f - shift and the upper evaluation avoids every speed < v_f + shift.
inline RefScores brute_force_scores(const ScenarioSpec& spec, Light light,
                                    const std::vector<Truth>& truth, const ImpactPowerModel& model,
                                    double mass, double shift = 5.0,
                                    const ConfigWeights* weights = nullptr) {
  std::map<TestConfig, TestOutcome> by;
  for (const auto& t : truth) by[t.config] = t.outcome;
  double wsum = 0, fs_n = 0, fs_l = 0, fs_u = 0, passive = 0, e_n = 0, e_l = 0, e_u = 0;
  RefScores r{};
  for (const auto& s : series_of(spec, light)) {
    std::optional<int> vf;
    bool avoided_below = false;
    for (const auto& c : s) {
      if (by.at(c).kind != OutcomeKind::Avoided) {
        vf = c.vut_speed;
        break;
      }
    }
    for (const auto& c : s) {
      if (vf && c.vut_speed < *vf && by.at(c).kind == OutcomeKind::Avoided) avoided_below = true;
    }
    const bool perturb = vf && avoided_below;
    for (const auto& c : s) {
      const auto& o = by.at(c);
      const double w = weights ? weights->weight(c) : 1.0;
      const bool av = o.kind == OutcomeKind::Avoided;
      const bool av_lower = perturb ? (c.vut_speed < *vf - shift) : av;
      const bool av_upper = perturb ? (c.vut_speed < *vf + shift) : av;
      if (av_lower != av || av_upper != av) r.any_flip = true;
      wsum += w;
      fs_n += w * av;
      fs_l += w * av_lower;
      fs_u += w * av_upper;

      const double p = energy(model, c, mass, c.vut_speed);
      passive += w * p;
      auto value = [&](bool avoided_now, int dir) {
        if (avoided_now) return 0.0;
        if (o.kind != OutcomeKind::Impacted) return p;
        const double v = *o.impact_speed;
        const double base = energy(model, c, mass, v);
        if (dir == 0 || !(v < c.vut_speed)) return base;
        if (dir < 0) return std::max(base, energy(model, c, mass, std::min<double>(c.vut_speed, v + shift)));
        return std::min(base, energy(model, c, mass, std::max(0.0, v - shift)));
      };
      if (o.kind == OutcomeKind::Impacted && *o.impact_speed < c.vut_speed) {
        r.any_measured_shift = true;
      }
      e_n += w * value(av, 0);
      e_l += w * value(av_lower, -1);
      e_u += w * value(av_upper, +1);
    }
  }
  r.fs[0] = fs_n / wsum;
  r.fs[1] = fs_l / wsum;
  r.fs[2] = fs_u / wsum;
  r.mps[0] = 1.0 - e_n / passive;
  r.mps[1] = 1.0 - e_l / passive;
  r.mps[2] = 1.0 - e_u / passive;
  return r;
}

// Random escalation-consistent outcomes for a whole (spec, light): each series
// gets a random failure index (or none); above it everything is judged.
inline std::vector<Truth> random_truth(const ScenarioSpec& spec, Light light, std::mt19937_64& rng) {
  std::vector<Truth> out;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (const auto& s : series_of(spec, light)) {
    std::uniform_int_distribution<int> pick(0, static_cast<int>(s.size()));
    const int fail = pick(rng);  // == size: never fails
    for (int i = 0; i < static_cast<int>(s.size()); ++i) {
      const auto& c = s[i];
      TestOutcome o = TestOutcome::avoided();
      if (i == fail) {
        const double u = unit(rng);
        if (u < 0.2) {
          o = TestOutcome::judged_failed();
        } else if (u < 0.4) {
          o = TestOutcome::impacted(c.vut_speed, false);
        } else {
          o = TestOutcome::impacted(std::max(0.1, std::round(unit(rng) * c.vut_speed * 10) / 10),
                                    true, unit(rng) < 0.4);
        }
      } else if (i > fail) {
        o = TestOutcome::judged_failed();
      }
      out.push_back({c, o});
    }
  }
  return out;
}

}  // namespace aeb::ref
