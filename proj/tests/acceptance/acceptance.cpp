// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
// failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "aeb/aggregation.hpp"
#include "aeb/campaign.hpp"
#include "aeb/report.hpp"
#include "aeb/scoring.hpp"
#include "aeb/simulation.hpp"
#include "cli.hpp"
#include "reference.hpp"

namespace fs = std::filesystem;
using namespace aeb;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& why) {
    if (!ok && pass) {
      pass = false;
      detail = why;
    }
  }
};

int failures = 0;

void criterion(int id, const char* title, double budget_s, const std::function<Outcome()>& body) {
  const auto start = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o.pass = false;
    o.detail = std::string("exception: ") + e.what();
  }
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (elapsed > budget_s) o.require(false, "took longer than the time budget");
  if (!o.pass) ++failures;
  std::printf("AC%-2d %s  %s (%.3f s / %.0f s)%s%s\n", id, o.pass ? "PASS" : "FAIL", title, elapsed,
              budget_s, o.detail.empty() ? "" : "  -- ", o.detail.c_str());
  std::fflush(stdout);
}

std::string str(double v) {
  std::ostringstream s;
  s.precision(17);
  s << v;
  return s.str();
}

// A campaign over a random subset of scenario instances for a few vehicles.
// Every series follows the escalation rule; some judged records above a
// failure are left out so the scorer has to imply them.
struct RandomCampaign {
  CampaignLog log;
  std::map<std::tuple<std::string, std::string, Light>, std::vector<ref::Truth>> truth;
};

RandomCampaign random_campaign(std::mt19937_64& rng) {
  const auto p = ref::bundled_protocol();
  RandomCampaign c;
  c.log.protocol = p;
  const int vehicles = 1 + static_cast<int>(rng() % 3);
  for (int v = 0; v < vehicles; ++v) {
    VehicleProfile profile;
    profile.id = std::to_string(v + 1);
    profile.mass_kg = 900.0 + static_cast<double>(rng() % 1600);
    c.log.vehicles.push_back(profile);
    for (const auto& spec : p->scenarios()) {
      if (rng() % 4 == 0) continue;
      for (Light light : kAllLights) {
        if (!spec.licenses(light)) continue;
        auto t = ref::random_truth(spec, light, rng);
        std::map<SeriesKey, int> failure;
        for (const auto& x : t) {
          if (!x.outcome.failed()) continue;
          auto [it, fresh] = failure.emplace(series_key(spec, x.config), x.config.vut_speed);
          if (!fresh) it->second = std::min(it->second, x.config.vut_speed);
        }
        for (const auto& x : t) {
          auto f = failure.find(series_key(spec, x.config));
          const bool implied = f != failure.end() && x.config.vut_speed > f->second;
          if (implied && rng() % 2 == 0) continue;
          c.log.records.push_back({profile.id, x.config, x.outcome, std::nullopt});
        }
        c.truth[{profile.id, spec.code, light}] = std::move(t);
      }
    }
  }
  std::shuffle(c.log.records.begin(), c.log.records.end(), rng);
  return c;
}

bool close(double a, double b, double tol) { return std::abs(a - b) <= tol; }

std::string read_tree(const fs::path& root) {
  std::string all;
  std::set<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) files.insert(fs::relative(e.path(), root));
  }
  for (const auto& f : files) {
    all += "== " + f.string() + "\n" + read_text_file((root / f).string());
  }
  return all;
}

int cli_run(std::vector<std::string> args) {
  std::ostringstream out, err;
  return cli::run(args, out, err);
}

}  // namespace

int main() {
  const auto protocol = ref::bundled_protocol();

  criterion(1, "protocol enumeration: 224 configs, CCRm day 32 / night 8", 1.0, [&] {
    Outcome o;
    const auto all = enumerate_configs(*protocol);
    const auto day = enumerate_configs(*protocol, {std::string("CCRm"), Light::Day, std::nullopt});
    const auto night =
        enumerate_configs(*protocol, {std::string("CCRm"), Light::Night, std::nullopt});
    o.require(all.size() == 224, "total = " + std::to_string(all.size()));
    o.require(day.size() == 32, "CCRm day = " + std::to_string(day.size()));
    o.require(night.size() == 8, "CCRm night = " + std::to_string(night.size()));
    o.require(std::set<TestConfig>(all.begin(), all.end()).size() == 224, "duplicates");
    return o;
  });

  criterion(2, "completion rate reproduces all 13 rows of the campaign table", 1.0, [&] {
    struct Row {
      const char* id;
      std::size_t executed, judged;
      int percent;
    };
    const Row rows[] = {{"1A", 105, 5, 49}, {"1B", 57, 9, 29},  {"2", 26, 15, 18},
                        {"3", 35, 12, 21},  {"4", 83, 5, 39},   {"5", 29, 12, 18},
                        {"6", 161, 0, 72},  {"7A", 61, 9, 31},  {"7B", 100, 8, 48},
                        {"8", 56, 8, 29},   {"9", 91, 4, 42},   {"10", 62, 6, 30},
                        {"11", 65, 10, 33}};
    Outcome o;
    const auto configs = enumerate_configs(*protocol);
    CampaignLog log{protocol, {}, {}};
    for (const auto& r : rows) {
      for (std::size_t i = 0; i < r.executed + r.judged; ++i) {
        log.records.push_back({r.id, configs[i],
                               i < r.executed ? TestOutcome::avoided() : TestOutcome::judged_failed(),
                               std::nullopt});
      }
    }
    const auto stats = completion_stats(log);
    o.require(stats.size() == 13, "vehicle count");
    for (const auto& r : rows) {
      const auto it = std::find_if(stats.begin(), stats.end(),
                                   [&](const CompletionStats& s) { return s.vehicle == r.id; });
      o.require(it != stats.end() && it->completion_percent == r.percent,
                std::string("ID ") + r.id);
    }
    return o;
  });

  criterion(3, "relativity reciprocity: published pair within 2e-3, 10000 random vectors within 1e-9",
            5.0, [&] {
              Outcome o;
              const double published = (1.0 + 0.1286) * (1.0 - 0.1139);
              o.require(close(published, 1.0, 2e-3), "published product " + str(published));
              std::mt19937_64 rng(1);
              std::uniform_real_distribution<double> unit(1e-3, 1.0);
              for (int trial = 0; trial < 10000 && o.pass; ++trial) {
                std::vector<GroupScore> g;
                const int n = 2 + static_cast<int>(rng() % 12);
                for (int i = 0; i < n; ++i) {
                  const double s = unit(rng);
                  g.push_back({std::to_string(i), ScenarioGroup::C2C, "EU",
                               ScoreValue::from_triple(s, s, s), ScoreValue::from_triple(s, s, s)});
                }
                const auto m = build_matrix(g, Metric::Freq);
                for (std::size_t i = 0; i < m.size(); ++i) {
                  for (std::size_t j = 0; j < m.size(); ++j) {
                    const double prod = (1 + m.at(i, j).ratio) * (1 + m.at(j, i).ratio);
                    o.require(close(prod, 1.0, 1e-9), "trial " + std::to_string(trial));
                  }
                }
              }
              return o;
            });

  criterion(4, "degenerate rows: zero scores give -100% rows, inf columns, 0 between zeros", 1.0,
            [&] {
              Outcome o;
              std::mt19937_64 rng(2);
              std::uniform_real_distribution<double> unit(1e-3, 1.0);
              for (int trial = 0; trial < 2000 && o.pass; ++trial) {
                std::vector<GroupScore> g;
                const int n = 1 + static_cast<int>(rng() % 13);
                for (int i = 0; i < n; ++i) {
                  const double s = rng() % 3 == 0 ? 0.0 : unit(rng);
                  g.push_back({std::to_string(i), ScenarioGroup::C2C, "EU",
                               ScoreValue::from_triple(s, s, s), ScoreValue::from_triple(s, s, s)});
                }
                const auto m = build_matrix(g, Metric::Freq);
                for (std::size_t i = 0; i < m.size(); ++i) {
                  for (std::size_t j = 0; j < m.size(); ++j) {
                    const auto& c = m.at(i, j);
                    const bool zi = m.scores[i] == 0.0, zj = m.scores[j] == 0.0;
                    if (zi && zj) o.require(c == RelCell{RelCell::Kind::Finite, 0.0}, "zero/zero");
                    if (zi && !zj) {
                      o.require(c.finite() && c.ratio == -1.0, "zero row");
                      o.require(format_percent_cell(c) == "-100.00%", "zero row text");
                    }
                    if (!zi && zj) {
                      o.require(c.kind == RelCell::Kind::PosInf, "zero column");
                      o.require(format_percent_cell(c) == "inf", "zero column text");
                    }
                  }
                }
              }
              return o;
            });

  criterion(5, "procedure engine equals the scanning reference on 1000 random oracles", 10.0, [&] {
    Outcome o;
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 1000 && o.pass; ++trial) {
      const auto& spec = protocol->scenarios()[rng() % protocol->scenarios().size()];
      std::vector<Light> lights;
      for (Light l : kAllLights) {
        if (spec.licenses(l)) lights.push_back(l);
      }
      const Light light = lights[rng() % lights.size()];
      const auto& overlaps = spec.variant(light)->overlaps;
      const int overlap = overlaps[rng() % overlaps.size()];
      const std::uint64_t salt = rng();
      const int avoid_bias = static_cast<int>(rng() % 8);
      auto respond = [salt, avoid_bias](const TestConfig& c) {
        std::mt19937_64 local(fnv1a64(describe(c), salt));
        const int roll = static_cast<int>(local() % 10);
        if (roll < avoid_bias) return TestOutcome::avoided();
        if (roll % 3 == 0) return TestOutcome::judged_failed();
        if (roll % 3 == 1) return TestOutcome::impacted(c.vut_speed, false);
        return TestOutcome::impacted(std::max(0.1, c.vut_speed * (local() % 100) / 100.0), true);
      };
      const bool pass = rng() % 4 != 0;
      const bool requires_pretest = spec.requires_pretest || rng() % 5 == 0;
      const bool stop = rng() % 3 != 0;
      FunctionOracle oracle(respond, [pass](const ScenarioSpec&, int, Light) { return pass; });
      auto got = run_scenario(oracle, "V", spec, overlap, light, requires_pretest, {stop});
      auto want =
          ref::brute_force_run(respond, pass, "V", spec, overlap, light, requires_pretest, stop);
      auto by_config = [](const TestRecord& a, const TestRecord& b) { return a.config < b.config; };
      std::sort(got.begin(), got.end(), by_config);
      std::sort(want.begin(), want.end(), by_config);
      o.require(got == want, "trial " + std::to_string(trial) + " " + spec.code);

      // judged + executed partition the lattice of this setting exactly.
      std::set<TestConfig> lattice, seen;
      for (const auto& s : ref::series_of(spec, light, overlap)) lattice.insert(s.begin(), s.end());
      std::size_t executed = 0, judged = 0;
      for (const auto& r : got) {
        seen.insert(r.config);
        executed += r.outcome.executed();
        judged += r.outcome.kind == OutcomeKind::JudgedFailed;
      }
      o.require(seen == lattice && executed + judged == lattice.size() &&
                    got.size() == lattice.size(),
                "partition, trial " + std::to_string(trial));
    }
    return o;
  });

  const ImpactPowerModel model;

  criterion(6, "FS and MPS equal a brute-force summation on 1000 random logs within 1e-12", 10.0,
            [&] {
              Outcome o;
              std::mt19937_64 rng(4);
              std::size_t compared = 0;
              for (int trial = 0; trial < 1000 && o.pass; ++trial) {
                const auto c = random_campaign(rng);
                for (const auto& s : score_campaign(c.log, model)) {
                  const auto it = c.truth.find({s.vehicle, s.scenario, s.light});
                  if (it == c.truth.end()) {
                    o.require(s.not_applicable, "score without records");
                    continue;
                  }
                  const auto& spec = protocol->at(s.scenario);
                  const auto want = ref::brute_force_scores(spec, s.light, it->second, model,
                                                            c.log.vehicle_mass(s.vehicle));
                  const double got_fs[] = {s.fs->nominal, s.fs->lower, s.fs->upper};
                  const double got_mps[] = {s.mps->nominal, s.mps->lower, s.mps->upper};
                  for (int k = 0; k < 3; ++k) {
                    o.require(close(got_fs[k], want.fs[k], 1e-12),
                              "FS " + s.scenario + " trial " + std::to_string(trial));
                    o.require(close(got_mps[k], want.mps[k], 1e-12),
                              "MPS " + s.scenario + " trial " + std::to_string(trial));
                  }
                  ++compared;
                }
              }
              o.require(compared > 10000, "too few scores compared");
              return o;
            });

  criterion(7, "MPS analytic values: 0.75, 1, 0 and mass-rescaling invariance within 1e-12", 1.0,
            [&] {
              Outcome o;
              for (const auto& spec : protocol->scenarios()) {
                if (spec.group != ScenarioGroup::C2VRU) continue;
                for (Light light : kAllLights) {
                  const auto configs = enumerate_configs(spec, light);
                  if (configs.empty()) continue;
                  // Single configuration, impact at half the test speed.
                  ScenarioSpec single = spec;
                  for (auto& v : single.variants) {
                    v.vut_speed_ranges = {{configs.front().vut_speed, configs.front().vut_speed}};
                    v.overlaps = {configs.front().overlap};
                  }
                  single.tg_mode = TargetSpeedMode::Range;
                  single.tg_speeds.clear();
                  TestConfig c = configs.front();
                  c.tg_speed.reset();
                  const std::vector<ConfigOutcome> half = {
                      {c, TestOutcome::impacted(c.vut_speed / 2.0, true)}};
                  const auto v = mitigation_power_score(single, light, half, model, 1500.0);
                  o.require(v.nominal == 0.75, spec.code + " half speed gave " + str(v.nominal));

                  std::vector<ConfigOutcome> avoided, passive;
                  for (const auto& x : configs) {
                    avoided.push_back({x, TestOutcome::avoided()});
                    passive.push_back({x, TestOutcome::impacted(x.vut_speed, false)});
                  }
                  o.require(mitigation_power_score(spec, light, avoided, model, 1500.0).nominal == 1.0,
                            spec.code + " all avoided");
                  o.require(mitigation_power_score(spec, light, passive, model, 1500.0).nominal == 0.0,
                            spec.code + " no braking");
                }
              }
              // Rescaling every mass (vehicles and targets) leaves MPS unchanged.
              std::mt19937_64 rng(7);
              ImpactPowerModel scaled = model;
              for (auto& [group, mass] : scaled.tg_mass_kg) mass *= 2.0;
              for (int trial = 0; trial < 50; ++trial) {
                auto c = random_campaign(rng);
                const auto base = score_campaign(c.log, model);
                for (auto& v : c.log.vehicles) v.mass_kg *= 2.0;
                const auto heavy = score_campaign(c.log, scaled);
                for (std::size_t i = 0; i < base.size(); ++i) {
                  if (!base[i].mps) continue;
                  o.require(close(base[i].mps->nominal, heavy[i].mps->nominal, 1e-12) &&
                                close(base[i].mps->lower, heavy[i].mps->lower, 1e-12) &&
                                close(base[i].mps->upper, heavy[i].mps->upper, 1e-12),
                            "rescaling changed " + base[i].scenario);
                }
              }
              return o;
            });

  criterion(8, "envelope brackets the nominal; std = 0 when no outcome flips", 5.0, [&] {
    Outcome o;
    std::mt19937_64 rng(8);
    std::size_t flat = 0;
    for (int trial = 0; trial < 300 && o.pass; ++trial) {
      const auto c = random_campaign(rng);
      for (const auto& s : score_campaign(c.log, model)) {
        if (s.not_applicable) continue;
        for (const auto* v : {&*s.fs, &*s.mps}) {
          o.require(std::min(v->lower, v->upper) <= v->nominal &&
                        std::max(v->lower, v->upper) >= v->nominal,
                    "bracket " + s.scenario);
        }
        const auto& truth = c.truth.at({s.vehicle, s.scenario, s.light});
        const auto want = ref::brute_force_scores(protocol->at(s.scenario), s.light, truth, model,
                                                  c.log.vehicle_mass(s.vehicle));
        if (!want.any_flip) {
          ++flat;
          o.require(s.fs->std == 0.0, "FS std without a flip " + s.scenario);
          // Measured impact speeds carry their own +-5 km/h shift.
          if (!want.any_measured_shift) {
            o.require(s.mps->std == 0.0, "MPS std without a flip " + s.scenario);
          }
        }
      }
    }
    o.require(flat > 0, "no flip-free scores generated");
    return o;
  });

  criterion(9, "golden tables: score cells byte-identical (0.9\xC2\xB1" "0.07, NA)", 5.0, [&] {
    Outcome o;
    const fs::path out = fs::path(AEB_TEST_TMP) / "acceptance_golden";
    fs::remove_all(out);
    const std::string golden = ref::fixture_path("golden");
    const int code = cli_run({"score", "--protocol", ref::data_path("protocol_swissre.json"),
                              "--log", golden + "/log.jsonl", "--vehicles",
                              golden + "/vehicles.json", "--weights", golden + "/weights.json",
                              "--out", out.string()});
    o.require(code == 0, "score exit code " + std::to_string(code));
    for (const char* name : {"FREQ_SCORE_MEAN_DAY_EU.csv", "FREQ_SCORE_MEAN_NIGHT_EU.csv",
                             "MIT_POW_DAY_EU.csv", "MIT_POW_NIGHT_EU.csv"}) {
      o.require(read_text_file((out / name).string()) ==
                    read_text_file(golden + "/expected/" + name),
                std::string(name) + " differs");
    }
    const auto night = read_text_file((out / "FREQ_SCORE_MEAN_NIGHT_EU.csv").string());
    o.require(night.find(",0.9\xC2\xB1" "0.07,") != std::string::npos, "0.9\xC2\xB1" "0.07 cell");
    o.require(night.find(",NA") != std::string::npos, "NA cell");
    return o;
  });

  criterion(10, "end-to-end determinism: simulate -> validate -> score -> compare twice", 30.0, [&] {
    Outcome o;
    const std::string p = ref::data_path("protocol_swissre.json");
    const std::string oracle = ref::fixture_path("e2e_oracle.json");
    std::string trees[2];
    for (int run = 0; run < 2; ++run) {
      const fs::path root = fs::path(AEB_TEST_TMP) / ("acceptance_e2e_" + std::to_string(run));
      fs::remove_all(root);
      const std::string log = (root / "campaign.jsonl").string();
      o.require(cli_run({"simulate", "--protocol", p, "--oracle", oracle, "--seed", "11", "--out",
                         root.string()}) == 0,
                "simulate");
      o.require(cli_run({"validate", "--protocol", p, "--log", log, "--vehicles", oracle}) == 0,
                "validate");
      for (const char* cmd : {"score", "compare"}) {
        o.require(cli_run({cmd, "--protocol", p, "--log", log, "--vehicles", oracle, "--weights",
                           ref::data_path("weights_eu_synthetic.json"), "--weights",
                           ref::data_path("weights_us_synthetic.json"), "--format",
                           "csv,markdown,html", "--out", (root / "reports").string()}) == 0,
                  cmd);
      }
      trees[run] = read_tree(root);
    }
    o.require(!trees[0].empty() && trees[0] == trees[1], "output trees differ");
    return o;
  });

  std::printf("%s: %d of 10 criteria failed\n", failures ? "FAIL" : "PASS", failures);
  return failures ? 1 : 0;
}
