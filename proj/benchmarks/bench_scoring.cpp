#include <benchmark/benchmark.h>

#include <random>
#include <string>

#include "aeb/aggregation.hpp"
#include "aeb/report.hpp"
#include "aeb/scoring.hpp"
#include "aeb/simulation.hpp"

namespace {

std::shared_ptr<const aeb::ProtocolDefinition> protocol() {
  static const auto p = std::make_shared<const aeb::ProtocolDefinition>(
      aeb::load_protocol(std::string(AEB_DATA_DIR) + "/protocol_swissre.json"));
  return p;
}

aeb::OracleSpec fleet(int vehicles) {
  aeb::OracleSpec spec;
  for (int i = 0; i < vehicles; ++i) {
    aeb::VehicleOracleSpec v;
    v.profile.id = std::to_string(i + 1);
    v.kind = aeb::VehicleOracleSpec::Kind::Parametric;
    v.braking.day_range_m = 30.0 + 2.0 * i;
    v.braking.night_range_m = 15.0 + 1.5 * i;
    v.braking.range_jitter_m = 4.0;
    spec.vehicles.push_back(v);
  }
  return spec;
}

void BM_EnumerateProtocol(benchmark::State& state) {
  const auto p = protocol();
  for (auto _ : state) benchmark::DoNotOptimize(aeb::enumerate_configs(*p));
}
BENCHMARK(BM_EnumerateProtocol);

void BM_SimulateCampaign(benchmark::State& state) {
  const auto spec = fleet(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(aeb::simulate_campaign(protocol(), spec, 1));
}
BENCHMARK(BM_SimulateCampaign)->Arg(1)->Arg(13);

void BM_ScoreCampaign(benchmark::State& state) {
  const auto log = aeb::simulate_campaign(protocol(), fleet(static_cast<int>(state.range(0))), 1);
  const aeb::ImpactPowerModel model;
  for (auto _ : state) benchmark::DoNotOptimize(aeb::score_campaign(log, model));
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(log.records.size()));
}
BENCHMARK(BM_ScoreCampaign)->Arg(1)->Arg(13)->Arg(64);

void BM_BuildMatrix(benchmark::State& state) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<aeb::GroupScore> scores;
  for (int i = 0; i < state.range(0); ++i) {
    const double s = unit(rng);
    scores.push_back({std::to_string(i), aeb::ScenarioGroup::C2C, "EU",
                      aeb::ScoreValue::from_triple(s, s, s), aeb::ScoreValue::from_triple(s, s, s)});
  }
  for (auto _ : state) {
    const auto m = aeb::build_matrix(scores, aeb::Metric::Freq);
    benchmark::DoNotOptimize(aeb::render(m, aeb::ReportFormat::Csv));
  }
}
BENCHMARK(BM_BuildMatrix)->Arg(13)->Arg(100)->Arg(500);

}  // namespace

BENCHMARK_MAIN();
