#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "domar/agg.hpp"
#include "domar/dyn.hpp"
#include "domar/oracle.hpp"
#include "domar/panel.hpp"
#include "domar/pfe.hpp"

using namespace domar;

namespace {

std::vector<pfe::Observation> panel_slice(std::size_t firms, int years) {
  oracle::PanelSpec spec;
  spec.firms_per_industry = firms;
  spec.n_years = years;
  const auto g = oracle::gen_cobb_douglas_panel(spec);
  const auto d = panel::attach_capital_lags(panel::apply_deflators(g.data));
  return pfe::build_observations(d, {}, std::nullopt, spec.first_year,
                                 spec.first_year + years - 1);
}

void BM_FirstStage(benchmark::State& state) {
  const auto obs = panel_slice(static_cast<std::size_t>(state.range(0)), 9);
  for (auto _ : state) benchmark::DoNotOptimize(pfe::first_stage(obs));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(obs.size()));
}
BENCHMARK(BM_FirstStage)->Arg(100)->Arg(400)->Unit(benchmark::kMillisecond);

void BM_EstimateSlice(benchmark::State& state) {
  const auto obs = panel_slice(static_cast<std::size_t>(state.range(0)), 9);
  for (auto _ : state) benchmark::DoNotOptimize(pfe::estimate_slice(obs));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(obs.size()));
}
BENCHMARK(BM_EstimateSlice)->Arg(100)->Arg(400)->Unit(benchmark::kMillisecond);

void BM_GmmCriterion(benchmark::State& state) {
  const auto obs = panel_slice(200, 20);
  const auto fs = pfe::first_stage(obs);
  std::vector<std::size_t> cur, lag;
  pfe::link_lags(obs, cur, lag);
  for (auto _ : state) {
    benchmark::DoNotOptimize(pfe::gmm_criterion(fs.phi, obs, cur, lag, 0.7, 0.3));
  }
}
BENCHMARK(BM_GmmCriterion);

std::vector<agg::FirmTerms> random_terms(std::size_t n) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> mu(0.9, 1.8), rs(0.8, 1.2), sale(1, 100);
  std::vector<agg::FirmTerms> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i].sale = sale(rng);
    out[i].markup = mu(rng);
    out[i].rs = rs(rng);
    out[i].rs_adj = out[i].rs;
  }
  return out;
}

void BM_TheoremComponents(benchmark::State& state) {
  const auto firms = random_terms(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(agg::theorem_components(1.8, firms));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_TheoremComponents)->Arg(1000)->Arg(100000);

void BM_Decomposition(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> mu(0.8, 2.0), sale(1, 100);
  std::vector<dyn::FirmPoint> prev, cur;
  for (std::size_t i = 0; i < n; ++i) {
    prev.push_back({"F" + std::to_string(i), sale(rng), mu(rng)});
    cur.push_back({"F" + std::to_string(i + n / 10), sale(rng), mu(rng)});
  }
  for (auto _ : state) benchmark::DoNotOptimize(dyn::markup_change_decomposition(prev, cur));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Decomposition)->Arg(1000)->Arg(100000)->Unit(benchmark::kMillisecond);

void BM_NetworkEconomy(benchmark::State& state) {
  oracle::NetworkSpec spec;
  spec.nodes = 12;
  for (auto _ : state) {
    ++spec.seed;
    benchmark::DoNotOptimize(oracle::gen_network_economy(spec));
  }
}
BENCHMARK(BM_NetworkEconomy);

}  // namespace

BENCHMARK_MAIN();
