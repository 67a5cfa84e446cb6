#include <benchmark/benchmark.h>

#include "hetmarket/market.hpp"

using namespace hetmarket;

namespace {

// One tick of a desk-scale market; arg0 is ratio_ref in percent, arg1 memory.
void BM_Tick(benchmark::State& state) {
  MarketConfig cfg;
  cfg.ratio_ref = static_cast<double>(state.range(0)) / 100.0;
  cfg.memory = static_cast<int>(state.range(1));
  Rng rng(1);
  auto market = init_market(cfg, rng);
  for (int i = 0; i < 2000; ++i) tick(market, rng);  // leave the transient
  for (auto _ : state) benchmark::DoNotOptimize(tick(market, rng));
  state.SetItemsProcessed(state.iterations() * cfg.n_agents);
}
BENCHMARK(BM_Tick)->Args({0, 3})->Args({50, 3})->Args({100, 3})->Args({0, 10});

void BM_RunDeskScale(benchmark::State& state) {
  MarketConfig cfg;
  cfg.ratio_ref = 0.5;
  for (auto _ : state) benchmark::DoNotOptimize(run(cfg).records.size());
}
BENCHMARK(BM_RunDeskScale)->Unit(benchmark::kMillisecond);

}  // namespace
