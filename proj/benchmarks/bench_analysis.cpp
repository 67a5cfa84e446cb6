#include <benchmark/benchmark.h>

#include <cmath>
#include <vector>

#include "hetmarket/analysis.hpp"
#include "hetmarket/rng.hpp"

using namespace hetmarket;

namespace {

std::vector<double> noise(std::size_t n) {
  Rng rng(7);
  std::vector<double> x(n);
  for (auto& v : x) v = std::pow(1.0 - rng.uniform(), -0.5);
  return x;
}

void BM_TailExponent(benchmark::State& state) {
  const auto x = noise(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(analysis::tail_exponent(x));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_TailExponent)->Range(1 << 12, 1 << 18);

void BM_Dfa(benchmark::State& state) {
  const auto x = noise(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(analysis::dfa(x));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Dfa)->Range(1 << 12, 1 << 18);

void BM_Predictability(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(3);
  std::vector<std::uint32_t> mu(n);
  std::vector<int> a(n);
  for (std::size_t i = 0; i < n; ++i) {
    mu[i] = static_cast<std::uint32_t>(rng.below(8));
    a[i] = static_cast<int>(rng.below(2001)) - 1000;
  }
  for (auto _ : state) benchmark::DoNotOptimize(analysis::predictability(mu, a));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Predictability)->Range(1 << 12, 1 << 18);

}  // namespace
