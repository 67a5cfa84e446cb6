#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "hetmarket/market.hpp"
#include "hetmarket/rng.hpp"

namespace hetmarket::testing {

// Box-Muller on the library stream so synthetic series are reproducible.
inline double standard_normal(Rng& rng) {
  const double u1 = 1.0 - rng.uniform();  // (0, 1]
  const double u2 = rng.uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

inline std::vector<double> white_noise(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> out(n);
  for (auto& v : out) v = standard_normal(rng);
  return out;
}

inline std::vector<double> cumulative(const std::vector<double>& x) {
  std::vector<double> out(x.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = acc += x[i];
  return out;
}

// Inverse-transform sampler for the density (gamma - 1) x^-gamma on [1, inf).
inline std::vector<double> pareto(std::size_t n, double gamma, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> out(n);
  for (auto& v : out) v = std::pow(1.0 - rng.uniform(), -1.0 / (gamma - 1.0));
  return out;
}

inline StrategyPair strategy(const char* buy, const char* sell, double score = 0.0) {
  return {HistoryPattern::from_string(buy), HistoryPattern::from_string(sell), score};
}

// Small random but valid configuration for property tests.
inline MarketConfig random_config(Rng& rng) {
  MarketConfig c;
  c.n_agents = 1 + static_cast<int>(rng.below(300));
  switch (rng.below(3)) {
    case 0: c.ratio_ref = 0.0; break;
    case 1: c.ratio_ref = 1.0; break;
    default: c.ratio_ref = rng.uniform(); break;
  }
  c.memory = 1 + static_cast<int>(rng.below(8));
  c.n_strategies = 1 + static_cast<int>(rng.below(4));
  c.delta_t = 1 + static_cast<int>(rng.below(20));
  c.g_max = static_cast<int>(rng.below(2 * static_cast<std::uint64_t>(c.n_agents) + 1));
  c.alpha = 0.5 + 15.0 * rng.uniform();
  c.k_max = 1 + static_cast<int>(rng.below(3));
  c.k_min = -static_cast<int>(rng.below(4));
  c.p0 = 1.0 + 200.0 * rng.uniform();
  c.relax_steps = 0;
  c.measure_steps = 300;
  c.seed = rng.next();
  return c;
}

}  // namespace hetmarket::testing
