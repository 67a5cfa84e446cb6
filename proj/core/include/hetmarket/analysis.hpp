#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "hetmarket/market.hpp"

namespace hetmarket::analysis {

// Raised when a series is too short or otherwise unusable for an estimator.
class InputError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

// R(t) = ln P(t+1) - ln P(t).
std::vector<double> log_returns(std::span<const double> prices);

std::vector<double> absolute(std::span<const double> values);

struct TailFit {
  double gamma = 0.0;         // density exponent, P(x) ~ x^-gamma
  double gamma_stderr = 0.0;  // asymptotic Hill standard error
  double xmin = 0.0;          // tail threshold (first order statistic below the tail)
  double xmax = 0.0;
  std::size_t n_tail = 0;
  bool reliable = false;
  // Log-binned density regression over the same tail, as a cross-check.
  double gamma_regression = 0.0;
  double r_squared = 0.0;
};

inline constexpr double kTailFraction = 0.05;
inline constexpr std::size_t kMinTailPoints = 50;

// Hill estimator on the top 5% order statistics of the strictly positive
// samples, reported as the density
// exponent gamma = 1 + 1 / mean(ln(x / xmin)). Never throws on degenerate
// input; reliable is false when fewer than 50 tail points exist or the tail
// has no spread.
TailFit tail_exponent(std::span<const double> samples);

struct DfaResult {
  std::vector<std::size_t> scales;
  std::vector<double> fluctuation;
  double hurst = 0.0;
  double r_squared = 0.0;
};

inline constexpr std::size_t kMinDfaLength = 64;

// First-order DFA over non-overlapping windows at scales 4, 8, ..., <= n/4.
// Throws InputError for fewer than 64 points. hurst is NaN when some F(S) is
// zero (e.g. a constant series).
DfaResult dfa(std::span<const double> series);

// Frequency-weighted mean over history patterns of the squared conditional
// mean of the excess demand.
double predictability(std::span<const TickRecord> records);

// Same quantity from parallel arrays of pattern codes and excess demands.
double predictability(std::span<const std::uint32_t> patterns, std::span<const int> excess_demand);

// Population standard deviation.
double price_stddev(std::span<const double> prices);

struct WealthSummary {
  std::optional<double> w_pair;  // empty when the population is empty
  std::optional<double> w_ref;
};

WealthSummary wealth_summary(std::span<const WealthLedger> pair, std::span<const WealthLedger> ref);

// Mean of realized + holdings * final_price. Reported separately from W.
std::optional<double> mark_to_market(std::span<const WealthLedger> ledgers,
                                     std::span<const int> holdings, double final_price);

struct AnalysisReport {
  std::size_t n_prices = 0;
  double sigma_p = 0.0;
  std::optional<double> predictability;
  TailFit gamma_abs;
  std::optional<DfaResult> dfa_returns;
  std::optional<DfaResult> dfa_abs_returns;
  std::optional<DfaResult> dfa_prices;
  std::optional<double> w_pair;
  std::optional<double> w_ref;
  std::optional<double> w_pair_mtm;
  std::optional<double> w_ref_mtm;
};

// Price-only statistics (no H, no wealth). Returns are taken over the whole
// series. When first_is_base is set, prices[0] is the last price before the
// measured segment and is left out of sigma_p.
AnalysisReport analyze_prices(std::span<const double> prices, bool first_is_base);

// Full report on the measured segment of a run.
AnalysisReport analyze_run(const RunOutput& output);

}  // namespace hetmarket::analysis
