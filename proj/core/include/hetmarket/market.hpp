#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hetmarket/config.hpp"
#include "hetmarket/rng.hpp"

namespace hetmarket {

// The last `memory` price changes, rise=1 and drop=0. Stored as an integer
// whose least significant bit is the most recent change, so the textual form
// "110" (oldest first) means rise-rise-drop.
class HistoryPattern {
public:
  HistoryPattern() = default;
  HistoryPattern(int memory, std::uint32_t bits);

  // Parses a string of '0'/'1' characters, oldest change first.
  static HistoryPattern from_string(std::string_view text);

  int memory() const noexcept { return memory_; }
  std::uint32_t bits() const noexcept { return bits_; }
  std::uint32_t n_patterns() const noexcept { return 1U << memory_; }

  // Shifts in the newest change and drops the oldest.
  void push(int change_bit) noexcept {
    bits_ = ((bits_ << 1) | static_cast<std::uint32_t>(change_bit & 1)) & (n_patterns() - 1);
  }

  std::string to_string() const;

  friend bool operator==(const HistoryPattern&, const HistoryPattern&) = default;

private:
  int memory_ = 1;
  std::uint32_t bits_ = 0;
};

struct WealthLedger {
  double realized = 0.0;  // sum of sell proceeds minus buy costs
  std::uint64_t n_buys = 0;
  std::uint64_t n_sells = 0;

  friend bool operator==(const WealthLedger&, const WealthLedger&) = default;
};

struct StrategyPair {
  HistoryPattern buy_pattern;
  HistoryPattern sell_pattern;
  double score = 0.0;

  friend bool operator==(const StrategyPair&, const StrategyPair&) = default;
};

struct PairAgent {
  std::vector<StrategyPair> strategies;
  int holdings = 0;
  WealthLedger ledger;

  friend bool operator==(const PairAgent&, const PairAgent&) = default;
};

struct RefAgent {
  int gene = 0;
  double ref_point = 0.0;
  int holdings = 0;
  WealthLedger ledger;

  friend bool operator==(const RefAgent&, const RefAgent&) = default;
};

struct MarketState {
  MarketConfig config;
  double price = 0.0;
  std::vector<double> price_history;  // P(0), P(1), ..., P(tick)
  double rolling_mean = 0.0;
  HistoryPattern history;
  std::vector<PairAgent> pair_agents;
  std::vector<RefAgent> ref_agents;
  std::int64_t tick = 0;
};

struct TickRecord {
  std::int64_t tick = 0;
  double price = 0.0;
  int excess_demand = 0;
  HistoryPattern pattern;  // history the decisions of this tick were based on
  int pair_buys = 0;
  int pair_sells = 0;
  int ref_buys = 0;
  int ref_sells = 0;

  friend bool operator==(const TickRecord&, const TickRecord&) = default;
};

struct RunOutput {
  MarketConfig config;
  double initial_price = 0.0;
  std::vector<TickRecord> records;  // relax_steps relaxation ticks, then the measured ones
  std::vector<PairAgent> pair_agents;
  std::vector<RefAgent> ref_agents;

  std::int64_t n_relax() const { return config.relax_steps; }
  std::span<const TickRecord> measured() const {
    return std::span(records).subspan(static_cast<std::size_t>(config.relax_steps));
  }
  // Prices of the measured segment preceded by the last pre-measurement
  // price, so that returns().size() == measured().size().
  std::vector<double> measured_prices_with_base() const;
  // Prices of the measured ticks only.
  std::vector<double> measured_prices() const;
};

// 1 if p_curr >= p_prev (ties count as a rise), else 0.
int encode_change(double p_prev, double p_curr);

// +1 buy, -1 sell, 0 hold. Uses the highest-scoring strategy; ties between
// scores are broken uniformly at random (the stream is only advanced when a
// tie exists).
int pair_decide(const PairAgent& agent, const HistoryPattern& pattern, int k_min, int k_max,
                Rng& rng);

// Index of the strategy pair_decide would act on.
std::size_t active_strategy(const PairAgent& agent, Rng& rng);

// Buys with probability min(1, (ref - P)/P) when P < ref, sells with
// probability min(1, (P - ref)/P) when P > ref.
int ref_decide(const RefAgent& agent, double price, int k_min, int k_max, Rng& rng);

// Probability that ref_decide returns a nonzero action (ignoring holdings).
double ref_trade_probability(double ref_point, double price);

// P(t) = P(t-1) * exp(alpha * A / N).
double update_price(double p_prev, int excess_demand, double alpha, int n);

// score += v * log_return, v = +1 / -1 / 0 for a buy / sell / no match on
// prev_pattern. Applied to every strategy of the agent.
void update_virtual_scores(PairAgent& agent, const HistoryPattern& prev_pattern,
                           double log_return);

// Band [p_bar * exp(-alpha g / n), p_bar * exp(alpha g / n)].
struct RefBand {
  double lo;
  double hi;
};
RefBand reference_band(double p_bar, int gene, double alpha, int n);

// Reference point drawn uniformly in log(ref / p_bar) over the band.
double draw_reference(double p_bar, int gene, double alpha, int n, Rng& rng);

// Redraws the reference point if it has left the band. Returns true on redraw.
bool maybe_redraw_reference(RefAgent& agent, double p_bar, double alpha, int n, Rng& rng);

// Applies a +1/-1 trade at `price`. Aborts if the trade breaks the holdings
// bounds.
void settle(WealthLedger& ledger, int& holdings, int action, double price, int k_min,
            int k_max);

MarketState init_market(const MarketConfig& config, Rng& rng);

// One full step. Phases in order: pair decisions, ref decisions, price update,
// settlement at the new price, virtual scores, history and rolling mean, ref
// band redraws.
TickRecord tick(MarketState& state, Rng& rng);

// Mean of the last min(len, delta_t) entries of the price history.
double rolling_mean(std::span<const double> history, int delta_t);

// relax_steps + measure_steps ticks from a fresh market seeded with config.seed.
RunOutput run(const MarketConfig& config);
RunOutput run(const MarketConfig& config, Rng& rng);

}  // namespace hetmarket
