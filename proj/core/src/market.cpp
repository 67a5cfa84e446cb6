#include "hetmarket/market.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <stdexcept>

namespace hetmarket {

namespace {

[[noreturn]] void invariant_failure(const char* what) {
  std::fprintf(stderr, "hetmarket: invariant violated: %s\n", what);
  std::abort();
}

HistoryPattern random_pattern(int memory, Rng& rng) {
  return HistoryPattern(memory, static_cast<std::uint32_t>(rng.below(1ULL << memory)));
}

}  // namespace

// ---------------------------------------------------------------------------
// MarketConfig

void MarketConfig::validate() const {
  if (n_agents < 0) throw ConfigError("n_agents", "must be non-negative");
  if (!(ratio_ref >= 0.0 && ratio_ref <= 1.0)) throw ConfigError("ratio_ref", "must lie in [0, 1]");
  if (memory < 1 || memory > kMaxMemory)
    throw ConfigError("memory", "must lie in [1, " + std::to_string(kMaxMemory) + "]");
  if (n_strategies < 1) throw ConfigError("n_strategies", "must be positive");
  if (delta_t < 1) throw ConfigError("delta_t", "must be positive");
  if (g_max < 0) throw ConfigError("g_max", "must be non-negative");
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ConfigError("alpha", "must be positive");
  if (k_max < 0) throw ConfigError("k_max", "must be >= 0");
  if (k_min > 0) throw ConfigError("k_min", "must be <= 0");
  if (k_min >= k_max) throw ConfigError("k_min", "must be < k_max");
  if (!(p0 > 0.0) || !std::isfinite(p0)) throw ConfigError("p0", "must be positive");
  if (relax_steps < 0) throw ConfigError("relax_steps", "must be non-negative");
  if (measure_steps < 0) throw ConfigError("measure_steps", "must be non-negative");
}

int MarketConfig::n_ref() const {
  return static_cast<int>(std::lround(ratio_ref * static_cast<double>(n_agents)));
}

// ---------------------------------------------------------------------------
// HistoryPattern

HistoryPattern::HistoryPattern(int memory, std::uint32_t bits) : memory_(memory), bits_(bits) {
  if (memory < 1 || memory > kMaxMemory) throw std::invalid_argument("HistoryPattern: bad memory");
  if (bits >= n_patterns()) throw std::invalid_argument("HistoryPattern: bits exceed memory");
}

HistoryPattern HistoryPattern::from_string(std::string_view text) {
  std::uint32_t bits = 0;
  for (char c : text) {
    if (c != '0' && c != '1') throw std::invalid_argument("HistoryPattern: expected 0/1 digits");
    bits = (bits << 1) | static_cast<std::uint32_t>(c - '0');
  }
  return HistoryPattern(static_cast<int>(text.size()), bits);
}

std::string HistoryPattern::to_string() const {
  std::string out(static_cast<std::size_t>(memory_), '0');
  for (int i = 0; i < memory_; ++i) {
    if ((bits_ >> (memory_ - 1 - i)) & 1U) out[static_cast<std::size_t>(i)] = '1';
  }
  return out;
}

// ---------------------------------------------------------------------------
// RunOutput

std::vector<double> RunOutput::measured_prices_with_base() const {
  std::vector<double> out;
  const auto n_relax = static_cast<std::size_t>(config.relax_steps);
  out.reserve(records.size() - n_relax + 1);
  out.push_back(n_relax == 0 ? initial_price : records[n_relax - 1].price);
  for (const auto& r : measured()) out.push_back(r.price);
  return out;
}

std::vector<double> RunOutput::measured_prices() const {
  std::vector<double> out;
  out.reserve(measured().size());
  for (const auto& r : measured()) out.push_back(r.price);
  return out;
}

// ---------------------------------------------------------------------------
// Decision rules

int encode_change(double p_prev, double p_curr) {
  if (!(p_prev > 0.0) || !(p_curr > 0.0)) throw std::domain_error("encode_change: non-positive price");
  return p_curr >= p_prev ? 1 : 0;
}

std::size_t active_strategy(const PairAgent& agent, Rng& rng) {
  const auto& s = agent.strategies;
  std::size_t best = 0;
  std::size_t n_best = 1;
  for (std::size_t i = 1; i < s.size(); ++i) {
    if (s[i].score > s[best].score) {
      best = i;
      n_best = 1;
    } else if (s[i].score == s[best].score) {
      ++n_best;
    }
  }
  if (n_best == 1) return best;

  auto pick = rng.below(n_best);
  for (std::size_t i = best; i < s.size(); ++i) {
    if (s[i].score == s[best].score && pick-- == 0) return i;
  }
  return best;  // unreachable
}

int pair_decide(const PairAgent& agent, const HistoryPattern& pattern, int k_min, int k_max,
                Rng& rng) {
  const StrategyPair& s = agent.strategies[active_strategy(agent, rng)];
  if (pattern == s.buy_pattern && agent.holdings < k_max) return +1;
  if (pattern == s.sell_pattern && agent.holdings > k_min) return -1;
  return 0;
}

double ref_trade_probability(double ref_point, double price) {
  return std::min(1.0, std::abs(ref_point - price) / price);
}

int ref_decide(const RefAgent& agent, double price, int k_min, int k_max, Rng& rng) {
  if (price < agent.ref_point) {
    if (agent.holdings >= k_max) return 0;
    return rng.bernoulli(ref_trade_probability(agent.ref_point, price)) ? +1 : 0;
  }
  if (price > agent.ref_point) {
    if (agent.holdings <= k_min) return 0;
    return rng.bernoulli(ref_trade_probability(agent.ref_point, price)) ? -1 : 0;
  }
  return 0;
}

// ---------------------------------------------------------------------------
// Price, scores, reference points, settlement

double update_price(double p_prev, int excess_demand, double alpha, int n) {
  return p_prev * std::exp(alpha * static_cast<double>(excess_demand) / static_cast<double>(n));
}

void update_virtual_scores(PairAgent& agent, const HistoryPattern& prev_pattern,
                           double log_return) {
  for (auto& s : agent.strategies) {
    if (prev_pattern == s.buy_pattern) {
      s.score += log_return;
    } else if (prev_pattern == s.sell_pattern) {
      s.score -= log_return;
    }
  }
}

RefBand reference_band(double p_bar, int gene, double alpha, int n) {
  const double width = alpha * static_cast<double>(gene) / static_cast<double>(n);
  return {p_bar * std::exp(-width), p_bar * std::exp(width)};
}

double draw_reference(double p_bar, int gene, double alpha, int n, Rng& rng) {
  const double width = alpha * static_cast<double>(gene) / static_cast<double>(n);
  const double x = width * (2.0 * rng.uniform() - 1.0);
  const RefBand band = reference_band(p_bar, gene, alpha, n);
  // exp is not guaranteed monotone to the last ulp on every libm.
  return std::clamp(p_bar * std::exp(x), band.lo, band.hi);
}

bool maybe_redraw_reference(RefAgent& agent, double p_bar, double alpha, int n, Rng& rng) {
  const RefBand band = reference_band(p_bar, agent.gene, alpha, n);
  if (agent.ref_point >= band.lo && agent.ref_point <= band.hi) return false;
  agent.ref_point = draw_reference(p_bar, agent.gene, alpha, n, rng);
  return true;
}

void settle(WealthLedger& ledger, int& holdings, int action, double price, int k_min,
            int k_max) {
  if (action > 0) {
    if (holdings >= k_max) invariant_failure("buy above k_max");
    ++holdings;
    ledger.realized -= price;
    ++ledger.n_buys;
  } else if (action < 0) {
    if (holdings <= k_min) invariant_failure("sell below k_min");
    --holdings;
    ledger.realized += price;
    ++ledger.n_sells;
  }
}

// ---------------------------------------------------------------------------
// Market

double rolling_mean(std::span<const double> history, int delta_t) {
  const std::size_t window = std::min(history.size(), static_cast<std::size_t>(delta_t));
  double sum = 0.0;
  for (double p : history.last(window)) sum += p;
  return sum / static_cast<double>(window);
}

MarketState init_market(const MarketConfig& config, Rng& rng) {
  config.validate();

  MarketState state;
  state.config = config;
  state.price = config.p0;
  state.price_history.push_back(config.p0);
  state.rolling_mean = config.p0;
  state.history = random_pattern(config.memory, rng);

  const auto n_patterns = std::uint64_t{1} << config.memory;
  state.pair_agents.resize(static_cast<std::size_t>(config.n_pair()));
  for (auto& agent : state.pair_agents) {
    agent.strategies.resize(static_cast<std::size_t>(config.n_strategies));
    for (auto& s : agent.strategies) {
      // Uniform over ordered pairs of distinct patterns. With memory 1 there
      // are only two such pairs.
      const auto buy = rng.below(n_patterns);
      auto sell = rng.below(n_patterns - 1);
      if (sell >= buy) ++sell;
      s.buy_pattern = HistoryPattern(config.memory, static_cast<std::uint32_t>(buy));
      s.sell_pattern = HistoryPattern(config.memory, static_cast<std::uint32_t>(sell));
    }
  }

  state.ref_agents.resize(static_cast<std::size_t>(config.n_ref()));
  for (auto& agent : state.ref_agents) {
    agent.gene = static_cast<int>(rng.below(static_cast<std::uint64_t>(config.g_max) + 1));
    agent.ref_point = draw_reference(config.p0, agent.gene, config.alpha, config.n_agents, rng);
  }
  return state;
}

TickRecord tick(MarketState& state, Rng& rng) {
  const MarketConfig& cfg = state.config;
  const HistoryPattern pattern = state.history;
  const double p_prev = state.price;

  TickRecord rec;
  rec.tick = state.tick + 1;
  rec.pattern = pattern;

  std::vector<int> pair_actions(state.pair_agents.size());
  for (std::size_t i = 0; i < state.pair_agents.size(); ++i) {
    const int a = pair_decide(state.pair_agents[i], pattern, cfg.k_min, cfg.k_max, rng);
    pair_actions[i] = a;
    rec.pair_buys += a > 0;
    rec.pair_sells += a < 0;
  }

  std::vector<int> ref_actions(state.ref_agents.size());
  for (std::size_t j = 0; j < state.ref_agents.size(); ++j) {
    const int a = ref_decide(state.ref_agents[j], p_prev, cfg.k_min, cfg.k_max, rng);
    ref_actions[j] = a;
    rec.ref_buys += a > 0;
    rec.ref_sells += a < 0;
  }

  rec.excess_demand = rec.pair_buys - rec.pair_sells + rec.ref_buys - rec.ref_sells;
  const double p_new =
      cfg.n_agents == 0 ? p_prev : update_price(p_prev, rec.excess_demand, cfg.alpha, cfg.n_agents);
  if (!(p_new > 0.0) || !std::isfinite(p_new)) invariant_failure("price left (0, inf)");
  rec.price = p_new;

  for (std::size_t i = 0; i < state.pair_agents.size(); ++i) {
    auto& agent = state.pair_agents[i];
    settle(agent.ledger, agent.holdings, pair_actions[i], p_new, cfg.k_min, cfg.k_max);
  }
  for (std::size_t j = 0; j < state.ref_agents.size(); ++j) {
    auto& agent = state.ref_agents[j];
    settle(agent.ledger, agent.holdings, ref_actions[j], p_new, cfg.k_min, cfg.k_max);
  }

  const double log_return = std::log(p_new / p_prev);
  for (auto& agent : state.pair_agents) update_virtual_scores(agent, pattern, log_return);

  state.price = p_new;
  state.price_history.push_back(p_new);
  state.rolling_mean = rolling_mean(state.price_history, cfg.delta_t);
  state.history.push(encode_change(p_prev, p_new));
  state.tick = rec.tick;

  for (auto& agent : state.ref_agents) {
    maybe_redraw_reference(agent, state.rolling_mean, cfg.alpha, cfg.n_agents, rng);
  }
  return rec;
}

RunOutput run(const MarketConfig& config) {
  Rng rng(config.seed);
  return run(config, rng);
}

RunOutput run(const MarketConfig& config, Rng& rng) {
  MarketState state = init_market(config, rng);

  RunOutput out;
  out.config = config;
  out.initial_price = state.price;
  out.records.reserve(static_cast<std::size_t>(config.relax_steps + config.measure_steps));
  for (std::int64_t t = 0; t < config.relax_steps + config.measure_steps; ++t) {
    out.records.push_back(tick(state, rng));
  }
  out.pair_agents = std::move(state.pair_agents);
  out.ref_agents = std::move(state.ref_agents);
  return out;
}

}  // namespace hetmarket
