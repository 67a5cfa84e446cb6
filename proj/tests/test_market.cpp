#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "hetmarket/io.hpp"
#include "hetmarket/market.hpp"
#include "support.hpp"

using namespace hetmarket;
using hetmarket::testing::strategy;

namespace {

MarketConfig tiny_config(int n_agents, double ratio_ref) {
  MarketConfig c;
  c.n_agents = n_agents;
  c.ratio_ref = ratio_ref;
  c.relax_steps = 0;
  c.measure_steps = 10;
  return c;
}

}  // namespace

TEST_CASE("HistoryPattern text form is oldest change first") {
  const auto p = HistoryPattern::from_string("110");
  CHECK(p.memory() == 3);
  CHECK(p.bits() == 6U);
  CHECK(p.to_string() == "110");

  auto q = p;
  q.push(1);  // 110 -> 101
  CHECK(q.to_string() == "101");
  CHECK_THROWS_AS(HistoryPattern::from_string("12"), std::invalid_argument);
  CHECK_THROWS_AS(HistoryPattern(3, 8), std::invalid_argument);
}

TEST_CASE("encode_change") {
  CHECK(encode_change(100, 101) == 1);
  CHECK(encode_change(100, 99) == 0);
  CHECK(encode_change(100, 100) == 1);
  CHECK_THROWS_AS(encode_change(0, 1), std::domain_error);
  CHECK_THROWS_AS(encode_change(1, -1), std::domain_error);
}

TEST_CASE("pair_decide follows the active strategy and the holdings caps") {
  Rng rng(1);
  PairAgent agent;
  agent.strategies = {strategy("110", "101")};
  const int k_min = -1, k_max = 1;

  CHECK(pair_decide(agent, HistoryPattern::from_string("110"), k_min, k_max, rng) == +1);
  CHECK(pair_decide(agent, HistoryPattern::from_string("101"), k_min, k_max, rng) == -1);
  CHECK(pair_decide(agent, HistoryPattern::from_string("000"), k_min, k_max, rng) == 0);

  agent.holdings = k_max;
  CHECK(pair_decide(agent, HistoryPattern::from_string("110"), k_min, k_max, rng) == 0);
  agent.holdings = k_min;
  CHECK(pair_decide(agent, HistoryPattern::from_string("101"), k_min, k_max, rng) == 0);
}

TEST_CASE("pair_decide uses the highest score") {
  Rng rng(2);
  PairAgent agent;
  agent.strategies = {strategy("110", "101", -0.5), strategy("000", "110", 0.25)};
  // The second strategy sells on 110.
  CHECK(pair_decide(agent, HistoryPattern::from_string("110"), -1, 1, rng) == -1);
}

TEST_CASE("score ties are broken uniformly") {
  Rng rng(3);
  PairAgent agent;
  agent.strategies = {strategy("11", "00"), strategy("01", "10"), strategy("10", "01")};
  std::array<int, 3> counts{};
  const int trials = 30000;
  for (int i = 0; i < trials; ++i) counts[active_strategy(agent, rng)]++;
  for (int c : counts) CHECK(std::abs(c - trials / 3) < 4 * std::sqrt(trials * (1.0 / 3) * (2.0 / 3)));

  // A unique maximum never consumes randomness.
  agent.strategies[2].score = 1.0;
  Rng a(9), b(9);
  CHECK(active_strategy(agent, a) == 2);
  CHECK(a.next() == b.next());
}

TEST_CASE("ref_decide probabilities") {
  RefAgent agent;
  agent.ref_point = 110;
  CHECK(ref_trade_probability(110, 100) == doctest::Approx(0.10).epsilon(1e-15));
  CHECK(ref_trade_probability(90, 100) == doctest::Approx(0.10).epsilon(1e-15));
  CHECK(ref_trade_probability(250, 100) == 1.0);

  Rng rng(4);
  SUBCASE("price equal to the reference point never trades") {
    agent.ref_point = 100;
    for (int i = 0; i < 1000; ++i) CHECK(ref_decide(agent, 100, -1, 1, rng) == 0);
  }
  SUBCASE("clamped buy probability trades every time") {
    agent.ref_point = 250;
    int buys = 0;
    for (int i = 0; i < 10000; ++i) buys += ref_decide(agent, 100, -1, 1, rng) == 1;
    CHECK(buys == 10000);
  }
  SUBCASE("sell side below the price") {
    agent.ref_point = 90;
    const int trials = 100000;
    int sells = 0;
    for (int i = 0; i < trials; ++i) {
      const int a = ref_decide(agent, 100, -1, 1, rng);
      CHECK(a <= 0);
      sells += a == -1;
    }
    const double sd = std::sqrt(0.1 * 0.9 / trials);
    CHECK(std::abs(sells / double(trials) - 0.1) < 4 * sd);
  }
  SUBCASE("holdings caps") {
    agent.ref_point = 250;
    agent.holdings = 1;
    CHECK(ref_decide(agent, 100, -1, 1, rng) == 0);
    agent.ref_point = 10;
    agent.holdings = -1;
    CHECK(ref_decide(agent, 100, -1, 1, rng) == 0);
  }
}

TEST_CASE("update_price") {
  CHECK(update_price(100, 0, 10, 1000) == 100);
  CHECK(update_price(100, 100, 10, 1000) == doctest::Approx(271.828182845904).epsilon(1e-12));
  CHECK(update_price(100, -100, 10, 1000) == doctest::Approx(36.7879441171442).epsilon(1e-12));
  CHECK(update_price(1e-300, -1000, 10, 1000) > 0.0);
}

TEST_CASE("update_virtual_scores") {
  PairAgent agent;
  agent.strategies = {strategy("110", "101"), strategy("101", "110"), strategy("000", "111")};
  update_virtual_scores(agent, HistoryPattern::from_string("110"), 0.05);
  CHECK(agent.strategies[0].score == doctest::Approx(0.05));
  CHECK(agent.strategies[1].score == doctest::Approx(-0.05));
  CHECK(agent.strategies[2].score == 0.0);
}

TEST_CASE("maybe_redraw_reference") {
  Rng rng(5);
  const double alpha = 10;
  const int n = 1000;

  SUBCASE("gene zero pins the reference point to the mean") {
    RefAgent agent{0, 123.0, 0, {}};
    CHECK(maybe_redraw_reference(agent, 100.0, alpha, n, rng));
    CHECK(agent.ref_point == 100.0);
    CHECK_FALSE(maybe_redraw_reference(agent, 100.0, alpha, n, rng));
    CHECK(maybe_redraw_reference(agent, 101.5, alpha, n, rng));
    CHECK(agent.ref_point == 101.5);
  }
  SUBCASE("inside the band nothing changes") {
    RefAgent agent{200, 120.0, 0, {}};  // band 100 * e^{+-2}
    Rng probe = rng;
    CHECK_FALSE(maybe_redraw_reference(agent, 100.0, alpha, n, rng));
    CHECK(agent.ref_point == 120.0);
    CHECK(agent.gene == 200);
    CHECK(probe.next() == rng.next());
  }
  SUBCASE("redraws are uniform in log price over the band") {
    // One-sample Kolmogorov-Smirnov against U(-10, 10) at the 1% level.
    const int draws = 10000;
    std::vector<double> logs;
    for (int i = 0; i < draws; ++i) {
      RefAgent agent{n, 100.0 * std::exp(11.0), 0, {}};
      REQUIRE(maybe_redraw_reference(agent, 100.0, alpha, n, rng));
      const auto band = reference_band(100.0, agent.gene, alpha, n);
      REQUIRE(agent.ref_point >= band.lo);
      REQUIRE(agent.ref_point <= band.hi);
      logs.push_back(std::log(agent.ref_point / 100.0));
    }
    std::sort(logs.begin(), logs.end());
    double d = 0.0;
    for (int i = 0; i < draws; ++i) {
      const double cdf = (logs[i] + 10.0) / 20.0;
      d = std::max({d, std::abs(cdf - i / double(draws)), std::abs(cdf - (i + 1) / double(draws))});
    }
    CHECK(d < 1.628 / std::sqrt(double(draws)));
  }
}

TEST_CASE("settle keeps the ledger") {
  WealthLedger ledger;
  int holdings = 0;
  SUBCASE("long round trip") {
    settle(ledger, holdings, +1, 100, -1, 1);
    settle(ledger, holdings, -1, 110, -1, 1);
    CHECK(ledger.realized == doctest::Approx(10.0));
    CHECK(holdings == 0);
    CHECK(ledger.n_buys == 1);
    CHECK(ledger.n_sells == 1);
  }
  SUBCASE("short round trip") {
    settle(ledger, holdings, -1, 100, -1, 1);
    settle(ledger, holdings, +1, 110, -1, 1);
    CHECK(ledger.realized == doctest::Approx(-10.0));
  }
  SUBCASE("no action") {
    settle(ledger, holdings, 0, 100, -1, 1);
    CHECK(ledger == WealthLedger{});
    CHECK(holdings == 0);
  }
}

TEST_CASE("rolling_mean warm-up") {
  const std::vector<double> h{1, 2, 3, 4, 5};
  CHECK(rolling_mean(std::span(h).first(1), 3) == 1.0);
  CHECK(rolling_mean(std::span(h).first(2), 3) == 1.5);
  CHECK(rolling_mean(h, 3) == 4.0);
}

TEST_CASE("init_market") {
  Rng rng(6);
  SUBCASE("population split") {
    auto s = init_market(tiny_config(1000, 1.0), rng);
    CHECK(s.ref_agents.size() == 1000);
    CHECK(s.pair_agents.empty());
    s = init_market(tiny_config(1000, 0.5), rng);
    CHECK(s.ref_agents.size() == 500);
    CHECK(s.pair_agents.size() == 500);
    CHECK(tiny_config(7, 0.5).n_ref() == 4);  // 3.5 rounds away from zero
  }
  SUBCASE("initial values") {
    auto cfg = tiny_config(400, 0.5);
    cfg.memory = 1;  // only two distinct ordered pairs exist
    const auto s = init_market(cfg, rng);
    CHECK(s.price == cfg.p0);
    CHECK(s.rolling_mean == cfg.p0);
    CHECK(s.history.memory() == 1);
    for (const auto& a : s.pair_agents) {
      CHECK(a.holdings == 0);
      CHECK(a.strategies.size() == 2);
      for (const auto& st : a.strategies) {
        CHECK(st.buy_pattern != st.sell_pattern);
        CHECK(st.score == 0.0);
      }
    }
    for (const auto& a : s.ref_agents) {
      CHECK(a.gene >= 0);
      CHECK(a.gene <= cfg.g_max);
      const auto band = reference_band(cfg.p0, a.gene, cfg.alpha, cfg.n_agents);
      CHECK(a.ref_point >= band.lo);
      CHECK(a.ref_point <= band.hi);
    }
  }
  SUBCASE("strategy pairs are uniform over ordered distinct pairs") {
    auto cfg = tiny_config(6000, 0.0);
    cfg.memory = 2;
    cfg.n_strategies = 1;
    const auto s = init_market(cfg, rng);
    std::array<int, 16> counts{};
    for (const auto& a : s.pair_agents) {
      counts[a.strategies[0].buy_pattern.bits() * 4 + a.strategies[0].sell_pattern.bits()]++;
    }
    const double expected = 6000.0 / 12.0;
    double chi2 = 0.0;
    for (int b = 0; b < 4; ++b) {
      for (int s2 = 0; s2 < 4; ++s2) {
        const int c = counts[b * 4 + s2];
        if (b == s2) {
          CHECK(c == 0);
        } else {
          chi2 += (c - expected) * (c - expected) / expected;
        }
      }
    }
    CHECK(chi2 < 24.7);  // chi-square, 11 dof, 1%
  }
  SUBCASE("genes are uniform integers on [0, g_max]") {
    auto cfg = tiny_config(20000, 1.0);
    cfg.g_max = 4;
    const auto s = init_market(cfg, rng);
    std::array<int, 5> counts{};
    for (const auto& a : s.ref_agents) counts[a.gene]++;
    double chi2 = 0.0;
    for (int c : counts) chi2 += (c - 4000.0) * (c - 4000.0) / 4000.0;
    CHECK(chi2 < 13.28);  // 4 dof, 1%
  }
  SUBCASE("invalid configs name the field") {
    auto cfg = tiny_config(10, 1.5);
    try {
      init_market(cfg, rng);
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      CHECK(e.field() == "ratio_ref");
    }
    cfg = tiny_config(10, 0.5);
    cfg.k_min = 2;
    CHECK_THROWS_AS(init_market(cfg, rng), ConfigError);
    cfg = tiny_config(10, 0.5);
    cfg.alpha = 0;
    CHECK_THROWS_AS(init_market(cfg, rng), ConfigError);
    cfg = tiny_config(10, 0.5);
    cfg.memory = 0;
    CHECK_THROWS_AS(init_market(cfg, rng), ConfigError);
  }
  SUBCASE("same seed, same state") {
    const auto cfg = tiny_config(300, 0.3);
    Rng a(77), b(77);
    const auto s1 = init_market(cfg, a);
    const auto s2 = init_market(cfg, b);
    CHECK(s1.pair_agents == s2.pair_agents);
    CHECK(s1.ref_agents == s2.ref_agents);
    CHECK(s1.history == s2.history);
  }
}

TEST_CASE("tick examples") {
  Rng rng(8);
  SUBCASE("no agents") {
    auto s = init_market(tiny_config(0, 0.0), rng);
    const auto rec = tick(s, rng);
    CHECK(rec.excess_demand == 0);
    CHECK(rec.price == s.config.p0);
    CHECK(static_cast<bool>(s.history.bits() & 1U));  // unchanged price counts as a rise
  }
  SUBCASE("single pair agent buying") {
    auto cfg = tiny_config(1, 0.0);
    cfg.n_strategies = 1;
    auto s = init_market(cfg, rng);
    s.history = HistoryPattern::from_string("110");
    s.pair_agents[0].strategies = {strategy("110", "101")};
    const auto rec = tick(s, rng);
    CHECK(rec.excess_demand == 1);
    CHECK(rec.pair_buys == 1);
    CHECK(rec.price == doctest::Approx(cfg.p0 * std::exp(cfg.alpha)).epsilon(1e-14));
    CHECK(s.pair_agents[0].holdings == 1);
    // Settled at the post-update price.
    CHECK(s.pair_agents[0].ledger.realized == -rec.price);
    CHECK(s.pair_agents[0].strategies[0].score == doctest::Approx(cfg.alpha));
    CHECK(s.history.to_string() == "101");
    CHECK(rec.pattern.to_string() == "110");
  }
}

TEST_CASE("run examples") {
  SUBCASE("no measured segment") {
    auto cfg = tiny_config(50, 0.5);
    cfg.relax_steps = 20;
    cfg.measure_steps = 0;
    const auto out = run(cfg);
    CHECK(out.records.size() == 20);
    CHECK(out.measured().empty());
    CHECK(out.measured_prices_with_base().size() == 1);
  }
  SUBCASE("record count and tick numbering") {
    auto cfg = tiny_config(50, 0.5);
    cfg.relax_steps = 30;
    cfg.measure_steps = 70;
    const auto out = run(cfg);
    REQUIRE(out.records.size() == 100);
    CHECK(out.measured().size() == 70);
    CHECK(out.measured().front().tick == 31);
    CHECK(out.measured_prices_with_base().front() == out.records[29].price);
  }
  SUBCASE("long horizon yields relax + measure records") {
    auto cfg = tiny_config(10, 0.5);
    cfg.relax_steps = 100000;
    cfg.measure_steps = 10000;
    CHECK(run(cfg).records.size() == 110000);
  }
  SUBCASE("fixed seed, identical output") {
    auto cfg = tiny_config(200, 0.5);
    cfg.measure_steps = 500;
    cfg.seed = 99;
    const auto a = run(cfg);
    const auto b = run(cfg);
    CHECK(a.records == b.records);
    CHECK(a.pair_agents == b.pair_agents);
    CHECK(a.ref_agents == b.ref_agents);
    std::ostringstream sa, sb;
    io::write_series_csv(sa, a);
    io::write_series_csv(sb, b);
    CHECK(sa.str() == sb.str());
  }
}

TEST_CASE("invariants hold on random configurations") {
  Rng gen(2024);
  for (int trial = 0; trial < 40; ++trial) {
    const auto cfg = hetmarket::testing::random_config(gen);
    CAPTURE(trial);
    Rng rng(cfg.seed);
    auto state = init_market(cfg, rng);
    std::vector<int> genes;
    for (const auto& a : state.ref_agents) genes.push_back(a.gene);
    REQUIRE(static_cast<int>(state.pair_agents.size() + state.ref_agents.size()) == cfg.n_agents);

    for (std::int64_t t = 0; t < cfg.measure_steps; ++t) {
      // Agents whose active strategy is unambiguous before the tick.
      std::vector<int> expected(state.pair_agents.size(), 2);  // 2 = unknown
      for (std::size_t i = 0; i < state.pair_agents.size(); ++i) {
        const auto& a = state.pair_agents[i];
        const auto best = std::max_element(a.strategies.begin(), a.strategies.end(),
                                           [](auto& x, auto& y) { return x.score < y.score; });
        const auto ties = std::count_if(a.strategies.begin(), a.strategies.end(),
                                        [&](auto& s) { return s.score == best->score; });
        if (ties > 1) continue;
        int e = 0;
        if (state.history == best->buy_pattern && a.holdings < cfg.k_max) e = 1;
        else if (state.history == best->sell_pattern && a.holdings > cfg.k_min) e = -1;
        expected[i] = e;
      }
      std::vector<int> before;
      for (const auto& a : state.pair_agents) before.push_back(a.holdings);
      const double p_prev = state.price;

      const auto rec = tick(state, rng);

      REQUIRE(rec.price > 0.0);
      REQUIRE(rec.excess_demand == rec.pair_buys - rec.pair_sells + rec.ref_buys - rec.ref_sells);
      REQUIRE(std::abs(rec.excess_demand) <= cfg.n_agents);
      const double expect_log = cfg.alpha * rec.excess_demand / cfg.n_agents;
      if (rec.excess_demand == 0) {
        REQUIRE(rec.price == p_prev);
      } else {
        REQUIRE(std::abs(std::log(rec.price / p_prev) - expect_log) <= 1e-12 * std::abs(expect_log));
      }
      for (std::size_t i = 0; i < state.pair_agents.size(); ++i) {
        const auto& a = state.pair_agents[i];
        REQUIRE(a.holdings >= cfg.k_min);
        REQUIRE(a.holdings <= cfg.k_max);
        const int delta = a.holdings - before[i];
        if (expected[i] != 2) REQUIRE(delta == expected[i]);
        if (delta != 0) {
          const bool matched = std::any_of(a.strategies.begin(), a.strategies.end(), [&](auto& s) {
            return rec.pattern == (delta > 0 ? s.buy_pattern : s.sell_pattern);
          });
          REQUIRE(matched);
        }
      }
      for (std::size_t j = 0; j < state.ref_agents.size(); ++j) {
        const auto& a = state.ref_agents[j];
        REQUIRE(a.holdings >= cfg.k_min);
        REQUIRE(a.holdings <= cfg.k_max);
        REQUIRE(a.gene == genes[j]);
        const auto band = reference_band(state.rolling_mean, a.gene, cfg.alpha, cfg.n_agents);
        REQUIRE(a.ref_point >= band.lo);
        REQUIRE(a.ref_point <= band.hi);
      }
    }
  }
}

TEST_CASE("scores equal the replayed hypothetical returns") {
  auto cfg = tiny_config(200, 0.3);
  cfg.memory = 3;
  cfg.measure_steps = 2000;
  cfg.seed = 31;
  const auto out = run(cfg);

  double p_prev = out.initial_price;
  std::vector<std::vector<double>> replay(out.pair_agents.size());
  for (std::size_t i = 0; i < out.pair_agents.size(); ++i) replay[i].assign(cfg.n_strategies, 0.0);
  for (const auto& rec : out.records) {
    const double r = std::log(rec.price / p_prev);
    for (std::size_t i = 0; i < out.pair_agents.size(); ++i) {
      const auto& st = out.pair_agents[i].strategies;
      for (std::size_t k = 0; k < st.size(); ++k) {
        if (rec.pattern == st[k].buy_pattern) replay[i][k] += r;
        else if (rec.pattern == st[k].sell_pattern) replay[i][k] -= r;
      }
    }
    p_prev = rec.price;
  }
  for (std::size_t i = 0; i < out.pair_agents.size(); ++i) {
    for (std::size_t k = 0; k < replay[i].size(); ++k) {
      CHECK(out.pair_agents[i].strategies[k].score == doctest::Approx(replay[i][k]).epsilon(1e-12));
    }
  }
}

TEST_CASE("ledgers equal the signed cash flows of their trades") {
  auto cfg = tiny_config(100, 0.5);
  cfg.measure_steps = 1000;
  cfg.seed = 5;
  Rng rng(cfg.seed);
  auto state = init_market(cfg, rng);
  std::vector<double> cash(state.ref_agents.size(), 0.0);
  for (int t = 0; t < 1000; ++t) {
    std::vector<int> before;
    for (const auto& a : state.ref_agents) before.push_back(a.holdings);
    const auto rec = tick(state, rng);
    for (std::size_t j = 0; j < cash.size(); ++j) {
      cash[j] -= (state.ref_agents[j].holdings - before[j]) * rec.price;
    }
  }
  for (std::size_t j = 0; j < cash.size(); ++j) {
    CHECK(state.ref_agents[j].ledger.realized == doctest::Approx(cash[j]).epsilon(1e-12));
    CHECK(static_cast<int>(state.ref_agents[j].ledger.n_buys) - static_cast<int>(state.ref_agents[j].ledger.n_sells) ==
          state.ref_agents[j].holdings);
  }
}
