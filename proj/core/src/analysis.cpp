#include "hetmarket/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <iterator>
#include <limits>
#include <map>

namespace hetmarket::analysis {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct LineFit {
  double slope = kNaN;
  double intercept = kNaN;
  double r_squared = kNaN;
};

// Ordinary least squares y = a + b x.
LineFit fit_line(std::span<const double> x, std::span<const double> y) {
  const auto n = static_cast<double>(x.size());
  if (x.size() < 2) return {};
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (sxx == 0.0) return {};
  LineFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r_squared = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
  return fit;
}

// Log-binned density of the tail, regressed in log-log space.
LineFit log_binned_slope(std::span<const double> tail, double xmin, double xmax,
                         std::size_t n_total) {
  constexpr std::size_t kBins = 12;
  if (!(xmax > xmin) || xmin <= 0.0) return {};
  const double lmin = std::log(xmin), lmax = std::log(xmax);
  const double step = (lmax - lmin) / static_cast<double>(kBins);

  std::vector<std::size_t> counts(kBins, 0);
  for (double v : tail) {
    auto b = static_cast<std::size_t>((std::log(v) - lmin) / step);
    counts[std::min(b, kBins - 1)]++;
  }
  std::vector<double> lx, ly;
  for (std::size_t b = 0; b < kBins; ++b) {
    if (counts[b] == 0) continue;
    const double lo = std::exp(lmin + step * static_cast<double>(b));
    const double hi = std::exp(lmin + step * static_cast<double>(b + 1));
    const double density = static_cast<double>(counts[b]) / (static_cast<double>(n_total) * (hi - lo));
    lx.push_back(0.5 * (std::log(lo) + std::log(hi)));
    ly.push_back(std::log(density));
  }
  if (lx.size() < 3) return {};
  return fit_line(lx, ly);
}

}  // namespace

std::vector<double> log_returns(std::span<const double> prices) {
  if (prices.size() < 2) throw InputError("log_returns: need at least two prices");
  std::vector<double> out(prices.size() - 1);
  for (std::size_t i = 0; i < prices.size(); ++i) {
    if (!(prices[i] > 0.0)) throw std::domain_error("log_returns: non-positive price");
  }
  for (std::size_t i = 0; i + 1 < prices.size(); ++i) out[i] = std::log(prices[i + 1] / prices[i]);
  return out;
}

std::vector<double> absolute(std::span<const double> values) {
  std::vector<double> out(values.size());
  std::transform(values.begin(), values.end(), out.begin(), [](double v) { return std::abs(v); });
  return out;
}

constexpr double kMinTailLogSpread = 1e-9;

TailFit tail_exponent(std::span<const double> samples) {
  TailFit fit;
  fit.gamma = kNaN;
  fit.gamma_stderr = kNaN;
  fit.gamma_regression = kNaN;
  fit.r_squared = kNaN;

  // Zeros (ticks with no net demand) have no place on a log-log tail.
  std::vector<double> sorted;
  sorted.reserve(samples.size());
  std::copy_if(samples.begin(), samples.end(), std::back_inserter(sorted),
               [](double v) { return v > 0.0; });
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  const auto k = static_cast<std::size_t>(std::floor(kTailFraction * static_cast<double>(sorted.size())));
  fit.n_tail = k;
  if (k == 0 || k >= sorted.size()) return fit;

  fit.xmin = sorted[k];
  fit.xmax = sorted.front();
  if (!(fit.xmin > 0.0)) return fit;

  double sum_log = 0.0;
  for (std::size_t i = 0; i < k; ++i) sum_log += std::log(sorted[i] / fit.xmin);
  const double mean_log = sum_log / static_cast<double>(k);
  // Spread at rounding level (a tail of one repeated value recomputed from
  // prices) counts as no spread.
  if (!(mean_log > kMinTailLogSpread)) return fit;

  fit.gamma = 1.0 + 1.0 / mean_log;
  fit.gamma_stderr = (fit.gamma - 1.0) / std::sqrt(static_cast<double>(k));
  fit.reliable = k >= kMinTailPoints;

  const auto reg = log_binned_slope(std::span(sorted).first(k), fit.xmin, fit.xmax, sorted.size());
  fit.gamma_regression = -reg.slope;
  fit.r_squared = reg.r_squared;
  return fit;
}

DfaResult dfa(std::span<const double> series) {
  const std::size_t n = series.size();
  if (n < kMinDfaLength) throw InputError("dfa: need at least 64 points");

  double mean = 0.0;
  for (double v : series) mean += v;
  mean /= static_cast<double>(n);

  std::vector<double> profile(n);
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    acc += series[i] - mean;
    profile[i] = acc;
  }

  DfaResult out;
  for (std::size_t s = 4; s <= n / 4; s *= 2) {
    const std::size_t n_win = n / s;
    const double sd = static_cast<double>(s);
    const double t_mean = (sd - 1.0) / 2.0;
    const double sxx = sd * (sd * sd - 1.0) / 12.0;

    double rss = 0.0;
    for (std::size_t w = 0; w < n_win; ++w) {
      const auto window = std::span(profile).subspan(w * s, s);
      double y_mean = 0.0;
      for (double y : window) y_mean += y;
      y_mean /= sd;
      double sxy = 0.0, syy = 0.0;
      for (std::size_t t = 0; t < s; ++t) {
        const double dy = window[t] - y_mean;
        sxy += (static_cast<double>(t) - t_mean) * dy;
        syy += dy * dy;
      }
      rss += std::max(0.0, syy - sxy * sxy / sxx);
    }
    out.scales.push_back(s);
    out.fluctuation.push_back(std::sqrt(rss / static_cast<double>(n_win * s)));
  }

  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < out.scales.size(); ++i) {
    if (!(out.fluctuation[i] > 0.0)) {
      out.hurst = kNaN;
      out.r_squared = kNaN;
      return out;
    }
    lx.push_back(std::log(static_cast<double>(out.scales[i])));
    ly.push_back(std::log(out.fluctuation[i]));
  }
  const auto fit = fit_line(lx, ly);
  out.hurst = fit.slope;
  out.r_squared = fit.r_squared;
  return out;
}

double predictability(std::span<const std::uint32_t> patterns, std::span<const int> excess_demand) {
  if (patterns.size() != excess_demand.size())
    throw InputError("predictability: pattern and demand lengths differ");
  if (patterns.empty()) throw InputError("predictability: no ticks");

  // Integer sums keep the result independent of tick order.
  std::map<std::uint32_t, std::pair<std::int64_t, std::int64_t>> classes;
  for (std::size_t i = 0; i < patterns.size(); ++i) {
    auto& [sum, count] = classes[patterns[i]];
    sum += excess_demand[i];
    ++count;
  }
  const auto total = static_cast<double>(patterns.size());
  double h = 0.0;
  for (const auto& [pattern, acc] : classes) {
    const double cond_mean = static_cast<double>(acc.first) / static_cast<double>(acc.second);
    h += static_cast<double>(acc.second) / total * cond_mean * cond_mean;
  }
  return h;
}

double predictability(std::span<const TickRecord> records) {
  std::vector<std::uint32_t> patterns;
  std::vector<int> demand;
  patterns.reserve(records.size());
  demand.reserve(records.size());
  for (const auto& r : records) {
    patterns.push_back(r.pattern.bits());
    demand.push_back(r.excess_demand);
  }
  return predictability(patterns, demand);
}

double price_stddev(std::span<const double> prices) {
  if (prices.empty()) throw InputError("price_stddev: empty series");
  double mean = 0.0;
  for (double p : prices) mean += p;
  mean /= static_cast<double>(prices.size());
  double ss = 0.0;
  for (double p : prices) ss += (p - mean) * (p - mean);
  return std::sqrt(ss / static_cast<double>(prices.size()));
}

WealthSummary wealth_summary(std::span<const WealthLedger> pair, std::span<const WealthLedger> ref) {
  auto mean = [](std::span<const WealthLedger> ledgers) -> std::optional<double> {
    if (ledgers.empty()) return std::nullopt;
    double sum = 0.0;
    for (const auto& l : ledgers) sum += l.realized;
    return sum / static_cast<double>(ledgers.size());
  };
  return {mean(pair), mean(ref)};
}

std::optional<double> mark_to_market(std::span<const WealthLedger> ledgers,
                                     std::span<const int> holdings, double final_price) {
  if (ledgers.empty()) return std::nullopt;
  double sum = 0.0;
  for (std::size_t i = 0; i < ledgers.size(); ++i) {
    sum += ledgers[i].realized + static_cast<double>(holdings[i]) * final_price;
  }
  return sum / static_cast<double>(ledgers.size());
}

AnalysisReport analyze_prices(std::span<const double> prices, bool first_is_base) {
  AnalysisReport report;
  const auto level = first_is_base ? prices.subspan(std::min<std::size_t>(1, prices.size())) : prices;
  report.n_prices = level.size();
  report.sigma_p = level.empty() ? kNaN : price_stddev(level);

  if (prices.size() < 2) {
    report.gamma_abs = tail_exponent({});
    return report;
  }
  const auto returns = log_returns(prices);
  const auto abs_returns = absolute(returns);
  report.gamma_abs = tail_exponent(abs_returns);
  if (returns.size() >= kMinDfaLength) {
    report.dfa_returns = dfa(returns);
    report.dfa_abs_returns = dfa(abs_returns);
  }
  if (level.size() >= kMinDfaLength) report.dfa_prices = dfa(level);
  return report;
}

AnalysisReport analyze_run(const RunOutput& output) {
  const auto prices = output.measured_prices_with_base();
  AnalysisReport report = analyze_prices(prices, true);

  if (!output.measured().empty()) report.predictability = predictability(output.measured());

  std::vector<WealthLedger> pair, ref;
  std::vector<int> pair_holdings, ref_holdings;
  for (const auto& a : output.pair_agents) {
    pair.push_back(a.ledger);
    pair_holdings.push_back(a.holdings);
  }
  for (const auto& a : output.ref_agents) {
    ref.push_back(a.ledger);
    ref_holdings.push_back(a.holdings);
  }
  const auto wealth = wealth_summary(pair, ref);
  report.w_pair = wealth.w_pair;
  report.w_ref = wealth.w_ref;

  const double final_price = output.records.empty() ? output.initial_price : output.records.back().price;
  report.w_pair_mtm = mark_to_market(pair, pair_holdings, final_price);
  report.w_ref_mtm = mark_to_market(ref, ref_holdings, final_price);
  return report;
}

}  // namespace hetmarket::analysis
