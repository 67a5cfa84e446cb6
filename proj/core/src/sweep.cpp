#include "hetmarket/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "hetmarket/rng.hpp"

namespace hetmarket::sweep {

Metrics metrics_from(const analysis::AnalysisReport& report) {
  Metrics m;
  m[0] = report.sigma_p;
  m[1] = report.predictability;
  m[2] = report.gamma_abs.gamma;
  if (report.dfa_returns) m[3] = report.dfa_returns->hurst;
  if (report.dfa_abs_returns) m[4] = report.dfa_abs_returns->hurst;
  m[5] = report.w_pair;
  m[6] = report.w_ref;
  return m;
}

void apply_parameter(MarketConfig& config, std::string_view name, double value) {
  auto as_int = [&](std::string_view field) {
    if (!std::isfinite(value) || value != std::floor(value) || std::abs(value) > 2e9)
      throw ConfigError(std::string(field), "grid value must be an integer");
    return static_cast<int>(value);
  };
  if (name == "g_max") {
    config.g_max = as_int(name);
  } else if (name == "memory") {
    config.memory = as_int(name);
  } else if (name == "ratio_ref") {
    config.ratio_ref = value;
  } else {
    throw ConfigError("grid." + std::string(name), "not a sweepable parameter");
  }
}

void SweepSpec::validate() const {
  base.validate();
  if (replications < 1) throw ConfigError("replications", "must be positive");
  for (const auto& [name, values] : grid) {
    if (std::find(kGridParameters.begin(), kGridParameters.end(), name) == kGridParameters.end())
      throw ConfigError("grid." + name, "not a sweepable parameter");
    if (values.empty()) throw ConfigError("grid." + name, "empty value list");
    for (double v : values) {
      MarketConfig probe = base;
      apply_parameter(probe, name, v);
      try {
        probe.validate();
      } catch (const ConfigError& e) {
        throw ConfigError("grid." + name, e.what());
      }
    }
  }
}

std::vector<GridPoint> expand_grid(const SweepSpec& spec) {
  std::vector<GridPoint> points{GridPoint{{}, spec.base}};
  for (const auto& [name, values] : spec.grid) {
    std::vector<GridPoint> next;
    next.reserve(points.size() * values.size());
    for (const auto& point : points) {
      for (double v : values) {
        GridPoint p = point;
        p.values.emplace_back(name, v);
        apply_parameter(p.config, name, v);
        next.push_back(std::move(p));
      }
    }
    points = std::move(next);
  }
  return points;
}

std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t grid_index,
                          std::uint64_t replication) {
  const std::uint64_t key = (grid_index << 32) | (replication & 0xffffffffULL);
  return splitmix64(splitmix64(master_seed) ^ key);
}

Metrics default_runner(const RunTask& task) {
  return metrics_from(analysis::analyze_run(run(task.config)));
}

std::vector<SweepRow> execute_sweep(const SweepSpec& spec, int parallelism, const Runner& runner,
                                    const std::function<void(const SweepRow&)>& on_row) {
  spec.validate();
  const auto points = expand_grid(spec);
  const auto reps = static_cast<std::size_t>(spec.replications);

  std::vector<SweepRow> rows(points.size() * reps);
  for (std::size_t g = 0; g < points.size(); ++g) {
    for (std::size_t r = 0; r < reps; ++r) {
      auto& row = rows[g * reps + r];
      row.grid_index = g;
      row.params = points[g].values;
      row.replication = static_cast<int>(r);
      row.seed = derive_seed(spec.master_seed, g, r);
    }
  }

  std::atomic<std::size_t> next{0};
  std::mutex report_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < rows.size(); i = next++) {
      auto& row = rows[i];
      RunTask task{row.grid_index, row.replication, points[row.grid_index].config};
      task.config.seed = row.seed;

      const auto start = std::chrono::steady_clock::now();
      try {
        row.metrics = runner(task);
      } catch (const std::exception& e) {
        row.metrics = {};
        row.error = e.what();
      } catch (...) {
        row.metrics = {};
        row.error = "unknown error";
      }
      row.wall_time_ms =
          std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();

      if (on_row) {
        std::lock_guard lock(report_mutex);
        on_row(row);
      }
    }
  };

  const auto n_threads = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(parallelism, 1)), 1,
                                                 std::max<std::size_t>(rows.size(), 1));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(n_threads);
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  }
  return rows;
}

std::vector<AggregateRow> aggregate(std::span<const SweepRow> rows) {
  // Group by grid point, then order each group by replication so the
  // floating-point sums do not depend on the input order.
  std::map<std::size_t, std::vector<const SweepRow*>> groups;
  for (const auto& row : rows) groups[row.grid_index].push_back(&row);

  std::vector<AggregateRow> out;
  out.reserve(groups.size());
  for (auto& [grid_index, members] : groups) {
    std::sort(members.begin(), members.end(),
              [](const SweepRow* a, const SweepRow* b) { return a->replication < b->replication; });

    AggregateRow agg;
    agg.grid_index = grid_index;
    agg.params = members.front()->params;
    for (const auto* row : members) (row->error ? agg.n_errors : agg.n_ok)++;

    for (std::size_t m = 0; m < kMetricCount; ++m) {
      std::vector<double> values;
      for (const auto* row : members) {
        if (row->error) continue;
        const auto& v = row->metrics[m];
        if (v && std::isfinite(*v)) values.push_back(*v);
      }
      auto& stats = agg.metrics[m];
      stats.n = values.size();
      if (values.empty()) continue;
      double mean = 0.0;
      for (double v : values) mean += v;
      mean /= static_cast<double>(values.size());
      stats.mean = mean;
      if (values.size() >= 2) {
        double ss = 0.0;
        for (double v : values) ss += (v - mean) * (v - mean);
        const double n = static_cast<double>(values.size());
        stats.stderr_mean = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
      }
    }
    out.push_back(std::move(agg));
  }
  return out;
}

}  // namespace hetmarket::sweep
