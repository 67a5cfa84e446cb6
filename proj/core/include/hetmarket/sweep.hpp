#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "hetmarket/analysis.hpp"
#include "hetmarket/config.hpp"

namespace hetmarket::sweep {

// Parameters a grid may vary. Kept in alphabetical order, which is also the
// column order of the output files.
inline constexpr std::array<std::string_view, 3> kGridParameters = {"g_max", "memory", "ratio_ref"};

// Per-run metrics, in output column order.
inline constexpr std::array<std::string_view, 7> kMetricNames = {
    "sigma_p", "predictability", "gamma_abs", "hurst_returns", "hurst_abs", "w_pair", "w_ref"};
inline constexpr std::size_t kMetricCount = kMetricNames.size();

using Metrics = std::array<std::optional<double>, kMetricCount>;

Metrics metrics_from(const analysis::AnalysisReport& report);

struct SweepSpec {
  MarketConfig base;
  std::map<std::string, std::vector<double>, std::less<>> grid;  // sorted by name
  int replications = 10;
  std::uint64_t master_seed = 1;

  // Throws ConfigError on unknown grid parameters, invalid grid values or a
  // non-positive replication count.
  void validate() const;
};

using ParamValues = std::vector<std::pair<std::string, double>>;

struct GridPoint {
  ParamValues values;
  MarketConfig config;  // base with the grid values applied; seed not yet derived
};

// Cartesian product of the grid in canonical order: parameters alphabetical,
// the last parameter varying fastest, values in listed order. An empty grid
// yields the base configuration as a single point.
std::vector<GridPoint> expand_grid(const SweepSpec& spec);

// Sets one grid parameter on a config. Throws ConfigError if the value is
// invalid for that parameter.
void apply_parameter(MarketConfig& config, std::string_view name, double value);

// Seed of replication `replication` at grid point `grid_index`:
//
//   splitmix64(splitmix64(master_seed) ^ (grid_index << 32 | replication))
//
// splitmix64 is a bijection and the packed key is injective for indices
// below 2^32, so distinct (grid_index, replication) pairs under one master
// seed never collide.
std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t grid_index,
                          std::uint64_t replication);

struct RunTask {
  std::size_t grid_index = 0;
  int replication = 0;
  MarketConfig config;  // seed already derived
};

struct SweepRow {
  std::size_t grid_index = 0;
  ParamValues params;
  int replication = 0;
  std::uint64_t seed = 0;
  Metrics metrics;
  std::optional<std::string> error;  // set for failed runs; metrics are then empty
  double wall_time_ms = 0.0;
};

using Runner = std::function<Metrics(const RunTask&)>;

// Simulates the task's config and analyses its measured segment.
Metrics default_runner(const RunTask& task);

// Runs every (grid point x replication). Rows come back in canonical order
// (grid-major, replication-minor) whatever the parallelism. A run that throws
// yields an error row and the sweep carries on. on_row, if set, is called
// once per finished row, serialized, in completion order.
std::vector<SweepRow> execute_sweep(const SweepSpec& spec, int parallelism,
                                    const Runner& runner = default_runner,
                                    const std::function<void(const SweepRow&)>& on_row = {});

struct MetricStats {
  std::optional<double> mean;
  std::optional<double> stderr_mean;  // absent with fewer than two values
  std::size_t n = 0;
};

struct AggregateRow {
  std::size_t grid_index = 0;
  ParamValues params;
  std::size_t n_ok = 0;
  std::size_t n_errors = 0;
  std::array<MetricStats, kMetricCount> metrics;
};

// Mean and standard error of each metric per grid point, skipping error rows
// and absent or non-finite values. Independent of the input row order.
std::vector<AggregateRow> aggregate(std::span<const SweepRow> rows);

}  // namespace hetmarket::sweep
