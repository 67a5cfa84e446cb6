#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "hetmarket/analysis.hpp"
#include "hetmarket/market.hpp"
#include "hetmarket/sweep.hpp"

namespace hetmarket::io {

// Keys accepted in a config document, in documentation order.
inline constexpr std::array<std::string_view, 15> kConfigKeys = {
    "n_agents", "ratio_ref",   "memory",        "n_strategies", "delta_t",
    "g_max",    "alpha",       "k_max",         "k_min",        "p0",
    "relax_steps", "measure_steps", "seed",     "replications", "grid"};

// "key=value" with a dotted key ("grid.memory=[2,5]"). The value is read as
// JSON when it parses, otherwise as a bare string.
struct Override {
  std::string key;
  std::string value;
};

// Throws ConfigError("--set", ...) if there is no '='.
Override parse_override(std::string_view text);

// Parses a JSON config document and applies overrides in order (the last
// occurrence of a key wins). Missing keys keep their defaults. Throws
// ConfigError naming the offending key.
sweep::SweepSpec parse_config(std::string_view json_text, const std::vector<Override>& overrides = {});

// As parse_config, reading the file first. A missing or unreadable file is a
// ConfigError whose message contains the path.
sweep::SweepSpec load_config(const std::filesystem::path& path,
                             const std::vector<Override>& overrides = {});

// 9 significant digits, "nan"/"inf"/"-inf" for non-finite values.
std::string format_float(double value);
std::string format_optional(const std::optional<double>& value);  // empty when absent

void write_rows_csv(std::ostream& out, const std::vector<sweep::SweepRow>& rows,
                    const sweep::SweepSpec& spec);
void write_aggregate_csv(std::ostream& out, const std::vector<sweep::AggregateRow>& rows,
                         const sweep::SweepSpec& spec);

// Time series of a run: one row for the initial state (tick 0) and one per
// tick. Prices are written in shortest round-trip form so they read back
// bit-exact.
void write_series_csv(std::ostream& out, const RunOutput& output);

class CsvError : public std::runtime_error {
public:
  CsvError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

struct SeriesTable {
  std::vector<double> price;
  std::optional<std::vector<int>> excess_demand;
  std::optional<std::vector<bool>> is_measured;
};

// Reads a CSV with a header row containing at least a `price` column.
// Throws CsvError with the 1-based line number on malformed input.
SeriesTable read_series_csv(std::istream& in);

// Analysis of a series table. Rows flagged is_measured=0 only provide the base
// price of the measured segment and the pattern history. H is computed when
// the excess_demand column is present, using `memory` to rebuild the history
// patterns from the price changes; ticks whose full pattern cannot be
// rebuilt are skipped.
analysis::AnalysisReport analyze_table(const SeriesTable& table, int memory);

// key=value lines. Config values are written first when given.
void write_report(std::ostream& out, const analysis::AnalysisReport& report,
                  const MarketConfig* config = nullptr);

}  // namespace hetmarket::io
