#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace hetmarket::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;   // usage, config or input-format error
inline constexpr int kExitRuntime = 2;

struct RunArgs {
  std::filesystem::path config;
  std::filesystem::path out;
  std::vector<std::string> sets;  // key=value overrides, last one wins
  bool quiet = false;
};

struct SweepArgs {
  std::filesystem::path config;
  std::filesystem::path out;
  std::vector<std::string> sets;
  int parallelism = 1;
  bool dump_series = false;
  bool quiet = false;
};

struct AnalyzeArgs {
  std::filesystem::path input;
  std::filesystem::path out;
  std::filesystem::path config;  // optional; supplies `memory` for H
  std::vector<std::string> sets;
  bool quiet = false;
};

// Writes <out>/series.csv and <out>/report.txt.
int cmd_run(const RunArgs& args);

// Writes <out>/rows.csv and <out>/aggregate.csv, plus
// <out>/series/g<grid>_r<replication>.csv with dump_series.
int cmd_sweep(const SweepArgs& args);

// Writes <out>/report.txt for an external price series.
int cmd_analyze(const AnalyzeArgs& args);

// Parses argv and dispatches to a subcommand.
int main_entry(int argc, const char* const* argv);

}  // namespace hetmarket::cli
