#include "cli.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "hetmarket/analysis.hpp"
#include "hetmarket/io.hpp"
#include "hetmarket/market.hpp"
#include "hetmarket/sweep.hpp"

namespace hetmarket::cli {

namespace fs = std::filesystem;

namespace {

std::vector<io::Override> parse_sets(const std::vector<std::string>& sets) {
  std::vector<io::Override> out;
  out.reserve(sets.size());
  for (const auto& s : sets) out.push_back(io::parse_override(s));
  return out;
}

void prepare_dir(const fs::path& dir) {
  fs::create_directories(dir);
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

void close_output(std::ofstream& out, const fs::path& path) {
  out.close();
  if (!out) throw std::runtime_error("error writing " + path.string());
}

// Runs `body` and maps exceptions onto exit codes.
template <typename Body>
int guarded(Body&& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    std::cerr << "error: config: " << e.what() << '\n';
    return kExitConfig;
  } catch (const io::CsvError& e) {
    std::cerr << "error: input: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

}  // namespace

int cmd_run(const RunArgs& args) {
  return guarded([&] {
    const auto spec = io::load_config(args.config, parse_sets(args.sets));
    const MarketConfig& config = spec.base;

    prepare_dir(args.out);
    const auto output = run(config);
    const auto report = analysis::analyze_run(output);

    const auto series_path = args.out / "series.csv";
    auto series = open_output(series_path);
    io::write_series_csv(series, output);
    close_output(series, series_path);

    const auto report_path = args.out / "report.txt";
    auto rep = open_output(report_path);
    io::write_report(rep, report, &config);
    close_output(rep, report_path);

    if (!args.quiet) {
      std::cerr << "run: " << output.records.size() << " ticks, sigma_p=" << io::format_float(report.sigma_p)
                << " -> " << args.out.string() << '\n';
    }
    return kExitOk;
  });
}

int cmd_sweep(const SweepArgs& args) {
  return guarded([&] {
    const auto spec = io::load_config(args.config, parse_sets(args.sets));
    if (args.parallelism < 1) throw ConfigError("--parallelism", "must be positive");

    prepare_dir(args.out);
    const auto series_dir = args.out / "series";
    if (args.dump_series) prepare_dir(series_dir);

    sweep::Runner runner = sweep::default_runner;
    if (args.dump_series) {
      runner = [&](const sweep::RunTask& task) {
        const auto output = run(task.config);
        const auto path = series_dir / ("g" + std::to_string(task.grid_index) + "_r" +
                                        std::to_string(task.replication) + ".csv");
        auto out = open_output(path);
        io::write_series_csv(out, output);
        close_output(out, path);
        return sweep::metrics_from(analysis::analyze_run(output));
      };
    }

    auto log_row = [&](const sweep::SweepRow& row) {
      if (args.quiet) return;
      std::cerr << "sweep: point " << row.grid_index << " rep " << row.replication << " seed " << row.seed;
      if (row.error) {
        std::cerr << " FAILED: " << *row.error;
      } else {
        std::cerr << " sigma_p=" << io::format_optional(row.metrics[0]);
      }
      std::cerr << " (" << io::format_float(row.wall_time_ms) << " ms)\n";
    };

    const auto rows = sweep::execute_sweep(spec, args.parallelism, runner, log_row);
    const auto agg = sweep::aggregate(rows);

    const auto rows_path = args.out / "rows.csv";
    auto rows_out = open_output(rows_path);
    io::write_rows_csv(rows_out, rows, spec);
    close_output(rows_out, rows_path);

    const auto agg_path = args.out / "aggregate.csv";
    auto agg_out = open_output(agg_path);
    io::write_aggregate_csv(agg_out, agg, spec);
    close_output(agg_out, agg_path);
    return kExitOk;
  });
}

int cmd_analyze(const AnalyzeArgs& args) {
  return guarded([&] {
    const auto overrides = parse_sets(args.sets);
    const auto spec = args.config.empty() ? io::parse_config("{}", overrides)
                                          : io::load_config(args.config, overrides);

    std::ifstream in(args.input, std::ios::binary);
    if (!in) throw ConfigError("input", "cannot open " + args.input.string());
    const auto table = io::read_series_csv(in);

    prepare_dir(args.out);
    const auto report = io::analyze_table(table, spec.base.memory);
    const auto report_path = args.out / "report.txt";
    auto out = open_output(report_path);
    io::write_report(out, report);
    close_output(out, report_path);

    if (!args.quiet) {
      std::cerr << "analyze: " << table.price.size() << " rows -> " << report_path.string() << '\n';
    }
    return kExitOk;
  });
}

int main_entry(int argc, const char* const* argv) {
  CLI::App app{"Agent-based market with pair-pattern and reference-point investors"};
  app.require_subcommand(1);

  RunArgs run_args;
  auto* run_cmd = app.add_subcommand("run", "Simulate one market and analyse its measured segment");
  run_cmd->add_option("--config", run_args.config, "JSON config file")->required();
  run_cmd->add_option("--out", run_args.out, "Output directory")->required();
  run_cmd->add_option("--set", run_args.sets, "Override a config key (key=value, repeatable)");
  run_cmd->add_flag("--quiet", run_args.quiet, "Suppress progress output");

  SweepArgs sweep_args;
  auto* sweep_cmd = app.add_subcommand("sweep", "Replicated runs over a parameter grid");
  sweep_cmd->add_option("--config", sweep_args.config, "JSON config file")->required();
  sweep_cmd->add_option("--out", sweep_args.out, "Output directory")->required();
  sweep_cmd->add_option("--set", sweep_args.sets, "Override a config key (key=value, repeatable)");
  sweep_cmd->add_option("--parallelism", sweep_args.parallelism, "Worker threads")->capture_default_str();
  sweep_cmd->add_flag("--dump-series", sweep_args.dump_series, "Write every run's time series");
  sweep_cmd->add_flag("--quiet", sweep_args.quiet, "Suppress the per-run log");

  AnalyzeArgs analyze_args;
  auto* analyze_cmd = app.add_subcommand("analyze", "Analyse a price series CSV");
  analyze_cmd->add_option("input", analyze_args.input, "CSV with a price column")->required();
  analyze_cmd->add_option("--out", analyze_args.out, "Output directory")->required();
  analyze_cmd->add_option("--config", analyze_args.config, "Config supplying memory for H");
  analyze_cmd->add_option("--set", analyze_args.sets, "Override a config key (key=value, repeatable)");
  analyze_cmd->add_flag("--quiet", analyze_args.quiet, "Suppress progress output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  if (run_cmd->parsed()) return cmd_run(run_args);
  if (sweep_cmd->parsed()) return cmd_sweep(sweep_args);
  return cmd_analyze(analyze_args);
}

}  // namespace hetmarket::cli
