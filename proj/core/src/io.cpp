#include "hetmarket/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "json.hpp"

namespace hetmarket::io {

namespace {

using nlohmann::json;

std::string shortest(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

std::string shortest(const std::optional<double>& value) { return value ? shortest(*value) : ""; }

// Integral JSON value; floats are accepted when they hold an integer (1e5).
std::int64_t get_integer(const json& j, const std::string& key, std::int64_t lo, std::int64_t hi) {
  std::int64_t v = 0;
  if (j.is_number_integer()) {
    if (j.is_number_unsigned() && j.get<std::uint64_t>() > static_cast<std::uint64_t>(hi))
      throw ConfigError(key, "out of range");
    v = j.get<std::int64_t>();
  } else if (j.is_number_float()) {
    const double d = j.get<double>();
    if (d != std::floor(d) || std::abs(d) > 9e15) throw ConfigError(key, "expected an integer");
    v = static_cast<std::int64_t>(d);
  } else {
    throw ConfigError(key, "expected an integer");
  }
  if (v < lo || v > hi) throw ConfigError(key, "out of range");
  return v;
}

int get_int(const json& j, const std::string& key) {
  return static_cast<int>(get_integer(j, key, -2147483647, 2147483647));
}

double get_real(const json& j, const std::string& key) {
  if (!j.is_number()) throw ConfigError(key, "expected a number");
  return j.get<double>();
}

std::uint64_t get_seed(const json& j, const std::string& key) {
  if (j.is_number_unsigned()) return j.get<std::uint64_t>();
  if (j.is_number_integer() && j.get<std::int64_t>() >= 0) return j.get<std::uint64_t>();
  throw ConfigError(key, "expected a non-negative 64-bit integer");
}

void apply_override(json& doc, const Override& ov) {
  json* node = &doc;
  std::string_view rest = ov.key;
  std::string path;
  for (;;) {
    const auto dot = rest.find('.');
    const std::string part(rest.substr(0, dot));
    if (part.empty()) throw ConfigError(ov.key, "malformed override key");
    path += path.empty() ? part : "." + part;
    if (dot == std::string_view::npos) {
      json value = json::parse(ov.value, nullptr, false);
      (*node)[part] = value.is_discarded() ? json(ov.value) : std::move(value);
      return;
    }
    json& child = (*node)[part];
    if (child.is_null()) child = json::object();
    if (!child.is_object()) throw ConfigError(path, "cannot set a member of a non-object value");
    node = &child;
    rest = rest.substr(dot + 1);
  }
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(sep, start);
    out.push_back(line.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

template <typename T>
T parse_number(std::string_view text, std::size_t line, std::string_view column) {
  T value{};
  const auto* end = text.data() + text.size();
  const auto res = std::from_chars(text.data(), end, value);
  if (res.ec != std::errc{} || res.ptr != end) {
    throw CsvError(line, "column '" + std::string(column) + "': cannot parse '" + std::string(text) + "'");
  }
  return value;
}

void write_param_header(std::ostream& out, const sweep::SweepSpec& spec) {
  for (const auto& [name, values] : spec.grid) out << name << ',';
}

void write_param_values(std::ostream& out, const sweep::ParamValues& params) {
  for (const auto& [name, value] : params) out << format_float(value) << ',';
}

void write_dfa(std::ostream& out, std::string_view key, const std::optional<analysis::DfaResult>& dfa) {
  if (!dfa) return;
  out << key << '=' << shortest(dfa->hurst) << '\n';
  out << key << "_r_squared=" << shortest(dfa->r_squared) << '\n';
  out << key << "_scales=";
  for (std::size_t i = 0; i < dfa->scales.size(); ++i) out << (i ? ";" : "") << dfa->scales[i];
  out << '\n' << key << "_fluctuation=";
  for (std::size_t i = 0; i < dfa->fluctuation.size(); ++i)
    out << (i ? ";" : "") << shortest(dfa->fluctuation[i]);
  out << '\n';
}

}  // namespace

Override parse_override(std::string_view text) {
  const auto eq = text.find('=');
  if (eq == std::string_view::npos || eq == 0)
    throw ConfigError("--set", "expected key=value, got '" + std::string(text) + "'");
  return {std::string(trim(text.substr(0, eq))), std::string(trim(text.substr(eq + 1)))};
}

sweep::SweepSpec parse_config(std::string_view json_text, const std::vector<Override>& overrides) {
  json doc = json::parse(json_text, nullptr, false);
  if (doc.is_discarded()) throw ConfigError("config", "not valid JSON");
  if (!doc.is_object()) throw ConfigError("config", "top level must be an object");
  for (const auto& ov : overrides) apply_override(doc, ov);

  sweep::SweepSpec spec;
  MarketConfig& c = spec.base;
  for (const auto& [key, value] : doc.items()) {
    if (key == "n_agents") c.n_agents = get_int(value, key);
    else if (key == "ratio_ref") c.ratio_ref = get_real(value, key);
    else if (key == "memory") c.memory = get_int(value, key);
    else if (key == "n_strategies") c.n_strategies = get_int(value, key);
    else if (key == "delta_t") c.delta_t = get_int(value, key);
    else if (key == "g_max") c.g_max = get_int(value, key);
    else if (key == "alpha") c.alpha = get_real(value, key);
    else if (key == "k_max") c.k_max = get_int(value, key);
    else if (key == "k_min") c.k_min = get_int(value, key);
    else if (key == "p0") c.p0 = get_real(value, key);
    else if (key == "relax_steps") c.relax_steps = get_integer(value, key, 0, INT64_MAX);
    else if (key == "measure_steps") c.measure_steps = get_integer(value, key, 0, INT64_MAX);
    else if (key == "seed") c.seed = spec.master_seed = get_seed(value, key);
    else if (key == "replications") spec.replications = get_int(value, key);
    else if (key == "grid") {
      if (!value.is_object()) throw ConfigError("grid", "expected an object of value lists");
      for (const auto& [name, list] : value.items()) {
        const std::string field = "grid." + name;
        std::vector<double> values;
        if (list.is_array()) {
          for (const auto& v : list) values.push_back(get_real(v, field));
        } else {
          values.push_back(get_real(list, field));
        }
        spec.grid[name] = std::move(values);
      }
    } else {
      throw ConfigError(key, "unknown key");
    }
  }
  spec.validate();
  return spec;
}

sweep::SweepSpec load_config(const std::filesystem::path& path, const std::vector<Override>& overrides) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("config", "cannot open " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), overrides);
}

std::string format_float(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", value);
  return buf;
}

std::string format_optional(const std::optional<double>& value) {
  return value ? format_float(*value) : std::string();
}

void write_rows_csv(std::ostream& out, const std::vector<sweep::SweepRow>& rows,
                    const sweep::SweepSpec& spec) {
  write_param_header(out, spec);
  out << "replication,seed";
  for (auto name : sweep::kMetricNames) out << ',' << name;
  out << ",wall_time_ms\n";
  for (const auto& row : rows) {
    write_param_values(out, row.params);
    out << row.replication << ',' << row.seed;
    for (const auto& m : row.metrics) out << ',' << format_optional(m);
    out << ',' << format_float(row.wall_time_ms) << '\n';
  }
}

void write_aggregate_csv(std::ostream& out, const std::vector<sweep::AggregateRow>& rows,
                         const sweep::SweepSpec& spec) {
  write_param_header(out, spec);
  out << "n_runs,n_errors";
  for (auto name : sweep::kMetricNames) out << ',' << name << "_mean," << name << "_stderr";
  out << '\n';
  for (const auto& row : rows) {
    write_param_values(out, row.params);
    out << row.n_ok << ',' << row.n_errors;
    for (const auto& m : row.metrics) {
      out << ',' << format_optional(m.mean) << ',' << format_optional(m.stderr_mean);
    }
    out << '\n';
  }
}

void write_series_csv(std::ostream& out, const RunOutput& output) {
  out << "tick,price,excess_demand,pair_buys,pair_sells,ref_buys,ref_sells,is_measured\n";
  out << "0," << shortest(output.initial_price) << ",0,0,0,0,0,0\n";
  for (const auto& r : output.records) {
    out << r.tick << ',' << shortest(r.price) << ',' << r.excess_demand << ',' << r.pair_buys << ','
        << r.pair_sells << ',' << r.ref_buys << ',' << r.ref_sells << ','
        << (r.tick > output.n_relax() ? 1 : 0) << '\n';
  }
}

SeriesTable read_series_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  // Header: first non-empty line.
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) break;
  }
  if (trim(line).empty()) throw CsvError(line_no == 0 ? 1 : line_no, "missing header row");

  const auto header = split(trim(line), ',');
  std::optional<std::size_t> price_col, demand_col, measured_col;
  for (std::size_t i = 0; i < header.size(); ++i) {
    const auto name = trim(header[i]);
    if (name == "price") price_col = i;
    else if (name == "excess_demand") demand_col = i;
    else if (name == "is_measured") measured_col = i;
  }
  if (!price_col) throw CsvError(line_no, "no 'price' column");

  SeriesTable table;
  std::vector<int> demand;
  std::vector<bool> measured;
  while (std::getline(in, line)) {
    ++line_no;
    const auto row = trim(line);
    if (row.empty()) continue;
    const auto fields = split(row, ',');
    if (fields.size() != header.size()) {
      throw CsvError(line_no, "expected " + std::to_string(header.size()) + " fields, got " +
                                  std::to_string(fields.size()));
    }
    const double price = parse_number<double>(trim(fields[*price_col]), line_no, "price");
    if (!(price > 0.0) || !std::isfinite(price)) throw CsvError(line_no, "price must be positive");
    table.price.push_back(price);
    if (demand_col) demand.push_back(parse_number<int>(trim(fields[*demand_col]), line_no, "excess_demand"));
    if (measured_col) {
      const int flag = parse_number<int>(trim(fields[*measured_col]), line_no, "is_measured");
      if (flag != 0 && flag != 1) throw CsvError(line_no, "is_measured must be 0 or 1");
      measured.push_back(flag == 1);
    }
  }
  if (demand_col) table.excess_demand = std::move(demand);
  if (measured_col) table.is_measured = std::move(measured);
  return table;
}

analysis::AnalysisReport analyze_table(const SeriesTable& table, int memory) {
  const std::size_t n = table.price.size();
  std::size_t first = 0;
  if (table.is_measured) {
    const auto& flags = *table.is_measured;
    first = static_cast<std::size_t>(std::find(flags.begin(), flags.end(), true) - flags.begin());
    if (first == n) throw analysis::InputError("no measured rows");
    if (std::find(flags.begin() + static_cast<std::ptrdiff_t>(first), flags.end(), false) != flags.end())
      throw analysis::InputError("measured rows must form a contiguous suffix");
  }
  const bool has_base = first > 0;
  const std::span<const double> prices(table.price.data() + (has_base ? first - 1 : 0),
                                       n - (has_base ? first - 1 : 0));
  auto report = analysis::analyze_prices(prices, has_base);

  if (table.excess_demand) {
    if (memory < 1 || memory > kMaxMemory) throw ConfigError("memory", "out of range");
    std::vector<std::uint32_t> patterns;
    std::vector<int> demand;
    const std::uint32_t mask = (1U << memory) - 1;
    std::uint32_t bits = 0;
    for (std::size_t i = 1; i < n; ++i) {
      // bits holds the changes into rows 1..i-1; row i is reconstructible
      // once `memory` of them are known.
      if (i >= first && i > static_cast<std::size_t>(memory)) {
        patterns.push_back(bits);
        demand.push_back((*table.excess_demand)[i]);
      }
      bits = ((bits << 1) | (table.price[i] >= table.price[i - 1] ? 1U : 0U)) & mask;
    }
    if (!patterns.empty()) report.predictability = analysis::predictability(patterns, demand);
  }
  return report;
}

void write_report(std::ostream& out, const analysis::AnalysisReport& report, const MarketConfig* config) {
  if (config) {
    const auto& c = *config;
    out << "n_agents=" << c.n_agents << '\n'
        << "ratio_ref=" << shortest(c.ratio_ref) << '\n'
        << "memory=" << c.memory << '\n'
        << "n_strategies=" << c.n_strategies << '\n'
        << "delta_t=" << c.delta_t << '\n'
        << "g_max=" << c.g_max << '\n'
        << "alpha=" << shortest(c.alpha) << '\n'
        << "k_max=" << c.k_max << '\n'
        << "k_min=" << c.k_min << '\n'
        << "p0=" << shortest(c.p0) << '\n'
        << "relax_steps=" << c.relax_steps << '\n'
        << "measure_steps=" << c.measure_steps << '\n'
        << "seed=" << c.seed << '\n';
  }
  out << "n_prices=" << report.n_prices << '\n';
  out << "sigma_p=" << shortest(report.sigma_p) << '\n';
  if (report.predictability) out << "predictability=" << shortest(*report.predictability) << '\n';

  const auto& g = report.gamma_abs;
  out << "gamma_abs=" << shortest(g.gamma) << '\n'
      << "gamma_abs_stderr=" << shortest(g.gamma_stderr) << '\n'
      << "gamma_abs_xmin=" << shortest(g.xmin) << '\n'
      << "gamma_abs_xmax=" << shortest(g.xmax) << '\n'
      << "gamma_abs_n_tail=" << g.n_tail << '\n'
      << "gamma_abs_reliable=" << (g.reliable ? "true" : "false") << '\n'
      << "gamma_abs_regression=" << shortest(g.gamma_regression) << '\n'
      << "gamma_abs_regression_r_squared=" << shortest(g.r_squared) << '\n';

  write_dfa(out, "hurst_returns", report.dfa_returns);
  write_dfa(out, "hurst_abs", report.dfa_abs_returns);
  write_dfa(out, "hurst_prices", report.dfa_prices);

  if (report.w_pair) out << "w_pair=" << shortest(report.w_pair) << '\n';
  if (report.w_ref) out << "w_ref=" << shortest(report.w_ref) << '\n';
  if (report.w_pair_mtm) out << "w_pair_mark_to_market=" << shortest(report.w_pair_mtm) << '\n';
  if (report.w_ref_mtm) out << "w_ref_mark_to_market=" << shortest(report.w_ref_mtm) << '\n';
}

}  // namespace hetmarket::io
