#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace hetmarket {

// Raised for an invalid configuration value. field() names the offending key
// using the config-file spelling (e.g. "ratio_ref").
class ConfigError : public std::invalid_argument {
public:
  ConfigError(std::string field, const std::string& what)
      : std::invalid_argument(field + ": " + what), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

private:
  std::string field_;
};

// Model parameters. Defaults follow the N=1000 figures (n_s=2, dt=10,
// alpha=10, K in [-1, 1]) at desk-scale horizons.
struct MarketConfig {
  int n_agents = 1000;
  double ratio_ref = 0.0;
  int memory = 3;
  int n_strategies = 2;
  int delta_t = 10;
  int g_max = 1000;
  double alpha = 10.0;
  int k_max = 1;
  int k_min = -1;
  double p0 = 100.0;
  std::int64_t relax_steps = 20000;
  std::int64_t measure_steps = 5000;
  std::uint64_t seed = 1;

  // Throws ConfigError naming the first invalid field.
  void validate() const;

  int n_ref() const;
  int n_pair() const { return n_agents - n_ref(); }
};

// Longest history the pattern encoding supports.
inline constexpr int kMaxMemory = 30;

}  // namespace hetmarket
