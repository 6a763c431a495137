#pragma once

#include <string>
#include <vector>

#include "foliate/solver.hpp"

namespace foliate {

/// Parsed run configuration. The file format is plain key = value with
/// '#' comments; lists use brackets (`r_schedule = [0.05, 0.1, 0.2]`).
/// Metric parameters live under a `metric.` prefix
/// (`metric.epsilon = 0.05`, `metric.a = [1, -0.5, 0.25]` expands to
/// a1..a3); every other key must be one of the known fields below.
struct RunConfig {
  MetricSpec metric;
  int L = 12;
  std::vector<double> r_schedule;
  SolveOptions solve;
  std::string output_dir = ".";
  unsigned long seed = 0;

  // single-radius commands (uniqueness check)
  double r = 0.0;
  int n_perturbations = 20;
  double perturbation_size = 1e-3;

  std::string raw;   // verbatim file text, embedded in outputs
  std::string hash;  // FNV-1a of `raw`, hex
};

/// 64-bit FNV-1a, lowercase hex.
std::string config_hash(const std::string& text);

/// Parse and validate; unknown keys, malformed values, or invalid
/// ranges raise ConfigError.
RunConfig parse_config(const std::string& text);

/// parse_config over the file contents; IoError if unreadable.
RunConfig load_config(const std::string& path);

} // namespace foliate
