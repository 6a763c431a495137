#include "foliate/config.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace foliate {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

double parse_double(const std::string& key, const std::string& v) {
  size_t pos = 0;
  double x;
  try {
    x = std::stod(v, &pos);
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': cannot parse '" + v + "' as a number");
  }
  if (pos != v.size() || !std::isfinite(x))
    throw ConfigError("key '" + key + "': cannot parse '" + v + "' as a number");
  return x;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("key '" + key + "': expected true/false, got '" + v + "'");
}

std::vector<double> parse_list(const std::string& key, const std::string& v) {
  if (v.size() < 2 || v.front() != '[' || v.back() != ']')
    throw ConfigError("key '" + key + "': expected a bracketed list");
  std::vector<double> out;
  std::stringstream ss(v.substr(1, v.size() - 2));
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_double(key, trim(item)));
  return out;
}

} // namespace

std::string config_hash(const std::string& text) {
  uint64_t h = 14695981039346656037ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

RunConfig parse_config(const std::string& text) {
  RunConfig cfg;
  cfg.raw = text;
  cfg.hash = config_hash(text);
  cfg.metric.id.clear();

  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    size_t hash_pos = line.find('#');
    if (hash_pos != std::string::npos) line.erase(hash_pos);
    line = trim(line);
    if (line.empty()) continue;
    size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (key.empty() || val.empty())
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");

    if (key == "metric") {
      cfg.metric.id = val;
    } else if (key == "chart_radius") {
      cfg.metric.chart_radius = parse_double(key, val);
    } else if (key.rfind("metric.", 0) == 0) {
      const std::string pname = key.substr(7);
      if (pname.empty()) throw ConfigError("empty metric parameter name");
      if (!val.empty() && val.front() == '[') {
        const auto items = parse_list(key, val);
        for (size_t i = 0; i < items.size(); ++i)
          cfg.metric.params[pname + std::to_string(i + 1)] = items[i];
      } else {
        cfg.metric.params[pname] = parse_double(key, val);
      }
    } else if (key == "L") {
      cfg.L = static_cast<int>(parse_double(key, val));
    } else if (key == "r_schedule") {
      cfg.r_schedule = parse_list(key, val);
    } else if (key == "tol") {
      cfg.solve.tol = parse_double(key, val);
    } else if (key == "max_iters") {
      cfg.solve.max_iters = static_cast<int>(parse_double(key, val));
    } else if (key == "freeze_tau") {
      cfg.solve.freeze_tau = parse_bool(key, val);
    } else if (key == "output_dir") {
      cfg.output_dir = val;
    } else if (key == "seed") {
      cfg.seed = static_cast<unsigned long>(parse_double(key, val));
    } else if (key == "r") {
      cfg.r = parse_double(key, val);
    } else if (key == "n_perturbations") {
      cfg.n_perturbations = static_cast<int>(parse_double(key, val));
    } else if (key == "perturbation_size") {
      cfg.perturbation_size = parse_double(key, val);
    } else {
      throw ConfigError("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
  }

  if (cfg.metric.id.empty()) throw ConfigError("missing required key 'metric'");
  validate_spec(cfg.metric);
  if (cfg.L < 4) throw ConfigError("L must be >= 4");
  if (cfg.solve.tol <= 0.0) throw ConfigError("tol must be positive");
  if (cfg.solve.max_iters < 1) throw ConfigError("max_iters must be >= 1");
  for (double r : cfg.r_schedule)
    if (!(r > 0.0)) throw ConfigError("r_schedule entries must be positive");
  if (cfg.r < 0.0) throw ConfigError("r must be nonnegative");
  if (cfg.n_perturbations < 0) throw ConfigError("n_perturbations must be nonnegative");
  if (cfg.perturbation_size <= 0.0) throw ConfigError("perturbation_size must be positive");
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

} // namespace foliate
