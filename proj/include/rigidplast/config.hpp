#pragma once

// Flat key = value run configuration: parsing, validation, serialization.
//
// Format: one `key = value` pair per line, `#` starts a comment, blank
// lines are ignored. Lists are comma separated. Unknown or repeated keys
// are errors.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "rigidplast/benchmarks.hpp"
#include "rigidplast/error.hpp"
#include "rigidplast/evolution.hpp"

namespace rigidplast {

enum class Command { Run, Sweep, Example41, SafeLoad, Report };

inline std::string command_name(Command c) {
  switch (c) {
    case Command::Run: return "run";
    case Command::Sweep: return "sweep";
    case Command::Example41: return "example41";
    case Command::SafeLoad: return "safeload";
    case Command::Report: return "report";
  }
  return "run";
}

inline std::optional<Command> parse_command(std::string_view s) {
  for (Command c : {Command::Run, Command::Sweep, Command::Example41, Command::SafeLoad,
                    Command::Report})
    if (command_name(c) == s) return c;
  return std::nullopt;
}

/// Shortest decimal string that parses back to the same double.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

inline std::vector<double> default_epsilons() {
  std::vector<double> e;
  for (int k = 0; k <= 12; ++k) e.push_back(std::ldexp(1.0, -k));
  return e;
}

struct RunConfig {
  Command command = Command::Run;
  BenchmarkId benchmark = BenchmarkId::Shear;
  int mesh_n = 16;
  int time_steps = 32;
  double time_horizon = 1.0;
  TimeGrid time_grid = TimeGrid::Uniform;
  /// First step of the geometric grid; 0 selects 1e-5 * horizon.
  double time_grid_first = 0.0;
  std::vector<double> epsilon_list = default_epsilons();
  double mu = 1.0;
  double bulk_modulus = 1.0;
  double kappa = 1.0;
  BoundaryMode boundary_mode = BoundaryMode::Strong;
  double tolerance = 1e-10;
  int max_iters = 10000;
  std::string output_dir = "out";
  std::uint64_t seed = 0;
  double shear_rate = 2.0;
  double traction_factor = 0.9;
  // Rigid-motion example: constant c, piecewise constant f(x2), g(x1),
  // A = [[0, a], [-a, 0]], b, and the lambda values compared.
  double ex41_c = 0.2;
  std::vector<double> ex41_f_values{0.0};
  std::vector<double> ex41_f_breaks;
  std::vector<double> ex41_g_values{0.0};
  std::vector<double> ex41_g_breaks;
  std::vector<double> ex41_lambdas{-2.0, 0.0, 2.0};
  double ex41_a = 1.0;
  std::vector<double> ex41_b{0.0, 0.0};
  int safeload_iters = 2000;
  /// Loads of the final frame are scaled by this factor.
  double safeload_load_factor = 1.0;
  /// report: second sweep with mu scaled by this factor.
  double compare_mu_factor = 2.0;
  /// report: plastic support is |Ev| > plastic_threshold * max |Ev|.
  double plastic_threshold = 1e-6;
  int threads = 1;

  BenchmarkParams benchmark_params() const {
    BenchmarkParams p;
    p.mesh_n = mesh_n;
    p.time_steps = time_steps;
    p.horizon = time_horizon;
    p.grid = time_grid;
    p.grid_first = time_grid_first;
    p.mu = mu;
    p.bulk_modulus = bulk_modulus;
    p.kappa = kappa;
    p.shear_rate = shear_rate;
    p.traction_factor = traction_factor;
    p.rigid_a = skew(ex41_a);
    p.rigid_b = Vec2{ex41_b[0], ex41_b[1]};
    return p;
  }

  StepOptions step_options() const {
    StepOptions o;
    o.tolerance = tolerance;
    o.max_iters = max_iters;
    o.boundary_mode = boundary_mode;
    return o;
  }

  Example41Params example41_params() const {
    Example41Params p;
    p.c = ex41_c;
    p.f = PiecewiseConstant(ex41_f_breaks, ex41_f_values);
    p.g = PiecewiseConstant(ex41_g_breaks, ex41_g_values);
    p.a = skew(ex41_a);
    p.b = Vec2{ex41_b[0], ex41_b[1]};
    p.lambda = ex41_lambdas.front();
    return p;
  }

  /// Throws ConfigError naming the first offending field.
  void validate() const {
    auto positive = [](double v, const char* field) {
      if (!(v > 0.0) || !std::isfinite(v))
        throw ConfigError(std::string(field) + " must be positive", std::nullopt, field);
    };
    if (mesh_n < 1) throw ConfigError("mesh_n must be >= 1", std::nullopt, "mesh_n");
    if (time_steps < 1) throw ConfigError("time_steps must be >= 1", std::nullopt, "time_steps");
    positive(time_horizon, "time_horizon");
    if (time_grid_first < 0.0 || !(time_grid_first < time_horizon))
      throw ConfigError("time_grid_first must lie in [0, time_horizon)", std::nullopt,
                        "time_grid_first");
    if (epsilon_list.empty())
      throw ConfigError("epsilon_list must not be empty", std::nullopt, "epsilon_list");
    for (std::size_t i = 0; i < epsilon_list.size(); ++i) {
      positive(epsilon_list[i], "epsilon_list");
      if (i > 0 && !(epsilon_list[i] < epsilon_list[i - 1]))
        throw ConfigError("epsilon_list must be strictly decreasing", std::nullopt,
                          "epsilon_list");
    }
    positive(mu, "mu");
    positive(bulk_modulus, "bulk_modulus");
    positive(kappa, "kappa");
    positive(tolerance, "tolerance");
    if (max_iters < 1) throw ConfigError("max_iters must be >= 1", std::nullopt, "max_iters");
    if (output_dir.empty())
      throw ConfigError("output_dir must not be empty", std::nullopt, "output_dir");
    positive(shear_rate, "shear_rate");
    positive(traction_factor, "traction_factor");
    if (ex41_f_values.size() != ex41_f_breaks.size() + 1)
      throw ConfigError("ex41_f_values needs one more entry than ex41_f_breaks", std::nullopt,
                        "ex41_f_values");
    if (ex41_g_values.size() != ex41_g_breaks.size() + 1)
      throw ConfigError("ex41_g_values needs one more entry than ex41_g_breaks", std::nullopt,
                        "ex41_g_values");
    if (ex41_lambdas.empty())
      throw ConfigError("ex41_lambdas must not be empty", std::nullopt, "ex41_lambdas");
    if (ex41_b.size() != 2) throw ConfigError("ex41_b needs 2 entries", std::nullopt, "ex41_b");
    if (safeload_iters < 1)
      throw ConfigError("safeload_iters must be >= 1", std::nullopt, "safeload_iters");
    positive(safeload_load_factor, "safeload_load_factor");
    positive(compare_mu_factor, "compare_mu_factor");
    positive(plastic_threshold, "plastic_threshold");
    if (threads < 1) throw ConfigError("threads must be >= 1", std::nullopt, "threads");
  }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline double parse_double(std::string_view s, int line, const std::string& key) {
  s = trim(s);
  double v = 0.0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || r.ec != std::errc{} || r.ptr != s.data() + s.size())
    throw ConfigError("expected a number for " + key + ", got '" + std::string(s) + "'", line, key);
  return v;
}

inline long long parse_int(std::string_view s, int line, const std::string& key) {
  s = trim(s);
  long long v = 0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || r.ec != std::errc{} || r.ptr != s.data() + s.size())
    throw ConfigError("expected an integer for " + key + ", got '" + std::string(s) + "'", line,
                      key);
  return v;
}

inline std::vector<double> parse_list(std::string_view s, int line, const std::string& key) {
  std::vector<double> out;
  if (trim(s).empty()) return out;
  std::size_t start = 0;
  while (true) {
    const auto comma = s.find(',', start);
    out.push_back(parse_double(s.substr(start, comma - start), line, key));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

inline std::string join(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i > 0) s += ", ";
    s += format_double(v[i]);
  }
  return s;
}

}  // namespace detail

inline RunConfig parse_config(std::string_view text) {
  RunConfig cfg;
  std::vector<std::string> seen;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? text.size() - pos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError("expected 'key = value'", line_no);
    const std::string key(detail::trim(line.substr(0, eq)));
    const std::string_view val = detail::trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("missing key before '='", line_no);
    for (const auto& k : seen)
      if (k == key) throw ConfigError("duplicate key " + key, line_no, key);
    seen.push_back(key);

    auto as_int = [&] { return static_cast<int>(detail::parse_int(val, line_no, key)); };
    auto as_double = [&] { return detail::parse_double(val, line_no, key); };
    auto as_list = [&] { return detail::parse_list(val, line_no, key); };

    if (key == "command") {
      const auto c = parse_command(val);
      if (!c) throw ConfigError("unknown command '" + std::string(val) + "'", line_no, key);
      cfg.command = *c;
    } else if (key == "benchmark") {
      try {
        cfg.benchmark = parse_benchmark(std::string(val));
      } catch (const ExampleError& e) {
        throw ConfigError(e.what(), line_no, key);
      }
    } else if (key == "mesh_n") {
      cfg.mesh_n = as_int();
    } else if (key == "time_steps") {
      cfg.time_steps = as_int();
    } else if (key == "time_horizon") {
      cfg.time_horizon = as_double();
    } else if (key == "time_grid") {
      if (val == "uniform") cfg.time_grid = TimeGrid::Uniform;
      else if (val == "geometric") cfg.time_grid = TimeGrid::Geometric;
      else throw ConfigError("time_grid must be uniform or geometric", line_no, key);
    } else if (key == "time_grid_first") {
      cfg.time_grid_first = as_double();
    } else if (key == "epsilon_list") {
      cfg.epsilon_list = as_list();
    } else if (key == "mu") {
      cfg.mu = as_double();
    } else if (key == "bulk_modulus") {
      cfg.bulk_modulus = as_double();
    } else if (key == "kappa") {
      cfg.kappa = as_double();
    } else if (key == "boundary_mode") {
      if (val == "strong") cfg.boundary_mode = BoundaryMode::Strong;
      else if (val == "relaxed") cfg.boundary_mode = BoundaryMode::Relaxed;
      else throw ConfigError("boundary_mode must be strong or relaxed", line_no, key);
    } else if (key == "tolerance") {
      cfg.tolerance = as_double();
    } else if (key == "max_iters") {
      cfg.max_iters = as_int();
    } else if (key == "output_dir") {
      cfg.output_dir = std::string(val);
    } else if (key == "seed") {
      const long long s = detail::parse_int(val, line_no, key);
      if (s < 0) throw ConfigError("seed must be non-negative", line_no, key);
      cfg.seed = static_cast<std::uint64_t>(s);
    } else if (key == "shear_rate") {
      cfg.shear_rate = as_double();
    } else if (key == "traction_factor") {
      cfg.traction_factor = as_double();
    } else if (key == "ex41_c") {
      cfg.ex41_c = as_double();
    } else if (key == "ex41_f_values") {
      cfg.ex41_f_values = as_list();
    } else if (key == "ex41_f_breaks") {
      cfg.ex41_f_breaks = as_list();
    } else if (key == "ex41_g_values") {
      cfg.ex41_g_values = as_list();
    } else if (key == "ex41_g_breaks") {
      cfg.ex41_g_breaks = as_list();
    } else if (key == "ex41_lambdas") {
      cfg.ex41_lambdas = as_list();
    } else if (key == "ex41_a") {
      cfg.ex41_a = as_double();
    } else if (key == "ex41_b") {
      cfg.ex41_b = as_list();
    } else if (key == "safeload_iters") {
      cfg.safeload_iters = as_int();
    } else if (key == "safeload_load_factor") {
      cfg.safeload_load_factor = as_double();
    } else if (key == "compare_mu_factor") {
      cfg.compare_mu_factor = as_double();
    } else if (key == "plastic_threshold") {
      cfg.plastic_threshold = as_double();
    } else if (key == "threads") {
      cfg.threads = as_int();
    } else {
      throw ConfigError("unknown key " + key, line_no, key);
    }
  }
  cfg.validate();
  return cfg;
}

/// Writes every key in a fixed order; parse_config(serialize_config(c))
/// reproduces c.
inline std::string serialize_config(const RunConfig& c) {
  std::ostringstream os;
  auto kv = [&os](const char* k, const std::string& v) { os << k << " = " << v << '\n'; };
  kv("command", command_name(c.command));
  kv("benchmark", benchmark_name(c.benchmark));
  kv("mesh_n", std::to_string(c.mesh_n));
  kv("time_steps", std::to_string(c.time_steps));
  kv("time_horizon", format_double(c.time_horizon));
  kv("time_grid", c.time_grid == TimeGrid::Uniform ? "uniform" : "geometric");
  kv("time_grid_first", format_double(c.time_grid_first));
  kv("epsilon_list", detail::join(c.epsilon_list));
  kv("mu", format_double(c.mu));
  kv("bulk_modulus", format_double(c.bulk_modulus));
  kv("kappa", format_double(c.kappa));
  kv("boundary_mode", c.boundary_mode == BoundaryMode::Strong ? "strong" : "relaxed");
  kv("tolerance", format_double(c.tolerance));
  kv("max_iters", std::to_string(c.max_iters));
  kv("output_dir", c.output_dir);
  kv("seed", std::to_string(c.seed));
  kv("shear_rate", format_double(c.shear_rate));
  kv("traction_factor", format_double(c.traction_factor));
  kv("ex41_c", format_double(c.ex41_c));
  kv("ex41_f_values", detail::join(c.ex41_f_values));
  kv("ex41_f_breaks", detail::join(c.ex41_f_breaks));
  kv("ex41_g_values", detail::join(c.ex41_g_values));
  kv("ex41_g_breaks", detail::join(c.ex41_g_breaks));
  kv("ex41_lambdas", detail::join(c.ex41_lambdas));
  kv("ex41_a", format_double(c.ex41_a));
  kv("ex41_b", detail::join(c.ex41_b));
  kv("safeload_iters", std::to_string(c.safeload_iters));
  kv("safeload_load_factor", format_double(c.safeload_load_factor));
  kv("compare_mu_factor", format_double(c.compare_mu_factor));
  kv("plastic_threshold", format_double(c.plastic_threshold));
  kv("threads", std::to_string(c.threads));
  return os.str();
}

}  // namespace rigidplast
