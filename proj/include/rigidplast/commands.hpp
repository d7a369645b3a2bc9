#pragma once

// Experiment orchestration behind the CLI: each command computes, then
// writes metrics.csv, summary.json and fields_*.vtk into the output
// directory. Failures are mapped to exit codes and an error.json record.

#include <algorithm>
#include <filesystem>
#include <string>
#include <vector>

#include "rigidplast/benchmarks.hpp"
#include "rigidplast/config.hpp"
#include "rigidplast/error.hpp"
#include "rigidplast/evolution.hpp"
#include "rigidplast/io.hpp"
#include "rigidplast/rigid_limit.hpp"
#include "rigidplast/safeload.hpp"

namespace rigidplast {

enum ExitCode : int { kExitOk = 0, kExitInternal = 1, kExitConfig = 2, kExitSolver = 3, kExitIo = 4 };

namespace detail {

inline Json config_json(const RunConfig& c) {
  Json j;
  j["command"] = command_name(c.command);
  j["benchmark"] = benchmark_name(c.benchmark);
  j["mesh_n"] = c.mesh_n;
  j["time_steps"] = c.time_steps;
  j["time_horizon"] = c.time_horizon;
  j["time_grid"] = c.time_grid == TimeGrid::Uniform ? "uniform" : "geometric";
  j["time_grid_first"] = c.time_grid_first;
  j["epsilon_list"] = c.epsilon_list;
  j["mu"] = c.mu;
  j["bulk_modulus"] = c.bulk_modulus;
  j["kappa"] = c.kappa;
  j["boundary_mode"] = c.boundary_mode == BoundaryMode::Strong ? "strong" : "relaxed";
  j["tolerance"] = c.tolerance;
  j["max_iters"] = c.max_iters;
  j["seed"] = c.seed;
  j["shear_rate"] = c.shear_rate;
  j["traction_factor"] = c.traction_factor;
  j["ex41_c"] = c.ex41_c;
  j["ex41_f_values"] = c.ex41_f_values;
  j["ex41_f_breaks"] = c.ex41_f_breaks;
  j["ex41_g_values"] = c.ex41_g_values;
  j["ex41_g_breaks"] = c.ex41_g_breaks;
  j["ex41_lambdas"] = c.ex41_lambdas;
  j["ex41_a"] = c.ex41_a;
  j["ex41_b"] = c.ex41_b;
  j["safeload_iters"] = c.safeload_iters;
  j["safeload_load_factor"] = c.safeload_load_factor;
  j["compare_mu_factor"] = c.compare_mu_factor;
  j["plastic_threshold"] = c.plastic_threshold;
  j["threads"] = c.threads;
  return j;
}

inline Json summary_header(const RunConfig& c) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["status"] = "ok";
  j["config"] = config_json(c);
  return j;
}

inline std::vector<double> dev_norms(const FieldP0& f) {
  std::vector<double> out;
  out.reserve(f.size());
  for (const auto& s : f) out.push_back(norm(deviator(s)));
  return out;
}

inline std::string state_vtk(const Mesh& mesh, const FEState& s, const std::string& title) {
  return vtk_text(mesh, title, {{"displacement", s.u}},
                  {{"stress", s.sigma}, {"elastic_strain", s.e}, {"plastic_strain", s.p}},
                  {{"stress_dev_norm", dev_norms(s.sigma)}});
}

inline Json fit_json(const std::vector<double>& eps, const std::vector<double>& values,
                     double floor) {
  Json j;
  j["floor"] = json_number(floor);
  try {
    const RateFit f = fit_rate(eps, values, floor);
    j["status"] = "fitted";
    j["slope"] = json_number(f.slope);
    j["r2"] = json_number(f.r2);
    j["used"] = f.used;
    j["excluded"] = f.excluded;
  } catch (const RateFitError& e) {
    const bool all_below =
        std::all_of(values.begin(), values.end(), [floor](double v) { return v <= floor; });
    j["status"] = all_below ? "below_floor" : "insufficient_data";
    j["message"] = e.what();
  }
  return j;
}

inline Json run_cmd(const RunConfig& cfg, const std::filesystem::path& out) {
  const Benchmark bench = benchmark_catalog(cfg.benchmark, cfg.benchmark_params());
  const double eps = cfg.epsilon_list.front();
  EvolutionResult res;
  try {
    res = run_evolution(bench.program, bench.hooke.with_epsilon(eps), bench.yield_set, bench.mesh,
                        FEState::zero(bench.mesh), cfg.step_options());
  } catch (const NonConvergenceError& e) {
    throw NonConvergenceError(e.what(), e.history(), e.step(), eps);
  } catch (const EvolutionError& e) {
    throw EvolutionError(e.what(), e.step(), eps, e.module());
  }

  CsvTable csv({"step", "time", "stored_energy", "dissipation", "work", "balance_gap",
                "max_sigma_dev", "plastic_cell_fraction", "iterations"});
  int total_iters = 0;
  double max_abs_gap = 0.0, max_gap = 0.0;
  for (std::size_t k = 0; k < res.ledger.rows.size(); ++k) {
    const auto& r = res.ledger.rows[k];
    const int it = k < res.iterations.size() ? res.iterations[k] : 0;
    total_iters += it;
    max_abs_gap = std::max(max_abs_gap, std::abs(r.gap));
    max_gap = std::max(max_gap, r.gap);
    csv.add({r.step, r.time, r.Q, r.D, r.W, r.gap, r.max_sigma_dev, r.plastic_cell_fraction, it});
  }
  const auto& last = res.ledger.rows.back();
  Json j = summary_header(cfg);
  j["epsilon"] = eps;
  j["final"] = {{"time", last.time},
                {"stored_energy", last.Q},
                {"dissipation", last.D},
                {"work", last.W},
                {"balance_gap", last.gap},
                {"max_sigma_dev", last.max_sigma_dev}};
  j["max_abs_balance_gap"] = max_abs_gap;
  j["max_balance_gap"] = max_gap;
  j["max_time_step"] = bench.program.max_step();
  j["total_iterations"] = total_iters;
  write_text_file(out / "metrics.csv", csv.str());
  write_text_file(out / "fields_final.vtk", state_vtk(bench.mesh, res.states.back(), "final state"));
  return j;
}

inline SweepConfig sweep_config(const RunConfig& cfg) {
  SweepConfig s;
  s.epsilons = cfg.epsilon_list;
  s.benchmark = cfg.benchmark;
  s.params = cfg.benchmark_params();
  s.step = cfg.step_options();
  s.threads = cfg.threads;
  return s;
}

inline Json summaries_json(const SweepReport& rep) {
  Json arr = Json::array();
  for (const auto& s : rep.summaries)
    arr.push_back({{"epsilon", s.epsilon},
                   {"sup_e", s.sup_e},
                   {"int_sigma2", s.int_sigma2},
                   {"sup_sigma_dev", s.sup_sigma_dev},
                   {"total_dp_mass", s.total_dp_mass},
                   {"sup_bd", s.sup_bd},
                   {"sup_div_u", s.sup_div_u},
                   {"hydro_l2", s.hydro_l2},
                   {"int_flow_gap", s.int_flow_gap},
                   {"int_dissipation_rate", s.int_dissipation_rate},
                   {"total_dissipation", s.total_dissipation},
                   {"max_balance_gap", s.max_balance_gap},
                   {"total_iterations", s.total_iterations},
                   {"strain_floor", s.strain_floor},
                   {"stress_floor", s.stress_floor}});
  return arr;
}

inline Json residuals_json(const ResidualReport& r) {
  return {{"epsilon", r.epsilon},
          {"max_equilibrium", r.max_equilibrium},
          {"max_feasibility", r.max_feasibility},
          {"max_div_v", r.max_div_v},
          {"max_flow_gap", r.max_flow_gap},
          {"min_cell_flow_gap", r.min_cell_flow_gap},
          {"max_normal_gap", r.max_normal_gap}};
}

inline Json sweep_cmd(const RunConfig& cfg, const std::filesystem::path& out) {
  const SweepReport rep = run_sweep(sweep_config(cfg));
  CsvTable csv({"epsilon", "step", "time", "e_norm", "sigma_norm", "sigma_dev_max", "dp_mass",
                "bd_norm", "div_u", "hydro_dev", "flow_gap", "dissipation_rate"});
  for (const auto& r : rep.rows)
    csv.add({r.epsilon, r.step, r.time, r.e_norm, r.sigma_norm, r.sigma_dev_max, r.dp_mass,
             r.bd_norm, r.div_u, r.hydro_dev, r.flow_gap, r.dissipation_rate});

  std::vector<double> sup_e, div_u;
  double strain_floor = 0.0;
  for (const auto& s : rep.summaries) {
    sup_e.push_back(s.sup_e);
    div_u.push_back(s.sup_div_u);
    strain_floor = std::max(strain_floor, s.strain_floor);
  }
  Json j = summary_header(cfg);
  j["epsilons"] = rep.epsilons;
  j["per_epsilon"] = summaries_json(rep);
  j["cauchy_distances"] = rep.cauchy;
  j["e_slope"] = fit_json(rep.epsilons, sup_e, strain_floor);
  j["div_u_slope"] = fit_json(rep.epsilons, div_u, strain_floor);
  j["limit_residuals"] = residuals_json(rigid_residuals(rep));
  write_text_file(out / "metrics.csv", csv.str());
  write_text_file(out / "fields_limit.vtk",
                  state_vtk(rep.mesh, rep.states.back().back(), "smallest epsilon, final time"));
  return j;
}

inline Json example41_cmd(const RunConfig& cfg, const std::filesystem::path& out) {
  const Benchmark bench = benchmark_catalog(BenchmarkId::Rigid41, cfg.benchmark_params());
  const Example41Params base = cfg.example41_params();
  const NonUniquenessWitness w =
      example41_verify(base, cfg.ex41_lambdas, bench.mesh, bench.yield_set);
  CsvTable csv({"lambda", "equilibrium_residual", "max_sigma_dev", "flow_gap"});
  for (const auto& e : w.entries)
    csv.add({e.lambda, e.equilibrium_residual, e.max_sigma_dev, e.flow_gap});
  std::vector<VtkCellTensor> tensors;
  for (std::size_t i = 0; i < cfg.ex41_lambdas.size(); ++i) {
    Example41Params p = base;
    p.lambda = cfg.ex41_lambdas[i];
    tensors.push_back({"stress_" + std::to_string(i), example41_stress(p, bench.mesh, cfg.kappa)});
  }
  const FieldP1 v = interpolate_p1(bench.mesh, [&](Vec2 x) { return mat_vec(base.a, x) + base.b; });
  Json j = summary_header(cfg);
  j["lambdas"] = cfg.ex41_lambdas;
  j["nonuniqueness_witness"] = w.witness;
  j["stress_gap"] = w.stress_gap;
  j["strain_rate_max"] = w.strain_rate_max;
  j["div_v_max"] = w.div_v_max;
  write_text_file(out / "metrics.csv", csv.str());
  write_text_file(out / "fields_example41.vtk",
                  vtk_text(bench.mesh, "rigid motion with several admissible stresses",
                           {{"velocity", v}}, tensors, {}));
  return j;
}

inline Json safeload_cmd(const RunConfig& cfg, const std::filesystem::path& out) {
  const Benchmark bench = benchmark_catalog(cfg.benchmark, cfg.benchmark_params());
  LoadFrame frame = bench.program.frames().back();
  for (auto& f : frame.body) f *= cfg.safeload_load_factor;
  for (auto& g : frame.traction) g *= cfg.safeload_load_factor;
  SafetyOptions opt;
  opt.iters = cfg.safeload_iters;
  const SafetyResult res = max_safety_margin(frame, bench.mesh, bench.yield_set, opt);
  const SafeLoadCertificate cert =
      verify_safe_load({res.pi}, {frame}, bench.mesh, bench.yield_set);
  CsvTable csv({"iteration", "objective", "fixed_point_residual"});
  for (std::size_t i = 0; i < res.objective.size(); ++i)
    csv.add({static_cast<int>(i + 1), res.objective[i], res.fixed_point_residual[i]});
  Json j = summary_header(cfg);
  j["load_factor"] = cfg.safeload_load_factor;
  j["margin"] = res.margin;
  j["certificate"] = {{"margin", cert.margin},
                      {"valid", cert.valid},
                      {"equilibrium_residual", cert.equilibrium_residual},
                      {"traction_residual", cert.traction_residual},
                      {"tolerance", cert.tolerance}};
  j["best_iteration"] = res.best_iteration;
  j["operator_norm"] = res.operator_norm;
  j["equilibrium_feasible"] = res.equilibrium_feasible;
  j["diagnostics"] = res.diagnostics;
  write_text_file(out / "metrics.csv", csv.str());
  write_text_file(out / "fields_safeload.vtk",
                  vtk_text(bench.mesh, "safe-load stress", {}, {{"safe_stress", res.pi}},
                           {{"safe_stress_dev_norm", dev_norms(res.pi)}}));
  return j;
}

inline Json report_cmd(const RunConfig& cfg, const std::filesystem::path& out) {
  const SweepConfig base = sweep_config(cfg);
  SweepConfig scaled_cfg = base;
  scaled_cfg.params.mu *= cfg.compare_mu_factor;
  const SweepReport a = run_sweep(base);
  const SweepReport b = run_sweep(scaled_cfg);
  const UniquenessReport u = compare_limits(a, b, cfg.plastic_threshold);

  CsvTable csv({"mu", "epsilon", "sup_e", "sup_sigma_dev", "hydro_l2", "int_flow_gap",
                "int_dissipation_rate", "total_dissipation", "max_balance_gap"});
  for (const SweepReport* r : {&a, &b}) {
    const double mu = r == &a ? base.params.mu : scaled_cfg.params.mu;
    for (const auto& s : r->summaries)
      csv.add({mu, s.epsilon, s.sup_e, s.sup_sigma_dev, s.hydro_l2, s.int_flow_gap,
               s.int_dissipation_rate, s.total_dissipation, s.max_balance_gap});
  }
  Json j = summary_header(cfg);
  j["mu_values"] = {base.params.mu, scaled_cfg.params.mu};
  j["uniqueness"] = {{"threshold", u.threshold},
                     {"max_diff_on_support", u.max_diff_on_support},
                     {"max_diff_off_support", u.max_diff_off_support},
                     {"weighted_diff_on_support", u.weighted_diff_on_support},
                     {"support_fraction", u.support_fraction}};
  j["flow_gap_smallest_epsilon"] = a.summaries.back().int_flow_gap;
  j["limit_residuals"] = {residuals_json(rigid_residuals(a)), residuals_json(rigid_residuals(b))};
  write_text_file(out / "metrics.csv", csv.str());
  write_text_file(out / "fields_limit.vtk",
                  vtk_text(a.mesh, "limit proxies for two shear moduli", {},
                           {{"stress_mu", a.states.back().back().sigma},
                            {"stress_scaled_mu", b.states.back().back().sigma}},
                           {}));
  return j;
}

}  // namespace detail

/// Runs the configured command and writes its artifacts into `out`.
/// Returns the summary that was written to summary.json.
inline Json run_command(const RunConfig& cfg, const std::filesystem::path& out) {
  cfg.validate();
  ensure_directory(out);
  Json summary;
  switch (cfg.command) {
    case Command::Run: summary = detail::run_cmd(cfg, out); break;
    case Command::Sweep: summary = detail::sweep_cmd(cfg, out); break;
    case Command::Example41: summary = detail::example41_cmd(cfg, out); break;
    case Command::SafeLoad: summary = detail::safeload_cmd(cfg, out); break;
    case Command::Report: summary = detail::report_cmd(cfg, out); break;
  }
  write_text_file(out / "summary.json", dump_json(summary));
  return summary;
}

/// Builds the error record for an exception and the matching exit code.
inline std::pair<Json, int> describe_failure(const std::exception& e) {
  int code = kExitInternal;
  std::string type = "internal";
  std::string module = "cli_io";
  Json extra = Json::object();
  if (const auto* ce = dynamic_cast<const ConfigError*>(&e)) {
    code = kExitConfig;
    type = "config";
    if (ce->line()) extra["line"] = *ce->line();
    if (!ce->field().empty()) extra["field"] = ce->field();
  } else if (dynamic_cast<const IoError*>(&e)) {
    code = kExitIo;
    type = "io";
  } else if (const auto* ne = dynamic_cast<const NonConvergenceError*>(&e)) {
    code = kExitSolver;
    type = "non_convergence";
    if (ne->step()) extra["step"] = *ne->step();
    if (ne->epsilon()) extra["epsilon"] = *ne->epsilon();
    extra["iterations"] = ne->history().size();
  } else if (const auto* ee = dynamic_cast<const EvolutionError*>(&e)) {
    code = kExitSolver;
    type = "solver";
    if (ee->step()) extra["step"] = *ee->step();
    if (ee->epsilon()) extra["epsilon"] = *ee->epsilon();
  } else if (dynamic_cast<const Error*>(&e)) {
    code = kExitSolver;
    type = "solver";
  }
  if (const auto* re = dynamic_cast<const Error*>(&e)) module = re->module();
  Json j = error_record(type, module, e.what(), code);
  for (auto it = extra.begin(); it != extra.end(); ++it) j["error"][it.key()] = it.value();
  return {j, code};
}

/// Runs the command and converts failures into an exit code plus an
/// error.json record (written when the output directory is usable).
inline int execute(const RunConfig& cfg, const std::filesystem::path& out, std::string* message = nullptr) {
  try {
    run_command(cfg, out);
    return kExitOk;
  } catch (const std::exception& e) {
    auto [record, code] = describe_failure(e);
    if (message) *message = e.what();
    try {
      ensure_directory(out);
      write_text_file(out / "error.json", dump_json(record));
    } catch (const IoError&) {
    }
    return code;
  }
}

}  // namespace rigidplast
