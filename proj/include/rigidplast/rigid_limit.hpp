#pragma once

// Stiffness sweep: the same load program run for a decreasing list of
// epsilon (C^eps = C / eps), with convergence monitors, rate fits and the
// residuals of the rigid-plastic limit system.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <string>
#include <thread>
#include <vector>

#include "rigidplast/benchmarks.hpp"
#include "rigidplast/error.hpp"
#include "rigidplast/evolution.hpp"
#include "rigidplast/fem.hpp"

namespace rigidplast {

/// Relative size below which a computed quantity is indistinguishable from
/// roundoff (see EpsilonSummary::strain_floor / stress_floor).
inline constexpr double kRelativeFloor = 1e-12;

struct SweepConfig {
  std::vector<double> epsilons{1.0,       0.25,       0.0625,      0.015625,
                               0.00390625, 0.0009765625, 0.000244140625};
  BenchmarkId benchmark = BenchmarkId::Shear;
  BenchmarkParams params;
  StepOptions step;
  /// Worker threads; results do not depend on this value.
  int threads = 1;

  void validate() const {
    if (epsilons.empty()) throw EvolutionError("epsilon list is empty", std::nullopt);
    for (std::size_t i = 0; i < epsilons.size(); ++i) {
      if (!(epsilons[i] > 0.0))
        throw EvolutionError("epsilon values must be positive", std::nullopt);
      if (i > 0 && !(epsilons[i] < epsilons[i - 1]))
        throw EvolutionError("epsilon list must be strictly decreasing", std::nullopt);
    }
    if (threads < 1) throw EvolutionError("threads must be >= 1", std::nullopt);
  }
};

/// Per-step monitors of one evolution.
struct SweepRow {
  double epsilon = 0.0;
  int step = 0;
  double time = 0.0;
  double e_norm = 0.0;         // ||e||_2
  double sigma_norm = 0.0;     // ||sigma||_2
  double sigma_dev_max = 0.0;  // max |sigma_D|
  double dp_mass = 0.0;        // cumulative mass of plastic increments
  double bd_norm = 0.0;        // ||u||_1 + ||Eu||_1 + boundary gap mass
  double div_u = 0.0;          // ||div u||_2
  double hydro_dev = 0.0;      // ||tr sigma / 2 - mean||_2
  double flow_gap = 0.0;       // sum area (kappa |Ev| - sigma_D : Ev)
  double dissipation_rate = 0.0;  // sum area kappa |Ev|
};

/// Time aggregates for one epsilon.
struct EpsilonSummary {
  double epsilon = 0.0;
  double sup_e = 0.0;
  double int_sigma2 = 0.0;  // int_0^T ||sigma||_2^2 dt
  double sup_sigma_dev = 0.0;
  double total_dp_mass = 0.0;
  double sup_bd = 0.0;
  double sup_div_u = 0.0;
  double hydro_l2 = 0.0;  // (int_0^T hydro_dev^2 dt)^(1/2)
  double int_flow_gap = 0.0;
  double int_dissipation_rate = 0.0;
  double total_dissipation = 0.0;  // ledger D(T)
  double max_balance_gap = 0.0;
  int total_iterations = 0;
  /// Roundoff levels: strain-like quantities are resolved down to
  /// kRelativeFloor * max|Eu|, stress-like ones down to that times beta.
  double strain_floor = 0.0;
  double stress_floor = 0.0;
};

struct SweepReport {
  BenchmarkId benchmark = BenchmarkId::Shear;
  std::vector<double> epsilons;
  Mesh mesh;
  LoadProgram program;
  double kappa = 1.0;
  StepOptions step;
  std::vector<EpsilonSummary> summaries;
  std::vector<SweepRow> rows;  // ordered by epsilon index, then step
  /// ||sigma^{eps_i} - sigma^{eps_{i+1}}||_{L2(0,T;L2)}
  std::vector<double> cauchy;
  std::vector<std::vector<FEState>> states;
  std::vector<EnergyLedger> ledgers;
};

namespace detail {

/// Exact time integral of int_Omega a(t) : b(t) for fields affine in time
/// on [t0, t1].
inline double affine_product_integral(const FieldP0& a0, const FieldP0& a1, const FieldP0& b0,
                                      const FieldP0& b1, const Mesh& mesh, double dt) {
  double s = 0.0;
  for (std::size_t c = 0; c < mesh.num_cells(); ++c)
    s += mesh.areas[c] * (2.0 * double_dot(a0[c], b0[c]) + double_dot(a0[c], b1[c]) +
                          double_dot(a1[c], b0[c]) + 2.0 * double_dot(a1[c], b1[c]));
  return s * dt / 6.0;
}

inline double hydrostatic_deviation(const FieldP0& sigma, const Mesh& mesh) {
  double mean = 0.0;
  for (std::size_t c = 0; c < mesh.num_cells(); ++c) mean += mesh.areas[c] * 0.5 * trace(sigma[c]);
  mean /= mesh.total_area();
  double s = 0.0;
  for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
    const double d = 0.5 * trace(sigma[c]) - mean;
    s += mesh.areas[c] * d * d;
  }
  return std::sqrt(s);
}

inline double boundary_gap_mass(const FieldP1& gap, const std::vector<DirichletNode>& nodes) {
  double m = 0.0;
  for (const auto& dn : nodes)
    m += dn.weight * norm(sym_outer(gap[static_cast<std::size_t>(dn.node)], dn.normal));
  return m;
}

struct SingleRun {
  EvolutionResult evolution;
  std::vector<SweepRow> rows;
  EpsilonSummary summary;
};

inline SingleRun run_single(const Benchmark& bench, double epsilon, const StepOptions& opt) {
  const Mesh& mesh = bench.mesh;
  const HookeTensor hooke = bench.hooke.with_epsilon(epsilon);
  const double kappa = bench.yield_set.radius();
  SingleRun out;
  out.evolution = run_evolution(bench.program, hooke, bench.yield_set, mesh, FEState::zero(mesh), opt);
  const auto& states = out.evolution.states;
  const auto& times = bench.program.times();
  const auto dnodes = dirichlet_nodes(mesh);

  EpsilonSummary& s = out.summary;
  s.epsilon = epsilon;
  double dp_mass = 0.0;
  double hydro2 = 0.0;
  double max_eu = 0.0;
  double prev_hydro = 0.0;
  for (std::size_t k = 0; k < states.size(); ++k) {
    const FEState& st = states[k];
    const FieldP0 eu = strain_of(st.u, mesh);
    max_eu = std::max(max_eu, max_norm(eu));
    SweepRow r;
    r.epsilon = epsilon;
    r.step = static_cast<int>(k);
    r.time = times[k];
    r.e_norm = l2_norm(st.e, mesh);
    r.sigma_norm = l2_norm(st.sigma, mesh);
    r.sigma_dev_max = max_dev_norm(st.sigma);
    r.div_u = l2_norm(divergence_of(st.u, mesh), mesh);
    r.hydro_dev = hydrostatic_deviation(st.sigma, mesh);
    r.bd_norm = l1_norm(st.u, mesh) + l1_norm(eu, mesh) + boundary_gap_mass(st.gap, dnodes);
    if (k > 0) {
      const FEState& pr = states[k - 1];
      const double dt = times[k] - times[k - 1];
      dp_mass += l1_norm(st.p - pr.p, mesh) + boundary_gap_mass(st.gap - pr.gap, dnodes);
      const FieldP0 ev = strain_of(scaled(st.u - pr.u, 1.0 / dt), mesh);
      for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
        const double rate = kappa * norm(ev[c]);
        const double gap = rate - double_dot(deviator(st.sigma[c]), ev[c]);
        r.flow_gap += mesh.areas[c] * gap;
        r.dissipation_rate += mesh.areas[c] * rate;
      }
      s.int_flow_gap += dt * r.flow_gap;
      s.int_dissipation_rate += dt * r.dissipation_rate;
      s.int_sigma2 += affine_product_integral(pr.sigma, st.sigma, pr.sigma, st.sigma, mesh, dt);
      hydro2 += 0.5 * dt * (prev_hydro * prev_hydro + r.hydro_dev * r.hydro_dev);
    }
    prev_hydro = r.hydro_dev;
    r.dp_mass = dp_mass;
    s.sup_e = std::max(s.sup_e, r.e_norm);
    s.sup_sigma_dev = std::max(s.sup_sigma_dev, r.sigma_dev_max);
    s.sup_bd = std::max(s.sup_bd, r.bd_norm);
    s.sup_div_u = std::max(s.sup_div_u, r.div_u);
    out.rows.push_back(r);
  }
  s.total_dp_mass = dp_mass;
  s.hydro_l2 = std::sqrt(hydro2);
  s.total_dissipation = out.evolution.ledger.rows.back().D;
  for (const auto& row : out.evolution.ledger.rows)
    s.max_balance_gap = std::max(s.max_balance_gap, std::abs(row.gap));
  for (int it : out.evolution.iterations) s.total_iterations += it;
  s.strain_floor = kRelativeFloor * max_eu;
  s.stress_floor = kRelativeFloor * hooke.beta<2>() * max_eu;
  return out;
}

}  // namespace detail

/// Runs one evolution per epsilon. Entries are independent; with
/// threads > 1 they are distributed over workers, and the report is
/// assembled in epsilon order so the output does not depend on scheduling.
/// L2(0,T;L2) distance of two stress trajectories on a common mesh and
/// time grid, with time-affine interpolation between grid times.
inline double cauchy_distance(const std::vector<FEState>& a, const std::vector<FEState>& b,
                              const Mesh& mesh, const std::vector<double>& times) {
  if (a.size() != times.size() || b.size() != times.size())
    throw Error("rigid_limit", "cauchy_distance: trajectories do not match the time grid");
  double d2 = 0.0;
  for (std::size_t k = 1; k < times.size(); ++k) {
    const FieldP0 d0 = a[k - 1].sigma - b[k - 1].sigma;
    const FieldP0 d1 = a[k].sigma - b[k].sigma;
    d2 += detail::affine_product_integral(d0, d1, d0, d1, mesh, times[k] - times[k - 1]);
  }
  return std::sqrt(std::max(0.0, d2));
}

inline SweepReport run_sweep(const SweepConfig& config) {
  config.validate();
  const Benchmark bench = benchmark_catalog(config.benchmark, config.params);
  const std::size_t n = config.epsilons.size();
  std::vector<detail::SingleRun> runs(n);
  std::vector<std::exception_ptr> errors(n);

  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        runs[i] = detail::run_single(bench, config.epsilons[i], config.step);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const auto nthreads = static_cast<std::size_t>(std::min<int>(config.threads, static_cast<int>(n)));
  if (nthreads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < nthreads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!errors[i]) continue;
    const double eps = config.epsilons[i];
    try {
      std::rethrow_exception(errors[i]);
    } catch (const NonConvergenceError& e) {
      throw NonConvergenceError(e.what(), e.history(), e.step(), eps);
    } catch (const EvolutionError& e) {
      throw EvolutionError(e.what(), e.step(), eps, e.module());
    } catch (const Error& e) {
      throw EvolutionError(e.what(), std::nullopt, eps, e.module());
    }
  }

  SweepReport rep;
  rep.benchmark = config.benchmark;
  rep.epsilons = config.epsilons;
  rep.mesh = bench.mesh;
  rep.program = bench.program;
  rep.kappa = bench.yield_set.radius();
  rep.step = config.step;
  for (auto& r : runs) {
    rep.summaries.push_back(r.summary);
    rep.rows.insert(rep.rows.end(), r.rows.begin(), r.rows.end());
    rep.ledgers.push_back(std::move(r.evolution.ledger));
    rep.states.push_back(std::move(r.evolution.states));
  }
  for (std::size_t i = 0; i + 1 < n; ++i)
    rep.cauchy.push_back(
        cauchy_distance(rep.states[i], rep.states[i + 1], rep.mesh, rep.program.times()));
  return rep;
}

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  int used = 0;
  /// Points at or below the floor (or non-positive) left out of the fit.
  int excluded = 0;
};

/// Least-squares fit of log(value) against log(epsilon) over the points
/// strictly above `floor`.
inline RateFit fit_rate(const std::vector<double>& epsilons, const std::vector<double>& values,
                        double floor = 0.0) {
  if (epsilons.size() != values.size())
    throw RateFitError("fit_rate: epsilon and value lists differ in length");
  std::vector<double> x, y;
  RateFit fit;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!(values[i] > floor) || !(values[i] > 0.0) || !(epsilons[i] > 0.0)) {
      ++fit.excluded;
      continue;
    }
    x.push_back(std::log(epsilons[i]));
    y.push_back(std::log(values[i]));
  }
  fit.used = static_cast<int>(x.size());
  if (x.size() < 3)
    throw RateFitError("fit_rate: fewer than 3 values above the floor (" +
                       std::to_string(fit.excluded) + " excluded)");
  const double m = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= m;
  my /= m;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw RateFitError("fit_rate: epsilon values must be distinct");
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r2 = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return fit;
}

struct ResidualRow {
  int step = 0;
  double time = 0.0;
  double equilibrium_interior = 0.0;
  double equilibrium_flux = 0.0;
  double feasibility = 0.0;  // max(|sigma_D| - kappa), may be negative
  double div_v = 0.0;        // ||div v||_2
  double flow_gap = 0.0;     // sum area (kappa |Ev| - sigma_D : Ev) >= 0
  double min_cell_flow_gap = 0.0;
  double normal_gap = 0.0;   // max over Dirichlet nodes of |(w' - v) . nu|
};

struct ResidualReport {
  double epsilon = 0.0;
  std::vector<ResidualRow> rows;
  double max_equilibrium = 0.0;
  double max_feasibility = 0.0;
  double max_div_v = 0.0;
  double max_flow_gap = 0.0;
  double min_cell_flow_gap = 0.0;
  double max_normal_gap = 0.0;
};

/// Residuals of the limit system evaluated on (sigma, v) with
/// v = (u_k - u_{k-1}) / dt_k. `states` is one trajectory on `program`'s
/// grid; the fields at the smallest epsilon serve as the limit proxy.
inline ResidualReport rigid_residuals(const std::vector<FEState>& states, const LoadProgram& program,
                                      const Mesh& mesh, const YieldSet& k) {
  if (states.size() != program.times().size())
    throw EvolutionError("rigid_residuals: trajectory does not match the time grid", std::nullopt);
  ResidualReport rep;
  const EquilibriumChecker checker(mesh);
  const auto dnodes = dirichlet_nodes(mesh);
  const double kappa = k.radius();
  for (std::size_t s = 1; s < states.size(); ++s) {
    const double dt = program.times()[s] - program.times()[s - 1];
    const FEState& st = states[s];
    const LoadFrame& fr = program.frame(s);
    ResidualRow r;
    r.step = static_cast<int>(s);
    r.time = program.times()[s];
    const auto eq = checker.check(st.sigma, fr.body, fr.traction);
    r.equilibrium_interior = eq.interior;
    r.equilibrium_flux = eq.flux;
    r.feasibility = max_dev_norm(st.sigma) - kappa;
    const FieldP1 v = scaled(st.u - states[s - 1].u, 1.0 / dt);
    r.div_v = l2_norm(divergence_of(v, mesh), mesh);
    const FieldP0 ev = strain_of(v, mesh);
    r.min_cell_flow_gap = 0.0;
    for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
      const double g = kappa * norm(ev[c]) - double_dot(deviator(st.sigma[c]), ev[c]);
      r.flow_gap += mesh.areas[c] * g;
      r.min_cell_flow_gap = std::min(r.min_cell_flow_gap, g);
    }
    const FieldP1 wdot = scaled(fr.w - program.frame(s - 1).w, 1.0 / dt);
    for (const auto& dn : dnodes) {
      const auto n = static_cast<std::size_t>(dn.node);
      r.normal_gap = std::max(r.normal_gap, std::abs(dot(wdot[n] - v[n], dn.normal)));
    }
    rep.max_equilibrium = std::max({rep.max_equilibrium, r.equilibrium_interior, r.equilibrium_flux});
    rep.max_feasibility = s == 1 ? r.feasibility : std::max(rep.max_feasibility, r.feasibility);
    rep.max_div_v = std::max(rep.max_div_v, r.div_v);
    rep.max_flow_gap = std::max(rep.max_flow_gap, r.flow_gap);
    rep.min_cell_flow_gap = std::min(rep.min_cell_flow_gap, r.min_cell_flow_gap);
    rep.max_normal_gap = std::max(rep.max_normal_gap, r.normal_gap);
    rep.rows.push_back(r);
  }
  return rep;
}

/// Residuals at the smallest epsilon of a sweep.
inline ResidualReport rigid_residuals(const SweepReport& sweep) {
  ResidualReport r = rigid_residuals(sweep.states.back(), sweep.program, sweep.mesh,
                                     YieldSet(sweep.kappa));
  r.epsilon = sweep.epsilons.back();
  return r;
}

struct UniquenessReport {
  double threshold = 0.0;
  /// max |sigma_D^A - sigma_D^B| over (time, cell) pairs in the plastic
  /// support |Ev| > threshold * max|Ev| (of either trajectory).
  double max_diff_on_support = 0.0;
  /// Same over the complement; no smallness is expected there.
  double max_diff_off_support = 0.0;
  /// int_0^T sum_{support} area |Ev^A| |sigma_D^A - sigma_D^B| dt
  double weighted_diff_on_support = 0.0;
  double support_fraction = 0.0;  // share of (time, cell) pairs in the support
};

/// Compares two trajectories on the same mesh and time grid.
inline UniquenessReport compare_limits(const std::vector<FEState>& a, const std::vector<FEState>& b,
                                       const Mesh& mesh_a, const Mesh& mesh_b,
                                       const std::vector<double>& times_a,
                                       const std::vector<double>& times_b, double threshold) {
  if (!mesh_a.same_topology(mesh_b))
    throw Error("rigid_limit", "compare_limits: meshes differ");
  if (times_a != times_b || a.size() != b.size() || a.size() != times_a.size())
    throw Error("rigid_limit", "compare_limits: time grids differ");
  const Mesh& mesh = mesh_a;
  UniquenessReport rep;
  rep.threshold = threshold;
  std::size_t in = 0, total = 0;
  for (std::size_t k = 1; k < a.size(); ++k) {
    const double dt = times_a[k] - times_a[k - 1];
    const FieldP0 eva = strain_of(scaled(a[k].u - a[k - 1].u, 1.0 / dt), mesh);
    const FieldP0 evb = strain_of(scaled(b[k].u - b[k - 1].u, 1.0 / dt), mesh);
    const double cut_a = threshold * max_norm(eva);
    const double cut_b = threshold * max_norm(evb);
    for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
      const double diff = norm(deviator(a[k].sigma[c]) - deviator(b[k].sigma[c]));
      const double ra = norm(eva[c]);
      const bool support = (ra > cut_a && ra > 0.0) || (norm(evb[c]) > cut_b && cut_b > 0.0);
      ++total;
      if (support) {
        ++in;
        rep.max_diff_on_support = std::max(rep.max_diff_on_support, diff);
        rep.weighted_diff_on_support += dt * mesh.areas[c] * ra * diff;
      } else {
        rep.max_diff_off_support = std::max(rep.max_diff_off_support, diff);
      }
    }
  }
  rep.support_fraction = total > 0 ? static_cast<double>(in) / static_cast<double>(total) : 0.0;
  return rep;
}

/// Compares the limit proxies (smallest epsilon) of two sweeps.
inline UniquenessReport compare_limits(const SweepReport& a, const SweepReport& b,
                                       double threshold = 1e-6) {
  return compare_limits(a.states.back(), b.states.back(), a.mesh, b.mesh, a.program.times(),
                        b.program.times(), threshold);
}

}  // namespace rigidplast
