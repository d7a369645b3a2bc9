#pragma once

// Backward-Euler incremental minimization for quasi-static perfect
// plasticity, the energy ledger and the stress/plastic-strain pairing.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "rigidplast/constitutive.hpp"
#include "rigidplast/error.hpp"
#include "rigidplast/fem.hpp"
#include "rigidplast/load_program.hpp"
#include "rigidplast/mesh.hpp"

namespace rigidplast {

enum class BoundaryMode { Strong, Relaxed };

struct StepOptions {
  /// Stop when one sweep lowers the incremental functional by less than
  /// tolerance * (1 + |value|).
  double tolerance = 1e-10;
  int max_iters = 10000;
  BoundaryMode boundary_mode = BoundaryMode::Strong;
  /// Relaxed mode: the normal boundary gap is penalized with
  /// penalty_factor * kappa per unit length.
  double penalty_factor = 1e6;
};

/// Discrete state. `gap` holds w - u on Dirichlet nodes that are free to slip
/// (relaxed mode) and zero everywhere else.
struct FEState {
  double time = 0.0;
  FieldP1 u;
  FieldP0 e;
  FieldP0 p;
  FieldP0 sigma;
  FieldP1 gap;

  static FEState zero(const Mesh& mesh, double time = 0.0) {
    return {time,
            FieldP1(mesh.num_nodes()),
            FieldP0(mesh.num_cells()),
            FieldP0(mesh.num_cells()),
            FieldP0(mesh.num_cells()),
            FieldP1(mesh.num_nodes())};
  }
};

/// Dirichlet node with its lumped boundary weight. Nodes where two Dirichlet
/// edges with different normals meet cannot carry a single normal and are
/// always held at the datum (`pinned`).
struct DirichletNode {
  int node = 0;
  Vec2 normal;
  Vec2 tangent;
  double weight = 0.0;  // half the length of the adjacent Dirichlet edges
  bool pinned = false;
};

inline std::vector<DirichletNode> dirichlet_nodes(const Mesh& mesh) {
  std::vector<DirichletNode> out;
  std::vector<int> slot(mesh.num_nodes(), -1);
  for (const auto& edge : mesh.boundary_edges) {
    if (edge.kind != BoundaryKind::Dirichlet) continue;
    for (int v : edge.nodes) {
      auto& s = slot[static_cast<std::size_t>(v)];
      if (s < 0) {
        s = static_cast<int>(out.size());
        out.push_back({v, edge.normal, Vec2{{-edge.normal[1], edge.normal[0]}}, 0.0, false});
      } else if (!(out[static_cast<std::size_t>(s)].normal == edge.normal)) {
        out[static_cast<std::size_t>(s)].pinned = true;
      }
      out[static_cast<std::size_t>(s)].weight += 0.5 * edge.length;
    }
  }
  std::sort(out.begin(), out.end(),
            [](const DirichletNode& a, const DirichletNode& b) { return a.node < b.node; });
  return out;
}

/// Mass of the plastic strain including its boundary part:
/// sum_T area |p| + sum_n weight_n |gap_n ⊙ nu_n|.
inline double plastic_mass(const FieldP0& p, const FieldP1& gap, const Mesh& mesh) {
  double m = l1_norm(p, mesh);
  if (gap.empty()) return m;
  for (const auto& dn : dirichlet_nodes(mesh))
    m += dn.weight * norm(sym_outer(gap[static_cast<std::size_t>(dn.node)], dn.normal));
  return m;
}

struct StepResult {
  FEState state;
  /// Incremental functional before the first sweep and after each sweep.
  std::vector<double> history;
  int iterations = 0;
};

/// One time step: minimizes
///   sum_T area [1/2 C(Eu - p):(Eu - p) + kappa |p - p_prev|] - F.u
///   (+ relaxed boundary terms)
/// by alternating an elastic solve with frozen p, a nodal sweep over the
/// slipping Dirichlet nodes (relaxed mode) and a cellwise radial return.
class IncrementalSolver {
 public:
  IncrementalSolver(const Mesh& mesh, const HookeTensor& hooke, const YieldSet& k,
                    StepOptions options = {})
      : mesh_(&mesh),
        hooke_(hooke),
        k_(k),
        options_(options),
        elastic_(mesh, hooke),
        dnodes_(dirichlet_nodes(mesh)) {
    if (!(options_.tolerance > 0.0))
      throw EvolutionError("step tolerance must be positive", std::nullopt);
    if (options_.max_iters < 1)
      throw EvolutionError("max_iters must be >= 1", std::nullopt);
    penalty_ = options_.penalty_factor * k_.radius();
  }

  const Mesh& mesh() const { return *mesh_; }
  const HookeTensor& hooke() const { return hooke_; }
  const YieldSet& yield_set() const { return k_; }
  const StepOptions& options() const { return options_; }
  bool relaxed() const { return options_.boundary_mode == BoundaryMode::Relaxed; }
  const std::vector<DirichletNode>& boundary_nodes() const { return dnodes_; }
  double penalty() const { return penalty_; }

  /// Value of the incremental functional at (u, p) for loads `frame`.
  double functional(const FieldP1& u, const FieldP0& p, const FEState& prev,
                    const LoadFrame& frame, const DofVector& load) const {
    const Mesh& mesh = *mesh_;
    const FieldP0 eu = strain_of(u, mesh);
    double v = 0.0;
    for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
      const Sym2 e = eu[c] - p[c];
      v += mesh.areas[c] *
           (hooke_.energy_density(e) + k_.radius() * norm(p[c] - prev.p[c]));
    }
    v -= load.dot(to_dofs(u));
    if (relaxed()) v += boundary_energy(u, prev, frame);
    return v;
  }

  StepResult step(const FEState& prev, const LoadFrame& prev_frame,
                  const LoadFrame& frame, double time) const {
    const Mesh& mesh = *mesh_;
    for (const auto& x : prev.p)
      if (!is_deviatoric(x))
        throw EvolutionError("previous plastic strain is not deviatoric", std::nullopt);

    StepResult out;
    FieldP1 u(mesh.num_nodes());
    for (std::size_t i = 0; i < u.size(); ++i) u[i] = prev.u[i] - prev_frame.w[i] + frame.w[i];
    for (const auto& dn : dnodes_)
      if (!relaxed() || dn.pinned)
        u[static_cast<std::size_t>(dn.node)] = frame.w[static_cast<std::size_t>(dn.node)];
    FieldP0 p = prev.p;
    const DofVector load = assemble_load(mesh, frame.body, frame.traction);

    out.history.push_back(functional(u, p, prev, frame, load));
    bool converged = false;
    for (int it = 1; it <= options_.max_iters; ++it) {
      u = elastic_.solve(p, u, load);
      if (relaxed()) boundary_sweep(u, p, prev, frame, load);
      const FieldP0 eu = strain_of(u, mesh);
      for (std::size_t c = 0; c < mesh.num_cells(); ++c)
        p[c] = radial_return(deviator(eu[c]), prev.p[c], hooke_, k_).plastic_strain;

      const double value = functional(u, p, prev, frame, load);
      const double last = out.history.back();
      out.history.push_back(value);
      out.iterations = it;
      const double scale = 1.0 + std::abs(value);
      if (value > last + 1e-12 * scale)
        throw InternalError("evolution",
                            "incremental functional increased during a sweep");
      if (last - value < options_.tolerance * scale) {
        converged = true;
        break;
      }
    }
    if (!converged)
      throw NonConvergenceError("alternating minimization did not converge in " +
                                    std::to_string(options_.max_iters) + " sweeps",
                                out.history);

    out.state = make_state(u, p, frame, time);
    return out;
  }

  /// Removes a roundoff-sized excess of |sigma_D| over kappa so reported
  /// stresses lie in K exactly.
  Sym2 settle_stress(const Sym2& sigma) const {
    const double r = k_.radius();
    if (norm(deviator(sigma)) <= r) return sigma;
    const auto [dev, mean] = dev_decompose(sigma);
    Sym2 d = settle_into_ball(dev, r);
    if (d == dev) return sigma;
    Sym2 out = d + Sym2::identity() * mean;
    for (int guard = 0; guard < 64 && norm(deviator(out)) > r; ++guard) {
      d *= 1.0 - 4.0 * std::numeric_limits<double>::epsilon();
      out = d + Sym2::identity() * mean;
    }
    return out;
  }

  /// Completes (u, p) into a state: e = Eu - p, sigma = C e, boundary gap.
  FEState make_state(const FieldP1& u, const FieldP0& p, const LoadFrame& frame,
                     double time) const {
    const Mesh& mesh = *mesh_;
    FEState s;
    s.time = time;
    s.u = u;
    s.p = p;
    const FieldP0 eu = strain_of(u, mesh);
    s.e.resize(mesh.num_cells());
    s.sigma.resize(mesh.num_cells());
    for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
      s.e[c] = eu[c] - p[c];
      s.sigma[c] = hooke_.apply(s.e[c]);
      s.sigma[c] = settle_stress(s.sigma[c]);
    }
    s.gap.assign(mesh.num_nodes(), Vec2{});
    if (relaxed())
      for (const auto& dn : dnodes_)
        if (!dn.pinned) {
          const auto n = static_cast<std::size_t>(dn.node);
          s.gap[n] = frame.w[n] - u[n];
        }
    return s;
  }

  /// Stored boundary energy 1/2 P weight (nu.gap)^2 of a state.
  double boundary_stored_energy(const FieldP1& gap) const {
    if (!relaxed()) return 0.0;
    double v = 0.0;
    for (const auto& dn : dnodes_) {
      if (dn.pinned) continue;
      const double gn = dot(dn.normal, gap[static_cast<std::size_t>(dn.node)]);
      v += 0.5 * penalty_ * dn.weight * gn * gn;
    }
    return v;
  }

  /// Boundary dissipation kappa weight / sqrt(2) |tau . (gap - gap_prev)|.
  double boundary_dissipation(const FieldP1& gap, const FieldP1& gap_prev) const {
    if (!relaxed()) return 0.0;
    double v = 0.0;
    for (const auto& dn : dnodes_) {
      if (dn.pinned) continue;
      const auto n = static_cast<std::size_t>(dn.node);
      v += slip_weight(dn) * std::abs(dot(dn.tangent, gap[n] - gap_prev[n]));
    }
    return v;
  }

 private:
  double slip_weight(const DirichletNode& dn) const {
    return k_.radius() * dn.weight / std::sqrt(2.0);
  }

  double boundary_energy(const FieldP1& u, const FEState& prev, const LoadFrame& frame) const {
    FieldP1 gap(u.size());
    for (const auto& dn : dnodes_) {
      if (dn.pinned) continue;
      const auto n = static_cast<std::size_t>(dn.node);
      gap[n] = frame.w[n] - u[n];
    }
    return boundary_stored_energy(gap) + boundary_dissipation(gap, prev.gap);
  }

  /// Gauss-Seidel pass of exact nodal minimizations over the slipping
  /// Dirichlet nodes, everything else frozen.
  void boundary_sweep(FieldP1& u, const FieldP0& p, const FEState& prev,
                      const LoadFrame& frame, const DofVector& load) const {
    const Mesh& mesh = *mesh_;
    FieldP0 cp(p.size());
    for (std::size_t c = 0; c < p.size(); ++c) cp[c] = hooke_.apply(p[c]);
    const DofVector rhs = load + internal_force(mesh, cp);
    const auto& kmat = elastic_.stiffness();
    DofVector x = to_dofs(u);

    for (const auto& dn : dnodes_) {
      if (dn.pinned) continue;
      const int n = dn.node;
      // Gradient and 2x2 diagonal block of the elastic part at node n.
      double g[2] = {-rhs[2 * n], -rhs[2 * n + 1]};
      double knn[2][2] = {{0.0, 0.0}, {0.0, 0.0}};
      for (int i = 0; i < 2; ++i)
        for (Eigen::SparseMatrix<double>::InnerIterator it(kmat, 2 * n + i); it; ++it) {
          g[i] += it.value() * x[it.row()];
          const auto r = it.row() - 2 * n;
          if (r == 0 || r == 1) knn[r][i] = it.value();
        }
      const Vec2 un{{x[2 * n], x[2 * n + 1]}};
      const Vec2 w = frame.w[static_cast<std::size_t>(n)];
      const Vec2& nu = dn.normal;
      const Vec2& tau = dn.tangent;
      const double pl = penalty_ * dn.weight;
      const double a = slip_weight(dn);
      const double s0 = dot(tau, prev.gap[static_cast<std::size_t>(n)]);

      // q(z) = 1/2 z^T H z - b.z + const
      const double h00 = knn[0][0] + pl * nu[0] * nu[0];
      const double h01 = knn[0][1] + pl * nu[0] * nu[1];
      const double h10 = knn[1][0] + pl * nu[1] * nu[0];
      const double h11 = knn[1][1] + pl * nu[1] * nu[1];
      const double nw = pl * dot(nu, w);
      const Vec2 b{{knn[0][0] * un[0] + knn[0][1] * un[1] - g[0] + nw * nu[0],
                    knn[1][0] * un[0] + knn[1][1] * un[1] - g[1] + nw * nu[1]}};
      const double det = h00 * h11 - h01 * h10;
      auto hinv = [&](const Vec2& r) {
        return Vec2{{(h11 * r[0] - h01 * r[1]) / det, (h00 * r[1] - h10 * r[0]) / det}};
      };
      const Vec2 hb = hinv(b);
      const Vec2 ht = hinv(tau);
      const double c0 = dot(tau, w) - s0;  // tau.z at zero slip increment
      const double lambda = (c0 - dot(tau, hb)) / dot(tau, ht);
      Vec2 z;
      if (std::abs(lambda) <= a) {
        z = hb + ht * lambda;
      } else {
        z = hb + ht * (lambda > 0.0 ? a : -a);
      }
      x[2 * n] = z[0];
      x[2 * n + 1] = z[1];
    }
    u = from_dofs(x);
  }

  const Mesh* mesh_;
  HookeTensor hooke_;
  YieldSet k_;
  StepOptions options_;
  ElasticSolver elastic_;
  std::vector<DirichletNode> dnodes_;
  double penalty_ = 0.0;
};

/// Convenience wrapper around IncrementalSolver::step.
inline StepResult incremental_step(const FEState& prev, const LoadFrame& prev_frame,
                                   const LoadFrame& frame, double time, const Mesh& mesh,
                                   const HookeTensor& hooke, const YieldSet& k,
                                   StepOptions options = {}) {
  return IncrementalSolver(mesh, hooke, k, options).step(prev, prev_frame, frame, time);
}

struct LedgerRow {
  int step = 0;
  double time = 0.0;
  double Q = 0.0;  // stored energy
  double D = 0.0;  // cumulative dissipation
  double W = 0.0;  // cumulative external work
  double gap = 0.0;  // Q + D - W - Q_0
  double max_sigma_dev = 0.0;
  double plastic_cell_fraction = 0.0;
};

struct EnergyLedger {
  std::vector<LedgerRow> rows;
};

struct EvolutionResult {
  std::vector<FEState> states;
  EnergyLedger ledger;
  std::vector<int> iterations;  // sweeps per step (entry 0 unused)
};

namespace detail {

inline double stored_energy(const FEState& s, const Mesh& mesh, const IncrementalSolver& solver) {
  double q = 0.0;
  for (std::size_t c = 0; c < mesh.num_cells(); ++c)
    q += 0.5 * mesh.areas[c] * double_dot(s.sigma[c], s.e[c]);
  return q + solver.boundary_stored_energy(s.gap);
}

inline double step_work(const FEState& a, const FEState& b, const LoadFrame& fa,
                        const LoadFrame& fb, const Mesh& mesh) {
  const FieldP1 dw = fb.w - fa.w;
  const FieldP0 edw = strain_of(dw, mesh);
  double work = 0.0;
  for (std::size_t c = 0; c < mesh.num_cells(); ++c)
    work += mesh.areas[c] * 0.5 * double_dot(a.sigma[c] + b.sigma[c], edw[c]);
  const DofVector la = assemble_load(mesh, fa.body, fa.traction);
  const DofVector lb = assemble_load(mesh, fb.body, fb.traction);
  const DofVector rel = to_dofs(b.u) - to_dofs(a.u) - to_dofs(dw);
  return work + 0.5 * (la + lb).dot(rel);
}

}  // namespace detail

/// Runs the evolution over the program's grid starting from `init`
/// (which must be consistent with the loads at t_0).
inline EvolutionResult run_evolution(const LoadProgram& program, const HookeTensor& hooke,
                                     const YieldSet& k, const Mesh& mesh, const FEState& init,
                                     StepOptions options = {}) {
  program.validate(mesh);
  const IncrementalSolver solver(mesh, hooke, k, options);
  EvolutionResult out;
  out.states.reserve(program.times().size());
  FEState s0 = init;
  s0.time = program.times().front();
  if (s0.gap.empty()) s0.gap.assign(mesh.num_nodes(), Vec2{});
  out.states.push_back(s0);
  out.iterations.push_back(0);

  const double q0 = detail::stored_energy(s0, mesh, solver);
  out.ledger.rows.push_back({0, s0.time, q0, 0.0, 0.0, 0.0, max_dev_norm(s0.sigma), 0.0});

  for (int kstep = 1; kstep <= program.num_steps(); ++kstep) {
    const auto ks = static_cast<std::size_t>(kstep);
    const FEState& prev = out.states.back();
    StepResult r;
    try {
      r = solver.step(prev, program.frame(ks - 1), program.frame(ks), program.times()[ks]);
    } catch (const NonConvergenceError& e) {
      throw NonConvergenceError(e.what(), e.history(), kstep);
    } catch (const Error& e) {
      throw EvolutionError(e.what(), kstep, std::nullopt, e.module());
    }
    const FEState& s = r.state;
    const LedgerRow& last = out.ledger.rows.back();
    LedgerRow row;
    row.step = kstep;
    row.time = s.time;
    row.Q = detail::stored_energy(s, mesh, solver);
    std::size_t plastic = 0;
    double dissipated = 0.0;
    for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
      const double dp = norm(s.p[c] - prev.p[c]);
      if (dp > 0.0) ++plastic;
      dissipated += mesh.areas[c] * k.radius() * dp;
    }
    dissipated += solver.boundary_dissipation(s.gap, prev.gap);
    row.D = last.D + dissipated;
    row.W = last.W + detail::step_work(prev, s, program.frame(ks - 1), program.frame(ks), mesh);
    row.gap = row.Q + row.D - row.W - q0;
    row.max_sigma_dev = max_dev_norm(s.sigma);
    row.plastic_cell_fraction =
        static_cast<double>(plastic) / static_cast<double>(mesh.num_cells());
    out.ledger.rows.push_back(row);
    out.iterations.push_back(r.iterations);
    out.states.push_back(std::move(r.state));
  }
  return out;
}

/// Stress/plastic-strain pairing
///   sum_T area sigma : (E w - e) + F(f, g).(u - w),
/// where F is the consistent nodal load. For discretely equilibrated sigma
/// and u = w on Gamma_D it equals sum_T area sigma : p.
inline double duality_pairing(const FieldP0& sigma, const FEState& state, const FieldP1& w,
                              const Mesh& mesh, const std::vector<Vec2>& body,
                              const std::vector<Vec2>& traction) {
  if (sigma.size() != mesh.num_cells() || state.e.size() != mesh.num_cells() ||
      w.size() != mesh.num_nodes() || state.u.size() != mesh.num_nodes())
    throw MeshError("duality_pairing: field sizes do not match the mesh");
  const FieldP0 ew = strain_of(w, mesh);
  double v = 0.0;
  for (std::size_t c = 0; c < mesh.num_cells(); ++c)
    v += mesh.areas[c] * double_dot(sigma[c], ew[c] - state.e[c]);
  const DofVector load = assemble_load(mesh, body, traction);
  return v + load.dot(to_dofs(state.u) - to_dofs(w));
}

struct BalanceReport {
  std::vector<double> gaps;  // signed Q + D - W - Q_0 per grid time
  double max_abs_gap = 0.0;
  double budget = 0.0;  // C * max time step
  bool within_budget = true;
  /// Q + D <= W + Q_0 + budget at every grid time.
  bool one_sided = true;
};

/// Compares the balance gap with the consistency budget C * dt_max.
inline BalanceReport energy_report(const EnergyLedger& ledger, const LoadProgram& program,
                                   double budget_constant) {
  BalanceReport r;
  r.budget = budget_constant * program.max_step();
  for (const auto& row : ledger.rows) {
    r.gaps.push_back(row.gap);
    r.max_abs_gap = std::max(r.max_abs_gap, std::abs(row.gap));
    if (std::abs(row.gap) > r.budget) r.within_budget = false;
    if (row.gap > r.budget) r.one_sided = false;
  }
  return r;
}

}  // namespace rigidplast
