#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "rigidplast/benchmarks.hpp"
#include "rigidplast/evolution.hpp"
#include "test_support.hpp"

using namespace rigidplast;
using rigidplast::testing::Gen;

namespace {

constexpr double kSqrt2 = 1.4142135623730951;

LoadProgram shear_program(const Mesh& m, const std::vector<double>& times, double rate) {
  return LoadProgram::sample(times, [&](double t) {
    return LoadFrame{interpolate_p1(m, [&](Vec2 x) { return Vec2{{t * rate * x[1], 0.0}}; }), {},
                     {}};
  });
}

// Full-Dirichlet program with a non-affine (but divergence-free) datum, so
// that plastic zones spread non-uniformly.
LoadProgram curved_program(const Mesh& m, const std::vector<double>& times, double rate) {
  return LoadProgram::sample(times, [&](double t) {
    return LoadFrame{
        interpolate_p1(m, [&](Vec2 x) { return Vec2{{t * rate * x[1] * x[1] * x[1], 0.0}}; }), {},
        {}};
  });
}

TEST(LoadProgram, Validation) {
  const Mesh m = build_square_mesh(2, FaceSet::all());
  EXPECT_THROW(LoadProgram({0.0, 0.0}, {zero_frame(m), zero_frame(m)}), EvolutionError);
  EXPECT_THROW(LoadProgram({0.0}, {zero_frame(m)}), EvolutionError);
  const LoadProgram bad = LoadProgram::sample(
      {0.0, 1.0}, [&](double t) { return LoadFrame{interpolate_p1(m, [&](Vec2 x) { return x * t; }), {}, {}}; });
  EXPECT_THROW(bad.validate(m), EvolutionError);
  EXPECT_NO_THROW(shear_program(m, uniform_grid(1.0, 4), 2.0).validate(m));
}

TEST(LoadProgram, AffineInterpolationAndGrids) {
  const Mesh m = build_square_mesh(2, FaceSet::all());
  const LoadProgram prog = shear_program(m, uniform_grid(2.0, 4), 1.0);
  const LoadFrame mid = prog.at(0.75);
  for (std::size_t i = 0; i < m.num_nodes(); ++i)
    EXPECT_NEAR(mid.w[i][0], 0.75 * m.nodes[i][1], 1e-15);
  const auto g = geometric_grid(1.0, 10, 1e-4);
  EXPECT_EQ(g.front(), 0.0);
  EXPECT_EQ(g[1], 1e-4);
  EXPECT_EQ(g.back(), 1.0);
  for (std::size_t k = 2; k < g.size(); ++k) EXPECT_GT(g[k] - g[k - 1], g[k - 1] - g[k - 2]);
  EXPECT_THROW(uniform_grid(1.0, 0), EvolutionError);
}

TEST(IncrementalStep, ZeroLoadsGiveZeroState) {
  const Mesh m = build_square_mesh(3, {Face::Bottom});
  const FEState z = FEState::zero(m);
  const auto r = incremental_step(z, zero_frame(m), zero_frame(m), 1.0, m, HookeTensor(1.0, 1.0),
                                  YieldSet(1.0));
  for (const auto& x : r.state.u) EXPECT_EQ(norm(x), 0.0);
  for (const auto& x : r.state.p) EXPECT_EQ(norm(x), 0.0);
  EXPECT_EQ(r.iterations, 1);
}

TEST(IncrementalStep, SmallLoadsAreLinearElastic) {
  const Mesh m = build_square_mesh(6, {Face::Bottom});
  const HookeTensor c(1.0, 2.0);
  std::vector<Vec2> body(m.num_cells(), Vec2{{0.01, -0.02}});
  LoadFrame f = zero_frame(m);
  f.body = body;
  f.traction = shear_tractions(m, 0.05);
  const auto r = incremental_step(FEState::zero(m), zero_frame(m), f, 1.0, m, c, YieldSet(1.0));
  const FieldP1 ue = solve_elastic(m, c, FieldP0(m.num_cells()), FieldP1(m.num_nodes()), body,
                                   f.traction);
  for (std::size_t i = 0; i < m.num_nodes(); ++i) {
    EXPECT_NEAR(r.state.u[i][0], ue[i][0], 1e-13);
    EXPECT_NEAR(r.state.u[i][1], ue[i][1], 1e-13);
  }
  for (const auto& x : r.state.p) EXPECT_EQ(norm(x), 0.0);
}

TEST(IncrementalStep, HomogeneousShearMatchesClosedForm) {
  const double mu = 1.3, eps = 0.25, kappa = 0.8, gamma = 2.0;
  const Mesh m = build_square_mesh(4, FaceSet::all());
  const HookeTensor c(mu, 1.0, eps);
  const auto times = uniform_grid(1.0, 20);
  const LoadProgram prog = shear_program(m, times, gamma);
  const auto res = run_evolution(prog, c, YieldSet(kappa), m, FEState::zero(m));
  for (std::size_t k = 0; k < times.size(); ++k) {
    // 0-D oracle: elastic ramp capped at the yield value
    const double s12 = std::min(mu * gamma * times[k] / eps, kappa / kSqrt2);
    for (const auto& s : res.states[k].sigma) {
      EXPECT_NEAR(s(0, 1), s12, 1e-10);
      EXPECT_NEAR(s(0, 0), 0.0, 1e-10);
      EXPECT_NEAR(s(1, 1), 0.0, 1e-10);
    }
  }
}

TEST(IncrementalStep, FunctionalDecreasesMonotonically) {
  const Mesh m = build_square_mesh(6, FaceSet::all());
  const HookeTensor c(1.0, 1.0, 0.5);
  const YieldSet k(1.0);
  const LoadProgram prog = curved_program(m, uniform_grid(1.0, 4), 3.0);
  const IncrementalSolver solver(m, c, k);
  FEState s = FEState::zero(m);
  bool saw_many = false;
  for (int step = 1; step <= 4; ++step) {
    const auto r = solver.step(s, prog.frame(step - 1), prog.frame(step), prog.times()[step]);
    for (std::size_t i = 1; i < r.history.size(); ++i)
      EXPECT_LE(r.history[i], r.history[i - 1] + 1e-12 * (1.0 + std::abs(r.history[i])));
    // never worse than the shifted previous state
    EXPECT_LE(r.history.back(), r.history.front());
    saw_many = saw_many || r.iterations > 3;
    s = r.state;
  }
  EXPECT_TRUE(saw_many);
}

TEST(IncrementalStep, NonConvergenceCarriesHistory) {
  const Mesh m = build_square_mesh(6, FaceSet::all());
  const LoadProgram prog = curved_program(m, uniform_grid(1.0, 1), 3.0);
  StepOptions opt;
  opt.max_iters = 2;
  try {
    incremental_step(FEState::zero(m), prog.frame(0), prog.frame(1), 1.0, m,
                     HookeTensor(1.0, 1.0, 0.5), YieldSet(1.0), opt);
    FAIL() << "expected non-convergence";
  } catch (const NonConvergenceError& e) {
    EXPECT_EQ(e.history().size(), 3u);
  }
}

TEST(RunEvolution, SingleTrivialStep) {
  const Mesh m = build_square_mesh(2, FaceSet::all());
  const LoadProgram prog({0.0, 1.0}, {zero_frame(m), zero_frame(m)});
  const auto res = run_evolution(prog, HookeTensor(1.0, 1.0), YieldSet(1.0), m, FEState::zero(m));
  ASSERT_EQ(res.states.size(), 2u);
  EXPECT_EQ(res.states[0].u, res.states[1].u);
  for (const auto& row : res.ledger.rows) {
    EXPECT_EQ(row.Q, 0.0);
    EXPECT_EQ(row.D, 0.0);
    EXPECT_EQ(row.W, 0.0);
    EXPECT_EQ(row.gap, 0.0);
  }
  const auto rep = energy_report(res.ledger, prog, 1.0);
  EXPECT_EQ(rep.max_abs_gap, 0.0);
}

TEST(RunEvolution, ElasticRampBalancesExactly) {
  const Mesh m = build_square_mesh(5, {Face::Bottom});
  const HookeTensor c(1.0, 2.0);
  const LoadProgram prog = LoadProgram::sample(uniform_grid(1.0, 8), [&](double t) {
    LoadFrame f = zero_frame(m);
    f.traction = shear_tractions(m, 0.3 * t);
    f.body.assign(m.num_cells(), Vec2{{0.0, -0.1 * t}});
    return f;
  });
  const auto res = run_evolution(prog, c, YieldSet(1.0), m, FEState::zero(m));
  double wmax = 0.0;
  for (const auto& row : res.ledger.rows) {
    EXPECT_EQ(row.D, 0.0);
    wmax = std::max(wmax, std::abs(row.W));
  }
  ASSERT_GT(wmax, 0.0);
  for (const auto& row : res.ledger.rows) EXPECT_LE(std::abs(row.gap), 1e-10 * wmax);
}

TEST(RunEvolution, ShearInvariantsPastYield) {
  const Mesh m = build_square_mesh(4, FaceSet::all());
  const double kappa = 1.0;
  const HookeTensor c(1.0, 1.0, 0.5);
  const LoadProgram prog = shear_program(m, uniform_grid(1.0, 16), 2.0);
  const auto res = run_evolution(prog, c, YieldSet(kappa), m, FEState::zero(m));
  double last_d = 0.0;
  for (std::size_t k = 1; k < res.states.size(); ++k) {
    const FEState& s = res.states[k];
    const FEState& prev = res.states[k - 1];
    double hill_lhs = 0.0, hill_rhs = 0.0;
    for (std::size_t cell = 0; cell < m.num_cells(); ++cell) {
      const Sym2 dp = s.p[cell] - prev.p[cell];
      const Sym2 sd = deviator(s.sigma[cell]);
      EXPECT_LE(norm(sd) - kappa, 1e-10 * kappa);
      EXPECT_NEAR(trace(s.p[cell]), 0.0, 1e-14);
      const Sym2 add = s.e[cell] + s.p[cell] - strain_of(s.u, m)[cell];
      EXPECT_LT(norm(add), 1e-10);
      if (norm(dp) > 0.0) {
        EXPECT_NEAR(double_dot(sd, dp), kappa * norm(dp), 1e-10);
      }
      hill_lhs += m.areas[cell] * double_dot(sd, dp);
      hill_rhs += m.areas[cell] * kappa * norm(dp);
    }
    EXPECT_NEAR(hill_lhs, hill_rhs, 1e-8 * std::max(1.0, hill_rhs));
    EXPECT_GE(res.ledger.rows[k].D, last_d);
    EXPECT_GE(res.ledger.rows[k].Q, 0.0);
    last_d = res.ledger.rows[k].D;
  }
  EXPECT_GT(last_d, 0.0);
}

double max_gap_for(int steps) {
  const Mesh m = build_square_mesh(4, FaceSet::all());
  const LoadProgram prog = shear_program(m, uniform_grid(1.0, steps), 2.0);
  const auto res = run_evolution(prog, HookeTensor(1.0, 1.0), YieldSet(1.0), m, FEState::zero(m));
  return energy_report(res.ledger, prog, 0.0).max_abs_gap;
}

TEST(EnergyReport, GapShrinksWithTimeStep) {
  const double g8 = max_gap_for(8);
  const double g16 = max_gap_for(16);
  const double g32 = max_gap_for(32);
  EXPECT_GT(g8, 0.0);
  EXPECT_LE(g16, 0.6 * g8);
  EXPECT_LE(g32, 0.6 * g16);
}

TEST(EnergyReport, OneSidedWithinBudget) {
  const Mesh m = build_square_mesh(6, FaceSet::all());
  const LoadProgram prog = curved_program(m, uniform_grid(1.0, 16), 3.0);
  const auto res = run_evolution(prog, HookeTensor(1.0, 1.0, 0.5), YieldSet(1.0), m,
                                 FEState::zero(m));
  const auto coarse_prog = curved_program(m, uniform_grid(1.0, 8), 3.0);
  const auto coarse = run_evolution(coarse_prog, HookeTensor(1.0, 1.0, 0.5), YieldSet(1.0), m,
                                    FEState::zero(m));
  // budget constant calibrated on the coarse run
  const double c = energy_report(coarse.ledger, coarse_prog, 0.0).max_abs_gap /
                   coarse_prog.max_step();
  const auto rep = energy_report(res.ledger, prog, c);
  EXPECT_TRUE(rep.one_sided);
  EXPECT_TRUE(rep.within_budget);
  EXPECT_GT(res.ledger.rows.back().D, 0.0);
}

TEST(RunEvolution, RateIndependenceOnRefinement) {
  const Mesh m = build_square_mesh(6, FaceSet::all());
  const HookeTensor c(1.0, 1.0, 0.5);
  const auto a = run_evolution(curved_program(m, uniform_grid(1.0, 8), 3.0), c, YieldSet(1.0), m,
                               FEState::zero(m));
  const auto b = run_evolution(curved_program(m, uniform_grid(1.0, 16), 3.0), c, YieldSet(1.0), m,
                               FEState::zero(m));
  const auto d = run_evolution(curved_program(m, uniform_grid(1.0, 32), 3.0), c, YieldSet(1.0), m,
                               FEState::zero(m));
  const double d1 = l1_norm(a.states.back().p - b.states.back().p, m);
  const double d2 = l1_norm(b.states.back().p - d.states.back().p, m);
  EXPECT_LE(d2, d1 + 1e-12);
  EXPECT_LT(d2, 0.05 * l1_norm(d.states.back().p, m));
}

TEST(RunEvolution, StepErrorsCarryStepIndex) {
  const Mesh m = build_square_mesh(4, FaceSet::all());
  const LoadProgram prog = curved_program(m, uniform_grid(1.0, 3), 3.0);
  StepOptions opt;
  opt.max_iters = 1;
  try {
    run_evolution(prog, HookeTensor(1.0, 1.0, 0.5), YieldSet(0.2), m, FEState::zero(m), opt);
    FAIL() << "expected an error";
  } catch (const NonConvergenceError& e) {
    ASSERT_TRUE(e.step().has_value());
    EXPECT_GE(*e.step(), 1);
  }
}

TEST(RelaxedMode, StiffBoundaryMatchesStrongMode) {
  const Mesh m = build_square_mesh(4, FaceSet::all());
  const HookeTensor c(1.0, 1.0, 0.5);
  const LoadProgram prog = curved_program(m, uniform_grid(1.0, 4), 0.5);
  StepOptions relaxed;
  relaxed.boundary_mode = BoundaryMode::Relaxed;
  const auto a = run_evolution(prog, c, YieldSet(100.0), m, FEState::zero(m));
  const auto b = run_evolution(prog, c, YieldSet(100.0), m, FEState::zero(m), relaxed);
  // far below yield: no plastic flow and no boundary slip
  for (std::size_t i = 0; i < m.num_nodes(); ++i) {
    EXPECT_NEAR(a.states.back().u[i][0], b.states.back().u[i][0], 1e-6);
    EXPECT_NEAR(a.states.back().u[i][1], b.states.back().u[i][1], 1e-6);
  }
}

TEST(RelaxedMode, BoundarySlipKeepsNormalGapSmall) {
  const Mesh m = build_square_mesh(6, FaceSet::all());
  const HookeTensor c(1.0, 1.0, 0.25);
  const YieldSet k(1.0);
  const LoadProgram prog = curved_program(m, uniform_grid(1.0, 8), 3.0);
  StepOptions opt;
  opt.boundary_mode = BoundaryMode::Relaxed;
  const IncrementalSolver solver(m, c, k, opt);
  const auto res = run_evolution(prog, c, k, m, FEState::zero(m), opt);
  double slip = 0.0;
  for (const auto& dn : solver.boundary_nodes()) {
    const Vec2 gap = res.states.back().gap[static_cast<std::size_t>(dn.node)];
    EXPECT_LT(std::abs(dot(gap, dn.normal)), 1e-5);
    slip = std::max(slip, std::abs(dot(gap, dn.tangent)));
    if (dn.pinned) {
      EXPECT_EQ(norm(gap), 0.0);
    }
  }
  EXPECT_GT(slip, 1e-6);
  for (std::size_t kk = 1; kk < res.ledger.rows.size(); ++kk)
    EXPECT_GE(res.ledger.rows[kk].D, res.ledger.rows[kk - 1].D);
}

TEST(DualityPairing, ZeroPlasticStrain) {
  const Mesh m = build_square_mesh(4, {Face::Bottom});
  Gen gen(53);
  FEState s = FEState::zero(m);
  s.u = interpolate_p1(m, [](Vec2 x) { return Vec2{{x[1] * x[0], x[0] * x[0]}}; });
  s.e = strain_of(s.u, m);
  const FieldP0 sigma(m.num_cells(), gen.sym());
  EXPECT_NEAR(duality_pairing(sigma, s, s.u, m, {}, shear_tractions(m, 0.3)), 0.0, 1e-14);
}

TEST(DualityPairing, ConstantStressManufacturedState) {
  // u vanishes on the Dirichlet face; oracle: direct sum of sigma_D : p
  const Mesh m = build_square_mesh(8, {Face::Bottom});
  const Sym2 sig({0.4, -0.3, 0.1});
  FEState s = FEState::zero(m);
  s.u = interpolate_p1(m, [](Vec2 x) { return Vec2{{x[1] * (1.0 + x[0]), x[1] * x[1] * x[0]}}; });
  const FieldP0 eu = strain_of(s.u, m);
  s.e.resize(m.num_cells());
  s.p.resize(m.num_cells());
  for (std::size_t c = 0; c < m.num_cells(); ++c) {
    s.e[c] = Sym2::identity() * (0.5 * trace(eu[c])) + Sym2({0.0, 0.02, 0.0});
    s.p[c] = eu[c] - s.e[c];
  }
  double oracle = 0.0;
  for (std::size_t c = 0; c < m.num_cells(); ++c) {
    ASSERT_TRUE(is_deviatoric(s.p[c]));
    oracle += m.areas[c] * double_dot(deviator(sig), s.p[c]);
  }
  std::vector<Vec2> g(m.boundary_edges.size());
  for (std::size_t e = 0; e < g.size(); ++e) g[e] = sig * m.boundary_edges[e].normal;
  const double v = duality_pairing(FieldP0(m.num_cells(), sig), s, FieldP1(m.num_nodes()), m, {}, g);
  EXPECT_NEAR(v, oracle, 1e-13);
}

TEST(DualityPairing, MassBoundOnRandomAdmissibleStates) {
  Gen gen(59);
  const Mesh m = build_square_mesh(5, FaceSet::all());
  const HookeTensor c(1.0, 1.5);
  for (int trial = 0; trial < 100; ++trial) {
    // equilibrated stress: elastic response to a random eigenstrain
    FieldP0 q(m.num_cells());
    for (auto& x : q) x = gen.dev(0.3);
    const FieldP1 uq = solve_elastic(m, c, q, FieldP1(m.num_nodes()), {}, {});
    const FieldP0 euq = strain_of(uq, m);
    FieldP0 sigma(m.num_cells());
    for (std::size_t k = 0; k < m.num_cells(); ++k) sigma[k] = c.apply(euq[k] - q[k]);
    // admissible state for a random boundary datum
    const FieldP1 w = interpolate_p1(m, [&](Vec2 x) { return Vec2{{0.3 * x[1], 0.0}} * gen.normal(); });
    FEState s = FEState::zero(m);
    s.u = w;
    for (std::size_t i = 0; i < m.num_nodes(); ++i)
      if (!m.dirichlet_node[i]) s.u[i] = gen.vec(0.2);
    const FieldP0 eu = strain_of(s.u, m);
    for (std::size_t k = 0; k < m.num_cells(); ++k) {
      s.p[k] = gen.dev(0.5);
      s.e[k] = eu[k] - s.p[k];
    }
    const double v = duality_pairing(sigma, s, w, m, {}, {});
    const double bound = max_dev_norm(sigma) * plastic_mass(s.p, s.gap, m);
    EXPECT_LE(std::abs(v), bound * (1.0 + 1e-12) + 1e-14);
  }
}

}  // namespace
