// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
// criterion fails. Oracles are independent of the code under test.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "rigidplast/rigidplast.hpp"

using namespace rigidplast;
namespace fs = std::filesystem;

namespace {

constexpr double kSqrt2 = 1.4142135623730951;

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << "[violated: " << what << "] ";
    }
  }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : rng_(seed) {}
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  double normal() { return std::normal_distribution<double>(0.0, 1.0)(rng_); }
  Sym2 dev(double scale) {
    const double a = scale * normal();
    return Sym2({a, scale * normal(), -a});
  }
  Vec2 vec(double scale) { return Vec2{{scale * normal(), scale * normal()}}; }

 private:
  std::mt19937_64 rng_;
};

/// Minimizer of a unimodal function by golden-section search.
double golden_section(const std::function<double(double)>& f, double lo, double hi) {
  const double r = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - r * (b - a), d = a + r * (b - a);
  double fc = f(c), fd = f(d);
  for (int i = 0; i < 500 && b - a > 1e-15 * (1.0 + std::abs(a) + std::abs(b)); ++i) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - r * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + r * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

/// Least-squares slope of y against x.
double ls_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(x.size());
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxy / sxx;
}

/// Values at or below `floor` are roundoff and count as zero: above the
/// floor each entry must be strictly below its predecessor, and once the
/// floor is reached every later entry must stay there.
bool strictly_decreasing_with_floor(const std::vector<double>& v, double floor) {
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i - 1] > floor ? !(v[i] < v[i - 1]) : v[i] > floor) return false;
  }
  return true;
}

/// max / min after clamping to the floor; all-roundoff lists give 1.
double spread_with_floor(const std::vector<double>& v, double floor) {
  double lo = INFINITY, hi = 0.0;
  for (double x : v) {
    lo = std::min(lo, std::max(x, floor));
    hi = std::max(hi, std::max(x, floor));
  }
  if (hi <= floor) return 1.0;
  return lo > 0.0 ? hi / lo : INFINITY;
}

std::string list(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + format_double(v[i]);
  return s;
}

std::vector<double> sweep_epsilons() {
  std::vector<double> e;
  for (int k = 0; k <= 12; ++k) e.push_back(std::ldexp(1.0, -k));
  return e;
}

SweepConfig sweep_setup(BenchmarkId id, double mu) {
  SweepConfig sc;
  sc.epsilons = sweep_epsilons();
  sc.benchmark = id;
  sc.params.mesh_n = 16;
  sc.params.time_steps = 64;
  sc.params.grid = TimeGrid::Geometric;
  sc.params.mu = mu;
  return sc;
}

// Sweeps shared by criteria 4, 5, 6 and 8.
struct Sweeps {
  SweepReport shear;
  SweepReport traction;
  SweepReport shear_2mu;
  double shear_seconds = 0.0;
};

Sweeps& sweeps() {
  static Sweeps s = [] {
    Sweeps out;
    const auto t0 = Clock::now();
    out.shear = run_sweep(sweep_setup(BenchmarkId::Shear, 1.0));
    out.shear_seconds = seconds_since(t0);
    out.traction = run_sweep(sweep_setup(BenchmarkId::Traction, 1.0));
    out.shear_2mu = run_sweep(sweep_setup(BenchmarkId::Shear, 2.0));
    return out;
  }();
  return s;
}

double max_floor(const SweepReport& r, double EpsilonSummary::*field) {
  double f = 0.0;
  for (const auto& s : r.summaries) f = std::max(f, s.*field);
  return f;
}

std::vector<double> column(const SweepReport& r, double EpsilonSummary::*field) {
  std::vector<double> v;
  for (const auto& s : r.summaries) v.push_back(s.*field);
  return v;
}

// ---------------------------------------------------------------------------

Outcome criterion1() {
  Outcome o;
  const auto t0 = Clock::now();
  Rng rng(1001);
  double worst_p = 0.0, worst_hill = 0.0;
  int yielded = 0;
  for (int i = 0; i < 1000; ++i) {
    const HookeTensor c(rng.uniform(0.2, 3.0), rng.uniform(0.2, 3.0), rng.uniform(0.01, 1.0));
    const YieldSet k(rng.uniform(0.2, 2.0));
    const Sym2 e = rng.dev(rng.uniform(0.01, 2.0));
    const Sym2 p_old = rng.dev(0.5);
    const auto r = radial_return(e, p_old, c, k);

    // Scalar oracle along the trial direction: golden section, then one
    // vertex step of the (exactly quadratic) energy on t > 0.
    const Sym2 trial = e - p_old;
    const double len = norm(trial);
    double t = 0.0;
    if (len > 0.0) {
      const Sym2 dir = trial * (1.0 / len);
      auto phi = [&](double s) { return cell_incremental_energy(e, p_old + dir * s, p_old, c, k); };
      t = golden_section(phi, 0.0, len);
      if (t > 1e-6 * len) {
        const double h = 0.5 * t;
        const double fm = phi(t - h), f0 = phi(t), fp = phi(t + h);
        const double curv = fm - 2.0 * f0 + fp;
        if (curv > 0.0) t -= 0.5 * h * (fp - fm) / curv;
      }
      worst_p = std::max(worst_p, std::abs(norm(r.plastic_strain) - norm(p_old + dir * t)));
    } else {
      worst_p = std::max(worst_p, std::abs(norm(r.plastic_strain) - norm(p_old)));
    }

    const Sym2 dp = r.plastic_strain - p_old;
    if (norm(dp) > 0.0) {
      ++yielded;
      worst_hill = std::max(worst_hill, std::abs(double_dot(r.stress_dev, dp) - k.radius() * norm(dp)));
    }
  }
  const double secs = seconds_since(t0);
  o.require(worst_p <= 1e-10, "|p_new| vs oracle <= 1e-10");
  o.require(worst_hill <= 1e-12, "Hill identity <= 1e-12");
  o.require(yielded > 0, "some states yield");
  o.require(secs < 5.0, "runtime < 5 s");
  o.detail << "max | |p| - oracle | = " << format_double(worst_p) << ", max Hill defect = "
           << format_double(worst_hill) << ", yielded " << yielded << "/1000, " << secs << " s";
  return o;
}

Outcome criterion2() {
  Outcome o;
  const auto t0 = Clock::now();
  for (double eps : {1.0, 0.25}) {
    BenchmarkParams p;
    p.mesh_n = 1;
    p.time_steps = 64;
    p.mu = 1.3;
    p.kappa = 0.8;
    p.shear_rate = 2.0;
    const Benchmark b = benchmark_catalog(BenchmarkId::Shear, p);
    const auto res = run_evolution(b.program, b.hooke.with_epsilon(eps), b.yield_set, b.mesh,
                                   FEState::zero(b.mesh));
    const double t_y = eps * p.kappa / (kSqrt2 * p.mu * p.shear_rate);
    const auto& times = b.program.times();
    double t_first = NAN;
    for (std::size_t k = 0; k < res.ledger.rows.size(); ++k)
      if (res.ledger.rows[k].plastic_cell_fraction > 0.0) {
        t_first = res.ledger.rows[k].time;
        break;
      }
    o.require(std::abs(t_first - t_y) <= b.program.max_step(), "yield time within one step");
    double worst = 0.0;
    const double s12 = p.kappa / kSqrt2;
    for (std::size_t k = 0; k < times.size(); ++k) {
      if (times[k] < t_first) continue;
      for (const auto& s : res.states[k].sigma) worst = std::max(worst, std::abs(s(0, 1) - s12) / s12);
    }
    o.require(worst <= 1e-8, "post-yield sigma_12 relative error <= 1e-8");
    o.detail << "eps=" << eps << ": t_y=" << format_double(t_y) << " first yield at "
             << format_double(t_first) << " (dt=" << format_double(b.program.max_step())
             << "), post-yield rel err " << format_double(worst) << "; ";
  }
  const double secs = seconds_since(t0);
  o.require(secs < 5.0, "runtime < 5 s");
  o.detail << secs << " s";
  return o;
}

Outcome criterion3() {
  Outcome o;
  const auto t0 = Clock::now();
  std::vector<double> gaps;
  std::vector<EnergyLedger> ledgers;
  std::vector<LoadProgram> programs;
  for (int m : {32, 64, 128}) {
    BenchmarkParams p;
    p.mesh_n = 16;
    p.time_steps = m;
    const Benchmark b = benchmark_catalog(BenchmarkId::Shear, p);
    auto res = run_evolution(b.program, b.hooke, b.yield_set, b.mesh, FEState::zero(b.mesh));
    gaps.push_back(energy_report(res.ledger, b.program, 0.0).max_abs_gap);
    ledgers.push_back(std::move(res.ledger));
    programs.push_back(b.program);
  }
  // Budget constant C (gap <= C dt) calibrated on the coarsest grid.
  const double c = gaps[0] / programs[0].max_step();
  bool one_sided = true;
  for (std::size_t i = 0; i < ledgers.size(); ++i)
    one_sided = one_sided && energy_report(ledgers[i], programs[i], c).one_sided;
  const double r1 = gaps[0] / gaps[1], r2 = gaps[1] / gaps[2];
  const double secs = seconds_since(t0);
  o.require(r1 >= 1.6 && r2 >= 1.6, "gap factor >= 1.6 per halving");
  o.require(one_sided, "Q + D <= W + budget at every step");
  o.require(secs < 60.0, "runtime < 60 s");
  o.detail << "max|gap| M=32,64,128: " << list(gaps) << ", factors " << format_double(r1) << ", "
           << format_double(r2) << ", budget C=" << format_double(c) << ", " << secs << " s";
  return o;
}

Outcome criterion4() {
  Outcome o;
  const SweepReport& r = sweeps().shear;
  const auto eps = r.epsilons;
  const auto sup_e = column(r, &EpsilonSummary::sup_e);
  const auto div_u = column(r, &EpsilonSummary::sup_div_u);
  const RateFit fe = fit_rate(eps, sup_e);
  o.require(fe.slope >= 0.45 && fe.r2 >= 0.98, "sup ||e|| slope >= 0.45 with r2 >= 0.98");
  o.detail << "sup||e||: slope " << format_double(fe.slope) << " r2 " << format_double(fe.r2) << "; ";
  const double floor = max_floor(r, &EpsilonSummary::strain_floor);
  try {
    const RateFit fd = fit_rate(eps, div_u, floor);
    o.require(fd.slope >= 0.45 && fd.r2 >= 0.98, "||div u|| slope >= 0.45 with r2 >= 0.98");
    o.detail << "||div u||: slope " << format_double(fd.slope) << " r2 " << format_double(fd.r2);
  } catch (const RateFitError&) {
    // Fewer than three values above roundoff: the bound must then hold at
    // the floor for every epsilon.
    const double worst = *std::max_element(div_u.begin(), div_u.end());
    o.require(worst <= floor, "||div u|| at roundoff for every epsilon");
    o.detail << "||div u|| <= " << format_double(worst) << " for all eps, below roundoff floor "
             << format_double(floor) << " (isochoric data, bound holds at floor)";
  }
  o.require(r.epsilons.size() == 13, "13 epsilon values");
  o.require(sweeps().shear_seconds < 180.0, "runtime < 3 min");
  o.detail << ", " << sweeps().shear_seconds << " s";
  return o;
}

std::vector<double> quarter_distances(const SweepReport& r) {
  std::vector<double> d;
  for (std::size_t i = 0; i + 2 < r.states.size(); ++i)
    d.push_back(cauchy_distance(r.states[i], r.states[i + 2], r.mesh, r.program.times()));
  return d;
}

Outcome criterion5() {
  Outcome o;
  for (const SweepReport* r : {&sweeps().shear, &sweeps().traction}) {
    const std::string name = benchmark_name(r->benchmark);
    const double horizon = r->program.times().back();
    const double stress_floor = max_floor(*r, &EpsilonSummary::stress_floor) * std::sqrt(horizon);
    const double strain_floor = max_floor(*r, &EpsilonSummary::strain_floor);
    const auto d = quarter_distances(*r);
    o.require(strictly_decreasing_with_floor(d, stress_floor), name + " Cauchy distances strictly decreasing");
    double sup_dev = 0.0;
    for (const auto& s : r->summaries) sup_dev = std::max(sup_dev, s.sup_sigma_dev);
    o.require(sup_dev <= r->kappa, name + " sup |sigma_D| <= kappa");
    const double hydro = spread_with_floor(column(*r, &EpsilonSummary::hydro_l2), stress_floor);
    const double diss = spread_with_floor(column(*r, &EpsilonSummary::total_dissipation),
                                          r->kappa * strain_floor);
    o.require(hydro < 2.0, name + " hydrostatic deviation spread < 2");
    o.require(diss < 2.0, name + " total dissipation spread < 2");
    o.detail << name << ": d(eps,eps/4)=[" << list(d) << "] floor " << format_double(stress_floor)
             << ", sup|sigma_D|=" << format_double(sup_dev) << ", hydro spread "
             << format_double(hydro) << ", dissipation spread " << format_double(diss) << "; ";
  }
  return o;
}

Outcome criterion6() {
  Outcome o;
  const SweepReport& r = sweeps().shear;
  const auto gaps = column(r, &EpsilonSummary::int_flow_gap);
  const auto rates = column(r, &EpsilonSummary::int_dissipation_rate);
  const double ratio = gaps.back() / rates.back();
  bool monotone = true;
  for (std::size_t i = 1; i < gaps.size(); ++i) monotone = monotone && gaps[i] <= gaps[i - 1];
  bool nonneg = std::all_of(gaps.begin(), gaps.end(), [](double g) { return g >= 0.0; });
  o.require(ratio < 0.05, "gap < 5% of dissipation rate at smallest eps");
  o.require(monotone, "gap monotone decreasing");
  o.require(nonneg, "gap nonnegative");
  o.detail << "gap " << format_double(gaps.back()) << " / rate " << format_double(rates.back())
           << " = " << format_double(ratio) << ", gaps [" << list(gaps) << "]";
  return o;
}

Example41Params saturating_example() {
  Example41Params p;
  p.c = std::nextafter(0.5 / kSqrt2, 0.0);  // largest c with sqrt(2) c < 1/2
  p.a = skew(1.0);
  p.b = Vec2{{0.5, -0.25}};
  return p;
}

Outcome criterion7() {
  Outcome o;
  const auto t0 = Clock::now();
  const Mesh m = build_square_mesh(16, FaceSet::all());
  Example41Params p;
  p.c = 0.2;
  p.f = PiecewiseConstant({0.5}, {0.1, -0.1});
  p.g = 0.05;
  p.a = skew(1.0);
  p.b = Vec2{{0.5, -0.25}};
  const YieldSet k(1.0);
  const auto w = example41_verify(p, {-2.0, 2.0}, m, k);
  o.require(w.witness, "witness produced");
  o.require(w.stress_gap > 0.0, "stress gap > 0");
  for (const auto& e : w.entries) {
    o.require(e.equilibrium_residual == 0.0, "equilibrium residual exactly zero");
    o.require(e.max_sigma_dev < k.radius(), "strict feasibility");
    o.require(e.flow_gap == 0.0, "flow rule satisfied");
  }
  o.require(w.strain_rate_max == 0.0 && w.div_v_max == 0.0, "v is a rigid motion");
  bool rejected = false;
  try {
    example41_verify(saturating_example(), {2.0, 3.0}, m, k);
  } catch (const ExampleError&) {
    rejected = true;
  }
  o.require(rejected, "lambda = 3 rejected at saturating parameters");
  bool saturated_ok = example41_verify(saturating_example(), {-2.0, 2.0}, m, k).witness;
  o.require(saturated_ok, "lambda = +-2 accepted at saturating parameters");
  const double secs = seconds_since(t0);
  o.require(secs < 5.0, "runtime < 5 s");
  o.detail << "stress gap " << format_double(w.stress_gap) << ", residuals ["
           << format_double(w.entries[0].equilibrium_residual) << ","
           << format_double(w.entries[1].equilibrium_residual) << "], max|sigma_D| "
           << format_double(std::max(w.entries[0].max_sigma_dev, w.entries[1].max_sigma_dev))
           << ", lambda=3 rejected: " << (rejected ? "yes" : "no") << ", " << secs << " s";
  return o;
}

Outcome criterion8() {
  Outcome o;
  const auto u = compare_limits(sweeps().shear, sweeps().shear_2mu, 1e-6);
  const double gap = sweeps().shear.summaries.back().int_flow_gap;
  o.require(u.support_fraction > 0.0, "plastic support non-empty");
  o.require(u.weighted_diff_on_support <= 3.0 * gap, "on-support agreement within 3x flow gap");
  // Off the support: the rigid-motion family at saturation.
  const Mesh m = build_square_mesh(16, FaceSet::all());
  Example41Params p = saturating_example();
  p.lambda = -2.0;
  const FieldP0 s1 = example41_stress(p, m);
  p.lambda = 2.0;
  const FieldP0 s2 = example41_stress(p, m);
  double off = 0.0;
  for (std::size_t c = 0; c < m.num_cells(); ++c) off = std::max(off, norm(deviator(s1[c] - s2[c])));
  const auto w = example41_verify(p, {-2.0, 2.0}, m, YieldSet(1.0));
  o.require(w.strain_rate_max == 0.0, "example support empty");
  o.require(off > 1.0, "off-support disagreement exceeds kappa");
  o.detail << "weighted diff on support " << format_double(u.weighted_diff_on_support)
           << " <= 3 x " << format_double(gap) << ", support fraction "
           << format_double(u.support_fraction) << "; example off-support max|dsigma_D| "
           << format_double(off) << " with empty support";
  return o;
}

Outcome criterion9() {
  Outcome o;
  const auto t0 = Clock::now();
  for (double factor : {0.5, 1.5}) {
    BenchmarkParams p;
    p.mesh_n = 16;
    p.traction_factor = factor;
    const Benchmark b = benchmark_catalog(BenchmarkId::Traction, p);
    const LoadFrame& fr = b.program.frames().back();
    const SafetyResult r = max_safety_margin(fr, b.mesh, b.yield_set);
    if (factor < 1.0) {
      const auto cert = verify_safe_load({r.pi}, {fr}, b.mesh, b.yield_set, 1e-10);
      o.require(r.margin > 0.0, "c* > 0 at 50%");
      o.require(cert.valid && std::abs(cert.margin - r.margin) <= 1e-10, "certificate re-verifies");
      o.detail << "50%: c*=" << format_double(r.margin) << " (residuals "
               << format_double(cert.equilibrium_residual) << ", "
               << format_double(cert.traction_residual) << "); ";
    } else {
      o.require(r.margin <= 0.0, "c* <= 0 at 150%");
      o.detail << "150%: c*=" << format_double(r.margin) << "; ";
    }
  }
  const double secs = seconds_since(t0);
  o.require(secs < 60.0, "runtime < 60 s");
  o.detail << secs << " s";
  return o;
}

// Airy stress function phi = sin(a x) sin(b y + c) + x^2 y, divergence free.
Sym2 airy_stress(Vec2 x) {
  const double a = 1.3, b = 0.7, c = 0.4;
  const double sxsy = std::sin(a * x[0]) * std::sin(b * x[1] + c);
  const double phi_xx = -a * a * sxsy + 2.0 * x[1];
  const double phi_yy = -b * b * sxsy;
  const double phi_xy = a * b * std::cos(a * x[0]) * std::cos(b * x[1] + c) + 2.0 * x[0];
  return Sym2({phi_yy, -phi_xy, phi_xx});
}

Sym2 smooth_plastic_strain(Vec2 x) {
  const double q1 = 0.3 * std::sin(2.0 * x[0]) * x[1];
  const double q2 = 0.2 * std::cos(x[1]) * x[0];
  return Sym2({q1, q2, -q1});
}

Vec2 smooth_displacement(Vec2 x) { return Vec2{{x[1] * (1.0 + x[0]), x[1] * x[1] * x[0]}}; }

double pairing_oracle() {
  // Composite Simpson on a 1000 x 1000 grid.
  const int n = 1000;
  const double h = 1.0 / n;
  auto w = [n](int i) { return i == 0 || i == n ? 1.0 : (i % 2 ? 4.0 : 2.0); };
  double s = 0.0;
  for (int i = 0; i <= n; ++i)
    for (int j = 0; j <= n; ++j) {
      const Vec2 x{{i * h, j * h}};
      s += w(i) * w(j) * double_dot(deviator(airy_stress(x)), smooth_plastic_strain(x));
    }
  return s * h * h / 9.0;
}

Outcome criterion10() {
  Outcome o;
  const double exact = pairing_oracle();
  std::vector<double> logh, logerr, errs;
  for (int n : {8, 16, 32, 64}) {
    const Mesh m = build_square_mesh(n, {Face::Bottom});
    const FieldP0 sigma = sample_p0(m, airy_stress);
    FEState s = FEState::zero(m);
    s.u = interpolate_p1(m, smooth_displacement);
    s.p = sample_p0(m, smooth_plastic_strain);
    const FieldP0 eu = strain_of(s.u, m);
    for (std::size_t c = 0; c < m.num_cells(); ++c) s.e[c] = eu[c] - s.p[c];
    std::vector<Vec2> g(m.boundary_edges.size());
    for (std::size_t e = 0; e < g.size(); ++e) {
      const auto& edge = m.boundary_edges[e];
      const Vec2 mid = (m.nodes[static_cast<std::size_t>(edge.nodes[0])] +
                        m.nodes[static_cast<std::size_t>(edge.nodes[1])]) *
                       0.5;
      g[e] = airy_stress(mid) * edge.normal;
    }
    const double v = duality_pairing(sigma, s, FieldP1(m.num_nodes()), m, {}, g);
    errs.push_back(std::abs(v - exact));
    logh.push_back(std::log(1.0 / n));
    logerr.push_back(std::log(std::abs(v - exact)));
  }
  const double order = ls_slope(logh, logerr);
  o.require(order >= 1.8, "observed order >= 1.8");

  // Mass bound on random admissible states: equilibrated stresses from
  // random eigenstrains, arbitrary admissible (u, e, p).
  Rng rng(1010);
  const Mesh m = build_square_mesh(5, FaceSet::all());
  const HookeTensor c(1.0, 1.5);
  double worst = -INFINITY;
  for (int trial = 0; trial < 100; ++trial) {
    FieldP0 q(m.num_cells());
    for (auto& x : q) x = rng.dev(0.3);
    const FieldP1 uq = solve_elastic(m, c, q, FieldP1(m.num_nodes()), {}, {});
    const FieldP0 euq = strain_of(uq, m);
    FieldP0 sig(m.num_cells());
    for (std::size_t k = 0; k < m.num_cells(); ++k) sig[k] = c.apply(euq[k] - q[k]);
    const double rate = rng.normal();
    const FieldP1 w = interpolate_p1(m, [&](Vec2 x) { return Vec2{{0.3 * rate * x[1], 0.0}}; });
    FEState s = FEState::zero(m);
    s.u = w;
    for (std::size_t i = 0; i < m.num_nodes(); ++i)
      if (!m.dirichlet_node[i]) s.u[i] = rng.vec(0.2);
    const FieldP0 eu = strain_of(s.u, m);
    for (std::size_t k = 0; k < m.num_cells(); ++k) {
      s.p[k] = rng.dev(0.5);
      s.e[k] = eu[k] - s.p[k];
    }
    const double v = duality_pairing(sig, s, w, m, {}, {});
    const double bound = max_dev_norm(sig) * plastic_mass(s.p, s.gap, m);
    worst = std::max(worst, std::abs(v) - bound * (1.0 + 1e-12));
  }
  o.require(worst <= 1e-14, "|<sigma_D, p>| <= ||sigma_D||_inf mass(p)");
  o.detail << "errors h=1/8..1/64: " << list(errs) << ", order " << format_double(order)
           << "; worst bound excess over 100 states " << format_double(worst);
  return o;
}

Outcome criterion11() {
  Outcome o;
  const fs::path src(RIGIDPLAST_SOURCE_DIR);
  const fs::path tmp = fs::temp_directory_path() / "rigidplast_acceptance";
  fs::remove_all(tmp);
  std::vector<fs::path> cfgs;
  for (const auto& e : fs::directory_iterator(src / "configs"))
    if (e.path().extension() == ".cfg") cfgs.push_back(e.path());
  std::sort(cfgs.begin(), cfgs.end());
  int compared = 0;
  for (const auto& path : cfgs) {
    RunConfig cfg = parse_config(read_text_file(path));
    cfg.threads = 1;
    const std::string stem = path.stem().string();
    run_command(cfg, tmp / (stem + "_a"));
    run_command(cfg, tmp / (stem + "_b"));
    for (const char* f : {"metrics.csv", "summary.json"}) {
      const bool same = read_text_file(tmp / (stem + "_a") / f) == read_text_file(tmp / (stem + "_b") / f);
      o.require(same, stem + "/" + f + " identical");
      ++compared;
    }
  }
  o.require(!cfgs.empty(), "configs present");
  o.detail << compared << " files byte-identical across " << cfgs.size() << " configs";
  fs::remove_all(tmp);
  return o;
}

}  // namespace

int main() {
  struct Entry {
    const char* name;
    Outcome (*run)();
  };
  const Entry entries[] = {
      {"return-map oracle equivalence", criterion1},
      {"0-D closed-form evolution", criterion2},
      {"energy balance consistency", criterion3},
      {"rigid-limit rate", criterion4},
      {"stress convergence witness", criterion5},
      {"limit flow rule", criterion6},
      {"rigid-motion non-uniqueness", criterion7},
      {"uniqueness on the plastic support", criterion8},
      {"safe-load certificate", criterion9},
      {"duality pairing", criterion10},
      {"determinism", criterion11},
  };
  int failed = 0;
  int index = 0;
  for (const auto& e : entries) {
    ++index;
    Outcome o;
    try {
      o = e.run();
    } catch (const std::exception& ex) {
      o.pass = false;
      o.detail << "exception: " << ex.what();
    }
    if (!o.pass) ++failed;
    std::printf("%s %2d %s: %s\n", o.pass ? "PASS" : "FAIL", index, e.name, o.detail.str().c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%d criteria passed\n", index - failed, index);
  return failed == 0 ? 0 : 1;
}
