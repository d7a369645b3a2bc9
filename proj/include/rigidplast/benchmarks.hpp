#pragma once

// Benchmark catalog (SHEAR, TRACTION, RIGID41) and the non-uniqueness
// family of piecewise-constant stresses paired with a rigid velocity.

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "rigidplast/constitutive.hpp"
#include "rigidplast/error.hpp"
#include "rigidplast/fem.hpp"
#include "rigidplast/load_program.hpp"
#include "rigidplast/mesh.hpp"

namespace rigidplast {

enum class BenchmarkId { Shear, Traction, Rigid41 };

inline std::string benchmark_name(BenchmarkId id) {
  switch (id) {
    case BenchmarkId::Shear: return "SHEAR";
    case BenchmarkId::Traction: return "TRACTION";
    case BenchmarkId::Rigid41: return "RIGID41";
  }
  return "?";
}

inline BenchmarkId parse_benchmark(const std::string& name) {
  if (name == "SHEAR") return BenchmarkId::Shear;
  if (name == "TRACTION") return BenchmarkId::Traction;
  if (name == "RIGID41") return BenchmarkId::Rigid41;
  throw ExampleError("unknown benchmark id '" + name + "'");
}

enum class TimeGrid { Uniform, Geometric };

using Mat2 = std::array<std::array<double, 2>, 2>;

inline Vec2 mat_vec(const Mat2& a, const Vec2& x) {
  return Vec2{{a[0][0] * x[0] + a[0][1] * x[1], a[1][0] * x[0] + a[1][1] * x[1]}};
}

inline Mat2 skew(double a) { return Mat2{{{0.0, a}, {-a, 0.0}}}; }

struct BenchmarkParams {
  int mesh_n = 16;
  int time_steps = 32;
  double horizon = 1.0;
  TimeGrid grid = TimeGrid::Uniform;
  /// First step of the geometric grid; <= 0 selects 1e-5 * horizon.
  double grid_first = 0.0;
  double mu = 1.0;
  double bulk_modulus = 1.0;
  double kappa = 1.0;
  /// SHEAR: w(t, x) = t * shear_rate * (x2, 0).
  double shear_rate = 2.0;
  /// TRACTION: shear traction ramps to traction_factor * kappa / sqrt 2.
  double traction_factor = 0.9;
  /// RIGID41: w(t, x) = t (A x + b).
  Mat2 rigid_a = skew(1.0);
  Vec2 rigid_b;
};

struct Benchmark {
  BenchmarkId id = BenchmarkId::Shear;
  Mesh mesh;
  LoadProgram program;
  HookeTensor hooke{1.0, 1.0};
  YieldSet yield_set{1.0};
};

inline std::vector<double> make_time_grid(const BenchmarkParams& p) {
  if (p.grid == TimeGrid::Uniform) return uniform_grid(p.horizon, p.time_steps);
  const double first = p.grid_first > 0.0 ? p.grid_first : 1e-5 * p.horizon;
  return geometric_grid(p.horizon, p.time_steps, first);
}

/// Tractions of the constant stress [[0, s], [s, 0]] on the Neumann edges.
inline std::vector<Vec2> shear_tractions(const Mesh& mesh, double s) {
  const Sym2 g({0.0, s, 0.0});
  std::vector<Vec2> out(mesh.boundary_edges.size());
  for (std::size_t e = 0; e < out.size(); ++e)
    if (mesh.boundary_edges[e].kind == BoundaryKind::Neumann)
      out[e] = g * mesh.boundary_edges[e].normal;
  return out;
}

/// Shear-stress amplitude of TRACTION at which the constant stress field
/// reaches the yield surface.
inline double traction_limit(double kappa) { return kappa / std::sqrt(2.0); }

inline Benchmark benchmark_catalog(BenchmarkId id, const BenchmarkParams& p) {
  Benchmark b;
  b.id = id;
  b.hooke = HookeTensor(p.mu, p.bulk_modulus);
  b.yield_set = YieldSet(p.kappa);
  const std::vector<double> times = make_time_grid(p);
  switch (id) {
    case BenchmarkId::Shear: {
      b.mesh = build_square_mesh(p.mesh_n, FaceSet::all());
      const Mesh& m = b.mesh;
      const double rate = p.shear_rate;
      b.program = LoadProgram::sample(times, [&](double t) {
        return LoadFrame{interpolate_p1(m, [&](Vec2 x) { return Vec2{{t * rate * x[1], 0.0}}; }),
                         {}, {}};
      });
      break;
    }
    case BenchmarkId::Traction: {
      b.mesh = build_square_mesh(p.mesh_n, {Face::Bottom});
      const Mesh& m = b.mesh;
      const double smax = p.traction_factor * traction_limit(p.kappa);
      const double horizon = p.horizon;
      b.program = LoadProgram::sample(times, [&](double t) {
        return LoadFrame{FieldP1(m.num_nodes()), {}, shear_tractions(m, smax * t / horizon)};
      });
      break;
    }
    case BenchmarkId::Rigid41: {
      const Mat2& a = p.rigid_a;
      if (a[0][1] != -a[1][0] || a[0][0] != 0.0 || a[1][1] != 0.0)
        throw ExampleError("RIGID41: the matrix A must be skew-symmetric");
      b.mesh = build_square_mesh(p.mesh_n, FaceSet::all());
      const Mesh& m = b.mesh;
      const Vec2 shift = p.rigid_b;
      b.program = LoadProgram::sample(times, [&](double t) {
        return LoadFrame{interpolate_p1(m, [&](Vec2 x) { return (mat_vec(a, x) + shift) * t; }),
                         {}, {}};
      });
      break;
    }
  }
  b.program.validate(b.mesh);
  return b;
}

/// Step function on [0, 1] with interior breakpoints; values.size() must be
/// breakpoints.size() + 1.
class PiecewiseConstant {
 public:
  PiecewiseConstant(double value = 0.0) : values_{value} {}  // NOLINT implicit
  PiecewiseConstant(std::vector<double> breakpoints, std::vector<double> values)
      : breaks_(std::move(breakpoints)), values_(std::move(values)) {
    if (values_.size() != breaks_.size() + 1)
      throw ExampleError("piecewise constant: need one more value than breakpoints");
    for (std::size_t i = 0; i < breaks_.size(); ++i) {
      if (!(breaks_[i] > 0.0 && breaks_[i] < 1.0))
        throw ExampleError("piecewise constant: breakpoints must lie in (0, 1)");
      if (i > 0 && !(breaks_[i] > breaks_[i - 1]))
        throw ExampleError("piecewise constant: breakpoints must increase");
    }
  }

  double operator()(double x) const {
    std::size_t k = 0;
    while (k < breaks_.size() && x >= breaks_[k]) ++k;
    return values_[k];
  }

  double sup_norm() const {
    double m = 0.0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
  }

  /// Every breakpoint is a multiple of 1/n.
  bool aligned_with(int n) const {
    for (double b : breaks_) {
      const double s = b * n;
      if (std::abs(s - std::round(s)) > 1e-12 * n) return false;
    }
    return true;
  }

  const std::vector<double>& breakpoints() const { return breaks_; }
  const std::vector<double>& values() const { return values_; }

 private:
  std::vector<double> breaks_;
  std::vector<double> values_;
};

/// Stress family lambda * [[f(x2), c], [c, g(x1)]] with rigid velocity
/// v(x) = A x + b.
struct Example41Params {
  double c = 0.2;
  PiecewiseConstant f;
  PiecewiseConstant g;
  Mat2 a = skew(1.0);
  Vec2 b;
  double lambda = 1.0;
};

/// Throws ExampleError unless the parameters satisfy the smallness bound
/// (scaled by kappa), |lambda| <= 2 and skew-symmetry of A.
inline void validate_example41(const Example41Params& p, double kappa) {
  const double size = std::sqrt(2.0 * p.c * p.c + p.f.sup_norm() * p.f.sup_norm() +
                                p.g.sup_norm() * p.g.sup_norm());
  if (!(size < 0.5 * kappa))
    throw ExampleError("example parameters violate sqrt(2c^2 + |f|^2 + |g|^2) < kappa/2 (got " +
                       std::to_string(size) + ")");
  if (!(std::abs(p.lambda) <= 2.0))
    throw ExampleError("example parameter |lambda| must be <= 2 (got " +
                       std::to_string(p.lambda) + ")");
  if (p.a[0][0] != 0.0 || p.a[1][1] != 0.0 || p.a[0][1] != -p.a[1][0])
    throw ExampleError("example matrix A must be skew-symmetric");
}

inline FieldP0 example41_stress(const Example41Params& p, const Mesh& mesh, double kappa = 1.0) {
  validate_example41(p, kappa);
  const int n = mesh.cells_per_side;
  if (n < 1 || !p.f.aligned_with(n) || !p.g.aligned_with(n))
    throw ExampleError("example breakpoints must lie on mesh lines");
  return sample_p0(mesh, [&](Vec2 x) {
    return Sym2({p.lambda * p.f(x[1]), p.lambda * p.c, p.lambda * p.g(x[0])});
  });
}

struct Example41Entry {
  double lambda = 0.0;
  double equilibrium_residual = 0.0;
  double max_sigma_dev = 0.0;
  double flow_gap = 0.0;  // sum area (kappa |Ev| - sigma_D : Ev)
};

struct NonUniquenessWitness {
  std::vector<Example41Entry> entries;
  double strain_rate_max = 0.0;  // max |Ev|
  double div_v_max = 0.0;
  double stress_gap = 0.0;  // L2 distance between the first two stresses
  bool witness = false;
};

/// Checks that each sigma^lambda together with v = A x + b solves the rigid
/// plastic system on the all-Dirichlet square, and that the stresses differ.
inline NonUniquenessWitness example41_verify(const Example41Params& base,
                                             const std::vector<double>& lambdas,
                                             const Mesh& mesh, const YieldSet& k) {
  if (lambdas.size() < 2) throw ExampleError("need at least two lambda values");
  for (std::size_t i = 0; i < lambdas.size(); ++i)
    for (std::size_t j = i + 1; j < lambdas.size(); ++j)
      if (lambdas[i] == lambdas[j]) throw ExampleError("lambda values must be distinct");
  if (!(mesh.dirichlet_faces == FaceSet::all()))
    throw ExampleError("the example is posed with Dirichlet data on the whole boundary");

  NonUniquenessWitness out;
  const FieldP1 v = interpolate_p1(mesh, [&](Vec2 x) { return mat_vec(base.a, x) + base.b; });
  const FieldP0 ev = strain_of(v, mesh);
  out.strain_rate_max = max_norm(ev);
  for (double d : divergence_of(v, mesh)) out.div_v_max = std::max(out.div_v_max, std::abs(d));
  const double vscale = 1.0 + std::abs(base.a[0][1]) + norm(base.b);
  if (out.strain_rate_max > 1e-14 * vscale || out.div_v_max > 1e-14 * vscale)
    throw ExampleError("velocity is not a rigid motion on this mesh");

  const EquilibriumChecker checker(mesh);
  std::vector<FieldP0> stresses;
  for (double lambda : lambdas) {
    Example41Params p = base;
    p.lambda = lambda;
    const FieldP0 sigma = example41_stress(p, mesh, k.radius());
    Example41Entry e;
    e.lambda = lambda;
    e.equilibrium_residual = checker.check(sigma, {}, {}).interior;
    e.max_sigma_dev = max_dev_norm(sigma);
    for (std::size_t c = 0; c < mesh.num_cells(); ++c)
      e.flow_gap += mesh.areas[c] *
                    (k.radius() * norm(ev[c]) - double_dot(deviator(sigma[c]), ev[c]));
    if (e.equilibrium_residual > 1e-14)
      throw ExampleError("stress is not discretely equilibrated (residual " +
                         std::to_string(e.equilibrium_residual) + ")");
    if (!(e.max_sigma_dev < k.radius()))
      throw ExampleError("stress is not strictly admissible");
    if (std::abs(e.flow_gap) > 1e-14)
      throw ExampleError("flow rule violated");
    out.entries.push_back(e);
    stresses.push_back(sigma);
  }
  out.stress_gap = l2_norm(stresses[0] - stresses[1], mesh);
  if (!(out.stress_gap > 0.0))
    throw ExampleError("stresses coincide; choose non-trivial c, f or g");
  out.witness = true;
  return out;
}

}  // namespace rigidplast
