#pragma once

// Safe-load fields: statically admissible stresses with a uniform margin
// inside the yield set, their a-posteriori verification, and a
// lower-bound limit-analysis optimizer for the margin.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "rigidplast/constitutive.hpp"
#include "rigidplast/error.hpp"
#include "rigidplast/fem.hpp"
#include "rigidplast/load_program.hpp"
#include "rigidplast/mesh.hpp"

namespace rigidplast {

struct SafeLoadCertificate {
  std::vector<FieldP0> pi;  // one field per time grid point
  /// kappa - max_{t, cells} |pi_D|; negative when pi leaves the yield set.
  double margin = 0.0;
  double equilibrium_residual = 0.0;  // max over times, interior part
  double traction_residual = 0.0;     // max over times, flux part
  double tolerance = 0.0;
  bool valid = false;
};

/// Checks equilibrium of every pi[k] against loads[k] and computes the
/// uniform margin. Invalidity is reported, not thrown.
inline SafeLoadCertificate verify_safe_load(const std::vector<FieldP0>& pi,
                                            const std::vector<LoadFrame>& loads, const Mesh& mesh,
                                            const YieldSet& k, double tol = 1e-10) {
  if (pi.size() != loads.size())
    throw DomainError("verify_safe_load: one stress field per load frame is required");
  SafeLoadCertificate cert;
  cert.pi = pi;
  cert.tolerance = tol;
  double max_dev = 0.0;
  const EquilibriumChecker checker(mesh);
  for (std::size_t t = 0; t < pi.size(); ++t) {
    if (pi[t].size() != mesh.num_cells())
      throw DomainError("verify_safe_load: stress field does not match the mesh");
    max_dev = std::max(max_dev, max_dev_norm(pi[t]));
    const auto r = checker.check(pi[t], loads[t].body, loads[t].traction);
    cert.equilibrium_residual = std::max(cert.equilibrium_residual, r.interior);
    cert.traction_residual = std::max(cert.traction_residual, r.flux);
  }
  cert.margin = k.radius() - max_dev;
  cert.valid = cert.margin > 0.0 && cert.equilibrium_residual <= tol && cert.traction_residual <= tol;
  return cert;
}

struct SafetyOptions {
  int iters = 2000;
  /// Primal step in stress units; <= 0 selects kappa.
  double primal_step = 0.0;
  int power_iters = 50;
};

struct SafetyResult {
  double margin = 0.0;  // c*, a lower bound certified by verify_safe_load
  FieldP0 pi;           // best iterate
  int best_iteration = 0;
  /// max |pi_D| of every iterate (bounded sequence).
  std::vector<double> objective;
  /// Fixed-point residual of the primal-dual iteration in its metric
  /// norm; non-increasing for step sizes with tau * sigma * |K|^2 < 1.
  std::vector<double> fixed_point_residual;
  double operator_norm = 0.0;          // power-iteration estimate of |K|
  double equilibrium_mismatch = 0.0;   // |A pi - b| of the affine projection
  bool equilibrium_feasible = false;
  std::string diagnostics;
};

namespace detail {

// Stress unknowns per cell in orthonormal coordinates (s11, sqrt2 s12, s22),
// so the Euclidean product equals the Frobenius product.
inline constexpr double kSqrt2 = 1.4142135623730951;

inline Eigen::VectorXd pack(const FieldP0& f) {
  Eigen::VectorXd y(3 * static_cast<Eigen::Index>(f.size()));
  for (std::size_t c = 0; c < f.size(); ++c) {
    const auto i = 3 * static_cast<Eigen::Index>(c);
    y[i] = f[c](0, 0);
    y[i + 1] = kSqrt2 * f[c](0, 1);
    y[i + 2] = f[c](1, 1);
  }
  return y;
}

inline FieldP0 unpack(const Eigen::VectorXd& y) {
  FieldP0 f(static_cast<std::size_t>(y.size() / 3));
  for (std::size_t c = 0; c < f.size(); ++c) {
    const auto i = 3 * static_cast<Eigen::Index>(c);
    f[c] = Sym2({y[i], y[i + 1] / kSqrt2, y[i + 2]});
  }
  return f;
}

/// Deviatoric projection, applied cellwise (self-adjoint).
inline Eigen::VectorXd dev_apply(const Eigen::VectorXd& y) {
  Eigen::VectorXd out = y;
  for (Eigen::Index i = 0; i < y.size(); i += 3) {
    const double m = 0.5 * (y[i] + y[i + 2]);
    out[i] -= m;
    out[i + 2] -= m;
  }
  return out;
}

/// Projection onto { z : sum_c |z_c| <= 1 } for cellwise 3-vectors.
inline void project_l1_of_norms(Eigen::VectorXd& z) {
  const auto cells = static_cast<std::size_t>(z.size() / 3);
  std::vector<double> r(cells);
  for (std::size_t c = 0; c < cells; ++c) r[c] = z.segment<3>(3 * static_cast<Eigen::Index>(c)).norm();
  if (std::accumulate(r.begin(), r.end(), 0.0) <= 1.0) return;
  std::vector<double> s = r;
  std::sort(s.begin(), s.end(), std::greater<>());
  double cum = 0.0, theta = 0.0;
  for (std::size_t j = 0; j < s.size(); ++j) {
    cum += s[j];
    const double t = (cum - 1.0) / static_cast<double>(j + 1);
    if (j + 1 == s.size() || s[j + 1] <= t) {
      theta = t;
      break;
    }
  }
  for (std::size_t c = 0; c < cells; ++c) {
    const double scale = r[c] > theta ? (r[c] - theta) / r[c] : 0.0;
    z.segment<3>(3 * static_cast<Eigen::Index>(c)) *= scale;
  }
}

/// Exact projection onto { y : A y = b } via the pseudo-inverse of A A^T.
class AffineProjector {
 public:
  AffineProjector(const Eigen::SparseMatrix<double>& a, const Eigen::VectorXd& b) : a_(a), b_(b) {
    const Eigen::MatrixXd gram = Eigen::MatrixXd(a_ * a_.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
    if (eig.info() != Eigen::Success) throw InternalError("safeload", "eigensolver failed");
    const double cut = 1e-12 * std::max(1.0, eig.eigenvalues().cwiseAbs().maxCoeff());
    vecs_ = eig.eigenvectors();
    inv_ = eig.eigenvalues().unaryExpr([cut](double l) { return l > cut ? 1.0 / l : 0.0; });
  }

  Eigen::VectorXd project(const Eigen::VectorXd& y) const {
    Eigen::VectorXd x = y;
    for (int round = 0; round < 2; ++round) {
      const Eigen::VectorXd r = a_ * x - b_;
      const Eigen::VectorXd lam = vecs_ * (inv_.asDiagonal() * (vecs_.transpose() * r));
      x -= a_.transpose() * lam;
    }
    return x;
  }

  double mismatch(const Eigen::VectorXd& y) const { return (a_ * y - b_).norm(); }

 private:
  Eigen::SparseMatrix<double> a_;
  Eigen::VectorXd b_;
  Eigen::MatrixXd vecs_;
  Eigen::VectorXd inv_;
};

/// Rows: weak equilibrium on the free dofs, then sigma nu = g on every
/// Neumann edge (both components).
inline void equilibrium_system(const Mesh& mesh, const LoadFrame& load,
                               Eigen::SparseMatrix<double>& a, Eigen::VectorXd& b) {
  const DofPartition dofs(mesh.dirichlet_node);
  const DofVector f = dofs.restrict_free(assemble_load(mesh, load.body, load.traction));
  std::vector<Eigen::Triplet<double>> trip;
  // Row for component i of a vector v contracted with the stress:
  // (sigma v)_0 = y0 v0 + y1/sqrt2 v1,  (sigma v)_1 = y1/sqrt2 v0 + y2 v1.
  auto add_row = [&](int row, std::size_t cell, int comp, const Vec2& v, double w) {
    const int base = 3 * static_cast<int>(cell);
    if (comp == 0) {
      trip.emplace_back(row, base, w * v[0]);
      trip.emplace_back(row, base + 1, w * v[1] / kSqrt2);
    } else {
      trip.emplace_back(row, base + 1, w * v[0] / kSqrt2);
      trip.emplace_back(row, base + 2, w * v[1]);
    }
  };
  for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
    const auto& t = mesh.triangles[c];
    for (int a_loc = 0; a_loc < 3; ++a_loc)
      for (int comp = 0; comp < 2; ++comp) {
        const int row = dofs.free_index(2 * t[a_loc] + comp);
        if (row >= 0) add_row(row, c, comp, mesh.gradients[c][a_loc], mesh.areas[c]);
      }
  }
  int row = dofs.num_free();
  std::vector<double> rhs(f.data(), f.data() + f.size());
  for (std::size_t e = 0; e < mesh.boundary_edges.size(); ++e) {
    const auto& edge = mesh.boundary_edges[e];
    if (edge.kind != BoundaryKind::Neumann) continue;
    const auto c = static_cast<std::size_t>(mesh.boundary_edge_cell[e]);
    const Vec2 g = load.traction.empty() ? Vec2{} : load.traction[e];
    for (int comp = 0; comp < 2; ++comp) {
      add_row(row++, c, comp, edge.normal, 1.0);
      rhs.push_back(g[comp]);
    }
  }
  a.resize(row, 3 * static_cast<Eigen::Index>(mesh.num_cells()));
  a.setFromTriplets(trip.begin(), trip.end());
  b = Eigen::Map<const Eigen::VectorXd>(rhs.data(), static_cast<Eigen::Index>(rhs.size()));
}

}  // namespace detail

/// Maximizes c subject to discrete equilibrium with the loads and
/// |pi_D| <= kappa - c cellwise, i.e. minimizes max_cells |pi_D| over the
/// equilibrated stresses. Primal-dual (Chambolle-Pock) iteration with an
/// exact projection onto the equilibrium constraint as the primal prox and
/// a projection onto the dual of the max-norm as the dual prox. Returns
/// the best iterate; every iterate is equilibrated up to roundoff.
inline SafetyResult max_safety_margin(const LoadFrame& loads, const Mesh& mesh, const YieldSet& k,
                                      const SafetyOptions& opt = {}) {
  if (opt.iters < 1) throw DomainError("max_safety_margin: iters must be >= 1");
  const double kappa = k.radius();
  SafetyResult res;
  Eigen::SparseMatrix<double> a;
  Eigen::VectorXd b;
  detail::equilibrium_system(mesh, loads, a, b);
  const detail::AffineProjector proj(a, b);

  // Power iteration for |K|, K = cellwise deviatoric projection.
  Eigen::VectorXd q = Eigen::VectorXd::Ones(3 * static_cast<Eigen::Index>(mesh.num_cells()));
  for (Eigen::Index i = 0; i < q.size(); i += 3) q[i] = -1.0;  // start off the kernel of K
  q.normalize();
  double knorm = 0.0;
  for (int it = 0; it < opt.power_iters; ++it) {
    const Eigen::VectorXd kq = detail::dev_apply(detail::dev_apply(q));
    knorm = std::sqrt(kq.norm());
    if (kq.norm() == 0.0) break;
    q = kq / kq.norm();
  }
  res.operator_norm = knorm;
  const double knorm_safe = std::max(knorm, 1e-12);
  const double tau = opt.primal_step > 0.0 ? opt.primal_step : kappa;
  const double sigma = 0.99 / (tau * knorm_safe * knorm_safe);

  Eigen::VectorXd x = proj.project(Eigen::VectorXd::Zero(a.cols()));
  res.equilibrium_mismatch = proj.mismatch(x);
  const double bscale = std::max(1.0, b.lpNorm<Eigen::Infinity>());
  res.equilibrium_feasible = res.equilibrium_mismatch <= 1e-9 * bscale;
  auto objective = [](const Eigen::VectorXd& y) {
    double m = 0.0;
    const Eigen::VectorXd d = detail::dev_apply(y);
    for (Eigen::Index i = 0; i < d.size(); i += 3) m = std::max(m, d.segment<3>(i).norm());
    return m;
  };
  double best = objective(x);
  Eigen::VectorXd best_x = x;
  if (!res.equilibrium_feasible) {
    res.margin = std::min(0.0, kappa - best);
    res.pi = detail::unpack(x);
    res.diagnostics = "loads admit no equilibrated stress (mismatch " +
                      std::to_string(res.equilibrium_mismatch) + ")";
    return res;
  }

  Eigen::VectorXd z = Eigen::VectorXd::Zero(a.cols());
  Eigen::VectorXd xbar = x;
  res.objective.reserve(static_cast<std::size_t>(opt.iters));
  res.fixed_point_residual.reserve(static_cast<std::size_t>(opt.iters));
  for (int it = 1; it <= opt.iters; ++it) {
    Eigen::VectorXd z_new = z + sigma * detail::dev_apply(xbar);
    detail::project_l1_of_norms(z_new);
    const Eigen::VectorXd x_new = proj.project(x - tau * detail::dev_apply(z_new));
    const Eigen::VectorXd dx = x_new - x;
    const Eigen::VectorXd dz = z_new - z;
    const double m2 = dx.squaredNorm() / tau + dz.squaredNorm() / sigma -
                      2.0 * detail::dev_apply(dx).dot(dz);
    res.fixed_point_residual.push_back(std::sqrt(std::max(0.0, m2)));
    xbar = 2.0 * x_new - x;
    x = x_new;
    z = z_new;
    const double obj = objective(x);
    res.objective.push_back(obj);
    if (obj < best) {
      best = obj;
      best_x = x;
      res.best_iteration = it;
    }
  }
  res.pi = detail::unpack(best_x);
  // Report the margin exactly as verify_safe_load computes it.
  res.margin = kappa - max_dev_norm(res.pi);
  if (res.margin <= 0.0) res.diagnostics = "no stress inside the yield set was found";
  return res;
}

/// Certificate for a whole load program: one optimization per grid time,
/// verified jointly. The margin is the minimum over grid times.
inline SafeLoadCertificate certify_program(const LoadProgram& program, const Mesh& mesh,
                                           const YieldSet& k, const SafetyOptions& opt = {},
                                           double tol = 1e-10) {
  std::vector<FieldP0> pis;
  for (const auto& fr : program.frames()) pis.push_back(max_safety_margin(fr, mesh, k, opt).pi);
  return verify_safe_load(pis, program.frames(), mesh, k, tol);
}

}  // namespace rigidplast
