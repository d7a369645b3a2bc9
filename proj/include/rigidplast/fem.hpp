#pragma once

// P1 displacement assembly, the elastic solve with frozen plastic strain and
// discrete equilibrium residuals.
//
// Degrees of freedom: node k carries (2k, 2k+1) = (u_x, u_y).

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <cmath>
#include <memory>
#include <vector>

#include "rigidplast/constitutive.hpp"
#include "rigidplast/error.hpp"
#include "rigidplast/mesh.hpp"

namespace rigidplast {

using DofVector = Eigen::VectorXd;

inline DofVector to_dofs(const FieldP1& u) {
  DofVector x(static_cast<Eigen::Index>(2 * u.size()));
  for (std::size_t i = 0; i < u.size(); ++i) {
    x[static_cast<Eigen::Index>(2 * i)] = u[i][0];
    x[static_cast<Eigen::Index>(2 * i + 1)] = u[i][1];
  }
  return x;
}

inline FieldP1 from_dofs(const DofVector& x) {
  FieldP1 u(static_cast<std::size_t>(x.size() / 2));
  for (std::size_t i = 0; i < u.size(); ++i)
    u[i] = Vec2{{x[static_cast<Eigen::Index>(2 * i)],
                 x[static_cast<Eigen::Index>(2 * i + 1)]}};
  return u;
}

/// Body load f (per cell, one-point rule) and tractions g (per Neumann edge,
/// constant along the edge) as a consistent nodal load vector. Entries for
/// Dirichlet edges are ignored.
inline DofVector assemble_load(const Mesh& mesh, const std::vector<Vec2>& body,
                               const std::vector<Vec2>& traction) {
  DofVector f = DofVector::Zero(static_cast<Eigen::Index>(2 * mesh.num_nodes()));
  if (!body.empty()) {
    if (body.size() != mesh.num_cells())
      throw MeshError("assemble_load: body load size does not match the mesh");
    for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
      const double w = mesh.areas[c] / 3.0;
      for (int v : mesh.triangles[c]) {
        f[2 * v] += w * body[c][0];
        f[2 * v + 1] += w * body[c][1];
      }
    }
  }
  if (!traction.empty()) {
    if (traction.size() != mesh.boundary_edges.size())
      throw MeshError("assemble_load: traction size does not match the mesh");
    for (std::size_t e = 0; e < mesh.boundary_edges.size(); ++e) {
      const auto& edge = mesh.boundary_edges[e];
      if (edge.kind != BoundaryKind::Neumann) continue;
      const double w = 0.5 * edge.length;
      for (int v : edge.nodes) {
        f[2 * v] += w * traction[e][0];
        f[2 * v + 1] += w * traction[e][1];
      }
    }
  }
  return f;
}

/// Correctly rounded sum of a list of doubles (Shewchuk partials).
inline double exact_sum(const std::vector<double>& values) {
  std::vector<double> partials;
  for (double x : values) {
    std::size_t i = 0;
    for (double y : partials) {
      if (std::abs(x) < std::abs(y)) std::swap(x, y);
      const double hi = x + y;
      const double lo = y - (hi - x);
      if (lo != 0.0) partials[i++] = lo;
      x = hi;
    }
    partials.resize(i);
    partials.push_back(x);
  }
  double hi = 0.0;
  std::size_t n = partials.size();
  if (n > 0) {
    hi = partials[--n];
    double lo = 0.0;
    while (n > 0) {
      const double x = hi;
      const double y = partials[--n];
      hi = x + y;
      lo = y - (hi - x);
      if (lo != 0.0) break;
    }
    if (n > 0 && ((lo < 0.0 && partials[n - 1] < 0.0) || (lo > 0.0 && partials[n - 1] > 0.0))) {
      const double y = lo * 2.0;
      const double x = hi + y;
      if (y == x - hi) hi = x;
    }
  }
  return hi;
}

/// Nodal forces  F_(a,i) = sum_T area_T (tau_T grad phi_a)_i, i.e. the
/// vector of integrals  int tau : E(phi_(a,i)).
inline DofVector internal_force(const Mesh& mesh, const FieldP0& tau) {
  if (tau.size() != mesh.num_cells())
    throw MeshError("internal_force: field size does not match the mesh");
  DofVector f = DofVector::Zero(static_cast<Eigen::Index>(2 * mesh.num_nodes()));
  for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
    const auto& t = mesh.triangles[c];
    for (int a = 0; a < 3; ++a) {
      const Vec2 r = tau[c] * mesh.gradients[c][a] * mesh.areas[c];
      f[2 * t[a]] += r[0];
      f[2 * t[a] + 1] += r[1];
    }
  }
  return f;
}

/// Full (unconstrained) stiffness matrix of  int C^eps E u : E v.
inline Eigen::SparseMatrix<double> assemble_stiffness(const Mesh& mesh,
                                                      const HookeTensor& hooke) {
  const double mu = 0.5 * hooke.deviatoric_stiffness();
  const double lambda = hooke.volumetric_stiffness() - mu;  // kb' - 2 mu' / 2
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(mesh.num_cells() * 36);
  for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
    const auto& t = mesh.triangles[c];
    const auto& g = mesh.gradients[c];
    const double area = mesh.areas[c];
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) {
        const double gg = dot(g[a], g[b]);
        for (int i = 0; i < 2; ++i)
          for (int j = 0; j < 2; ++j) {
            const double v = area * (mu * ((i == j ? gg : 0.0) + g[a][j] * g[b][i]) +
                                     lambda * g[a][i] * g[b][j]);
            trip.emplace_back(2 * t[a] + i, 2 * t[b] + j, v);
          }
      }
  }
  const auto n = static_cast<Eigen::Index>(2 * mesh.num_nodes());
  Eigen::SparseMatrix<double> k(n, n);
  k.setFromTriplets(trip.begin(), trip.end());
  return k;
}

/// Splits dofs into pinned (Dirichlet) and free ones.
class DofPartition {
 public:
  explicit DofPartition(const std::vector<bool>& pinned_node) {
    const std::size_t n = pinned_node.size();
    full_to_free_.assign(2 * n, -1);
    for (std::size_t v = 0; v < n; ++v)
      for (int i = 0; i < 2; ++i) {
        const auto d = static_cast<int>(2 * v) + i;
        if (pinned_node[v]) {
          pinned_.push_back(d);
        } else {
          full_to_free_[static_cast<std::size_t>(d)] = static_cast<int>(free_.size());
          free_.push_back(d);
        }
      }
  }

  const std::vector<int>& free_dofs() const { return free_; }
  const std::vector<int>& pinned_dofs() const { return pinned_; }
  int free_index(int dof) const { return full_to_free_[static_cast<std::size_t>(dof)]; }
  Eigen::Index num_free() const { return static_cast<Eigen::Index>(free_.size()); }

  DofVector restrict_free(const DofVector& x) const {
    DofVector r(num_free());
    for (Eigen::Index k = 0; k < num_free(); ++k) r[k] = x[free_[static_cast<std::size_t>(k)]];
    return r;
  }

  /// Rows and columns of the free block.
  Eigen::SparseMatrix<double> free_block(const Eigen::SparseMatrix<double>& a) const {
    std::vector<Eigen::Triplet<double>> trip;
    for (int col = 0; col < a.outerSize(); ++col)
      for (Eigen::SparseMatrix<double>::InnerIterator it(a, col); it; ++it) {
        const int r = free_index(static_cast<int>(it.row()));
        const int cc = free_index(static_cast<int>(it.col()));
        if (r >= 0 && cc >= 0) trip.emplace_back(r, cc, it.value());
      }
    Eigen::SparseMatrix<double> out(num_free(), num_free());
    out.setFromTriplets(trip.begin(), trip.end());
    return out;
  }

 private:
  std::vector<int> free_;
  std::vector<int> pinned_;
  std::vector<int> full_to_free_;
};

/// Factorized elastic problem  min 1/2 int C^eps(Eu - p):(Eu - p) - F.u
/// with the displacement pinned at a fixed node set. The factorization is
/// reused across solves; solves are deterministic (fixed AMD ordering,
/// sequential LDL^T).
class ElasticSolver {
 public:
  ElasticSolver(const Mesh& mesh, const HookeTensor& hooke,
                const std::vector<bool>& pinned_node)
      : mesh_(&mesh), hooke_(hooke), dofs_(pinned_node) {
    if (pinned_node.size() != mesh.num_nodes())
      throw MeshError("ElasticSolver: pinned mask size does not match the mesh");
    stiffness_ = assemble_stiffness(mesh, hooke);
    free_block_ = dofs_.free_block(stiffness_);
    if (dofs_.num_free() > 0) {
      ldlt_ = std::make_shared<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>>(free_block_);
      if (ldlt_->info() != Eigen::Success)
        throw InternalError("mesh_fem", "elastic stiffness factorization failed");
    }
  }

  /// Pins exactly the mesh's Dirichlet nodes.
  ElasticSolver(const Mesh& mesh, const HookeTensor& hooke)
      : ElasticSolver(mesh, hooke, mesh.dirichlet_node) {}

  const Mesh& mesh() const { return *mesh_; }
  const HookeTensor& hooke() const { return hooke_; }
  const DofPartition& partition() const { return dofs_; }
  const Eigen::SparseMatrix<double>& stiffness() const { return stiffness_; }

  /// Minimizer with pinned dofs taken from `pinned_values` and loads
  /// `load` (full dof vector); p is the frozen plastic strain.
  FieldP1 solve(const FieldP0& p, const FieldP1& pinned_values,
                const DofVector& load) const {
    const Mesh& mesh = *mesh_;
    if (pinned_values.size() != mesh.num_nodes())
      throw MeshError("ElasticSolver::solve: boundary field size mismatch");
    DofVector x = DofVector::Zero(static_cast<Eigen::Index>(2 * mesh.num_nodes()));
    for (int d : dofs_.pinned_dofs())
      x[d] = pinned_values[static_cast<std::size_t>(d / 2)][d % 2];
    if (dofs_.num_free() == 0) return from_dofs(x);

    FieldP0 cp(p.size());
    for (std::size_t c = 0; c < p.size(); ++c) cp[c] = hooke_.apply(p[c]);
    const DofVector rhs_full = load + internal_force(mesh, cp) - stiffness_ * x;
    const DofVector rhs = dofs_.restrict_free(rhs_full);

    DofVector y = ldlt_->solve(rhs);
    // One round of iterative refinement keeps the residual at roundoff.
    DofVector r = rhs - free_block_ * y;
    y += ldlt_->solve(r);
    r = rhs - free_block_ * y;
    const double scale = std::max(rhs.norm(), 1e-300);
    last_residual_ = rhs.norm() > 0.0 ? r.norm() / scale : r.norm();
    if (!std::isfinite(last_residual_) || last_residual_ > 1e-10)
      throw InternalError("mesh_fem", "elastic solve residual too large: " +
                                          std::to_string(last_residual_));
    for (Eigen::Index k = 0; k < dofs_.num_free(); ++k)
      x[dofs_.free_dofs()[static_cast<std::size_t>(k)]] = y[k];
    return from_dofs(x);
  }

  /// Relative residual of the last solve.
  double last_residual() const { return last_residual_; }

 private:
  const Mesh* mesh_;
  HookeTensor hooke_;
  DofPartition dofs_;
  Eigen::SparseMatrix<double> stiffness_;
  Eigen::SparseMatrix<double> free_block_;
  std::shared_ptr<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>> ldlt_;
  mutable double last_residual_ = 0.0;
};

/// One-shot elastic solve: u minimizing
///   1/2 int C^eps(Eu - p):(Eu - p) - int f.u - int_{Gamma_N} g.u
/// with u = w_D on the Dirichlet nodes.
inline FieldP1 solve_elastic(const Mesh& mesh, const HookeTensor& hooke,
                             const FieldP0& p, const FieldP1& w_dirichlet,
                             const std::vector<Vec2>& body,
                             const std::vector<Vec2>& traction) {
  for (const auto& x : p)
    if (!is_deviatoric(x))
      throw DomainError("solve_elastic: plastic strain must be deviatoric");
  const ElasticSolver solver(mesh, hooke);
  return solver.solve(p, w_dirichlet, assemble_load(mesh, body, traction));
}

struct EquilibriumResidual {
  /// H^{-1}-type dual norm of the weak residual on test fields vanishing
  /// on Gamma_D.
  double interior = 0.0;
  /// L2 norm over Gamma_N of sigma nu - g.
  double flux = 0.0;
};

/// Evaluates discrete equilibrium of piecewise-constant stresses. Holds a
/// factorized vector Laplacian on the free dofs for the dual norm.
class EquilibriumChecker {
 public:
  explicit EquilibriumChecker(const Mesh& mesh)
      : mesh_(&mesh), dofs_(mesh.dirichlet_node) {
    if (dofs_.num_free() == 0) return;
    std::vector<Eigen::Triplet<double>> trip;
    for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
      const auto& t = mesh.triangles[c];
      const auto& g = mesh.gradients[c];
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) {
          const double v = mesh.areas[c] * dot(g[a], g[b]);
          for (int i = 0; i < 2; ++i) {
            const int r = dofs_.free_index(2 * t[a] + i);
            const int cc = dofs_.free_index(2 * t[b] + i);
            if (r >= 0 && cc >= 0) trip.emplace_back(r, cc, v);
          }
        }
    }
    Eigen::SparseMatrix<double> lap(dofs_.num_free(), dofs_.num_free());
    lap.setFromTriplets(trip.begin(), trip.end());
    ldlt_ = std::make_shared<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>>(lap);
    if (ldlt_->info() != Eigen::Success)
      throw InternalError("mesh_fem", "Laplacian factorization failed");
  }

  /// Weak residual  int sigma : E phi - F(phi)  on every dof (reactions on
  /// Dirichlet dofs included).
  /// Every product term is summed with exact rounding, so stresses whose
  /// exact residual vanishes give exactly zero on dyadic meshes.
  DofVector weak_residual(const FieldP0& sigma, const std::vector<Vec2>& body,
                          const std::vector<Vec2>& traction) const {
    const Mesh& mesh = *mesh_;
    if (sigma.size() != mesh.num_cells())
      throw MeshError("weak_residual: field size does not match the mesh");
    std::vector<std::vector<double>> terms(2 * mesh.num_nodes());
    for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
      const auto& t = mesh.triangles[c];
      for (int a = 0; a < 3; ++a) {
        const Vec2& g = mesh.gradients[c][a];
        for (int i = 0; i < 2; ++i)
          for (int j = 0; j < 2; ++j)
            terms[static_cast<std::size_t>(2 * t[a] + i)].push_back(sigma[c](i, j) * g[j] *
                                                                    mesh.areas[c]);
      }
    }
    const DofVector load = assemble_load(mesh, body, traction);
    DofVector r(load.size());
    for (Eigen::Index d = 0; d < load.size(); ++d) {
      auto& v = terms[static_cast<std::size_t>(d)];
      v.push_back(-load[d]);
      r[d] = exact_sum(v);
    }
    return r;
  }

  EquilibriumResidual check(const FieldP0& sigma, const std::vector<Vec2>& body,
                            const std::vector<Vec2>& traction) const {
    const Mesh& mesh = *mesh_;
    EquilibriumResidual out;
    if (dofs_.num_free() > 0) {
      const DofVector r = dofs_.restrict_free(weak_residual(sigma, body, traction));
      const DofVector z = ldlt_->solve(r);
      out.interior = std::sqrt(std::max(0.0, r.dot(z)));
    }
    double flux2 = 0.0;
    for (std::size_t e = 0; e < mesh.boundary_edges.size(); ++e) {
      const auto& edge = mesh.boundary_edges[e];
      if (edge.kind != BoundaryKind::Neumann) continue;
      const std::size_t c = static_cast<std::size_t>(mesh.boundary_edge_cell[e]);
      Vec2 jump = sigma[c] * edge.normal;
      if (!traction.empty()) jump -= traction[e];
      flux2 += edge.length * dot(jump, jump);
    }
    out.flux = std::sqrt(flux2);
    return out;
  }

  const DofPartition& partition() const { return dofs_; }

 private:
  const Mesh* mesh_;
  DofPartition dofs_;
  std::shared_ptr<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>> ldlt_;
};

/// Interior and flux residuals of div sigma + f = 0, sigma nu = g on Gamma_N.
inline EquilibriumResidual divergence_check(const FieldP0& sigma, const Mesh& mesh,
                                            const std::vector<Vec2>& body,
                                            const std::vector<Vec2>& traction) {
  return EquilibriumChecker(mesh).check(sigma, body, traction);
}

}  // namespace rigidplast
