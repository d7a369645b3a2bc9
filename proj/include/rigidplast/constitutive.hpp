#pragma once

// Isotropic Hooke law with stiffness scaling, the von Mises yield set and the
// cellwise incremental (radial return) update. Everything here is a pure
// function of value types.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "rigidplast/error.hpp"
#include "rigidplast/sym_tensor.hpp"

namespace rigidplast {

/// C^eps xi = (2 mu dev xi + kb (tr xi) I) / eps.
class HookeTensor {
 public:
  HookeTensor(double shear_modulus, double bulk_modulus, double epsilon = 1.0)
      : mu_(shear_modulus), kb_(bulk_modulus), eps_(epsilon) {
    if (!(mu_ > 0.0) || !(kb_ > 0.0) || !(eps_ > 0.0))
      throw DomainError("HookeTensor: moduli and epsilon must be positive");
  }

  double shear_modulus() const { return mu_; }
  double bulk_modulus() const { return kb_; }
  double epsilon() const { return eps_; }

  /// Same base law with a different stiffness scaling.
  HookeTensor with_epsilon(double epsilon) const {
    return HookeTensor(mu_, kb_, epsilon);
  }

  /// 2 mu / eps, the stiffness seen by deviatoric strains.
  double deviatoric_stiffness() const { return 2.0 * mu_ / eps_; }
  /// kb / eps, multiplying (tr xi) I.
  double volumetric_stiffness() const { return kb_ / eps_; }

  template <int Dim>
  SymTensor<Dim> apply(const SymTensor<Dim>& xi) const {
    SymTensor<Dim> out = deviator(xi) * deviatoric_stiffness();
    const double vol = volumetric_stiffness() * trace(xi);
    for (int i = 0; i < Dim; ++i) out(i, i) += vol;
    return out;
  }

  /// Coercivity constant: alpha |xi|^2 <= C xi : xi.
  template <int Dim>
  double alpha() const {
    return std::min(2.0 * mu_, Dim * kb_) / eps_;
  }
  /// Growth constant: C xi : xi <= beta |xi|^2.
  template <int Dim>
  double beta() const {
    return std::max(2.0 * mu_, Dim * kb_) / eps_;
  }

  /// (1/2) C e : e.
  template <int Dim>
  double energy_density(const SymTensor<Dim>& e) const {
    return 0.5 * double_dot(apply(e), e);
  }

 private:
  double mu_;
  double kb_;
  double eps_;
};

/// Admissible deviatoric stresses K. Only the von Mises ball
/// {tau deviatoric : |tau| <= radius} is implemented; all access to K goes
/// through this type.
class YieldSet {
 public:
  enum class Kind { VonMisesBall };

  explicit YieldSet(double radius, Kind kind = Kind::VonMisesBall)
      : kind_(kind), radius_(radius) {
    if (!(radius_ > 0.0))
      throw DomainError("YieldSet: radius must be positive");
  }

  Kind kind() const { return kind_; }
  double radius() const { return radius_; }
  /// c_* with B(0, c_*) inside K.
  double inner_radius() const { return radius_; }
  /// c^* with K inside B(0, c^*).
  double outer_radius() const { return radius_; }

  template <int Dim>
  bool contains(const SymTensor<Dim>& tau, double slack = 0.0) const {
    return is_deviatoric(tau) && norm(tau) <= radius_ * (1.0 + slack);
  }

 private:
  Kind kind_;
  double radius_;
};

namespace detail {
template <int Dim>
void require_deviatoric(const SymTensor<Dim>& a, const char* who) {
  if (!is_deviatoric(a))
    throw DomainError(std::string(who) + ": argument is not deviatoric (tr = " +
                      std::to_string(trace(a)) + ")");
}
}  // namespace detail

/// H(p) = sup_{tau in K} tau : p. Undefined (+inf) off the deviatoric
/// subspace, which is reported as a DomainError.
template <int Dim>
double support_H(const SymTensor<Dim>& p, const YieldSet& k) {
  detail::require_deviatoric(p, "support_H");
  return k.radius() * norm(p);
}

/// Euclidean projection onto K.
template <int Dim>
SymTensor<Dim> project_K(const SymTensor<Dim>& tau, const YieldSet& k) {
  detail::require_deviatoric(tau, "project_K");
  const double n = norm(tau);
  if (n <= k.radius()) return tau;
  return tau * (k.radius() / n);
}

template <int Dim>
struct ReturnResult {
  SymTensor<Dim> plastic_strain;  // p_new
  SymTensor<Dim> stress_dev;      // sigma_D at the new state
  bool yielded = false;           // p_new != p_old
};

/// Exact minimizer of
///   p -> (1/2) C^eps (E - p) : (E - p) + H(p - p_old)
/// over deviatoric p. Only the deviatoric part of E matters.
///
/// With s = (2 mu / eps)(E_dev - p_old): if |s| <= kappa nothing flows,
/// otherwise p moves along s/|s| by (|s| - kappa) / (2 mu / eps) and the
/// stress lands on the yield surface.
/// Scales a deviator that exceeds radius r by at most a relative 1e-12
/// (roundoff of a projection) back into the closed ball. Larger excesses
/// are returned unchanged.
template <int Dim>
SymTensor<Dim> settle_into_ball(SymTensor<Dim> s, double r) {
  double n = norm(s);
  if (n <= r || n > r * (1.0 + 1e-12)) return s;
  s *= r / n;
  while (norm(s) > r) s *= 1.0 - std::numeric_limits<double>::epsilon();
  return s;
}

template <int Dim>
ReturnResult<Dim> radial_return(const SymTensor<Dim>& strain_dev,
                                const SymTensor<Dim>& p_old,
                                const HookeTensor& hooke, const YieldSet& k) {
  detail::require_deviatoric(strain_dev, "radial_return");
  detail::require_deviatoric(p_old, "radial_return");
  const double g2 = hooke.deviatoric_stiffness();
  const SymTensor<Dim> trial = (strain_dev - p_old) * g2;
  const double trial_norm = norm(trial);
  if (trial_norm <= k.radius()) return {p_old, trial, false};
  const SymTensor<Dim> direction = trial * (1.0 / trial_norm);
  const double increment = (trial_norm - k.radius()) / g2;
  return {p_old + direction * increment, settle_into_ball(direction * k.radius(), k.radius()),
          true};
}

/// Value of the cellwise incremental functional minimized by radial_return
/// (deviatoric part only).
template <int Dim>
double cell_incremental_energy(const SymTensor<Dim>& strain_dev,
                               const SymTensor<Dim>& p,
                               const SymTensor<Dim>& p_old,
                               const HookeTensor& hooke, const YieldSet& k) {
  const SymTensor<Dim> e = strain_dev - p;
  return 0.5 * hooke.deviatoric_stiffness() * double_dot(e, e) +
         k.radius() * norm(p - p_old);
}

}  // namespace rigidplast
