#pragma once

// Small fixed-size vectors and symmetric tensors.
//
// SymTensor<Dim> stores Dim*(Dim+1)/2 coefficients in row-major upper
// triangle order:
//   Dim = 2: (xx, xy, yy)
//   Dim = 3: (xx, xy, xz, yy, yz, zz)
// This order is what every serializer in the library writes.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>

#include "rigidplast/error.hpp"

namespace rigidplast {

template <int Dim>
struct Vec {
  static_assert(Dim == 2 || Dim == 3, "only 2-D and 3-D are supported");
  std::array<double, Dim> v{};

  constexpr double& operator[](int i) { return v[static_cast<std::size_t>(i)]; }
  constexpr double operator[](int i) const {
    return v[static_cast<std::size_t>(i)];
  }

  constexpr Vec& operator+=(const Vec& o) {
    for (int i = 0; i < Dim; ++i) (*this)[i] += o[i];
    return *this;
  }
  constexpr Vec& operator-=(const Vec& o) {
    for (int i = 0; i < Dim; ++i) (*this)[i] -= o[i];
    return *this;
  }
  constexpr Vec& operator*=(double s) {
    for (auto& x : v) x *= s;
    return *this;
  }

  friend constexpr Vec operator+(Vec a, const Vec& b) { return a += b; }
  friend constexpr Vec operator-(Vec a, const Vec& b) { return a -= b; }
  friend constexpr Vec operator*(Vec a, double s) { return a *= s; }
  friend constexpr Vec operator*(double s, Vec a) { return a *= s; }
  friend constexpr Vec operator-(Vec a) { return a *= -1.0; }
  friend constexpr bool operator==(const Vec&, const Vec&) = default;
};

using Vec2 = Vec<2>;

template <int Dim>
constexpr double dot(const Vec<Dim>& a, const Vec<Dim>& b) {
  double s = 0.0;
  for (int i = 0; i < Dim; ++i) s += a[i] * b[i];
  return s;
}

template <int Dim>
inline double norm(const Vec<Dim>& a) {
  return std::sqrt(dot(a, a));
}

template <int Dim>
class SymTensor {
  static_assert(Dim == 2 || Dim == 3, "only 2-D and 3-D are supported");

 public:
  static constexpr int kSize = Dim * (Dim + 1) / 2;
  using Coefficients = std::array<double, kSize>;

  constexpr SymTensor() = default;
  constexpr explicit SymTensor(const Coefficients& c) : c_(c) {}

  static constexpr SymTensor identity() {
    SymTensor t;
    for (int i = 0; i < Dim; ++i) t(i, i) = 1.0;
    return t;
  }

  /// Position of entry (i, j) in the canonical coefficient array.
  static constexpr int index(int i, int j) {
    if (i > j) {
      const int k = i;
      i = j;
      j = k;
    }
    return i * Dim - i * (i - 1) / 2 + (j - i);
  }

  constexpr double& operator()(int i, int j) {
    return c_[static_cast<std::size_t>(index(i, j))];
  }
  constexpr double operator()(int i, int j) const {
    return c_[static_cast<std::size_t>(index(i, j))];
  }

  constexpr const Coefficients& coefficients() const { return c_; }

  constexpr SymTensor& operator+=(const SymTensor& o) {
    for (int k = 0; k < kSize; ++k) c_[k] += o.c_[k];
    return *this;
  }
  constexpr SymTensor& operator-=(const SymTensor& o) {
    for (int k = 0; k < kSize; ++k) c_[k] -= o.c_[k];
    return *this;
  }
  constexpr SymTensor& operator*=(double s) {
    for (auto& x : c_) x *= s;
    return *this;
  }

  friend constexpr SymTensor operator+(SymTensor a, const SymTensor& b) {
    return a += b;
  }
  friend constexpr SymTensor operator-(SymTensor a, const SymTensor& b) {
    return a -= b;
  }
  friend constexpr SymTensor operator*(SymTensor a, double s) { return a *= s; }
  friend constexpr SymTensor operator*(double s, SymTensor a) { return a *= s; }
  friend constexpr SymTensor operator-(SymTensor a) { return a *= -1.0; }
  friend constexpr bool operator==(const SymTensor&, const SymTensor&) = default;

  /// Matrix-vector product A a.
  constexpr Vec<Dim> operator*(const Vec<Dim>& a) const {
    Vec<Dim> r;
    for (int i = 0; i < Dim; ++i)
      for (int j = 0; j < Dim; ++j) r[i] += (*this)(i, j) * a[j];
    return r;
  }

 private:
  Coefficients c_{};
};

using Sym2 = SymTensor<2>;

template <int Dim>
constexpr double trace(const SymTensor<Dim>& a) {
  double t = 0.0;
  for (int i = 0; i < Dim; ++i) t += a(i, i);
  return t;
}

/// A:B = tr(AB); off-diagonal coefficients count twice.
template <int Dim>
constexpr double double_dot(const SymTensor<Dim>& a, const SymTensor<Dim>& b) {
  double s = 0.0;
  for (int i = 0; i < Dim; ++i) {
    s += a(i, i) * b(i, i);
    for (int j = i + 1; j < Dim; ++j) s += 2.0 * a(i, j) * b(i, j);
  }
  return s;
}

/// Frobenius norm.
template <int Dim>
inline double norm(const SymTensor<Dim>& a) {
  return std::sqrt(double_dot(a, a));
}

template <int Dim>
constexpr SymTensor<Dim> deviator(const SymTensor<Dim>& a) {
  SymTensor<Dim> d = a;
  const double m = trace(a) / Dim;
  for (int i = 0; i < Dim; ++i) d(i, i) -= m;
  return d;
}

template <int Dim>
struct DevSplit {
  SymTensor<Dim> deviator;
  double mean_trace = 0.0;  // tr A / Dim
};

/// A = dev(A) + (tr A / Dim) I, with dev(A) : I = 0.
template <int Dim>
constexpr DevSplit<Dim> dev_decompose(const SymTensor<Dim>& a) {
  return {deviator(a), trace(a) / Dim};
}

/// (a ⊙ b)_ij = (a_i b_j + a_j b_i) / 2.
template <int Dim>
constexpr SymTensor<Dim> sym_outer(const Vec<Dim>& a, const Vec<Dim>& b) {
  SymTensor<Dim> t;
  for (int i = 0; i < Dim; ++i)
    for (int j = i; j < Dim; ++j) t(i, j) = 0.5 * (a[i] * b[j] + a[j] * b[i]);
  return t;
}

/// Runtime-dimension overload for callers holding plain coordinate arrays.
template <typename Container>
SymTensor<2> sym_outer2(const Container& a, const Container& b) {
  if (a.size() != 2 || b.size() != 2)
    throw DomainError("sym_outer2: vectors must both have dimension 2");
  return sym_outer(Vec2{{a[0], a[1]}}, Vec2{{b[0], b[1]}});
}

/// Trace-free within |tr A| <= 1e-10 * max(1, |A|).
template <int Dim>
inline bool is_deviatoric(const SymTensor<Dim>& a, double rel_tol = 1e-10) {
  return std::abs(trace(a)) <= rel_tol * std::max(1.0, norm(a));
}

}  // namespace rigidplast
