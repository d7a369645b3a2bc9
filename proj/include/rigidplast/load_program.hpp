#pragma once

// Time-dependent loads: body force, Neumann tractions and the boundary
// displacement datum, stored at grid times and interpolated affinely.

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <optional>
#include <utility>
#include <vector>

#include "rigidplast/error.hpp"
#include "rigidplast/mesh.hpp"

namespace rigidplast {

/// Loads at one instant. `w` is a P1 field on the whole mesh whose values
/// on Dirichlet nodes are the boundary datum; `body` is per cell, `traction`
/// per boundary edge (ignored on Dirichlet edges). Empty body/traction
/// vectors mean zero.
struct LoadFrame {
  FieldP1 w;
  std::vector<Vec2> body;
  std::vector<Vec2> traction;
};

inline LoadFrame zero_frame(const Mesh& mesh) {
  return {FieldP1(mesh.num_nodes()), {}, {}};
}

namespace detail {
inline std::vector<Vec2> lerp(const std::vector<Vec2>& a, const std::vector<Vec2>& b,
                              double s) {
  if (a.empty() && b.empty()) return {};
  const std::size_t n = std::max(a.size(), b.size());
  std::vector<Vec2> r(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 x = a.empty() ? Vec2{} : a[i];
    const Vec2 y = b.empty() ? Vec2{} : b[i];
    r[i] = x * (1.0 - s) + y * s;
  }
  return r;
}
}  // namespace detail

inline std::vector<double> uniform_grid(double horizon, int steps) {
  if (!(horizon > 0.0)) throw EvolutionError("time horizon must be positive", std::nullopt);
  if (steps < 1) throw EvolutionError("number of time steps must be >= 1", std::nullopt);
  std::vector<double> t(static_cast<std::size_t>(steps) + 1);
  for (int k = 0; k <= steps; ++k) t[static_cast<std::size_t>(k)] = horizon * k / steps;
  t.back() = horizon;
  return t;
}

/// t_0 = 0, t_1 = first, then a geometric progression ending exactly at the
/// horizon. Resolves short initial transients with few steps.
inline std::vector<double> geometric_grid(double horizon, int steps, double first) {
  if (!(horizon > 0.0)) throw EvolutionError("time horizon must be positive", std::nullopt);
  if (steps < 1) throw EvolutionError("number of time steps must be >= 1", std::nullopt);
  if (!(first > 0.0) || !(first < horizon))
    throw EvolutionError("first geometric time step must lie in (0, T)", std::nullopt);
  std::vector<double> t(static_cast<std::size_t>(steps) + 1, 0.0);
  if (steps == 1) {
    t[1] = horizon;
    return t;
  }
  const double ratio = std::pow(horizon / first, 1.0 / (steps - 1));
  for (int k = 1; k <= steps; ++k)
    t[static_cast<std::size_t>(k)] = first * std::pow(ratio, k - 1);
  t.back() = horizon;
  return t;
}

class LoadProgram {
 public:
  LoadProgram() = default;
  LoadProgram(std::vector<double> times, std::vector<LoadFrame> frames)
      : times_(std::move(times)), frames_(std::move(frames)) {
    if (times_.size() != frames_.size())
      throw EvolutionError("load program: one frame per grid time is required",
                           std::nullopt);
    if (times_.size() < 2)
      throw EvolutionError("load program: at least two grid times are required",
                           std::nullopt);
    for (std::size_t k = 1; k < times_.size(); ++k)
      if (!(times_[k] > times_[k - 1]))
        throw EvolutionError("load program: time grid must be strictly increasing",
                             static_cast<int>(k));
  }

  /// Samples `frame_at(t)` on the grid.
  static LoadProgram sample(std::vector<double> times,
                            const std::function<LoadFrame(double)>& frame_at) {
    std::vector<LoadFrame> frames;
    frames.reserve(times.size());
    for (double t : times) frames.push_back(frame_at(t));
    return LoadProgram(std::move(times), std::move(frames));
  }

  const std::vector<double>& times() const { return times_; }
  const std::vector<LoadFrame>& frames() const { return frames_; }
  const LoadFrame& frame(std::size_t k) const { return frames_[k]; }
  int num_steps() const { return static_cast<int>(times_.size()) - 1; }
  double horizon() const { return times_.back(); }

  double max_step() const {
    double h = 0.0;
    for (std::size_t k = 1; k < times_.size(); ++k) h = std::max(h, times_[k] - times_[k - 1]);
    return h;
  }

  /// Affine interpolation in time; clamps outside [t_0, T].
  LoadFrame at(double t) const {
    if (t <= times_.front()) return frames_.front();
    if (t >= times_.back()) return frames_.back();
    std::size_t k = 1;
    while (times_[k] < t) ++k;
    const double s = (t - times_[k - 1]) / (times_[k] - times_[k - 1]);
    const LoadFrame& a = frames_[k - 1];
    const LoadFrame& b = frames_[k];
    LoadFrame r;
    r.w.resize(a.w.size());
    for (std::size_t i = 0; i < a.w.size(); ++i) r.w[i] = a.w[i] * (1.0 - s) + b.w[i] * s;
    r.body = detail::lerp(a.body, b.body, s);
    r.traction = detail::lerp(a.traction, b.traction, s);
    return r;
  }

  /// Checks sizes against the mesh and div w = 0 cellwise at every grid time.
  void validate(const Mesh& mesh, double div_tol = 1e-12) const {
    for (std::size_t k = 0; k < frames_.size(); ++k) {
      const LoadFrame& fr = frames_[k];
      const auto step = static_cast<int>(k);
      if (fr.w.size() != mesh.num_nodes())
        throw EvolutionError("load program: w has the wrong size", step);
      if (!fr.body.empty() && fr.body.size() != mesh.num_cells())
        throw EvolutionError("load program: body load has the wrong size", step);
      if (!fr.traction.empty() && fr.traction.size() != mesh.boundary_edges.size())
        throw EvolutionError("load program: traction has the wrong size", step);
      for (double d : divergence_of(fr.w, mesh))
        if (std::abs(d) > div_tol)
          throw EvolutionError("load program: boundary datum is not divergence free (div w = " +
                                   std::to_string(d) + ")",
                               step);
    }
  }

 private:
  std::vector<double> times_;
  std::vector<LoadFrame> frames_;
};

}  // namespace rigidplast
