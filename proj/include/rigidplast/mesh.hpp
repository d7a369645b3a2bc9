#pragma once

// Structured triangulations of the unit square, P1/P0 field carriers and
// the elementwise strain operator.

#include <algorithm>
#include <array>
#include <initializer_list>
#include <cmath>
#include <cstdint>
#include <map>
#include <utility>
#include <string>
#include <vector>

#include "rigidplast/error.hpp"
#include "rigidplast/sym_tensor.hpp"

namespace rigidplast {

enum class Face : std::uint8_t { Bottom = 1, Right = 2, Top = 4, Left = 8 };

/// Bit set of square faces.
class FaceSet {
 public:
  constexpr FaceSet() = default;
  constexpr FaceSet(std::initializer_list<Face> faces) {
    for (Face f : faces) bits_ |= static_cast<std::uint8_t>(f);
  }
  static constexpr FaceSet all() {
    return {Face::Bottom, Face::Right, Face::Top, Face::Left};
  }

  constexpr bool contains(Face f) const {
    return (bits_ & static_cast<std::uint8_t>(f)) != 0;
  }
  constexpr bool empty() const { return bits_ == 0; }
  constexpr std::uint8_t bits() const { return bits_; }
  friend constexpr bool operator==(FaceSet, FaceSet) = default;

 private:
  std::uint8_t bits_ = 0;
};

inline std::string face_name(Face f) {
  switch (f) {
    case Face::Bottom: return "bottom";
    case Face::Right: return "right";
    case Face::Top: return "top";
    case Face::Left: return "left";
  }
  return "?";
}

enum class BoundaryKind : std::uint8_t { Dirichlet, Neumann };

struct BoundaryEdge {
  std::array<int, 2> nodes{};  // counter-clockwise along the boundary
  Vec2 normal;                 // outward unit normal
  double length = 0.0;
  BoundaryKind kind = BoundaryKind::Neumann;
  Face face = Face::Bottom;
};

/// Displacement-like nodal field.
using FieldP1 = std::vector<Vec2>;
/// Strain/stress-like elementwise constant field.
using FieldP0 = std::vector<Sym2>;

class Mesh {
 public:
  std::vector<Vec2> nodes;
  std::vector<std::array<int, 3>> triangles;  // counter-clockwise
  std::vector<BoundaryEdge> boundary_edges;
  /// Cell owning each boundary edge.
  std::vector<int> boundary_edge_cell;
  std::vector<double> areas;
  /// Constant gradients of the three barycentric shape functions.
  std::vector<std::array<Vec2, 3>> gradients;
  /// true for every node touching a Dirichlet edge.
  std::vector<bool> dirichlet_node;
  int cells_per_side = 0;
  FaceSet dirichlet_faces;

  std::size_t num_nodes() const { return nodes.size(); }
  std::size_t num_cells() const { return triangles.size(); }

  Vec2 centroid(std::size_t cell) const {
    const auto& t = triangles[cell];
    return (nodes[t[0]] + nodes[t[1]] + nodes[t[2]]) * (1.0 / 3.0);
  }

  double total_area() const {
    double a = 0.0;
    for (double x : areas) a += x;
    return a;
  }

  /// Same node coordinates, connectivity and boundary labels.
  bool same_topology(const Mesh& o) const {
    return nodes == o.nodes && triangles == o.triangles &&
           dirichlet_faces == o.dirichlet_faces;
  }

  /// Recomputes boundary-edge owners and Dirichlet node flags.
  void finalize_topology() {
    std::map<std::pair<int, int>, int> owner;
    for (std::size_t c = 0; c < triangles.size(); ++c) {
      const auto& t = triangles[c];
      for (int k = 0; k < 3; ++k) {
        const int a = t[k];
        const int b = t[(k + 1) % 3];
        owner[{std::min(a, b), std::max(a, b)}] = static_cast<int>(c);
      }
    }
    boundary_edge_cell.clear();
    for (const auto& e : boundary_edges) {
      const auto it = owner.find({std::min(e.nodes[0], e.nodes[1]),
                                  std::max(e.nodes[0], e.nodes[1])});
      if (it == owner.end()) throw MeshError("boundary edge without a cell");
      boundary_edge_cell.push_back(it->second);
    }
    dirichlet_node.assign(nodes.size(), false);
    for (const auto& e : boundary_edges)
      if (e.kind == BoundaryKind::Dirichlet)
        for (int v : e.nodes) dirichlet_node[static_cast<std::size_t>(v)] = true;
  }

  /// Recomputes areas and shape gradients; throws on degenerate triangles.
  void finalize_geometry() {
    areas.resize(triangles.size());
    gradients.resize(triangles.size());
    for (std::size_t c = 0; c < triangles.size(); ++c) {
      const auto& t = triangles[c];
      const Vec2& p0 = nodes[t[0]];
      const Vec2& p1 = nodes[t[1]];
      const Vec2& p2 = nodes[t[2]];
      const double det =
          (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]);
      if (!(det > 0.0))
        throw MeshError("triangle " + std::to_string(c) +
                        " is degenerate or clockwise");
      areas[c] = 0.5 * det;
      // grad lambda_i = rot(p_{i+2} - p_{i+1}) / det
      const std::array<const Vec2*, 3> p{&p0, &p1, &p2};
      for (int i = 0; i < 3; ++i) {
        const Vec2& a = *p[(i + 1) % 3];
        const Vec2& b = *p[(i + 2) % 3];
        gradients[c][i] = Vec2{{(a[1] - b[1]) / det, (b[0] - a[0]) / det}};
      }
    }
  }
};

/// Uniform n x n grid of unit squares, each split along the (0,0)-(1,1)
/// diagonal into a lower-right and an upper-left right triangle. Node (i, j)
/// sits at (i/n, j/n) with index j*(n+1) + i.
inline Mesh build_square_mesh(int n, FaceSet dirichlet_faces) {
  if (n < 1) throw MeshError("build_square_mesh: n must be >= 1");
  if (dirichlet_faces.empty())
    throw MeshError("build_square_mesh: the Dirichlet part must be non-empty");

  Mesh m;
  m.cells_per_side = n;
  m.dirichlet_faces = dirichlet_faces;
  const double h = 1.0 / n;
  auto id = [n](int i, int j) { return j * (n + 1) + i; };

  m.nodes.reserve(static_cast<std::size_t>((n + 1) * (n + 1)));
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i)
      m.nodes.push_back(Vec2{{i == n ? 1.0 : i * h, j == n ? 1.0 : j * h}});

  m.triangles.reserve(static_cast<std::size_t>(2 * n * n));
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      m.triangles.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
      m.triangles.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
    }
  }

  auto kind_of = [&](Face f) {
    return dirichlet_faces.contains(f) ? BoundaryKind::Dirichlet
                                       : BoundaryKind::Neumann;
  };
  // Walk the boundary counter-clockwise: bottom, right, top, left.
  for (int i = 0; i < n; ++i)
    m.boundary_edges.push_back({{id(i, 0), id(i + 1, 0)}, Vec2{{0.0, -1.0}}, h,
                                kind_of(Face::Bottom), Face::Bottom});
  for (int j = 0; j < n; ++j)
    m.boundary_edges.push_back({{id(n, j), id(n, j + 1)}, Vec2{{1.0, 0.0}}, h,
                                kind_of(Face::Right), Face::Right});
  for (int i = n; i > 0; --i)
    m.boundary_edges.push_back({{id(i, n), id(i - 1, n)}, Vec2{{0.0, 1.0}}, h,
                                kind_of(Face::Top), Face::Top});
  for (int j = n; j > 0; --j)
    m.boundary_edges.push_back({{id(0, j), id(0, j - 1)}, Vec2{{-1.0, 0.0}}, h,
                                kind_of(Face::Left), Face::Left});

  m.finalize_geometry();
  m.finalize_topology();
  return m;
}

/// Elementwise sym(grad u); exact for affine u.
inline FieldP0 strain_of(const FieldP1& u, const Mesh& mesh) {
  if (u.size() != mesh.num_nodes())
    throw MeshError("strain_of: field size does not match the mesh");
  FieldP0 out(mesh.num_cells());
  for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
    const auto& t = mesh.triangles[c];
    Sym2 e;
    for (int a = 0; a < 3; ++a)
      e += sym_outer(u[static_cast<std::size_t>(t[a])], mesh.gradients[c][a]);
    out[c] = e;
  }
  return out;
}

/// Elementwise divergence tr(sym grad u).
inline std::vector<double> divergence_of(const FieldP1& u, const Mesh& mesh) {
  const FieldP0 e = strain_of(u, mesh);
  std::vector<double> d(e.size());
  for (std::size_t c = 0; c < e.size(); ++c) d[c] = trace(e[c]);
  return d;
}

/// Nodal interpolant of a vector function.
template <typename F>
FieldP1 interpolate_p1(const Mesh& mesh, F&& fn) {
  FieldP1 out(mesh.num_nodes());
  for (std::size_t i = 0; i < mesh.num_nodes(); ++i) out[i] = fn(mesh.nodes[i]);
  return out;
}

/// Centroid samples of a tensor function.
template <typename F>
FieldP0 sample_p0(const Mesh& mesh, F&& fn) {
  FieldP0 out(mesh.num_cells());
  for (std::size_t c = 0; c < mesh.num_cells(); ++c) out[c] = fn(mesh.centroid(c));
  return out;
}

// L2-type norms of piecewise-constant fields, weighted by cell area.

inline double l2_norm(const FieldP0& f, const Mesh& mesh) {
  double s = 0.0;
  for (std::size_t c = 0; c < f.size(); ++c)
    s += mesh.areas[c] * double_dot(f[c], f[c]);
  return std::sqrt(s);
}

inline double l2_norm(const std::vector<double>& f, const Mesh& mesh) {
  double s = 0.0;
  for (std::size_t c = 0; c < f.size(); ++c) s += mesh.areas[c] * f[c] * f[c];
  return std::sqrt(s);
}

inline double l1_norm(const FieldP0& f, const Mesh& mesh) {
  double s = 0.0;
  for (std::size_t c = 0; c < f.size(); ++c) s += mesh.areas[c] * norm(f[c]);
  return s;
}

inline double max_norm(const FieldP0& f) {
  double m = 0.0;
  for (const auto& x : f) m = std::max(m, norm(x));
  return m;
}

inline double max_dev_norm(const FieldP0& f) {
  double m = 0.0;
  for (const auto& x : f) m = std::max(m, norm(deviator(x)));
  return m;
}

/// Lumped P1 L1 norm: sum over cells of area * mean nodal |u|.
inline double l1_norm(const FieldP1& u, const Mesh& mesh) {
  double s = 0.0;
  for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
    const auto& t = mesh.triangles[c];
    double m = 0.0;
    for (int v : t) m += norm(u[static_cast<std::size_t>(v)]);
    s += mesh.areas[c] * m / 3.0;
  }
  return s;
}

inline FieldP1 operator-(const FieldP1& a, const FieldP1& b) {
  FieldP1 r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
  return r;
}

inline FieldP0 operator-(const FieldP0& a, const FieldP0& b) {
  FieldP0 r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
  return r;
}

inline FieldP1 scaled(const FieldP1& a, double s) {
  FieldP1 r(a);
  for (auto& x : r) x *= s;
  return r;
}

}  // namespace rigidplast
