#pragma once

#include "hdgmix/errors.hpp"
#include "hdgmix/polynomial.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace hdgmix {

/// Reference triangle with vertices (0,0), (1,0), (0,1).
/// Local edge i is opposite vertex i and runs from vertex i+1 to vertex i+2 (mod 3).
struct ReferenceTriangle {
  static Point vertex(int i) {
    static const Point v[3] = {Point(0, 0), Point(1, 0), Point(0, 1)};
    return v[i];
  }
  static Point edge_start(int e) { return vertex((e + 1) % 3); }
  static Point edge_end(int e) { return vertex((e + 2) % 3); }
  static double edge_length(int e) { return (edge_end(e) - edge_start(e)).norm(); }
  static Vec2 normal(int e) {
    const Vec2 t = edge_end(e) - edge_start(e);
    return Vec2(t.y(), -t.x()) / t.norm();
  }
  static double area() { return 0.5; }
};

/// Affine map F(x) = B x + b from the reference triangle onto a physical triangle.
struct ElementMap {
  std::array<Point, 3> vertices;
  Eigen::Matrix2d B;
  Eigen::Matrix2d Binv;
  Vec2 b;
  double det = 0.0;                 ///< signed determinant of B
  double jac = 0.0;                 ///< |det B|
  std::array<double, 3> edge_jac{};  ///< physical over reference edge length
  std::array<double, 3> edge_length{};
  std::array<Vec2, 3> normal;        ///< outward unit normals
  double h = 0.0;
  double rho = 0.0;

  Point F(const Point& xh) const { return B * xh + b; }
  Point G(const Point& x) const { return Binv * (x - b); }
  Point edge_start(int e) const { return vertices[(e + 1) % 3]; }
  Point edge_end(int e) const { return vertices[(e + 2) % 3]; }
  /// Point at parameter t in [0,1] along local edge e.
  Point edge_point(int e, double t) const { return (1.0 - t) * edge_start(e) + t * edge_end(e); }
  double area() const { return 0.5 * jac; }
};

/// Builds the affine map for the given vertex ordering. The ordering is not changed.
inline ElementMap build_reference_map(const std::array<Point, 3>& v) {
  ElementMap K;
  K.vertices = v;
  K.B.col(0) = v[1] - v[0];
  K.B.col(1) = v[2] - v[0];
  K.b = v[0];
  K.det = K.B.determinant();
  K.jac = std::abs(K.det);
  double scale = 0.0;
  for (int d = 0; d < 2; ++d) {
    const double lo = std::min({v[0](d), v[1](d), v[2](d)});
    const double hi = std::max({v[0](d), v[1](d), v[2](d)});
    scale = std::max(scale, hi - lo);
  }
  if (!(K.jac >= 1e-14 * scale * scale) || scale == 0.0)
    throw DegenerateElement("degenerate triangle");
  K.Binv = K.B.inverse();
  const double orient = K.det > 0 ? 1.0 : -1.0;
  double perimeter = 0.0;
  for (int e = 0; e < 3; ++e) {
    const Vec2 t = K.edge_end(e) - K.edge_start(e);
    K.edge_length[e] = t.norm();
    K.edge_jac[e] = K.edge_length[e] / ReferenceTriangle::edge_length(e);
    K.normal[e] = orient * Vec2(t.y(), -t.x()) / t.norm();
    perimeter += K.edge_length[e];
    K.h = std::max(K.h, K.edge_length[e]);
  }
  K.rho = 2.0 * K.area() / (0.5 * perimeter);
  return K;
}

struct Edge {
  std::array<int, 2> vertices{};          ///< lower global index first
  std::array<int, 2> owner{-1, -1};       ///< owner[0] has the lower triangle id
  std::array<int, 2> local{-1, -1};       ///< local edge index within each owner
  Vec2 normal;                            ///< points out of owner[0]
  double length = 0.0;
  bool boundary() const { return owner[1] < 0; }
};

/// Conforming triangulation with counter-clockwise elements.
class Mesh {
 public:
  Mesh() = default;

  Mesh(std::vector<Point> vertices, std::vector<std::array<int, 3>> triangles)
      : vertices_(std::move(vertices)), triangles_(std::move(triangles)) {
    build();
  }

  int num_vertices() const { return static_cast<int>(vertices_.size()); }
  int num_triangles() const { return static_cast<int>(triangles_.size()); }
  int num_edges() const { return static_cast<int>(edges_.size()); }
  int num_boundary_edges() const {
    return static_cast<int>(std::count_if(edges_.begin(), edges_.end(),
                                          [](const Edge& e) { return e.boundary(); }));
  }

  const std::vector<Point>& vertices() const { return vertices_; }
  const std::vector<std::array<int, 3>>& triangles() const { return triangles_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const Edge& edge(int e) const { return edges_[e]; }
  /// Global edge opposite local vertex i of triangle t.
  int triangle_edge(int t, int i) const { return tri_edges_[t][i]; }
  const std::array<int, 3>& triangle_edges(int t) const { return tri_edges_[t]; }
  const ElementMap& map(int t) const { return maps_[t]; }
  const std::vector<ElementMap>& maps() const { return maps_; }

  double h_max() const {
    double h = 0.0;
    for (const auto& K : maps_) h = std::max(h, K.h);
    return h;
  }
  /// Largest h_K / rho_K over the mesh.
  double shape_regularity() const {
    double s = 0.0;
    for (const auto& K : maps_) s = std::max(s, K.h / K.rho);
    return s;
  }

  /// True when every vertex lies on the inner side of every boundary edge.
  bool convex_domain(double tol = 1e-12) const {
    for (const auto& e : edges_) {
      if (!e.boundary()) continue;
      const Point& a = vertices_[e.vertices[0]];
      for (const auto& v : vertices_)
        if ((v - a).dot(e.normal) > tol * (1.0 + e.length)) return false;
    }
    return true;
  }

 private:
  void build() {
    if (triangles_.empty()) throw ParseError(0, "mesh has no triangles");
    maps_.clear();
    maps_.reserve(triangles_.size());
    for (auto& t : triangles_) {
      for (int i : t)
        if (i < 0 || i >= num_vertices()) throw NonConformingMesh("vertex index out of range");
      std::array<Point, 3> v{vertices_[t[0]], vertices_[t[1]], vertices_[t[2]]};
      const double det = (v[1] - v[0]).x() * (v[2] - v[0]).y() - (v[1] - v[0]).y() * (v[2] - v[0]).x();
      if (det < 0) {
        std::swap(t[1], t[2]);
        std::swap(v[1], v[2]);
      }
      maps_.push_back(build_reference_map(v));
    }
    std::map<std::pair<int, int>, int> index;
    edges_.clear();
    tri_edges_.assign(triangles_.size(), {-1, -1, -1});
    for (int t = 0; t < num_triangles(); ++t)
      for (int i = 0; i < 3; ++i) {
        int a = triangles_[t][(i + 1) % 3], b = triangles_[t][(i + 2) % 3];
        if (a == b) throw DegenerateElement("repeated vertex in triangle");
        auto key = std::minmax(a, b);
        auto it = index.find(key);
        if (it == index.end()) {
          Edge e;
          e.vertices = {key.first, key.second};
          e.owner[0] = t;
          e.local[0] = i;
          e.normal = maps_[t].normal[i];
          e.length = maps_[t].edge_length[i];
          index.emplace(key, num_edges());
          tri_edges_[t][i] = num_edges();
          edges_.push_back(e);
        } else {
          Edge& e = edges_[it->second];
          if (e.owner[1] >= 0) throw NonConformingMesh("edge shared by more than two triangles");
          e.owner[1] = t;
          e.local[1] = i;
          tri_edges_[t][i] = it->second;
        }
      }
    // A hanging node lies in the interior of a boundary edge.
    for (const auto& e : edges_) {
      if (!e.boundary()) continue;
      const Point& a = vertices_[e.vertices[0]];
      const Point& b = vertices_[e.vertices[1]];
      const Vec2 t = b - a;
      for (int v = 0; v < num_vertices(); ++v) {
        if (v == e.vertices[0] || v == e.vertices[1]) continue;
        const Vec2 d = vertices_[v] - a;
        const double s = d.dot(t) / t.squaredNorm();
        const double off = std::abs(d.x() * t.y() - d.y() * t.x()) / t.norm();
        if (s > 1e-12 && s < 1 - 1e-12 && off < 1e-12 * t.norm())
          throw NonConformingMesh("hanging node on edge (" + std::to_string(e.vertices[0]) + "," +
                                  std::to_string(e.vertices[1]) + ")");
      }
    }
  }

  std::vector<Point> vertices_;
  std::vector<std::array<int, 3>> triangles_;
  std::vector<Edge> edges_;
  std::vector<std::array<int, 3>> tri_edges_;
  std::vector<ElementMap> maps_;
};

/// Red refinement: every triangle is split into four similar children.
inline Mesh uniform_refine(const Mesh& m) {
  std::vector<Point> v = m.vertices();
  const int nv = m.num_vertices();
  for (const auto& e : m.edges()) v.push_back(0.5 * (v[e.vertices[0]] + v[e.vertices[1]]));
  std::vector<std::array<int, 3>> t;
  t.reserve(4 * m.num_triangles());
  for (int k = 0; k < m.num_triangles(); ++k) {
    const auto& p = m.triangles()[k];
    const int m0 = nv + m.triangle_edge(k, 0);
    const int m1 = nv + m.triangle_edge(k, 1);
    const int m2 = nv + m.triangle_edge(k, 2);
    t.push_back({p[0], m2, m1});
    t.push_back({m2, p[1], m0});
    t.push_back({m1, m0, p[2]});
    t.push_back({m0, m1, m2});
  }
  return Mesh(std::move(v), std::move(t));
}

/// Parses the text format: "nv nt", nv lines "x y", nt lines "i j k" (0-based).
inline Mesh parse_mesh(std::istream& in) {
  std::string line;
  int lineno = 0;
  auto next = [&](const char* what) -> std::istringstream {
    while (std::getline(in, line)) {
      ++lineno;
      if (line.find_first_not_of(" \t\r") != std::string::npos) return std::istringstream(line);
    }
    throw ParseError(lineno + 1, std::string("unexpected end of file, expected ") + what);
  };
  int nv = 0, nt = 0;
  {
    auto s = next("header");
    if (!(s >> nv >> nt) || nv < 3 || nt < 0) throw ParseError(lineno, "bad header");
  }
  if (nt == 0) throw ParseError(lineno, "empty triangle list");
  std::vector<Point> v(nv);
  for (int i = 0; i < nv; ++i) {
    auto s = next("vertex");
    if (!(s >> v[i].x() >> v[i].y())) throw ParseError(lineno, "bad vertex");
  }
  std::vector<std::array<int, 3>> t(nt);
  for (int i = 0; i < nt; ++i) {
    auto s = next("triangle");
    if (!(s >> t[i][0] >> t[i][1] >> t[i][2])) throw ParseError(lineno, "bad triangle");
    for (int j : t[i])
      if (j < 0 || j >= nv) throw ParseError(lineno, "vertex index out of range");
  }
  return Mesh(std::move(v), std::move(t));
}

inline Mesh load_mesh(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ParseError(0, "cannot open " + path);
  return parse_mesh(f);
}

/// Criss-cross mesh of the unit square: n x n cells, each split by both diagonals (4 n^2 triangles).
inline Mesh unit_square(int n) {
  if (n < 1) throw ConfigError("unit_square needs n >= 1");
  std::vector<Point> v;
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i) v.emplace_back(double(i) / n, double(j) / n);
  std::vector<std::array<int, 3>> t;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const int a = j * (n + 1) + i, b = a + 1, c = a + n + 1, d = c + 1;
      const int m = static_cast<int>(v.size());
      v.emplace_back((i + 0.5) / n, (j + 0.5) / n);
      t.push_back({a, b, m});
      t.push_back({b, d, m});
      t.push_back({d, c, m});
      t.push_back({c, a, m});
    }
  return Mesh(std::move(v), std::move(t));
}

}  // namespace hdgmix
