#pragma once

#include "hdgmix/errors.hpp"
#include "hdgmix/mesh.hpp"
#include "hdgmix/polyspaces.hpp"

#include <map>
#include <memory>
#include <mutex>
#include <string>

namespace hdgmix {

enum class Method { RT, BDM, HDG };

inline std::string to_string(Method m) {
  switch (m) {
    case Method::RT: return "rt";
    case Method::BDM: return "bdm";
    case Method::HDG: return "hdg";
  }
  return "?";
}

inline Method method_from_string(const std::string& s) {
  if (s == "rt") return Method::RT;
  if (s == "bdm") return Method::BDM;
  if (s == "hdg") return Method::HDG;
  throw ConfigError("unknown method '" + s + "'");
}

/// Degree and method tag; fixes (V_h, W_h, M_h) elementwise.
///   RT:  RT_k x P_k x P_k(e)
///   BDM: P_k^2 x P_{k-1} x P_k(e),  k >= 1
///   HDG: P_k^2 x P_k x P_k(e)
struct SpaceDescriptor {
  Method method = Method::RT;
  int k = 0;

  SpaceDescriptor() = default;
  SpaceDescriptor(Method m, int degree) : method(m), k(degree) {
    const int lo = m == Method::BDM ? 1 : 0;
    if (k < lo || k > 3)
      throw UnsupportedDegree(to_string(m) + " does not support degree " + std::to_string(k));
  }

  int w_degree() const { return method == Method::BDM ? k - 1 : k; }
  VectorSpaceKind v_kind() const {
    return method == Method::RT ? VectorSpaceKind::RaviartThomas : VectorSpaceKind::Full;
  }
  int dim_V() const { return static_cast<int>(method == Method::RT ? dim_RT(k, 2) : dim_BDM(k, 2)); }
  int dim_W() const { return static_cast<int>(dim_P(w_degree(), 2)); }
  int dim_face() const { return k + 1; }
  int dim_local_face() const { return 3 * (k + 1); }
};

/// Reference bases of one space together with their derived polynomials.
struct LocalSpace {
  SpaceDescriptor space;
  std::vector<VectorPolynomial> v;
  std::vector<Polynomial> v_div;
  std::vector<Polynomial> w;
  std::vector<Polynomial> w_dx, w_dy;

  explicit LocalSpace(const SpaceDescriptor& s) : space(s) {
    v = vector_basis(s.v_kind(), s.k);
    for (const auto& q : v) v_div.push_back(q.div());
    w = scalar_basis(s.w_degree()).functions();
    for (const auto& p : w) {
      w_dx.push_back(p.dx());
      w_dy.push_back(p.dy());
    }
  }

  int nv() const { return static_cast<int>(v.size()); }
  int nw() const { return static_cast<int>(w.size()); }

  /// Physical values of the Piola-mapped V basis at reference point xh: B q^(xh) / |J|.
  Eigen::Matrix<double, Eigen::Dynamic, 2> v_values(const ElementMap& K, const Point& xh) const {
    Eigen::Matrix<double, Eigen::Dynamic, 2> out(nv(), 2);
    for (int i = 0; i < nv(); ++i) out.row(i) = (K.B * v[i](xh) / K.jac).transpose();
    return out;
  }
  Eigen::VectorXd v_divs(const ElementMap& K, const Point& xh) const {
    Eigen::VectorXd out(nv());
    for (int i = 0; i < nv(); ++i) out(i) = v_div[i](xh) / K.jac;
    return out;
  }
  Eigen::VectorXd w_values(const Point& xh) const {
    Eigen::VectorXd out(nw());
    for (int i = 0; i < nw(); ++i) out(i) = w[i](xh);
    return out;
  }
  Eigen::Matrix<double, Eigen::Dynamic, 2> w_grads(const ElementMap& K, const Point& xh) const {
    Eigen::Matrix<double, Eigen::Dynamic, 2> out(nw(), 2);
    for (int i = 0; i < nw(); ++i)
      out.row(i) = (K.Binv.transpose() * Vec2(w_dx[i](xh), w_dy[i](xh))).transpose();
    return out;
  }
};

inline const LocalSpace& local_space(const SpaceDescriptor& s) {
  static std::mutex m;
  static std::map<std::pair<int, int>, std::unique_ptr<LocalSpace>> cache;
  std::lock_guard<std::mutex> lock(m);
  auto& slot = cache[{static_cast<int>(s.method), s.k}];
  if (!slot) slot = std::make_unique<LocalSpace>(s);
  return *slot;
}

/// Quadrature used by assembly and projections: triangle exactness 2k+4, k+3 edge points.
struct QuadratureChoice {
  int triangle = 4;
  int edge_points = 3;

  static QuadratureChoice for_degree(int k) { return {2 * k + 4, k + 3}; }
  /// At least the default, raised to integrate polynomials of degree m exactly.
  static QuadratureChoice at_least(int k, int m) {
    QuadratureChoice q = for_degree(k);
    q.triangle = std::max(q.triangle, m);
    q.edge_points = std::max(q.edge_points, (m + 2) / 2);
    return q;
  }
};

}  // namespace hdgmix
