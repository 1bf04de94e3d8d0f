#pragma once

#include "hdgmix/errors.hpp"
#include "hdgmix/mesh.hpp"
#include "hdgmix/piola.hpp"
#include "hdgmix/polyspaces.hpp"
#include "hdgmix/space.hpp"

#include <array>
#include <map>
#include <mutex>
#include <vector>

namespace hdgmix {

// ------------------------------------------------------------ stabilization

inline void validate_tau(const std::array<double, 3>& t) {
  double mx = 0.0;
  for (double v : t) {
    if (!(v >= 0.0)) throw InvalidStabilization("negative stabilization");
    mx = std::max(mx, v);
  }
  if (mx <= 0.0) throw InvalidStabilization("stabilization vanishes on a whole element boundary");
}

/// Nonnegative constant per (element, local edge), not identically zero on any element.
class StabilizationFunction {
 public:
  StabilizationFunction() = default;
  explicit StabilizationFunction(std::vector<std::array<double, 3>> values) : v_(std::move(values)) {
    for (const auto& t : v_) validate_tau(t);
  }

  static StabilizationFunction constant(const Mesh& m, double value) {
    return StabilizationFunction(std::vector<std::array<double, 3>>(m.num_triangles(), {value, value, value}));
  }

  /// tau = value on the longest edge of each element (lowest local index on ties), zero elsewhere.
  static StabilizationFunction single_face(const Mesh& m, double value = 1.0) {
    std::vector<std::array<double, 3>> v(m.num_triangles(), {0.0, 0.0, 0.0});
    for (int t = 0; t < m.num_triangles(); ++t) v[t][longest_edge(m.map(t))] = value;
    return StabilizationFunction(std::move(v));
  }

  static int longest_edge(const ElementMap& K) {
    int e = 0;
    for (int i = 1; i < 3; ++i)
      if (K.edge_length[i] > K.edge_length[e]) e = i;
    return e;
  }

  bool empty() const { return v_.empty(); }
  int size() const { return static_cast<int>(v_.size()); }
  const std::array<double, 3>& operator[](int t) const { return v_[t]; }

 private:
  std::vector<std::array<double, 3>> v_;
};

// ------------------------------------------------------- element evaluation

/// Physical value of the V field with coefficients c (Piola-mapped reference basis).
inline Vec2 eval_vector(const LocalSpace& S, const ElementMap& K, const Eigen::Ref<const Eigen::VectorXd>& c,
                        const Point& x) {
  const Point xh = K.G(x);
  Vec2 r = Vec2::Zero();
  for (int i = 0; i < S.nv(); ++i) r += c(i) * S.v[i](xh);
  return K.B * r / K.jac;
}

inline double eval_divergence(const LocalSpace& S, const ElementMap& K, const Eigen::Ref<const Eigen::VectorXd>& c,
                              const Point& x) {
  const Point xh = K.G(x);
  double r = 0.0;
  for (int i = 0; i < S.nv(); ++i) r += c(i) * S.v_div[i](xh);
  return r / K.jac;
}

/// Value of a scalar field expanded in the reference orthonormal basis of P_k composed with F^-1.
inline double eval_scalar(const std::vector<Polynomial>& basis, const ElementMap& K,
                          const Eigen::Ref<const Eigen::VectorXd>& c, const Point& x) {
  const Point xh = K.G(x);
  double r = 0.0;
  for (std::size_t i = 0; i < basis.size(); ++i) r += c(i) * basis[i](xh);
  return r;
}

/// Value of an edge field with coefficients c in the orthonormal basis of P_k on segment a -> b.
inline double eval_face(int k, const Eigen::Ref<const Eigen::VectorXd>& c, double t, double length) {
  return c.dot(face_basis_values(k, t, length));
}

// ---------------------------------------------------- scalar and face projections

/// L2 projection onto P_k(K); coefficients in the basis phi_i o F^-1.
inline Eigen::VectorXd project_scalar(const ScalarField& u, int k, const ElementMap& K, int quad = -1) {
  const auto& B = scalar_basis(k);
  const Rule2D& r = triangle_rule(quad < 0 ? 2 * k + 4 : quad);
  Eigen::VectorXd c = Eigen::VectorXd::Zero(B.size());
  for (std::size_t q = 0; q < r.points.size(); ++q) {
    const double uv = r.weights[q] * u(K.F(r.points[q]));
    for (int i = 0; i < B.size(); ++i) c(i) += uv * B[i](r.points[q]);
  }
  return c;
}

/// L2 projection onto P_k of the segment a -> b; coefficients in the orthonormal Legendre basis.
inline Eigen::VectorXd project_face(const ScalarField& mu, int k, const Point& a, const Point& b, int npts = -1) {
  const double L = (b - a).norm();
  const Rule1D& g = gauss_legendre(npts < 0 ? k + 3 : npts);
  Eigen::VectorXd c = Eigen::VectorXd::Zero(k + 1);
  for (std::size_t q = 0; q < g.points.size(); ++q) {
    const double t = g.points[q];
    c += g.weights[q] * L * mu((1 - t) * a + t * b) * face_basis_values(k, t, L);
  }
  return c;
}

// ------------------------------------------------------ defining systems

enum class Route { Reference, Physical };

namespace detail {

/// Integration frame: the reference triangle or a physical one.
struct Frame {
  std::vector<Point> pts;
  std::vector<double> w;
  std::array<std::vector<Point>, 3> epts;
  std::array<std::vector<double>, 3> ew;
  std::array<std::vector<double>, 3> et;
  std::array<Vec2, 3> n;
  std::array<double, 3> len{};
};

inline Frame make_frame(const ElementMap* K, const QuadratureChoice& qc) {
  Frame f;
  const Rule2D& r = triangle_rule(qc.triangle);
  const Rule1D& g = gauss_legendre(qc.edge_points);
  for (std::size_t q = 0; q < r.points.size(); ++q) {
    f.pts.push_back(K ? K->F(r.points[q]) : r.points[q]);
    f.w.push_back(K ? r.weights[q] * K->jac : r.weights[q]);
  }
  for (int e = 0; e < 3; ++e) {
    const Point a = K ? K->edge_start(e) : ReferenceTriangle::edge_start(e);
    const Point b = K ? K->edge_end(e) : ReferenceTriangle::edge_end(e);
    f.len[e] = (b - a).norm();
    f.n[e] = K ? K->normal[e] : ReferenceTriangle::normal(e);
    for (std::size_t q = 0; q < g.points.size(); ++q) {
      const double t = g.points[q];
      f.epts[e].push_back((1 - t) * a + t * b);
      f.ew[e].push_back(g.weights[q] * f.len[e]);
      f.et[e].push_back(t);
    }
  }
  return f;
}

/// Volume test functions of a defining system.
struct Tests {
  std::vector<VectorPolynomial> vec;
  std::vector<Polynomial> scal;
};

/// Scaled monomial x^a y^b with x -> (x - c)/h, written in physical coordinates.
inline Polynomial scaled_monomial(int a, int b, const Point& c, double h) {
  return Polynomial::monomial(a, b).compose_affine(Eigen::Matrix2d::Identity() / h, -c / h);
}

inline std::vector<VectorPolynomial> physical_full(int k, const Point& c, double h) {
  std::vector<VectorPolynomial> out;
  if (k < 0) return out;
  const Polynomial zero;
  for (int d = 0; d <= k; ++d)
    for (int b = 0; b <= d; ++b) out.push_back({scaled_monomial(d - b, b, c, h), zero});
  for (int d = 0; d <= k; ++d)
    for (int b = 0; b <= d; ++b) out.push_back({zero, scaled_monomial(d - b, b, c, h)});
  return out;
}

inline std::vector<VectorPolynomial> physical_nedelec(int k, const Point& c, double h) {
  auto out = physical_full(k, c, h);
  if (k < 0) return out;
  const Polynomial sx = scaled_monomial(1, 0, c, h), sy = scaled_monomial(0, 1, c, h);
  for (int b = 0; b <= k; ++b) {
    const Polynomial m = scaled_monomial(k - b, b, c, h);
    out.push_back({sx * m, sy * m});
  }
  for (auto& q : out) q = {-1.0 * q.y, q.x};
  return out;
}

inline std::vector<Polynomial> physical_scalars(int k, const Point& c, double h) {
  std::vector<Polynomial> out;
  for (int d = 0; d <= k; ++d)
    for (int b = 0; b <= d; ++b) out.push_back(scaled_monomial(d - b, b, c, h));
  return out;
}

inline Tests make_tests(Method m, int k, const ElementMap* K) {
  Tests t;
  if (!K) {
    t.vec = m == Method::BDM ? vector_basis(VectorSpaceKind::Nedelec, k - 2) : vector_basis(VectorSpaceKind::Full, k - 1);
    if (m == Method::HDG && k >= 1) t.scal = scalar_basis(k - 1).functions();
  } else {
    const Point c = (K->vertices[0] + K->vertices[1] + K->vertices[2]) / 3.0;
    t.vec = m == Method::BDM ? physical_nedelec(k - 2, c, K->h) : physical_full(k - 1, c, K->h);
    if (m == Method::HDG) t.scal = physical_scalars(k - 1, c, K->h);
  }
  return t;
}

/// Applies the defining functionals to `ncols` column fields given by colV (vector part)
/// and colW (scalar part). Rows: vector moments, scalar moments, then per-edge
///   < colV . n + tau colW , xi_j >_e .
template <class ColV, class ColW>
Eigen::MatrixXd apply_functionals(const Frame& f, const Tests& t, int k, int ncols, ColV&& colV, ColW&& colW,
                                  const std::array<double, 3>& tau, const std::array<bool, 3>& use_edge = {true, true, true}) {
  int nedges = 0;
  for (bool b : use_edge) nedges += b;
  const int nr = static_cast<int>(t.vec.size()), ns = static_cast<int>(t.scal.size());
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(nr + ns + nedges * (k + 1), ncols);
  for (std::size_t q = 0; q < f.pts.size(); ++q) {
    const Point& x = f.pts[q];
    const Eigen::Matrix<double, Eigen::Dynamic, 2> V = colV(x);
    for (int i = 0; i < nr; ++i) M.row(i) += f.w[q] * (V * t.vec[i](x)).transpose();
    if (ns) {
      const Eigen::VectorXd W = colW(x);
      for (int i = 0; i < ns; ++i) M.row(nr + i) += f.w[q] * t.scal[i](x) * W.transpose();
    }
  }
  int row = nr + ns;
  for (int e = 0; e < 3; ++e) {
    if (!use_edge[e]) continue;
    for (std::size_t q = 0; q < f.epts[e].size(); ++q) {
      const Point& x = f.epts[e][q];
      Eigen::VectorXd val = colV(x) * f.n[e];
      if (tau[e] != 0.0) val += tau[e] * colW(x);
      const Eigen::VectorXd xi = face_basis_values(k, f.et[e][q], f.len[e]);
      M.middleRows(row, k + 1) += f.ew[e][q] * xi * val.transpose();
    }
    row += k + 1;
  }
  return M;
}

}  // namespace detail

/// Square defining system of a projection on one element.
struct ProjectionProblem {
  Method method = Method::RT;
  int k = 0;
  std::array<double, 3> tau{};  ///< as seen in the frame of the system
  Eigen::MatrixXd matrix;
  Eigen::FullPivLU<Eigen::MatrixXd> lu;

  double condition_number() const {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(matrix);
    const auto& s = svd.singularValues();
    return s(s.size() - 1) > 0 ? s(0) / s(s.size() - 1) : std::numeric_limits<double>::infinity();
  }
};

namespace detail {

inline int trial_w_count(Method m, int k) { return m == Method::HDG ? static_cast<int>(dim_P(k, 2)) : 0; }

/// Trial columns: the V basis followed by the W basis (HDG). On a physical element the
/// V basis is Piola-mapped and W composed with F^-1.
inline auto trial_columns(const LocalSpace& S, const ElementMap* K) {
  const int nv = S.nv(), nw = S.space.method == Method::HDG ? S.nw() : 0;
  auto colV = [&S, K, nv, nw](const Point& x) {
    Eigen::Matrix<double, Eigen::Dynamic, 2> V = Eigen::Matrix<double, Eigen::Dynamic, 2>::Zero(nv + nw, 2);
    if (K) V.topRows(nv) = S.v_values(*K, K->G(x));
    else
      for (int i = 0; i < nv; ++i) V.row(i) = S.v[i](x).transpose();
    return V;
  };
  auto colW = [&S, K, nv, nw](const Point& x) {
    Eigen::VectorXd W = Eigen::VectorXd::Zero(nv + nw);
    if (nw) W.tail(nw) = S.w_values(K ? K->G(x) : x);
    return W;
  };
  return std::make_pair(colV, colW);
}

inline ProjectionProblem build_problem(Method m, int k, const std::array<double, 3>& tau, const ElementMap* K,
                                       const QuadratureChoice& qc) {
  const LocalSpace& S = local_space(SpaceDescriptor(m, k));
  ProjectionProblem P;
  P.method = m;
  P.k = k;
  P.tau = tau;
  const Frame f = make_frame(K, qc);
  const Tests t = make_tests(m, k, K);
  auto [colV, colW] = trial_columns(S, K);
  const int ncols = S.nv() + trial_w_count(m, k);
  P.matrix = apply_functionals(f, t, k, ncols, colV, colW, tau);
  if (P.matrix.rows() != P.matrix.cols()) throw SingularLocalSystem("projection system is not square");
  P.lu.compute(P.matrix);
  if (!P.lu.isInvertible()) throw SingularLocalSystem("projection system is singular");
  return P;
}

}  // namespace detail

/// Defining system on the reference element; tau is the reference (checked) stabilization.
inline ProjectionProblem make_projection_problem(Method m, int k, const std::array<double, 3>& tau = {0, 0, 0},
                                                 int quad_degree = -1) {
  if (m == Method::HDG) validate_tau(tau);
  return detail::build_problem(m, k, tau, nullptr,
                               quad_degree < 0 ? QuadratureChoice::for_degree(k) : QuadratureChoice::at_least(k, quad_degree));
}

namespace detail {

inline const ProjectionProblem& cached_reference_problem(Method m, int k, int quad) {
  static std::mutex mtx;
  static std::map<std::tuple<int, int, int>, ProjectionProblem> cache;
  std::lock_guard<std::mutex> lock(mtx);
  auto key = std::make_tuple(static_cast<int>(m), k, quad);
  auto it = cache.find(key);
  if (it == cache.end()) it = cache.emplace(key, make_projection_problem(m, k, {0, 0, 0}, quad)).first;
  return it->second;
}

inline QuadratureChoice choose(int k, int quad) {
  return quad < 0 ? QuadratureChoice::for_degree(k) : QuadratureChoice::at_least(k, quad);
}

/// Right-hand side of the defining system for data (q, u).
inline Eigen::VectorXd data_rhs(Method m, int k, const VectorField& q, const ScalarField& u,
                                const std::array<double, 3>& tau, Route route, const ElementMap& K, int quad) {
  const ElementMap* Kp = route == Route::Physical ? &K : nullptr;
  const Frame f = make_frame(Kp, choose(k, quad));
  const Tests t = make_tests(m, k, Kp);
  auto colV = [&](const Point& x) {
    Eigen::Matrix<double, Eigen::Dynamic, 2> V(1, 2);
    const Vec2 v = Kp ? q(x) : Vec2(K.jac * (K.Binv * q(K.F(x))));
    V.row(0) = v.transpose();
    return V;
  };
  auto colW = [&](const Point& x) {
    Eigen::VectorXd W(1);
    W(0) = u ? (Kp ? u(x) : u(K.F(x))) : 0.0;
    return W;
  };
  return apply_functionals(f, t, k, 1, colV, colW, tau).col(0);
}

inline std::array<double, 3> checked_tau(const std::array<double, 3>& tau, const ElementMap& K, int sign) {
  return {sign * tau[0] * K.edge_jac[0], sign * tau[1] * K.edge_jac[1], sign * tau[2] * K.edge_jac[2]};
}

inline Eigen::VectorXd project_hdiv(Method m, const VectorField& q, int k, const ElementMap& K, Route route, int quad) {
  const std::array<double, 3> zero{0, 0, 0};
  const Eigen::VectorXd rhs = data_rhs(m, k, q, nullptr, zero, route, K, quad);
  if (route == Route::Reference) return cached_reference_problem(m, k, quad).lu.solve(rhs);
  return build_problem(m, k, zero, &K, choose(k, quad)).lu.solve(rhs);
}

}  // namespace detail

/// RT projection; coefficients in the Piola-mapped reference RT_k basis.
inline Eigen::VectorXd rt_project(const VectorField& q, int k, const ElementMap& K, Route route = Route::Reference,
                                  int quad = -1) {
  if (k < 0 || k > 3) throw UnsupportedDegree("rt degree");
  return detail::project_hdiv(Method::RT, q, k, K, route, quad);
}

/// BDM projection; coefficients in the Piola-mapped reference P_k^2 basis.
inline Eigen::VectorXd bdm_project(const VectorField& q, int k, const ElementMap& K, Route route = Route::Reference,
                                   int quad = -1) {
  if (k < 1 || k > 3) throw UnsupportedDegree("bdm projection needs 1 <= k <= 3");
  return detail::project_hdiv(Method::BDM, q, k, K, route, quad);
}

struct HdgProjection {
  Eigen::VectorXd q;  ///< Piola-mapped reference P_k^2 basis
  Eigen::VectorXd u;  ///< reference P_k basis composed with F^-1
};

enum class HdgSolve { Coupled, Decoupled };

namespace detail {

/// Re-expresses a field given on map Kr in the bases attached to map K (same physical element).
inline HdgProjection change_map(const HdgProjection& p, int k, const ElementMap& Kr, const ElementMap& K) {
  const LocalSpace& S = local_space(SpaceDescriptor(Method::HDG, k));
  const Rule2D& r = triangle_rule(2 * k + 2);
  Eigen::MatrixXd Mv = Eigen::MatrixXd::Zero(S.nv(), S.nv());
  Eigen::VectorXd bv = Eigen::VectorXd::Zero(S.nv());
  Eigen::VectorXd cu = Eigen::VectorXd::Zero(S.nw());
  for (std::size_t q = 0; q < r.points.size(); ++q) {
    const Point x = K.F(r.points[q]);
    const auto V = S.v_values(K, r.points[q]);
    Mv += r.weights[q] * V * V.transpose();
    bv += r.weights[q] * V * eval_vector(S, Kr, p.q, x);
    cu += r.weights[q] * S.w_values(r.points[q]) * eval_scalar(S.w, Kr, p.u, x);
  }
  return {Mv.ldlt().solve(bv), cu};
}

}  // namespace detail

/// HDG projection (Pi q, Pi u) with stabilization tau on the physical edges of K.
/// sign = -1 replaces tau by -tau. The decoupled route solves the scalar part first and
/// then the vector part with the edge of largest tau excluded.
inline HdgProjection hdg_project(const VectorField& q, const ScalarField& u, int k, const ElementMap& K,
                                 const std::array<double, 3>& tau, int sign = 1, HdgSolve mode = HdgSolve::Coupled,
                                 Route route = Route::Reference, int quad = -1) {
  if (k < 0 || k > 3) throw UnsupportedDegree("hdg degree");
  validate_tau(tau);
  const int s = sign >= 0 ? 1 : -1;
  const LocalSpace& S = local_space(SpaceDescriptor(Method::HDG, k));
  if (mode == HdgSolve::Coupled) {
    const std::array<double, 3> t = route == Route::Reference
                                        ? detail::checked_tau(tau, K, s)
                                        : std::array<double, 3>{s * tau[0], s * tau[1], s * tau[2]};
    const ElementMap* Kp = route == Route::Physical ? &K : nullptr;
    const ProjectionProblem P = detail::build_problem(Method::HDG, k, t, Kp, detail::choose(k, quad));
    const Eigen::VectorXd x = P.lu.solve(detail::data_rhs(Method::HDG, k, q, u, t, route, K, quad));
    return {x.head(S.nv()), x.tail(S.nw())};
  }

  // Orient the map so that the reference hypotenuse lands on the edge with the largest tau.
  int emax = 0;
  for (int e = 1; e < 3; ++e)
    if (tau[e] > tau[emax]) emax = e;
  const ElementMap Kr = build_reference_map({K.vertices[emax], K.vertices[(emax + 1) % 3], K.vertices[(emax + 2) % 3]});
  std::array<double, 3> tr{};
  for (int e = 0; e < 3; ++e) tr[e] = s * tau[(e + emax) % 3] * Kr.edge_jac[e];

  const QuadratureChoice qc = detail::choose(k, quad);
  const detail::Frame f = detail::make_frame(nullptr, qc);
  const auto& P = scalar_basis(k);
  const int nlow = static_cast<int>(dim_P(k - 1, 2)), nw = P.size();
  auto qhat = [&](const Point& xh) -> Vec2 { return Kr.jac * (Kr.Binv * q(Kr.F(xh))); };
  auto uhat = [&](const Point& xh) { return u(Kr.F(xh)); };

  // Scalar part: moments against P_{k-1}, then <tau u, w> = <tau u, w> + (div q, w) for w in P_k^perp.
  Eigen::MatrixXd Au = Eigen::MatrixXd::Zero(nw, nw);
  Eigen::VectorXd bu = Eigen::VectorXd::Zero(nw);
  for (std::size_t i = 0; i < f.pts.size(); ++i) {
    const Point& x = f.pts[i];
    const Eigen::VectorXd w = S.w_values(x);
    for (int r = 0; r < nlow; ++r) {
      Au.row(r) += f.w[i] * w(r) * w.transpose();
      bu(r) += f.w[i] * w(r) * uhat(x);
    }
    const Vec2 qv = qhat(x);
    for (int r = nlow; r < nw; ++r) bu(r) -= f.w[i] * (qv.x() * S.w_dx[r](x) + qv.y() * S.w_dy[r](x));
  }
  for (int e = 0; e < 3; ++e)
    for (std::size_t i = 0; i < f.epts[e].size(); ++i) {
      const Point& x = f.epts[e][i];
      const Eigen::VectorXd w = S.w_values(x);
      const double qn = qhat(x).dot(f.n[e]), uv = uhat(x);
      for (int r = nlow; r < nw; ++r) {
        Au.row(r) += f.ew[e][i] * tr[e] * w(r) * w.transpose();
        bu(r) += f.ew[e][i] * (tr[e] * uv + qn) * w(r);
      }
    }
  Eigen::FullPivLU<Eigen::MatrixXd> lu_u(Au);
  if (!lu_u.isInvertible()) throw SingularLocalSystem("decoupled scalar system is singular");
  const Eigen::VectorXd cu = lu_u.solve(bu);

  // Vector part: moments against P_{k-1}^2 and normal traces on the two remaining edges.
  const detail::Tests t = detail::make_tests(Method::RT, k, nullptr);
  const std::array<bool, 3> use{false, true, true};
  const std::array<double, 3> zero{0, 0, 0};
  auto colV = [&](const Point& x) {
    Eigen::Matrix<double, Eigen::Dynamic, 2> V(S.nv() + 1, 2);
    for (int i = 0; i < S.nv(); ++i) V.row(i) = S.v[i](x).transpose();
    V.row(S.nv()) = qhat(x).transpose();
    return V;
  };
  auto colW = [&](const Point&) { return Eigen::VectorXd::Zero(S.nv() + 1).eval(); };
  Eigen::MatrixXd Aq = detail::apply_functionals(f, t, k, S.nv() + 1, colV, colW, zero, use);
  // Add < tau (u - Pi u), xi > on the used edges.
  int row = static_cast<int>(t.vec.size());
  for (int e = 1; e < 3; ++e) {
    for (std::size_t i = 0; i < f.epts[e].size(); ++i) {
      const Point& x = f.epts[e][i];
      const double du = uhat(x) - S.w_values(x).dot(cu);
      Aq.block(row, S.nv(), k + 1, 1) += f.ew[e][i] * tr[e] * du * face_basis_values(k, f.et[e][i], f.len[e]);
    }
    row += k + 1;
  }
  const Eigen::MatrixXd Mq = Aq.leftCols(S.nv());
  Eigen::FullPivLU<Eigen::MatrixXd> lu_q(Mq);
  if (!lu_q.isInvertible()) throw SingularLocalSystem("decoupled vector system is singular");
  const HdgProjection pr{lu_q.solve(Aq.col(S.nv())), cu};
  return detail::change_map(pr, k, Kr, K);
}

/// Local lifting of a normal trace: q in RT_k (or P_k^2 for BDM) with zero interior moments
/// and q . n = mu on the boundary. mu is given per local edge in the orthonormal basis of the
/// physical edge, parametrised from its start to its end vertex.
inline Eigen::VectorXd lift_normal_trace(const Eigen::VectorXd& mu, Method method, int k, const ElementMap& K) {
  if (method == Method::HDG) throw UnsupportedDegree("lifting is defined for RT and BDM");
  if (method == Method::BDM && k < 1) throw UnsupportedDegree("bdm lifting needs k >= 1");
  if (k > 3 || k < 0) throw UnsupportedDegree("lifting degree");
  const ProjectionProblem& P = detail::cached_reference_problem(method, k, -1);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(P.matrix.rows());
  const int off = static_cast<int>(rhs.size()) - 3 * (k + 1);
  // <|a| mu o F, xi^>: with orthonormal bases on both edges this is sqrt(|a|) times mu.
  for (int e = 0; e < 3; ++e) rhs.segment(off + e * (k + 1), k + 1) = std::sqrt(K.edge_jac[e]) * mu.segment(e * (k + 1), k + 1);
  return P.lu.solve(rhs);
}

}  // namespace hdgmix
