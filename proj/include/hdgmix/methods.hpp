#pragma once

#include "hdgmix/errors.hpp"
#include "hdgmix/mesh.hpp"
#include "hdgmix/parallel.hpp"
#include "hdgmix/piola.hpp"
#include "hdgmix/projections.hpp"
#include "hdgmix/quadrature.hpp"
#include "hdgmix/space.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include <cmath>
#include <vector>

namespace hdgmix {

/// -div(kappa grad u) + c u = f in the domain, u = g on the boundary.
/// An empty c means no reaction term.
struct ProblemData {
  ScalarField kappa = [](const Point&) { return 1.0; };
  ScalarField c;
  ScalarField f;
  ScalarField g;
};

/// Global numbering: q and u dofs are element-blocked, lambda dofs are edge-blocked.
struct DofLayout {
  int nv = 0, nw = 0, nf = 0;
  int num_triangles = 0, num_edges = 0;
  std::vector<int> interior;  ///< per lambda dof: condensed index, or -1 on the boundary
  int num_interior = 0;

  int num_q() const { return nv * num_triangles; }
  int num_u() const { return nw * num_triangles; }
  int num_lambda() const { return nf * num_edges; }
  int q(int t) const { return t * nv; }
  int u(int t) const { return t * nw; }
  int lambda(int e) const { return e * nf; }
};

/// Element matrices. Local lambda dofs are ordered by local edge, each block in the
/// orthonormal basis of the global edge (parametrised from its lower to its higher vertex).
///   A = (kappa^-1 q_j, q_i)      B = (div q_j, w_i)      C = <mu_j, q_i . n>
///   R = (c w_j, w_i)             Sww = <tau w_j, w_i>    Swm = <tau mu_j, w_i>
///   Smm = <tau mu_j, mu_i>       F = (f, w_i)
struct LocalBlocks {
  Eigen::MatrixXd A, B, C, R, Sww, Swm, Smm;
  Eigen::VectorXd F;
};

struct Assembly {
  const Mesh* mesh = nullptr;
  SpaceDescriptor space;
  StabilizationFunction tau;  ///< empty for RT and BDM
  QuadratureChoice quad;
  int quad_override = -1;
  DofLayout layout;
  std::vector<LocalBlocks> blocks;
  Eigen::VectorXd g;  ///< L2 projection of the boundary data; zero on interior edges
};

/// Discrete solution (q_h, u_h, uhat_h) in the element and edge bases.
struct FieldTriple {
  SpaceDescriptor space;
  StabilizationFunction tau;
  Eigen::VectorXd q, u, uhat;
};

namespace detail {

/// Reference basis values tabulated at the quadrature points.
struct Tables {
  std::vector<Eigen::Matrix<double, Eigen::Dynamic, 2>> v;  // reference (unmapped) vectors
  std::vector<Eigen::VectorXd> div, w;
};

inline Tables tabulate(const LocalSpace& S, const std::vector<Point>& pts) {
  Tables T;
  for (const Point& xh : pts) {
    Eigen::Matrix<double, Eigen::Dynamic, 2> V(S.nv(), 2);
    Eigen::VectorXd d(S.nv());
    for (int i = 0; i < S.nv(); ++i) {
      V.row(i) = S.v[i](xh).transpose();
      d(i) = S.v_div[i](xh);
    }
    T.v.push_back(V);
    T.div.push_back(d);
    T.w.push_back(S.w_values(xh));
  }
  return T;
}

/// Reference point on local edge i at the global edge parameter s.
inline bool same_orientation(const Mesh& m, int t, int i) {
  return m.triangles()[t][(i + 1) % 3] == m.edge(m.triangle_edge(t, i)).vertices[0];
}

inline Point edge_reference_point(int i, double s, bool same) {
  const double tl = same ? s : 1.0 - s;
  return (1.0 - tl) * ReferenceTriangle::edge_start(i) + tl * ReferenceTriangle::edge_end(i);
}

struct EdgeTables {
  // [local edge][orientation] -> tables at the Gauss points in global parameter order
  std::array<std::array<Tables, 2>, 3> t;
  std::vector<Eigen::VectorXd> psi;  // face basis on [0,1] times sqrt(length) (unit length)
};

inline EdgeTables tabulate_edges(const LocalSpace& S, const Rule1D& g) {
  EdgeTables E;
  for (int i = 0; i < 3; ++i)
    for (int o = 0; o < 2; ++o) {
      std::vector<Point> pts;
      for (double s : g.points) pts.push_back(edge_reference_point(i, s, o == 0));
      E.t[i][o] = tabulate(S, pts);
    }
  for (double s : g.points) E.psi.push_back(face_basis_values(S.space.k, s, 1.0));
  return E;
}

inline double reaction(const ProblemData& d, const Point& x) { return d.c ? d.c(x) : 0.0; }

}  // namespace detail

inline DofLayout make_layout(const Mesh& m, const SpaceDescriptor& s) {
  DofLayout L;
  L.nv = s.dim_V();
  L.nw = s.dim_W();
  L.nf = s.dim_face();
  L.num_triangles = m.num_triangles();
  L.num_edges = m.num_edges();
  L.interior.assign(L.num_lambda(), -1);
  for (int e = 0; e < m.num_edges(); ++e)
    if (!m.edge(e).boundary())
      for (int j = 0; j < L.nf; ++j) L.interior[L.lambda(e) + j] = L.num_interior++;
  return L;
}

/// Builds the element matrices and the boundary data. tau is used by HDG only; an empty
/// tau selects tau = 1. quad raises the quadrature exactness for all integrals.
inline Assembly assemble(const Mesh& mesh, const SpaceDescriptor& space, const ProblemData& data,
                         StabilizationFunction tau = {}, int quad = -1) {
  Assembly a;
  a.mesh = &mesh;
  a.space = space;
  a.quad_override = quad;
  a.quad = detail::choose(space.k, quad);
  if (space.method == Method::HDG) {
    a.tau = tau.empty() ? StabilizationFunction::constant(mesh, 1.0) : std::move(tau);
    if (a.tau.size() != mesh.num_triangles()) throw InvalidStabilization("stabilization size does not match mesh");
  }
  a.layout = make_layout(mesh, space);
  const DofLayout& L = a.layout;
  const LocalSpace& S = local_space(space);
  const Rule2D& r = triangle_rule(a.quad.triangle);
  const Rule1D& g = gauss_legendre(a.quad.edge_points);
  const detail::Tables T = detail::tabulate(S, r.points);
  const detail::EdgeTables ET = detail::tabulate_edges(S, g);
  const bool hdg = space.method == Method::HDG;

  a.blocks.resize(mesh.num_triangles());
  parallel_for(mesh.num_triangles(), [&](int t) {
    const ElementMap& K = mesh.map(t);
    LocalBlocks& b = a.blocks[t];
    b.A = Eigen::MatrixXd::Zero(L.nv, L.nv);
    b.B = Eigen::MatrixXd::Zero(L.nw, L.nv);
    b.R = Eigen::MatrixXd::Zero(L.nw, L.nw);
    b.F = Eigen::VectorXd::Zero(L.nw);
    for (std::size_t q = 0; q < r.points.size(); ++q) {
      const Point x = K.F(r.points[q]);
      const double kap = data.kappa(x);
      if (!(kap > 0.0)) throw NonPositiveDiffusion("kappa must be positive");
      const double w = r.weights[q] * K.jac;
      const Eigen::MatrixXd V = T.v[q] * K.B.transpose() / K.jac;
      b.A.noalias() += (w / kap) * V * V.transpose();
      b.B.noalias() += w * T.w[q] * (T.div[q] / K.jac).transpose();
      const double c = detail::reaction(data, x);
      if (c != 0.0) b.R.noalias() += (w * c) * T.w[q] * T.w[q].transpose();
      b.F += (w * data.f(x)) * T.w[q];
    }
    const int nl = 3 * L.nf;
    b.C = Eigen::MatrixXd::Zero(L.nv, nl);
    b.Sww = Eigen::MatrixXd::Zero(L.nw, L.nw);
    b.Swm = Eigen::MatrixXd::Zero(L.nw, nl);
    b.Smm = Eigen::MatrixXd::Zero(nl, nl);
    for (int i = 0; i < 3; ++i) {
      const double len = K.edge_length[i];
      const double scale = 1.0 / std::sqrt(len);
      const detail::Tables& E = ET.t[i][detail::same_orientation(mesh, t, i) ? 0 : 1];
      const double ti = hdg ? a.tau[t][i] : 0.0;
      for (std::size_t q = 0; q < g.points.size(); ++q) {
        const double w = g.weights[q] * len;
        const Eigen::VectorXd qn = E.v[q] * (K.B.transpose() * K.normal[i]) / K.jac;
        const Eigen::VectorXd psi = scale * ET.psi[q];
        b.C.middleCols(i * L.nf, L.nf).noalias() += w * qn * psi.transpose();
        if (ti != 0.0) {
          b.Sww.noalias() += (w * ti) * E.w[q] * E.w[q].transpose();
          b.Swm.middleCols(i * L.nf, L.nf).noalias() += (w * ti) * E.w[q] * psi.transpose();
          b.Smm.block(i * L.nf, i * L.nf, L.nf, L.nf).noalias() += (w * ti) * psi * psi.transpose();
        }
      }
    }
  });

  a.g = Eigen::VectorXd::Zero(L.num_lambda());
  if (data.g)
    for (int e = 0; e < mesh.num_edges(); ++e) {
      const Edge& E = mesh.edge(e);
      if (!E.boundary()) continue;
      a.g.segment(L.lambda(e), L.nf) = project_face(data.g, space.k, mesh.vertices()[E.vertices[0]],
                                                     mesh.vertices()[E.vertices[1]], a.quad.edge_points);
    }
  return a;
}

// ------------------------------------------------------------ static condensation

/// Local elimination of (q, u) in terms of the element's lambda dofs:
///   (q, u) = X lambda_K + y,  H = E^T M^-1 E + Smm,  r = -E^T M^-1 g.
struct Condensed {
  Eigen::MatrixXd X, H;
  Eigen::VectorXd y, r;
};

inline Condensed condense(const LocalBlocks& b) {
  const int nv = static_cast<int>(b.A.rows()), nw = static_cast<int>(b.B.rows());
  const int nl = static_cast<int>(b.C.cols());
  Eigen::MatrixXd M(nv + nw, nv + nw);
  M << b.A, -b.B.transpose(), -b.B, -(b.R + b.Sww);
  Eigen::MatrixXd E(nv + nw, nl);
  E << -b.C, -b.Swm;
  Eigen::VectorXd g(nv + nw);
  g << Eigen::VectorXd::Zero(nv), -b.F;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(M);
  if (!lu.isInvertible()) throw SingularLocalSolver("local solver is singular");
  Condensed c;
  c.X = lu.solve(E);
  c.y = lu.solve(g);
  c.H = E.transpose() * c.X + b.Smm;
  c.r = -E.transpose() * c.y;
  return c;
}

namespace detail {

inline std::array<int, 3> element_edges(const Assembly& a, int t) { return a.mesh->triangle_edges(t); }

inline std::vector<Condensed> condense_all(const Assembly& a) {
  std::vector<Condensed> out(a.blocks.size());
  parallel_for(static_cast<int>(a.blocks.size()), [&](int t) { out[t] = condense(a.blocks[t]); });
  return out;
}

struct CondensedSystem {
  Eigen::SparseMatrix<double> H;  // interior lambda dofs
  Eigen::VectorXd rhs;
};

inline CondensedSystem build_condensed(const Assembly& a, const std::vector<Condensed>& loc) {
  const DofLayout& L = a.layout;
  std::vector<Eigen::Triplet<double>> trip;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(L.num_interior);
  for (int t = 0; t < L.num_triangles; ++t) {
    const auto edges = element_edges(a, t);
    const Condensed& c = loc[t];
    for (int i = 0; i < 3; ++i)
      for (int a1 = 0; a1 < L.nf; ++a1) {
        const int row = L.interior[L.lambda(edges[i]) + a1];
        if (row < 0) continue;
        rhs(row) += c.r(i * L.nf + a1);
        for (int j = 0; j < 3; ++j)
          for (int b1 = 0; b1 < L.nf; ++b1) {
            const int gcol = L.lambda(edges[j]) + b1;
            const double v = c.H(i * L.nf + a1, j * L.nf + b1);
            const int col = L.interior[gcol];
            if (col >= 0)
              trip.emplace_back(row, col, v);
            else
              rhs(row) -= v * a.g(gcol);
          }
      }
  }
  CondensedSystem s;
  s.H.resize(L.num_interior, L.num_interior);
  s.H.setFromTriplets(trip.begin(), trip.end());
  s.rhs = rhs;
  return s;
}

inline Eigen::VectorXd element_lambda(const Assembly& a, const Eigen::VectorXd& lambda, int t) {
  const DofLayout& L = a.layout;
  const auto edges = element_edges(a, t);
  Eigen::VectorXd l(3 * L.nf);
  for (int i = 0; i < 3; ++i) l.segment(i * L.nf, L.nf) = lambda.segment(L.lambda(edges[i]), L.nf);
  return l;
}

}  // namespace detail

/// Condensed (trace) matrix on the interior lambda dofs.
inline Eigen::SparseMatrix<double> condensed_matrix(const Assembly& a) {
  return detail::build_condensed(a, detail::condense_all(a)).H;
}

/// Solves the hybridized system for lambda and recovers (q, u) element by element.
inline FieldTriple solve_hybridized(const Assembly& a) {
  const DofLayout& L = a.layout;
  const auto loc = detail::condense_all(a);
  const auto sys = detail::build_condensed(a, loc);
  Eigen::VectorXd lambda = a.g;
  if (L.num_interior > 0) {
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(sys.H);
    if (ldlt.info() != Eigen::Success || (ldlt.vectorD().array() <= 0.0).any())
      throw SingularSystem("condensed system is not positive definite");
    const Eigen::VectorXd x = ldlt.solve(sys.rhs);
    for (int d = 0; d < L.num_lambda(); ++d)
      if (L.interior[d] >= 0) lambda(d) = x(L.interior[d]);
  }
  FieldTriple s;
  s.space = a.space;
  s.tau = a.tau;
  s.q.resize(L.num_q());
  s.u.resize(L.num_u());
  s.uhat = lambda;
  parallel_for(L.num_triangles, [&](int t) {
    const Eigen::VectorXd x = loc[t].X * detail::element_lambda(a, lambda, t) + loc[t].y;
    s.q.segment(L.q(t), L.nv) = x.head(L.nv);
    s.u.segment(L.u(t), L.nw) = x.tail(L.nw);
  });
  return s;
}

// ------------------------------------------------------------ global saddle system

/// Symmetric global system in the unknowns (q, u, lambda). The u rows are negated and the
/// boundary lambda rows are replaced by the identity with the data moved to the right.
struct SaddleSystem {
  Eigen::SparseMatrix<double> matrix;
  Eigen::VectorXd rhs;
};

inline SaddleSystem saddle_system(const Assembly& a) {
  const DofLayout& L = a.layout;
  const int oq = 0, ou = L.num_q(), ol = L.num_q() + L.num_u();
  const int n = ol + L.num_lambda();
  std::vector<Eigen::Triplet<double>> trip;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  auto add = [&](int row, int col, double v) {
    if (v != 0.0) trip.emplace_back(row, col, v);
  };
  auto boundary = [&](int d) { return L.interior[d] < 0; };
  for (int t = 0; t < L.num_triangles; ++t) {
    const LocalBlocks& b = a.blocks[t];
    const auto edges = a.mesh->triangle_edges(t);
    const int q0 = oq + L.q(t), u0 = ou + L.u(t);
    for (int i = 0; i < L.nv; ++i) {
      for (int j = 0; j < L.nv; ++j) add(q0 + i, q0 + j, b.A(i, j));
      for (int j = 0; j < L.nw; ++j) {
        add(q0 + i, u0 + j, -b.B(j, i));
        add(u0 + j, q0 + i, -b.B(j, i));
      }
    }
    for (int i = 0; i < L.nw; ++i) {
      for (int j = 0; j < L.nw; ++j) add(u0 + i, u0 + j, -(b.R(i, j) + b.Sww(i, j)));
      rhs(u0 + i) -= b.F(i);
    }
    for (int e = 0; e < 3; ++e)
      for (int m = 0; m < L.nf; ++m) {
        const int d = L.lambda(edges[e]) + m, lc = e * L.nf + m;
        if (boundary(d)) {
          for (int i = 0; i < L.nv; ++i) rhs(q0 + i) -= b.C(i, lc) * a.g(d);
          for (int i = 0; i < L.nw; ++i) rhs(u0 + i) -= b.Swm(i, lc) * a.g(d);
          continue;
        }
        for (int i = 0; i < L.nv; ++i) {
          add(q0 + i, ol + d, b.C(i, lc));
          add(ol + d, q0 + i, b.C(i, lc));
        }
        for (int i = 0; i < L.nw; ++i) {
          add(u0 + i, ol + d, b.Swm(i, lc));
          add(ol + d, u0 + i, b.Swm(i, lc));
        }
        for (int f = 0; f < 3; ++f)
          for (int m2 = 0; m2 < L.nf; ++m2) {
            const int d2 = L.lambda(edges[f]) + m2;
            const double v = -b.Smm(lc, f * L.nf + m2);
            if (boundary(d2))
              rhs(ol + d) -= v * a.g(d2);
            else
              add(ol + d, ol + d2, v);
          }
      }
  }
  for (int d = 0; d < L.num_lambda(); ++d)
    if (boundary(d)) {
      trip.emplace_back(ol + d, ol + d, 1.0);
      rhs(ol + d) = a.g(d);
    }
  SaddleSystem s;
  s.matrix.resize(n, n);
  s.matrix.setFromTriplets(trip.begin(), trip.end());
  s.rhs = rhs;
  return s;
}

/// Direct solve of the unreduced system.
inline FieldTriple solve_saddle(const Assembly& a) {
  const DofLayout& L = a.layout;
  const SaddleSystem sys = saddle_system(a);
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.analyzePattern(sys.matrix);
  lu.factorize(sys.matrix);
  if (lu.info() != Eigen::Success) throw SingularSystem("saddle system is singular");
  const Eigen::VectorXd x = lu.solve(sys.rhs);
  FieldTriple s;
  s.space = a.space;
  s.tau = a.tau;
  s.q = x.head(L.num_q());
  s.u = x.segment(L.num_q(), L.num_u());
  s.uhat = x.tail(L.num_lambda());
  return s;
}

/// Assembles and solves by hybridization.
inline FieldTriple solve(const Mesh& mesh, const SpaceDescriptor& space, const ProblemData& data,
                         StabilizationFunction tau = {}, int quad = -1) {
  return solve_hybridized(assemble(mesh, space, data, std::move(tau), quad));
}

// ------------------------------------------------------------ Dirichlet form

/// Reduced form in u alone for the mixed methods: D u = F - ell_g, where D = B G + R and
/// G(u) is the flux with A G + C lambda = B^T u and zero normal jumps on interior edges.
struct DirichletForm {
  Eigen::MatrixXd D;
  Eigen::VectorXd load;   ///< F
  Eigen::VectorXd ell_g;  ///< contribution of the boundary data
};

inline DirichletForm dirichlet_form(const Assembly& a, int max_size = 2000) {
  if (a.space.method == Method::HDG) throw UnsupportedDegree("dirichlet form is defined for RT and BDM");
  const DofLayout& L = a.layout;
  if (L.num_u() > max_size) throw TooLarge("dirichlet form limited to " + std::to_string(max_size) + " u dofs");
  const int nq = L.num_q(), nu = L.num_u(), n = nq + L.num_interior;
  std::vector<Eigen::Triplet<double>> trip;
  Eigen::MatrixXd Bt = Eigen::MatrixXd::Zero(n, nu);
  Eigen::VectorXd lg = Eigen::VectorXd::Zero(n);
  Eigen::MatrixXd Bg = Eigen::MatrixXd::Zero(nu, nq);
  Eigen::MatrixXd R = Eigen::MatrixXd::Zero(nu, nu);
  Eigen::VectorXd F(nu);
  for (int t = 0; t < L.num_triangles; ++t) {
    const LocalBlocks& b = a.blocks[t];
    const auto edges = a.mesh->triangle_edges(t);
    const int q0 = L.q(t), u0 = L.u(t);
    for (int i = 0; i < L.nv; ++i)
      for (int j = 0; j < L.nv; ++j) trip.emplace_back(q0 + i, q0 + j, b.A(i, j));
    Bt.block(q0, u0, L.nv, L.nw) = b.B.transpose();
    Bg.block(u0, q0, L.nw, L.nv) = b.B;
    R.block(u0, u0, L.nw, L.nw) = b.R;
    F.segment(u0, L.nw) = b.F;
    for (int e = 0; e < 3; ++e)
      for (int m = 0; m < L.nf; ++m) {
        const int d = L.lambda(edges[e]) + m, row = L.interior[d];
        for (int i = 0; i < L.nv; ++i) {
          if (row >= 0) {
            trip.emplace_back(q0 + i, nq + row, b.C(i, e * L.nf + m));
            trip.emplace_back(nq + row, q0 + i, b.C(i, e * L.nf + m));
          } else {
            lg(q0 + i) -= b.C(i, e * L.nf + m) * a.g(d);
          }
        }
      }
  }
  Eigen::SparseMatrix<double> S(n, n);
  S.setFromTriplets(trip.begin(), trip.end());
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(S);
  if (lu.info() != Eigen::Success) throw SingularSystem("flux system is singular");
  const Eigen::MatrixXd G = lu.solve(Bt).topRows(nq);
  const Eigen::VectorXd Lg = lu.solve(lg).head(nq);
  DirichletForm out;
  out.D = Bg * G + R;
  out.load = F;
  out.ell_g = Bg * Lg;
  return out;
}

// ------------------------------------------------------------ evaluation

inline Vec2 eval_flux_field(const Mesh& m, const FieldTriple& s, int t, const Point& x) {
  const LocalSpace& S = local_space(s.space);
  return eval_vector(S, m.map(t), s.q.segment(t * S.nv(), S.nv()), x);
}

inline double eval_potential(const Mesh& m, const FieldTriple& s, int t, const Point& x) {
  const LocalSpace& S = local_space(s.space);
  return eval_scalar(S.w, m.map(t), s.u.segment(t * S.nw(), S.nw()), x);
}

/// Trace variable on global edge e at global parameter r in [0,1].
inline double eval_trace(const Mesh& m, const FieldTriple& s, int e, double r) {
  const int nf = s.space.dim_face();
  return eval_face(s.space.k, s.uhat.segment(e * nf, nf), r, m.edge(e).length);
}

/// Numerical flux q_h . n + tau (u_h - uhat_h) on local edge i of element t, outward normal,
/// at global edge parameter r.
inline double eval_numerical_flux(const Mesh& m, const FieldTriple& s, int t, int i, double r) {
  const int e = m.triangle_edge(t, i);
  const Edge& E = m.edge(e);
  const Point x = (1 - r) * m.vertices()[E.vertices[0]] + r * m.vertices()[E.vertices[1]];
  double v = eval_flux_field(m, s, t, x).dot(m.map(t).normal[i]);
  if (s.space.method == Method::HDG) {
    const double ti = s.tau[t][i];
    if (ti != 0.0) v += ti * (eval_potential(m, s, t, x) - eval_trace(m, s, e, r));
  }
  return v;
}

/// Signed defect (f - c u_h, 1)_K - <qhat . n, 1>_dK on element t, integrated with the rules of qc.
inline double element_balance(const Mesh& m, const FieldTriple& s, const ProblemData& d, int t,
                              const QuadratureChoice& qc) {
  const Rule2D& r = triangle_rule(qc.triangle);
  const Rule1D& g = gauss_legendre(qc.edge_points);
  const ElementMap& K = m.map(t);
  double vol = 0.0, bnd = 0.0;
  for (std::size_t q = 0; q < r.points.size(); ++q) {
    const Point x = K.F(r.points[q]);
    vol += r.weights[q] * K.jac * (d.f(x) - detail::reaction(d, x) * eval_potential(m, s, t, x));
  }
  for (int i = 0; i < 3; ++i)
    for (std::size_t q = 0; q < g.points.size(); ++q)
      bnd += g.weights[q] * K.edge_length[i] * eval_numerical_flux(m, s, t, i, g.points[q]);
  return vol - bnd;
}

/// Largest elementwise defect |(f - c u_h, 1)_K - <qhat . n, 1>_dK|, with the assembly quadrature.
inline double conservation_defect(const Mesh& m, const FieldTriple& s, const ProblemData& d, int quad = -1) {
  const QuadratureChoice qc = detail::choose(s.space.k, quad);
  double worst = 0.0;
  for (int t = 0; t < m.num_triangles(); ++t) worst = std::max(worst, std::abs(element_balance(m, s, d, t, qc)));
  return worst;
}

/// Largest L2 norm over interior edges of the sum of the two outward numerical fluxes.
inline double flux_jump(const Mesh& m, const FieldTriple& s) {
  const Rule1D& g = gauss_legendre(s.space.k + 3);
  double worst = 0.0;
  for (const Edge& E : m.edges()) {
    if (E.boundary()) continue;
    double acc = 0.0;
    for (std::size_t q = 0; q < g.points.size(); ++q) {
      const double j = eval_numerical_flux(m, s, E.owner[0], E.local[0], g.points[q]) +
                       eval_numerical_flux(m, s, E.owner[1], E.local[1], g.points[q]);
      acc += g.weights[q] * E.length * j * j;
    }
    worst = std::max(worst, std::sqrt(acc));
  }
  return worst;
}

// ------------------------------------------------------------ projections of exact data

/// (Pi q, Pi u, P_M u) for the method's projection: RT or BDM projection with L2 projection of
/// u, or the HDG projection with the given tau. P_M is the L2 projection onto each edge.
inline FieldTriple interpolate(const Mesh& m, const SpaceDescriptor& space, const StabilizationFunction& tau,
                               const VectorField& q, const ScalarField& u, int quad = -1) {
  const QuadratureChoice qc = detail::choose(space.k, quad);
  const DofLayout L = make_layout(m, space);
  FieldTriple s;
  s.space = space;
  s.tau = tau;
  s.q.resize(L.num_q());
  s.u.resize(L.num_u());
  s.uhat.resize(L.num_lambda());
  parallel_for(m.num_triangles(), [&](int t) {
    const ElementMap& K = m.map(t);
    switch (space.method) {
      case Method::RT:
        s.q.segment(L.q(t), L.nv) = rt_project(q, space.k, K, Route::Reference, qc.triangle);
        s.u.segment(L.u(t), L.nw) = project_scalar(u, space.k, K, qc.triangle);
        break;
      case Method::BDM:
        s.q.segment(L.q(t), L.nv) = bdm_project(q, space.k, K, Route::Reference, qc.triangle);
        s.u.segment(L.u(t), L.nw) = project_scalar(u, space.k - 1, K, qc.triangle);
        break;
      case Method::HDG: {
        const HdgProjection p =
            hdg_project(q, u, space.k, K, tau[t], 1, HdgSolve::Coupled, Route::Reference, qc.triangle);
        s.q.segment(L.q(t), L.nv) = p.q;
        s.u.segment(L.u(t), L.nw) = p.u;
        break;
      }
    }
  });
  for (int e = 0; e < m.num_edges(); ++e) {
    const Edge& E = m.edge(e);
    s.uhat.segment(L.lambda(e), L.nf) =
        project_face(u, space.k, m.vertices()[E.vertices[0]], m.vertices()[E.vertices[1]], qc.edge_points);
  }
  return s;
}

inline FieldTriple interpolate(const Assembly& a, const VectorField& q, const ScalarField& u) {
  return interpolate(*a.mesh, a.space, a.tau, q, u, a.quad_override);
}

// ------------------------------------------------------------ energy identity

/// Both sides of
///   (kappa^-1 e_q, e_q) + <tau (e_u - e_uhat), e_u - e_uhat> + (c e_u, e_u)
///     = (kappa^-1 (Pi q - q), e_q) + (c (Pi u - u), e_u)
/// with e_q = Pi q - q_h, e_u = Pi u - u_h, e_uhat = P_M u - uhat_h.
struct EnergyBalance {
  double lhs = 0.0, rhs = 0.0;
  double residual() const { return std::abs(lhs - rhs); }
};

inline EnergyBalance energy_identity(const Assembly& a, const ProblemData& d, const FieldTriple& sol,
                                     const VectorField& q, const ScalarField& u) {
  const Mesh& m = *a.mesh;
  const FieldTriple P = interpolate(a, q, u);
  FieldTriple err = P;
  err.q -= sol.q;
  err.u -= sol.u;
  err.uhat -= sol.uhat;
  const Rule2D& r = triangle_rule(a.quad.triangle);
  const Rule1D& g = gauss_legendre(a.quad.edge_points);
  std::vector<EnergyBalance> part(m.num_triangles());
  parallel_for(m.num_triangles(), [&](int t) {
    const ElementMap& K = m.map(t);
    EnergyBalance& b = part[t];
    for (std::size_t k = 0; k < r.points.size(); ++k) {
      const Point x = K.F(r.points[k]);
      const double w = r.weights[k] * K.jac, kinv = 1.0 / d.kappa(x), c = detail::reaction(d, x);
      const Vec2 eq = eval_flux_field(m, err, t, x);
      const double eu = eval_potential(m, err, t, x);
      b.lhs += w * (kinv * eq.squaredNorm() + c * eu * eu);
      b.rhs += w * (kinv * (eval_flux_field(m, P, t, x) - q(x)).dot(eq) + c * (eval_potential(m, P, t, x) - u(x)) * eu);
    }
    if (a.space.method != Method::HDG) return;
    for (int i = 0; i < 3; ++i) {
      const double ti = a.tau[t][i];
      if (ti == 0.0) continue;
      const int e = m.triangle_edge(t, i);
      const Edge& E = m.edge(e);
      for (std::size_t k = 0; k < g.points.size(); ++k) {
        const double s = g.points[k];
        const Point x = (1 - s) * m.vertices()[E.vertices[0]] + s * m.vertices()[E.vertices[1]];
        const double j = eval_potential(m, err, t, x) - eval_trace(m, err, e, s);
        b.lhs += g.weights[k] * E.length * ti * j * j;
      }
    }
  });
  EnergyBalance total;
  for (const auto& b : part) {
    total.lhs += b.lhs;
    total.rhs += b.rhs;
  }
  return total;
}

}  // namespace hdgmix
