#pragma once

#include "hdgmix/methods.hpp"

namespace hdgmix {

enum class PostprocessScheme { Stenberg, Gradient };

/// Elementwise P_{k+1} field, coefficients in the reference orthonormal basis composed with F^-1.
struct PostprocessedField {
  PostprocessScheme scheme = PostprocessScheme::Stenberg;
  int degree = 1;
  Eigen::VectorXd coeffs;
  bool compatible = true;  ///< flux balance held on every element (Stenberg only)
  double compatibility_defect = 0.0;

  int per_element() const { return static_cast<int>(dim_P(degree, 2)); }
};

inline double eval_postprocessed(const Mesh& m, const PostprocessedField& p, int t, const Point& x) {
  const int n = p.per_element();
  return eval_scalar(scalar_basis(p.degree).functions(), m.map(t), p.coeffs.segment(t * n, n), x);
}

namespace detail {

/// Solves the local problem on the zero-mean part of P_{k+1}(K); the constant coefficient is
/// fixed by the mean of u_h. load returns the volume integrand of the right-hand side against all
/// basis functions, boundary the element's boundary contribution.
template <class Weight, class Load, class Boundary>
PostprocessedField postprocess(const Mesh& m, const FieldTriple& s, PostprocessScheme scheme, int quad, Weight&& weight,
                               Load&& load, Boundary&& boundary) {
  const int deg = s.space.k + 1;
  const auto& basis = scalar_basis(deg).functions();
  const int n = static_cast<int>(basis.size());
  const QuadratureChoice qc = choose(deg, quad);
  const Rule2D& r = triangle_rule(qc.triangle);
  std::vector<Eigen::Matrix<double, Eigen::Dynamic, 2>> grads;
  std::vector<Eigen::VectorXd> vals;
  for (const Point& xh : r.points) {
    Eigen::Matrix<double, Eigen::Dynamic, 2> G(n, 2);
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) {
      G.row(i) = Vec2(basis[i].dx()(xh), basis[i].dy()(xh)).transpose();
      v(i) = basis[i](xh);
    }
    grads.push_back(G);
    vals.push_back(v);
  }
  const double phi0 = basis[0](Point(0, 0));
  PostprocessedField out;
  out.scheme = scheme;
  out.degree = deg;
  out.coeffs.resize(static_cast<Eigen::Index>(n) * m.num_triangles());
  parallel_for(m.num_triangles(), [&](int t) {
    const ElementMap& K = m.map(t);
    Eigen::MatrixXd S = Eigen::MatrixXd::Zero(n, n);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
    double mean = 0.0;
    for (std::size_t q = 0; q < r.points.size(); ++q) {
      const Point x = K.F(r.points[q]);
      const double w = r.weights[q] * K.jac;
      const Eigen::MatrixXd G = grads[q] * K.Binv;
      S.noalias() += (w * weight(x)) * G * G.transpose();
      b += w * load(t, x, vals[q], G);
      mean += w * eval_potential(m, s, t, x);
    }
    b += boundary(t, deg);
    Eigen::VectorXd c(n);
    c(0) = mean / (0.5 * K.jac * phi0);
    if (n > 1) c.tail(n - 1) = S.bottomRightCorner(n - 1, n - 1).ldlt().solve(b.tail(n - 1));
    out.coeffs.segment(static_cast<Eigen::Index>(t) * n, n) = c;
  });
  return out;
}

}  // namespace detail

/// Local Neumann problems (kappa grad u*, grad v)_K = (f - c u_h, v)_K - <qhat . n, v>_dK on the
/// zero-mean part of P_{k+1}(K), with the mean of u* equal to that of u_h. For HDG the boundary
/// flux is the numerical flux. The flag records whether the flux balance held to 1e-9.
inline PostprocessedField stenberg(const Mesh& m, const FieldTriple& s, const ProblemData& d, int quad = -1) {
  const auto& basis = scalar_basis(s.space.k + 1).functions();
  const Rule1D& g = gauss_legendre(detail::choose(s.space.k + 1, quad).edge_points);
  auto weight = [&](const Point& x) {
    const double k = d.kappa(x);
    if (!(k > 0.0)) throw SingularLocalSystem("kappa must be positive");
    return k;
  };
  auto load = [&](int t, const Point& x, const Eigen::VectorXd& v, const Eigen::MatrixXd&) {
    return Eigen::VectorXd((d.f(x) - detail::reaction(d, x) * eval_potential(m, s, t, x)) * v);
  };
  auto boundary = [&](int t, int) {
    const ElementMap& K = m.map(t);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(basis.size()));
    for (int i = 0; i < 3; ++i) {
      const Edge& E = m.edge(m.triangle_edge(t, i));
      for (std::size_t q = 0; q < g.points.size(); ++q) {
        const double r = g.points[q];
        const Point x = (1 - r) * m.vertices()[E.vertices[0]] + r * m.vertices()[E.vertices[1]];
        const Point xh = K.G(x);
        const double w = g.weights[q] * E.length * eval_numerical_flux(m, s, t, i, r);
        for (std::size_t j = 0; j < basis.size(); ++j) b(j) -= w * basis[j](xh);
      }
    }
    return b;
  };
  PostprocessedField p = detail::postprocess(m, s, PostprocessScheme::Stenberg, quad, weight, load, boundary);
  // The balance is checked with the rules the solution was computed with.
  p.compatibility_defect = conservation_defect(m, s, d, quad);
  p.compatible = p.compatibility_defect <= 1e-9;
  return p;
}

/// Local problems (grad u*, grad v)_K = -(kappa^-1 q_h, grad v)_K on the zero-mean part of
/// P_{k+1}(K), with the mean of u* equal to that of u_h.
inline PostprocessedField gradient_postprocess(const Mesh& m, const FieldTriple& s, const ProblemData& d,
                                               int quad = -1) {
  const int n = static_cast<int>(dim_P(s.space.k + 1, 2));
  auto weight = [](const Point&) { return 1.0; };
  auto load = [&](int t, const Point& x, const Eigen::VectorXd&, const Eigen::MatrixXd& G) {
    return Eigen::VectorXd(-(G * eval_flux_field(m, s, t, x)) / d.kappa(x));
  };
  auto boundary = [n](int, int) { return Eigen::VectorXd::Zero(n).eval(); };
  PostprocessedField p = detail::postprocess(m, s, PostprocessScheme::Gradient, quad, weight, load, boundary);
  return p;
}

}  // namespace hdgmix
