#include "hdgmix/polyspaces.hpp"
#include "hdgmix/quadrature.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace hdgmix;

namespace {

double ref_inner(const Polynomial& a, const Polynomial& b) { return (a * b).integrate_reference(); }

/// Coefficients of p in the graded monomial basis up to degree n.
Eigen::VectorXd monomial_coeffs(const Polynomial& p, int n) {
  Eigen::VectorXd c = Eigen::VectorXd::Zero(monomial_count(n));
  for (int i = 0; i < std::min<int>(c.size(), p.coeffs().size()); ++i) c(i) = p.coeffs()[i];
  return c;
}

Eigen::VectorXd vec_coeffs(const VectorPolynomial& q, int n) {
  Eigen::VectorXd c(2 * monomial_count(n));
  c << monomial_coeffs(q.x, n), monomial_coeffs(q.y, n);
  return c;
}

/// Least-squares residual of representing each column of `target` in the span of `basis`.
double span_residual(const Eigen::MatrixXd& basis, const Eigen::MatrixXd& target) {
  const auto qr = basis.colPivHouseholderQr();
  return (basis * qr.solve(target) - target).norm();
}

int rank(const Eigen::MatrixXd& A, double tol = 1e-10) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A);
  const auto& s = svd.singularValues();
  return static_cast<int>((s.array() > tol * std::max(1.0, s(0))).count());
}

}  // namespace

TEST(Dimensions, Formulas) {
  EXPECT_EQ(dim_RT(0, 2), 3);
  EXPECT_EQ(dim_RT(1, 2), 8);
  EXPECT_EQ(dim_RT(2, 2), 15);
  for (int k = 0; k <= 3; ++k) {
    EXPECT_EQ(dim_P(k, 2), (k + 1) * (k + 2) / 2);
    EXPECT_EQ(dim_R(k, 2), 3 * (k + 1));
    EXPECT_EQ(dim_N(k, 2), dim_RT(k, 2));
    EXPECT_EQ(static_cast<long>(vector_basis(VectorSpaceKind::RaviartThomas, k).size()), dim_RT(k, 2));
    EXPECT_EQ(static_cast<long>(vector_basis(VectorSpaceKind::Nedelec, k).size()), dim_N(k, 2));
    // RT: dim RT_k = dim P_{k-1}^2 + dim R_k.
    EXPECT_EQ(dim_RT(k, 2), 2 * dim_P(k - 1, 2) + dim_R(k, 2));
    // HDG: dim P_k^2 + dim P_k = dim P_{k-1}^2 + dim P_{k-1} + dim R_k.
    EXPECT_EQ(3 * dim_P(k, 2), 3 * dim_P(k - 1, 2) + dim_R(k, 2));
  }
  // Nedelec dimensions in 3D: (k+1)(k+3)(k+4)/2.
  for (int k = 0; k <= 3; ++k) EXPECT_EQ(dim_N(k, 3), (k + 1) * (k + 3) * (k + 4) / 2);
}

TEST(Dimensions, BdmCount) {
  // dim N_{k-1} + dim R_{k+1} = dim P_{k+1}^2.
  for (int k = 0; k <= 2; ++k) EXPECT_EQ(dim_N(k - 1, 2) + dim_R(k + 1, 2), dim_BDM(k + 1, 2));
  for (int k = 0; k <= 2; ++k)
    EXPECT_EQ(static_cast<long>(vector_basis(VectorSpaceKind::Nedelec, k - 1).size()) + 3 * (k + 2), 2 * dim_P(k + 1, 2));
}

TEST(Quadrature, MonomialExactness) {
  for (int m : {0, 1, 4, 7, 10, 14}) {
    const Rule2D& r = triangle_rule(m);
    for (double w : r.weights) EXPECT_GT(w, 0.0);
    for (const auto& p : r.points) {
      EXPECT_GT(p.x(), 0.0);
      EXPECT_GT(p.y(), 0.0);
      EXPECT_LT(p.x() + p.y(), 1.0);
    }
    for (int a = 0; a <= m; ++a)
      for (int b = 0; a + b <= m; ++b) {
        double s = 0.0;
        for (std::size_t q = 0; q < r.points.size(); ++q)
          s += r.weights[q] * std::pow(r.points[q].x(), a) * std::pow(r.points[q].y(), b);
        EXPECT_NEAR(s, static_cast<double>(Polynomial::reference_moment(a, b)), 1e-13) << a << " " << b;
      }
  }
}

TEST(Quadrature, GaussLegendreExactness) {
  for (int n = 1; n <= 10; ++n) {
    const Rule1D& g = gauss_legendre(n);
    for (int p = 0; p <= 2 * n - 1; ++p) {
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += g.weights[i] * std::pow(g.points[i], p);
      EXPECT_NEAR(s, 1.0 / (p + 1), 1e-14);
    }
  }
}

TEST(ScalarBasis, Orthonormal) {
  for (int k = 0; k <= 3; ++k) {
    const auto& B = scalar_basis(k);
    ASSERT_EQ(B.size(), dim_P(k, 2));
    for (int i = 0; i < B.size(); ++i)
      for (int j = 0; j < B.size(); ++j) EXPECT_NEAR(ref_inner(B[i], B[j]), i == j ? 1.0 : 0.0, 1e-12);
  }
}

TEST(Orthocomplement, KZeroIsConstant) {
  const auto c = orthocomplement_basis(0);
  ASSERT_EQ(c.size(), 1u);
  EXPECT_NEAR(c[0](0.2, 0.3), 1.0 / std::sqrt(0.5), 1e-14);
  EXPECT_NEAR(c[0](0.7, 0.1), c[0](0.0, 0.0), 1e-14);
}

TEST(Orthocomplement, KOneZeroMean) {
  const auto c = orthocomplement_basis(1);
  ASSERT_EQ(c.size(), 2u);
  // Oracle: Gram-Schmidt of x and y against 1 gives x - 1/3 and y - 1/3 combinations.
  for (const auto& p : c) {
    EXPECT_NEAR(p.integrate_reference(), 0.0, 1e-13);
    EXPECT_NEAR(p.coeff(0, 0) + p.coeff(1, 0) / 3.0 + p.coeff(0, 1) / 3.0, 0.0, 1e-13);
  }
}

TEST(Orthocomplement, OrthogonalToLowerDegree) {
  for (int k = 0; k <= 3; ++k) {
    const auto c = orthocomplement_basis(k);
    EXPECT_EQ(static_cast<int>(c.size()), k + 1);
    for (const auto& p : c)
      for (int d = 0; d < k; ++d)
        for (int b = 0; b <= d; ++b) {
          // Quadrature oracle independent of the exact moment formula.
          const Rule2D& r = triangle_rule(2 * k);
          double s = 0.0;
          for (std::size_t q = 0; q < r.points.size(); ++q)
            s += r.weights[q] * p(r.points[q]) * std::pow(r.points[q].x(), d - b) * std::pow(r.points[q].y(), b);
          EXPECT_NEAR(s, 0.0, 1e-12);
        }
  }
  // k = 2: x*y is of degree two, so it is not orthogonal in general; check against P_1 instead.
  for (const auto& p : orthocomplement_basis(2)) EXPECT_NEAR(ref_inner(p, Polynomial::monomial(1, 0)), 0.0, 1e-12);
}

TEST(VectorBasis, RtNesting) {
  for (int k = 0; k <= 3; ++k) {
    const int n = k + 1;
    const auto rt = vector_basis(VectorSpaceKind::RaviartThomas, k);
    const auto pk = vector_basis(VectorSpaceKind::Full, k);
    const auto pk1 = vector_basis(VectorSpaceKind::Full, k + 1);
    Eigen::MatrixXd Rt(2 * monomial_count(n), rt.size()), Pk(Rt.rows(), pk.size()), Pk1(Rt.rows(), pk1.size());
    for (std::size_t i = 0; i < rt.size(); ++i) Rt.col(i) = vec_coeffs(rt[i], n);
    for (std::size_t i = 0; i < pk.size(); ++i) Pk.col(i) = vec_coeffs(pk[i], n);
    for (std::size_t i = 0; i < pk1.size(); ++i) Pk1.col(i) = vec_coeffs(pk1[i], n);
    EXPECT_LT(span_residual(Rt, Pk), 1e-10);
    EXPECT_LT(span_residual(Pk1, Rt), 1e-10);
    EXPECT_EQ(rank(Rt), dim_RT(k, 2));
  }
}

TEST(VectorBasis, NedelecIsRotatedRt) {
  for (int k = 0; k <= 3; ++k) {
    const auto rt = vector_basis(VectorSpaceKind::RaviartThomas, k);
    const auto ne = vector_basis(VectorSpaceKind::Nedelec, k);
    const int n = k + 1;
    Eigen::MatrixXd N(2 * monomial_count(n), ne.size()), Rrot(N.rows(), rt.size());
    for (std::size_t i = 0; i < ne.size(); ++i) N.col(i) = vec_coeffs(ne[i], n);
    for (std::size_t i = 0; i < rt.size(); ++i) Rrot.col(i) = vec_coeffs({-1.0 * rt[i].y, rt[i].x}, n);
    EXPECT_LT(span_residual(N, Rrot), 1e-10);
    // N_k: P_k^2 plus homogeneous degree-(k+1) fields orthogonal to the position vector.
    for (const auto& q : ne) {
      const Polynomial xq = Polynomial::monomial(1, 0) * q.x + Polynomial::monomial(0, 1) * q.y;
      for (int b = 0; b <= k + 2; ++b) EXPECT_NEAR(xq.coeff(k + 2 - b, b), 0.0, 1e-10);
    }
  }
}

TEST(BoundaryDecomposition, FullRankAndOrthogonal) {
  for (int k = 0; k <= 3; ++k) {
    const auto r = boundary_decomposition_check(k);
    EXPECT_EQ(r.expected_rank, 3 * (k + 1));
    EXPECT_EQ(r.rank, 3 * (k + 1)) << k;
    EXPECT_GT(r.min_singular_value, 1e-8);
    EXPECT_LT(r.max_cross_gram, 1e-11);
  }
}

TEST(BoundaryDecomposition, KZeroSvdOracle) {
  // k = 0: trace of the constant and normal traces of (1,0), (0,1), as edge coefficient vectors.
  Eigen::Matrix3d T;
  for (int e = 0; e < 3; ++e) {
    const double s = std::sqrt(ReferenceTriangle::edge_length(e));
    T(e, 0) = s;
    T(e, 1) = s * ReferenceTriangle::normal(e).x();
    T(e, 2) = s * ReferenceTriangle::normal(e).y();
  }
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(T);
  EXPECT_GT(svd.singularValues().minCoeff(), 0.1);
}

TEST(DivergenceSurjectivity, Residual) {
  for (int k = 0; k <= 3; ++k) EXPECT_LT(divergence_surjectivity_check(k), 1e-10);
}

TEST(DivergenceSurjectivity, EulerIdentity) {
  // div(m/2) = 1 and div(u_j m/(j+2)) = u_j for homogeneous u_j.
  const Polynomial x = Polynomial::monomial(1, 0), y = Polynomial::monomial(0, 1);
  VectorPolynomial half{0.5 * x, 0.5 * y};
  EXPECT_NEAR(half.div()(0.3, 0.4), 1.0, 1e-15);
  const Polynomial u = Polynomial::monomial(2, 1) + 3.0 * Polynomial::monomial(0, 3);
  VectorPolynomial p{(1.0 / 5) * (u * x), (1.0 / 5) * (u * y)};
  EXPECT_NEAR(p.div()(0.3, 0.7), u(0.3, 0.7), 1e-14);
}

TEST(Lemma21, TraceOnHypotenuseDeterminesComplement) {
  // u in P_k^perp with u = 0 on the hypotenuse must vanish: the trace map has full column rank.
  const Rule1D& g = gauss_legendre(8);
  for (int k = 0; k <= 3; ++k) {
    const auto c = orthocomplement_basis(k);
    Eigen::MatrixXd T(g.points.size(), c.size());
    for (std::size_t q = 0; q < g.points.size(); ++q)
      for (std::size_t j = 0; j < c.size(); ++j) T(q, j) = c[j](1 - g.points[q], g.points[q]);
    EXPECT_EQ(rank(T), k + 1);
  }
}

TEST(Lemma21, NormalTraceOfVectorComplement) {
  for (int k = 0; k <= 3; ++k) {
    const auto c = orthocomplement_basis(k);
    Eigen::MatrixXd T(3 * (k + 1), 2 * c.size());
    for (std::size_t i = 0; i < c.size(); ++i)
      for (int comp = 0; comp < 2; ++comp)
        T.col(2 * i + comp) = detail::reference_trace(
            k, [&](int e, const Point& x) { return c[i](x) * ReferenceTriangle::normal(e)(comp); });
    EXPECT_EQ(rank(T), 2 * (k + 1));
  }
}

TEST(Prop23, DivergenceFreeRtIsPolynomial) {
  for (int k = 0; k <= 3; ++k) {
    const auto rt = vector_basis(VectorSpaceKind::RaviartThomas, k);
    const int n = k + 1;
    Eigen::MatrixXd D(monomial_count(k), rt.size()), C(2 * monomial_count(n), rt.size());
    for (std::size_t j = 0; j < rt.size(); ++j) {
      D.col(j) = monomial_coeffs(rt[j].div(), k);
      C.col(j) = vec_coeffs(rt[j], n);
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(D);
    const Eigen::MatrixXd Z = lu.kernel();
    // Top-degree part of every divergence-free field must vanish.
    const Eigen::MatrixXd fields = C * Z;
    for (int b = 0; b <= n; ++b) {
      EXPECT_LT(fields.row(monomial_index(n - b, b)).norm(), 1e-10);
      EXPECT_LT(fields.row(monomial_count(n) + monomial_index(n - b, b)).norm(), 1e-10);
    }
  }
}

TEST(FaceBasis, Orthonormal) {
  const Rule1D& g = gauss_legendre(8);
  const double L = 0.37;
  for (int i = 0; i <= 3; ++i)
    for (int j = 0; j <= 3; ++j) {
      double s = 0.0;
      for (std::size_t q = 0; q < g.points.size(); ++q) {
        const auto v = face_basis_values(3, g.points[q], L);
        s += g.weights[q] * L * v(i) * v(j);
      }
      EXPECT_NEAR(s, i == j ? 1.0 : 0.0, 1e-13);
    }
}

TEST(Polynomial, ComposeAffine) {
  std::mt19937 gen(3);
  std::uniform_real_distribution<double> d(-1, 1);
  Polynomial p(3);
  for (auto& c : p.coeffs()) c = d(gen);
  Eigen::Matrix2d B;
  B << d(gen), d(gen), d(gen), d(gen);
  const Vec2 t(d(gen), d(gen));
  const Polynomial pc = p.compose_affine(B, t);
  for (int i = 0; i < 10; ++i) {
    const Point x(d(gen), d(gen));
    EXPECT_NEAR(pc(x), p(B * x + t), 1e-13);
  }
}
