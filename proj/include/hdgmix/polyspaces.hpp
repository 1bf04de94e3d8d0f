#pragma once

#include "hdgmix/errors.hpp"
#include "hdgmix/mesh.hpp"
#include "hdgmix/polynomial.hpp"
#include "hdgmix/quadrature.hpp"

#include <map>
#include <mutex>
#include <vector>

namespace hdgmix {

// ---------------------------------------------------------------- dimensions

inline long binomial(int n, int k) {
  if (k < 0 || n < 0 || k > n) return 0;
  long r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

/// dim P_k in d variables.
inline long dim_P(int k, int d) { return k < 0 ? 0 : binomial(k + d, d); }
/// dim of homogeneous polynomials of degree k in d variables.
inline long dim_homogeneous(int k, int d) { return k < 0 ? 0 : binomial(k + d - 1, d - 1); }
/// dim of the face space R_k on the boundary of a simplex.
inline long dim_R(int k, int d) { return (d + 1) * dim_P(k, d - 1); }
inline long dim_RT(int k, int d) { return d * dim_P(k, d) + dim_homogeneous(k, d); }
inline long dim_BDM(int k, int d) { return d * dim_P(k, d); }
/// Nedelec first kind N_k.
inline long dim_N(int k, int d) {
  return k < 0 ? 0 : d * dim_P(k, d) + d * dim_homogeneous(k + 1, d) - dim_homogeneous(k + 2, d);
}

// ------------------------------------------------------------ scalar basis

/// Orthonormal basis of P_k on the reference triangle, obtained by Gram-Schmidt
/// on the graded monomials. The first dim P_m functions span P_m for every m <= k,
/// so the trailing k+1 functions span the L2 complement of P_{k-1} in P_k.
class ScalarBasis {
 public:
  explicit ScalarBasis(int k) : k_(k) {
    const int n = monomial_count(k);
    using MatL = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
    MatL G(n, n);
    std::vector<std::pair<int, int>> exps(n);
    for (int d = 0; d <= k; ++d)
      for (int b = 0; b <= d; ++b) exps[monomial_index(d - b, b)] = {d - b, b};
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        G(i, j) = Polynomial::reference_moment(exps[i].first + exps[j].first,
                                               exps[i].second + exps[j].second);
    Eigen::LLT<MatL> llt(G);
    MatL L = llt.matrixL();
    MatL C = L.template triangularView<Eigen::Lower>().solve(MatL::Identity(n, n)).transpose();
    funcs_.reserve(n);
    for (int j = 0; j < n; ++j) {
      Polynomial p(k);
      for (int i = 0; i <= j; ++i) p.coeffs()[i] = static_cast<double>(C(i, j));
      funcs_.push_back(std::move(p));
    }
  }

  int degree() const { return k_; }
  int size() const { return static_cast<int>(funcs_.size()); }
  const Polynomial& operator[](int i) const { return funcs_[i]; }
  const std::vector<Polynomial>& functions() const { return funcs_; }

 private:
  int k_;
  std::vector<Polynomial> funcs_;
};

/// Cached orthonormal scalar basis of P_k on the reference triangle.
inline const ScalarBasis& scalar_basis(int k) {
  static std::mutex m;
  static std::map<int, ScalarBasis> cache;
  std::lock_guard<std::mutex> lock(m);
  auto it = cache.find(k);
  if (it == cache.end()) it = cache.emplace(k, ScalarBasis(k)).first;
  return it->second;
}

/// Basis of the L2 complement of P_{k-1} in P_k on the reference triangle.
inline std::vector<Polynomial> orthocomplement_basis(int k) {
  const auto& B = scalar_basis(k);
  const int first = monomial_count(k - 1);
  return {B.functions().begin() + first, B.functions().end()};
}

// ------------------------------------------------------------ vector bases

enum class VectorSpaceKind { Full, RaviartThomas, Nedelec };

/// Vector polynomial basis on the reference triangle.
///  Full:          P_k x P_k built from the orthonormal scalar basis.
///  RaviartThomas: P_k^2 plus x times the complement of P_{k-1} in P_k.
///  Nedelec:       rotation (-q2, q1) of the RT basis.
inline std::vector<VectorPolynomial> vector_basis(VectorSpaceKind kind, int k) {
  std::vector<VectorPolynomial> out;
  if (k < 0) return out;
  const auto& S = scalar_basis(k);
  const Polynomial zero;
  for (const auto& p : S.functions()) out.push_back({p, zero});
  for (const auto& p : S.functions()) out.push_back({zero, p});
  if (kind == VectorSpaceKind::Full) return out;
  const Polynomial x = Polynomial::monomial(1, 0), y = Polynomial::monomial(0, 1);
  for (const auto& p : orthocomplement_basis(k)) out.push_back({x * p, y * p});
  if (kind == VectorSpaceKind::Nedelec)
    for (auto& q : out) q = {-1.0 * q.y, q.x};
  return out;
}

// -------------------------------------------------------------- face basis

/// Orthonormal Legendre polynomial of degree j on [0,1].
inline double legendre01(int j, double t) {
  const double x = 2.0 * t - 1.0;
  double p0 = 1.0, p1 = x;
  if (j == 0) return 1.0;
  for (int n = 2; n <= j; ++n) {
    const double p2 = ((2.0 * n - 1.0) * x * p1 - (n - 1.0) * p0) / n;
    p0 = p1;
    p1 = p2;
  }
  return std::sqrt(2.0 * j + 1.0) * p1;
}

/// Values of the edge basis of P_k, orthonormal for the measure of an edge of given length.
inline Eigen::VectorXd face_basis_values(int k, double t, double length) {
  Eigen::VectorXd v(k + 1);
  const double s = 1.0 / std::sqrt(length);
  for (int j = 0; j <= k; ++j) v(j) = s * legendre01(j, t);
  return v;
}

// ------------------------------------------------------------- diagnostics

struct BoundaryDecompositionReport {
  double min_singular_value = 0.0;  ///< of the combined trace matrix, normalised
  double max_cross_gram = 0.0;      ///< largest |<R1 u, R2 q>| over orthonormal bases
  int rank = 0;
  int expected_rank = 0;
};

namespace detail {

/// Coefficients of a boundary function in the orthonormal face basis of the reference triangle.
template <class Fn>
Eigen::VectorXd reference_trace(int k, Fn&& f) {
  Eigen::VectorXd c = Eigen::VectorXd::Zero(3 * (k + 1));
  const Rule1D& g = gauss_legendre(k + 4);
  for (int e = 0; e < 3; ++e) {
    const double L = ReferenceTriangle::edge_length(e);
    for (std::size_t q = 0; q < g.points.size(); ++q) {
      const double t = g.points[q];
      const Point x = (1 - t) * ReferenceTriangle::edge_start(e) + t * ReferenceTriangle::edge_end(e);
      c.segment(e * (k + 1), k + 1) += g.weights[q] * L * f(e, x) * face_basis_values(k, t, L);
    }
  }
  return c;
}

}  // namespace detail

/// Checks that R_k on the boundary of the reference triangle splits into the trace of
/// P_k^perp plus the normal trace of (P_k^perp)^2, orthogonally.
inline BoundaryDecompositionReport boundary_decomposition_check(int k) {
  const auto comp = orthocomplement_basis(k);
  const int n = 3 * (k + 1);
  Eigen::MatrixXd T1(n, comp.size()), T2(n, 2 * comp.size());
  for (std::size_t i = 0; i < comp.size(); ++i) {
    const Polynomial& p = comp[i];
    T1.col(i) = detail::reference_trace(k, [&](int, const Point& x) { return p(x); });
    T2.col(2 * i) = detail::reference_trace(
        k, [&](int e, const Point& x) { return p(x) * ReferenceTriangle::normal(e).x(); });
    T2.col(2 * i + 1) = detail::reference_trace(
        k, [&](int e, const Point& x) { return p(x) * ReferenceTriangle::normal(e).y(); });
  }
  BoundaryDecompositionReport r;
  r.expected_rank = n;
  // Orthonormalise each family so the cross Gram measures angles, not scaling.
  auto orth = [](const Eigen::MatrixXd& A) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinU);
    const int rank = static_cast<int>((svd.singularValues().array() > 1e-10 * svd.singularValues()(0)).count());
    return Eigen::MatrixXd(svd.matrixU().leftCols(rank));
  };
  const Eigen::MatrixXd Q1 = orth(T1), Q2 = orth(T2);
  r.max_cross_gram = (Q1.transpose() * Q2).cwiseAbs().maxCoeff();
  Eigen::MatrixXd all(n, Q1.cols() + Q2.cols());
  all << Q1, Q2;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(all);
  r.min_singular_value = svd.singularValues().minCoeff();
  r.rank = static_cast<int>((svd.singularValues().array() > 1e-10).count());
  return r;
}

/// Largest least-squares residual when solving div p = u with p in RT_k, over the
/// orthonormal basis functions u of P_k. Zero means the divergence is onto.
inline double divergence_surjectivity_check(int k) {
  const auto rt = vector_basis(VectorSpaceKind::RaviartThomas, k);
  const int n = monomial_count(k);
  auto coeffs = [n](const Polynomial& p) {
    Eigen::VectorXd c = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < std::min<int>(n, p.coeffs().size()); ++i) c(i) = p.coeffs()[i];
    return c;
  };
  Eigen::MatrixXd D(n, rt.size());
  for (std::size_t j = 0; j < rt.size(); ++j) D.col(j) = coeffs(rt[j].div());
  const auto qr = D.colPivHouseholderQr();
  double worst = 0.0;
  for (const auto& u : scalar_basis(k).functions()) {
    const Eigen::VectorXd rhs = coeffs(u);
    worst = std::max(worst, (D * qr.solve(rhs) - rhs).norm());
  }
  return worst;
}

}  // namespace hdgmix
