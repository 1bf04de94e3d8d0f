#include "hdgmix/methods.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace hdgmix;

namespace {

Mesh two_triangle_square() {
  std::istringstream in("4 2\n0 0\n1 0\n1 1\n0 1\n0 1 2\n0 2 3\n");
  return parse_mesh(in);
}

/// Smooth problem with variable kappa and reaction: u = sin(pi x) exp(y).
struct Smooth {
  static double u(const Point& p) { return std::sin(M_PI * p.x()) * std::exp(p.y()); }
  static Vec2 grad(const Point& p) {
    return Vec2(M_PI * std::cos(M_PI * p.x()) * std::exp(p.y()), std::sin(M_PI * p.x()) * std::exp(p.y()));
  }
  static double lap(const Point& p) { return (1 - M_PI * M_PI) * u(p); }
  static double kappa(const Point& p) { return 1 + p.x() * p.x() * p.y(); }
  static Vec2 dkappa(const Point& p) { return Vec2(2 * p.x() * p.y(), p.x() * p.x()); }
  static double c(const Point& p) { return 1 + p.x(); }

  static ProblemData data(bool reaction) {
    ProblemData d;
    d.kappa = kappa;
    if (reaction) d.c = c;
    d.f = [reaction](const Point& p) {
      return -dkappa(p).dot(grad(p)) - kappa(p) * lap(p) + (reaction ? c(p) * u(p) : 0.0);
    };
    d.g = u;
    return d;
  }
  static VectorField q() {
    return [](const Point& p) { return Vec2(-kappa(p) * grad(p)); };
  }
};

std::vector<SpaceDescriptor> all_spaces() {
  std::vector<SpaceDescriptor> s;
  for (int k = 0; k <= 3; ++k) s.emplace_back(Method::RT, k);
  for (int k = 1; k <= 3; ++k) s.emplace_back(Method::BDM, k);
  for (int k = 0; k <= 3; ++k) s.emplace_back(Method::HDG, k);
  return s;
}

std::string name(const SpaceDescriptor& s) { return to_string(s.method) + std::to_string(s.k); }

double max_diff(const FieldTriple& a, const FieldTriple& b) {
  return std::max({(a.q - b.q).lpNorm<Eigen::Infinity>(), (a.u - b.u).lpNorm<Eigen::Infinity>(),
                   (a.uhat - b.uhat).lpNorm<Eigen::Infinity>()});
}

Polynomial random_poly(int deg, unsigned seed) {
  std::srand(seed);
  Polynomial p(deg);
  for (int a = 0; a <= deg; ++a)
    for (int b = 0; a + b <= deg; ++b) p.coeff_ref(a, b) = (std::rand() % 200 - 100) / 50.0;
  return p;
}

}  // namespace

TEST(DofLayout, TwoTrianglesLowestOrder) {
  const Mesh m = two_triangle_square();
  const DofLayout L = make_layout(m, SpaceDescriptor(Method::RT, 0));
  EXPECT_EQ(L.num_q(), 6);
  EXPECT_EQ(L.num_u(), 2);
  EXPECT_EQ(L.num_lambda(), 5);
  EXPECT_EQ(L.num_interior, 1);
}

TEST(DofLayout, Counts) {
  const Mesh m = unit_square(2);
  for (const auto& s : all_spaces()) {
    const DofLayout L = make_layout(m, s);
    EXPECT_EQ(L.num_q(), 16 * s.dim_V()) << name(s);
    EXPECT_EQ(L.num_u(), 16 * s.dim_W()) << name(s);
    EXPECT_EQ(L.num_lambda(), m.num_edges() * (s.k + 1)) << name(s);
    EXPECT_EQ(L.num_interior, (m.num_edges() - 8) * (s.k + 1)) << name(s);
  }
}

TEST(Assembly, SaddleSystemIsSymmetric) {
  const Mesh m = unit_square(1);
  const ProblemData d = Smooth::data(true);
  for (const auto& s : all_spaces()) {
    const SaddleSystem sys = saddle_system(assemble(m, s, d));
    const Eigen::SparseMatrix<double> T = sys.matrix.transpose();
    EXPECT_LT((sys.matrix - T).norm(), 1e-12 * sys.matrix.norm()) << name(s);
  }
}

TEST(Assembly, RejectsNonPositiveDiffusion) {
  ProblemData d = Smooth::data(false);
  d.kappa = [](const Point& p) { return p.x() - 0.5; };
  EXPECT_THROW(assemble(unit_square(1), SpaceDescriptor(Method::RT, 0), d), NonPositiveDiffusion);
}

TEST(Assembly, RejectsZeroStabilization) {
  const Mesh m = unit_square(1);
  EXPECT_THROW(StabilizationFunction::constant(m, 0.0), InvalidStabilization);
  EXPECT_THROW(StabilizationFunction::constant(m, -1.0), InvalidStabilization);
}

TEST(Solve, HybridizedMatchesSaddle) {
  const Mesh m = unit_square(2);
  const ProblemData d = Smooth::data(true);
  for (const auto& s : all_spaces()) {
    const Assembly a = assemble(m, s, d);
    EXPECT_LT(max_diff(solve_hybridized(a), solve_saddle(a)), 1e-8) << name(s);
  }
}

TEST(Solve, HybridizedMatchesSaddleSingleFace) {
  const Mesh m = unit_square(2);
  const ProblemData d = Smooth::data(false);
  for (int k = 0; k <= 3; ++k) {
    const Assembly a = assemble(m, SpaceDescriptor(Method::HDG, k), d, StabilizationFunction::single_face(m, 3.0));
    EXPECT_LT(max_diff(solve_hybridized(a), solve_saddle(a)), 1e-8) << k;
  }
}

TEST(Solve, CondensedMatrixIsSymmetricPositiveDefinite) {
  const Mesh m = unit_square(2);
  const ProblemData d = Smooth::data(true);
  for (const auto& s : all_spaces()) {
    const Eigen::MatrixXd H = Eigen::MatrixXd(condensed_matrix(assemble(m, s, d)));
    EXPECT_LT((H - H.transpose()).norm(), 1e-12 * H.norm()) << name(s);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
    EXPECT_GT(es.eigenvalues().minCoeff(), 0.0) << name(s);
  }
}

TEST(Solve, Deterministic) {
  const Mesh m = uniform_refine(unit_square(4));
  const ProblemData d = Smooth::data(true);
  for (Method meth : {Method::RT, Method::HDG}) {
    const SpaceDescriptor s(meth, 1);
    const FieldTriple a = solve(m, s, d), b = solve(m, s, d);
    EXPECT_EQ(a.q, b.q);
    EXPECT_EQ(a.u, b.u);
    EXPECT_EQ(a.uhat, b.uhat);
  }
}

// When the exact solution belongs to the discrete spaces, the discrete solution equals the
// projection of the exact one.
TEST(Solve, ReproducesSolutionsInTheSpace) {
  const Mesh m = unit_square(2);
  for (const auto& s : all_spaces()) {
    // RT_k and P_k^2 contain grad of P_{k+1}; HDG needs u in P_k.
    const int deg = s.method == Method::HDG ? s.k : s.k + 1;
    const Polynomial up = random_poly(deg, 11 + s.k);
    const Polynomial ux = up.dx(), uy = up.dy();
    const Polynomial lap = ux.dx() + uy.dy();
    ProblemData d;
    d.f = [lap](const Point& p) { return -lap(p); };
    d.g = [up](const Point& p) { return up(p); };
    const VectorField q = [ux, uy](const Point& p) { return Vec2(-ux(p), -uy(p)); };
    const Assembly a = assemble(m, s, d);
    const FieldTriple h = solve_hybridized(a);
    const FieldTriple P = interpolate(a, q, d.g);
    EXPECT_LT(max_diff(h, P), 1e-10) << name(s);
  }
}

TEST(Solve, HdgReproducesWithReaction) {
  const Mesh m = unit_square(2);
  for (int k = 1; k <= 3; ++k) {
    const Polynomial up = random_poly(k, 5 + k);
    const Polynomial ux = up.dx(), uy = up.dy();
    const Polynomial lap = ux.dx() + uy.dy();
    ProblemData d;
    d.c = [](const Point& p) { return 2 + p.y(); };
    d.f = [=](const Point& p) { return -lap(p) + (2 + p.y()) * up(p); };
    d.g = [up](const Point& p) { return up(p); };
    const VectorField q = [ux, uy](const Point& p) { return Vec2(-ux(p), -uy(p)); };
    const StabilizationFunction tau = StabilizationFunction::single_face(m);
    const Assembly a = assemble(m, SpaceDescriptor(Method::HDG, k), d, tau);
    EXPECT_LT(max_diff(solve_hybridized(a), interpolate(a, q, d.g)), 1e-10) << k;
  }
}

TEST(Solve, ConservationAndFluxContinuity) {
  const Mesh m = unit_square(2);
  const ProblemData d = Smooth::data(true);
  for (const auto& s : all_spaces()) {
    const FieldTriple h = solve(m, s, d);
    EXPECT_LT(conservation_defect(m, h, d), 1e-10) << name(s);
    EXPECT_LT(flux_jump(m, h), 1e-10) << name(s);
  }
}

TEST(Solve, EnergyIdentity) {
  const Mesh m = unit_square(2);
  const ProblemData d = Smooth::data(true);
  for (const auto& s : all_spaces()) {
    const Assembly a = assemble(m, s, d, {}, 24);
    const FieldTriple h = solve_hybridized(a);
    const EnergyBalance e = energy_identity(a, d, h, Smooth::q(), Smooth::u);
    EXPECT_GT(e.lhs, 0.0) << name(s);
    EXPECT_LT(e.residual(), 1e-9 * std::max(1.0, e.lhs)) << name(s) << " lhs " << e.lhs << " rhs " << e.rhs;
  }
}

TEST(Solve, EnergyIdentitySingleFace) {
  const Mesh m = unit_square(2);
  const ProblemData d = Smooth::data(false);
  for (int k = 0; k <= 3; ++k) {
    const Assembly a = assemble(m, SpaceDescriptor(Method::HDG, k), d, StabilizationFunction::single_face(m, 2.0), 24);
    const EnergyBalance e = energy_identity(a, d, solve_hybridized(a), Smooth::q(), Smooth::u);
    EXPECT_LT(e.residual(), 1e-9 * std::max(1.0, e.lhs)) << k;
  }
}

TEST(DirichletForm, SymmetricPositiveDefiniteAndConsistent) {
  const Mesh m = unit_square(2);
  const ProblemData d = Smooth::data(true);
  for (const auto& s : all_spaces()) {
    if (s.method == Method::HDG) continue;
    const Assembly a = assemble(m, s, d);
    const DirichletForm D = dirichlet_form(a);
    EXPECT_LT((D.D - D.D.transpose()).norm(), 1e-10 * D.D.norm()) << name(s);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (D.D + D.D.transpose()));
    EXPECT_GT(es.eigenvalues().minCoeff(), 0.0) << name(s);
    const FieldTriple h = solve_hybridized(a);
    EXPECT_LT((D.D * h.u - (D.load - D.ell_g)).norm(), 1e-9 * D.load.norm()) << name(s);
  }
}

TEST(DirichletForm, Limits) {
  const Mesh m = unit_square(2);
  const ProblemData d = Smooth::data(false);
  EXPECT_THROW(dirichlet_form(assemble(m, SpaceDescriptor(Method::HDG, 1), d)), UnsupportedDegree);
  EXPECT_THROW(dirichlet_form(assemble(m, SpaceDescriptor(Method::RT, 0), d), 10), TooLarge);
}

// Hybridization of a mixed method reproduces the mixed method posed on the subspace of
// fields with continuous normal component.
TEST(Solve, MixedFormOnDivConformingSubspace) {
  const Mesh m = unit_square(1);
  const ProblemData d = Smooth::data(true);
  for (const auto& s : all_spaces()) {
    if (s.method == Method::HDG) continue;
    const Assembly a = assemble(m, s, d);
    const DofLayout& L = a.layout;
    const int nq = L.num_q(), nu = L.num_u();
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(nq, nq), B = Eigen::MatrixXd::Zero(nu, nq),
                    R = Eigen::MatrixXd::Zero(nu, nu);
    Eigen::MatrixXd Ci = Eigen::MatrixXd::Zero(nq, L.num_interior);
    Eigen::VectorXd F(nu), cg = Eigen::VectorXd::Zero(nq);
    for (int t = 0; t < L.num_triangles; ++t) {
      const auto& b = a.blocks[t];
      A.block(L.q(t), L.q(t), L.nv, L.nv) = b.A;
      B.block(L.u(t), L.q(t), L.nw, L.nv) = b.B;
      R.block(L.u(t), L.u(t), L.nw, L.nw) = b.R;
      F.segment(L.u(t), L.nw) = b.F;
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < L.nf; ++j) {
          const int dof = L.lambda(m.triangle_edge(t, i)) + j;
          const Eigen::VectorXd col = b.C.col(i * L.nf + j);
          if (L.interior[dof] >= 0)
            Ci.block(L.q(t), L.interior[dof], L.nv, 1) += col;
          else
            cg.segment(L.q(t), L.nv) += col * a.g(dof);
        }
    }
    const Eigen::MatrixXd N = Eigen::FullPivLU<Eigen::MatrixXd>(Ci.transpose()).kernel();
    const int nz = static_cast<int>(N.cols());
    Eigen::MatrixXd M(nz + nu, nz + nu);
    M << N.transpose() * A * N, -(B * N).transpose(), -B * N, -R;
    Eigen::VectorXd rhs(nz + nu);
    rhs << -N.transpose() * cg, -F;
    const Eigen::VectorXd x = M.fullPivLu().solve(rhs);
    const FieldTriple h = solve_hybridized(a);
    EXPECT_LT((N * x.head(nz) - h.q).lpNorm<Eigen::Infinity>(), 1e-9) << name(s);
    EXPECT_LT((x.tail(nu) - h.u).lpNorm<Eigen::Infinity>(), 1e-9) << name(s);
  }
}
