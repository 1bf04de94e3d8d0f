#pragma once

#include "hdgmix/mesh.hpp"
#include "hdgmix/polynomial.hpp"
#include "hdgmix/quadrature.hpp"

#include <functional>
#include <stdexcept>
#include <variant>
#include <vector>

namespace hdgmix {

using ScalarField = std::function<double(const Point&)>;
using VectorField = std::function<Vec2(const Point&)>;
/// Boundary field; receives the local edge index and a point on that edge.
using TraceField = std::function<double(int, const Point&)>;
using AnyField = std::variant<ScalarField, VectorField, TraceField>;

/// Hat (primal) and check (dual) changes of variables.
///   PrimalScalar  u^ = u o F          DualScalar  u_ = |J| u o F
///   PrimalVector  q^ = |J| B^-1 q o F  DualVector  q_ = B^T q o F
///   PrimalTrace   m^ = m o F           DualTrace   m_ = |a| m o F
enum class TransformKind { PrimalScalar, PrimalVector, PrimalTrace, DualScalar, DualVector, DualTrace };

namespace detail {

template <class T>
const T& expect(const AnyField& f) {
  if (!std::holds_alternative<T>(f)) throw std::invalid_argument("field type does not match transform kind");
  return std::get<T>(f);
}

}  // namespace detail

/// Physical field to reference field.
inline AnyField pull_back(const AnyField& field, TransformKind kind, const ElementMap& K) {
  switch (kind) {
    case TransformKind::PrimalScalar: {
      auto u = detail::expect<ScalarField>(field);
      return ScalarField([u, K](const Point& xh) { return u(K.F(xh)); });
    }
    case TransformKind::DualScalar: {
      auto u = detail::expect<ScalarField>(field);
      return ScalarField([u, K](const Point& xh) { return K.jac * u(K.F(xh)); });
    }
    case TransformKind::PrimalVector: {
      auto q = detail::expect<VectorField>(field);
      return VectorField([q, K](const Point& xh) -> Vec2 { return K.jac * (K.Binv * q(K.F(xh))); });
    }
    case TransformKind::DualVector: {
      auto q = detail::expect<VectorField>(field);
      return VectorField([q, K](const Point& xh) -> Vec2 { return K.B.transpose() * q(K.F(xh)); });
    }
    case TransformKind::PrimalTrace: {
      auto m = detail::expect<TraceField>(field);
      return TraceField([m, K](int e, const Point& xh) { return m(e, K.F(xh)); });
    }
    case TransformKind::DualTrace: {
      auto m = detail::expect<TraceField>(field);
      return TraceField([m, K](int e, const Point& xh) { return K.edge_jac[e] * m(e, K.F(xh)); });
    }
  }
  throw std::invalid_argument("unknown transform kind");
}

/// Reference field to physical field; inverse of pull_back.
inline AnyField push_forward(const AnyField& field, TransformKind kind, const ElementMap& K) {
  switch (kind) {
    case TransformKind::PrimalScalar: {
      auto u = detail::expect<ScalarField>(field);
      return ScalarField([u, K](const Point& x) { return u(K.G(x)); });
    }
    case TransformKind::DualScalar: {
      auto u = detail::expect<ScalarField>(field);
      return ScalarField([u, K](const Point& x) { return u(K.G(x)) / K.jac; });
    }
    case TransformKind::PrimalVector: {
      auto q = detail::expect<VectorField>(field);
      return VectorField([q, K](const Point& x) -> Vec2 { return K.B * q(K.G(x)) / K.jac; });
    }
    case TransformKind::DualVector: {
      auto q = detail::expect<VectorField>(field);
      return VectorField([q, K](const Point& x) -> Vec2 { return K.Binv.transpose() * q(K.G(x)); });
    }
    case TransformKind::PrimalTrace: {
      auto m = detail::expect<TraceField>(field);
      return TraceField([m, K](int e, const Point& x) { return m(e, K.G(x)); });
    }
    case TransformKind::DualTrace: {
      auto m = detail::expect<TraceField>(field);
      return TraceField([m, K](int e, const Point& x) { return m(e, K.G(x)) / K.edge_jac[e]; });
    }
  }
  throw std::invalid_argument("unknown transform kind");
}

/// Polynomial sample fields on the physical element.
struct PiolaSamples {
  std::vector<VectorPolynomial> vectors;
  std::vector<Polynomial> scalars;
};

/// Largest residual of the three change-of-variable identities
///   div^ q^ = (div q)_ ,   grad^ u^ = (grad u)_ ,   q^ . n^ = (q . n)_
/// at quadrature points of the reference element and its edges.
inline double verify_operator_identities(const ElementMap& K, const PiolaSamples& samples) {
  double worst = 0.0;
  const Rule2D& rule = triangle_rule(8);
  const Rule1D& g = gauss_legendre(6);
  for (const auto& q : samples.vectors) {
    // q^ = |J| B^-1 q o F, composed exactly as polynomials.
    const Polynomial qx = q.x.compose_affine(K.B, K.b), qy = q.y.compose_affine(K.B, K.b);
    VectorPolynomial qh{K.jac * (K.Binv(0, 0) * qx + K.Binv(0, 1) * qy),
                        K.jac * (K.Binv(1, 0) * qx + K.Binv(1, 1) * qy)};
    const Polynomial divh = qh.div(), div = q.div();
    for (const auto& xh : rule.points)
      worst = std::max(worst, std::abs(divh(xh) - K.jac * div(K.F(xh))));
    for (int e = 0; e < 3; ++e)
      for (double t : g.points) {
        const Point xh = (1 - t) * ReferenceTriangle::edge_start(e) + t * ReferenceTriangle::edge_end(e);
        const double lhs = qh(xh).dot(ReferenceTriangle::normal(e));
        const double rhs = K.edge_jac[e] * q(K.F(xh)).dot(K.normal[e]);
        worst = std::max(worst, std::abs(lhs - rhs));
      }
  }
  for (const auto& u : samples.scalars) {
    const Polynomial uh = u.compose_affine(K.B, K.b);
    const Polynomial ux = u.dx(), uy = u.dy(), uhx = uh.dx(), uhy = uh.dy();
    for (const auto& xh : rule.points) {
      const Point x = K.F(xh);
      const Vec2 rhs = K.B.transpose() * Vec2(ux(x), uy(x));
      worst = std::max(worst, (Vec2(uhx(xh), uhy(xh)) - rhs).cwiseAbs().maxCoeff());
    }
  }
  return worst;
}

}  // namespace hdgmix
