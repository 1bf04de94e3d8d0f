#pragma once

#include <Eigen/Dense>

#include <array>
#include <cassert>
#include <cmath>
#include <vector>

namespace hdgmix {

using Point = Eigen::Vector2d;
using Vec2 = Eigen::Vector2d;

/// Number of bivariate monomials of total degree at most n.
inline int monomial_count(int n) { return n < 0 ? 0 : (n + 1) * (n + 2) / 2; }

/// Position of x^a y^b in the graded ordering (by total degree, then by b).
inline int monomial_index(int a, int b) {
  const int d = a + b;
  return d * (d + 1) / 2 + b;
}

/// Bivariate polynomial stored densely in the graded monomial ordering.
class Polynomial {
 public:
  Polynomial() : deg_(0), c_(1, 0.0) {}
  explicit Polynomial(int degree) : deg_(degree), c_(monomial_count(degree), 0.0) {}

  static Polynomial constant(double v) {
    Polynomial p(0);
    p.c_[0] = v;
    return p;
  }

  static Polynomial monomial(int a, int b, double scale = 1.0) {
    Polynomial p(a + b);
    p.c_[monomial_index(a, b)] = scale;
    return p;
  }

  int degree() const { return deg_; }
  double coeff(int a, int b) const {
    return a + b > deg_ ? 0.0 : c_[monomial_index(a, b)];
  }
  double& coeff_ref(int a, int b) { return c_[monomial_index(a, b)]; }
  const std::vector<double>& coeffs() const { return c_; }
  std::vector<double>& coeffs() { return c_; }

  double operator()(double x, double y) const {
    double xp[32], yp[32];
    assert(deg_ < 32);
    xp[0] = yp[0] = 1.0;
    for (int i = 1; i <= deg_; ++i) {
      xp[i] = xp[i - 1] * x;
      yp[i] = yp[i - 1] * y;
    }
    double s = 0.0;
    for (int d = 0; d <= deg_; ++d)
      for (int b = 0; b <= d; ++b) s += c_[monomial_index(d - b, b)] * xp[d - b] * yp[b];
    return s;
  }
  double operator()(const Point& p) const { return (*this)(p.x(), p.y()); }

  Polynomial dx() const {
    Polynomial r(std::max(deg_ - 1, 0));
    for (int d = 1; d <= deg_; ++d)
      for (int b = 0; b < d; ++b) {
        const int a = d - b;
        r.coeff_ref(a - 1, b) += a * c_[monomial_index(a, b)];
      }
    return r;
  }

  Polynomial dy() const {
    Polynomial r(std::max(deg_ - 1, 0));
    for (int d = 1; d <= deg_; ++d)
      for (int b = 1; b <= d; ++b) {
        const int a = d - b;
        r.coeff_ref(a, b - 1) += b * c_[monomial_index(a, b)];
      }
    return r;
  }

  Vec2 gradient(const Point& p) const { return {dx()(p), dy()(p)}; }

  Polynomial& operator+=(const Polynomial& o) {
    if (o.deg_ > deg_) raise_degree(o.deg_);
    for (std::size_t i = 0; i < o.c_.size(); ++i) c_[i] += o.c_[i];
    return *this;
  }
  Polynomial& operator-=(const Polynomial& o) {
    if (o.deg_ > deg_) raise_degree(o.deg_);
    for (std::size_t i = 0; i < o.c_.size(); ++i) c_[i] -= o.c_[i];
    return *this;
  }
  Polynomial& operator*=(double s) {
    for (auto& v : c_) v *= s;
    return *this;
  }

  friend Polynomial operator+(Polynomial a, const Polynomial& b) { return a += b; }
  friend Polynomial operator-(Polynomial a, const Polynomial& b) { return a -= b; }
  friend Polynomial operator*(Polynomial a, double s) { return a *= s; }
  friend Polynomial operator*(double s, Polynomial a) { return a *= s; }

  friend Polynomial operator*(const Polynomial& p, const Polynomial& q) {
    Polynomial r(p.deg_ + q.deg_);
    for (int d1 = 0; d1 <= p.deg_; ++d1)
      for (int b1 = 0; b1 <= d1; ++b1) {
        const double c1 = p.c_[monomial_index(d1 - b1, b1)];
        if (c1 == 0.0) continue;
        for (int d2 = 0; d2 <= q.deg_; ++d2)
          for (int b2 = 0; b2 <= d2; ++b2)
            r.coeff_ref(d1 - b1 + d2 - b2, b1 + b2) += c1 * q.c_[monomial_index(d2 - b2, b2)];
      }
    return r;
  }

  /// Returns p(B x + t) as a polynomial in x.
  Polynomial compose_affine(const Eigen::Matrix2d& B, const Vec2& t) const {
    Polynomial lx(1), ly(1);
    lx.coeff_ref(0, 0) = t(0);
    lx.coeff_ref(1, 0) = B(0, 0);
    lx.coeff_ref(0, 1) = B(0, 1);
    ly.coeff_ref(0, 0) = t(1);
    ly.coeff_ref(1, 0) = B(1, 0);
    ly.coeff_ref(0, 1) = B(1, 1);
    std::vector<Polynomial> px(deg_ + 1), py(deg_ + 1);
    px[0] = py[0] = constant(1.0);
    for (int i = 1; i <= deg_; ++i) {
      px[i] = px[i - 1] * lx;
      py[i] = py[i - 1] * ly;
    }
    Polynomial r(deg_);
    for (int d = 0; d <= deg_; ++d)
      for (int b = 0; b <= d; ++b) {
        const double c = c_[monomial_index(d - b, b)];
        if (c != 0.0) r += (px[d - b] * py[b]) * c;
      }
    return r;
  }

  /// Exact integral over the reference triangle with vertices (0,0), (1,0), (0,1).
  double integrate_reference() const {
    double s = 0.0;
    for (int d = 0; d <= deg_; ++d)
      for (int b = 0; b <= d; ++b) s += c_[monomial_index(d - b, b)] * reference_moment(d - b, b);
    return s;
  }

  /// Integral of x^a y^b over the reference triangle: a! b! / (a+b+2)!.
  static long double reference_moment(int a, int b) {
    long double r = 1.0L;
    for (int i = 1; i <= b; ++i) r *= static_cast<long double>(i) / (a + i);
    return r / ((a + b + 1.0L) * (a + b + 2.0L));
  }

 private:
  void raise_degree(int n) {
    std::vector<double> c(monomial_count(n), 0.0);
    std::copy(c_.begin(), c_.end(), c.begin());
    c_ = std::move(c);
    deg_ = n;
  }

  int deg_;
  std::vector<double> c_;
};

/// Vector-valued polynomial with two components.
struct VectorPolynomial {
  Polynomial x, y;

  Vec2 operator()(const Point& p) const { return {x(p), y(p)}; }
  Polynomial div() const { return x.dx() + y.dy(); }
  int degree() const { return std::max(x.degree(), y.degree()); }
};

}  // namespace hdgmix
