#pragma once

#include "hdgmix/polynomial.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <vector>

namespace hdgmix {

struct Rule1D {
  std::vector<double> points;  // on [0,1]
  std::vector<double> weights;
};

struct Rule2D {
  std::vector<Point> points;  // on the reference triangle
  std::vector<double> weights;
  int exactness = 0;
};

namespace detail {

inline Rule1D compute_gauss_legendre(int n) {
  Rule1D r;
  r.points.resize(n);
  r.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int j = 2; j <= n; ++j) {
        const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    {
      double p0 = 1.0, p1 = x;
      for (int j = 2; j <= n; ++j) {
        const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
    }
    r.points[n - 1 - i] = 0.5 * (x + 1.0);
    r.weights[n - 1 - i] = 1.0 / ((1.0 - x * x) * dp * dp);
  }
  return r;
}

}  // namespace detail

/// n-point Gauss-Legendre rule on [0,1], exact up to degree 2n-1.
inline const Rule1D& gauss_legendre(int n) {
  static std::mutex m;
  static std::map<int, Rule1D> cache;
  std::lock_guard<std::mutex> lock(m);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, detail::compute_gauss_legendre(n)).first;
  return it->second;
}

/// Collapsed tensor Gauss rule on the reference triangle, exact for degree `exactness`.
/// Points are interior and weights positive.
inline const Rule2D& triangle_rule(int exactness) {
  static std::mutex m;
  static std::map<int, Rule2D> cache;
  {
    std::lock_guard<std::mutex> lock(m);
    auto it = cache.find(exactness);
    if (it != cache.end()) return it->second;
  }
  const int n = std::max(1, (exactness + 3) / 2);
  const Rule1D& g = gauss_legendre(n);
  Rule2D r;
  r.exactness = exactness;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double s = g.points[i], t = g.points[j];
      r.points.emplace_back(s, t * (1.0 - s));
      r.weights.push_back(g.weights[i] * g.weights[j] * (1.0 - s));
    }
  std::lock_guard<std::mutex> lock(m);
  return cache.emplace(exactness, std::move(r)).first->second;
}

}  // namespace hdgmix
