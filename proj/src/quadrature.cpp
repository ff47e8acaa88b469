#include "fembem/quadrature.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace fembem {

QuadratureRule gauss_legendre(int n) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: n must be positive");
  QuadratureRule rule;
  rule.degree = 2 * n - 1;
  rule.p1.resize(n);
  rule.weights.resize(n);
  // Newton iteration on P_n from the usual cosine guess
  for (int i = 0; i < n; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 1.0;
    for (int it = 0; it < 100; ++it) {
      double p = 1.0;
      double pm1 = 0.0;
      for (int k = 1; k <= n; ++k) {
        const double pm2 = pm1;
        pm1 = p;
        p = ((2.0 * k - 1.0) * x * pm1 - (k - 1.0) * pm2) / k;
      }
      dp = n * (x * p - pm1) / (x * x - 1.0);
      const double dx = p / dp;
      x -= dx;
      if (std::abs(dx) <= 1e-15) break;
    }
    // map [-1,1] -> [0,1], ascending order
    rule.p1[n - 1 - i] = 0.5 * (x + 1.0);
    rule.weights[n - 1 - i] = 1.0 / ((1.0 - x * x) * dp * dp);
  }
  return rule;
}

QuadratureRule triangle_rule_7() {
  const double s15 = std::sqrt(15.0);
  const double b1 = (6.0 + s15) / 21.0;
  const double a1 = 1.0 - 2.0 * b1;
  const double w1 = (155.0 + s15) / 1200.0;
  const double b2 = (6.0 - s15) / 21.0;
  const double a2 = 1.0 - 2.0 * b2;
  const double w2 = (155.0 - s15) / 1200.0;
  QuadratureRule r;
  r.degree = 5;
  auto add = [&](double l1, double l2, double w) {
    r.p1.push_back(l1);
    r.p2.push_back(l2);
    r.weights.push_back(w);
  };
  add(1.0 / 3.0, 1.0 / 3.0, 9.0 / 40.0);
  add(b1, b1, w1);
  add(a1, b1, w1);
  add(b1, a1, w1);
  add(b2, b2, w2);
  add(a2, b2, w2);
  add(b2, a2, w2);
  return r;
}

QuadratureRule triangle_rule_collapsed(int n) {
  const QuadratureRule g = gauss_legendre(n);
  QuadratureRule r;
  // (u, v) in [0,1]^2 -> l1 = u, l2 = (1-u) v, Jacobian (1-u); reference area 1/2.
  // The Jacobian costs one degree in u.
  r.degree = 2 * n - 2;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double u = g.p1[i];
      const double v = g.p1[j];
      r.p1.push_back(u);
      r.p2.push_back((1.0 - u) * v);
      r.weights.push_back(2.0 * g.weights[i] * g.weights[j] * (1.0 - u));
    }
  return r;
}

QuadratureRule QuadratureRule::subdivided(int k) const {
  if (p2.empty()) throw std::logic_error("subdivided: triangle rules only");
  if (k <= 1) return *this;
  QuadratureRule r;
  r.degree = degree;
  const double h = 1.0 / k;
  const double wscale = 1.0 / (k * k);
  auto emit = [&](double ox, double oy, double e1x, double e1y, double e2x, double e2y) {
    for (std::size_t q = 0; q < size(); ++q) {
      r.p1.push_back(ox + p1[q] * e1x + p2[q] * e2x);
      r.p2.push_back(oy + p1[q] * e1y + p2[q] * e2y);
      r.weights.push_back(weights[q] * wscale);
    }
  };
  // coordinates (l1, l2) on the reference triangle (0,0),(1,0),(0,1)
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k - i; ++j) {
      emit(i * h, j * h, h, 0.0, 0.0, h);
      if (j < k - i - 1) emit((i + 1) * h, (j + 1) * h, -h, 0.0, 0.0, -h);
    }
  return r;
}

}  // namespace fembem
