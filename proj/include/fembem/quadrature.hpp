#pragma once

#include <vector>

namespace fembem {

/// Quadrature on a reference domain.
///
/// Triangle rules use barycentric points (l1, l2) with l0 = 1 - l1 - l2 and
/// weights summing to 1, so that integral_T f ~ |T| * sum_q w_q f(x_q).
/// Interval rules live on [0, 1] with weights summing to 1.
struct QuadratureRule {
  std::vector<double> p1;  // first coordinate (l1 or t)
  std::vector<double> p2;  // second coordinate (l2), empty for interval rules
  std::vector<double> weights;
  int degree = 0;

  std::size_t size() const { return weights.size(); }

  /// Composite rule over the k*k congruent subtriangles of the reference
  /// triangle (triangle rules only).
  QuadratureRule subdivided(int k) const;
};

/// n-point Gauss-Legendre on [0, 1] (degree 2n-1).
QuadratureRule gauss_legendre(int n);

/// 7-point symmetric degree-5 rule.
QuadratureRule triangle_rule_7();
/// Collapsed (Duffy) tensor Gauss rule with n*n points, degree 2n-2.
QuadratureRule triangle_rule_collapsed(int n);
/// Rule used for load and nonlinear terms.
inline QuadratureRule triangle_default() { return triangle_rule_7(); }

}  // namespace fembem
