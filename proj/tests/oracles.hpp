#pragma once

// Quadrature oracles for boundary integral kernels, independent of the
// library's closed forms.

#include <cmath>
#include <memory>

#include "fembem/mesh.hpp"
#include "fembem/quadrature.hpp"

namespace fembem::oracles {

constexpr double kInvTwoPi = 0.5 / M_PI;

inline std::shared_ptr<const BoundaryMesh> boundary(DomainId d, int uniform) {
  Mesh m = make_initial_mesh(d);
  for (int k = 0; k < uniform; ++k) m = refine_uniform(m).first;
  return std::make_shared<const BoundaryMesh>(boundary_trace(m));
}

// int_0^len f with geometric grading toward 0 (sigma = 0.15) and Gauss on each piece
template <class F>
inline double graded_integral(F f, double len) {
  static const QuadratureRule g = gauss_legendre(20);
  double sum = 0.0;
  double hi = len;
  for (int level = 0; level < 60; ++level) {
    const double lo = level == 59 ? 0.0 : 0.15 * hi;
    for (std::size_t q = 0; q < g.size(); ++q) sum += g.weights[q] * (hi - lo) * f(lo + (hi - lo) * g.p1[q]);
    hi = lo;
  }
  return sum;
}

// 32 x 32 tensor Gauss of -log|x - y| / (2 pi) over two panels
inline double tensor_gauss_v(Vertex a, Vertex b, Vertex c, Vertex d) {
  static const QuadratureRule g = gauss_legendre(32);
  const double la = norm(b - a);
  const double lc = norm(d - c);
  double s = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Vertex x = (1 - g.p1[i]) * a + g.p1[i] * b;
    for (std::size_t j = 0; j < g.size(); ++j) {
      const Vertex y = (1 - g.p1[j]) * c + g.p1[j] * d;
      s += g.weights[i] * g.weights[j] * std::log(norm(x - y));
    }
  }
  return -kInvTwoPi * la * lc * s;
}

// (K 1)(x) = int_Gamma d_{n(y)} G(x - y) ds(y) by composite Gauss; x off every panel line
inline double k_one_oracle(const BoundaryMesh& bm, Vertex x) {
  static const QuadratureRule g = gauss_legendre(20);
  double s = 0.0;
  for (const auto& seg : bm.segments) {
    const Vertex a = bm.points[seg.a];
    const Vertex b = bm.points[seg.b];
    const int pieces = 64;
    for (int p = 0; p < pieces; ++p)
      for (std::size_t q = 0; q < g.size(); ++q) {
        const double t = (p + g.p1[q]) / pieces;
        const Vertex y = (1 - t) * a + t * b;
        const Vertex r = x - y;
        // d_{n(y)} of -log|x - y| / (2 pi)
        s += g.weights[q] / pieces * seg.length * kInvTwoPi * dot(r, seg.normal) / dot(r, r);
      }
  }
  return s;
}

}  // namespace fembem::oracles
