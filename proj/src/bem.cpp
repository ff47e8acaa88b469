#include "fembem/bem.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace fembem {

namespace {

constexpr double kInvTwoPi = 0.5 / std::numbers::pi;

// Far-field threshold: |x - midpoint| >= kFar * L switches to Gauss on the panel.
constexpr double kFar = 5.0;

struct PanelFrame {
  Vertex a;
  Vertex t;  // unit tangent
  Vertex n;  // outward unit normal
  double L;
};

PanelFrame frame(Vertex a, Vertex b) {
  const Vertex d = b - a;
  const double L = norm(d);
  const Vertex t = (1.0 / L) * d;
  return {a, t, {t.y, -t.x}, L};
}

struct LocalCoords {
  double p;
  double h;
};

LocalCoords local(const PanelFrame& f, Vertex x) {
  const Vertex r = x - f.a;
  double h = dot(r, f.n);
  if (std::abs(h) <= 1e-13 * f.L) h = 0.0;
  return {dot(r, f.t), h};
}

// angle subtended by the panel, 0 on the panel line
double J0(double p, double h, double L) {
  if (h == 0.0) return 0.0;
  return std::atan2(h * L, p * (p - L) + h * h);
}

// u log(u^2 + h^2) - 2u + 2h atan(u/h), the antiderivative of log(u^2 + h^2)
double Phi(double u, double h) {
  const double q = u * u + h * h;
  double v = -2.0 * u;
  if (u != 0.0 && q > 0.0) v += u * std::log(q);
  if (h != 0.0) v += 2.0 * h * std::atan(u / h);
  return v;
}

const QuadratureRule& far_rule() {
  static const QuadratureRule g = gauss_legendre(8);
  return g;
}

bool is_far(const PanelFrame& f, Vertex x) {
  const Vertex mid = f.a + (0.5 * f.L) * f.t;
  return norm(x - mid) >= kFar * f.L;
}

double point_segment_distance(Vertex x, Vertex a, Vertex b) {
  const Vertex d = b - a;
  const double s = std::clamp(dot(x - a, d) / dot(d, d), 0.0, 1.0);
  return norm(x - (a + s * d));
}

double segment_distance(Vertex a, Vertex b, Vertex c, Vertex d) {
  return std::min({point_segment_distance(a, c, d), point_segment_distance(b, c, d), point_segment_distance(c, a, b),
                   point_segment_distance(d, a, b)});
}

// Outer sub-panel admissibility len <= dist / kappa gives ~1e-12 relative
// accuracy for an n-point Gauss rule on a log/atan-type integrand.
double admissibility(int n) {
  const double rho = std::pow(10.0, 12.0 / (2.0 * n));
  return 0.25 * (rho - 1.0 / rho);
}

// Integrates f over the outer panel [a, b], bisecting toward the source panel
// [c, d]. f(x) adds weight * integrand into its accumulator.
template <class F>
void outer_integrate(Vertex a, Vertex b, Vertex c, Vertex d, const QuadratureRule& g, double kappa, int depth,
                     F&& f) {
  const double len = norm(b - a);
  if (depth <= 0 || len * kappa <= segment_distance(a, b, c, d)) {
    for (std::size_t q = 0; q < g.size(); ++q) f((1.0 - g.p1[q]) * a + g.p1[q] * b, g.weights[q] * len);
    return;
  }
  const Vertex m = 0.5 * (a + b);
  outer_integrate(a, m, c, d, g, kappa, depth - 1, f);
  outer_integrate(m, b, c, d, g, kappa, depth - 1, f);
}

bool collinear(const PanelFrame& f, Vertex a, Vertex b) {
  return std::abs(dot(a - f.a, f.n)) <= 1e-13 * f.L && std::abs(dot(b - f.a, f.n)) <= 1e-13 * f.L;
}

// Double-layer potential of the two hat functions of a panel at x.
std::array<double, 2> double_layer_hats(const PanelFrame& f, Vertex x) {
  if (is_far(f, x)) {
    const auto& g = far_rule();
    std::array<double, 2> r{0.0, 0.0};
    for (std::size_t q = 0; q < g.size(); ++q) {
      const double s = g.p1[q];
      const Vertex d = x - (f.a + (s * f.L) * f.t);
      const double k = g.weights[q] * f.L * kInvTwoPi * dot(d, f.n) / dot(d, d);
      r[0] += k * (1.0 - s);
      r[1] += k * s;
    }
    return r;
  }
  const auto [p, h] = local(f, x);
  if (h == 0.0) return {0.0, 0.0};
  const double L = f.L;
  const double j0 = J0(p, h, L);
  const double ra2 = p * p + h * h;
  const double rb2 = (p - L) * (p - L) + h * h;
  const double j1 = p * j0 + 0.5 * h * std::log(rb2 / ra2);
  return {kInvTwoPi * (j0 - j1 / L), kInvTwoPi * j1 / L};
}

std::array<Vertex, 2> double_layer_hats_gradient(const PanelFrame& f, Vertex x) {
  if (is_far(f, x)) {
    const auto& g = far_rule();
    std::array<Vertex, 2> r{};
    for (std::size_t q = 0; q < g.size(); ++q) {
      const double s = g.p1[q];
      const Vertex d = x - (f.a + (s * f.L) * f.t);
      const double r2 = dot(d, d);
      const Vertex k = (g.weights[q] * f.L * kInvTwoPi) * ((1.0 / r2) * f.n - (2.0 * dot(d, f.n) / (r2 * r2)) * d);
      r[0] = r[0] + (1.0 - s) * k;
      r[1] = r[1] + s * k;
    }
    return r;
  }
  const auto [p, h] = local(f, x);
  const double L = f.L;
  const double ra2 = p * p + h * h;
  const double rb2 = (p - L) * (p - L) + h * h;
  const double j0 = J0(p, h, L);
  const double lam = std::log(rb2 / ra2);
  const double dp_j0 = h / ra2 - h / rb2;
  const double dh_j0 = -p / ra2 + (p - L) / rb2;
  const double dp_lam = 2.0 * (p - L) / rb2 - 2.0 * p / ra2;
  const double dh_lam = 2.0 * h / rb2 - 2.0 * h / ra2;
  const double dp_j1 = j0 + p * dp_j0 + 0.5 * h * dp_lam;
  const double dh_j1 = p * dh_j0 + 0.5 * lam + 0.5 * h * dh_lam;
  const Vertex gj0 = dp_j0 * f.t + dh_j0 * f.n;
  const Vertex gj1 = dp_j1 * f.t + dh_j1 * f.n;
  return {kInvTwoPi * (gj0 - (1.0 / L) * gj1), (kInvTwoPi / L) * gj1};
}

double single_layer_frame(const PanelFrame& f, Vertex x) {
  if (is_far(f, x)) {
    const auto& g = far_rule();
    double s = 0.0;
    for (std::size_t q = 0; q < g.size(); ++q) s += g.weights[q] * std::log(norm(x - (f.a + (g.p1[q] * f.L) * f.t)));
    return -kInvTwoPi * f.L * s;
  }
  const auto [p, h] = local(f, x);
  return -0.5 * kInvTwoPi * (Phi(p, h) - Phi(p - f.L, h));
}

Vertex single_layer_frame_gradient(const PanelFrame& f, Vertex x) {
  if (is_far(f, x)) {
    const auto& g = far_rule();
    Vertex s{};
    for (std::size_t q = 0; q < g.size(); ++q) {
      const Vertex d = x - (f.a + (g.p1[q] * f.L) * f.t);
      s = s + (g.weights[q] / dot(d, d)) * d;
    }
    return (-kInvTwoPi * f.L) * s;
  }
  const auto [p, h] = local(f, x);
  const double ra2 = p * p + h * h;
  const double rb2 = (p - f.L) * (p - f.L) + h * h;
  return -kInvTwoPi * (0.5 * std::log(ra2 / rb2) * f.t + J0(p, h, f.L) * f.n);
}

template <class Body>
void for_each_row(std::size_t n, Exec exec, Body&& body) {
  const auto nn = static_cast<Index>(n);
  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(dynamic, 4)
    for (Index i = 0; i < nn; ++i) body(i);
  } else {
    for (Index i = 0; i < nn; ++i) body(i);
  }
}

PanelFrame segment_frame(const BoundaryMesh& bm, Index e) {
  const auto& s = bm.segments[e];
  return frame(bm.points[s.a], bm.points[s.b]);
}

}  // namespace

double single_layer_panel(Vertex x, Vertex a, Vertex b) { return single_layer_frame(frame(a, b), x); }

Vertex single_layer_panel_gradient(Vertex x, Vertex a, Vertex b) { return single_layer_frame_gradient(frame(a, b), x); }

double double_layer_panel(Vertex x, Vertex a, Vertex b, double ga, double gb) {
  const auto h = double_layer_hats(frame(a, b), x);
  return ga * h[0] + gb * h[1];
}

Vertex double_layer_panel_gradient(Vertex x, Vertex a, Vertex b, double ga, double gb) {
  const auto g = double_layer_hats_gradient(frame(a, b), x);
  return ga * g[0] + gb * g[1];
}

DenseMatrix assemble_single_layer(const BoundaryMesh& bm, const BemOptions& opt, Exec exec) {
  const std::size_t n = bm.num_segments();
  DenseMatrix V(static_cast<Index>(n), static_cast<Index>(n));
  const QuadratureRule g = gauss_legendre(opt.outer_gauss);
  const double kappa = admissibility(opt.outer_gauss);
  for_each_row(n, exec, [&](Index e) {
    const auto& se = bm.segments[e];
    const Vertex a = bm.points[se.a];
    const Vertex b = bm.points[se.b];
    const double L = se.length;
    V(e, e) = kInvTwoPi * L * L * (1.5 - std::log(L));
    for (Index k = e + 1; k < static_cast<Index>(n); ++k) {
      const auto& sk = bm.segments[k];
      const PanelFrame fk = frame(bm.points[sk.a], bm.points[sk.b]);
      double v = 0.0;
      outer_integrate(a, b, bm.points[sk.a], bm.points[sk.b], g, kappa, opt.max_depth,
                      [&](Vertex x, double w) { v += w * single_layer_frame(fk, x); });
      V(e, k) = v;
      V(k, e) = v;
    }
  });
  return V;
}

DenseMatrix assemble_double_layer(const BoundaryMesh& bm, const BemOptions& opt, Exec exec) {
  const std::size_t n = bm.num_segments();
  DenseMatrix K = DenseMatrix::Zero(static_cast<Index>(n), static_cast<Index>(bm.num_nodes()));
  const QuadratureRule g = gauss_legendre(opt.outer_gauss);
  const double kappa = admissibility(opt.outer_gauss);
  for_each_row(n, exec, [&](Index e) {
    const auto& se = bm.segments[e];
    const Vertex a = bm.points[se.a];
    const Vertex b = bm.points[se.b];
    for (Index k = 0; k < static_cast<Index>(n); ++k) {
      if (k == e) continue;
      const auto& sk = bm.segments[k];
      const PanelFrame fk = frame(bm.points[sk.a], bm.points[sk.b]);
      if (collinear(fk, a, b)) continue;
      std::array<double, 2> v{0.0, 0.0};
      outer_integrate(a, b, bm.points[sk.a], bm.points[sk.b], g, kappa, opt.max_depth, [&](Vertex x, double w) {
        const auto h = double_layer_hats(fk, x);
        v[0] += w * h[0];
        v[1] += w * h[1];
      });
      K(e, sk.a) += v[0];
      K(e, sk.b) += v[1];
    }
  });
  return K;
}

Vector boundary_mass_apply(const BoundaryMesh& bm, const Vector& g) {
  Vector r(static_cast<Index>(bm.num_segments()));
  for (std::size_t e = 0; e < bm.num_segments(); ++e) {
    const auto& s = bm.segments[e];
    r[static_cast<Index>(e)] = 0.5 * s.length * (g[s.a] + g[s.b]);
  }
  return r;
}

Vector assemble_dl_rhs(const BoundaryMesh& bm, const BoundaryTrace& g, const BemOptions& opt) {
  if (static_cast<std::size_t>(g.values.size()) != bm.num_nodes())
    throw std::invalid_argument("boundary trace does not match the boundary mesh");
  return assemble_double_layer(bm, opt) * g.values - 0.5 * boundary_mass_apply(bm, g.values);
}

double eval_single_layer(const BemDensity& psi, Vertex x) {
  const auto& bm = *psi.bmesh;
  double s = 0.0;
  for (std::size_t e = 0; e < bm.num_segments(); ++e)
    s += psi.values[static_cast<Index>(e)] * single_layer_frame(segment_frame(bm, static_cast<Index>(e)), x);
  return s;
}

double eval_double_layer(const BoundaryTrace& g, Vertex x) {
  const auto& bm = *g.bmesh;
  double s = 0.0;
  for (std::size_t e = 0; e < bm.num_segments(); ++e) {
    const auto& seg = bm.segments[e];
    const auto h = double_layer_hats(segment_frame(bm, static_cast<Index>(e)), x);
    s += g.values[seg.a] * h[0] + g.values[seg.b] * h[1];
  }
  return s;
}

Vector BoundaryOperators::rhs(const Vector& g) const { return K * g - 0.5 * boundary_mass_apply(*bmesh, g); }

std::shared_ptr<const BoundaryOperators> build_boundary_operators(std::shared_ptr<const BoundaryMesh> bmesh,
                                                                  int points_per_segment, const BemOptions& opt,
                                                                  Exec exec) {
  if (points_per_segment < 1) throw std::invalid_argument("points_per_segment must be positive");
  auto ops = std::make_shared<BoundaryOperators>();
  const auto& bm = *bmesh;
  ops->bmesh = bmesh;
  ops->options = opt;
  ops->V = assemble_single_layer(bm, opt, exec);
  ops->K = assemble_double_layer(bm, opt, exec);
  ops->derivative_rule = gauss_legendre(points_per_segment);
  const auto n = static_cast<Index>(bm.num_segments());
  const Index np = points_per_segment;
  ops->DV.resize(n * np, n);
  ops->DK = DenseMatrix::Zero(n * np, static_cast<Index>(bm.num_nodes()));
  std::vector<PanelFrame> frames;
  frames.reserve(n);
  for (Index e = 0; e < n; ++e) frames.push_back(segment_frame(bm, e));
  const auto& rule = ops->derivative_rule;
  for_each_row(static_cast<std::size_t>(n), exec, [&](Index e) {
    const auto& se = bm.segments[e];
    const Vertex tau = se.tangent;
    for (Index q = 0; q < np; ++q) {
      const Vertex x = bm.point_on(e, rule.p1[q]);
      const Index row = e * np + q;
      for (Index k = 0; k < n; ++k) {
        ops->DV(row, k) = dot(tau, single_layer_frame_gradient(frames[k], x));
        if (k == e) continue;
        const auto gk = double_layer_hats_gradient(frames[k], x);
        const auto& sk = bm.segments[k];
        ops->DK(row, sk.a) += dot(tau, gk[0]);
        ops->DK(row, sk.b) += dot(tau, gk[1]);
      }
    }
  });
  return ops;
}

bool same_geometry(const BoundaryMesh& a, const BoundaryMesh& b) {
  if (a.num_nodes() != b.num_nodes() || a.num_segments() != b.num_segments()) return false;
  for (std::size_t i = 0; i < a.num_nodes(); ++i)
    if (a.points[i].x != b.points[i].x || a.points[i].y != b.points[i].y) return false;
  for (std::size_t e = 0; e < a.num_segments(); ++e)
    if (a.segments[e].a != b.segments[e].a || a.segments[e].b != b.segments[e].b) return false;
  return true;
}

std::shared_ptr<const BoundaryOperators> BoundaryOperatorCache::get(std::shared_ptr<const BoundaryMesh> bmesh) {
  if (last_ && (last_->bmesh == bmesh || same_geometry(*last_->bmesh, *bmesh))) return last_;
  last_ = build_boundary_operators(std::move(bmesh), points_, opt_);
  ++builds_;
  return last_;
}

ResidualSamples eval_residual_derivative(const BoundaryOperators& ops, const BemDensity& psi, const BoundaryTrace& g) {
  const auto& bm = *ops.bmesh;
  if (static_cast<std::size_t>(psi.values.size()) != bm.num_segments() ||
      static_cast<std::size_t>(g.values.size()) != bm.num_nodes())
    throw std::invalid_argument("residual derivative: data does not match the boundary mesh");
  const auto np = static_cast<Index>(ops.derivative_rule.size());
  const Vector flat = ops.DK * g.values - ops.DV * psi.values;
  ResidualSamples r;
  r.rule = ops.derivative_rule;
  r.values.resize(static_cast<Index>(bm.num_segments()), np);
  for (std::size_t e = 0; e < bm.num_segments(); ++e) {
    const auto& s = bm.segments[e];
    const double half_dg = 0.5 * (g.values[s.b] - g.values[s.a]) / s.length;
    for (Index q = 0; q < np; ++q) r.values(static_cast<Index>(e), q) = flat[static_cast<Index>(e) * np + q] - half_dg;
  }
  return r;
}

ResidualSamples eval_residual_derivative(const BoundaryMesh& bmesh, const BemDensity& psi, const BoundaryTrace& g,
                                         int points_per_segment) {
  if (points_per_segment < 1) throw std::invalid_argument("points_per_segment must be positive");
  ResidualSamples r;
  r.rule = gauss_legendre(points_per_segment);
  r.values.resize(static_cast<Index>(bmesh.num_segments()), points_per_segment);
  for (std::size_t e = 0; e < bmesh.num_segments(); ++e)
    for (int q = 0; q < points_per_segment; ++q)
      r.values(static_cast<Index>(e), q) = eval_residual_derivative_at(psi, g, static_cast<Index>(e), r.rule.p1[q]);
  return r;
}

double eval_residual_derivative_at(const BemDensity& psi, const BoundaryTrace& g, Index segment, double t) {
  if (!(t > 0.0 && t < 1.0)) throw std::domain_error("residual derivative is singular at panel endpoints");
  const auto& bm = *psi.bmesh;
  const auto& se = bm.segments[segment];
  const Vertex x = bm.point_on(segment, t);
  double v = -0.5 * (g.values[se.b] - g.values[se.a]) / se.length;
  for (std::size_t k = 0; k < bm.num_segments(); ++k) {
    const auto ki = static_cast<Index>(k);
    const PanelFrame f = segment_frame(bm, ki);
    v -= psi.values[ki] * dot(se.tangent, single_layer_frame_gradient(f, x));
    if (ki == segment) continue;
    const auto& sk = bm.segments[k];
    const auto gk = double_layer_hats_gradient(f, x);
    v += g.values[sk.a] * dot(se.tangent, gk[0]) + g.values[sk.b] * dot(se.tangent, gk[1]);
  }
  return v;
}

BoundaryTrace nodal_interpolate_u0(std::shared_ptr<const BoundaryMesh> bmesh, const ScalarField& u0) {
  Vector v(static_cast<Index>(bmesh->num_nodes()));
  for (std::size_t i = 0; i < bmesh->num_nodes(); ++i) v[static_cast<Index>(i)] = u0(bmesh->points[i]);
  return {std::move(bmesh), std::move(v)};
}

BoundaryTrace trace_of(const FeFunction& u, std::shared_ptr<const BoundaryMesh> bmesh) {
  Vector v(static_cast<Index>(bmesh->num_nodes()));
  for (std::size_t i = 0; i < bmesh->num_nodes(); ++i) {
    const Index node = bmesh->nodes[i];
    if (node >= u.values.size()) throw MeshError("boundary mesh does not belong to the function's mesh");
    v[static_cast<Index>(i)] = u.values[node];
  }
  return {std::move(bmesh), std::move(v)};
}

double hminushalf_error_surrogate(const BoundaryMesh& bm, const FluxField& phi_exact, const BemDensity& phi_h) {
  static const QuadratureRule g = gauss_legendre(6);
  double sum = 0.0;
  for (std::size_t e = 0; e < bm.num_segments(); ++e) {
    const auto& s = bm.segments[e];
    double integral = 0.0;
    for (std::size_t q = 0; q < g.size(); ++q) {
      const double d = phi_exact(bm.point_on(static_cast<Index>(e), g.p1[q]), s.normal) - phi_h.values[static_cast<Index>(e)];
      integral += g.weights[q] * d * d;
    }
    sum += s.length * s.length * integral;
  }
  return std::sqrt(sum);
}

Vector prolongate_density(const Vector& coarse, const RefinementRelation& relation) {
  if (static_cast<std::size_t>(coarse.size()) != relation.segment_sons.size())
    throw MeshError("density does not live on the coarse boundary mesh");
  Vector fine(static_cast<Index>(relation.segment_father.size()));
  for (std::size_t s = 0; s < relation.segment_father.size(); ++s)
    fine[static_cast<Index>(s)] = coarse[relation.segment_father[s]];
  return fine;
}

}  // namespace fembem
