#include "fembem/model.hpp"

#include <cmath>
#include <limits>
#include <memory>
#include <numbers>
#include <random>

#include "fembem/fem.hpp"

namespace fembem {

double chi(double t) {
  t = std::abs(t);
  if (t < 1e-4) {
    const double t2 = t * t;
    return 2.0 - t2 / 3.0 + 2.0 * t2 * t2 / 15.0;
  }
  return 1.0 + std::tanh(t) / t;
}

double chi_prime(double t) {
  const double a = std::abs(t);
  double d;
  if (a < 1e-2) {
    const double a2 = a * a;
    d = a * (-2.0 / 3.0 + a2 * (8.0 / 15.0 - a2 * 102.0 / 315.0));
  } else {
    const double s = 1.0 / std::cosh(a);
    d = (a * s * s - std::tanh(a)) / (a * a);
  }
  return t < 0 ? -d : d;
}

InteriorOperator laplace_operator(double scale) {
  InteriorOperator op;
  op.A = [scale](Vertex, Vertex g) { return scale * g; };
  op.c_A = scale;
  op.C_A = scale;
  op.linear_scale = scale;
  op.name = scale == 1.0 ? "laplace" : "scaled_laplace";
  return op;
}

InteriorOperator chi_operator() {
  InteriorOperator op;
  op.A = [](Vertex, Vertex g) { return chi(norm(g)) * g; };
  // g -> g + tanh|g| g/|g|: gradient of |g|^2/2 + log cosh|g|, Hessian eigenvalues in [1, 2]
  op.c_A = 1.0;
  op.C_A = 2.0;
  op.name = "chi";
  return op;
}

std::string to_string(ExampleId id) {
  switch (id) {
    case ExampleId::LaplaceLShape: return "laplace_lshape";
    case ExampleId::ScaledLaplaceLShape: return "scaled_laplace";
    case ExampleId::NonlinearZShape: return "nonlinear_zshape";
  }
  return "?";
}

std::optional<ExampleId> example_from_string(const std::string& s) {
  for (auto id : {ExampleId::LaplaceLShape, ExampleId::ScaledLaplaceLShape, ExampleId::NonlinearZShape})
    if (to_string(id) == s) return id;
  return std::nullopt;
}

double domain_angle(DomainId domain, Vertex x) {
  const double cut = domain == DomainId::LShape ? -std::numbers::pi / 4 : -std::numbers::pi / 8;
  double phi = std::atan2(x.y, x.x);
  if (phi < cut) phi += 2.0 * std::numbers::pi;
  return phi;
}

namespace {

// u = r^beta cos(beta phi): harmonic, homogeneous Neumann data on both corner edges
struct CornerSingularity {
  DomainId domain;
  double beta;

  double u(Vertex x) const {
    const double r = norm(x);
    return std::pow(r, beta) * std::cos(beta * domain_angle(domain, x));
  }
  Vertex grad(Vertex x) const {
    const double r = norm(x);
    const double phi = domain_angle(domain, x);
    const double s = beta * std::pow(r, beta - 1.0);
    return {s * std::cos((beta - 1.0) * phi), -s * std::sin((beta - 1.0) * phi)};
  }
};

constexpr Vertex kSource{-0.125, 0.125};

double u_ext(Vertex x) { return std::log(norm(x - kSource)); }
Vertex grad_u_ext(Vertex x) {
  const Vertex d = x - kSource;
  return (1.0 / dot(d, d)) * d;
}

}  // namespace

ProblemSpec make_problem(ExampleId example) {
  ProblemSpec p;
  p.example = example;
  p.domain = example == ExampleId::NonlinearZShape ? DomainId::ZShape : DomainId::LShape;
  const CornerSingularity sing{p.domain, p.domain == DomainId::LShape ? 2.0 / 3.0 : 4.0 / 7.0};

  switch (example) {
    case ExampleId::LaplaceLShape: p.op = laplace_operator(1.0); break;
    case ExampleId::ScaledLaplaceLShape:
      p.op = laplace_operator(0.1);
      p.below_classical_threshold = true;
      break;
    case ExampleId::NonlinearZShape: p.op = chi_operator(); break;
  }

  ExactSolution ex;
  ex.u = [sing](Vertex x) { return sing.u(x); };
  ex.grad_u = [sing](Vertex x) { return sing.grad(x); };
  ex.u_ext = u_ext;
  ex.grad_u_ext = grad_u_ext;
  p.exact = ex;

  p.u0 = [sing](Vertex x) { return sing.u(x) - u_ext(x); };
  p.grad_u0 = [sing](Vertex x) { return sing.grad(x) - grad_u_ext(x); };
  const InteriorOperator op = p.op;
  p.phi0 = [sing, op](Vertex x, Vertex n) { return dot(op.A(x, sing.grad(x)) - grad_u_ext(x), n); };

  if (example == ExampleId::NonlinearZShape) {
    // -div(chi(|grad u|) grad u) with Delta u = 0
    p.f = [sing](Vertex x) {
      const double b = sing.beta;
      const double r = norm(x);
      const double t = b * std::pow(r, b - 1.0);
      const double phi = domain_angle(sing.domain, x);
      return -chi_prime(t) * b * b * (b - 1.0) * std::pow(r, 2.0 * b - 3.0) * std::cos(b * phi);
    };
  }
  p.C_rad = 1.0;
  return p;
}

Eigen::VectorXd apply_interior_operator(const InteriorOperator& op, const FeFunction& u) {
  const Mesh& mesh = *u.mesh;
  static const QuadratureRule rule = triangle_default();
  Eigen::VectorXd r = Eigen::VectorXd::Zero(static_cast<Index>(mesh.num_vertices()));
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    const auto ti = static_cast<Index>(t);
    const auto gl = barycentric_gradients(mesh, ti);
    const double area = mesh.area(ti);
    const Vertex grad = u.gradient(ti);
    const auto& v = mesh.triangles()[t].v;
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const double l1 = rule.p1[q];
      const double l2 = rule.p2[q];
      const Vertex x = map_to_triangle(mesh, ti, l1, l2);
      const double w = rule.weights[q] * area;
      const Vertex a = op.A(x, grad);
      double s = 0.0;
      if (op.b) s += op.b(x, grad);
      if (op.c) s += op.c(x, u.value(ti, l1, l2));
      const double lam[3] = {1.0 - l1 - l2, l1, l2};
      for (int i = 0; i < 3; ++i) r[v[i]] += w * (dot(a, gl[i]) + s * lam[i]);
    }
  }
  return r;
}

std::pair<double, double> monotonicity_probe(const InteriorOperator& op, int trials, const Mesh& mesh,
                                             std::uint64_t seed) {
  auto shared = std::make_shared<const Mesh>(mesh);
  const auto n = static_cast<Index>(mesh.num_vertices());
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_real_distribution<double> expo(-2.0, 2.0);
  double min_ratio = std::numeric_limits<double>::infinity();
  double max_ratio = 0.0;
  for (int k = 0; k < trials; ++k) {
    // values spread over several orders of magnitude to reach both regimes of A
    const double sv = std::pow(10.0, expo(rng));
    const double sw = std::pow(10.0, expo(rng));
    Eigen::VectorXd v(n), w(n);
    for (Index i = 0; i < n; ++i) {
      v[i] = sv * unit(rng);
      w[i] = sw * unit(rng);
    }
    const FeFunction fv(shared, v);
    const FeFunction fw(shared, w);
    const double num = (apply_interior_operator(op, fw) - apply_interior_operator(op, fv)).dot(w - v);
    double den = 0.0;
    double lip = 0.0;
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
      const auto ti = static_cast<Index>(t);
      const Vertex gv = fv.gradient(ti);
      const Vertex gw = fw.gradient(ti);
      const Vertex centroid = map_to_triangle(mesh, ti, 1.0 / 3.0, 1.0 / 3.0);
      const Vertex da = op.A(centroid, gw) - op.A(centroid, gv);
      const Vertex dg = gw - gv;
      den += mesh.area(ti) * dot(dg, dg);
      lip += mesh.area(ti) * dot(da, da);
    }
    if (den <= 0.0) continue;
    min_ratio = std::min(min_ratio, num / den);
    max_ratio = std::max(max_ratio, std::sqrt(lip / den));
  }
  return {min_ratio, max_ratio};
}

}  // namespace fembem
