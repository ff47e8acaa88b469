#include "fembem/fem.hpp"

#include <cmath>

namespace fembem {

namespace {

using Local3 = std::array<double, 3>;
using Local33 = std::array<std::array<double, 3>, 3>;

// Runs body(t) for every triangle, serially or with OpenMP. body must only
// write to slot t of its outputs.
template <class Body>
void for_each_triangle(std::size_t n, Exec exec, Body&& body) {
  const auto nt = static_cast<Index>(n);
  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(static)
    for (Index t = 0; t < nt; ++t) body(t);
  } else {
    for (Index t = 0; t < nt; ++t) body(t);
  }
}

SparseMatrix scatter(const Mesh& mesh, const std::vector<Local33>& local) {
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(9 * local.size());
  for (std::size_t t = 0; t < local.size(); ++t) {
    const auto& v = mesh.triangles()[t].v;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) trip.emplace_back(v[i], v[j], local[t][i][j]);
  }
  const auto n = static_cast<Index>(mesh.num_vertices());
  SparseMatrix S(n, n);
  S.setFromTriplets(trip.begin(), trip.end());
  return S;
}

Local33 local_stiffness(const Mesh& mesh, Index t) {
  const auto g = barycentric_gradients(mesh, t);
  const double area = mesh.area(t);
  Local33 k{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) k[i][j] = area * dot(g[i], g[j]);
  return k;
}

Local33 local_mass(const Mesh& mesh, Index t) {
  const double a = mesh.area(t) / 12.0;
  Local33 m{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) m[i][j] = i == j ? 2.0 * a : a;
  return m;
}

void check_on_mesh(const Mesh& mesh, const FeFunction& u) {
  if (!u.mesh || u.mesh->num_vertices() != mesh.num_vertices() ||
      static_cast<std::size_t>(u.values.size()) != mesh.num_vertices())
    throw MeshError("function does not live on the assembly mesh (prolongate first)");
}

}  // namespace

FeFunction::FeFunction(std::shared_ptr<const Mesh> m, Vector v) : mesh(std::move(m)), values(std::move(v)) {
  if (!mesh || static_cast<std::size_t>(values.size()) != mesh->num_vertices())
    throw MeshError("coefficient count does not match vertex count");
}

FeFunction FeFunction::zero(std::shared_ptr<const Mesh> m) {
  const auto n = static_cast<Index>(m->num_vertices());
  return FeFunction(std::move(m), Vector::Zero(n));
}

Vertex FeFunction::gradient(Index t) const {
  const auto g = barycentric_gradients(*mesh, t);
  const auto& v = mesh->triangles()[t].v;
  return values[v[0]] * g[0] + values[v[1]] * g[1] + values[v[2]] * g[2];
}

double FeFunction::value(Index t, double l1, double l2) const {
  const auto& v = mesh->triangles()[t].v;
  return (1.0 - l1 - l2) * values[v[0]] + l1 * values[v[1]] + l2 * values[v[2]];
}

std::array<Vertex, 3> barycentric_gradients(const Mesh& mesh, Index t) {
  const auto p = mesh.corners(t);
  const double s = 1.0 / (2.0 * mesh.area(t));
  std::array<Vertex, 3> g;
  for (int i = 0; i < 3; ++i) {
    const Vertex a = p[(i + 1) % 3];
    const Vertex b = p[(i + 2) % 3];
    g[i] = {s * (a.y - b.y), s * (b.x - a.x)};
  }
  return g;
}

Vertex map_to_triangle(const Mesh& mesh, Index t, double l1, double l2) {
  const auto p = mesh.corners(t);
  return (1.0 - l1 - l2) * p[0] + l1 * p[1] + l2 * p[2];
}

SparseMatrix assemble_stiffness(const Mesh& mesh, Exec exec) {
  std::vector<Local33> local(mesh.num_triangles());
  for_each_triangle(local.size(), exec, [&](Index t) { local[t] = local_stiffness(mesh, t); });
  return scatter(mesh, local);
}

SparseMatrix assemble_mass(const Mesh& mesh, Exec exec) {
  std::vector<Local33> local(mesh.num_triangles());
  for_each_triangle(local.size(), exec, [&](Index t) { local[t] = local_mass(mesh, t); });
  return scatter(mesh, local);
}

SparseMatrix assemble_riesz(const Mesh& mesh, Exec exec) {
  std::vector<Local33> local(mesh.num_triangles());
  for_each_triangle(local.size(), exec, [&](Index t) {
    auto k = local_stiffness(mesh, t);
    const auto m = local_mass(mesh, t);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) k[i][j] += m[i][j];
    local[t] = k;
  });
  return scatter(mesh, local);
}

Vector riesz_diagonal(const Mesh& mesh) {
  Vector d = Vector::Zero(static_cast<Index>(mesh.num_vertices()));
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    const auto ti = static_cast<Index>(t);
    const auto g = barycentric_gradients(mesh, ti);
    const double area = mesh.area(ti);
    const auto& v = mesh.triangles()[t].v;
    for (int i = 0; i < 3; ++i) d[v[i]] += area * (dot(g[i], g[i]) + 1.0 / 6.0);
  }
  return d;
}

Vector assemble_w_rhs(const Mesh& mesh, const RieszLoad& load, const FeFunction& u_prev, const InteriorOperator& op,
                      const QuadratureRule& rule, Exec exec) {
  check_on_mesh(mesh, u_prev);
  if (!load.phi.empty() && load.phi.size() != mesh.boundary().size())
    throw MeshError("boundary density does not live on the boundary of the assembly mesh");

  std::vector<Local3> local(mesh.num_triangles());
  for_each_triangle(local.size(), exec, [&](Index t) {
    const auto gl = barycentric_gradients(mesh, t);
    const double area = mesh.area(t);
    const Vertex grad = u_prev.gradient(t);
    Local3 r{};
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const double l1 = rule.p1[q];
      const double l2 = rule.p2[q];
      const Local3 lam{1.0 - l1 - l2, l1, l2};
      const Vertex x = map_to_triangle(mesh, t, l1, l2);
      const double w = rule.weights[q] * area;
      const Vertex a = op.A(x, grad);
      double scalar = load.f ? load.f(x) : 0.0;
      if (op.b) scalar -= op.b(x, grad);
      if (op.c) scalar -= op.c(x, u_prev.value(t, l1, l2));
      for (int i = 0; i < 3; ++i) r[i] += w * (scalar * lam[i] - dot(a, gl[i]));
    }
    local[t] = r;
  });

  Vector F = Vector::Zero(static_cast<Index>(mesh.num_vertices()));
  for (std::size_t t = 0; t < local.size(); ++t) {
    const auto& v = mesh.triangles()[t].v;
    for (int i = 0; i < 3; ++i) F[v[i]] += local[t][i];
  }

  if (!load.phi0 && load.phi.empty()) return F;
  static const QuadratureRule gauss = gauss_legendre(4);
  const auto& verts = mesh.vertices();
  for (std::size_t k = 0; k < mesh.boundary().size(); ++k) {
    const double phi_k = load.phi.empty() ? 0.0 : load.phi[k];
    const auto& f = mesh.boundary()[k];
    const Vertex pa = verts[f.a];
    const Vertex pb = verts[f.b];
    const Vertex d = pb - pa;
    const double len = norm(d);
    const Vertex n{d.y / len, -d.x / len};
    double ra = 0.0;
    double rb = 0.0;
    for (std::size_t q = 0; q < gauss.size(); ++q) {
      const double s = gauss.p1[q];
      const Vertex x = (1.0 - s) * pa + s * pb;
      const double val = (load.phi0 ? load.phi0(x, n) : 0.0) + phi_k;
      ra += gauss.weights[q] * len * val * (1.0 - s);
      rb += gauss.weights[q] * len * val * s;
    }
    F[f.a] += ra;
    F[f.b] += rb;
  }
  return F;
}

Vector assemble_load(const Mesh& mesh, const ScalarField& f, const QuadratureRule& rule) {
  Vector F = Vector::Zero(static_cast<Index>(mesh.num_vertices()));
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    const auto ti = static_cast<Index>(t);
    const double area = mesh.area(ti);
    const auto& v = mesh.triangles()[t].v;
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const double l1 = rule.p1[q];
      const double l2 = rule.p2[q];
      const double w = rule.weights[q] * area * f(map_to_triangle(mesh, ti, l1, l2));
      F[v[0]] += w * (1.0 - l1 - l2);
      F[v[1]] += w * l1;
      F[v[2]] += w * l2;
    }
  }
  return F;
}

Vector prolongate(const Vector& coarse, const RefinementRelation& relation) {
  if (static_cast<std::size_t>(coarse.size()) != relation.coarse_vertices)
    throw MeshError("prolongation: vector does not live on the coarse mesh");
  const auto nc = static_cast<Index>(relation.coarse_vertices);
  Vector fine(nc + static_cast<Index>(relation.new_vertex_parents.size()));
  fine.head(nc) = coarse;
  for (std::size_t k = 0; k < relation.new_vertex_parents.size(); ++k) {
    const auto [a, b] = relation.new_vertex_parents[k];
    fine[nc + static_cast<Index>(k)] = 0.5 * (coarse[a] + coarse[b]);
  }
  return fine;
}

FeFunction prolongate(const FeFunction& u, const RefinementRelation& relation, std::shared_ptr<const Mesh> fine) {
  Vector v = prolongate(u.values, relation);
  return FeFunction(std::move(fine), std::move(v));
}

FeFunction interpolate(std::shared_ptr<const Mesh> mesh, const ScalarField& u) {
  Vector v(static_cast<Index>(mesh->num_vertices()));
  for (std::size_t i = 0; i < mesh->num_vertices(); ++i) v[static_cast<Index>(i)] = u(mesh->vertices()[i]);
  return FeFunction(std::move(mesh), std::move(v));
}

double h1_error(const ScalarField& u, const VectorField& grad_u, const FeFunction& u_h, const QuadratureRule& rule,
                Exec exec) {
  const Mesh& mesh = *u_h.mesh;
  std::vector<double> local(mesh.num_triangles());
  for_each_triangle(local.size(), exec, [&](Index t) {
    const Vertex gh = u_h.gradient(t);
    const double area = mesh.area(t);
    double s = 0.0;
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const Vertex x = map_to_triangle(mesh, t, rule.p1[q], rule.p2[q]);
      const double e = u(x) - u_h.value(t, rule.p1[q], rule.p2[q]);
      const Vertex ge = grad_u(x) - gh;
      s += rule.weights[q] * (e * e + dot(ge, ge));
    }
    local[t] = s * area;
  });
  double sum = 0.0;
  for (double v : local) sum += v;
  return std::sqrt(sum);
}

double h1_norm(const FeFunction& u_h) {
  const Mesh& mesh = *u_h.mesh;
  double sum = 0.0;
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    const auto ti = static_cast<Index>(t);
    const auto& v = mesh.triangles()[t].v;
    const double area = mesh.area(ti);
    const Vertex g = u_h.gradient(ti);
    const double a = u_h.values[v[0]];
    const double b = u_h.values[v[1]];
    const double c = u_h.values[v[2]];
    sum += area * dot(g, g) + area / 12.0 * (a * a + b * b + c * c + (a + b + c) * (a + b + c));
  }
  return std::sqrt(sum);
}

}  // namespace fembem
