#include "fembem/estimate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace fembem {

double EstimatorReport::total_squared() const {
  double s = 0.0;
  for (double v : indicators) s += v;
  return s;
}

double EstimatorReport::total() const { return std::sqrt(total_squared()); }

EstimatorReport eta_fem(const Mesh& mesh, const FeFunction& w, const FeFunction& u_prev, const BoundaryFlux& phi_total,
                        const ScalarField& f, const InteriorOperator& op, Exec exec) {
  if (w.mesh->num_vertices() != mesh.num_vertices() || u_prev.mesh->num_vertices() != mesh.num_vertices())
    throw MeshError("eta_fem: functions must live on the estimation mesh");
  const auto nt = static_cast<Index>(mesh.num_triangles());
  const auto& topo = mesh.topology();
  const auto& verts = mesh.vertices();

  std::vector<Index> facet_of_edge(topo.edges.size(), -1);
  for (std::size_t k = 0; k < mesh.boundary().size(); ++k) facet_of_edge[mesh.boundary()[k].edge] = static_cast<Index>(k);

  // discrete flux A(grad u_prev) + grad w, constant per element
  std::vector<Vertex> sigma(nt);
  auto flux = [&](Index t) {
    const Vertex c = map_to_triangle(mesh, t, 1.0 / 3.0, 1.0 / 3.0);
    sigma[t] = op.A(c, u_prev.gradient(t)) + w.gradient(t);
  };

  static const QuadratureRule vol = triangle_default();
  static const QuadratureRule edge = gauss_legendre(4);
  EstimatorReport rep;
  rep.label = "eta";
  rep.indicators.assign(nt, 0.0);
  auto indicator = [&](Index t) {
    const double area = mesh.area(t);
    double r_vol = 0.0;
    for (std::size_t q = 0; q < vol.size(); ++q) {
      const double l1 = vol.p1[q];
      const double l2 = vol.p2[q];
      const Vertex x = map_to_triangle(mesh, t, l1, l2);
      double r = (f ? f(x) : 0.0) - w.value(t, l1, l2);
      if (op.b) r -= op.b(x, u_prev.gradient(t));
      if (op.c) r -= op.c(x, u_prev.value(t, l1, l2));
      r_vol += vol.weights[q] * r * r;
    }
    r_vol *= area;
    double r_edge = 0.0;
    const auto& tri = mesh.triangles()[t];
    for (int k = 0; k < 3; ++k) {
      const Index e = topo.triangle_edges[t][k];
      const Vertex pa = verts[tri.v[k]];
      const Vertex pb = verts[tri.v[(k + 1) % 3]];
      const Vertex d = pb - pa;
      const double len = norm(d);
      const Vertex n{d.y / len, -d.x / len};
      const auto& adj = topo.edge_triangles[e];
      if (adj[1] >= 0) {
        const Index other = adj[0] == t ? adj[1] : adj[0];
        const double jump = dot(sigma[t] - sigma[other], n);
        r_edge += len * jump * jump;
      } else {
        const Index facet = facet_of_edge[e];
        for (std::size_t q = 0; q < edge.size(); ++q) {
          const Vertex x = (1.0 - edge.p1[q]) * pa + edge.p1[q] * pb;
          const double r = phi_total(facet, x, n) - dot(sigma[t], n);
          r_edge += edge.weights[q] * len * r * r;
        }
      }
    }
    rep.indicators[t] = area * r_vol + std::sqrt(area) * r_edge;
  };

  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(static)
    for (Index t = 0; t < nt; ++t) flux(t);
#pragma omp parallel for schedule(static)
    for (Index t = 0; t < nt; ++t) indicator(t);
  } else {
    for (Index t = 0; t < nt; ++t) flux(t);
    for (Index t = 0; t < nt; ++t) indicator(t);
  }
  return rep;
}

std::vector<double> oscillation(const BoundaryMesh& bm, const ScalarField& u0, const VectorField& grad_u0,
                                const QuadratureRule& rule) {
  std::vector<double> osc(bm.num_segments(), 0.0);
  for (std::size_t e = 0; e < bm.num_segments(); ++e) {
    const auto& s = bm.segments[e];
    // the P0 projection of d/ds u0 is the difference quotient of u0
    const double mean = (u0(bm.points[s.b]) - u0(bm.points[s.a])) / s.length;
    double integral = 0.0;
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const double d = dot(grad_u0(bm.point_on(static_cast<Index>(e), rule.p1[q])), s.tangent) - mean;
      integral += rule.weights[q] * d * d;
    }
    osc[e] = s.length * s.length * integral;
  }
  return osc;
}

namespace {

EstimatorReport assemble_mu(const BoundaryMesh& bm, const ResidualSamples& samples, const ScalarField& u0,
                            const VectorField& grad_u0) {
  EstimatorReport rep;
  rep.label = "mu";
  rep.indicators = oscillation(bm, u0, grad_u0, samples.rule);
  for (std::size_t e = 0; e < bm.num_segments(); ++e) {
    const double L = bm.segments[e].length;
    double integral = 0.0;
    for (std::size_t q = 0; q < samples.rule.size(); ++q) {
      const double v = samples.values(static_cast<Index>(e), static_cast<Index>(q));
      integral += samples.rule.weights[q] * v * v;
    }
    rep.indicators[e] += L * L * integral;
  }
  return rep;
}

}  // namespace

EstimatorReport mu_bem(const BoundaryOperators& ops, const BemDensity& psi, const BoundaryTrace& g,
                       const ScalarField& u0, const VectorField& grad_u0) {
  return assemble_mu(*ops.bmesh, eval_residual_derivative(ops, psi, g), u0, grad_u0);
}

EstimatorReport mu_bem(const BoundaryMesh& bmesh, const BemDensity& psi, const BoundaryTrace& g,
                       const ScalarField& u0, const VectorField& grad_u0, int points_per_segment) {
  return assemble_mu(bmesh, eval_residual_derivative(bmesh, psi, g, points_per_segment), u0, grad_u0);
}

MarkedSet doerfler_mark(const EstimatorReport& report, double theta) {
  if (!(theta > 0.0 && theta <= 1.0)) throw std::invalid_argument("Doerfler parameter must lie in (0, 1]");
  const auto& ind = report.indicators;
  std::vector<Index> order(ind.size());
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return ind[a] > ind[b]; });
  double total = 0.0;
  for (Index i : order) total += ind[i];
  MarkedSet m;
  m.theta = theta;
  if (total <= 0.0) return m;
  double acc = 0.0;
  for (Index i : order) {
    if (acc >= theta * total) break;
    acc += ind[i];
    m.ids.push_back(i);
  }
  m.achieved_fraction = acc / total;
  std::sort(m.ids.begin(), m.ids.end());
  return m;
}

double global_nu(double eta_total, double mu_total, double w_h1_norm, double fem_alg_error, double bem_alg_error) {
  return eta_total + mu_total + w_h1_norm + fem_alg_error + bem_alg_error;
}

}  // namespace fembem
