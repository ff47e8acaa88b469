#include "fembem/uzawa.hpp"

#include <cmath>
#include <stdexcept>

namespace fembem {

void UzawaConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(what);
  };
  require(alpha > 0.0, "alpha must be positive");
  require(gamma > 0.0 && gamma < 1.0, "gamma must lie in (0, 1)");
  require(theta > 0.0 && theta <= 1.0, "theta must lie in (0, 1]");
  require(epsilon1 > 0.0, "epsilon1 must be positive");
  require(C_i > 0.0 && C_ii > 0.0, "C_i and C_ii must be positive");
  require(max_elements > 0, "element budget must be positive");
  require(max_steps > 0, "max_steps must be positive");
  require(inner_max_loops > 0, "inner_max_loops must be positive");
  require(bem_points > 0, "bem_points must be positive");
  if (pcg.mode == StoppingMode::LambdaCriterion)
    require(pcg.value >= 0.0 && pcg.value < 1.0, "lambda must lie in [0, 1)");
  else
    require(pcg.value > 0.0, "tau_rel must be positive");
}

InnerLoopResult adaptive_inner_loop(const InnerLoopHooks& hooks, double theta, double tau, int max_loops) {
  if (!(tau > 0.0)) throw std::invalid_argument("inner loop tolerance must be positive");
  InnerLoopResult res;
  for (int l = 0; l < max_loops; ++l) {
    const double surrogate = hooks.solve();
    ++res.solves;
    res.final_report = hooks.estimate();
    res.estimator_sq.push_back(res.final_report.total_squared());
    res.surrogate_sq.push_back(surrogate);
    res.final_report.algebraic_surrogate = surrogate;
    if (res.exit_value() <= tau * tau) {
      res.converged = true;
      return res;
    }
    if (l + 1 == max_loops) break;
    hooks.refine(doerfler_mark(res.final_report, theta));
  }
  return res;
}

namespace {

bool vertex_prefix(const Mesh& coarse, const Mesh& fine) {
  if (fine.num_vertices() < coarse.num_vertices()) return false;
  for (std::size_t i = 0; i < coarse.num_vertices(); ++i)
    if (coarse.vertices()[i].x != fine.vertices()[i].x || coarse.vertices()[i].y != fine.vertices()[i].y) return false;
  return true;
}

Preconditioner fem_preconditioner(const UzawaConfig& config, const SparseMatrix& S,
                                  const std::shared_ptr<MeshHierarchy>& hierarchy) {
  switch (config.fem_preconditioner) {
    case PreconditionerKind::Identity: return identity_preconditioner();
    case PreconditionerKind::Jacobi: return jacobi_preconditioner(S);
    case PreconditionerKind::Exact: return exact_preconditioner(S);
    case PreconditionerKind::LocalMultilevelDiagonal: break;
  }
  return local_multilevel_preconditioner(hierarchy);
}

Preconditioner bem_preconditioner(const UzawaConfig& config, const DenseMatrix& V) {
  switch (config.bem_preconditioner) {
    case PreconditionerKind::Identity: return identity_preconditioner();
    case PreconditionerKind::Exact: return exact_preconditioner(V);
    case PreconditionerKind::Jacobi:
    case PreconditionerKind::LocalMultilevelDiagonal: break;
  }
  return jacobi_preconditioner(V);
}

std::vector<Index> facet_edges(const Mesh& mesh, const std::vector<Index>& facets) {
  std::vector<Index> edges;
  edges.reserve(facets.size());
  for (Index k : facets) edges.push_back(mesh.boundary()[k].edge);
  return edges;
}

std::vector<Index> all_facets(const Mesh& mesh) {
  std::vector<Index> all(mesh.boundary().size());
  for (std::size_t k = 0; k < all.size(); ++k) all[k] = static_cast<Index>(k);
  return all;
}

// Working data of one outer step, carried through all refinements.
struct StepContext {
  std::shared_ptr<const Mesh> mesh;
  FeFunction u_prev;
  FeFunction w;
  Vector phi;
  std::shared_ptr<MeshHierarchy> hierarchy;
  // quasi-error probe: iterates of the running inner loop, kept on the current mesh
  std::vector<Vector> probe;
  bool probe_density = false;

  void refine(std::pair<Mesh, RefinementRelation> refined) {
    auto fine = std::make_shared<const Mesh>(std::move(refined.first));
    const RefinementRelation& rel = refined.second;
    u_prev = prolongate(u_prev, rel, fine);
    w = prolongate(w, rel, fine);
    phi = prolongate_density(phi, rel);
    for (auto& v : probe) v = probe_density ? prolongate_density(v, rel) : prolongate(v, rel);
    hierarchy->push(fine, rel);
    mesh = std::move(fine);
  }
};

std::vector<double> quasi_error(const std::vector<Vector>& iterates, const Vector& reference,
                                const std::function<Vector(const Vector&)>& lift, const LinearOperator& energy,
                                const std::vector<double>& estimator_sq, double kappa) {
  std::vector<double> delta;
  for (std::size_t l = 0; l < iterates.size(); ++l) {
    const Vector e = reference - lift(iterates[l]);
    delta.push_back(e.dot(energy(e)) + kappa * estimator_sq[l]);
  }
  return delta;
}

}  // namespace

UzawaState initial_state(const ProblemSpec& spec, const UzawaConfig& config) {
  config.validate();
  UzawaState s;
  s.mesh = std::make_shared<const Mesh>(make_initial_mesh(spec.domain));
  s.mesh_prev = s.mesh;
  s.mesh_i = s.mesh;
  s.u = FeFunction::zero(s.mesh);
  s.w = FeFunction::zero(s.mesh);
  s.phi = Vector::Zero(static_cast<Index>(s.mesh->boundary().size()));
  s.gamma = config.gamma;
  s.epsilon = config.algorithm == Algorithm::FixedGamma ? config.gamma : config.epsilon1;
  s.hierarchy = std::make_shared<MeshHierarchy>(s.mesh);
  s.bem_cache = std::make_shared<BoundaryOperatorCache>(config.bem_points);
  return s;
}

void uzawa_step(UzawaState& state, const ProblemSpec& spec, const UzawaConfig& config) {
  const int j = state.j + 1;
  const double eps = state.epsilon;
  StepRecord rec;
  rec.j = j;
  rec.gamma = state.gamma;
  rec.epsilon = eps;
  rec.tol_i = config.C_i * eps;
  rec.tol_ii = config.C_ii * eps;

  StepContext ctx{state.mesh, state.u, state.w, state.phi, state.hierarchy, {}, false};
  const bool exact = config.solver == SolverMode::Exact;

  // ---- step [i]: BEM problem V phi = (K - 1/2)(trace u_{j-1} - u0_h)
  std::shared_ptr<const BoundaryMesh> bmesh;
  std::shared_ptr<const BoundaryOperators> ops;
  BoundaryTrace g;
  auto update_boundary = [&] {
    auto bm = std::make_shared<const BoundaryMesh>(boundary_trace(*ctx.mesh));
    auto next = state.bem_cache->get(bm);
    if (next != ops && config.check_v_spd) {
      state.min_v_pivot = std::min(state.min_v_pivot, min_cholesky_pivot(next->V));
      ++state.v_checked;
    }
    ops = next;
    bmesh = ops->bmesh;
    const BoundaryTrace u0h = nodal_interpolate_u0(bmesh, spec.u0);
    g = trace_of(ctx.u_prev, bmesh);
    g.values -= u0h.values;
  };
  update_boundary();

  // initial guess: one CG step from the previous density
  bool first = true;
  double bem_surrogate = 0.0;
  InnerLoopHooks bem;
  bem.solve = [&]() -> double {
    const Vector rhs = ops->rhs(g.values);
    if (exact) {
      ctx.phi = cholesky_solve(ops->V, rhs);
      bem_surrogate = 0.0;
    } else {
      const Preconditioner P = bem_preconditioner(config, ops->V);
      if (first) ctx.phi = pcg(ops->V, rhs, ctx.phi, P, StoppingRule::relative(1e-300, 1)).x;
      const PcgResult r = pcg(ops->V, rhs, ctx.phi, P, config.pcg);
      ctx.phi = r.x;
      bem_surrogate = r.surrogate();
    }
    first = false;
    if (config.quasi_error_probe) ctx.probe.push_back(ctx.phi);
    return bem_surrogate;
  };
  bem.estimate = [&] { return mu_bem(*ops, BemDensity{bmesh, ctx.phi}, g, spec.u0, spec.grad_u0); };
  bem.refine = [&](const MarkedSet& m) {
    ctx.refine(refine_nvb_edges(*ctx.mesh, facet_edges(*ctx.mesh, m.ids)));
    update_boundary();
  };
  ctx.probe_density = true;
  const InnerLoopResult ri = adaptive_inner_loop(bem, config.theta, rec.tol_i, config.inner_max_loops);
  rec.kBEM = ri.solves;
  rec.estBEM = std::sqrt(ri.estimator_sq.back());
  rec.bem_exit = ri.exit_value();
  rec.inner_converged = ri.converged;

  if (config.quasi_error_probe && ri.solves > 1) {
    // reference: boundary bisected twice, exact solve
    auto m1 = refine_nvb_edges(*ctx.mesh, facet_edges(*ctx.mesh, all_facets(*ctx.mesh)));
    auto m2 = refine_nvb_edges(m1.first, facet_edges(m1.first, all_facets(m1.first)));
    auto fine = std::make_shared<const Mesh>(std::move(m2.first));
    const FeFunction u_ref(fine, prolongate(prolongate(ctx.u_prev.values, m1.second), m2.second));
    auto bm = std::make_shared<const BoundaryMesh>(boundary_trace(*fine));
    const DenseMatrix V = assemble_single_layer(*bm);
    BoundaryTrace gr = trace_of(u_ref, bm);
    gr.values -= nodal_interpolate_u0(bm, spec.u0).values;
    const Vector ref = cholesky_solve(V, assemble_dl_rhs(*bm, gr));
    const auto lift = [&](const Vector& v) { return prolongate_density(prolongate_density(v, m1.second), m2.second); };
    state.quasi_error.push_back({j, 'i', quasi_error(ctx.probe, ref, lift, [&V](const Vector& e) -> Vector { return V * e; },
                                                     ri.estimator_sq, config.quasi_error_kappa)});
  }
  ctx.probe.clear();
  ctx.probe_density = false;
  state.mesh_i = ctx.mesh;
  rec.nE_i = ctx.mesh->num_triangles();

  // ---- step [ii]: Riesz problem R w = f - A u_{j-1} + (phi0 + phi_j)
  double fem_surrogate = 0.0;
  InnerLoopHooks fem;
  fem.solve = [&]() -> double {
    const SparseMatrix S = assemble_riesz(*ctx.mesh);
    const Vector F = assemble_w_rhs(*ctx.mesh, RieszLoad{spec.f, spec.phi0, {ctx.phi.data(), static_cast<std::size_t>(ctx.phi.size())}},
                                    ctx.u_prev, spec.op);
    if (exact) {
      ctx.w = FeFunction(ctx.mesh, cholesky_solve(S, F));
      fem_surrogate = 0.0;
    } else {
      const Preconditioner P = fem_preconditioner(config, S, ctx.hierarchy);
      const PcgResult r = pcg(S, F, ctx.w.values, P, config.pcg);
      ctx.w = FeFunction(ctx.mesh, r.x);
      fem_surrogate = r.surrogate();
    }
    if (config.quasi_error_probe) ctx.probe.push_back(ctx.w.values);
    return fem_surrogate;
  };
  fem.estimate = [&] {
    const Vector& phi = ctx.phi;
    const FluxField& phi0 = spec.phi0;
    return eta_fem(*ctx.mesh, ctx.w, ctx.u_prev,
                   [&phi, &phi0](Index k, Vertex x, Vertex n) { return phi0(x, n) + phi[k]; }, spec.f, spec.op);
  };
  fem.refine = [&](const MarkedSet& m) { ctx.refine(refine_bisec3(*ctx.mesh, m.ids)); };
  const InnerLoopResult rii = adaptive_inner_loop(fem, config.theta, rec.tol_ii, config.inner_max_loops);
  rec.kFEM = rii.solves;
  rec.estFEM = std::sqrt(rii.estimator_sq.back());
  rec.fem_exit = rii.exit_value();
  rec.inner_converged = rec.inner_converged && rii.converged;

  if (config.quasi_error_probe && rii.solves > 1) {
    auto m1 = refine_uniform(*ctx.mesh);
    auto m2 = refine_uniform(m1.first);
    auto fine = std::make_shared<const Mesh>(std::move(m2.first));
    const auto lift = [&](const Vector& v) { return prolongate(prolongate(v, m1.second), m2.second); };
    const FeFunction u_ref(fine, lift(ctx.u_prev.values));
    const Vector phi_ref = prolongate_density(prolongate_density(ctx.phi, m1.second), m2.second);
    const SparseMatrix S = assemble_riesz(*fine);
    const Vector F = assemble_w_rhs(*fine, RieszLoad{spec.f, spec.phi0, {phi_ref.data(), static_cast<std::size_t>(phi_ref.size())}},
                                    u_ref, spec.op);
    const Vector ref = cholesky_solve(S, F);
    state.quasi_error.push_back({j, 'f', quasi_error(ctx.probe, ref, lift, [&S](const Vector& e) -> Vector { return S * e; },
                                                     rii.estimator_sq, config.quasi_error_kappa)});
  }
  ctx.probe.clear();

  // ---- step [iii]: Richardson update
  FeFunction u_new(ctx.mesh, ctx.u_prev.values + config.alpha * ctx.w.values);
  rec.richardson_defect = (u_new.values - ctx.u_prev.values - config.alpha * ctx.w.values).cwiseAbs().maxCoeff();
  rec.nested = vertex_prefix(*state.mesh, *state.mesh_i) && vertex_prefix(*state.mesh_i, *ctx.mesh);

  rec.w_norm = h1_norm(ctx.w);
  rec.nE = ctx.mesh->num_triangles();
  rec.estTOT = global_nu(rec.estFEM, rec.estBEM, rec.w_norm, std::sqrt(fem_surrogate), std::sqrt(bem_surrogate));

  state.mesh_prev = state.mesh;
  state.mesh = ctx.mesh;
  state.u = std::move(u_new);
  state.w = ctx.w;
  state.phi = ctx.phi;
  state.j = j;

  if (spec.exact) {
    rec.errH1 = h1_error(spec.exact->u, spec.exact->grad_u, state.u);
    const BoundaryMesh bm = boundary_trace(*state.mesh);
    const ExactSolution& ex = *spec.exact;
    rec.errGamma = hminushalf_error_surrogate(bm, [&ex](Vertex x, Vertex n) { return ex.phi(x, n); },
                                              BemDensity{nullptr, state.phi});
  }

  // ---- tolerance schedule
  if (config.algorithm == Algorithm::AdaptiveGamma) {
    if (j >= 2 && state.w_norm_prev > 0.0) {
      double g = rec.w_norm / state.w_norm_prev;
      if (!(g < 1.0)) {
        g = 0.99;
        rec.gamma_clamped = true;
      }
      state.gamma = g;
    }
    state.epsilon = state.gamma * eps;
  } else {
    state.epsilon = std::pow(config.gamma, j + 1);
  }
  rec.gamma = state.gamma;
  state.w_norm_prev = rec.w_norm;
  state.history.push_back(rec);
}

UzawaState run_uzawa(const ProblemSpec& spec, const UzawaConfig& config, const StepCallback& on_step) {
  UzawaState state = initial_state(spec, config);
  while (state.j < config.max_steps) {
    uzawa_step(state, spec, config);
    const StepRecord& rec = state.history.back();
    if (on_step) on_step(state, rec);
    if (rec.nE > config.max_elements) break;
    if (config.nu_target > 0.0 && rec.estTOT < config.nu_target) break;
  }
  return state;
}

UzawaState run_fixed_gamma(const ProblemSpec& spec, const UzawaConfig& config, const StepCallback& on_step) {
  if (config.algorithm != Algorithm::FixedGamma) throw std::invalid_argument("config is not a fixed-gamma run");
  return run_uzawa(spec, config, on_step);
}

UzawaState run_adaptive_gamma(const ProblemSpec& spec, const UzawaConfig& config, const StepCallback& on_step) {
  if (config.algorithm != Algorithm::AdaptiveGamma) throw std::invalid_argument("config is not an adaptive-gamma run");
  return run_uzawa(spec, config, on_step);
}

}  // namespace fembem
