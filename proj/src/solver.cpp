#include "fembem/solver.hpp"

#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>

#include "fembem/fem.hpp"

namespace fembem {

Preconditioner identity_preconditioner() {
  return {PreconditionerKind::Identity, [](const Vector& r) { return r; }};
}

Preconditioner jacobi_preconditioner(const Vector& diagonal) {
  if ((diagonal.array() <= 0.0).any()) throw NotSpdError("Jacobi preconditioner needs a positive diagonal");
  Vector inv = diagonal.cwiseInverse();
  return {PreconditionerKind::Jacobi, [inv = std::move(inv)](const Vector& r) -> Vector { return inv.cwiseProduct(r); }};
}

Preconditioner jacobi_preconditioner(const SparseMatrix& S) { return jacobi_preconditioner(Vector(S.diagonal())); }
Preconditioner jacobi_preconditioner(const DenseMatrix& S) { return jacobi_preconditioner(Vector(S.diagonal())); }

Preconditioner exact_preconditioner(const SparseMatrix& S) {
  auto llt = std::make_shared<Eigen::SimplicialLLT<SparseMatrix>>(S);
  if (llt->info() != Eigen::Success) throw NotSpdError("exact preconditioner: matrix is not SPD");
  return {PreconditionerKind::Exact, [llt](const Vector& r) -> Vector { return llt->solve(r); }};
}

Preconditioner exact_preconditioner(const DenseMatrix& S) {
  auto llt = std::make_shared<Eigen::LLT<DenseMatrix>>(S);
  if (llt->info() != Eigen::Success) throw NotSpdError("exact preconditioner: matrix is not SPD");
  return {PreconditionerKind::Exact, [llt](const Vector& r) -> Vector { return llt->solve(r); }};
}

MeshHierarchy::MeshHierarchy(std::shared_ptr<const Mesh> coarse) {
  Level l;
  l.mesh = std::move(coarse);
  const auto n = static_cast<Index>(l.mesh->num_vertices());
  l.local.resize(n);
  for (Index i = 0; i < n; ++i) l.local[i] = i;
  l.diagonal = riesz_diagonal(*l.mesh);
  levels_.push_back(std::move(l));
}

void MeshHierarchy::push(std::shared_ptr<const Mesh> fine, const RefinementRelation& relation) {
  if (relation.coarse_vertices != finest().num_vertices())
    throw MeshError("hierarchy: relation does not start at the finest level");
  if (relation.identity()) {
    levels_.back().mesh = std::move(fine);
    return;
  }
  Level l;
  l.mesh = std::move(fine);
  l.new_vertex_parents = relation.new_vertex_parents;
  // vertices of all sons of refined triangles: new vertices and every vertex
  // whose patch changed
  std::vector<char> flag(l.mesh->num_vertices(), 0);
  for (const auto& sons : relation.triangle_sons) {
    if (sons.size() < 2) continue;
    for (Index s : sons)
      for (Index v : l.mesh->triangles()[s].v) flag[v] = 1;
  }
  for (std::size_t v = 0; v < flag.size(); ++v)
    if (flag[v]) l.local.push_back(static_cast<Index>(v));
  const Vector d = riesz_diagonal(*l.mesh);
  l.diagonal.resize(static_cast<Index>(l.local.size()));
  for (std::size_t k = 0; k < l.local.size(); ++k) l.diagonal[static_cast<Index>(k)] = d[l.local[k]];
  levels_.push_back(std::move(l));
}

Preconditioner local_multilevel_preconditioner(std::shared_ptr<const MeshHierarchy> hierarchy) {
  if (!hierarchy || hierarchy->levels() == 0) throw SolverError("empty hierarchy");
  if (hierarchy->levels() == 1) return jacobi_preconditioner(hierarchy->data()[0].diagonal);
  auto apply = [h = std::move(hierarchy)](const Vector& r) -> Vector {
    const auto& levels = h->data();
    const std::size_t L = levels.size();
    if (static_cast<std::size_t>(r.size()) != levels.back().mesh->num_vertices())
      throw SolverError("multilevel preconditioner applied on the wrong mesh");
    Vector work = r;
    std::vector<Vector> c(L);
    // restriction from the finest level down, keeping scaled local residuals
    for (std::size_t l = L; l-- > 0;) {
      const auto& lev = levels[l];
      c[l].resize(static_cast<Index>(lev.local.size()));
      for (std::size_t k = 0; k < lev.local.size(); ++k)
        c[l][static_cast<Index>(k)] = work[lev.local[k]] / lev.diagonal[static_cast<Index>(k)];
      if (l == 0) break;
      const auto nc = static_cast<Index>(levels[l - 1].mesh->num_vertices());
      for (std::size_t k = lev.new_vertex_parents.size(); k-- > 0;) {
        const double half = 0.5 * work[nc + static_cast<Index>(k)];
        work[lev.new_vertex_parents[k][0]] += half;
        work[lev.new_vertex_parents[k][1]] += half;
      }
    }
    // prolongation back up, adding the local corrections
    work.setZero();
    for (std::size_t l = 0; l < L; ++l) {
      const auto& lev = levels[l];
      if (l > 0) {
        const auto nc = static_cast<Index>(levels[l - 1].mesh->num_vertices());
        for (std::size_t k = 0; k < lev.new_vertex_parents.size(); ++k)
          work[nc + static_cast<Index>(k)] =
              0.5 * (work[lev.new_vertex_parents[k][0]] + work[lev.new_vertex_parents[k][1]]);
      }
      for (std::size_t k = 0; k < lev.local.size(); ++k) work[lev.local[k]] += c[l][static_cast<Index>(k)];
    }
    return work;
  };
  return {PreconditionerKind::LocalMultilevelDiagonal, std::move(apply)};
}

PcgResult pcg(const LinearOperator& S, const Vector& rhs, const Vector& x0, const Preconditioner& P,
              const StoppingRule& rule) {
  if (rule.mode == StoppingMode::LambdaCriterion && !(rule.value >= 0.0 && rule.value < 1.0))
    throw SolverError("lambda must lie in [0, 1)");
  if (rule.mode == StoppingMode::RelativeResidual && !(rule.value > 0.0)) throw SolverError("tau_rel must be positive");
  PcgResult res;
  res.x = x0;
  Vector r = rhs - S(x0);
  Vector z = P.apply(r);
  double rz = r.dot(z);
  res.energies.push_back(rz);
  const double rz0 = rz;
  auto done = [&](double e) {
    if (e <= 0.0) return true;
    return rule.mode == StoppingMode::RelativeResidual ? std::sqrt(e) <= rule.value * std::sqrt(rz0)
                                                      : e <= rule.value * rz0;
  };
  if (done(rz)) {
    res.converged = true;
    return res;
  }
  Vector p = z;
  while (res.iterations < rule.max_iterations) {
    const Vector Sp = S(p);
    const double curvature = p.dot(Sp);
    if (!(curvature > 0.0)) throw SolverError("PCG breakdown: non-positive curvature");
    const double alpha = rz / curvature;
    res.x += alpha * p;
    r -= alpha * Sp;
    z = P.apply(r);
    const double rz_new = r.dot(z);
    ++res.iterations;
    res.energies.push_back(rz_new);
    if (done(rz_new)) {
      res.converged = true;
      return res;
    }
    p = z + (rz_new / rz) * p;
    rz = rz_new;
  }
  return res;
}

PcgResult pcg(const SparseMatrix& S, const Vector& rhs, const Vector& x0, const Preconditioner& P,
              const StoppingRule& rule) {
  return pcg([&S](const Vector& v) -> Vector { return S * v; }, rhs, x0, P, rule);
}

PcgResult pcg(const DenseMatrix& S, const Vector& rhs, const Vector& x0, const Preconditioner& P,
              const StoppingRule& rule) {
  return pcg([&S](const Vector& v) -> Vector { return S * v; }, rhs, x0, P, rule);
}

Vector cholesky_solve(const SparseMatrix& S, const Vector& rhs) {
  Eigen::SimplicialLLT<SparseMatrix> llt(S);
  if (llt.info() != Eigen::Success) throw NotSpdError("matrix is not SPD (non-positive pivot)");
  return llt.solve(rhs);
}

Vector cholesky_solve(const DenseMatrix& S, const Vector& rhs) {
  Eigen::LLT<DenseMatrix> llt(S);
  if (llt.info() != Eigen::Success) throw NotSpdError("matrix is not SPD (non-positive pivot)");
  return llt.solve(rhs);
}

double min_cholesky_pivot(const DenseMatrix& S) {
  Eigen::LLT<DenseMatrix> llt(S);
  if (llt.info() != Eigen::Success) return -1.0;
  return llt.matrixLLT().diagonal().array().square().minCoeff();
}

double algebraic_error_surrogate(const LinearOperator& S, const Vector& rhs, const Vector& x, const Preconditioner& P) {
  const Vector r = rhs - S(x);
  return r.dot(P.apply(r));
}

double algebraic_error_surrogate(const SparseMatrix& S, const Vector& rhs, const Vector& x, const Preconditioner& P) {
  const Vector r = rhs - S * x;
  return r.dot(P.apply(r));
}

double algebraic_error_surrogate(const DenseMatrix& S, const Vector& rhs, const Vector& x, const Preconditioner& P) {
  const Vector r = rhs - S * x;
  return r.dot(P.apply(r));
}

}  // namespace fembem
