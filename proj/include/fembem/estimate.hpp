#pragma once

#include <string>
#include <vector>

#include "fembem/bem.hpp"
#include "fembem/fem.hpp"

namespace fembem {

/// Squared per-element indicators of one estimator evaluation.
struct EstimatorReport {
  std::string label;              // "eta" or "mu"
  std::vector<double> indicators;  // squared, >= 0
  double algebraic_surrogate = 0.0;  // squared P-norm of the algebraic residual

  double total_squared() const;
  double total() const;
};

struct MarkedSet {
  std::vector<Index> ids;  // ascending
  double theta = 0.0;
  double achieved_fraction = 0.0;
};

/// Flux data phi0 + phi_j at a point of boundary facet k with outward normal n.
using BoundaryFlux = std::function<double(Index, Vertex, Vertex)>;

/// Weighted residual estimator of the step-[ii] Riesz problem for p = 1.
EstimatorReport eta_fem(const Mesh& mesh, const FeFunction& w, const FeFunction& u_prev, const BoundaryFlux& phi_total,
                        const ScalarField& f, const InteriorOperator& op, Exec exec = default_exec);

/// Residual estimator of the step-[i] BEM problem; g = trace(u_prev) - u0_h.
/// The oscillation term projects the exact arclength derivative of u0
/// (tangential part of grad_u0) onto constants.
EstimatorReport mu_bem(const BoundaryOperators& ops, const BemDensity& psi, const BoundaryTrace& g,
                       const ScalarField& u0, const VectorField& grad_u0);
/// Uncached variant evaluating potentials directly.
EstimatorReport mu_bem(const BoundaryMesh& bmesh, const BemDensity& psi, const BoundaryTrace& g,
                       const ScalarField& u0, const VectorField& grad_u0, int points_per_segment = 4);

/// Oscillation |E| ||(1 - Pi) d/ds u0||^2_E per segment, Gauss rule on [0, 1].
std::vector<double> oscillation(const BoundaryMesh& bmesh, const ScalarField& u0, const VectorField& grad_u0,
                                const QuadratureRule& rule);

/// Minimal-cardinality Doerfler set: greedy on descending indicators, ties by id.
MarkedSet doerfler_mark(const EstimatorReport& report, double theta);

/// nu = eta + mu + ||w|| + fem algebraic error + bem algebraic error (all norms).
double global_nu(double eta_total, double mu_total, double w_h1_norm, double fem_alg_error, double bem_alg_error);

}  // namespace fembem
