#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <functional>
#include <memory>
#include <span>

#include "fembem/mesh.hpp"
#include "fembem/model.hpp"
#include "fembem/quadrature.hpp"

namespace fembem {

using Vector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double>;

/// Continuous piecewise affine function, one value per mesh vertex.
struct FeFunction {
  std::shared_ptr<const Mesh> mesh;
  Vector values;

  FeFunction() = default;
  FeFunction(std::shared_ptr<const Mesh> m, Vector v);
  static FeFunction zero(std::shared_ptr<const Mesh> m);

  /// Elementwise constant gradient.
  Vertex gradient(Index t) const;
  /// Value at barycentric coordinates (l1, l2) of triangle t.
  double value(Index t, double l1, double l2) const;
};

/// Gradients of the three barycentric coordinates of triangle t.
std::array<Vertex, 3> barycentric_gradients(const Mesh& mesh, Index t);
/// Physical point of barycentric coordinates (l1, l2) in triangle t.
Vertex map_to_triangle(const Mesh& mesh, Index t, double l1, double l2);

SparseMatrix assemble_stiffness(const Mesh& mesh, Exec exec = default_exec);
SparseMatrix assemble_mass(const Mesh& mesh, Exec exec = default_exec);
/// S_ij = (grad xi_i, grad xi_j) + (xi_i, xi_j), exact for P1.
SparseMatrix assemble_riesz(const Mesh& mesh, Exec exec = default_exec);
/// Diagonal of the Riesz matrix without assembling it.
Vector riesz_diagonal(const Mesh& mesh);

/// Data of the step-[ii] load functional.
struct RieszLoad {
  ScalarField f;               // volume data, may be empty (zero)
  FluxField phi0;              // boundary flux data (x, n), may be empty (zero)
  std::span<const double> phi; // P0 boundary density per boundary facet, may be empty (zero)
};

/// F_i = <f, xi_i> + <phi0 + phi, xi_i>_Gamma - <A u_prev, xi_i>.
/// u_prev must live on `mesh` (prolongate first).
Vector assemble_w_rhs(const Mesh& mesh, const RieszLoad& load, const FeFunction& u_prev, const InteriorOperator& op,
                      const QuadratureRule& rule = triangle_default(), Exec exec = default_exec);

/// Volume load <f, xi_i> only.
Vector assemble_load(const Mesh& mesh, const ScalarField& f, const QuadratureRule& rule = triangle_default());

/// Nodal values on the fine mesh of the same piecewise affine function.
Vector prolongate(const Vector& coarse, const RefinementRelation& relation);
FeFunction prolongate(const FeFunction& u, const RefinementRelation& relation, std::shared_ptr<const Mesh> fine);

/// Nodal interpolant of a continuous function.
FeFunction interpolate(std::shared_ptr<const Mesh> mesh, const ScalarField& u);

/// (sum_T int_T |u - u_h|^2 + |grad u - grad u_h|^2)^{1/2} under `rule`.
double h1_error(const ScalarField& u, const VectorField& grad_u, const FeFunction& u_h,
                const QuadratureRule& rule = triangle_default(), Exec exec = default_exec);
/// ||u_h||_{H^1}, exact for P1.
double h1_norm(const FeFunction& u_h);

}  // namespace fembem
