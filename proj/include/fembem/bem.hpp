#pragma once

#include <Eigen/Dense>
#include <memory>

#include "fembem/fem.hpp"
#include "fembem/mesh.hpp"
#include "fembem/quadrature.hpp"

namespace fembem {

using DenseMatrix = Eigen::MatrixXd;

/// Piecewise constant density, one value per boundary segment.
struct BemDensity {
  std::shared_ptr<const BoundaryMesh> bmesh;
  Vector values;
};

/// Continuous piecewise affine boundary function, one value per boundary node.
struct BoundaryTrace {
  std::shared_ptr<const BoundaryMesh> bmesh;
  Vector values;
};

struct BemOptions {
  int outer_gauss = 4;  // Gauss points per outer sub-panel
  int max_depth = 40;   // bisection depth toward touching panels
};

/// Integral of G(x - y) over the straight panel [a, b], G(z) = -log|z| / (2 pi).
double single_layer_panel(Vertex x, Vertex a, Vertex b);
/// Gradient in x of single_layer_panel. x must not lie on the closed panel
/// unless it is interior to it (then the normal component is the mean of the
/// one-sided limits).
Vertex single_layer_panel_gradient(Vertex x, Vertex a, Vertex b);
/// Integral of d_{n(y)} G(x - y) g(y) over the panel for g affine with end
/// values ga, gb; zero for x on the panel line.
double double_layer_panel(Vertex x, Vertex a, Vertex b, double ga, double gb);
Vertex double_layer_panel_gradient(Vertex x, Vertex a, Vertex b, double ga, double gb);

/// V[E][E'] = int_E int_E' G(x - y).
DenseMatrix assemble_single_layer(const BoundaryMesh& bmesh, const BemOptions& opt = {}, Exec exec = default_exec);
/// Kmat[E][node] with (Kmat g)[E] = int_E (K g) for g in S1 on the boundary mesh.
DenseMatrix assemble_double_layer(const BoundaryMesh& bmesh, const BemOptions& opt = {}, Exec exec = default_exec);
/// (M g)[E] = int_E g.
Vector boundary_mass_apply(const BoundaryMesh& bmesh, const Vector& g);

/// rhs[E] = int_E ((K - 1/2) g).
Vector assemble_dl_rhs(const BoundaryMesh& bmesh, const BoundaryTrace& g, const BemOptions& opt = {});

/// Boundary potentials at a single point.
double eval_single_layer(const BemDensity& psi, Vertex x);
/// Double-layer potential; for x on Gamma away from corners this is the
/// boundary operator value (K g)(x).
double eval_double_layer(const BoundaryTrace& g, Vertex x);

/// Samples of d/ds[(K - 1/2) g - V psi] at Gauss nodes of each segment.
struct ResidualSamples {
  QuadratureRule rule;  // Gauss nodes on [0, 1]
  DenseMatrix values;   // segments x nodes
};

/// Cached operators of one boundary mesh.
struct BoundaryOperators {
  std::shared_ptr<const BoundaryMesh> bmesh;
  BemOptions options;
  DenseMatrix V;
  DenseMatrix K;   // double layer, segments x nodes
  QuadratureRule derivative_rule;
  DenseMatrix DV;  // (segment * points) x segments, tangential derivative of V
  DenseMatrix DK;  // (segment * points) x nodes, tangential derivative of K

  Vector rhs(const Vector& g) const;  // (K - 1/2) g integrated per segment
};

std::shared_ptr<const BoundaryOperators> build_boundary_operators(std::shared_ptr<const BoundaryMesh> bmesh,
                                                                  int points_per_segment = 4,
                                                                  const BemOptions& opt = {},
                                                                  Exec exec = default_exec);

/// Returns cached operators when `bmesh` has the same geometry as the last
/// request, otherwise builds new ones.
class BoundaryOperatorCache {
 public:
  explicit BoundaryOperatorCache(int points_per_segment = 4, BemOptions opt = {})
      : points_(points_per_segment), opt_(opt) {}
  std::shared_ptr<const BoundaryOperators> get(std::shared_ptr<const BoundaryMesh> bmesh);
  int builds() const { return builds_; }

 private:
  int points_;
  BemOptions opt_;
  std::shared_ptr<const BoundaryOperators> last_;
  int builds_ = 0;
};

ResidualSamples eval_residual_derivative(const BoundaryOperators& ops, const BemDensity& psi, const BoundaryTrace& g);
/// Direct evaluation without a cache; points must be interior nodes.
ResidualSamples eval_residual_derivative(const BoundaryMesh& bmesh, const BemDensity& psi, const BoundaryTrace& g,
                                         int points_per_segment);
/// Same quantity at one interior point of a segment, t in (0, 1).
double eval_residual_derivative_at(const BemDensity& psi, const BoundaryTrace& g, Index segment, double t);

BoundaryTrace nodal_interpolate_u0(std::shared_ptr<const BoundaryMesh> bmesh, const ScalarField& u0);
/// Trace of a volume function on the boundary mesh of its own mesh.
BoundaryTrace trace_of(const FeFunction& u, std::shared_ptr<const BoundaryMesh> bmesh);

/// (sum_E |E| int_E (phi - phi_h)^2)^{1/2}
double hminushalf_error_surrogate(const BoundaryMesh& bmesh, const FluxField& phi_exact, const BemDensity& phi_h);

/// Copies segment values to the son segments.
Vector prolongate_density(const Vector& coarse, const RefinementRelation& relation);

/// Same node coordinates and segment connectivity.
bool same_geometry(const BoundaryMesh& a, const BoundaryMesh& b);

}  // namespace fembem
