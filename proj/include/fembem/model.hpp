#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>

#include "fembem/mesh.hpp"

namespace fembem {

using ScalarField = std::function<double(Vertex)>;
using VectorField = std::function<Vertex(Vertex)>;
/// Boundary data depending on the point and the outward unit normal there.
using FluxField = std::function<double(Vertex, Vertex)>;

struct FeFunction;

/// Weak interior operator <Au, v> = int A(grad u).grad v + b(grad u) v + c(u) v.
struct InteriorOperator {
  std::function<Vertex(Vertex, Vertex)> A;   // (x, grad u)
  std::function<double(Vertex, Vertex)> b;   // (x, grad u), empty means 0
  std::function<double(Vertex, double)> c;   // (x, u), empty means 0
  double c_A = 1.0;  // strong monotonicity
  double C_A = 1.0;  // Lipschitz
  /// s > 0 when A(x, g) = s g and b = c = 0; enables matrix-based evaluation.
  double linear_scale = 0.0;
  std::string name;

  bool is_linear() const { return linear_scale > 0.0; }
};

/// chi(t) = 1 + tanh(t)/t, chi(0) = 2.
double chi(double t);
double chi_prime(double t);

InteriorOperator laplace_operator(double scale = 1.0);
/// A(g) = chi(|g|) g.
InteriorOperator chi_operator();

enum class ExampleId { LaplaceLShape, ScaledLaplaceLShape, NonlinearZShape };

std::string to_string(ExampleId id);
/// Accepts "laplace_lshape", "scaled_laplace", "nonlinear_zshape".
std::optional<ExampleId> example_from_string(const std::string& s);

struct ExactSolution {
  ScalarField u;
  VectorField grad_u;
  ScalarField u_ext;
  VectorField grad_u_ext;
  /// phi = d_n u_ext on Gamma
  double phi(Vertex x, Vertex n) const { return dot(grad_u_ext(x), n); }
};

struct ProblemSpec {
  ExampleId example = ExampleId::LaplaceLShape;
  DomainId domain = DomainId::LShape;
  InteriorOperator op;
  ScalarField f;         // empty means 0
  ScalarField u0;        // jump of the traces
  VectorField grad_u0;   // gradient of a smooth extension of u0 (tangential part used)
  FluxField phi0;        // jump of the conormal derivatives
  std::optional<ExactSolution> exact;
  double C_rad = 1.0;
  /// c_A below the classical solvability threshold of the direct coupling.
  bool below_classical_threshold = false;
};

ProblemSpec make_problem(ExampleId example);

/// Polar angle with the branch cut inside the removed wedge of the domain.
double domain_angle(DomainId domain, Vertex x);

/// Vector of <A u, xi_i> over all hat functions of u's mesh.
Eigen::VectorXd apply_interior_operator(const InteriorOperator& op, const FeFunction& u);

/// Over random pairs (v, w) of discrete functions on `mesh`: minimum of
/// <Aw - Av, w - v> / |grad(w - v)|^2 and maximum of
/// ||A grad w - A grad v||_{L2} / ||grad(w - v)||_{L2}.
std::pair<double, double> monotonicity_probe(const InteriorOperator& op, int trials, const Mesh& mesh,
                                             std::uint64_t seed = 1);

}  // namespace fembem
