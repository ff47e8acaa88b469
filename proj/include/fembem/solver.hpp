#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <functional>
#include <memory>
#include <stdexcept>
#include <vector>

#include "fembem/mesh.hpp"

namespace fembem {

using Vector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double>;
using DenseMatrix = Eigen::MatrixXd;
using LinearOperator = std::function<Vector(const Vector&)>;

class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NotSpdError : public SolverError {
 public:
  using SolverError::SolverError;
};

enum class PreconditionerKind { Identity, Jacobi, LocalMultilevelDiagonal, Exact };

/// Symmetric positive definite approximation P of S; apply returns P^{-1} r.
struct Preconditioner {
  PreconditionerKind kind = PreconditionerKind::Identity;
  LinearOperator apply;
};

Preconditioner identity_preconditioner();
Preconditioner jacobi_preconditioner(const Vector& diagonal);
Preconditioner jacobi_preconditioner(const SparseMatrix& S);
Preconditioner jacobi_preconditioner(const DenseMatrix& S);
/// P = S via a Cholesky factorization (oracle for tests).
Preconditioner exact_preconditioner(const SparseMatrix& S);
Preconditioner exact_preconditioner(const DenseMatrix& S);

/// Nested meshes T_0, T_1, ... with the relation mapping level k-1 to k.
class MeshHierarchy {
 public:
  explicit MeshHierarchy(std::shared_ptr<const Mesh> coarse);
  /// Appends a refinement of the finest mesh; identity relations are skipped.
  void push(std::shared_ptr<const Mesh> fine, const RefinementRelation& relation);

  std::size_t levels() const { return levels_.size(); }
  const Mesh& finest() const { return *levels_.back().mesh; }
  std::shared_ptr<const Mesh> finest_ptr() const { return levels_.back().mesh; }

  struct Level {
    std::shared_ptr<const Mesh> mesh;
    std::vector<std::array<Index, 2>> new_vertex_parents;  // empty on level 0
    std::vector<Index> local;                               // vertices whose hat changed
    Vector diagonal;                                        // Riesz diagonal on `local`
  };
  const std::vector<Level>& data() const { return levels_; }

 private:
  std::vector<Level> levels_;
};

/// Additive multilevel diagonal scaling over the hierarchy. A single level
/// reduces to Jacobi.
Preconditioner local_multilevel_preconditioner(std::shared_ptr<const MeshHierarchy> hierarchy);

enum class StoppingMode { RelativeResidual, LambdaCriterion };

struct StoppingRule {
  StoppingMode mode = StoppingMode::RelativeResidual;
  double value = 1e-3;  // tau_rel or lambda
  int max_iterations = 1000;

  static StoppingRule relative(double tau, int max_it = 1000) { return {StoppingMode::RelativeResidual, tau, max_it}; }
  static StoppingRule lambda(double lam, int max_it = 1000) { return {StoppingMode::LambdaCriterion, lam, max_it}; }
};

struct PcgResult {
  Vector x;
  int iterations = 0;
  /// r_k^T P^{-1} r_k for k = 0..iterations
  std::vector<double> energies;
  bool converged = false;

  double surrogate() const { return energies.back(); }
};

/// Preconditioned conjugate gradients. Throws SolverError on zero curvature.
PcgResult pcg(const LinearOperator& S, const Vector& rhs, const Vector& x0, const Preconditioner& P,
              const StoppingRule& rule);
PcgResult pcg(const SparseMatrix& S, const Vector& rhs, const Vector& x0, const Preconditioner& P,
              const StoppingRule& rule);
PcgResult pcg(const DenseMatrix& S, const Vector& rhs, const Vector& x0, const Preconditioner& P,
              const StoppingRule& rule);

/// Throws NotSpdError on a non-positive pivot.
Vector cholesky_solve(const SparseMatrix& S, const Vector& rhs);
Vector cholesky_solve(const DenseMatrix& S, const Vector& rhs);
/// Smallest pivot of the Cholesky factor (squared diagonal of L); negative
/// or zero signals a matrix that is not SPD.
double min_cholesky_pivot(const DenseMatrix& S);

/// (rhs - S x)^T P^{-1} (rhs - S x)
double algebraic_error_surrogate(const LinearOperator& S, const Vector& rhs, const Vector& x, const Preconditioner& P);
double algebraic_error_surrogate(const SparseMatrix& S, const Vector& rhs, const Vector& x, const Preconditioner& P);
double algebraic_error_surrogate(const DenseMatrix& S, const Vector& rhs, const Vector& x, const Preconditioner& P);

}  // namespace fembem
