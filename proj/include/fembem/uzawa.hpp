#pragma once

#include <functional>
#include <limits>
#include <memory>
#include <vector>

#include "fembem/bem.hpp"
#include "fembem/estimate.hpp"
#include "fembem/fem.hpp"
#include "fembem/model.hpp"
#include "fembem/solver.hpp"

namespace fembem {

enum class SolverMode { Exact, PCG };
enum class Algorithm { FixedGamma, AdaptiveGamma };

struct UzawaConfig {
  double alpha = 0.05;
  double gamma = 0.95;    // fixed factor, or the initial guess for AdaptiveGamma
  double theta = 0.25;
  StoppingRule pcg = StoppingRule::relative(1e-3);
  double epsilon1 = 1.0;  // AdaptiveGamma: tolerance of step 1
  double C_i = 1.0;
  double C_ii = 1.0;
  std::size_t max_elements = 10000;
  int max_steps = 2000;
  double nu_target = 0.0;
  SolverMode solver = SolverMode::PCG;
  Algorithm algorithm = Algorithm::FixedGamma;
  PreconditionerKind fem_preconditioner = PreconditionerKind::LocalMultilevelDiagonal;
  PreconditionerKind bem_preconditioner = PreconditionerKind::Jacobi;
  int inner_max_loops = 60;
  int bem_points = 4;  // Gauss nodes per segment for the mu estimator
  // diagnostics
  bool quasi_error_probe = false;
  double quasi_error_kappa = 0.1;
  bool check_v_spd = false;

  void validate() const;  // throws std::invalid_argument
};

/// Hooks of one adaptive loop (solve, estimate, mark, refine).
struct InnerLoopHooks {
  /// Solves on the current mesh; returns the squared algebraic surrogate.
  std::function<double()> solve;
  std::function<EstimatorReport()> estimate;
  std::function<void(const MarkedSet&)> refine;
};

struct InnerLoopResult {
  int solves = 0;                     // l + 1
  std::vector<double> estimator_sq;   // rho_l^2 per loop
  std::vector<double> surrogate_sq;   // algebraic surrogate per loop
  EstimatorReport final_report;
  bool converged = false;             // false: max_loops reached first

  double exit_value() const { return estimator_sq.back() + surrogate_sq.back(); }
};

/// Solve -> estimate -> mark -> refine until rho^2 + surrogate <= tau^2.
InnerLoopResult adaptive_inner_loop(const InnerLoopHooks& hooks, double theta, double tau, int max_loops);

/// One CSV row worth of diagnostics plus internal checks.
struct StepRecord {
  int j = 0;
  std::size_t nE = 0;
  std::size_t nE_i = 0;  // after step [i]
  double errH1 = 0.0;
  double errGamma = 0.0;
  double estFEM = 0.0;
  double estBEM = 0.0;
  double estTOT = 0.0;
  int kBEM = 0;
  int kFEM = 0;
  double gamma = 0.0;
  double epsilon = 0.0;
  bool gamma_clamped = false;
  double w_norm = 0.0;
  double bem_exit = 0.0;  // mu^2 + surrogate at exit of step [i]
  double fem_exit = 0.0;
  double tol_i = 0.0;
  double tol_ii = 0.0;
  bool inner_converged = true;
  double richardson_defect = 0.0;  // max |u_j - prolong(u_{j-1}) - alpha w_j|
  bool nested = true;              // T_{j-1} <= T_j^[i] <= T_j^[ii]
};

/// Quasi-error Delta_l = |||psi_ref - psi_l|||^2 + kappa rho_l^2 along one inner loop.
struct QuasiErrorRecord {
  int j = 0;
  char step = 'i';
  std::vector<double> delta;
};

struct UzawaState {
  int j = 0;
  std::shared_ptr<const Mesh> mesh;     // T_j
  std::shared_ptr<const Mesh> mesh_prev;  // T_{j-1}
  std::shared_ptr<const Mesh> mesh_i;     // T_j^[i]
  FeFunction u;
  FeFunction w;
  Vector phi;  // P0 on the boundary facets of `mesh`
  double gamma = 0.95;
  double epsilon = 1.0;  // tolerance of the next step
  double w_norm_prev = 0.0;
  std::shared_ptr<MeshHierarchy> hierarchy;
  std::shared_ptr<BoundaryOperatorCache> bem_cache;

  std::vector<StepRecord> history;
  std::vector<QuasiErrorRecord> quasi_error;
  double min_v_pivot = std::numeric_limits<double>::infinity();
  int v_checked = 0;
};

UzawaState initial_state(const ProblemSpec& spec, const UzawaConfig& config);

/// Steps [i]-[iii] (and the gamma update of the modified algorithm).
void uzawa_step(UzawaState& state, const ProblemSpec& spec, const UzawaConfig& config);

using StepCallback = std::function<void(const UzawaState&, const StepRecord&)>;

/// Iterates until #T exceeds the budget, nu falls below the target, or max_steps.
UzawaState run_uzawa(const ProblemSpec& spec, const UzawaConfig& config, const StepCallback& on_step = {});
UzawaState run_fixed_gamma(const ProblemSpec& spec, const UzawaConfig& config, const StepCallback& on_step = {});
UzawaState run_adaptive_gamma(const ProblemSpec& spec, const UzawaConfig& config, const StepCallback& on_step = {});

}  // namespace fembem
