#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "wpcn/throughput.hpp"

namespace wpcn {

struct SolverOptions {
  double tol_obj = 1e-6;        // relative objective tolerance
  double tol_con = 1e-8;        // constraint violation tolerance
  int max_iter = 500;           // outer iteration cap
  double interior_margin = 1e-6; // epsilon keeping tau0 in [eps, 1-eps]
};

/// A smooth scalar function with analytic gradient and Hessian. All solver
/// paths use analytic derivatives; finite differences live in the oracle
/// module and only validate.
struct SmoothFn {
  std::function<double(const Eigen::VectorXd&)> value;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> grad;
  std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> hess;
};

/// minimize objective(x)
///   s.t. a_ineq * x <= b_ineq            (affine rows)
///        f(x) <= 0 for each f in ineq    (smooth convex)
struct ConvexProblem {
  SmoothFn objective;
  Eigen::MatrixXd a_ineq; // may be 0 x n
  Eigen::VectorXd b_ineq;
  std::vector<SmoothFn> ineq;
};

struct ConvexResult {
  Eigen::VectorXd x;
  double objective = 0.0;
  SolveStatus status = SolveStatus::Infeasible;
  double kkt_residual = 0.0; // stationarity residual with barrier multipliers
  double gap = 0.0;          // final barrier duality-gap bound m/t
  int newton_iters = 0;
};

/// Log-barrier interior-point method with damped Newton centering and a
/// feasibility-first backtracking line search. The start must be strictly
/// feasible; otherwise the result is Infeasible.
ConvexResult solve_convex(const ConvexProblem& problem,
                          const Eigen::VectorXd& start,
                          const SolverOptions& opts);

/// c * prod_j x_j^a_j stored as (log c, a).
struct Monomial {
  double log_coeff = 0.0;
  Eigen::VectorXd exponents;
};

struct Posynomial {
  std::vector<Monomial> terms;
};

/// minimize objective (posynomial) s.t. each constraint posynomial <= 1,
/// over x > 0. Solved as the log-transformed convex program: monomials
/// become affine, posynomials become log-sum-exp.
struct GeometricProgram {
  int num_vars = 0;
  Posynomial objective;
  std::vector<Posynomial> constraints;
};

struct GpResult {
  Eigen::VectorXd x; // positive
  double objective = 0.0;
  SolveStatus status = SolveStatus::Infeasible;
};

GpResult solve_gp(const GeometricProgram& gp, const Eigen::VectorXd& start,
                  const SolverOptions& opts);

/// Solves f(z) = target for strictly increasing f with f(0) = 0, f
/// unbounded above, z >= 0. The bracket grows geometrically from [0,1]
/// before bisection; |f(z*) - target| <= tol_con on return.
double bisect_root(const std::function<double(double)>& f, double target,
                   const SolverOptions& opts);

/// Worst-case constraint violations of an allocation against an instance.
/// `feasible` compares violations against tol_con with natural scales:
/// energy relative to the largest per-user full-horizon harvest, threshold
/// relative to max(1, S), box absolute.
struct FeasibilityReport {
  double max_energy_violation = 0.0;    // joules
  double max_threshold_violation = 0.0; // linear SINR
  double max_box_violation = 0.0;
  bool feasible = false;
};

FeasibilityReport check_feasible(const NetworkInstance& inst,
                                 const Allocation& alloc, Decoder scheme,
                                 const SolverOptions& opts);

/// Log-sum-exp of affine forms log sum_k exp(c_k + a_k . x) as a SmoothFn;
/// shared by the GP path and tests.
SmoothFn make_log_sum_exp(const std::vector<Monomial>& terms, int num_vars);

} // namespace wpcn
