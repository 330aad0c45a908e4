#pragma once

#include <Eigen/Dense>

#include "wpcn/solver_core.hpp"
#include "wpcn/throughput.hpp"

namespace wpcn {

/// One monomial condensation of the LCD sum-throughput denominator
/// f(x) = prod (1+x_it)^(1-tau0_t) around the previous iterate x_bar:
/// ftilde(x) = c * prod x^(y (1-tau0)), with y = x_bar/(1+x_bar) and c chosen
/// so that ftilde(x_bar) = f(x_bar) exactly (tangency); ftilde <= f
/// everywhere by the AM-GM bound.
struct CondensationState {
  Eigen::MatrixXd x_bar; // K x T, previous SINRs
  double c = 1.0;
  double log_c = 0.0;
  Eigen::MatrixXd y; // K x T, in (0,1)
};

CondensationState monomial_approx(const Eigen::MatrixXd& x_bar,
                                  const Eigen::VectorXd& tau0);

/// Multipliers of the dual of the SICD sum problem: lambda for the energy
/// causality constraints, mu for the decoding constraints; both K x T >= 0.
struct DualPoint {
  Eigen::MatrixXd lambda;
  Eigen::MatrixXd mu;

  static DualPoint zero(int k, int t) {
    return {Eigen::MatrixXd::Zero(k, t), Eigen::MatrixXd::Zero(k, t)};
  }
};

struct GivenTauResult {
  Eigen::MatrixXd e;    // K x T, joules
  Eigen::MatrixXd sinr; // K x T
  double sum_rate = 0.0;
  SolveStatus status = SolveStatus::Infeasible;
  int inner_iterations = 0;
  std::vector<double> inner_objectives; // accepted sum rate per condensation round
};

struct GivenEResult {
  Eigen::VectorXd tau0;
  double sum_rate = 0.0;
  SolveStatus status = SolveStatus::Infeasible;
};

/// Sum-throughput under LCD for a fixed harvesting vector: iterates monomial
/// condensation + a standard-form GP solve until the sum rate converges.
/// The start must be strictly feasible (strict causality, SINRs strictly
/// above threshold).
GivenTauResult solve_maxsum_lcd_given_tau(const NetworkInstance& inst,
                                          const Eigen::VectorXd& tau0,
                                          const Allocation& start,
                                          const SolverOptions& opts);

/// Sum-throughput under LCD for a fixed energy matrix: convex in tau0.
GivenEResult solve_maxsum_lcd_given_E(const NetworkInstance& inst,
                                      const Eigen::MatrixXd& e,
                                      const SolverOptions& opts);

/// Full LCD sum-throughput solver alternating the two sub-problems from a
/// constructed feasible point (multistarted over a few harvesting levels).
/// The result is a stationary/approximate point, not a certified global
/// optimum.
Solution solve_maxsum_lcd(const NetworkInstance& inst, const SolverOptions& opts);

/// Baseline strategy: no alternation, a single given-tau pass at the best
/// uniform tau0 over an n_grid-point grid.
Solution solve_maxsum_lcd_fixed_tau(const NetworkInstance& inst,
                                    const SolverOptions& opts, int n_grid = 21);

/// Variant of the alternating solver whose fixed-tau0 stage uses successive
/// proximal surrogates instead of GP condensation.
Solution solve_maxsum_lcd_sca(const NetworkInstance& inst,
                              const SolverOptions& opts);

/// SICD sum-throughput: a single convex solve. Per-user rates are recovered
/// with the strongest-first decoding order; the objective value does not
/// depend on that order.
Solution solve_maxsum_sicd(const NetworkInstance& inst, const SolverOptions& opts);

/// Coefficients of the per-slot dual stationarity conditions:
///   a_i = ln2 (sum_{n>=t} lambda_in + g_it 1{i decoded 2nd or later}
///              sum_{j decoded before i} mu_jt S_j - mu_it g_it)
///   b   = ln2 (sigma^2 sum_i mu_it S_i + sum_i sum_{n>=t} lambda_in gamma_it)
/// with users ranked by the strongest-first decoding order of slot t.
std::pair<Eigen::VectorXd, double> dual_coefficients(const NetworkInstance& inst,
                                                     const DualPoint& dual, int t);

/// ln(1+z) - z/(1+z); strictly increasing with f(0) = 0. The tau0
/// stationarity condition of the dual inner problem reads f(z_t) = b_t.
double dual_rate_balance(double z);

/// Closed-form maximizer of the Lagrangian over the box for fixed
/// multipliers: per slot, z* solves f(z) = b, energy rides on the user with
/// the largest g/a ratio, and tau0 follows the clamped quotient rule.
/// Degenerate all-zero prices yield tau0 = 1, E = 0.
Allocation dual_inner_solve(const NetworkInstance& inst, const DualPoint& dual,
                            const SolverOptions& opts);

struct DualSolveResult {
  Solution solution;
  DualPoint dual;          // final multipliers
  double dual_bound = 0.0; // best dual value seen (upper bound)
  double gap = 0.0;        // relative duality gap at exit
  int iterations = 0;
};

/// Projected subgradient method on the dual with averaged/repaired primal
/// recovery; converges to the same objective as the direct convex solve.
DualSolveResult solve_maxsum_sicd_dual(const NetworkInstance& inst,
                                       const SolverOptions& opts);

} // namespace wpcn
