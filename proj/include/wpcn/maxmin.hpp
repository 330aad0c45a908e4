#pragma once

#include <Eigen/Dense>
#include <vector>

#include "wpcn/solver_core.hpp"
#include "wpcn/throughput.hpp"

namespace wpcn {

/// Proximal surrogate x -> grad fn(y)^T (x - y) + 1/2 |x - y|^2; strongly
/// convex with modulus 1 and gradient-consistent with fn at y.
SmoothFn prox_surrogate(const SmoothFn& fn, const Eigen::VectorXd& y);

struct MaxminGivenTauResult {
  Eigen::MatrixXd e; // K x T, joules
  double min_rate = 0.0;
  SolveStatus status = SolveStatus::Infeasible;
  int iterations = 0;
  std::vector<double> iterate_min_rates;  // accepted true min rate per step
  double worst_iterate_violation = 0.0;   // max violation over all SCA iterates
  int min_user = -1, min_slot = -1;       // pair attaining the minimum at exit
};

/// Min-throughput maximization at fixed tau0 via successive concave inner
/// approximations of the rate constraints (exact concave part kept, the
/// interference log linearized) with a proximal term; every iterate is
/// feasible for the original constraints.
MaxminGivenTauResult solve_maxmin_given_tau(const NetworkInstance& inst,
                                            const Eigen::VectorXd& tau0,
                                            Decoder scheme,
                                            const Allocation& start,
                                            const SolverOptions& opts);

struct MaxminGivenEResult {
  Eigen::VectorXd tau0;
  double min_rate = 0.0;
  SolveStatus status = SolveStatus::Infeasible;
};

/// Min-throughput maximization at fixed energies: convex epigraph program
/// over (tau0, Rbar).
MaxminGivenEResult solve_maxmin_given_E(const NetworkInstance& inst,
                                        const Eigen::MatrixXd& e, Decoder scheme,
                                        const SolverOptions& opts);

/// Alternating max-min solver; for SICD the decoding order is fixed per slot
/// to strongest-first. objective is the minimum per-user per-slot rate.
Solution solve_maxmin(const NetworkInstance& inst, Decoder scheme,
                      const SolverOptions& opts);

/// SICD max-min with an explicit per-slot decoding order (for order studies).
Solution solve_maxmin_sicd_with_order(const NetworkInstance& inst,
                                      const std::vector<std::vector<int>>& orders,
                                      const SolverOptions& opts);

} // namespace wpcn
