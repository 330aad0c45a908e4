#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <random>

#include "wpcn/solver_core.hpp"
#include "wpcn/throughput.hpp"

namespace wpcn {

enum class Objective { MaxSum, MaxMin };

/// Exhaustive-search description. Each tau0 axis is gridded on [0,1] with
/// tau0_step; each user/slot energy is gridded as a fraction of the energy
/// still available under causality (0..1 in e_step increments), which keeps
/// every lattice point causality-feasible by construction. Enumeration runs
/// a coarse pass at 1e-2 and refines locally down to the requested steps.
struct GridSpec {
  double tau0_step = 1e-3;
  double e_step = 1e-3;
  Objective objective = Objective::MaxSum;
  Decoder scheme = Decoder::Lcd;
  double max_points = 1e8; // guard on lattice size per pass
};

/// Brute-force optimum over the lattice; exact to within one grid cell.
/// Throws when the lattice size guard is exceeded; Infeasible when no
/// lattice point satisfies the decoding thresholds.
Solution grid_search(const NetworkInstance& inst, const GridSpec& spec);

/// Central differences with per-coordinate step eps * (1 + |x_i|).
Eigen::VectorXd finite_diff_gradient(
    const std::function<double(const Eigen::VectorXd&)>& fn,
    const Eigen::VectorXd& point, double eps = 1e-6);

/// Finite-difference Hessian (for definiteness probes on small problems).
Eigen::MatrixXd finite_diff_hessian(
    const std::function<double(const Eigen::VectorXd&)>& fn,
    const Eigen::VectorXd& point, double eps = 1e-5);

struct ConcavityReport {
  double max_violation = 0.0;   // worst positive Jensen gap
  double max_hessian_eig = 0.0; // largest FD-Hessian eigenvalue seen (if probed)
  int trials = 0;
};

/// Samples point pairs and mixing weights from the sampler and reports the
/// worst violation of f(l p + (1-l) q) >= l f(p) + (1-l) f(q); optionally
/// also probes FD-Hessian eigenvalues at sampled points.
ConcavityReport concavity_probe(
    const std::function<double(const Eigen::VectorXd&)>& fn,
    const std::function<Eigen::VectorXd(std::mt19937_64&)>& sampler,
    int trials, std::uint64_t seed, bool probe_hessian = false);

} // namespace wpcn
