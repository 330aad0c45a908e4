#pragma once

// Internal normalized view of an instance used by the solvers. Energies are
// optimized as Ehat_{i,t} = E_{i,t} / gamma_{i,t} (harvest-time units) and the
// noise is folded into w_{i,t} = g_{i,t} gamma_{i,t} / sigma^2, so that
//   g E / sigma^2 = w Ehat
// and all solver variables live on an O(1) scale.

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "wpcn/model.hpp"
#include "wpcn/solver_core.hpp"
#include "wpcn/throughput.hpp"

namespace wpcn::detail {

struct Scaled {
  int k = 0, t = 0;
  Eigen::MatrixXd w;  // k x t, g*gamma/sigma^2
  Eigen::MatrixXd bc; // k x t, gamma_{i,n} / max_n gamma_{i,n} (causality rows)
  Eigen::VectorXd s_th;
  std::vector<std::vector<int>> orders; // decoding order per slot
  const NetworkInstance* inst = nullptr;

  int dim() const { return t + k * t; }
  int tau_idx(int slot) const { return slot; }
  int e_idx(int i, int slot) const { return t + slot * k + i; }

  static Scaled make(const NetworkInstance& inst);

  Allocation to_alloc(const Eigen::VectorXd& v) const;
  Eigen::VectorXd from_alloc(const Allocation& a) const;

  // Allocation from an Ehat-only vector (index n*k+i) and a fixed tau0.
  Allocation to_alloc_fixed_tau(const Eigen::VectorXd& ehat,
                                const Eigen::VectorXd& tau0) const;

  // Ehat matrix view of the stacked vector.
  Eigen::MatrixXd ehat(const Eigen::VectorXd& v) const;

  // Scaled SINR of user i in slot t at stacked point v.
  double sinr_at(const Eigen::VectorXd& v, int i, int slot, Decoder scheme) const;

  // Affine rows (row . v <= rhs).
  void causality_rows(std::vector<Eigen::VectorXd>& rows,
                      std::vector<double>& rhs) const;
  void threshold_rows(Decoder scheme, std::vector<Eigen::VectorXd>& rows,
                      std::vector<double>& rhs) const;
  void threshold_rows_ordered(const std::vector<std::vector<int>>& ord,
                              std::vector<Eigen::VectorXd>& rows,
                              std::vector<double>& rhs) const;
  void box_rows(std::vector<Eigen::VectorXd>& rows, std::vector<double>& rhs) const;
};

void stack_rows(const std::vector<Eigen::VectorXd>& rows,
                const std::vector<double>& rhs, Eigen::MatrixXd& a,
                Eigen::VectorXd& b);

// Strictly feasible stacked point for the scheme, or nullopt when the
// thresholds are unsatisfiable (LCD with sum S/(1+S) >= 1). u_pref caps the
// transmit-time fraction 1 - tau0 (further capped by the energy budget);
// with exact_u the fraction is pinned to u_pref and the probe fails when the
// minimal threshold-tight energies do not fit that harvesting time.
std::optional<Eigen::VectorXd> feasible_start(const Scaled& sc, Decoder scheme,
                                              double u_pref = 0.5,
                                              bool exact_u = false);
std::optional<Eigen::VectorXd> feasible_start_ordered(
    const Scaled& sc, Decoder scheme, const std::vector<std::vector<int>>& ord,
    double u_pref = 0.5, bool exact_u = false);

// Strictly feasible point at a fixed (possibly non-uniform) tau0, or nullopt
// when the threshold-tight energies do not fit the harvested budget.
std::optional<Eigen::VectorXd> feasible_start_at_tau(
    const Scaled& sc, Decoder scheme, const std::vector<std::vector<int>>& ord,
    const Eigen::VectorXd& tau0);

// Negated concave sum-rate objective sum_t (1-tau0) log2(1 + s_t/(1-tau0))
// with s_t = sum_i w_it Ehat_it, as a SmoothFn over the stacked variables.
SmoothFn sicd_sum_objective_negated(const Scaled& sc);

// True LCD sum rate at a stacked point (bits/slot/Hz).
double lcd_sum_rate(const Scaled& sc, const Eigen::VectorXd& v);

// Per-(i,t) rate at a stacked point for the scheme (uses sc.orders for SICD).
Eigen::MatrixXd rate_matrix_at(const Scaled& sc, const Eigen::VectorXd& v,
                               Decoder scheme);
Eigen::MatrixXd rate_matrix_at_ordered(const Scaled& sc, const Eigen::VectorXd& v,
                                       Decoder scheme,
                                       const std::vector<std::vector<int>>& ord);

} // namespace wpcn::detail
