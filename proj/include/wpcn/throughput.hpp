#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "wpcn/model.hpp"

namespace wpcn {

enum class Decoder { Lcd, Sicd };
enum class SolveStatus { Optimal, Approximate, Infeasible, IterationLimit };

std::string to_string(Decoder d);
std::string to_string(SolveStatus s);

/// Decision variables: per-slot harvesting fractions tau0 (length T) and the
/// consumed-energy matrix e (K x T, joules). Energy causality against an
/// instance is checked by check_feasible, not enforced here.
struct Allocation {
  Eigen::VectorXd tau0; // T, each in [0,1]
  Eigen::MatrixXd e;    // K x T, >= 0

  static Allocation zero(int k, int t) {
    return {Eigen::VectorXd::Zero(t), Eigen::MatrixXd::Zero(k, t)};
  }
};

/// An allocation together with the SINRs and rates it induces, the solver's
/// objective value and status, and per-outer-iteration diagnostics.
struct Solution {
  Allocation alloc;
  Eigen::MatrixXd sinr;  // K x T
  Eigen::MatrixXd rates; // K x T, bits/slot/Hz
  std::optional<double> objective; // absent iff status == Infeasible
  SolveStatus status = SolveStatus::Infeasible;

  // Diagnostics (not part of the core contract).
  int iterations = 0;
  std::vector<double> outer_objectives; // accepted objective after each outer step
  double worst_iterate_violation = 0.0; // max constraint violation over iterates
};

/// Per-slot decoding order, strongest uplink gain first; ties broken by
/// ascending user index. order[0] is decoded first.
std::vector<int> decoding_order(const NetworkInstance& inst, int t);
std::vector<std::vector<int>> decoding_orders(const NetworkInstance& inst);

/// SINR treating all other users as noise:
///   x_it = g_it e_it / (sigma^2 (1 - tau0_t) + sum_{j != i} g_jt e_jt).
/// Zero energy gives zero SINR. Throws on shape mismatch, or when a slot has
/// tau0 = 1 together with positive energy.
Eigen::MatrixXd sinr_lcd(const NetworkInstance& inst, const Allocation& alloc);

/// SINR under successive cancellation: users decoded before i are removed
/// from its interference, so with users relabeled by order_t,
///   x_it = g_i e_i / (sigma^2 (1 - tau0_t) + sum_{decoded after i} g_j e_j).
Eigen::MatrixXd sinr_sicd(const NetworkInstance& inst, const Allocation& alloc,
                          const std::vector<std::vector<int>>& order);

Eigen::MatrixXd sinr_matrix(const NetworkInstance& inst, const Allocation& alloc,
                            Decoder scheme);

/// (1 - tau0_t) * log2(1 + x); zero at tau0 = 1 or x = 0.
double user_rate(double tau0_t, double x);

Eigen::MatrixXd rate_matrix(const Eigen::VectorXd& tau0, const Eigen::MatrixXd& sinr);

/// Per-slot sum rate under successive cancellation in closed form,
///   (1 - tau0) log2(1 + sum_j g_j e_j / (sigma^2 (1 - tau0))),
/// equal to the sum of per-user rates for every decoding order.
double sum_rate_sicd_closed(const NetworkInstance& inst, const Allocation& alloc, int t);

/// (sum x)^2 / (K sum x^2), in [1/K, 1]. Throws on an all-zero or negative
/// vector.
double jain_index(const Eigen::VectorXd& throughputs);

} // namespace wpcn
