#include "wpcn/throughput.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace wpcn {

namespace {

void check_shapes(const NetworkInstance& inst, const Allocation& alloc) {
  if (alloc.tau0.size() != inst.num_slots ||
      alloc.e.rows() != inst.num_users || alloc.e.cols() != inst.num_slots)
    throw std::invalid_argument("allocation shape does not match instance");
}

void check_transmit_time(const NetworkInstance& inst, const Allocation& alloc) {
  for (int t = 0; t < inst.num_slots; ++t) {
    if (alloc.tau0(t) >= 1.0 && alloc.e.col(t).maxCoeff() > 0.0)
      throw std::invalid_argument(
          "tau0 = 1 with positive energy in slot " + std::to_string(t));
  }
}

} // namespace

std::string to_string(Decoder d) { return d == Decoder::Lcd ? "lcd" : "sicd"; }

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "Optimal";
    case SolveStatus::Approximate: return "Approximate";
    case SolveStatus::Infeasible: return "Infeasible";
    case SolveStatus::IterationLimit: return "IterationLimit";
  }
  return "?";
}

std::vector<int> decoding_order(const NetworkInstance& inst, int t) {
  std::vector<int> order(inst.num_users);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return inst.g(a, t) > inst.g(b, t);
  });
  return order;
}

std::vector<std::vector<int>> decoding_orders(const NetworkInstance& inst) {
  std::vector<std::vector<int>> orders(inst.num_slots);
  for (int t = 0; t < inst.num_slots; ++t) orders[t] = decoding_order(inst, t);
  return orders;
}

Eigen::MatrixXd sinr_lcd(const NetworkInstance& inst, const Allocation& alloc) {
  check_shapes(inst, alloc);
  check_transmit_time(inst, alloc);
  const int k = inst.num_users, nt = inst.num_slots;
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(k, nt);
  for (int t = 0; t < nt; ++t) {
    const double noise = inst.noise_power * (1.0 - alloc.tau0(t));
    double total = 0.0;
    for (int j = 0; j < k; ++j) total += inst.g(j, t) * alloc.e(j, t);
    for (int i = 0; i < k; ++i) {
      const double sig = inst.g(i, t) * alloc.e(i, t);
      if (sig <= 0.0) continue; // zero energy -> zero SINR by convention
      x(i, t) = sig / (noise + (total - sig));
    }
  }
  return x;
}

Eigen::MatrixXd sinr_sicd(const NetworkInstance& inst, const Allocation& alloc,
                          const std::vector<std::vector<int>>& order) {
  check_shapes(inst, alloc);
  check_transmit_time(inst, alloc);
  const int k = inst.num_users, nt = inst.num_slots;
  if (static_cast<int>(order.size()) != nt)
    throw std::invalid_argument("sinr_sicd: one decoding order per slot required");
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(k, nt);
  for (int t = 0; t < nt; ++t) {
    const auto& ord = order[t];
    std::vector<bool> seen(k, false);
    if (static_cast<int>(ord.size()) != k)
      throw std::invalid_argument("sinr_sicd: order size mismatch");
    for (int u : ord) {
      if (u < 0 || u >= k || seen[u])
        throw std::invalid_argument("sinr_sicd: invalid permutation");
      seen[u] = true;
    }
    const double noise = inst.noise_power * (1.0 - alloc.tau0(t));
    // residual interference: users decoded after position p
    double residual = 0.0;
    for (int u : ord) residual += inst.g(u, t) * alloc.e(u, t);
    for (int p = 0; p < k; ++p) {
      const int u = ord[p];
      const double sig = inst.g(u, t) * alloc.e(u, t);
      residual -= sig;
      if (sig <= 0.0) continue;
      x(u, t) = sig / (noise + residual);
    }
  }
  return x;
}

Eigen::MatrixXd sinr_matrix(const NetworkInstance& inst, const Allocation& alloc,
                            Decoder scheme) {
  return scheme == Decoder::Lcd ? sinr_lcd(inst, alloc)
                                : sinr_sicd(inst, alloc, decoding_orders(inst));
}

double user_rate(double tau0_t, double x) {
  if (tau0_t < 0.0 || tau0_t > 1.0)
    throw std::invalid_argument("user_rate: tau0 must be in [0,1]");
  if (x < 0.0) throw std::invalid_argument("user_rate: x must be >= 0");
  if (tau0_t >= 1.0 || x == 0.0) return 0.0;
  return (1.0 - tau0_t) * std::log2(1.0 + x);
}

Eigen::MatrixXd rate_matrix(const Eigen::VectorXd& tau0, const Eigen::MatrixXd& sinr) {
  Eigen::MatrixXd r(sinr.rows(), sinr.cols());
  for (int t = 0; t < sinr.cols(); ++t)
    for (int i = 0; i < sinr.rows(); ++i) r(i, t) = user_rate(tau0(t), sinr(i, t));
  return r;
}

double sum_rate_sicd_closed(const NetworkInstance& inst, const Allocation& alloc, int t) {
  check_shapes(inst, alloc);
  if (t < 0 || t >= inst.num_slots)
    throw std::invalid_argument("sum_rate_sicd_closed: bad slot index");
  double total = 0.0;
  for (int j = 0; j < inst.num_users; ++j) total += inst.g(j, t) * alloc.e(j, t);
  const double u = 1.0 - alloc.tau0(t);
  if (total <= 0.0) return 0.0;
  if (u <= 0.0)
    throw std::invalid_argument("sum_rate_sicd_closed: tau0 = 1 with positive energy");
  return u * std::log2(1.0 + total / (inst.noise_power * u));
}

double jain_index(const Eigen::VectorXd& throughputs) {
  const int k = static_cast<int>(throughputs.size());
  if (k == 0) throw std::invalid_argument("jain_index: empty vector");
  if ((throughputs.array() < 0.0).any())
    throw std::invalid_argument("jain_index: negative throughput");
  const double s = throughputs.sum();
  const double q = throughputs.squaredNorm();
  if (q == 0.0) throw std::invalid_argument("jain_index: all-zero vector");
  return s * s / (k * q);
}

} // namespace wpcn
