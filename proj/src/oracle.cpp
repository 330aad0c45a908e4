#include "wpcn/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace wpcn {

namespace {

struct Axis {
  double lo = 0.0, hi = 1.0;
  double step = 1e-2;
  std::vector<double> values() const {
    std::vector<double> v;
    for (double x = lo; x <= hi + 0.5 * step; x += step) v.push_back(std::min(x, 1.0));
    if (v.empty() || v.back() < hi - 0.5 * step) v.push_back(hi);
    return v;
  }
};

struct Candidate {
  double objective = -std::numeric_limits<double>::infinity();
  Allocation alloc;
  bool found = false;
  std::vector<double> axis_values;
};

// Axes: [tau0_0 .. tau0_{T-1}, f(0,0) .. f(K-1,0), f(0,1), ...].
// Energy from fractions: e(i,t) = f(i,t) * (harvested-so-far - spent-so-far).
Allocation alloc_from_axes(const NetworkInstance& inst,
                           const std::vector<double>& v) {
  const int k = inst.num_users, nt = inst.num_slots;
  Allocation a = Allocation::zero(k, nt);
  for (int t = 0; t < nt; ++t) a.tau0(t) = v[t];
  for (int i = 0; i < k; ++i) {
    double spent = 0.0, harvested = 0.0;
    for (int t = 0; t < nt; ++t) {
      harvested += inst.gamma(i, t) * a.tau0(t);
      const double budget = std::max(0.0, harvested - spent);
      double e = v[nt + t * k + i] * budget;
      if (a.tau0(t) >= 1.0) e = 0.0; // no transmit time
      a.e(i, t) = e;
      spent += e;
    }
  }
  return a;
}

bool thresholds_ok(const NetworkInstance& inst, const Allocation& a,
                   const Eigen::MatrixXd& x) {
  for (int t = 0; t < inst.num_slots; ++t) {
    const bool dead_slot = a.tau0(t) >= 1.0;
    for (int i = 0; i < inst.num_users; ++i) {
      const double s = inst.s_th(i);
      if (s <= 0.0) continue;
      if (dead_slot) return false; // cannot decode without transmit time
      if (x(i, t) < s * (1.0 - 1e-12)) return false;
    }
  }
  return true;
}

double lattice_objective(const NetworkInstance& inst, const Allocation& a,
                         const GridSpec& spec, const Eigen::MatrixXd& x) {
  const Eigen::MatrixXd r = rate_matrix(a.tau0, x);
  if (spec.objective == Objective::MaxSum) return r.sum();
  return r.minCoeff();
}

void enumerate(const NetworkInstance& inst, const GridSpec& spec,
               const std::vector<Axis>& axes, Candidate& best) {
  std::vector<std::vector<double>> vals(axes.size());
  double total = 1.0;
  for (std::size_t i = 0; i < axes.size(); ++i) {
    vals[i] = axes[i].values();
    total *= static_cast<double>(vals[i].size());
  }
  if (total > spec.max_points)
    throw std::invalid_argument("grid_search: lattice guard exceeded");

  std::vector<std::size_t> idx(axes.size(), 0);
  std::vector<double> point(axes.size());
  const auto orders = decoding_orders(inst);
  while (true) {
    for (std::size_t i = 0; i < axes.size(); ++i) point[i] = vals[i][idx[i]];
    Allocation a = alloc_from_axes(inst, point);
    const Eigen::MatrixXd x = spec.scheme == Decoder::Lcd
                                  ? sinr_lcd(inst, a)
                                  : sinr_sicd(inst, a, orders);
    if (thresholds_ok(inst, a, x)) {
      const double obj = lattice_objective(inst, a, spec, x);
      if (!best.found || obj > best.objective) {
        best.found = true;
        best.objective = obj;
        best.alloc = a;
        best.axis_values = point;
      }
    }
    // odometer
    std::size_t d = 0;
    while (d < idx.size() && ++idx[d] == vals[d].size()) idx[d++] = 0;
    if (d == idx.size()) break;
  }
}

} // namespace

Solution grid_search(const NetworkInstance& inst, const GridSpec& spec) {
  if (spec.tau0_step <= 0.0 || spec.tau0_step >= 1.0 || spec.e_step <= 0.0 ||
      spec.e_step >= 1.0)
    throw std::invalid_argument("grid_search: steps must lie in (0,1)");

  const int k = inst.num_users, nt = inst.num_slots;
  const int n_axes = nt + k * nt;

  double res_tau = std::max(spec.tau0_step, 1e-2);
  double res_e = std::max(spec.e_step, 1e-2);

  std::vector<Axis> axes(n_axes);
  for (int i = 0; i < n_axes; ++i) {
    axes[i].lo = 0.0;
    axes[i].hi = 1.0;
    axes[i].step = i < nt ? res_tau : res_e;
  }

  Candidate best;
  enumerate(inst, spec, axes, best);

  // Local refinement around the incumbent until the requested resolution.
  while (best.found && (res_tau > spec.tau0_step || res_e > spec.e_step)) {
    const double next_tau = std::max(spec.tau0_step, res_tau / 10.0);
    const double next_e = std::max(spec.e_step, res_e / 10.0);
    for (int i = 0; i < n_axes; ++i) {
      const double prev = i < nt ? res_tau : res_e;
      const double next = i < nt ? next_tau : next_e;
      axes[i].lo = std::max(0.0, best.axis_values[i] - 2.0 * prev);
      axes[i].hi = std::min(1.0, best.axis_values[i] + 2.0 * prev);
      axes[i].step = next;
    }
    res_tau = next_tau;
    res_e = next_e;
    enumerate(inst, spec, axes, best);
    if (res_tau <= spec.tau0_step && res_e <= spec.e_step) break;
  }

  Solution sol;
  if (!best.found) {
    sol.status = SolveStatus::Infeasible;
    return sol;
  }
  sol.alloc = best.alloc;
  sol.sinr = sinr_matrix(inst, best.alloc, spec.scheme);
  sol.rates = rate_matrix(best.alloc.tau0, sol.sinr);
  sol.objective = best.objective;
  sol.status = SolveStatus::Optimal;
  return sol;
}

Eigen::VectorXd finite_diff_gradient(
    const std::function<double(const Eigen::VectorXd&)>& fn,
    const Eigen::VectorXd& point, double eps) {
  Eigen::VectorXd g(point.size());
  Eigen::VectorXd x = point;
  for (int i = 0; i < point.size(); ++i) {
    const double h = eps * (1.0 + std::abs(point(i)));
    x(i) = point(i) + h;
    const double fp = fn(x);
    x(i) = point(i) - h;
    const double fm = fn(x);
    x(i) = point(i);
    g(i) = (fp - fm) / (2.0 * h);
  }
  return g;
}

Eigen::MatrixXd finite_diff_hessian(
    const std::function<double(const Eigen::VectorXd&)>& fn,
    const Eigen::VectorXd& point, double eps) {
  const int n = static_cast<int>(point.size());
  Eigen::MatrixXd h(n, n);
  Eigen::VectorXd x = point;
  auto step = [&](int i) { return eps * (1.0 + std::abs(point(i))); };
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      const double hi = step(i), hj = step(j);
      x = point;
      x(i) += hi; x(j) += hj;
      const double fpp = fn(x);
      x = point;
      x(i) += hi; x(j) -= hj;
      const double fpm = fn(x);
      x = point;
      x(i) -= hi; x(j) += hj;
      const double fmp = fn(x);
      x = point;
      x(i) -= hi; x(j) -= hj;
      const double fmm = fn(x);
      h(i, j) = h(j, i) = (fpp - fpm - fmp + fmm) / (4.0 * hi * hj);
    }
  }
  return h;
}

ConcavityReport concavity_probe(
    const std::function<double(const Eigen::VectorXd&)>& fn,
    const std::function<Eigen::VectorXd(std::mt19937_64&)>& sampler,
    int trials, std::uint64_t seed, bool probe_hessian) {
  if (trials < 1) throw std::invalid_argument("concavity_probe: trials >= 1");
  std::mt19937_64 rng(seed);
  ConcavityReport rep;
  rep.trials = trials;
  for (int n = 0; n < trials; ++n) {
    const Eigen::VectorXd p = sampler(rng);
    const Eigen::VectorXd q = sampler(rng);
    const double lam =
        0.01 + 0.98 * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
    const double lhs = fn(lam * p + (1.0 - lam) * q);
    const double rhs = lam * fn(p) + (1.0 - lam) * fn(q);
    rep.max_violation = std::max(rep.max_violation, rhs - lhs);
    if (probe_hessian && n % 100 == 0) {
      const Eigen::MatrixXd h = finite_diff_hessian(fn, p);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
      rep.max_hessian_eig =
          std::max(rep.max_hessian_eig, es.eigenvalues().maxCoeff());
    }
  }
  return rep;
}

} // namespace wpcn
