#include "wpcn/solver_core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace wpcn {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct BarrierEval {
  double value = kInf;
  bool interior = false;
};

// Barrier value t*f0 - sum log(slacks); +inf outside the strict interior.
BarrierEval eval_barrier(const ConvexProblem& p, double t,
                         const Eigen::VectorXd& x) {
  BarrierEval out;
  double v = t * p.objective.value(x);
  if (!std::isfinite(v)) return out;
  if (p.a_ineq.rows() > 0) {
    Eigen::VectorXd s = p.b_ineq - p.a_ineq * x;
    for (int i = 0; i < s.size(); ++i) {
      if (s(i) <= 0.0) return out;
      v -= std::log(s(i));
    }
  }
  for (const auto& f : p.ineq) {
    const double fi = f.value(x);
    if (!(fi < 0.0)) return out;
    v -= std::log(-fi);
  }
  out.value = v;
  out.interior = true;
  return out;
}

bool strictly_feasible(const ConvexProblem& p, const Eigen::VectorXd& x) {
  if (p.a_ineq.rows() > 0) {
    Eigen::VectorXd s = p.b_ineq - p.a_ineq * x;
    if ((s.array() <= 0.0).any()) return false;
  }
  for (const auto& f : p.ineq)
    if (!(f.value(x) < 0.0)) return false;
  return true;
}

} // namespace

ConvexResult solve_convex(const ConvexProblem& p, const Eigen::VectorXd& start,
                          const SolverOptions& opts) {
  const int m = static_cast<int>(p.a_ineq.rows()) + static_cast<int>(p.ineq.size());
  ConvexResult res;
  res.x = start;

  if (!strictly_feasible(p, start)) {
    res.status = SolveStatus::Infeasible;
    return res;
  }

  Eigen::VectorXd x = start;

  // Pure Newton when unconstrained.
  double t = m > 0 ? std::max(1.0, m / std::max(1.0, std::abs(p.objective.value(x))))
                   : 1.0;
  const double mu = 20.0;
  int outer = 0;
  int total_newton = 0;

  auto center = [&](double tb) {
    const int newton_cap = 80;
    for (int it = 0; it < newton_cap; ++it) {
      ++total_newton;
      Eigen::VectorXd grad = tb * p.objective.grad(x);
      Eigen::MatrixXd hess = tb * p.objective.hess(x);
      if (p.a_ineq.rows() > 0) {
        Eigen::VectorXd s = p.b_ineq - p.a_ineq * x;
        Eigen::VectorXd inv = s.cwiseInverse();
        grad.noalias() += p.a_ineq.transpose() * inv;
        hess.noalias() +=
            p.a_ineq.transpose() * inv.array().square().matrix().asDiagonal() * p.a_ineq;
      }
      for (const auto& f : p.ineq) {
        const double fi = f.value(x);
        const Eigen::VectorXd gi = f.grad(x);
        grad.noalias() += gi / (-fi);
        hess.noalias() += gi * gi.transpose() / (fi * fi);
        hess.noalias() += f.hess(x) / (-fi);
      }

      Eigen::VectorXd step;
      double ridge = 0.0;
      for (int attempt = 0; attempt < 12; ++attempt) {
        Eigen::MatrixXd hr = hess;
        if (ridge > 0.0) hr.diagonal().array() += ridge;
        Eigen::LDLT<Eigen::MatrixXd> ldlt(hr);
        if (ldlt.info() == Eigen::Success) {
          step = ldlt.solve(-grad);
          if (step.allFinite() && grad.dot(step) < 0.0) break;
        }
        ridge = ridge == 0.0 ? 1e-10 * (1.0 + hess.diagonal().cwiseAbs().maxCoeff())
                             : ridge * 100.0;
        step.resize(0);
      }
      if (step.size() == 0) return;

      const double decrement2 = -grad.dot(step);
      if (decrement2 / 2.0 <= 1e-10) return;

      const BarrierEval cur = eval_barrier(p, tb, x);
      double alpha = 1.0;
      bool moved = false;
      for (int ls = 0; ls < 60; ++ls) {
        const BarrierEval trial = eval_barrier(p, tb, x + alpha * step);
        if (trial.interior &&
            trial.value <= cur.value + 0.01 * alpha * grad.dot(step)) {
          x += alpha * step;
          moved = true;
          break;
        }
        alpha *= 0.5;
      }
      if (!moved) return;
    }
  };

  if (m == 0) {
    center(1.0);
    res.x = x;
    res.objective = p.objective.value(x);
    res.status = SolveStatus::Optimal;
    res.newton_iters = total_newton;
    return res;
  }

  double gap = m / t;
  while (true) {
    center(t);
    gap = m / t;
    const double scale = std::max(1.0, std::abs(p.objective.value(x)));
    if (gap <= 0.5 * opts.tol_obj * scale) break;
    if (++outer >= opts.max_iter) break;
    t *= mu;
  }

  res.x = x;
  res.objective = p.objective.value(x);
  res.gap = gap;
  res.newton_iters = total_newton;

  // Stationarity residual with the barrier's implied multipliers.
  Eigen::VectorXd r = p.objective.grad(x);
  if (p.a_ineq.rows() > 0) {
    Eigen::VectorXd s = p.b_ineq - p.a_ineq * x;
    r.noalias() += p.a_ineq.transpose() * (1.0 / t * s.cwiseInverse());
  }
  for (const auto& f : p.ineq) r.noalias() += f.grad(x) / (t * (-f.value(x)));
  res.kkt_residual = r.size() > 0 ? r.cwiseAbs().maxCoeff() : 0.0;

  const double scale = std::max(1.0, std::abs(res.objective));
  res.status = gap <= 0.5 * opts.tol_obj * scale ? SolveStatus::Optimal
                                                 : SolveStatus::IterationLimit;
  return res;
}

SmoothFn make_log_sum_exp(const std::vector<Monomial>& terms, int num_vars) {
  // theta_k = log_coeff_k + a_k . x; lse = log sum exp(theta).
  auto thetas = [terms](const Eigen::VectorXd& x) {
    Eigen::VectorXd th(terms.size());
    for (std::size_t k = 0; k < terms.size(); ++k)
      th(k) = terms[k].log_coeff + terms[k].exponents.dot(x);
    return th;
  };
  SmoothFn fn;
  fn.value = [thetas](const Eigen::VectorXd& x) {
    Eigen::VectorXd th = thetas(x);
    const double mx = th.maxCoeff();
    return mx + std::log((th.array() - mx).exp().sum());
  };
  fn.grad = [thetas, terms, num_vars](const Eigen::VectorXd& x) {
    Eigen::VectorXd th = thetas(x);
    const double mx = th.maxCoeff();
    Eigen::VectorXd w = (th.array() - mx).exp();
    w /= w.sum();
    Eigen::VectorXd g = Eigen::VectorXd::Zero(num_vars);
    for (std::size_t k = 0; k < terms.size(); ++k) g += w(k) * terms[k].exponents;
    return g;
  };
  fn.hess = [thetas, terms, num_vars](const Eigen::VectorXd& x) {
    Eigen::VectorXd th = thetas(x);
    const double mx = th.maxCoeff();
    Eigen::VectorXd w = (th.array() - mx).exp();
    w /= w.sum();
    Eigen::VectorXd g = Eigen::VectorXd::Zero(num_vars);
    for (std::size_t k = 0; k < terms.size(); ++k) g += w(k) * terms[k].exponents;
    Eigen::MatrixXd h = -g * g.transpose();
    for (std::size_t k = 0; k < terms.size(); ++k)
      h.noalias() += w(k) * terms[k].exponents * terms[k].exponents.transpose();
    return h;
  };
  return fn;
}

GpResult solve_gp(const GeometricProgram& gp, const Eigen::VectorXd& start,
                  const SolverOptions& opts) {
  GpResult out;
  if (gp.objective.terms.empty())
    throw std::invalid_argument("solve_gp: empty objective");
  if ((start.array() <= 0.0).any())
    throw std::invalid_argument("solve_gp: start must be strictly positive");
  for (const auto& c : gp.constraints)
    if (c.terms.empty()) throw std::invalid_argument("solve_gp: empty constraint");

  ConvexProblem cp;
  cp.objective = make_log_sum_exp(gp.objective.terms, gp.num_vars);
  for (const auto& c : gp.constraints)
    cp.ineq.push_back(make_log_sum_exp(c.terms, gp.num_vars));

  const Eigen::VectorXd z0 = start.array().log();
  ConvexResult r = solve_convex(cp, z0, opts);
  if (r.status == SolveStatus::Infeasible) {
    out.status = SolveStatus::Infeasible;
    return out;
  }
  out.x = r.x.array().exp();
  out.objective = std::exp(r.objective);
  out.status = r.status;
  return out;
}

double bisect_root(const std::function<double(double)>& f, double target,
                   const SolverOptions& opts) {
  if (target < 0.0) throw std::invalid_argument("bisect_root: target must be >= 0");
  if (target == 0.0) return 0.0;
  double lo = 0.0, hi = 1.0;
  int grow = 0;
  while (true) {
    const double v = f(hi);
    if (!(v < target)) break; // includes non-finite f(hi)
    lo = hi;
    hi *= 2.0;
    if (++grow > 1020) throw std::runtime_error("bisect_root: bracket growth failed");
  }
  for (int it = 0; it < 20000; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double v = f(mid);
    if (std::abs(v - target) <= opts.tol_con) return mid;
    if (v < target) lo = mid;
    else hi = mid;
    if (hi - lo <= 1e-16 * std::max(1.0, hi)) break;
  }
  return 0.5 * (lo + hi);
}

FeasibilityReport check_feasible(const NetworkInstance& inst,
                                 const Allocation& alloc, Decoder scheme,
                                 const SolverOptions& opts) {
  if (alloc.tau0.size() != inst.num_slots || alloc.e.rows() != inst.num_users ||
      alloc.e.cols() != inst.num_slots)
    throw std::invalid_argument("check_feasible: shape mismatch");

  FeasibilityReport rep;
  const int k = inst.num_users, nt = inst.num_slots;

  double energy_scale = 0.0;
  for (int i = 0; i < k; ++i) {
    double cum_e = 0.0, cum_h = 0.0, full = 0.0;
    for (int t = 0; t < nt; ++t) {
      cum_e += alloc.e(i, t);
      cum_h += inst.gamma(i, t) * alloc.tau0(t);
      full += inst.gamma(i, t);
      rep.max_energy_violation = std::max(rep.max_energy_violation, cum_e - cum_h);
    }
    energy_scale = std::max(energy_scale, full);
  }

  // Box violations are well-defined even where SINR evaluation is not; clamp
  // the allocation into the box before computing SINRs.
  for (int t = 0; t < nt; ++t) {
    rep.max_box_violation = std::max(rep.max_box_violation, -alloc.tau0(t));
    rep.max_box_violation = std::max(rep.max_box_violation, alloc.tau0(t) - 1.0);
  }
  rep.max_box_violation =
      std::max(rep.max_box_violation, std::max(0.0, -alloc.e.minCoeff()));

  Allocation boxed = alloc;
  for (int t = 0; t < nt; ++t) boxed.tau0(t) = std::clamp(alloc.tau0(t), 0.0, 1.0);
  boxed.e = alloc.e.cwiseMax(0.0);
  for (int t = 0; t < nt; ++t) {
    if (boxed.tau0(t) >= 1.0 && boxed.e.col(t).maxCoeff() > 0.0) {
      // no transmit time but positive energy: count as full threshold miss
      boxed.e.col(t).setZero();
      rep.max_threshold_violation =
          std::max(rep.max_threshold_violation, inst.s_th.maxCoeff());
    }
  }
  const Eigen::MatrixXd x = sinr_matrix(inst, boxed, scheme);
  for (int t = 0; t < nt; ++t)
    for (int i = 0; i < k; ++i)
      rep.max_threshold_violation =
          std::max(rep.max_threshold_violation, inst.s_th(i) - x(i, t));

  const double s_scale = std::max(1.0, inst.s_th.size() ? inst.s_th.maxCoeff() : 0.0);
  rep.feasible =
      rep.max_energy_violation <= opts.tol_con * std::max(energy_scale, 1e-300) &&
      rep.max_threshold_violation <= opts.tol_con * s_scale &&
      rep.max_box_violation <= opts.tol_con;
  return rep;
}

} // namespace wpcn
