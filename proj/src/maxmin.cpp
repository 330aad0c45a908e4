#include "wpcn/maxmin.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>

#include "scaled.hpp"

namespace wpcn {

namespace {

using detail::Scaled;

constexpr double kLn2 = 0.6931471805599453;
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kProx = 1e-2;

Solution infeasible_solution(int k, int t) {
  Solution s;
  s.alloc = Allocation::zero(k, t);
  s.sinr = Eigen::MatrixXd::Zero(k, t);
  s.rates = Eigen::MatrixXd::Zero(k, t);
  s.status = SolveStatus::Infeasible;
  return s;
}

// Interference membership per scheme: LCD interferes with everyone else;
// SICD only with users decoded later.
std::vector<std::vector<int>> interference_sets(const Scaled& sc, Decoder scheme,
                                                const std::vector<std::vector<int>>& ord,
                                                int slot) {
  std::vector<std::vector<int>> itf(sc.k);
  if (scheme == Decoder::Lcd) {
    for (int i = 0; i < sc.k; ++i)
      for (int j = 0; j < sc.k; ++j)
        if (j != i) itf[i].push_back(j);
  } else {
    const auto& o = ord[slot];
    for (int p = 0; p < sc.k; ++p)
      for (int q = p + 1; q < sc.k; ++q) itf[o[p]].push_back(o[q]);
  }
  return itf;
}

struct MinPair {
  int user = 0, slot = 0;
  double rate = kInf;
};

MinPair min_rate_pair(const Eigen::MatrixXd& rates) {
  MinPair mp;
  for (int i = 0; i < rates.rows(); ++i)
    for (int n = 0; n < rates.cols(); ++n)
      if (rates(i, n) < mp.rate) mp = {i, n, rates(i, n)};
  return mp;
}

// ---------------------------------------------------------------------------
// SCA stage at fixed tau0.

MaxminGivenTauResult given_tau_impl(const NetworkInstance& inst, const Scaled& sc,
                                    const std::vector<std::vector<int>>& ord,
                                    const Eigen::VectorXd& tau0, Decoder scheme,
                                    const Eigen::VectorXd& ehat_start,
                                    const SolverOptions& opts) {
  MaxminGivenTauResult out;
  const int k = sc.k, t = sc.t, kt = k * t;
  Eigen::VectorXd u(t);
  for (int n = 0; n < t; ++n) {
    u(n) = 1.0 - tau0(n);
    if (u(n) <= 0.0) return out; // a dead slot pins the minimum rate at zero
  }

  // Affine feasible set over Ehat (tau0 fixed): causality, thresholds, E >= 0.
  std::vector<Eigen::VectorXd> rows;
  std::vector<double> rhs;
  for (int i = 0; i < k; ++i) {
    for (int upto = 0; upto < t; ++upto) {
      Eigen::VectorXd row = Eigen::VectorXd::Zero(kt);
      double c = 0.0;
      for (int n = 0; n <= upto; ++n) {
        row(n * k + i) = sc.bc(i, n);
        c += sc.bc(i, n) * tau0(n);
      }
      rows.push_back(row);
      rhs.push_back(c);
    }
  }
  for (int n = 0; n < t; ++n) {
    const auto itf = interference_sets(sc, scheme, ord, n);
    for (int i = 0; i < k; ++i) {
      const double s = sc.s_th(i);
      if (s <= 0.0) continue;
      Eigen::VectorXd row = Eigen::VectorXd::Zero(kt);
      for (int j : itf[i]) row(n * k + j) = s * sc.w(j, n);
      row(n * k + i) -= sc.w(i, n);
      rows.push_back(row);
      rhs.push_back(-s * u(n));
    }
  }
  for (int q = 0; q < kt; ++q) {
    Eigen::VectorXd row = Eigen::VectorXd::Zero(kt);
    row(q) = -1.0;
    rows.push_back(row);
    rhs.push_back(0.0);
  }

  auto mat_of = [&](const Eigen::VectorXd& vv) {
    Eigen::MatrixXd m(k, t);
    for (int n = 0; n < t; ++n)
      for (int i = 0; i < k; ++i) m(i, n) = vv(n * k + i);
    return m;
  };
  auto rates_of = [&](const Eigen::VectorXd& vv) {
    Eigen::MatrixXd r(k, t);
    for (int n = 0; n < t; ++n) {
      const auto itf = interference_sets(sc, scheme, ord, n);
      for (int i = 0; i < k; ++i) {
        double den = u(n);
        for (int j : itf[i]) den += sc.w(j, n) * vv(n * k + j);
        const double sig = sc.w(i, n) * vv(n * k + i);
        r(i, n) = sig > 0.0 ? u(n) * std::log2(1.0 + sig / den) : 0.0;
      }
    }
    return r;
  };

  Eigen::VectorXd y = ehat_start.cwiseMax(1e-14);
  Eigen::MatrixXd rates_y = rates_of(y);
  MinPair mp = min_rate_pair(rates_y);
  out.iterate_min_rates.push_back(mp.rate);

  // Violations normalized by the same scales check_feasible uses, so the
  // recorded worst value compares directly against tol_con. Thresholds are
  // checked under the supplied decoding order.
  double energy_scale = 0.0;
  for (int i = 0; i < k; ++i)
    energy_scale = std::max(energy_scale, inst.gamma.row(i).sum());
  const double s_scale = std::max(1.0, sc.s_th.maxCoeff());
  auto track_violation = [&](const Eigen::VectorXd& vv) {
    double worst = 0.0;
    for (int i = 0; i < k; ++i) {
      double ce = 0.0, ch = 0.0;
      for (int n = 0; n < t; ++n) {
        ce += inst.gamma(i, n) * vv(n * k + i); // joules: gamma * Ehat
        ch += inst.gamma(i, n) * tau0(n);
        worst = std::max(worst, (ce - ch) / std::max(energy_scale, 1e-300));
      }
    }
    worst = std::max(worst, -vv.minCoeff());
    for (int n = 0; n < t; ++n) {
      const auto itf = interference_sets(sc, scheme, ord, n);
      for (int i = 0; i < k; ++i) {
        if (sc.s_th(i) <= 0.0) continue;
        double den = u(n);
        for (int j : itf[i]) den += sc.w(j, n) * vv(n * k + j);
        const double x = sc.w(i, n) * vv(n * k + i) / den;
        worst = std::max(worst, (sc.s_th(i) - x) / s_scale);
      }
    }
    out.worst_iterate_violation = std::max(out.worst_iterate_violation, worst);
  };
  track_violation(y);

  double zeta = 0.9;
  const double zeta_delta = 1e-3;
  int stall = 0;
  for (int it = 0; it < 300; ++it) {
    // Subproblem variables: [Ehat; Rbar].
    const int dim = kt + 1;
    ConvexProblem prob;
    const Eigen::VectorXd ycopy = y;
    const double r_y = mp.rate;

    prob.objective.value = [kt, ycopy, r_y](const Eigen::VectorXd& x) {
      const double rbar = x(kt);
      return -rbar + 0.5 * kProx * (x.head(kt) - ycopy).squaredNorm() +
             0.5 * kProx * (rbar - r_y) * (rbar - r_y);
    };
    prob.objective.grad = [kt, ycopy, r_y](const Eigen::VectorXd& x) {
      Eigen::VectorXd g(kt + 1);
      g.head(kt) = kProx * (x.head(kt) - ycopy);
      g(kt) = -1.0 + kProx * (x(kt) - r_y);
      return g;
    };
    prob.objective.hess = [kt](const Eigen::VectorXd&) {
      return Eigen::MatrixXd::Identity(kt + 1, kt + 1) * kProx;
    };

    // Rate rows: Rbar <= Rtilde_{i,n}(Ehat; y).
    for (int n = 0; n < t; ++n) {
      const auto itf = interference_sets(sc, scheme, ord, n);
      for (int i = 0; i < k; ++i) {
        double di_y = u(n);
        for (int j : itf[i]) di_y += sc.w(j, n) * ycopy(n * k + j);
        std::vector<int> fset = itf[i];
        fset.push_back(i);
        const double un = u(n);
        const auto members = std::make_shared<std::vector<int>>(fset);
        const auto imembers = std::make_shared<std::vector<int>>(itf[i]);
        const int base = n * k;
        const Scaled* scp = &sc;
        const int slot = n;
        SmoothFn c;
        c.value = [=](const Eigen::VectorXd& x) {
          double df = un;
          for (int j : *members) df += scp->w(j, slot) * x(base + j);
          if (df <= 0.0) return kInf;
          double lin = 0.0;
          for (int j : *imembers)
            lin += scp->w(j, slot) * (x(base + j) - ycopy(base + j));
          const double rt = un * (std::log(df) - std::log(di_y) - lin / di_y) / kLn2;
          return x(kt) - rt;
        };
        c.grad = [=](const Eigen::VectorXd& x) {
          Eigen::VectorXd g = Eigen::VectorXd::Zero(kt + 1);
          double df = un;
          for (int j : *members) df += scp->w(j, slot) * x(base + j);
          for (int j : *members)
            g(base + j) -= un * scp->w(j, slot) / (df * kLn2);
          for (int j : *imembers)
            g(base + j) += un * scp->w(j, slot) / (di_y * kLn2);
          g(kt) = 1.0;
          return g;
        };
        c.hess = [=](const Eigen::VectorXd& x) {
          Eigen::MatrixXd h = Eigen::MatrixXd::Zero(kt + 1, kt + 1);
          double df = un;
          for (int j : *members) df += scp->w(j, slot) * x(base + j);
          Eigen::VectorXd wv = Eigen::VectorXd::Zero(kt + 1);
          for (int j : *members) wv(base + j) = scp->w(j, slot);
          h.noalias() += (un / (df * df * kLn2)) * wv * wv.transpose();
          return h;
        };
        prob.ineq.push_back(std::move(c));
      }
    }

    // Affine rows extended with a zero Rbar column.
    std::vector<Eigen::VectorXd> arows;
    std::vector<double> arhs;
    for (std::size_t q = 0; q < rows.size(); ++q) {
      Eigen::VectorXd row = Eigen::VectorXd::Zero(dim);
      row.head(kt) = rows[q];
      arows.push_back(row);
      arhs.push_back(rhs[q]);
    }
    detail::stack_rows(arows, arhs, prob.a_ineq, prob.b_ineq);

    Eigen::VectorXd x0(dim);
    x0.head(kt) = y;
    x0(kt) = r_y - 0.1 * (1.0 + std::abs(r_y));
    const ConvexResult r = solve_convex(prob, x0, opts);
    ++out.iterations;
    if (r.status == SolveStatus::Infeasible) break;

    const Eigen::VectorXd ehat_hat = r.x.head(kt);
    const double rel_step = (ehat_hat - y).norm() / (1.0 + y.norm());

    double zz = zeta;
    bool accepted = false;
    for (int half = 0; half < 4; ++half) {
      const Eigen::VectorXd cand = y + zz * (ehat_hat - y);
      const Eigen::MatrixXd rc = rates_of(cand);
      const MinPair mc = min_rate_pair(rc);
      if (mc.rate >= mp.rate - 1e-12) {
        y = cand;
        rates_y = rc;
        if (mc.rate > mp.rate) out.iterate_min_rates.push_back(mc.rate);
        mp = mc;
        accepted = true;
        break;
      }
      zz *= 0.5;
    }
    track_violation(y);
    zeta = zeta * (1.0 - zeta_delta * zeta);

    if (!accepted) break;
    if (rel_step <= 1e-6) break;
    if (out.iterate_min_rates.size() >= 2) {
      const std::size_t m = out.iterate_min_rates.size();
      const double gain = out.iterate_min_rates[m - 1] - out.iterate_min_rates[m - 2];
      if (gain <= 0.1 * opts.tol_obj * (1.0 + std::abs(mp.rate)) && it >= 3) {
        if (++stall >= 2) break;
      } else {
        stall = 0;
      }
    }
  }

  out.e.resize(k, t);
  const Eigen::MatrixXd ym = mat_of(y);
  for (int n = 0; n < t; ++n)
    for (int i = 0; i < k; ++i) out.e(i, n) = ym(i, n) * inst.gamma(i, n);
  out.min_rate = mp.rate;
  out.min_user = mp.user;
  out.min_slot = mp.slot;
  out.status = SolveStatus::Approximate;
  return out;
}

// ---------------------------------------------------------------------------
// Epigraph stage at fixed energies.

double phi_val(double u, double a, double c) {
  if (a <= 0.0) return 0.0;
  return u * std::log2(1.0 + a / (u + c));
}
double phi_d1(double u, double a, double c) {
  if (a <= 0.0) return 0.0;
  const double d1 = u + c, d2 = u + c + a;
  return (std::log(d2 / d1) - u * a / (d1 * d2)) / kLn2;
}
double phi_d2(double u, double a, double c) {
  if (a <= 0.0) return 0.0;
  const double d1 = u + c, d2 = u + c + a;
  return -a * (c * d2 + (c + a) * d1) / (d1 * d1 * d2 * d2 * kLn2);
}

MaxminGivenEResult given_e_impl(const Scaled& sc,
                                const std::vector<std::vector<int>>& ord,
                                const Eigen::MatrixXd& ehat, Decoder scheme,
                                const SolverOptions& opts) {
  MaxminGivenEResult out;
  const int k = sc.k, t = sc.t;

  Eigen::MatrixXd sig(k, t), itfc(k, t);
  for (int n = 0; n < t; ++n) {
    const auto itf = interference_sets(sc, scheme, ord, n);
    for (int i = 0; i < k; ++i) {
      sig(i, n) = sc.w(i, n) * ehat(i, n);
      double acc = 0.0;
      for (int j : itf[i]) acc += sc.w(j, n) * ehat(j, n);
      itfc(i, n) = acc;
    }
  }

  const bool any_threshold = (sc.s_th.array() > 0.0).any();
  if (sig.maxCoeff() <= 0.0) {
    if (any_threshold) return out; // zero SINR cannot meet a positive threshold
    out.tau0 = Eigen::VectorXd::Constant(t, 0.5);
    out.min_rate = 0.0;
    out.status = SolveStatus::Optimal;
    return out;
  }

  // Threshold lower bounds on tau0 and infeasibility detection.
  Eigen::VectorXd lo = Eigen::VectorXd::Zero(t);
  for (int n = 0; n < t; ++n) {
    for (int i = 0; i < k; ++i) {
      const double s = sc.s_th(i);
      if (s <= 0.0) continue;
      const double head = sig(i, n) / s - itfc(i, n);
      if (head <= 0.0) return out;
      lo(n) = std::max(lo(n), 1.0 - head);
    }
    if (lo(n) >= 1.0) return out;
  }

  auto causality_ok = [&](const Eigen::VectorXd& tau, double slack) {
    for (int i = 0; i < k; ++i) {
      double ce = 0.0, ch = 0.0;
      for (int n = 0; n < t; ++n) {
        ce += sc.bc(i, n) * ehat(i, n);
        ch += sc.bc(i, n) * tau(n);
        if (ch - ce < slack * std::max(1.0, ce)) return false;
      }
    }
    return true;
  };
  auto tau_at = [&](double theta) {
    Eigen::VectorXd tau(t);
    for (int n = 0; n < t; ++n) tau(n) = lo(n) + theta * (1.0 - lo(n));
    return tau;
  };
  if (!causality_ok(tau_at(1.0 - 1e-9), 0.0)) return out;
  double theta_hi = 1.0 - 1e-9, theta_lo = 0.0;
  if (causality_ok(tau_at(0.0), 1e-9)) {
    theta_hi = 0.0;
  } else {
    for (int it = 0; it < 60; ++it) {
      const double mid = 0.5 * (theta_lo + theta_hi);
      if (causality_ok(tau_at(mid), 1e-9)) theta_hi = mid;
      else theta_lo = mid;
    }
  }
  const double theta0 = std::min(theta_hi + 0.25 * (1.0 - theta_hi), 1.0 - 1e-6);
  Eigen::VectorXd tau_start = tau_at(theta0);
  for (int n = 0; n < t; ++n)
    tau_start(n) = std::min(tau_start(n), 1.0 - opts.interior_margin);
  if (!causality_ok(tau_start, 0.0)) return out;

  // Variables [tau0; Rbar]; minimize -Rbar.
  const int dim = t + 1;
  ConvexProblem cp;
  cp.objective.value = [t](const Eigen::VectorXd& x) { return -x(t); };
  cp.objective.grad = [t, dim](const Eigen::VectorXd&) {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(dim);
    g(t) = -1.0;
    return g;
  };
  cp.objective.hess = [dim](const Eigen::VectorXd&) {
    return Eigen::MatrixXd::Zero(dim, dim);
  };

  auto sig_p = std::make_shared<Eigen::MatrixXd>(sig);
  auto itf_p = std::make_shared<Eigen::MatrixXd>(itfc);
  for (int n = 0; n < t; ++n) {
    for (int i = 0; i < k; ++i) {
      SmoothFn c;
      const int slot = n, user = i;
      c.value = [sig_p, itf_p, slot, user, t](const Eigen::VectorXd& x) {
        const double u = 1.0 - x(slot);
        if (u <= 0.0 && (*sig_p)(user, slot) > 0.0) return kInf;
        return x(t) - phi_val(u, (*sig_p)(user, slot), (*itf_p)(user, slot));
      };
      c.grad = [sig_p, itf_p, slot, user, t, dim](const Eigen::VectorXd& x) {
        const double u = 1.0 - x(slot);
        Eigen::VectorXd g = Eigen::VectorXd::Zero(dim);
        g(slot) = phi_d1(u, (*sig_p)(user, slot), (*itf_p)(user, slot));
        g(t) = 1.0;
        return g;
      };
      c.hess = [sig_p, itf_p, slot, user, dim](const Eigen::VectorXd& x) {
        const double u = 1.0 - x(slot);
        Eigen::MatrixXd h = Eigen::MatrixXd::Zero(dim, dim);
        h(slot, slot) = -phi_d2(u, (*sig_p)(user, slot), (*itf_p)(user, slot));
        return h;
      };
      cp.ineq.push_back(std::move(c));
    }
  }

  std::vector<Eigen::VectorXd> rows;
  std::vector<double> rhs;
  for (int i = 0; i < k; ++i) {
    for (int upto = 0; upto < t; ++upto) {
      Eigen::VectorXd row = Eigen::VectorXd::Zero(dim);
      double c = 0.0;
      for (int n = 0; n <= upto; ++n) {
        row(n) = -sc.bc(i, n);
        c -= sc.bc(i, n) * ehat(i, n);
      }
      rows.push_back(row);
      rhs.push_back(c);
    }
  }
  for (int n = 0; n < t; ++n) {
    if (lo(n) > 0.0) {
      Eigen::VectorXd row = Eigen::VectorXd::Zero(dim);
      row(n) = -1.0;
      rows.push_back(row);
      rhs.push_back(-lo(n));
    }
    Eigen::VectorXd r0 = Eigen::VectorXd::Zero(dim);
    r0(n) = -1.0;
    rows.push_back(r0);
    rhs.push_back(0.0);
    Eigen::VectorXd r1 = Eigen::VectorXd::Zero(dim);
    r1(n) = 1.0;
    rows.push_back(r1);
    rhs.push_back(1.0);
  }
  detail::stack_rows(rows, rhs, cp.a_ineq, cp.b_ineq);

  double min_phi = kInf;
  for (int n = 0; n < t; ++n)
    for (int i = 0; i < k; ++i)
      min_phi = std::min(min_phi, phi_val(1.0 - tau_start(n), sig(i, n), itfc(i, n)));

  Eigen::VectorXd x0(dim);
  x0.head(t) = tau_start;
  x0(t) = min_phi - 0.1 * (1.0 + std::abs(min_phi));
  const ConvexResult r = solve_convex(cp, x0, opts);
  if (r.status == SolveStatus::Infeasible) return out;

  out.tau0 = r.x.head(t);
  double achieved = kInf;
  for (int n = 0; n < t; ++n)
    for (int i = 0; i < k; ++i)
      achieved = std::min(achieved, phi_val(1.0 - out.tau0(n), sig(i, n), itfc(i, n)));
  out.min_rate = achieved; // tight by construction
  out.status = r.status;
  return out;
}

Solution solve_maxmin_impl(const NetworkInstance& inst, Decoder scheme,
                           const std::vector<std::vector<int>>& ord,
                           const SolverOptions& opts) {
  const Scaled sc = Scaled::make(inst);
  // As in the sum problem, exhausted budgets stop tau0 from descending, so
  // the alternation is started from several harvesting levels.
  const std::vector<double> u_prefs = {0.9, 0.7, 0.5, 0.3};

  Solution best = infeasible_solution(inst.num_users, inst.num_slots);
  bool any_start = false;
  for (double u_pref : u_prefs) {
    auto v0 = detail::feasible_start_ordered(sc, scheme, ord, u_pref);
    if (!v0) continue;
    any_start = true;

    Eigen::VectorXd tau0(sc.t);
    Eigen::VectorXd ehat(sc.k * sc.t);
    for (int n = 0; n < sc.t; ++n) tau0(n) = (*v0)(sc.tau_idx(n));
    for (int n = 0; n < sc.t; ++n)
      for (int i = 0; i < sc.k; ++i) ehat(n * sc.k + i) = (*v0)(sc.e_idx(i, n));

    const Eigen::MatrixXd r0 =
        detail::rate_matrix_at_ordered(sc, *v0, scheme, ord);
    double obj = r0.minCoeff();
    std::vector<double> history = {obj};
    double worst_violation = 0.0;
    int iters = 0;

    for (int outer = 0; outer < 50; ++outer) {
      const double before = obj;
      MaxminGivenTauResult gt =
          given_tau_impl(inst, sc, ord, tau0, scheme, ehat, opts);
      if (gt.status != SolveStatus::Infeasible && gt.min_rate > obj) {
        for (int n = 0; n < sc.t; ++n)
          for (int i = 0; i < sc.k; ++i)
            ehat(n * sc.k + i) = gt.e(i, n) / inst.gamma(i, n);
        obj = gt.min_rate;
      }
      worst_violation = std::max(worst_violation, gt.worst_iterate_violation);
      history.push_back(obj);

      Eigen::MatrixXd em(sc.k, sc.t);
      for (int n = 0; n < sc.t; ++n)
        for (int i = 0; i < sc.k; ++i) em(i, n) = ehat(n * sc.k + i);
      MaxminGivenEResult ge = given_e_impl(sc, ord, em, scheme, opts);
      if (ge.status != SolveStatus::Infeasible && ge.min_rate > obj) {
        tau0 = ge.tau0;
        obj = ge.min_rate;
      }
      history.push_back(obj);
      ++iters;
      if (obj - before <= opts.tol_obj * std::max(1.0, std::abs(obj))) break;
    }

    Eigen::VectorXd v(sc.dim());
    for (int n = 0; n < sc.t; ++n) v(sc.tau_idx(n)) = tau0(n);
    for (int n = 0; n < sc.t; ++n)
      for (int i = 0; i < sc.k; ++i) v(sc.e_idx(i, n)) = ehat(n * sc.k + i);

    Solution sol;
    sol.alloc = sc.to_alloc(v);
    sol.sinr = scheme == Decoder::Lcd ? sinr_lcd(inst, sol.alloc)
                                      : sinr_sicd(inst, sol.alloc, ord);
    sol.rates = rate_matrix(sol.alloc.tau0, sol.sinr);
    sol.objective = sol.rates.minCoeff();
    sol.status = SolveStatus::Approximate;
    sol.iterations = iters;
    sol.outer_objectives = history;
    sol.worst_iterate_violation = worst_violation;
    if (!best.objective || *sol.objective > *best.objective) best = sol;
  }
  if (!any_start) return infeasible_solution(inst.num_users, inst.num_slots);
  if (!best.objective) return best;

  // The alternation cannot trade harvesting time against energy jointly, so
  // its tau0 is inherited from the start; refine by a line search over a
  // uniform tau0 scaling with the SCA stage re-run at each point.
  const Eigen::VectorXd tau_base = best.alloc.tau0;
  Eigen::VectorXd ehat_base(sc.k * sc.t);
  for (int n = 0; n < sc.t; ++n)
    for (int i = 0; i < sc.k; ++i)
      ehat_base(n * sc.k + i) = best.alloc.e(i, n) / inst.gamma(i, n);

  auto start_at_tau = [&](const Eigen::VectorXd& tau_c) -> std::optional<Eigen::VectorXd> {
    // Prefer the incumbent energies shrunk into the new budget.
    Eigen::VectorXd v(sc.dim());
    for (int n = 0; n < sc.t; ++n) v(sc.tau_idx(n)) = tau_c(n);
    for (int i = 0; i < sc.k; ++i) {
      double rho = 1.0, ce = 0.0, ch = 0.0;
      for (int n = 0; n < sc.t; ++n) {
        ce += sc.bc(i, n) * ehat_base(n * sc.k + i);
        ch += sc.bc(i, n) * tau_c(n);
        if (ce > 0.0) rho = std::min(rho, 0.9 * ch / ce);
      }
      rho = std::min(rho, 1.0);
      for (int n = 0; n < sc.t; ++n)
        v(sc.e_idx(i, n)) = std::max(rho * ehat_base(n * sc.k + i), 1e-14);
    }
    bool ok = true;
    for (int n = 0; n < sc.t && ok; ++n) {
      const auto itf = interference_sets(sc, scheme, ord, n);
      for (int i = 0; i < sc.k && ok; ++i) {
        if (sc.s_th(i) <= 0.0) continue;
        double den = 1.0 - tau_c(n);
        for (int j : itf[i]) den += sc.w(j, n) * v(sc.e_idx(j, n));
        if (sc.w(i, n) * v(sc.e_idx(i, n)) <= sc.s_th(i) * den * (1.0 + 1e-9))
          ok = false;
      }
    }
    if (ok) return v;
    return detail::feasible_start_at_tau(sc, scheme, ord, tau_c);
  };

  MaxminGivenTauResult best_gt;
  Eigen::VectorXd best_tau = tau_base;
  double best_val = *best.objective;
  bool refined = false;
  auto eval_scale = [&](double c) {
    Eigen::VectorXd tau_c(sc.t);
    for (int n = 0; n < sc.t; ++n)
      tau_c(n) = std::clamp(c * tau_base(n), 1e-6, 1.0 - 1e-6);
    const auto v0 = start_at_tau(tau_c);
    if (!v0) return -std::numeric_limits<double>::infinity();
    Eigen::VectorXd eh(sc.k * sc.t);
    for (int n = 0; n < sc.t; ++n)
      for (int i = 0; i < sc.k; ++i) eh(n * sc.k + i) = (*v0)(sc.e_idx(i, n));
    MaxminGivenTauResult gt = given_tau_impl(inst, sc, ord, tau_c, scheme, eh, opts);
    if (gt.status == SolveStatus::Infeasible)
      return -std::numeric_limits<double>::infinity();
    best.worst_iterate_violation =
        std::max(best.worst_iterate_violation, gt.worst_iterate_violation);
    if (gt.min_rate > best_val) {
      best_val = gt.min_rate;
      best_gt = gt;
      best_tau = tau_c;
      refined = true;
    }
    return gt.min_rate;
  };

  double c_best = 1.0, v_best = *best.objective;
  for (double c : {0.6, 0.75, 0.9, 1.1, 1.25}) {
    const double v = eval_scale(c);
    if (v > v_best) {
      v_best = v;
      c_best = c;
    }
  }
  {
    const double gr = 0.6180339887498949;
    double a = std::max(0.45, c_best - 0.15), b = c_best + 0.15;
    double c1 = b - gr * (b - a), c2 = a + gr * (b - a);
    double f1 = eval_scale(c1), f2 = eval_scale(c2);
    for (int it = 0; it < 8; ++it) {
      if (f1 < f2) {
        a = c1;
        c1 = c2;
        f1 = f2;
        c2 = a + gr * (b - a);
        f2 = eval_scale(c2);
      } else {
        b = c2;
        c2 = c1;
        f2 = f1;
        c1 = b - gr * (b - a);
        f1 = eval_scale(c1);
      }
    }
  }

  if (refined) {
    Eigen::VectorXd v(sc.dim());
    for (int n = 0; n < sc.t; ++n) v(sc.tau_idx(n)) = best_tau(n);
    for (int n = 0; n < sc.t; ++n)
      for (int i = 0; i < sc.k; ++i)
        v(sc.e_idx(i, n)) = best_gt.e(i, n) / inst.gamma(i, n);
    best.alloc = sc.to_alloc(v);
    best.sinr = scheme == Decoder::Lcd ? sinr_lcd(inst, best.alloc)
                                       : sinr_sicd(inst, best.alloc, ord);
    best.rates = rate_matrix(best.alloc.tau0, best.sinr);
    best.objective = best.rates.minCoeff();
    best.outer_objectives.push_back(*best.objective);
  }
  return best;
}

} // namespace

SmoothFn prox_surrogate(const SmoothFn& fn, const Eigen::VectorXd& y) {
  const Eigen::VectorXd g_y = fn.grad(y);
  const Eigen::VectorXd y_copy = y;
  SmoothFn s;
  s.value = [g_y, y_copy](const Eigen::VectorXd& x) {
    return g_y.dot(x - y_copy) + 0.5 * (x - y_copy).squaredNorm();
  };
  s.grad = [g_y, y_copy](const Eigen::VectorXd& x) {
    return (g_y + (x - y_copy)).eval();
  };
  s.hess = [y_copy](const Eigen::VectorXd&) {
    const int n = static_cast<int>(y_copy.size());
    return Eigen::MatrixXd::Identity(n, n).eval();
  };
  return s;
}

MaxminGivenTauResult solve_maxmin_given_tau(const NetworkInstance& inst,
                                            const Eigen::VectorXd& tau0,
                                            Decoder scheme,
                                            const Allocation& start,
                                            const SolverOptions& opts) {
  const Scaled sc = Scaled::make(inst);
  Eigen::VectorXd ehat(sc.k * sc.t);
  for (int n = 0; n < sc.t; ++n)
    for (int i = 0; i < sc.k; ++i)
      ehat(n * sc.k + i) = start.e(i, n) / inst.gamma(i, n);
  return given_tau_impl(inst, sc, sc.orders, tau0, scheme, ehat, opts);
}

MaxminGivenEResult solve_maxmin_given_E(const NetworkInstance& inst,
                                        const Eigen::MatrixXd& e, Decoder scheme,
                                        const SolverOptions& opts) {
  const Scaled sc = Scaled::make(inst);
  const Eigen::MatrixXd ehat = e.cwiseQuotient(inst.gamma);
  return given_e_impl(sc, sc.orders, ehat, scheme, opts);
}

Solution solve_maxmin(const NetworkInstance& inst, Decoder scheme,
                      const SolverOptions& opts) {
  const auto orders = decoding_orders(inst);
  return solve_maxmin_impl(inst, scheme, orders, opts);
}

Solution solve_maxmin_sicd_with_order(const NetworkInstance& inst,
                                      const std::vector<std::vector<int>>& orders,
                                      const SolverOptions& opts) {
  return solve_maxmin_impl(inst, Decoder::Sicd, orders, opts);
}

} // namespace wpcn
