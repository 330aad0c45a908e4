#include "wpcn/maxsum.hpp"

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

Solution infeasible_solution(int k, int t) {
  Solution s;
  s.alloc = Allocation::zero(k, t);
  s.sinr = Eigen::MatrixXd::Zero(k, t);
  s.rates = Eigen::MatrixXd::Zero(k, t);
  s.status = SolveStatus::Infeasible;
  return s;
}

Solution finalize_lcd(const Scaled& sc, const Eigen::VectorXd& v,
                      SolveStatus status) {
  Solution s;
  s.alloc = sc.to_alloc(v);
  s.sinr = sinr_lcd(*sc.inst, s.alloc);
  s.rates = rate_matrix(s.alloc.tau0, s.sinr);
  s.objective = s.rates.sum();
  s.status = status;
  return s;
}

// ---------------------------------------------------------------------------
// P1_LCD(tau0): condensation + GP rounds, in normalized variables.
// GP variables: [Ehat (k*t)] then [x (k*t)], both in logs inside solve_gp.

struct GpLayout {
  int k = 0, t = 0;
  int e(int i, int n) const { return n * k + i; }
  int x(int i, int n) const { return k * t + n * k + i; }
  int dim() const { return 2 * k * t; }
};

GivenTauResult given_tau_impl(const Scaled& sc, const Eigen::VectorXd& tau0,
                              const Eigen::VectorXd& ehat_start,
                              const SolverOptions& opts) {
  GivenTauResult out;
  const int k = sc.k, t = sc.t;
  GpLayout ly{k, t};

  for (int n = 0; n < t; ++n)
    if (tau0(n) >= 1.0 - 1e-12 && (sc.s_th.array() > 0.0).any()) return out;

  Eigen::VectorXd u(t);
  for (int n = 0; n < t; ++n) u(n) = 1.0 - tau0(n);

  // Cumulative harvested budgets per (i, upto) in bc units.
  Eigen::MatrixXd budget(k, t);
  for (int i = 0; i < k; ++i) {
    double acc = 0.0;
    for (int n = 0; n < t; ++n) {
      acc += sc.bc(i, n) * tau0(n);
      budget(i, n) = acc;
    }
  }
  if (budget.minCoeff() <= 0.0) return out;

  auto sinr_of = [&](const Eigen::MatrixXd& eh) {
    Eigen::MatrixXd x(k, t);
    for (int n = 0; n < t; ++n) {
      double total = 0.0;
      for (int j = 0; j < k; ++j) total += sc.w(j, n) * eh(j, n);
      for (int i = 0; i < k; ++i) {
        const double sig = sc.w(i, n) * eh(i, n);
        x(i, n) = sig > 0.0 ? sig / (u(n) + total - sig) : 0.0;
      }
    }
    return x;
  };
  auto sum_rate_of = [&](const Eigen::MatrixXd& x) {
    double r = 0.0;
    for (int n = 0; n < t; ++n)
      for (int i = 0; i < k; ++i)
        if (x(i, n) > 0.0) r += u(n) * std::log2(1.0 + x(i, n));
    return r;
  };

  Eigen::MatrixXd eh(k, t);
  for (int n = 0; n < t; ++n)
    for (int i = 0; i < k; ++i) eh(i, n) = std::max(ehat_start(n * k + i), 1e-14);
  Eigen::MatrixXd x_bar = sinr_of(eh);
  if (x_bar.minCoeff() <= 0.0) return out;
  double obj = sum_rate_of(x_bar);
  out.inner_objectives.push_back(obj);

  Eigen::VectorXd tau_for_approx = tau0;
  const int max_rounds = 50;
  for (int round = 0; round < max_rounds; ++round) {
    const CondensationState cs = monomial_approx(x_bar, tau_for_approx);

    GeometricProgram gp;
    gp.num_vars = ly.dim();
    Monomial obj_m;
    obj_m.log_coeff = -cs.log_c;
    obj_m.exponents = Eigen::VectorXd::Zero(ly.dim());
    for (int n = 0; n < t; ++n)
      for (int i = 0; i < k; ++i)
        obj_m.exponents(ly.x(i, n)) = -cs.y(i, n) * u(n);
    gp.objective.terms.push_back(obj_m);

    // SINR definition (relaxed to <= 1): x * (u + sum_{j!=i} w_j e_j) / (w_i e_i)
    for (int n = 0; n < t; ++n) {
      for (int i = 0; i < k; ++i) {
        Posynomial p;
        Monomial noise;
        noise.log_coeff = std::log(u(n)) - std::log(sc.w(i, n));
        noise.exponents = Eigen::VectorXd::Zero(ly.dim());
        noise.exponents(ly.x(i, n)) = 1.0;
        noise.exponents(ly.e(i, n)) = -1.0;
        p.terms.push_back(noise);
        for (int j = 0; j < k; ++j) {
          if (j == i) continue;
          Monomial itf;
          itf.log_coeff = std::log(sc.w(j, n)) - std::log(sc.w(i, n));
          itf.exponents = Eigen::VectorXd::Zero(ly.dim());
          itf.exponents(ly.x(i, n)) = 1.0;
          itf.exponents(ly.e(j, n)) = 1.0;
          itf.exponents(ly.e(i, n)) = -1.0;
          p.terms.push_back(itf);
        }
        gp.constraints.push_back(std::move(p));
      }
    }
    // Energy causality: sum_{n<=upto} bc e / budget <= 1.
    for (int i = 0; i < k; ++i) {
      for (int upto = 0; upto < t; ++upto) {
        Posynomial p;
        for (int n = 0; n <= upto; ++n) {
          Monomial m;
          m.log_coeff = std::log(sc.bc(i, n)) - std::log(budget(i, upto));
          m.exponents = Eigen::VectorXd::Zero(ly.dim());
          m.exponents(ly.e(i, n)) = 1.0;
          p.terms.push_back(m);
        }
        gp.constraints.push_back(std::move(p));
      }
    }
    // Thresholds S / x <= 1 and lower hygiene bounds.
    for (int n = 0; n < t; ++n) {
      for (int i = 0; i < k; ++i) {
        if (sc.s_th(i) > 0.0) {
          Posynomial p;
          Monomial m;
          m.log_coeff = std::log(sc.s_th(i));
          m.exponents = Eigen::VectorXd::Zero(ly.dim());
          m.exponents(ly.x(i, n)) = -1.0;
          p.terms.push_back(m);
          gp.constraints.push_back(std::move(p));
        } else {
          Posynomial p;
          Monomial m;
          m.log_coeff = std::log(1e-15);
          m.exponents = Eigen::VectorXd::Zero(ly.dim());
          m.exponents(ly.x(i, n)) = -1.0;
          p.terms.push_back(m);
          gp.constraints.push_back(std::move(p));
        }
        Posynomial pe;
        Monomial me;
        me.log_coeff = std::log(1e-15);
        me.exponents = Eigen::VectorXd::Zero(ly.dim());
        me.exponents(ly.e(i, n)) = -1.0;
        pe.terms.push_back(me);
        gp.constraints.push_back(std::move(pe));
      }
    }

    // Strictly feasible start: current energies with x nudged inside the
    // SINR-definition surface, keeping x above the thresholds.
    double margin = kInf;
    for (int n = 0; n < t; ++n)
      for (int i = 0; i < k; ++i)
        if (sc.s_th(i) > 0.0)
          margin = std::min(margin, (x_bar(i, n) - sc.s_th(i)) / x_bar(i, n));
    if (margin <= 0.0) return out; // start not strictly feasible
    const double nudge = std::min(1e-9, std::isfinite(margin) ? margin / 2.0 : 1e-9);

    Eigen::VectorXd start(ly.dim());
    for (int n = 0; n < t; ++n)
      for (int i = 0; i < k; ++i) {
        start(ly.e(i, n)) = eh(i, n);
        start(ly.x(i, n)) = x_bar(i, n) * (1.0 - nudge);
      }

    const GpResult r = solve_gp(gp, start, opts);
    if (r.status == SolveStatus::Infeasible) break;

    Eigen::MatrixXd eh_new(k, t);
    for (int n = 0; n < t; ++n)
      for (int i = 0; i < k; ++i) eh_new(i, n) = r.x(ly.e(i, n));
    const Eigen::MatrixXd x_new = sinr_of(eh_new); // tighten SINR definition
    const double obj_new = sum_rate_of(x_new);

    ++out.inner_iterations;
    if (obj_new > obj) {
      eh = eh_new;
      x_bar = x_new;
      const double gain = obj_new - obj;
      obj = obj_new;
      out.inner_objectives.push_back(obj);
      if (gain <= opts.tol_obj * std::max(1.0, std::abs(obj))) break;
    } else {
      break; // no further improvement at this condensation
    }
  }

  out.sum_rate = obj;
  out.e.resize(k, t);
  for (int n = 0; n < t; ++n)
    for (int i = 0; i < k; ++i) out.e(i, n) = eh(i, n) * sc.inst->gamma(i, n);
  out.sinr = x_bar;
  out.status = SolveStatus::Approximate;
  return out;
}

// ---------------------------------------------------------------------------
// P1_LCD(E): concave maximization over tau0 with affine constraints.

struct TauProblemData {
  Eigen::MatrixXd sig; // w * Ehat, constants
  Eigen::MatrixXd itf; // interference constants per (i,n)
};

TauProblemData tau_problem_data(const Scaled& sc, const Eigen::MatrixXd& ehat) {
  TauProblemData d;
  d.sig.resize(sc.k, sc.t);
  d.itf.resize(sc.k, sc.t);
  for (int n = 0; n < sc.t; ++n) {
    double total = 0.0;
    for (int j = 0; j < sc.k; ++j) total += sc.w(j, n) * ehat(j, n);
    for (int i = 0; i < sc.k; ++i) {
      d.sig(i, n) = sc.w(i, n) * ehat(i, n);
      d.itf(i, n) = total - d.sig(i, n);
    }
  }
  return d;
}

// phi(u) = u log2(1 + a/(u + c)); phi' and phi'' in u.
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

GivenEResult given_e_impl(const Scaled& sc, const Eigen::MatrixXd& ehat,
                          const SolverOptions& opts) {
  GivenEResult out;
  const int k = sc.k, t = sc.t;
  const TauProblemData d = tau_problem_data(sc, ehat);

  const bool any_energy = d.sig.maxCoeff() > 0.0;
  const bool any_threshold = (sc.s_th.array() > 0.0).any();
  if (!any_energy && !any_threshold) {
    out.tau0 = Eigen::VectorXd::Constant(t, 0.5);
    out.sum_rate = 0.0;
    out.status = SolveStatus::Optimal;
    return out;
  }

  // Per-slot lower bounds on tau0 from the decoding thresholds.
  Eigen::VectorXd lo = Eigen::VectorXd::Zero(t);
  for (int n = 0; n < t; ++n) {
    for (int i = 0; i < k; ++i) {
      const double s = sc.s_th(i);
      if (s <= 0.0) continue;
      const double head = d.sig(i, n) / s - d.itf(i, n); // u must be <= head
      if (head <= 0.0) {
        out.status = SolveStatus::Infeasible;
        return out;
      }
      lo(n) = std::max(lo(n), 1.0 - head);
    }
    if (lo(n) >= 1.0) {
      out.status = SolveStatus::Infeasible;
      return out;
    }
  }

  // Cumulative energy lower bounds; find strictly feasible tau0 on the
  // segment tau(theta) = lo + theta (1 - lo).
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
  if (!causality_ok(tau_at(1.0 - 1e-9), 0.0)) {
    out.status = SolveStatus::Infeasible;
    return out;
  }
  double theta_lo = 0.0, theta_hi = 1.0 - 1e-9;
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
  if (!causality_ok(tau_start, 0.0)) {
    out.status = SolveStatus::Infeasible;
    return out;
  }

  // Assemble the convex program over tau0.
  ConvexProblem cp;
  const Scaled* s = &sc;
  auto data = std::make_shared<TauProblemData>(d);
  cp.objective.value = [s, data](const Eigen::VectorXd& tau) {
    double total = 0.0;
    for (int n = 0; n < s->t; ++n) {
      const double u = 1.0 - tau(n);
      if (u <= 0.0) {
        if (data->sig.col(n).maxCoeff() > 0.0) return kInf;
        continue;
      }
      for (int i = 0; i < s->k; ++i)
        total += phi_val(u, data->sig(i, n), data->itf(i, n));
    }
    return -total;
  };
  cp.objective.grad = [s, data](const Eigen::VectorXd& tau) {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(s->t);
    for (int n = 0; n < s->t; ++n) {
      const double u = 1.0 - tau(n);
      for (int i = 0; i < s->k; ++i)
        g(n) += phi_d1(u, data->sig(i, n), data->itf(i, n));
    }
    return g;
  };
  cp.objective.hess = [s, data](const Eigen::VectorXd& tau) {
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(s->t, s->t);
    for (int n = 0; n < s->t; ++n) {
      const double u = 1.0 - tau(n);
      for (int i = 0; i < s->k; ++i)
        h(n, n) -= phi_d2(u, data->sig(i, n), data->itf(i, n));
    }
    return h;
  };

  std::vector<Eigen::VectorXd> rows;
  std::vector<double> rhs;
  for (int i = 0; i < k; ++i) { // causality: -sum bc tau <= -sum bc ehat
    for (int upto = 0; upto < t; ++upto) {
      Eigen::VectorXd row = Eigen::VectorXd::Zero(t);
      double c = 0.0;
      for (int n = 0; n <= upto; ++n) {
        row(n) = -sc.bc(i, n);
        c -= sc.bc(i, n) * ehat(i, n);
      }
      rows.push_back(row);
      rhs.push_back(c);
    }
  }
  for (int n = 0; n < t; ++n) { // thresholds: tau >= lo(n)
    if (lo(n) <= 0.0) continue;
    Eigen::VectorXd row = Eigen::VectorXd::Zero(t);
    row(n) = -1.0;
    rows.push_back(row);
    rhs.push_back(-lo(n));
  }
  for (int n = 0; n < t; ++n) { // box
    Eigen::VectorXd r0 = Eigen::VectorXd::Zero(t);
    r0(n) = -1.0;
    rows.push_back(r0);
    rhs.push_back(0.0);
    Eigen::VectorXd r1 = Eigen::VectorXd::Zero(t);
    r1(n) = 1.0;
    rows.push_back(r1);
    rhs.push_back(1.0);
  }
  detail::stack_rows(rows, rhs, cp.a_ineq, cp.b_ineq);

  const ConvexResult r = solve_convex(cp, tau_start, opts);
  if (r.status == SolveStatus::Infeasible) {
    out.status = SolveStatus::Infeasible;
    return out;
  }
  out.tau0 = r.x;
  double total = 0.0;
  for (int n = 0; n < t; ++n) {
    const double u = 1.0 - r.x(n);
    for (int i = 0; i < k; ++i) total += phi_val(u, d.sig(i, n), d.itf(i, n));
  }
  out.sum_rate = total;
  out.status = r.status;
  return out;
}

// ---------------------------------------------------------------------------
// Proximal-surrogate stage for the fixed-tau0 LCD problem (used by the
// alternating variant that avoids GP condensation).

double lcd_sum_rate_fixed_tau(const Scaled& sc, const Eigen::VectorXd& u,
                              const Eigen::MatrixXd& eh) {
  double total = 0.0;
  for (int n = 0; n < sc.t; ++n) {
    double sum = 0.0;
    for (int j = 0; j < sc.k; ++j) sum += sc.w(j, n) * eh(j, n);
    for (int i = 0; i < sc.k; ++i) {
      const double sig = sc.w(i, n) * eh(i, n);
      if (sig > 0.0)
        total += u(n) * std::log2(1.0 + sig / (u(n) + sum - sig));
    }
  }
  return total;
}

GivenTauResult given_tau_sca_impl(const Scaled& sc, const Eigen::VectorXd& tau0,
                                  const Eigen::VectorXd& ehat_start,
                                  const SolverOptions& opts) {
  GivenTauResult out;
  const int k = sc.k, t = sc.t, kt = k * t;
  Eigen::VectorXd u(t);
  for (int n = 0; n < t; ++n) u(n) = 1.0 - tau0(n);
  if (u.minCoeff() <= 0.0 && (sc.s_th.array() > 0.0).any()) return out;

  auto mat_of = [&](const Eigen::VectorXd& v) {
    Eigen::MatrixXd m(k, t);
    for (int n = 0; n < t; ++n)
      for (int i = 0; i < k; ++i) m(i, n) = v(n * k + i);
    return m;
  };

  // Affine rows over Ehat for fixed tau0.
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
  for (int n = 0; n < t; ++n)
    for (int i = 0; i < k; ++i) {
      const double s = sc.s_th(i);
      if (s <= 0.0) continue;
      Eigen::VectorXd row = Eigen::VectorXd::Zero(kt);
      for (int j = 0; j < k; ++j)
        if (j != i) row(n * k + j) = s * sc.w(j, n);
      row(n * k + i) -= sc.w(i, n);
      rows.push_back(row);
      rhs.push_back(-s * u(n));
    }
  for (int q = 0; q < kt; ++q) {
    Eigen::VectorXd row = Eigen::VectorXd::Zero(kt);
    row(q) = -1.0;
    rows.push_back(row);
    rhs.push_back(0.0);
  }
  Eigen::MatrixXd a_ineq;
  Eigen::VectorXd b_ineq;
  detail::stack_rows(rows, rhs, a_ineq, b_ineq);

  Eigen::VectorXd y = ehat_start.cwiseMax(1e-14);
  double obj = lcd_sum_rate_fixed_tau(sc, u, mat_of(y));
  out.inner_objectives.push_back(obj);

  const double cp_prox = 1e-2;
  double zeta = 0.9;
  const double zeta_delta = 1e-3;
  for (int it = 0; it < 200; ++it) {
    const Eigen::MatrixXd ym = mat_of(y);
    // Denominators at y.
    Eigen::VectorXd full_y(t);
    for (int n = 0; n < t; ++n) {
      double sum = 0.0;
      for (int j = 0; j < k; ++j) sum += sc.w(j, n) * ym(j, n);
      full_y(n) = sum;
    }

    ConvexProblem prob;
    const Scaled* s = &sc;
    const Eigen::VectorXd uu = u;
    const Eigen::VectorXd ycopy = y;
    const Eigen::VectorXd fy = full_y;
    // Surrogate: for each (i,n),
    //   u [ ln(u + sum_F w e) - ln(u + I_i(y)) - sum_{j!=i} w_j (e_j - y_j)/(u + I_i(y)) ] / ln2
    prob.objective.value = [s, uu, ycopy, fy, cp_prox](const Eigen::VectorXd& e) {
      const int K = s->k, T = s->t;
      double total = 0.0;
      for (int n = 0; n < T; ++n) {
        double sum = 0.0;
        for (int j = 0; j < K; ++j) sum += s->w(j, n) * e(n * K + j);
        const double df = uu(n) + sum;
        if (df <= 0.0) return kInf;
        for (int i = 0; i < K; ++i) {
          const double di_y = uu(n) + fy(n) - s->w(i, n) * ycopy(n * K + i);
          double lin = 0.0;
          for (int j = 0; j < K; ++j)
            if (j != i) lin += s->w(j, n) * (e(n * K + j) - ycopy(n * K + j));
          total += uu(n) * (std::log(df) - std::log(di_y) - lin / di_y) / kLn2;
        }
      }
      return -total + 0.5 * cp_prox * (e - ycopy).squaredNorm();
    };
    prob.objective.grad = [s, uu, ycopy, fy, cp_prox](const Eigen::VectorXd& e) {
      const int K = s->k, T = s->t;
      Eigen::VectorXd g = Eigen::VectorXd::Zero(K * T);
      for (int n = 0; n < T; ++n) {
        double sum = 0.0;
        for (int j = 0; j < K; ++j) sum += s->w(j, n) * e(n * K + j);
        const double df = uu(n) + sum;
        const double coef_common = K * uu(n) / (df * kLn2);
        for (int m = 0; m < K; ++m) {
          double lin = 0.0;
          for (int i = 0; i < K; ++i) {
            if (i == m) continue;
            const double di_y = uu(n) + fy(n) - s->w(i, n) * ycopy(n * K + i);
            lin += uu(n) / (di_y * kLn2);
          }
          g(n * K + m) = -(coef_common - lin) * s->w(m, n);
        }
      }
      g += cp_prox * (e - ycopy);
      return g;
    };
    prob.objective.hess = [s, uu, cp_prox](const Eigen::VectorXd& e) {
      const int K = s->k, T = s->t;
      Eigen::MatrixXd h = Eigen::MatrixXd::Identity(K * T, K * T) * cp_prox;
      for (int n = 0; n < T; ++n) {
        double sum = 0.0;
        for (int j = 0; j < K; ++j) sum += s->w(j, n) * e(n * K + j);
        const double df = uu(n) + sum;
        const double c = K * uu(n) / (df * df * kLn2);
        Eigen::VectorXd wv = Eigen::VectorXd::Zero(K * T);
        for (int j = 0; j < K; ++j) wv(n * K + j) = s->w(j, n);
        h.noalias() += c * wv * wv.transpose();
      }
      return h;
    };
    prob.a_ineq = a_ineq;
    prob.b_ineq = b_ineq;

    const ConvexResult r = solve_convex(prob, y, opts);
    if (r.status == SolveStatus::Infeasible) break;
    const Eigen::VectorXd step = r.x - y;
    const double rel_step = step.norm() / (1.0 + y.norm());
    double zz = zeta;
    bool accepted = false;
    for (int half = 0; half < 4; ++half) {
      const Eigen::VectorXd cand = y + zz * step;
      const double obj_new = lcd_sum_rate_fixed_tau(sc, u, mat_of(cand));
      if (obj_new >= obj - 1e-12) {
        y = cand;
        if (obj_new > obj) {
          obj = obj_new;
          out.inner_objectives.push_back(obj);
        }
        accepted = true;
        break;
      }
      zz *= 0.5;
    }
    ++out.inner_iterations;
    zeta = zeta * (1.0 - zeta_delta * zeta);
    if (!accepted || rel_step <= 1e-7) break;
    if (out.inner_objectives.size() >= 2) {
      const double gain = out.inner_objectives.back() -
                          out.inner_objectives[out.inner_objectives.size() - 2];
      if (gain <= opts.tol_obj * std::max(1.0, obj) && it >= 3) break;
    }
  }

  out.sum_rate = obj;
  out.e.resize(k, t);
  const Eigen::MatrixXd ym = mat_of(y);
  for (int n = 0; n < t; ++n)
    for (int i = 0; i < k; ++i) out.e(i, n) = ym(i, n) * sc.inst->gamma(i, n);
  // SINR in real units equals the scaled one.
  out.sinr.resize(k, t);
  for (int n = 0; n < t; ++n) {
    double sum = 0.0;
    for (int j = 0; j < k; ++j) sum += sc.w(j, n) * ym(j, n);
    for (int i = 0; i < k; ++i) {
      const double sig = sc.w(i, n) * ym(i, n);
      out.sinr(i, n) = sig > 0.0 ? sig / (u(n) + sum - sig) : 0.0;
    }
  }
  out.status = SolveStatus::Approximate;
  return out;
}

// ---------------------------------------------------------------------------
// Alternating solver (Algorithm 1 shape), parameterized by the given-tau stage.

using GivenTauStage = GivenTauResult (*)(const Scaled&, const Eigen::VectorXd&,
                                         const Eigen::VectorXd&, const SolverOptions&);

Solution alternate_lcd(const NetworkInstance& inst, const SolverOptions& opts,
                       GivenTauStage stage) {
  const Scaled sc = Scaled::make(inst);
  // The energy stage tends to exhaust budgets, after which causality only
  // lets tau0 grow; starts are therefore spread with a bias toward small
  // tau0 (large u).
  const std::vector<double> u_prefs = {0.95, 0.85, 0.7, 0.5, 0.3};

  Solution best = infeasible_solution(inst.num_users, inst.num_slots);
  bool any_start = false;
  for (double u_pref : u_prefs) {
    auto v0 = detail::feasible_start(sc, Decoder::Lcd, u_pref);
    if (!v0) continue;
    any_start = true;

    Eigen::VectorXd tau0(sc.t), ehat(sc.k * sc.t);
    for (int n = 0; n < sc.t; ++n) tau0(n) = (*v0)(sc.tau_idx(n));
    for (int n = 0; n < sc.t; ++n)
      for (int i = 0; i < sc.k; ++i) ehat(n * sc.k + i) = (*v0)(sc.e_idx(i, n));

    double obj = detail::lcd_sum_rate(sc, *v0);
    std::vector<double> history = {obj};
    int iters = 0;

    for (int outer = 0; outer < 100; ++outer) {
      const double obj_before = obj;
      GivenTauResult gt = stage(sc, tau0, ehat, opts);
      if (gt.status != SolveStatus::Infeasible && gt.sum_rate > obj) {
        for (int n = 0; n < sc.t; ++n)
          for (int i = 0; i < sc.k; ++i)
            ehat(n * sc.k + i) = gt.e(i, n) / inst.gamma(i, n);
        obj = gt.sum_rate;
      }
      history.push_back(obj);

      Eigen::MatrixXd em(sc.k, sc.t);
      for (int n = 0; n < sc.t; ++n)
        for (int i = 0; i < sc.k; ++i) em(i, n) = ehat(n * sc.k + i);
      GivenEResult ge = given_e_impl(sc, em, opts);
      if (ge.status != SolveStatus::Infeasible && ge.sum_rate > obj) {
        tau0 = ge.tau0;
        obj = ge.sum_rate;
      }
      history.push_back(obj);
      ++iters;

      if (obj - obj_before <= opts.tol_obj * std::max(1.0, std::abs(obj))) break;
    }

    Eigen::VectorXd v(sc.dim());
    for (int n = 0; n < sc.t; ++n) v(sc.tau_idx(n)) = tau0(n);
    for (int n = 0; n < sc.t; ++n)
      for (int i = 0; i < sc.k; ++i) v(sc.e_idx(i, n)) = ehat(n * sc.k + i);
    Solution sol = finalize_lcd(sc, v, SolveStatus::Approximate);
    sol.iterations = iters;
    sol.outer_objectives = history;
    if (!best.objective || (sol.objective && *sol.objective > *best.objective))
      best = sol;
  }
  if (!any_start) return infeasible_solution(inst.num_users, inst.num_slots);
  if (!best.objective) return best;

  // Joint (tau0, E) moves are outside the alternation's reach; refine with a
  // line search over uniform tau0 scaling, re-running the fixed-tau stage.
  const Eigen::VectorXd tau_base = best.alloc.tau0;
  Eigen::VectorXd ehat_base(sc.k * sc.t);
  for (int n = 0; n < sc.t; ++n)
    for (int i = 0; i < sc.k; ++i)
      ehat_base(n * sc.k + i) = best.alloc.e(i, n) / inst.gamma(i, n);

  auto start_at_tau = [&](const Eigen::VectorXd& tau_c) -> std::optional<Eigen::VectorXd> {
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
    for (int n = 0; n < sc.t && ok; ++n)
      for (int i = 0; i < sc.k && ok; ++i) {
        if (sc.s_th(i) <= 0.0) continue;
        if (sc.sinr_at(v, i, n, Decoder::Lcd) <= sc.s_th(i) * (1.0 + 1e-9))
          ok = false;
      }
    if (ok) return v;
    return detail::feasible_start_at_tau(sc, Decoder::Lcd, sc.orders, tau_c);
  };

  GivenTauResult best_gt;
  Eigen::VectorXd best_tau = tau_base;
  double best_val = *best.objective;
  bool refined = false;
  auto eval_scale = [&](double c) {
    Eigen::VectorXd tau_c(sc.t);
    for (int n = 0; n < sc.t; ++n)
      tau_c(n) = std::clamp(c * tau_base(n), 1e-6, 1.0 - 1e-6);
    const auto v0 = start_at_tau(tau_c);
    if (!v0) return -kInf;
    Eigen::VectorXd eh(sc.k * sc.t);
    for (int n = 0; n < sc.t; ++n)
      for (int i = 0; i < sc.k; ++i) eh(n * sc.k + i) = (*v0)(sc.e_idx(i, n));
    GivenTauResult gt = stage(sc, tau_c, eh, opts);
    if (gt.status == SolveStatus::Infeasible) return -kInf;
    if (gt.sum_rate > best_val) {
      best_val = gt.sum_rate;
      best_gt = gt;
      best_tau = tau_c;
      refined = true;
    }
    return gt.sum_rate;
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
    const auto history = best.outer_objectives;
    const int iters = best.iterations;
    best = finalize_lcd(sc, v, SolveStatus::Approximate);
    best.iterations = iters;
    best.outer_objectives = history;
    best.outer_objectives.push_back(*best.objective);
  }
  return best;
}

} // namespace

// ---------------------------------------------------------------------------

CondensationState monomial_approx(const Eigen::MatrixXd& x_bar,
                                  const Eigen::VectorXd& tau0) {
  if ((x_bar.array() <= 0.0).any())
    throw std::invalid_argument("monomial_approx: x_bar must be positive");
  if (x_bar.cols() != tau0.size())
    throw std::invalid_argument("monomial_approx: tau0 length mismatch");
  CondensationState cs;
  cs.x_bar = x_bar;
  cs.y = x_bar.array() / (1.0 + x_bar.array());
  double log_c = 0.0;
  for (int n = 0; n < x_bar.cols(); ++n) {
    const double u = 1.0 - tau0(n);
    for (int i = 0; i < x_bar.rows(); ++i)
      log_c += u * std::log1p(x_bar(i, n)) -
               cs.y(i, n) * u * std::log(x_bar(i, n));
  }
  cs.log_c = log_c;
  cs.c = std::exp(log_c);
  return cs;
}

GivenTauResult solve_maxsum_lcd_given_tau(const NetworkInstance& inst,
                                          const Eigen::VectorXd& tau0,
                                          const Allocation& start,
                                          const SolverOptions& opts) {
  const Scaled sc = Scaled::make(inst);
  Eigen::VectorXd ehat(sc.k * sc.t);
  for (int n = 0; n < sc.t; ++n)
    for (int i = 0; i < sc.k; ++i)
      ehat(n * sc.k + i) = start.e(i, n) / inst.gamma(i, n);
  return given_tau_impl(sc, tau0, ehat, opts);
}

GivenEResult solve_maxsum_lcd_given_E(const NetworkInstance& inst,
                                      const Eigen::MatrixXd& e,
                                      const SolverOptions& opts) {
  const Scaled sc = Scaled::make(inst);
  const Eigen::MatrixXd ehat = e.cwiseQuotient(inst.gamma);
  return given_e_impl(sc, ehat, opts);
}

Solution solve_maxsum_lcd(const NetworkInstance& inst, const SolverOptions& opts) {
  return alternate_lcd(inst, opts, &given_tau_impl);
}

Solution solve_maxsum_lcd_sca(const NetworkInstance& inst,
                              const SolverOptions& opts) {
  return alternate_lcd(inst, opts, &given_tau_sca_impl);
}

Solution solve_maxsum_lcd_fixed_tau(const NetworkInstance& inst,
                                    const SolverOptions& opts, int n_grid) {
  const Scaled sc = Scaled::make(inst);
  Solution best = infeasible_solution(inst.num_users, inst.num_slots);
  for (int j = 1; j < n_grid - 1; ++j) {
    const double tau = static_cast<double>(j) / (n_grid - 1);
    auto v0 = detail::feasible_start(sc, Decoder::Lcd, 1.0 - tau, /*exact_u=*/true);
    if (!v0) continue;
    Eigen::VectorXd tauv = Eigen::VectorXd::Constant(sc.t, tau);
    Eigen::VectorXd ehat(sc.k * sc.t);
    for (int n = 0; n < sc.t; ++n)
      for (int i = 0; i < sc.k; ++i) ehat(n * sc.k + i) = (*v0)(sc.e_idx(i, n));
    GivenTauResult gt = given_tau_impl(sc, tauv, ehat, opts);
    if (gt.status == SolveStatus::Infeasible) continue;
    if (!best.objective || gt.sum_rate > *best.objective) {
      Eigen::VectorXd v(sc.dim());
      for (int n = 0; n < sc.t; ++n) v(sc.tau_idx(n)) = tauv(n);
      for (int n = 0; n < sc.t; ++n)
        for (int i = 0; i < sc.k; ++i)
          v(sc.e_idx(i, n)) = gt.e(i, n) / inst.gamma(i, n);
      best = finalize_lcd(sc, v, SolveStatus::Approximate);
    }
  }
  return best;
}

Solution solve_maxsum_sicd(const NetworkInstance& inst, const SolverOptions& opts) {
  const Scaled sc = Scaled::make(inst);
  auto v0 = detail::feasible_start(sc, Decoder::Sicd);
  if (!v0) return infeasible_solution(inst.num_users, inst.num_slots);

  ConvexProblem cp;
  cp.objective = detail::sicd_sum_objective_negated(sc);
  std::vector<Eigen::VectorXd> rows;
  std::vector<double> rhs;
  sc.causality_rows(rows, rhs);
  sc.threshold_rows(Decoder::Sicd, rows, rhs);
  sc.box_rows(rows, rhs);
  detail::stack_rows(rows, rhs, cp.a_ineq, cp.b_ineq);

  const ConvexResult r = solve_convex(cp, *v0, opts);
  if (r.status == SolveStatus::Infeasible)
    return infeasible_solution(inst.num_users, inst.num_slots);

  Solution sol;
  sol.alloc = sc.to_alloc(r.x);
  sol.sinr = sinr_sicd(inst, sol.alloc, sc.orders);
  sol.rates = rate_matrix(sol.alloc.tau0, sol.sinr);
  sol.objective = sol.rates.sum();
  sol.status = r.status;
  sol.iterations = r.newton_iters;
  sol.outer_objectives = {*sol.objective};
  return sol;
}

double dual_rate_balance(double z) {
  if (z >= 1e300) return kInf;
  return std::log1p(z) - z / (1.0 + z);
}

std::pair<Eigen::VectorXd, double> dual_coefficients(const NetworkInstance& inst,
                                                     const DualPoint& dual, int t) {
  if ((dual.lambda.array() < 0.0).any() || (dual.mu.array() < 0.0).any())
    throw std::invalid_argument("dual_coefficients: multipliers must be >= 0");
  const int k = inst.num_users;
  const auto order = decoding_order(inst, t);
  std::vector<int> pos(k);
  for (int p = 0; p < k; ++p) pos[order[p]] = p;

  Eigen::VectorXd lam_tail(k);
  for (int i = 0; i < k; ++i) {
    double acc = 0.0;
    for (int n = t; n < inst.num_slots; ++n) acc += dual.lambda(i, n);
    lam_tail(i) = acc;
  }

  Eigen::VectorXd a(k);
  for (int i = 0; i < k; ++i) {
    double before = 0.0;
    for (int j = 0; j < k; ++j)
      if (pos[j] < pos[i]) before += dual.mu(j, t) * inst.s_th(j);
    const double indicator = pos[i] >= 1 ? 1.0 : 0.0;
    a(i) = kLn2 * (lam_tail(i) + inst.g(i, t) * indicator * before -
                   dual.mu(i, t) * inst.g(i, t));
  }
  double b = 0.0;
  for (int i = 0; i < k; ++i) {
    b += inst.noise_power * dual.mu(i, t) * inst.s_th(i);
    b += lam_tail(i) * inst.gamma(i, t);
  }
  b *= kLn2;
  return {a, b};
}

Allocation dual_inner_solve(const NetworkInstance& inst, const DualPoint& dual,
                            const SolverOptions& opts) {
  const int k = inst.num_users, t = inst.num_slots;
  Allocation a = Allocation::zero(k, t);
  // E is capped at the SINR level z <= 1e9 per slot; the cap never binds at
  // sane prices and keeps the dual bound valid (the primal optimum is far
  // below it).
  constexpr double kZhatCap = 1e9;
  for (int n = 0; n < t; ++n) {
    const auto [coef, b] = dual_coefficients(inst, dual, n);
    const double zstar = b <= dual_rate_balance(1e12)
                             ? bisect_root(dual_rate_balance, b, opts)
                             : kInf;
    const auto order = decoding_order(inst, n);

    // zhat_i = g_i / (sigma^2 a_i) - 1: the marginal-value SINR of riding all
    // slot energy on user i. The energy lands on the largest zhat (earliest
    // in the decoding order on ties); nonpositive prices leave E at the
    // degenerate tau0 = 1, E = 0 limit.
    int best = -1;
    double zhat_best = 0.0;
    for (int i : order) {
      if (coef(i) <= 0.0) continue;
      const double zhat =
          std::min(inst.g(i, n) / (inst.noise_power * coef(i)) - 1.0, kZhatCap);
      if (zhat > zhat_best) {
        zhat_best = zhat;
        best = i;
      }
    }
    if (best < 0 || zhat_best <= 0.0) {
      a.tau0(n) = 1.0;
      continue;
    }
    // Eq.-9 fixed point: zhat at or above z* pins tau0 at the transmit
    // corner, below it at the harvest corner (the interior is the knife
    // edge). f(zhat) >= b is the same comparison, robust when z* overflows.
    (void)zstar;
    const double tie = std::max(1e-12, 1e-9 * std::max(1.0, b));
    if (dual_rate_balance(zhat_best) >= b - tie) {
      a.tau0(n) = 0.0;
      a.e(best, n) = inst.noise_power * zhat_best / inst.g(best, n);
    } else {
      a.tau0(n) = 1.0;
    }
  }
  return a;
}

namespace {

double lagrangian_value(const NetworkInstance& inst, const Allocation& alloc,
                        const DualPoint& dual) {
  double v = 0.0;
  for (int n = 0; n < inst.num_slots; ++n)
    v += sum_rate_sicd_closed(inst, alloc, n);
  for (int i = 0; i < inst.num_users; ++i) {
    double slack = 0.0;
    for (int n = 0; n < inst.num_slots; ++n) {
      slack += inst.gamma(i, n) * alloc.tau0(n) - alloc.e(i, n);
      v += dual.lambda(i, n) * slack;
    }
  }
  const auto orders = decoding_orders(inst);
  for (int n = 0; n < inst.num_slots; ++n) {
    const double u = 1.0 - alloc.tau0(n);
    double later = 0.0;
    for (int p = inst.num_users - 1; p >= 0; --p) {
      const int i = orders[n][p];
      const double sig = inst.g(i, n) * alloc.e(i, n);
      const double slack =
          sig - inst.s_th(i) * (inst.noise_power * u + later);
      v += dual.mu(i, n) * slack;
      later += sig;
    }
  }
  return v;
}

} // namespace

DualSolveResult solve_maxsum_sicd_dual(const NetworkInstance& inst,
                                       const SolverOptions& opts) {
  DualSolveResult out;
  const Scaled sc = Scaled::make(inst);
  const int k = sc.k, t = sc.t;

  auto v0 = detail::feasible_start(sc, Decoder::Sicd);
  if (!v0) {
    out.solution = infeasible_solution(k, t);
    return out;
  }

  // Scaled multipliers: lam_hat = lambda * gamma_ref, mu_hat = mu * sigma^2 * wref.
  Eigen::VectorXd gref(k);
  for (int i = 0; i < k; ++i) gref(i) = inst.gamma.row(i).maxCoeff();
  Eigen::MatrixXd wref(k, t);
  for (int n = 0; n < t; ++n)
    for (int i = 0; i < k; ++i) wref(i, n) = std::max(1.0, sc.w(i, n));

  auto to_real = [&](const Eigen::MatrixXd& lam_hat, const Eigen::MatrixXd& mu_hat) {
    DualPoint d = DualPoint::zero(k, t);
    for (int n = 0; n < t; ++n)
      for (int i = 0; i < k; ++i) {
        d.lambda(i, n) = lam_hat(i, n) / gref(i);
        d.mu(i, n) = mu_hat(i, n) / (inst.noise_power * wref(i, n));
      }
    return d;
  };

  // Keep the inner problem bounded: a_i > 0, i.e. mu_i g_i strictly below the
  // other price terms; enforced sequentially in decoding order.
  auto clip_duals = [&](Eigen::MatrixXd& lam_hat, Eigen::MatrixXd& mu_hat) {
    lam_hat = lam_hat.cwiseMax(0.0);
    mu_hat = mu_hat.cwiseMax(0.0);
    for (int i = 0; i < k; ++i)
      lam_hat(i, t - 1) = std::max(lam_hat(i, t - 1), 1e-10);
    const DualPoint d = to_real(lam_hat, mu_hat);
    for (int n = 0; n < t; ++n) {
      const auto order = decoding_order(inst, n);
      Eigen::VectorXd mu_real(k);
      for (int i = 0; i < k; ++i) mu_real(i) = d.mu(i, n);
      double before = 0.0;
      for (int p = 0; p < k; ++p) {
        const int i = order[p];
        double lam_tail = 0.0;
        for (int m = n; m < t; ++m) lam_tail += d.lambda(i, m);
        const double cap = (1.0 - 1e-6) * (lam_tail / inst.g(i, n) + before);
        if (mu_real(i) > cap) {
          mu_real(i) = std::max(0.0, cap);
          mu_hat(i, n) = mu_real(i) * inst.noise_power * wref(i, n);
        }
        before += mu_real(i) * inst.s_th(i);
      }
    }
  };

  // Repair a stacked scaled point into the feasible set and return its value.
  const Eigen::VectorXd feas = *v0;
  auto repaired_value = [&](Eigen::VectorXd v, Eigen::VectorXd* keep) {
    for (int n = 0; n < t; ++n)
      v(sc.tau_idx(n)) = std::clamp(v(sc.tau_idx(n)), 0.0, 1.0);
    for (int n = 0; n < t; ++n)
      for (int i = 0; i < k; ++i)
        v(sc.e_idx(i, n)) = std::max(v(sc.e_idx(i, n)), 0.0);
    // Scale each user's energies inside causality.
    for (int i = 0; i < k; ++i) {
      double rho = 1.0, ce = 0.0, ch = 0.0;
      for (int n = 0; n < t; ++n) {
        ce += sc.bc(i, n) * v(sc.e_idx(i, n));
        ch += sc.bc(i, n) * v(sc.tau_idx(n));
        if (ce > 0.0) rho = std::min(rho, ch / ce);
      }
      if (rho < 1.0)
        for (int n = 0; n < t; ++n) v(sc.e_idx(i, n)) *= rho * (1.0 - 1e-12);
    }
    // Blend toward the strictly feasible probe point if thresholds fail.
    auto thresholds_ok = [&](const Eigen::VectorXd& p) {
      for (int n = 0; n < t; ++n)
        for (int i = 0; i < k; ++i) {
          if (sc.s_th(i) <= 0.0) continue;
          if (sc.sinr_at(p, i, n, Decoder::Sicd) < sc.s_th(i)) return false;
        }
      return true;
    };
    if (!thresholds_ok(v)) {
      double lo = 0.0, hi = 1.0;
      for (int it = 0; it < 40; ++it) {
        const double mid = 0.5 * (lo + hi);
        const Eigen::VectorXd cand = (1.0 - mid) * v + mid * feas;
        if (thresholds_ok(cand)) hi = mid;
        else lo = mid;
      }
      v = (1.0 - hi) * v + hi * feas;
    }
    double rate = 0.0;
    for (int n = 0; n < t; ++n) {
      const double u = 1.0 - v(sc.tau_idx(n));
      double sum = 0.0;
      for (int i = 0; i < k; ++i) sum += sc.w(i, n) * v(sc.e_idx(i, n));
      if (u > 0.0 && sum > 0.0) rate += u * std::log2(1.0 + sum / u);
    }
    if (keep) *keep = v;
    return rate;
  };

  // Local polish along always-feasible directions: joint scaling of
  // (tau0, Ehat), per-user energy scaling, and a uniform tau0 shift. Keeps
  // the recovered primal honest (no interior-point resolve) while removing
  // most of the averaging bias.
  auto polish = [&](Eigen::VectorXd v, Eigen::VectorXd* keep) {
    auto value_of = [&](const Eigen::VectorXd& p) {
      Eigen::VectorXd dummy;
      return repaired_value(p, &dummy);
    };
    auto golden = [&](const std::function<Eigen::VectorXd(double)>& move,
                      double lo, double hi) {
      const double gr = 0.6180339887498949;
      double a = lo, b = hi;
      double c = b - gr * (b - a), dpt = a + gr * (b - a);
      double fc = value_of(move(c)), fd = value_of(move(dpt));
      for (int it = 0; it < 40; ++it) {
        if (fc < fd) {
          a = c;
          c = dpt;
          fc = fd;
          dpt = a + gr * (b - a);
          fd = value_of(move(dpt));
        } else {
          b = dpt;
          dpt = c;
          fd = fc;
          c = b - gr * (b - a);
          fc = value_of(move(c));
        }
      }
      const double point = 0.5 * (a + b);
      return move(point);
    };

    for (int pass = 0; pass < 2; ++pass) {
      double tau_max = 0.0;
      for (int n = 0; n < t; ++n) tau_max = std::max(tau_max, v(sc.tau_idx(n)));
      const double c_hi = tau_max > 0.0 ? std::min(2.0, 0.999 / tau_max) : 2.0;
      v = golden([&](double c) { return (c * v).eval(); }, 0.2, c_hi);
      for (int i = 0; i < k; ++i) {
        Eigen::VectorXd base = v;
        const int user = i;
        v = golden(
            [&, user](double c) {
              Eigen::VectorXd p = base;
              for (int n = 0; n < t; ++n) p(sc.e_idx(user, n)) *= c;
              return p;
            },
            0.2, 2.0);
      }
      double tmax = 0.0;
      for (int n = 0; n < t; ++n) tmax = std::max(tmax, v(sc.tau_idx(n)));
      Eigen::VectorXd base = v;
      v = golden(
          [&](double dshift) {
            Eigen::VectorXd p = base;
            for (int n = 0; n < t; ++n) p(sc.tau_idx(n)) += dshift;
            return p;
          },
          -0.2, std::max(0.0, 0.999 - tmax));
    }
    Eigen::VectorXd repaired;
    const double val = repaired_value(v, &repaired);
    if (keep) *keep = repaired;
    return val;
  };

  Eigen::VectorXd x_best = feas;
  double p_best = polish(feas, &x_best);

  // Price initialization: marginal rate value of end-of-horizon energy.
  Eigen::MatrixXd lam_hat(k, t), mu_hat = Eigen::MatrixXd::Zero(k, t);
  for (int n = 0; n < t; ++n) {
    const double u = 1.0 - feas(sc.tau_idx(n));
    double sum = 0.0;
    for (int i = 0; i < k; ++i) sum += sc.w(i, n) * feas(sc.e_idx(i, n));
    for (int i = 0; i < k; ++i) {
      const double marg = sc.w(i, n) * u / ((u + sum) * kLn2);
      lam_hat(i, n) = n == t - 1 ? marg : 1e-3 * marg;
    }
  }

  double q_best = kInf;
  Eigen::VectorXd v_win = Eigen::VectorXd::Zero(sc.dim());
  double w_win = 0.0;
  DualPoint best_dual = to_real(lam_hat, mu_hat);

  const int max_dual_iters = 200000;
  const int window = 2000;
  const double gap_target = std::max(opts.tol_obj, 2e-5);
  double gap = kInf;
  double level = kInf, q_best_at_window = kInf;
  int iter = 0;
  for (iter = 1; iter <= max_dual_iters; ++iter) {
    clip_duals(lam_hat, mu_hat);
    const DualPoint d = to_real(lam_hat, mu_hat);
    const Allocation inner = dual_inner_solve(inst, d, opts);
    const double q = lagrangian_value(inst, inner, d);
    if (q < q_best) {
      q_best = q;
      best_dual = d;
    }
    if (!std::isfinite(level)) {
      level = 0.05 * std::max(1.0, std::abs(q_best));
      q_best_at_window = q_best;
    }

    // Scaled constraint slacks (subgradient of q in the scaled multipliers).
    const Eigen::VectorXd v = sc.from_alloc(inner);
    Eigen::MatrixXd slack_lam(k, t), slack_mu(k, t);
    for (int i = 0; i < k; ++i) {
      double acc = 0.0;
      for (int n = 0; n < t; ++n) {
        acc += sc.bc(i, n) * (v(sc.tau_idx(n)) - v(sc.e_idx(i, n)));
        slack_lam(i, n) = acc;
      }
    }
    for (int n = 0; n < t; ++n) {
      const double u = 1.0 - v(sc.tau_idx(n));
      double later = 0.0;
      for (int p = k - 1; p >= 0; --p) {
        const int i = sc.orders[n][p];
        const double sig = sc.w(i, n) * v(sc.e_idx(i, n));
        slack_mu(i, n) = (sig - sc.s_th(i) * (u + later)) / wref(i, n);
        later += sig;
      }
    }
    const double norm2 = slack_lam.squaredNorm() + slack_mu.squaredNorm();

    // Level-Polyak step: descend toward max(p_best, q_best - level); the
    // level halves when a window brings no progress.
    const double target = std::max(p_best, q_best - level);
    double alpha = 0.7 * std::max(q - target, 0.0) / std::max(norm2, 1e-12);
    alpha = std::clamp(alpha, 0.0, 1e3);
    if (alpha <= 0.0) alpha = 1e-6 / std::sqrt(static_cast<double>(iter));

    v_win += alpha * v;
    w_win += alpha;
    lam_hat -= alpha * slack_lam;
    mu_hat -= alpha * slack_mu;

    if (iter % window == 0 || iter == max_dual_iters) {
      if (w_win > 0.0) {
        Eigen::VectorXd cand;
        const double p_avg = polish(v_win / w_win, &cand);
        if (p_avg > p_best) {
          p_best = p_avg;
          x_best = cand;
        }
      }
      v_win.setZero();
      w_win = 0.0;
      const double floor_level =
          0.25 * gap_target * std::max(1.0, std::abs(q_best));
      if (q_best > q_best_at_window - 0.1 * level)
        level = std::max(0.5 * level, floor_level);
      q_best_at_window = q_best;
      gap = (q_best - p_best) / std::max(1.0, std::abs(q_best));
      if (gap <= gap_target) break;
    }
  }

  Solution sol;
  sol.alloc = sc.to_alloc(x_best);
  sol.sinr = sinr_sicd(inst, sol.alloc, sc.orders);
  sol.rates = rate_matrix(sol.alloc.tau0, sol.sinr);
  sol.objective = sol.rates.sum();
  sol.status = gap <= 1e-4 ? SolveStatus::Optimal : SolveStatus::IterationLimit;
  sol.iterations = iter;
  out.solution = sol;
  out.dual = best_dual;
  out.dual_bound = q_best;
  out.gap = gap;
  out.iterations = iter;
  return out;
}

} // namespace wpcn
