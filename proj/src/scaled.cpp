#include "scaled.hpp"

#include <cmath>
#include <stdexcept>

namespace wpcn::detail {

namespace {
constexpr double kLn2 = 0.6931471805599453;
constexpr double kInf = std::numeric_limits<double>::infinity();
} // namespace

Scaled Scaled::make(const NetworkInstance& inst) {
  Scaled sc;
  sc.k = inst.num_users;
  sc.t = inst.num_slots;
  sc.inst = &inst;
  sc.w = inst.g.cwiseProduct(inst.gamma) / inst.noise_power;
  sc.bc.resize(sc.k, sc.t);
  for (int i = 0; i < sc.k; ++i) {
    const double ref = inst.gamma.row(i).maxCoeff();
    sc.bc.row(i) = inst.gamma.row(i) / ref;
  }
  sc.s_th = inst.s_th;
  sc.orders = decoding_orders(inst);
  return sc;
}

Allocation Scaled::to_alloc(const Eigen::VectorXd& v) const {
  Allocation a = Allocation::zero(k, t);
  for (int n = 0; n < t; ++n) a.tau0(n) = v(tau_idx(n));
  for (int n = 0; n < t; ++n)
    for (int i = 0; i < k; ++i)
      a.e(i, n) = std::max(0.0, v(e_idx(i, n))) * inst->gamma(i, n);
  return a;
}

Allocation Scaled::to_alloc_fixed_tau(const Eigen::VectorXd& ehat,
                                      const Eigen::VectorXd& tau0) const {
  Allocation a = Allocation::zero(k, t);
  a.tau0 = tau0;
  for (int n = 0; n < t; ++n)
    for (int i = 0; i < k; ++i)
      a.e(i, n) = std::max(0.0, ehat(n * k + i)) * inst->gamma(i, n);
  return a;
}

Eigen::VectorXd Scaled::from_alloc(const Allocation& a) const {
  Eigen::VectorXd v(dim());
  for (int n = 0; n < t; ++n) v(tau_idx(n)) = a.tau0(n);
  for (int n = 0; n < t; ++n)
    for (int i = 0; i < k; ++i) v(e_idx(i, n)) = a.e(i, n) / inst->gamma(i, n);
  return v;
}

Eigen::MatrixXd Scaled::ehat(const Eigen::VectorXd& v) const {
  Eigen::MatrixXd m(k, t);
  for (int n = 0; n < t; ++n)
    for (int i = 0; i < k; ++i) m(i, n) = v(e_idx(i, n));
  return m;
}

double Scaled::sinr_at(const Eigen::VectorXd& v, int i, int slot,
                       Decoder scheme) const {
  const double u = 1.0 - v(tau_idx(slot));
  double interference = 0.0;
  if (scheme == Decoder::Lcd) {
    for (int j = 0; j < k; ++j)
      if (j != i) interference += w(j, slot) * v(e_idx(j, slot));
  } else {
    bool after = false;
    for (int j : orders[slot]) {
      if (after) interference += w(j, slot) * v(e_idx(j, slot));
      if (j == i) after = true;
    }
  }
  const double sig = w(i, slot) * v(e_idx(i, slot));
  if (sig <= 0.0) return 0.0;
  return sig / (u + interference);
}

void Scaled::causality_rows(std::vector<Eigen::VectorXd>& rows,
                            std::vector<double>& rhs) const {
  for (int i = 0; i < k; ++i) {
    for (int upto = 0; upto < t; ++upto) {
      Eigen::VectorXd row = Eigen::VectorXd::Zero(dim());
      for (int n = 0; n <= upto; ++n) {
        row(e_idx(i, n)) += bc(i, n);
        row(tau_idx(n)) -= bc(i, n);
      }
      rows.push_back(std::move(row));
      rhs.push_back(0.0);
    }
  }
}

void Scaled::threshold_rows_ordered(const std::vector<std::vector<int>>& ord,
                                    std::vector<Eigen::VectorXd>& rows,
                                    std::vector<double>& rhs) const {
  // S_i (1 - tau0 + interference) - w_i Ehat_i <= 0
  for (int n = 0; n < t; ++n) {
    for (int pos = 0; pos < k; ++pos) {
      const int i = ord[n][pos];
      const double s = s_th(i);
      if (s <= 0.0) continue;
      Eigen::VectorXd row = Eigen::VectorXd::Zero(dim());
      row(tau_idx(n)) = -s;
      for (int q = pos + 1; q < k; ++q) {
        const int j = ord[n][q];
        row(e_idx(j, n)) = s * w(j, n);
      }
      row(e_idx(i, n)) -= w(i, n);
      rows.push_back(std::move(row));
      rhs.push_back(-s);
    }
  }
}

void Scaled::threshold_rows(Decoder scheme, std::vector<Eigen::VectorXd>& rows,
                            std::vector<double>& rhs) const {
  if (scheme == Decoder::Sicd) {
    threshold_rows_ordered(orders, rows, rhs);
    return;
  }
  for (int n = 0; n < t; ++n) {
    for (int i = 0; i < k; ++i) {
      const double s = s_th(i);
      if (s <= 0.0) continue;
      Eigen::VectorXd row = Eigen::VectorXd::Zero(dim());
      row(tau_idx(n)) = -s;
      for (int j = 0; j < k; ++j)
        if (j != i) row(e_idx(j, n)) = s * w(j, n);
      row(e_idx(i, n)) -= w(i, n);
      rows.push_back(std::move(row));
      rhs.push_back(-s);
    }
  }
}

void Scaled::box_rows(std::vector<Eigen::VectorXd>& rows,
                      std::vector<double>& rhs) const {
  for (int n = 0; n < t; ++n) {
    Eigen::VectorXd lo = Eigen::VectorXd::Zero(dim());
    lo(tau_idx(n)) = -1.0;
    rows.push_back(std::move(lo));
    rhs.push_back(0.0);
    Eigen::VectorXd hi = Eigen::VectorXd::Zero(dim());
    hi(tau_idx(n)) = 1.0;
    rows.push_back(std::move(hi));
    rhs.push_back(1.0);
  }
  for (int n = 0; n < t; ++n)
    for (int i = 0; i < k; ++i) {
      Eigen::VectorXd row = Eigen::VectorXd::Zero(dim());
      row(e_idx(i, n)) = -1.0;
      rows.push_back(std::move(row));
      rhs.push_back(0.0);
    }
}

void stack_rows(const std::vector<Eigen::VectorXd>& rows,
                const std::vector<double>& rhs, Eigen::MatrixXd& a,
                Eigen::VectorXd& b) {
  const int m = static_cast<int>(rows.size());
  if (m == 0) {
    a.resize(0, 0);
    b.resize(0);
    return;
  }
  a.resize(m, rows[0].size());
  b.resize(m);
  for (int i = 0; i < m; ++i) {
    a.row(i) = rows[i];
    b(i) = rhs[i];
  }
}

namespace {

// Per-slot powers p_i = w_i Ehat_i solving the thresholds-tight system for
// inflated targets, per unit of transmit time u. LCD requires
// sum S/(1+S) < 1; SICD is triangular and always solvable.
std::optional<Eigen::MatrixXd> tight_powers_per_unit_u(
    const Scaled& sc, Decoder scheme, const Eigen::VectorXd& s,
    const std::vector<std::vector<int>>& ord) {
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(sc.k, sc.t);
  if (scheme == Decoder::Lcd) {
    double theta = 0.0;
    for (int i = 0; i < sc.k; ++i) theta += s(i) / (1.0 + s(i));
    if (theta >= 1.0 - 1e-12) return std::nullopt;
    for (int n = 0; n < sc.t; ++n) {
      const double ptot = theta / (1.0 - theta); // per unit u
      for (int i = 0; i < sc.k; ++i)
        p(i, n) = s(i) / (1.0 + s(i)) * (1.0 + ptot);
    }
  } else {
    for (int n = 0; n < sc.t; ++n) {
      double later = 0.0; // sum of powers decoded after the current user
      for (int pos = sc.k - 1; pos >= 0; --pos) {
        const int i = ord[n][pos];
        p(i, n) = s(i) * (1.0 + later);
        later += p(i, n);
      }
    }
  }
  return p;
}

} // namespace

std::optional<Eigen::VectorXd> feasible_start_ordered(
    const Scaled& sc, Decoder scheme, const std::vector<std::vector<int>>& ord,
    double u_pref, bool exact_u) {
  const bool any_threshold = (sc.s_th.array() > 0.0).any();
  Eigen::VectorXd v(sc.dim());
  u_pref = std::clamp(u_pref, 1e-9, 1.0 - 1e-9);

  if (!any_threshold) {
    const double tau = 1.0 - u_pref;
    for (int n = 0; n < sc.t; ++n) v(sc.tau_idx(n)) = tau;
    for (int n = 0; n < sc.t; ++n)
      for (int i = 0; i < sc.k; ++i) v(sc.e_idx(i, n)) = 0.9 * tau;
    return v;
  }

  if (scheme == Decoder::Lcd) {
    // sum_i S/(1+S) < 1 is necessary and sufficient for the thresholds to be
    // jointly satisfiable (with enough harvested energy, available as u -> 0).
    double theta = 0.0;
    for (int i = 0; i < sc.k; ++i) theta += sc.s_th(i) / (1.0 + sc.s_th(i));
    if (theta >= 1.0 - 1e-12) return std::nullopt;
  }
  for (double delta : {1e-3, 1e-4, 1e-6}) {
    const Eigen::VectorXd s_infl = sc.s_th * (1.0 + delta);
    auto p = tight_powers_per_unit_u(sc, scheme, s_infl, ord);
    if (!p) continue; // inflation overshot the LCD cap; retry with smaller margin
    // Ehat = u * q, q = p/w (+ tiny floor for zero-threshold users).
    Eigen::MatrixXd q(sc.k, sc.t);
    for (int n = 0; n < sc.t; ++n)
      for (int i = 0; i < sc.k; ++i) {
        q(i, n) = (*p)(i, n) / sc.w(i, n);
        if (sc.s_th(i) <= 0.0) q(i, n) = std::max(q(i, n), 1e-12);
      }
    // Choose u so cumulative energy fits inside 0.9 of the budget:
    // u * sum bc q <= 0.9 (1-u) sum bc  for every (i, upto).
    double u_cap = u_pref;
    for (int i = 0; i < sc.k; ++i) {
      double cb = 0.0, cq = 0.0;
      for (int n = 0; n < sc.t; ++n) {
        cb += sc.bc(i, n);
        cq += sc.bc(i, n) * q(i, n);
        const double bound = 0.9 * cb / (cq + 0.9 * cb);
        u_cap = std::min(u_cap, 0.95 * bound);
      }
    }
    if (exact_u && u_cap < u_pref) continue; // tight energies do not fit
    const double u = std::max(u_cap, 1e-9);
    for (int n = 0; n < sc.t; ++n) v(sc.tau_idx(n)) = 1.0 - u;
    for (int n = 0; n < sc.t; ++n)
      for (int i = 0; i < sc.k; ++i) v(sc.e_idx(i, n)) = u * q(i, n);

    // Verify strictly.
    bool ok = true;
    for (int n = 0; n < sc.t && ok; ++n)
      for (int pos = 0; pos < sc.k && ok; ++pos) {
        const int i = ord[n][pos];
        if (sc.s_th(i) <= 0.0) continue;
        double interference = 0.0;
        if (scheme == Decoder::Lcd) {
          for (int j = 0; j < sc.k; ++j)
            if (j != i) interference += sc.w(j, n) * v(sc.e_idx(j, n));
        } else {
          for (int qq = pos + 1; qq < sc.k; ++qq)
            interference += sc.w(ord[n][qq], n) * v(sc.e_idx(ord[n][qq], n));
        }
        const double x = sc.w(i, n) * v(sc.e_idx(i, n)) / (u + interference);
        if (!(x > sc.s_th(i) * (1.0 + delta / 4.0))) ok = false;
      }
    if (ok) return v;
  }
  return std::nullopt;
}

std::optional<Eigen::VectorXd> feasible_start(const Scaled& sc, Decoder scheme,
                                              double u_pref, bool exact_u) {
  return feasible_start_ordered(sc, scheme, sc.orders, u_pref, exact_u);
}

std::optional<Eigen::VectorXd> feasible_start_at_tau(
    const Scaled& sc, Decoder scheme, const std::vector<std::vector<int>>& ord,
    const Eigen::VectorXd& tau0) {
  Eigen::VectorXd v(sc.dim());
  for (int n = 0; n < sc.t; ++n) {
    if (tau0(n) <= 0.0 || tau0(n) >= 1.0) return std::nullopt;
    v(sc.tau_idx(n)) = tau0(n);
  }
  const bool any_threshold = (sc.s_th.array() > 0.0).any();
  if (!any_threshold) {
    for (int n = 0; n < sc.t; ++n)
      for (int i = 0; i < sc.k; ++i) v(sc.e_idx(i, n)) = 0.9 * tau0(n);
    return v;
  }
  for (double delta : {1e-3, 1e-4, 1e-6}) {
    const Eigen::VectorXd s_infl = sc.s_th * (1.0 + delta);
    auto p = tight_powers_per_unit_u(sc, scheme, s_infl, ord);
    if (!p) continue;
    bool fits = true;
    for (int n = 0; n < sc.t && fits; ++n) {
      const double u = 1.0 - tau0(n);
      for (int i = 0; i < sc.k; ++i) {
        double q = (*p)(i, n) / sc.w(i, n);
        if (sc.s_th(i) <= 0.0) q = std::max(q, 1e-12);
        v(sc.e_idx(i, n)) = u * q;
      }
    }
    for (int i = 0; i < sc.k && fits; ++i) {
      double ce = 0.0, ch = 0.0;
      for (int n = 0; n < sc.t; ++n) {
        ce += sc.bc(i, n) * v(sc.e_idx(i, n));
        ch += sc.bc(i, n) * tau0(n);
        if (ce > 0.95 * ch) {
          fits = false;
          break;
        }
      }
    }
    if (!fits) continue;
    bool ok = true;
    for (int n = 0; n < sc.t && ok; ++n)
      for (int pos = 0; pos < sc.k && ok; ++pos) {
        const int i = ord[n][pos];
        if (sc.s_th(i) <= 0.0) continue;
        double interference = 0.0;
        if (scheme == Decoder::Lcd) {
          for (int j = 0; j < sc.k; ++j)
            if (j != i) interference += sc.w(j, n) * v(sc.e_idx(j, n));
        } else {
          for (int q = pos + 1; q < sc.k; ++q)
            interference += sc.w(ord[n][q], n) * v(sc.e_idx(ord[n][q], n));
        }
        const double u = 1.0 - tau0(n);
        const double x = sc.w(i, n) * v(sc.e_idx(i, n)) / (u + interference);
        if (!(x > sc.s_th(i) * (1.0 + delta / 4.0))) ok = false;
      }
    if (ok) return v;
  }
  return std::nullopt;
}

SmoothFn sicd_sum_objective_negated(const Scaled& sc) {
  const Scaled* s = &sc;
  SmoothFn fn;
  fn.value = [s](const Eigen::VectorXd& v) {
    double total = 0.0;
    for (int n = 0; n < s->t; ++n) {
      const double u = 1.0 - v(s->tau_idx(n));
      double sum = 0.0;
      for (int i = 0; i < s->k; ++i) sum += s->w(i, n) * v(s->e_idx(i, n));
      if (sum < 0.0) return kInf;
      if (sum == 0.0) continue;
      if (u <= 0.0) return kInf;
      total += u * std::log2(1.0 + sum / u);
    }
    return -total;
  };
  fn.grad = [s](const Eigen::VectorXd& v) {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(s->dim());
    for (int n = 0; n < s->t; ++n) {
      const double u = 1.0 - v(s->tau_idx(n));
      double sum = 0.0;
      for (int i = 0; i < s->k; ++i) sum += s->w(i, n) * v(s->e_idx(i, n));
      const double z = sum / u;
      g(s->tau_idx(n)) = (std::log1p(z) - z / (1.0 + z)) / kLn2;
      for (int i = 0; i < s->k; ++i)
        g(s->e_idx(i, n)) = -s->w(i, n) * u / ((u + sum) * kLn2);
    }
    return g;
  };
  fn.hess = [s](const Eigen::VectorXd& v) {
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(s->dim(), s->dim());
    for (int n = 0; n < s->t; ++n) {
      const double u = 1.0 - v(s->tau_idx(n));
      double sum = 0.0;
      for (int i = 0; i < s->k; ++i) sum += s->w(i, n) * v(s->e_idx(i, n));
      const double c = 1.0 / (u * (u + sum) * (u + sum) * kLn2);
      Eigen::VectorXd a = Eigen::VectorXd::Zero(s->dim());
      a(s->tau_idx(n)) = sum;
      for (int i = 0; i < s->k; ++i) a(s->e_idx(i, n)) = u * s->w(i, n);
      h.noalias() += c * a * a.transpose();
    }
    return h;
  };
  return fn;
}

double lcd_sum_rate(const Scaled& sc, const Eigen::VectorXd& v) {
  double total = 0.0;
  for (int n = 0; n < sc.t; ++n) {
    const double u = 1.0 - v(sc.tau_idx(n));
    if (u <= 0.0) continue;
    for (int i = 0; i < sc.k; ++i) {
      const double x = sc.sinr_at(v, i, n, Decoder::Lcd);
      if (x > 0.0) total += u * std::log2(1.0 + x);
    }
  }
  return total;
}

Eigen::MatrixXd rate_matrix_at_ordered(const Scaled& sc, const Eigen::VectorXd& v,
                                       Decoder scheme,
                                       const std::vector<std::vector<int>>& ord) {
  Eigen::MatrixXd r = Eigen::MatrixXd::Zero(sc.k, sc.t);
  for (int n = 0; n < sc.t; ++n) {
    const double u = 1.0 - v(sc.tau_idx(n));
    if (u <= 0.0) continue;
    for (int pos = 0; pos < sc.k; ++pos) {
      const int i = ord[n][pos];
      double interference = 0.0;
      if (scheme == Decoder::Lcd) {
        for (int j = 0; j < sc.k; ++j)
          if (j != i) interference += sc.w(j, n) * v(sc.e_idx(j, n));
      } else {
        for (int q = pos + 1; q < sc.k; ++q)
          interference += sc.w(ord[n][q], n) * v(sc.e_idx(ord[n][q], n));
      }
      const double sig = sc.w(i, n) * v(sc.e_idx(i, n));
      if (sig > 0.0) r(i, n) = u * std::log2(1.0 + sig / (u + interference));
    }
  }
  return r;
}

Eigen::MatrixXd rate_matrix_at(const Scaled& sc, const Eigen::VectorXd& v,
                               Decoder scheme) {
  return rate_matrix_at_ordered(sc, v, scheme, sc.orders);
}

} // namespace wpcn::detail
