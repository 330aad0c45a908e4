#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "wpcn/maxsum.hpp"
#include "wpcn/model.hpp"
#include "wpcn/oracle.hpp"

using namespace wpcn;

namespace {

double unit(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Test-side Lagrangian of the SIC sum problem (independent oracle for the
// dual inner solve): closed-form sum rate + priced causality and decoding
// slacks, decoding constraints in their affine form.
double lagrangian(const NetworkInstance& inst, const Allocation& a,
                  const DualPoint& d) {
  double v = 0.0;
  for (int n = 0; n < inst.num_slots; ++n) {
    double s = 0.0;
    for (int i = 0; i < inst.num_users; ++i) s += inst.g(i, n) * a.e(i, n);
    const double u = 1.0 - a.tau0(n);
    if (s > 0.0 && u > 0.0) v += u * std::log2(1.0 + s / (inst.noise_power * u));
  }
  for (int i = 0; i < inst.num_users; ++i) {
    double slack = 0.0;
    for (int n = 0; n < inst.num_slots; ++n) {
      slack += inst.gamma(i, n) * a.tau0(n) - a.e(i, n);
      v += d.lambda(i, n) * slack;
    }
  }
  for (int n = 0; n < inst.num_slots; ++n) {
    const auto ord = decoding_order(inst, n);
    const double u = 1.0 - a.tau0(n);
    double later = 0.0;
    for (int p = inst.num_users - 1; p >= 0; --p) {
      const int i = ord[p];
      const double sig = inst.g(i, n) * a.e(i, n);
      v += d.mu(i, n) * (sig - inst.s_th(i) * (inst.noise_power * u + later));
      later += sig;
    }
  }
  return v;
}

// 2-D scan over energy fractions at fixed tau0 (LCD sum objective).
double scan_fixed_tau_lcd(const NetworkInstance& inst, double tau0, double step) {
  double best = -1.0;
  const double u = 1.0 - tau0;
  const double b0 = inst.gamma(0, 0) * tau0, b1 = inst.gamma(1, 0) * tau0;
  for (double f0 = 0.0; f0 <= 1.0 + 1e-12; f0 += step) {
    for (double f1 = 0.0; f1 <= 1.0 + 1e-12; f1 += step) {
      const double p0 = inst.g(0, 0) * f0 * b0, p1 = inst.g(1, 0) * f1 * b1;
      const double noise = inst.noise_power * u;
      const double x0 = p0 > 0 ? p0 / (noise + p1) : 0.0;
      const double x1 = p1 > 0 ? p1 / (noise + p0) : 0.0;
      if (x0 < inst.s_th(0) * (1 - 1e-12) || x1 < inst.s_th(1) * (1 - 1e-12))
        continue;
      double v = 0.0;
      if (x0 > 0) v += u * std::log2(1.0 + x0);
      if (x1 > 0) v += u * std::log2(1.0 + x1);
      best = std::max(best, v);
    }
  }
  return best;
}

} // namespace

TEST_CASE("monomial condensation state") {
  SUBCASE("y = 1/2 at x_bar = 1") {
    const Eigen::MatrixXd xb = Eigen::MatrixXd::Constant(2, 2, 1.0);
    const Eigen::VectorXd tau = Eigen::VectorXd::Constant(2, 0.4);
    const CondensationState cs = monomial_approx(xb, tau);
    CHECK((cs.y.array() == 0.5).all());
  }
  SUBCASE("tangency and global underestimation") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 20; ++trial) {
      const int k = 2 + static_cast<int>(3.0 * unit(rng));
      const int t = 1 + static_cast<int>(2.0 * unit(rng));
      Eigen::MatrixXd xb(k, t);
      for (int i = 0; i < k; ++i)
        for (int n = 0; n < t; ++n) xb(i, n) = 0.05 + 20.0 * unit(rng);
      Eigen::VectorXd tau(t);
      for (int n = 0; n < t; ++n) tau(n) = 0.1 + 0.8 * unit(rng);
      const CondensationState cs = monomial_approx(xb, tau);

      const auto log_f = [&](const Eigen::MatrixXd& x) {
        double acc = 0.0;
        for (int i = 0; i < k; ++i)
          for (int n = 0; n < t; ++n)
            acc += (1.0 - tau(n)) * std::log1p(x(i, n));
        return acc;
      };
      const auto log_ftilde = [&](const Eigen::MatrixXd& x) {
        double acc = cs.log_c;
        for (int i = 0; i < k; ++i)
          for (int n = 0; n < t; ++n)
            acc += cs.y(i, n) * (1.0 - tau(n)) * std::log(x(i, n));
        return acc;
      };
      CHECK(log_ftilde(xb) == doctest::Approx(log_f(xb)).epsilon(1e-10));
      for (int probe = 0; probe < 500; ++probe) {
        Eigen::MatrixXd x(k, t);
        for (int i = 0; i < k; ++i)
          for (int n = 0; n < t; ++n) x(i, n) = 1e-3 + 50.0 * unit(rng);
        CHECK(log_ftilde(x) <= log_f(x) + 1e-10);
      }
    }
  }
  SUBCASE("rejects nonpositive previous SINRs") {
    CHECK_THROWS_AS(monomial_approx(Eigen::MatrixXd::Zero(1, 1),
                                    Eigen::VectorXd::Constant(1, 0.5)),
                    std::invalid_argument);
  }
}

TEST_CASE("fixed-tau LCD stage") {
  PhysicalConfig cfg;
  SolverOptions opts;

  SUBCASE("single user matches the closed-form optimum") {
    cfg.s_th_db = -300;
    const NetworkInstance inst = build_network(cfg, 1, 1, 60.0, 1);
    const double tau = 0.4;
    Allocation start = Allocation::zero(1, 1);
    start.tau0.setConstant(tau);
    start.e(0, 0) = 0.5 * inst.gamma(0, 0) * tau;
    const GivenTauResult r = solve_maxsum_lcd_given_tau(
        inst, Eigen::VectorXd::Constant(1, tau), start, opts);
    REQUIRE(r.status != SolveStatus::Infeasible);
    // best single-user play: spend the whole budget
    const double w = inst.g(0, 0) * inst.gamma(0, 0) / inst.noise_power;
    const double expect = (1 - tau) * std::log2(1.0 + w * tau / (1 - tau));
    CHECK(r.sum_rate == doctest::Approx(expect).epsilon(1e-4));
  }

  SUBCASE("two users match a lattice scan at fixed tau0") {
    const NetworkInstance inst = build_network(cfg, 2, 1, 60.0, 7);
    const double tau = 0.35;
    Allocation start = Allocation::zero(2, 1);
    start.tau0.setConstant(tau);
    start.e(0, 0) = 0.3 * inst.gamma(0, 0) * tau;
    start.e(1, 0) = 0.3 * inst.gamma(1, 0) * tau;
    const GivenTauResult r = solve_maxsum_lcd_given_tau(
        inst, Eigen::VectorXd::Constant(1, tau), start, opts);
    REQUIRE(r.status != SolveStatus::Infeasible);
    const double scan = scan_fixed_tau_lcd(inst, tau, 1e-3);
    CHECK(r.sum_rate >= scan * 0.98);
    // inner log is nondecreasing
    for (std::size_t j = 1; j < r.inner_objectives.size(); ++j)
      CHECK(r.inner_objectives[j] >= r.inner_objectives[j - 1] - 1e-8);
  }

  SUBCASE("with no thresholds someone's budget is exhausted at the horizon") {
    cfg.s_th_db = -300;
    const NetworkInstance inst = build_network(cfg, 2, 2, 60.0, 3);
    const Solution sol = solve_maxsum_lcd(inst, opts);
    REQUIRE(sol.status != SolveStatus::Infeasible);
    double best_ratio = 0.0;
    for (int i = 0; i < 2; ++i) {
      double spent = 0.0, harvested = 0.0;
      for (int n = 0; n < 2; ++n) {
        spent += sol.alloc.e(i, n);
        harvested += inst.gamma(i, n) * sol.alloc.tau0(n);
      }
      best_ratio = std::max(best_ratio, spent / harvested);
    }
    CHECK(best_ratio >= 1.0 - 1e-5);
  }
}

TEST_CASE("fixed-energy LCD stage") {
  PhysicalConfig cfg;
  SolverOptions opts;

  SUBCASE("zero energy with no thresholds is optimal at zero") {
    cfg.s_th_db = -300;
    const NetworkInstance inst = build_network(cfg, 2, 1, 60.0, 1);
    const GivenEResult r =
        solve_maxsum_lcd_given_E(inst, Eigen::MatrixXd::Zero(2, 1), opts);
    CHECK(r.status == SolveStatus::Optimal);
    CHECK(r.sum_rate == 0.0);
  }

  SUBCASE("single slot single user matches a tau0 scan") {
    cfg.s_th_db = -300;
    const NetworkInstance inst = build_network(cfg, 1, 1, 60.0, 2);
    Eigen::MatrixXd e(1, 1);
    e(0, 0) = 0.3 * inst.gamma(0, 0);
    const GivenEResult r = solve_maxsum_lcd_given_E(inst, e, opts);
    REQUIRE(r.status == SolveStatus::Optimal);
    double best = -1.0;
    for (double tau = 0.0; tau <= 1.0; tau += 1e-4) {
      const double u = 1.0 - tau;
      if (u <= 0.0) continue;
      if (inst.gamma(0, 0) * tau < e(0, 0)) continue; // causality
      const double x = inst.g(0, 0) * e(0, 0) / (inst.noise_power * u);
      best = std::max(best, u * std::log2(1.0 + x));
    }
    CHECK(r.sum_rate == doctest::Approx(best).epsilon(1e-3));
  }

  SUBCASE("stronger harvesting never hurts") {
    const NetworkInstance inst = build_network(cfg, 2, 2, 60.0, 5);
    NetworkInstance boosted = inst;
    boosted.gamma *= 1.5;
    boosted.h *= 1.5;
    Eigen::MatrixXd e(2, 2);
    for (int i = 0; i < 2; ++i)
      for (int n = 0; n < 2; ++n) e(i, n) = 0.2 * inst.gamma(i, n);
    const GivenEResult base = solve_maxsum_lcd_given_E(inst, e, opts);
    const GivenEResult more = solve_maxsum_lcd_given_E(boosted, e, opts);
    REQUIRE(base.status == SolveStatus::Optimal);
    REQUIRE(more.status == SolveStatus::Optimal);
    CHECK(more.sum_rate >= base.sum_rate - 1e-8);
  }
}

TEST_CASE("full LCD solver") {
  PhysicalConfig cfg;
  SolverOptions opts;

  SUBCASE("matches the exhaustive grid at desk scale") {
    const NetworkInstance inst = build_network(cfg, 2, 1, 60.0, 11);
    const Solution sol = solve_maxsum_lcd(inst, opts);
    REQUIRE(sol.status != SolveStatus::Infeasible);
    GridSpec spec;
    spec.objective = Objective::MaxSum;
    spec.scheme = Decoder::Lcd;
    const Solution g = grid_search(inst, spec);
    CHECK(*sol.objective >= *g.objective * 0.98);
  }

  SUBCASE("never beats SIC decoding and improves on the fixed-tau baseline") {
    for (std::uint64_t seed : {1, 2}) {
      const NetworkInstance inst = build_network(cfg, 3, 2, 60.0, seed);
      const Solution lcd = solve_maxsum_lcd(inst, opts);
      const Solution sicd = solve_maxsum_sicd(inst, opts);
      REQUIRE(lcd.status != SolveStatus::Infeasible);
      CHECK(*lcd.objective <= *sicd.objective + 1e-8);
      const Solution fixed = solve_maxsum_lcd_fixed_tau(inst, opts);
      CHECK(*lcd.objective >= *fixed.objective - 1e-8);
      for (std::size_t j = 1; j < lcd.outer_objectives.size(); ++j)
        CHECK(lcd.outer_objectives[j] >= lcd.outer_objectives[j - 1] - 1e-8);
    }
  }

  SUBCASE("the proximal-surrogate variant tracks the condensation variant") {
    const NetworkInstance inst = build_network(cfg, 2, 1, 60.0, 11);
    const Solution sca = solve_maxsum_lcd_sca(inst, opts);
    const Solution gp = solve_maxsum_lcd(inst, opts);
    REQUIRE(sca.status != SolveStatus::Infeasible);
    CHECK(*sca.objective >= 0.9 * *gp.objective);
  }
}

TEST_CASE("SIC sum solver") {
  PhysicalConfig cfg;
  SolverOptions opts;

  SUBCASE("matches the exhaustive grid") {
    const NetworkInstance inst = build_network(cfg, 2, 1, 40.0, 7);
    const Solution sol = solve_maxsum_sicd(inst, opts);
    GridSpec spec;
    spec.objective = Objective::MaxSum;
    spec.scheme = Decoder::Sicd;
    const Solution g = grid_search(inst, spec);
    CHECK(*sol.objective >= *g.objective * 0.98);
    CHECK(*sol.objective <= *g.objective * 1.02);
  }

  SUBCASE("objective is invariant under the recovery order") {
    const NetworkInstance inst = build_network(cfg, 4, 2, 60.0, 3);
    const Solution sol = solve_maxsum_sicd(inst, opts);
    std::mt19937_64 rng(5);
    std::vector<int> perm = {0, 1, 2, 3};
    for (int trial = 0; trial < 6; ++trial) {
      std::shuffle(perm.begin(), perm.end(), rng);
      const std::vector<std::vector<int>> orders(2, perm);
      const Eigen::MatrixXd x = sinr_sicd(inst, sol.alloc, orders);
      const double total = rate_matrix(sol.alloc.tau0, x).sum();
      CHECK(total == doctest::Approx(*sol.objective).epsilon(1e-8));
    }
  }

  SUBCASE("moving the AP away strictly reduces the sum") {
    const NetworkInstance near = build_network(cfg, 3, 2, 40.0, 9);
    const NetworkInstance far = build_network(cfg, 3, 2, 80.0, 9);
    const Solution a = solve_maxsum_sicd(near, opts);
    const Solution b = solve_maxsum_sicd(far, opts);
    CHECK(*b.objective < *a.objective);
  }
}

TEST_CASE("dual coefficients") {
  PhysicalConfig cfg;
  const NetworkInstance inst = build_network(cfg, 1, 1, 40.0, 1);

  SUBCASE("zero multipliers give zero coefficients") {
    const auto [a, b] = dual_coefficients(inst, DualPoint::zero(1, 1), 0);
    CHECK(a(0) == 0.0);
    CHECK(b == 0.0);
  }
  SUBCASE("single causality price at K=1, T=1") {
    DualPoint d = DualPoint::zero(1, 1);
    d.lambda(0, 0) = 1.0;
    const auto [a, b] = dual_coefficients(inst, d, 0);
    CHECK(a(0) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(b == doctest::Approx(std::log(2.0) * inst.gamma(0, 0)).epsilon(1e-12));
  }
  SUBCASE("the first-decoded user carries no predecessor prices") {
    const NetworkInstance two = build_network(cfg, 2, 1, 40.0, 2);
    DualPoint d = DualPoint::zero(2, 1);
    d.mu(0, 0) = 0.7;
    d.mu(1, 0) = 0.4;
    const auto [a, b] = dual_coefficients(two, d, 0);
    const auto ord = decoding_order(two, 0);
    const int first = ord[0], second = ord[1];
    CHECK(a(first) ==
          doctest::Approx(std::log(2.0) * (-d.mu(first, 0) * two.g(first, 0))));
    CHECK(a(second) ==
          doctest::Approx(std::log(2.0) *
                          (two.g(second, 0) * d.mu(first, 0) * two.s_th(first) -
                           d.mu(second, 0) * two.g(second, 0))));
    CHECK(b > 0.0);
  }
  SUBCASE("negative multipliers are rejected") {
    DualPoint d = DualPoint::zero(1, 1);
    d.lambda(0, 0) = -1.0;
    CHECK_THROWS_AS(dual_coefficients(inst, d, 0), std::invalid_argument);
  }
}

TEST_CASE("dual inner solve") {
  PhysicalConfig cfg;
  SolverOptions opts;

  SUBCASE("all-zero prices collapse to the harvest-only corner") {
    const NetworkInstance inst = build_network(cfg, 2, 2, 60.0, 1);
    const Allocation a = dual_inner_solve(inst, DualPoint::zero(2, 2), opts);
    CHECK((a.tau0.array() == 1.0).all());
    CHECK(a.e.maxCoeff() == 0.0);
  }

  SUBCASE("prices above the channel value clamp energies to zero") {
    const NetworkInstance inst = build_network(cfg, 2, 1, 60.0, 2);
    DualPoint d = DualPoint::zero(2, 1);
    // a_i = ln2 lambda_i; choosing lambda_i >= g_i/sigma^2 makes zhat <= 0
    for (int i = 0; i < 2; ++i)
      d.lambda(i, 0) = inst.g(i, 0) / inst.noise_power;
    const Allocation a = dual_inner_solve(inst, d, opts);
    CHECK(a.e.maxCoeff() == 0.0);
  }

  SUBCASE("the returned corner satisfies projected stationarity of L") {
    std::mt19937_64 rng(29);
    const NetworkInstance inst = build_network(cfg, 2, 1, 60.0, 3);
    int checked = 0;
    for (int trial = 0; trial < 20; ++trial) {
      DualPoint d = DualPoint::zero(2, 1);
      for (int i = 0; i < 2; ++i) {
        // keep a_i > 0 so the inner problem is bounded
        d.lambda(i, 0) = (0.2 + 0.8 * unit(rng)) * inst.g(i, 0) / inst.noise_power;
        d.mu(i, 0) = 0.1 * unit(rng) * d.lambda(i, 0);
      }
      const Allocation a = dual_inner_solve(inst, d, opts);
      const double f0 = lagrangian(inst, a, d);
      // tau0 direction
      {
        const double h = 1e-7;
        Allocation ap = a, am = a;
        ap.tau0(0) = std::min(1.0, a.tau0(0) + h);
        am.tau0(0) = std::max(0.0, a.tau0(0) - h);
        const double up = lagrangian(inst, ap, d) - f0;
        const double dn = lagrangian(inst, am, d) - f0;
        CHECK(up <= 1e-6 * (1.0 + std::abs(f0)));
        CHECK(dn <= 1e-6 * (1.0 + std::abs(f0)));
      }
      // energy directions
      for (int i = 0; i < 2; ++i) {
        const double scale = inst.noise_power / inst.g(i, 0);
        const double h = 1e-7 * std::max(scale, a.e(i, 0));
        Allocation ap = a;
        ap.e(i, 0) += h;
        CHECK(lagrangian(inst, ap, d) - f0 <= 1e-6 * (1.0 + std::abs(f0)));
        if (a.e(i, 0) > h) {
          Allocation am = a;
          am.e(i, 0) -= h;
          CHECK(lagrangian(inst, am, d) - f0 <= 1e-6 * (1.0 + std::abs(f0)));
        }
      }
      ++checked;
    }
    CHECK(checked == 20);
  }
}

TEST_CASE("dual solver certifies the convex optimum") {
  PhysicalConfig cfg;
  SolverOptions opts;
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 10; ++trial) {
    PhysicalConfig c = cfg;
    if (trial % 2 == 0) c.s_th_db = -300;
    const int k = 2 + static_cast<int>(3.0 * unit(rng));
    const int t = 1 + static_cast<int>(2.0 * unit(rng));
    const double d = 30.0 + 70.0 * unit(rng);
    const NetworkInstance inst = build_network(c, k, t, d, 100 + trial);
    const Solution primal = solve_maxsum_sicd(inst, opts);
    const DualSolveResult dual = solve_maxsum_sicd_dual(inst, opts);
    REQUIRE(primal.status == SolveStatus::Optimal);
    const double rel = std::abs(*primal.objective - *dual.solution.objective) /
                       std::max(1.0, std::abs(*primal.objective));
    CHECK(rel <= 1e-4);
    CHECK(dual.gap <= 1e-4);
    // complementary slackness of the final prices against the recovered primal
    double worst = 0.0;
    for (int i = 0; i < k; ++i) {
      double slack = 0.0;
      for (int n = 0; n < t; ++n) {
        slack += inst.gamma(i, n) * dual.solution.alloc.tau0(n) -
                 dual.solution.alloc.e(i, n);
        worst = std::max(worst, std::abs(dual.dual.lambda(i, n) * slack));
      }
    }
    CHECK(worst <= 1e-3 * std::max(1.0, *primal.objective));
  }
}

TEST_CASE("Eq-9 style consistency at the converged duals") {
  PhysicalConfig cfg;
  SolverOptions opts;
  const NetworkInstance inst = build_network(cfg, 3, 2, 60.0, 17);
  const DualSolveResult dual = solve_maxsum_sicd_dual(inst, opts);
  const Allocation inner = dual_inner_solve(inst, dual.dual, opts);
  for (int n = 0; n < inst.num_slots; ++n) {
    const auto [a, b] = dual_coefficients(inst, dual.dual, n);
    const double zstar = bisect_root(dual_rate_balance, b, opts);
    double s = 0.0;
    for (int i = 0; i < inst.num_users; ++i) s += inst.g(i, n) * inner.e(i, n);
    const double quotient =
        zstar > 0.0 ? 1.0 - s / (zstar * inst.noise_power) : 1.0;
    const double tau_eq9 = std::min(std::max(quotient, 0.0), 1.0);
    CHECK(std::abs(tau_eq9 - inner.tau0(n)) <= 1e-6);
  }
}
