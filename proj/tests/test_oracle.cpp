#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "wpcn/model.hpp"
#include "wpcn/oracle.hpp"

using namespace wpcn;

TEST_CASE("grid search matches a nested 1-D scan for a single user") {
  PhysicalConfig cfg;
  cfg.s_th_db = -300;
  const NetworkInstance inst = build_network(cfg, 1, 1, 40.0, 2);

  GridSpec spec;
  spec.objective = Objective::MaxSum;
  spec.scheme = Decoder::Lcd;
  const Solution sol = grid_search(inst, spec);
  REQUIRE(sol.status == SolveStatus::Optimal);

  // With one user more energy is always better, so only tau0 matters.
  double best = -1.0;
  const double w = inst.g(0, 0) * inst.gamma(0, 0) / inst.noise_power;
  for (double tau = 0.0; tau <= 1.0; tau += 1e-5) {
    const double u = 1.0 - tau;
    if (u <= 0.0) continue;
    const double v = u * std::log2(1.0 + w * tau / u);
    best = std::max(best, v);
  }
  CHECK(*sol.objective == doctest::Approx(best).epsilon(2e-4));
}

TEST_CASE("grid search reports infeasible lattices") {
  PhysicalConfig cfg;
  cfg.s_th_db = 40.0; // 10^4 linear, unreachable under LCD with 2 users
  const NetworkInstance inst = build_network(cfg, 2, 1, 40.0, 2);
  GridSpec spec;
  spec.objective = Objective::MaxSum;
  spec.scheme = Decoder::Lcd;
  CHECK(grid_search(inst, spec).status == SolveStatus::Infeasible);
}

TEST_CASE("grid refinement never loses more than a coarse cell") {
  PhysicalConfig cfg;
  cfg.s_th_db = -300;
  const NetworkInstance inst = build_network(cfg, 2, 1, 60.0, 4);
  GridSpec coarse;
  coarse.tau0_step = coarse.e_step = 1e-2;
  coarse.objective = Objective::MaxSum;
  coarse.scheme = Decoder::Sicd;
  GridSpec fine = coarse;
  fine.tau0_step = fine.e_step = 1e-3;
  const Solution a = grid_search(inst, coarse);
  const Solution b = grid_search(inst, fine);
  CHECK(*b.objective >= *a.objective - 1e-12);
}

TEST_CASE("grid guard trips on oversized lattices") {
  PhysicalConfig cfg;
  const NetworkInstance inst = build_network(cfg, 4, 3, 40.0, 2);
  GridSpec spec; // 3 + 12 axes at 1e-2 coarse resolution
  CHECK_THROWS_AS(grid_search(inst, spec), std::invalid_argument);
}

TEST_CASE("central differences are exact on quadratics") {
  Eigen::MatrixXd q(3, 3);
  q << 2, 0.3, 0, 0.3, 1, 0.1, 0, 0.1, 4;
  const auto fn = [&](const Eigen::VectorXd& x) {
    return 0.5 * x.dot(q * x) + x.sum();
  };
  Eigen::VectorXd x(3);
  x << 0.2, -1.0, 3.0;
  const Eigen::VectorXd g = finite_diff_gradient(fn, x, 1e-5);
  const Eigen::VectorXd expect = q * x + Eigen::VectorXd::Ones(3);
  CHECK((g - expect).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("slot sum-rate tau0 derivative matches the analytic form") {
  // F(tau, s) = (1-tau) log2(1 + s/(sigma (1-tau))) checked against central
  // differences at random interior points.
  std::mt19937_64 rng(13);
  auto unit = [&] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  const double sigma = 3.1623e-13;
  for (int trial = 0; trial < 100; ++trial) {
    const double s = sigma * (0.1 + 100.0 * unit(rng));
    const double tau = 0.05 + 0.9 * unit(rng);
    const auto fn = [&](const Eigen::VectorXd& x) {
      const double u = 1.0 - x(0);
      return u * std::log2(1.0 + s / (sigma * u));
    };
    const double z = s / (sigma * (1.0 - tau));
    const double analytic =
        -(std::log1p(z) - z / (1.0 + z)) / std::log(2.0);
    const Eigen::VectorXd fd =
        finite_diff_gradient(fn, Eigen::VectorXd::Constant(1, tau), 1e-6);
    CHECK(analytic == doctest::Approx(fd(0)).epsilon(1e-5));
  }
}

TEST_CASE("concavity probe") {
  SUBCASE("linear functions have zero violation") {
    const auto lin = [](const Eigen::VectorXd& x) { return 3.0 * x(0) - x(1); };
    const auto sampler = [](std::mt19937_64& rng) {
      Eigen::VectorXd v(2);
      v(0) = static_cast<double>(rng() >> 11) * 0x1.0p-53;
      v(1) = static_cast<double>(rng() >> 11) * 0x1.0p-53;
      return v;
    };
    const ConcavityReport rep = concavity_probe(lin, sampler, 1000, 1);
    CHECK(rep.max_violation <= 1e-12);
  }
  SUBCASE("per-slot SIC sum rate is concave in (tau0, E)") {
    const double sigma = 3.1623e-13;
    Eigen::VectorXd g(3);
    g << 1e-6, 5e-7, 2e-7;
    const auto fn = [&](const Eigen::VectorXd& x) {
      const double u = 1.0 - x(0);
      double s = 0.0;
      for (int i = 0; i < 3; ++i) s += g(i) * x(i + 1);
      if (u <= 0.0) return 0.0;
      return u * std::log2(1.0 + s / (sigma * u));
    };
    const auto sampler = [&](std::mt19937_64& rng) {
      auto unit = [&] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
      Eigen::VectorXd v(4);
      v(0) = 0.05 + 0.9 * unit(rng);
      for (int i = 1; i < 4; ++i) v(i) = 1e-5 * unit(rng);
      return v;
    };
    const ConcavityReport rep = concavity_probe(fn, sampler, 10000, 2, true);
    CHECK(rep.max_violation <= 1e-10);
    CHECK(rep.max_hessian_eig <= 1e-6);
  }
  SUBCASE("the rate-balance function is strictly increasing") {
    std::mt19937_64 rng(3);
    auto unit = [&] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
    const auto f = [](double z) { return std::log1p(z) - z / (1.0 + z); };
    for (int i = 0; i < 1000000; ++i) {
      const double a = 100.0 * unit(rng);
      const double b = a + 1e-9 + 100.0 * unit(rng);
      CHECK(f(b) > f(a));
    }
  }
}
