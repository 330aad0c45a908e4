#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "wpcn/throughput.hpp"

using namespace wpcn;

namespace {

// Hand-built instance with explicit gains; gamma/h set so the consistency
// fields are coherent but tests drive e directly.
NetworkInstance make_instance(const Eigen::MatrixXd& g, double noise,
                              double s_th = 0.0) {
  NetworkInstance inst;
  inst.num_users = static_cast<int>(g.rows());
  inst.num_slots = static_cast<int>(g.cols());
  inst.g = g;
  inst.noise_power = noise;
  inst.s_th = Eigen::VectorXd::Constant(inst.num_users, s_th);
  inst.eta = 0.49;
  inst.p_b = 3.0;
  inst.h = Eigen::MatrixXd::Constant(g.rows(), g.cols(), 1e-5);
  inst.gamma = inst.eta * inst.p_b * inst.h;
  inst.d_er_ap = 0.0;
  inst.positions.resize(inst.num_users);
  return inst;
}

double unit(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Random instance plus a causality-feasible allocation.
std::pair<NetworkInstance, Allocation> random_case(std::mt19937_64& rng, int k,
                                                   int t) {
  Eigen::MatrixXd g(k, t);
  for (int i = 0; i < k; ++i)
    for (int n = 0; n < t; ++n) g(i, n) = 1e-7 * std::pow(10.0, 2.0 * unit(rng));
  NetworkInstance inst = make_instance(g, 3.1623e-13);
  Allocation a = Allocation::zero(k, t);
  for (int n = 0; n < t; ++n) a.tau0(n) = 0.1 + 0.8 * unit(rng);
  for (int i = 0; i < k; ++i) {
    double budget = 0.0;
    for (int n = 0; n < t; ++n) {
      budget += inst.gamma(i, n) * a.tau0(n);
      a.e(i, n) = unit(rng) * std::max(0.0, budget - a.e.row(i).head(n).sum());
    }
  }
  return {inst, a};
}

} // namespace

TEST_CASE("LCD SINR matches the closed form") {
  SUBCASE("single user has no interference") {
    const auto inst = make_instance(Eigen::MatrixXd::Constant(1, 1, 1e-5), 1e-10);
    Allocation a = Allocation::zero(1, 1);
    a.tau0(0) = 0.25;
    a.e(0, 0) = 2e-4;
    const Eigen::MatrixXd x = sinr_lcd(inst, a);
    CHECK(x(0, 0) == doctest::Approx(1e-5 * 2e-4 / (1e-10 * 0.75)).epsilon(1e-12));
  }
  SUBCASE("zero energy gives zero SINR") {
    const auto inst = make_instance(Eigen::MatrixXd::Constant(2, 1, 1e-5), 1e-10);
    Allocation a = Allocation::zero(2, 1);
    a.tau0(0) = 0.5;
    a.e(1, 0) = 1e-3;
    const Eigen::MatrixXd x = sinr_lcd(inst, a);
    CHECK(x(0, 0) == 0.0);
    CHECK(x(1, 0) > 0.0);
  }
  SUBCASE("worked two-user example") {
    const auto inst = make_instance(Eigen::MatrixXd::Constant(2, 1, 1e-5), 3.162e-10);
    Allocation a = Allocation::zero(2, 1);
    a.tau0(0) = 0.5;
    a.e(0, 0) = 1e-3;
    a.e(1, 0) = 1e-3;
    const double expect = 1e-8 / (3.162e-10 * 0.5 + 1e-8);
    const Eigen::MatrixXd x = sinr_lcd(inst, a);
    CHECK(x(0, 0) == doctest::Approx(expect).epsilon(1e-12));
    CHECK(x(1, 0) == doctest::Approx(expect).epsilon(1e-12));
    CHECK(x(0, 0) == doctest::Approx(0.98444).epsilon(1e-4));
  }
  SUBCASE("shape and transmit-time errors") {
    const auto inst = make_instance(Eigen::MatrixXd::Constant(2, 1, 1e-5), 1e-10);
    Allocation bad = Allocation::zero(3, 1);
    CHECK_THROWS_AS(sinr_lcd(inst, bad), std::invalid_argument);
    Allocation dead = Allocation::zero(2, 1);
    dead.tau0(0) = 1.0;
    dead.e(0, 0) = 1e-3;
    CHECK_THROWS_AS(sinr_lcd(inst, dead), std::invalid_argument);
  }
}

TEST_CASE("SIC SINR removes decoded users from the interference") {
  const auto inst = make_instance(Eigen::MatrixXd::Constant(2, 1, 1e-5), 3.162e-10);
  Allocation a = Allocation::zero(2, 1);
  a.tau0(0) = 0.5;
  a.e(0, 0) = 1e-3;
  a.e(1, 0) = 1e-3;
  const std::vector<std::vector<int>> order = {{0, 1}};
  const Eigen::MatrixXd x = sinr_sicd(inst, a, order);
  CHECK(x(0, 0) == doctest::Approx(1e-8 / (3.162e-10 * 0.5 + 1e-8)).epsilon(1e-12));
  CHECK(x(1, 0) == doctest::Approx(1e-8 / (3.162e-10 * 0.5)).epsilon(1e-12));
  CHECK(x(1, 0) == doctest::Approx(63.25).epsilon(2e-3));

  SUBCASE("K=1 equals LCD") {
    const auto one = make_instance(Eigen::MatrixXd::Constant(1, 1, 1e-5), 1e-10);
    Allocation b = Allocation::zero(1, 1);
    b.tau0(0) = 0.3;
    b.e(0, 0) = 5e-4;
    CHECK(sinr_sicd(one, b, {{0}})(0, 0) ==
          doctest::Approx(sinr_lcd(one, b)(0, 0)).epsilon(1e-14));
  }
  SUBCASE("invalid permutations are rejected") {
    CHECK_THROWS_AS(sinr_sicd(inst, a, {{0, 0}}), std::invalid_argument);
    CHECK_THROWS_AS(sinr_sicd(inst, a, {{0}}), std::invalid_argument);
    CHECK_THROWS_AS(sinr_sicd(inst, a, {}), std::invalid_argument);
  }
}

TEST_CASE("SIC SINR dominates LCD elementwise") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    const auto [inst, a] = random_case(rng, 4, 2);
    const Eigen::MatrixXd lcd = sinr_lcd(inst, a);
    const Eigen::MatrixXd sic = sinr_sicd(inst, a, decoding_orders(inst));
    CHECK(((sic - lcd).array() >= -1e-15).all());
  }
}

TEST_CASE("user rate") {
  CHECK(user_rate(1.0, 5.0) == 0.0);
  CHECK(user_rate(0.3, 0.0) == 0.0);
  CHECK(user_rate(0.5, 3.0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK_THROWS_AS(user_rate(-0.1, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(user_rate(0.5, -1.0), std::invalid_argument);
  // nonincreasing in tau0, nondecreasing in x
  std::mt19937_64 rng(3);
  for (int i = 0; i < 200; ++i) {
    const double t1 = unit(rng), t2 = unit(rng);
    const double x1 = 10.0 * unit(rng), x2 = 10.0 * unit(rng);
    const double tl = std::min(t1, t2), th = std::max(t1, t2);
    const double xl = std::min(x1, x2), xh = std::max(x1, x2);
    CHECK(user_rate(th, xl) <= user_rate(tl, xl) + 1e-15);
    CHECK(user_rate(tl, xl) <= user_rate(tl, xh) + 1e-15);
  }
}

TEST_CASE("closed-form SIC sum rate is order independent and exact") {
  std::mt19937_64 rng(17);
  int checked = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int k = 1 + static_cast<int>(unit(rng) * 4.999);
    const int t = 1 + static_cast<int>(unit(rng) * 2.999);
    const auto [inst, a] = random_case(rng, k, t);
    std::vector<int> base(k);
    std::iota(base.begin(), base.end(), 0);
    for (int perm = 0; perm < 6; ++perm) {
      std::shuffle(base.begin(), base.end(), rng);
      const std::vector<std::vector<int>> orders(t, base);
      const Eigen::MatrixXd x = sinr_sicd(inst, a, orders);
      for (int n = 0; n < t; ++n) {
        double via_users = 0.0;
        for (int i = 0; i < k; ++i) via_users += user_rate(a.tau0(n), x(i, n));
        const double closed = sum_rate_sicd_closed(inst, a, n);
        CHECK(via_users ==
              doctest::Approx(closed).epsilon(1e-10).scale(std::max(1.0, closed)));
        ++checked;
      }
    }
  }
  CHECK(checked > 1000);

  // all-zero energy sums to zero
  const auto inst = make_instance(Eigen::MatrixXd::Constant(2, 1, 1e-5), 1e-10);
  Allocation z = Allocation::zero(2, 1);
  z.tau0(0) = 0.4;
  CHECK(sum_rate_sicd_closed(inst, z, 0) == 0.0);
}

TEST_CASE("SINRs are invariant under joint energy and noise scaling") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 50; ++trial) {
    auto [inst, a] = random_case(rng, 3, 2);
    const Eigen::MatrixXd x1 = sinr_lcd(inst, a);
    const Eigen::MatrixXd s1 = sinr_sicd(inst, a, decoding_orders(inst));
    NetworkInstance scaled = inst;
    scaled.noise_power *= 2.0;
    Allocation a2 = a;
    a2.e *= 2.0;
    const Eigen::MatrixXd x2 = sinr_lcd(scaled, a2);
    const Eigen::MatrixXd s2 = sinr_sicd(scaled, a2, decoding_orders(scaled));
    CHECK((x1 - x2).cwiseAbs().maxCoeff() <= 1e-12 * (1.0 + x1.maxCoeff()));
    CHECK((s1 - s2).cwiseAbs().maxCoeff() <= 1e-12 * (1.0 + s1.maxCoeff()));
  }
}

TEST_CASE("decoding order sorts by gain, ties by index") {
  Eigen::MatrixXd g(3, 1);
  g << 1e-5, 3e-5, 2e-5;
  const auto inst = make_instance(g, 1e-10);
  const auto ord = decoding_order(inst, 0);
  CHECK(ord == std::vector<int>{1, 2, 0});

  const auto tied = make_instance(Eigen::MatrixXd::Constant(3, 1, 1e-5), 1e-10);
  CHECK(decoding_order(tied, 0) == std::vector<int>{0, 1, 2});

  Eigen::MatrixXd desc(3, 1);
  desc << 3e-5, 2e-5, 1e-5;
  CHECK(decoding_order(make_instance(desc, 1e-10), 0) == std::vector<int>{0, 1, 2});
}

TEST_CASE("jain index") {
  CHECK(jain_index(Eigen::VectorXd::Constant(7, 3.5)) == doctest::Approx(1.0));
  Eigen::VectorXd onehot = Eigen::VectorXd::Zero(5);
  onehot(2) = 2.0;
  CHECK(jain_index(onehot) == doctest::Approx(0.2));
  Eigen::VectorXd v(3);
  v << 1, 2, 3;
  CHECK(jain_index(v) == doctest::Approx(36.0 / 42.0).epsilon(1e-12));
  CHECK(jain_index(5.0 * v) == doctest::Approx(jain_index(v)).epsilon(1e-12));
  CHECK_THROWS_AS(jain_index(Eigen::VectorXd::Zero(4)), std::invalid_argument);
  Eigen::VectorXd neg(2);
  neg << 1.0, -0.5;
  CHECK_THROWS_AS(jain_index(neg), std::invalid_argument);
}
