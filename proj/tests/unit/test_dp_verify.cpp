#include <doctest.h>

#include <cmath>
#include <numbers>

#include "corpus.hpp"
#include "riskmdp/dp_verify.hpp"
#include "riskmdp/errors.hpp"
#include "riskmdp/game.hpp"
#include "riskmdp/generators.hpp"
#include "riskmdp/spectral.hpp"

using namespace riskmdp;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> xs) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index k = 0;
  for (double x : xs) v(k++) = x;
  return v;
}

double objective(double rho, double d, double q) {
  const double a = q > 0 ? q * std::log(q / rho) : 0.0;
  const double b = q < 1 ? (1 - q) * std::log((1 - q) / (1 - rho)) : 0.0;
  return 1.0 - a - b + (q - 1.0) * d;
}

}  // namespace

TEST_CASE("build_partition") {
  const Partition two = build_partition(vec({0.0, 0.7768}));
  CHECK(two.levels.size() == 2);
  CHECK(build_partition(vec({0.3, 0.3, 0.3})).levels.size() == 1);
  const Partition close = build_partition(vec({0.1, 0.1 + 5e-7, 0.9}), 1e-6);
  REQUIRE(close.levels.size() == 2);
  CHECK(close.levels[0] == std::vector<std::size_t>{0, 1});
  CHECK(close.level_of[2] == 1);
  CHECK_THROWS_AS(build_partition(vec({0.0, 8e-7, 1.6e-6}), 1e-6), VerificationError);
}

TEST_CASE("hat_kernel") {
  const MdpModel ex = example_model(0.8);
  const HatKernel one = hat_kernel(ex, build_partition(vec({0.0, 0.0})));
  CHECK(one.kernels[0].isApprox(ex.kernel(0)));
  const HatKernel two = hat_kernel(ex, build_partition(vec({0.0, 0.7768})));
  CHECK(two.kernels[0](1, 1) == doctest::Approx(0.8));
  CHECK(two.kernels[0](1, 0) == 0.0);
  CHECK(two.kernels[0](0, 0) == 1.0);

  const MdpModel absorbing({"a", "b", "c"}, {"u"}, {Eigen::MatrixXd::Identity(3, 3)}, Eigen::MatrixXd::Zero(3, 1));
  const HatKernel diag = hat_kernel(absorbing, build_partition(vec({0.0, 1.0, 2.0})));
  CHECK(diag.kernels[0].isApprox(Eigen::MatrixXd::Identity(3, 3)));
}

TEST_CASE("check_dp on the two-state example") {
  const double rho = 0.8;
  const MdpModel ex = example_model(rho);
  const Eigen::VectorXd phi = vec({0.0, 1.0 + std::log(rho)});
  for (double c1 : {0.0, -3.0, 2.5}) {
    const DpResiduals r = check_dp(ex, phi, vec({c1, 0.7}));
    CHECK(r.max_dp1() <= 1e-9);
    CHECK(r.max_dp2() <= 1e-9);
  }
  const DpResiduals bad = check_dp(ex, vec({0.0, 1.1 + std::log(rho)}), vec({0.0, 0.0}));
  CHECK(std::max(bad.max_dp1(), bad.max_dp2()) >= 0.09);
}

TEST_CASE("check_dp on a one-state model") {
  Eigen::MatrixXd c(1, 2);
  c << 0.4, 0.25;
  const MdpModel m({"s"}, {"a", "b"}, {Eigen::MatrixXd::Ones(1, 1), Eigen::MatrixXd::Ones(1, 1)}, c);
  CHECK(check_dp(m, vec({0.25}), vec({0.0})).max_dp2() <= 1e-12);
  CHECK(check_dp(m, vec({0.4}), vec({0.0})).max_dp2() == doctest::Approx(0.15));
}

TEST_CASE("twisted form") {
  const double rho = 0.8;
  const MdpModel ex = example_model(rho);
  const DpCertificate cert = certify(ex, vec({0.0, 1.0 + std::log(rho)}), vec({0.0, 0.0}));
  CHECK(cert.lambda(1) == doctest::Approx(rho * std::numbers::e));
  CHECK(cert.twisted.max_residual() <= 1e-9);
  CHECK(cert.passes(1e-6));

  const MdpModel base = riskmdp::testing::corpus()[4].model;
  const MdpModel zero(base.state_labels(), base.action_labels(), {base.kernel(0), base.kernel(1)},
                      Eigen::MatrixXd::Zero(3, 2));
  const DpCertificate z = certify(zero, Eigen::VectorXd::Zero(3), Eigen::VectorXd::Zero(3));
  CHECK(z.lambda.isApprox(Eigen::VectorXd::Ones(3)));
  CHECK(z.twisted.star2.maxCoeff() <= 1e-12);

  // Change of variables: DP*2 is the exp image of the signed DP-2 residual.
  for (const auto& entry : riskmdp::testing::corpus()) {
    const GameSolution s = solve_game(entry.model, 4);
    const DpCertificate c = certify(entry.model, s.value, s.potentials);
    for (Eigen::Index i = 0; i < c.dp.dp2_signed.size(); ++i) {
      CHECK(std::abs(c.twisted.star2(i) - std::abs(std::expm1(c.dp.dp2_signed(i)))) <= 1e-8);
    }
    CHECK(c.twisted.weight_error <= 1e-12);
  }
}

TEST_CASE("analytic example") {
  const AnalyticExample sup = analytic_example(0.8);
  CHECK(sup.phi_star(0) == 0.0);
  CHECK(sup.phi_star(1) == doctest::Approx(1.0 + std::log(0.8)).epsilon(1e-12));
  CHECK(sup.q22 == 1.0);
  CHECK_FALSE(sup.interior);

  const double rho = std::exp(-2.0);
  const AnalyticExample sub = analytic_example(rho);
  CHECK(sub.phi_star(1) == 0.0);
  CHECK(sub.interior);
  CHECK(sub.q22 > 0.0);
  CHECK(sub.q22 < 1.0);

  // Dense scan of the concave objective with an independently derived d.
  const double d = std::log(std::numbers::e * (1 - rho) / (1 - std::numbers::e * rho));
  double best_q = 0.0, best = -1e300;
  for (int k = 1; k < 1'000'000; ++k) {
    const double q = k * 1e-6;
    const double f = objective(rho, d, q);
    if (f > best) {
      best = f;
      best_q = q;
    }
  }
  CHECK(std::abs(best_q - sub.q22) <= 1e-5);
  CHECK(std::abs(best) <= 1e-9);
  CHECK(std::abs(example_objective(rho, d, 0.3) - objective(rho, d, 0.3)) <= 1e-14);

  CHECK_THROWS_AS(analytic_example(1.5), ModelError);
  CHECK_THROWS_AS(analytic_example(0.0), ModelError);
  CHECK_THROWS_AS(analytic_example(std::exp(-1.0)), ModelError);
}

TEST_CASE("analytic value matches the growth-rate oracle") {
  for (double rho : {0.5, 0.8, std::exp(-2.0), 0.95}) {
    const AnalyticExample ex = analytic_example(rho);
    const GrowthRates g = growth_rate(example_model(rho), StationaryPolicy::uniform(2, 1));
    CHECK(std::abs(ex.lambda_bar - g.lambda_max) <= 1e-6);
  }
}

TEST_CASE("poisson insolvability") {
  for (double rho : {0.8, 0.5}) {
    const PoissonScan scan = poisson_insolvability(rho);
    CHECK(scan.pairs == 401u * 401u);
    CHECK(scan.satisfying == 0);
    CHECK(scan.analytic_reduction);
    CHECK(scan.insolvable());
  }
  CHECK_THROWS_AS(poisson_insolvability(0.2), ModelError);
}
