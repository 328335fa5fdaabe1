#include <doctest.h>

#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>

#include "corpus.hpp"
#include "riskmdp/errors.hpp"
#include "riskmdp/generators.hpp"
#include "riskmdp/grid.hpp"
#include "riskmdp/spectral.hpp"

using namespace riskmdp;

namespace {

MdpModel uncontrolled(const Eigen::MatrixXd& p, const Eigen::VectorXd& c) {
  std::vector<std::string> states;
  for (Eigen::Index i = 0; i < p.rows(); ++i) states.push_back("s" + std::to_string(i));
  return MdpModel(states, {"a"}, {p}, Eigen::MatrixXd(c));
}

double log_perron_root(const Eigen::MatrixXd& p, const Eigen::VectorXd& c) {
  const Eigen::MatrixXd m = c.array().exp().matrix().asDiagonal() * p;
  const Eigen::VectorXcd ev = Eigen::EigenSolver<Eigen::MatrixXd>(m).eigenvalues();
  return std::log(ev.cwiseAbs().maxCoeff());
}

}  // namespace

TEST_CASE("kl_divergence") {
  const std::vector<double> p{0.5, 0.5};
  CHECK(kl_divergence(p, p) == 0.0);
  CHECK(kl_divergence(std::vector<double>{1.0, 0.0}, p) == doctest::Approx(std::log(2.0)));
  CHECK(std::isinf(kl_divergence(p, std::vector<double>{1.0, 0.0})));

  std::mt19937_64 rng(3);
  std::exponential_distribution<double> e(1.0);
  for (int t = 0; t < 100; ++t) {
    std::vector<double> q(4), r(4);
    double sq = 0, sr = 0;
    for (int j = 0; j < 4; ++j) {
      sq += q[j] = e(rng);
      sr += r[j] = e(rng);
    }
    for (int j = 0; j < 4; ++j) {
      q[j] /= sq;
      r[j] /= sr;
    }
    CHECK(kl_divergence(q, r) > 0.0);
  }
}

TEST_CASE("tilde_cost") {
  const MdpModel m = example_model(0.8);
  const std::vector<double> p2{0.2, 0.8};
  CHECK(tilde_cost(m, 1, p2, 0).value() == doctest::Approx(1.0));
  CHECK(tilde_cost(m, 1, std::vector<double>{0.0, 1.0}, 0).value() == doctest::Approx(1.0 + std::log(0.8)));
  CHECK_THROWS_AS(tilde_cost(m, 0, std::vector<double>{0.5, 0.5}, 0), ModelError);

  Eigen::MatrixXd stay(2, 2), move(2, 2);
  stay << 1, 0, 0, 1;
  move << 0.5, 0.5, 0.5, 0.5;
  const MdpModel two({"x", "y"}, {"stay", "move"}, {stay, move}, Eigen::MatrixXd::Zero(2, 2));
  CHECK(tilde_cost(two, 0, std::vector<double>{0.5, 0.5}, 0).is_neg_inf());
  CHECK(tilde_cost(two, 0, std::vector<double>{0.5, 0.5}, 1).value() == doctest::Approx(0.0));
}

TEST_CASE("growth_rate basic cases") {
  const MdpModel zero = random_model({}, 5);
  MdpModel zc(zero.state_labels(), zero.action_labels(), {zero.kernel(0), zero.kernel(1)},
              Eigen::MatrixXd::Zero(3, 2));
  const GrowthRates g0 = growth_rate(zc, StationaryPolicy::uniform(3, 2));
  CHECK(g0.lambda.cwiseAbs().maxCoeff() <= 1e-10);

  const MdpModel one = uncontrolled(Eigen::MatrixXd::Ones(1, 1), Eigen::VectorXd::Constant(1, 0.37));
  CHECK(growth_rate(one, StationaryPolicy::uniform(1, 1)).lambda_max == doctest::Approx(0.37));

  const GrowthRates ex = growth_rate(example_model(0.8), StationaryPolicy::uniform(2, 1));
  CHECK(ex.lambda(0) == doctest::Approx(0.0).epsilon(1e-10));
  CHECK(std::abs(ex.lambda(1) - (1.0 + std::log(0.8))) <= 1e-8);
  CHECK(ex.converged);
}

TEST_CASE("growth_rate matches the Perron root and shifts with the cost") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> unit(0.05, 1.0);
  for (int t = 0; t < 20; ++t) {
    const Eigen::Index s = 2 + t % 3;
    Eigen::MatrixXd p(s, s);
    Eigen::VectorXd c(s);
    for (Eigen::Index i = 0; i < s; ++i) {
      for (Eigen::Index j = 0; j < s; ++j) p(i, j) = unit(rng);
      p.row(i) /= p.row(i).sum();
      c(i) = unit(rng);
    }
    const double lam = growth_rate(p, c).lambda_max;
    CHECK(std::abs(lam - log_perron_root(p, c)) <= 1e-8);
    const double shifted = growth_rate(p, (c.array() + 0.7).matrix()).lambda_max;
    CHECK(std::abs(shifted - lam - 0.7) <= 1e-8);
  }
}

TEST_CASE("period-2 chain converges") {
  Eigen::MatrixXd p(2, 2);
  p << 0, 1, 1, 0;
  Eigen::VectorXd c(2);
  c << 0.0, 1.0;
  const GrowthRates g = growth_rate(p, c);
  CHECK(g.converged);
  CHECK(g.lambda_max == doctest::Approx(0.5));
}

TEST_CASE("brute force") {
  const MdpModel ex = example_model(std::exp(-2.0));
  const BruteForceResult bf = brute_force_lambda_star(ex);
  CHECK(std::abs(bf.value) <= 1e-8);
  CHECK(bf.policies == 1);

  Eigen::MatrixXd k(2, 2);
  k << 0.3, 0.7, 0.6, 0.4;
  Eigen::MatrixXd c(2, 2);
  c << 0.5, 0.2, 0.9, 0.1;
  const MdpModel dom({"x", "y"}, {"a", "b"}, {k, k}, c);
  const BruteForceResult d = brute_force_lambda_star(dom);
  CHECK(d.argmin[0] == 1);
  CHECK(d.argmin[1] == 1);
  CHECK(d.policies == 4);

  RandomModelSpec big;
  big.states = 12;
  big.actions = 4;
  CHECK_THROWS_AS(brute_force_lambda_star(random_model(big, 1), {}, 1000), GuardError);
}

TEST_CASE("cesaro_limit") {
  CHECK(cesaro_limit(Eigen::MatrixXd::Identity(3, 3)).isApprox(Eigen::MatrixXd::Identity(3, 3)));
  Eigen::MatrixXd p(2, 2);
  const double a = 0.3, b = 0.2;
  p << 1 - a, a, b, 1 - b;
  const Eigen::MatrixXd q = cesaro_limit(p);
  for (int i = 0; i < 2; ++i) {
    CHECK(q(i, 0) == doctest::Approx(b / (a + b)));
    CHECK(q(i, 1) == doctest::Approx(a / (a + b)));
  }
  Eigen::MatrixXd e(2, 2);
  e << 1, 0, 0.2, 0.8;
  CHECK((cesaro_limit(e) - Eigen::MatrixXd((Eigen::MatrixXd(2, 2) << 1, 0, 1, 0).finished())).cwiseAbs().maxCoeff() <= 1e-12);

  for (const auto& entry : riskmdp::testing::corpus()) {
    const Eigen::MatrixXd k = entry.model.kernel(0);
    const Eigen::MatrixXd l = cesaro_limit(k);
    CHECK((l * l - l).cwiseAbs().maxCoeff() <= 1e-9);
    CHECK((k * l - l).cwiseAbs().maxCoeff() <= 1e-9);
    CHECK((l * k - l).cwiseAbs().maxCoeff() <= 1e-9);
    CHECK((l.rowwise().sum().array() - 1.0).abs().maxCoeff() <= 1e-9);
  }
}

TEST_CASE("game_payoff") {
  const MdpModel ex = example_model(0.8);
  const StationaryPolicy v = StationaryPolicy::uniform(2, 1);
  Eigen::MatrixXd q(2, 2);
  q << 1, 0, 0, 1;
  const PayoffVector pv = game_payoff(ex, KernelMatrix(ex, q), v);
  CHECK(pv.phi[1].value() == doctest::Approx(1.0 + std::log(0.8)));
  CHECK(pv.phi[0].value() == doctest::Approx(0.0));

  const MdpModel m = riskmdp::testing::corpus()[1].model;
  const PurePolicy pure(std::vector<std::size_t>(m.num_states(), 0));
  const StationaryPolicy y = pure.to_stationary(m.num_actions());
  const PolicyChain chain = apply_policy(m, y);
  const PayoffVector zero_kl = game_payoff(m, KernelMatrix(m, chain.kernel), y);
  const Eigen::VectorXd avg = cesaro_limit(chain.kernel) * chain.cost;
  for (std::size_t i = 0; i < m.num_states(); ++i) {
    CHECK(zero_kl.phi[i].value() == doctest::Approx(avg(static_cast<Eigen::Index>(i))));
  }
}

TEST_CASE("variational identity on two-state models") {
  for (const auto& entry : riskmdp::testing::corpus()) {
    const MdpModel& m = entry.model;
    if (m.num_states() != 2) continue;
    const GridSpec g(m, 8);
    for (std::size_t u = 0; u < m.num_actions(); ++u) {
      const StationaryPolicy v = PurePolicy(std::vector<std::size_t>(2, u)).to_stationary(m.num_actions());
      const double lam = growth_rate(m, v).lambda_max;
      double best = -1e300;
      for (std::size_t r0 = 0; r0 < g.num_rows(0); ++r0) {
        for (std::size_t r1 = 0; r1 < g.num_rows(1); ++r1) {
          Eigen::MatrixXd q(2, 2);
          q.row(0) = g.dense_row(0, r0).transpose();
          q.row(1) = g.dense_row(1, r1).transpose();
          const ExtendedReal phi = game_payoff(m, KernelMatrix(m, q), v).phi_max;
          if (phi.is_finite()) best = std::max(best, phi.value());
        }
      }
      CHECK(best <= lam + 1e-9);
      CHECK(lam - best <= 2e-2);
    }
  }
}
