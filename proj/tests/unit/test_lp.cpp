#include <doctest.h>

#include <random>
#include <stdexcept>

#include "riskmdp/lp.hpp"

using namespace riskmdp::lp;

TEST_CASE("small textbook program") {
  // max 3x + 5y  s.t. x <= 4, 2y <= 12, 3x + 2y <= 18  ->  (2, 6), 36
  LinearProgram p(Sense::Maximize);
  const auto x = p.add_variable(3.0);
  const auto y = p.add_variable(5.0);
  const auto r0 = p.add_constraint(Relation::LessEqual, 4.0);
  const auto r1 = p.add_constraint(Relation::LessEqual, 12.0);
  const auto r2 = p.add_constraint(Relation::LessEqual, 18.0);
  p.add_coefficient(r0, x, 1.0);
  p.add_coefficient(r1, y, 2.0);
  p.add_coefficient(r2, x, 3.0);
  p.add_coefficient(r2, y, 2.0);
  const LpSolution s = solve(p);
  REQUIRE(s.status == Status::Optimal);
  CHECK(s.objective == doctest::Approx(36.0));
  CHECK(s.primal[x] == doctest::Approx(2.0));
  CHECK(s.primal[y] == doctest::Approx(6.0));
  // Shadow prices (0, 3/2, 1).
  CHECK(s.duals[r0] == doctest::Approx(0.0));
  CHECK(s.duals[r1] == doctest::Approx(1.5));
  CHECK(s.duals[r2] == doctest::Approx(1.0));
  CHECK(s.duality_gap <= 1e-9);
}

TEST_CASE("free variables, equalities and upper bounds") {
  // min x - y  s.t. x + y = 1, x free, 0 <= y <= 3  ->  x = -2, y = 3
  LinearProgram p;
  const auto x = p.add_free_variable(1.0);
  const auto y = p.add_variable(-1.0, 0.0, 3.0);
  const auto r = p.add_constraint(Relation::Equal, 1.0);
  p.add_coefficient(r, x, 1.0);
  p.add_coefficient(r, y, 1.0);
  const LpSolution s = solve(p);
  REQUIRE(s.status == Status::Optimal);
  CHECK(s.primal[x] == doctest::Approx(-2.0));
  CHECK(s.primal[y] == doctest::Approx(3.0));
  CHECK(s.objective == doctest::Approx(-5.0));
}

TEST_CASE("infeasible and unbounded programs") {
  LinearProgram inf;
  const auto x = inf.add_variable(1.0);
  const auto a = inf.add_constraint(Relation::GreaterEqual, 2.0);
  const auto b = inf.add_constraint(Relation::LessEqual, 1.0);
  inf.add_coefficient(a, x, 1.0);
  inf.add_coefficient(b, x, 1.0);
  CHECK(solve(inf).status == Status::Infeasible);

  LinearProgram unb(Sense::Maximize);
  const auto y = unb.add_variable(1.0);
  const auto r = unb.add_constraint(Relation::GreaterEqual, 1.0);
  unb.add_coefficient(r, y, 1.0);
  CHECK(solve(unb).status == Status::Unbounded);
}

TEST_CASE("duplicate triplets are summed") {
  LinearProgram p(Sense::Maximize);
  const auto x = p.add_variable(1.0);
  const auto r = p.add_constraint(Relation::LessEqual, 4.0);
  p.add_coefficient(r, x, 1.0);
  p.add_coefficient(r, x, 1.0);
  CHECK(p.canonical_triplets().size() == 1);
  CHECK(solve(p).objective == doctest::Approx(2.0));
}

TEST_CASE("random feasible programs carry a duality certificate") {
  // min c.x, A x >= b, x >= 0 with c > 0; the dual is max b.y, A^T y <= c, y >= 0.
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t m = 3 + trial % 6, n = 4 + trial % 5;
    std::vector<std::vector<double>> a(m, std::vector<double>(n));
    std::vector<double> c(n), b(m), x0(n);
    for (auto& v : x0) v = unit(rng);
    for (auto& v : c) v = 0.1 + unit(rng);
    LinearProgram p;
    for (std::size_t j = 0; j < n; ++j) p.add_variable(c[j]);
    for (std::size_t i = 0; i < m; ++i) {
      double ax = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        a[i][j] = (trial % 3 == 0 && j % 2 == 0) ? 0.0 : 2.0 * unit(rng) - 0.5;
        ax += a[i][j] * x0[j];
      }
      b[i] = ax - unit(rng);
      p.add_constraint(Relation::GreaterEqual, b[i]);
      for (std::size_t j = 0; j < n; ++j) p.add_coefficient(i, j, a[i][j]);
    }
    const LpSolution s = solve(p);
    REQUIRE(s.status == Status::Optimal);
    double cx = 0.0, by = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      CHECK(s.primal[j] >= -1e-9);
      cx += c[j] * s.primal[j];
      double aty = 0.0;
      for (std::size_t i = 0; i < m; ++i) aty += a[i][j] * s.duals[i];
      CHECK(aty <= c[j] + 1e-8);
    }
    for (std::size_t i = 0; i < m; ++i) {
      double ax = 0.0;
      for (std::size_t j = 0; j < n; ++j) ax += a[i][j] * s.primal[j];
      CHECK(ax >= b[i] - 1e-8);
      CHECK(s.duals[i] >= -1e-9);
      by += b[i] * s.duals[i];
    }
    CHECK(cx == doctest::Approx(by).epsilon(1e-9));

    const LpSolution via = solve_via_dual(p);
    REQUIRE(via.status == Status::Optimal);
    CHECK(via.objective == doctest::Approx(s.objective).epsilon(1e-9));
  }
}

TEST_CASE("dualize is an involution up to optimum") {
  LinearProgram p;
  const auto x = p.add_variable(2.0);
  const auto y = p.add_free_variable(1.0);
  const auto r0 = p.add_constraint(Relation::GreaterEqual, 1.0);
  const auto r1 = p.add_constraint(Relation::Equal, 0.5);
  p.add_coefficient(r0, x, 1.0);
  p.add_coefficient(r0, y, 1.0);
  p.add_coefficient(r1, y, 1.0);
  const LinearProgram d = dualize(p);
  CHECK(d.sense() == Sense::Maximize);
  CHECK(d.num_variables() == p.num_constraints());
  CHECK(d.num_constraints() == p.num_variables());
  const double po = solve(p).objective;
  CHECK(solve(d).objective == doctest::Approx(po));
  CHECK(solve(dualize(d)).objective == doctest::Approx(po));

  LinearProgram boxed;
  boxed.add_variable(1.0, 0.0, 1.0);
  CHECK_THROWS_AS(dualize(boxed), std::invalid_argument);
}

TEST_CASE("degenerate program terminates deterministically") {
  // Many redundant constraints through the optimal vertex.
  LinearProgram p(Sense::Maximize);
  const auto x = p.add_variable(1.0);
  const auto y = p.add_variable(1.0);
  for (int k = 0; k < 60; ++k) {
    const double t = k / 59.0;
    const auto r = p.add_constraint(Relation::LessEqual, 1.0);
    p.add_coefficient(r, x, t);
    p.add_coefficient(r, y, 1.0 - t);
  }
  const LpSolution a = solve(p), b = solve(p);
  REQUIRE(a.status == Status::Optimal);
  CHECK(a.objective == doctest::Approx(2.0));
  CHECK(a.iterations == b.iterations);
  CHECK(a.primal == b.primal);
}
