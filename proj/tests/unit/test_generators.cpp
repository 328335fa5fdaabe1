#include <doctest.h>

#include "corpus.hpp"
#include "riskmdp/errors.hpp"
#include "riskmdp/generators.hpp"

using namespace riskmdp;

TEST_CASE("random models are reproducible and valid") {
  RandomModelSpec spec;
  spec.states = 4;
  spec.actions = 3;
  const MdpModel a = random_model(spec, 99), b = random_model(spec, 99), c = random_model(spec, 100);
  CHECK(model_to_json(a) == model_to_json(b));
  CHECK(model_to_json(a) != model_to_json(c));
  CHECK(a.state_label(3) == "s3");
  CHECK(a.action_label(2) == "a2");
  for (std::size_t i = 0; i < 4; ++i) {
    const auto& sup = a.union_support(i);
    CHECK(sup.size() >= 2);
    CHECK(sup.size() <= 3);
    for (std::size_t u = 0; u < 3; ++u) {
      for (std::size_t j : sup) CHECK(a.p(u, i, j) >= 0.05 - 1e-12);
    }
  }
  CHECK(a.costs().minCoeff() >= 0.0);
  CHECK(a.costs().maxCoeff() <= 1.0);
}

TEST_CASE("corpus shape") {
  const auto corpus = riskmdp::testing::corpus();
  REQUIRE(corpus.size() == 10);
  for (const auto& e : corpus) {
    CHECK(e.model.num_states() >= 2);
    CHECK(e.model.num_states() <= 4);
    CHECK(e.model.num_actions() >= 2);
    CHECK(e.model.num_actions() <= 3);
  }
}

TEST_CASE("invalid specs and the example model") {
  RandomModelSpec spec;
  spec.min_prob = 0.5;
  CHECK_THROWS_AS(random_model(spec, 1), ModelError);
  CHECK_THROWS_AS(example_model(1.0), ModelError);
  const MdpModel ex = example_model(0.3);
  CHECK(ex.p(0, 1, 1) == doctest::Approx(0.3));
  CHECK(ex.cost(1, 0) == 1.0);
}
