#pragma once

#include <cstddef>
#include <cstdint>

#include "riskmdp/model.hpp"

namespace riskmdp {

struct RandomModelSpec {
  std::size_t states = 3;
  std::size_t actions = 2;
  std::size_t min_support = 2;
  std::size_t max_support = 3;
  double cost_lo = 0.0;
  double cost_hi = 1.0;
  double min_prob = 0.05;        ///< floor on every supported transition probability
  bool shared_support = true;    ///< all actions at a state use the same support
};

/// Seeded random model. States are "s0".., actions "a0"..
MdpModel random_model(const RandomModelSpec& spec, std::uint64_t seed);

/// Two-state uncontrolled chain: "1" absorbing with cost 0, "2" with cost 1
/// moving to "1" with probability 1 - rho.
MdpModel example_model(double rho);

}  // namespace riskmdp
