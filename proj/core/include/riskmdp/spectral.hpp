#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "riskmdp/extended_real.hpp"
#include "riskmdp/model.hpp"

namespace riskmdp {

// Independent ground truth for the LP pipeline: growth rates of the
// exponentiated cost by power iteration, exhaustive search over pure
// policies, KL-penalized rewards, and ergodic payoffs via Cesaro limits.

/// sum_j q(j) log(q(j) / p(j)) with 0 log(0/.) = 0; +inf when q is not
/// absolutely continuous with respect to p.
double kl_divergence(std::span<const double> q, std::span<const double> p);

/// c(i,u) - D(q || p(.|i,u)), or -inf when absolute continuity fails.
/// Throws ModelError if `qrow` is not a distribution on union_support(i).
ExtendedReal tilde_cost(const MdpModel& model, std::size_t i, std::span<const double> qrow, std::size_t u);

/// Policy average sum_u phi(u|i) * tilde_cost(i, q, u), with 0 * -inf = 0.
ExtendedReal tilde_cost(const MdpModel& model, std::size_t i, std::span<const double> qrow,
                        const StationaryPolicy& policy);

struct GrowthOptions {
  double rate_tol = 1e-10;
  std::size_t max_iters = 100'000;
  std::size_t window = 32;
};

struct GrowthRates {
  Eigen::VectorXd lambda;
  double lambda_max = 0.0;
  std::size_t iterations = 0;  ///< largest iteration count over the per-component runs
  bool converged = false;
};

/// lambda_i = lim (1/n) log (M^n 1)_i for M(i,j) = exp(c(i)) p(j|i).
GrowthRates growth_rate(const Eigen::MatrixXd& kernel, const Eigen::VectorXd& cost,
                        const GrowthOptions& options = {});
GrowthRates growth_rate(const MdpModel& model, const StationaryPolicy& policy,
                        const GrowthOptions& options = {});

inline constexpr std::uint64_t kDefaultPolicyGuard = 1'000'000;

struct BruteForceResult {
  double value = 0.0;
  PurePolicy argmin;
  Eigen::VectorXd per_state;
  std::uint64_t policies = 0;
  bool all_converged = true;
};

/// min over pure policies of max_i lambda_i^v. Ties keep the
/// lexicographically smallest policy. Throws GuardError when |U|^s > guard.
BruteForceResult brute_force_lambda_star(const MdpModel& model, const GrowthOptions& options = {},
                                         std::uint64_t guard = kDefaultPolicyGuard);

/// Strongly connected components of the support graph of `kernel` that are
/// closed (no edge leaves them). Each class sorted; classes ordered by
/// smallest member.
std::vector<std::vector<std::size_t>> recurrent_classes(const Eigen::MatrixXd& kernel);

/// Cesaro limit Q = lim (1/N) sum_{k<N} P^k. Throws SolverError if a class
/// system is numerically singular.
Eigen::MatrixXd cesaro_limit(const Eigen::MatrixXd& kernel);

struct PayoffVector {
  std::vector<ExtendedReal> phi;
  ExtendedReal phi_max;
};

/// Ergodic payoff of the game: phi = Q * tilde_c_v(., q), phi_max = max_i phi_i.
PayoffVector game_payoff(const MdpModel& model, const KernelMatrix& q, const StationaryPolicy& v);

}  // namespace riskmdp
