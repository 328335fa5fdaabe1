#include "riskmdp/generators.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "riskmdp/errors.hpp"

namespace riskmdp {

namespace {

std::vector<std::size_t> draw_support(std::size_t states, std::size_t k, std::mt19937_64& rng) {
  std::vector<std::size_t> all(states);
  std::iota(all.begin(), all.end(), 0);
  // Partial Fisher-Yates with explicit draws keeps the sequence portable
  // across standard libraries.
  for (std::size_t a = 0; a < k; ++a) {
    const std::size_t b = a + static_cast<std::size_t>(rng() % (states - a));
    std::swap(all[a], all[b]);
  }
  all.resize(k);
  std::sort(all.begin(), all.end());
  return all;
}

double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace

MdpModel random_model(const RandomModelSpec& spec, std::uint64_t seed) {
  const std::size_t s = spec.states;
  const std::size_t na = spec.actions;
  if (s < 1 || na < 1) throw ModelError("random model needs at least one state and one action");
  const std::size_t kmax = std::min(spec.max_support, s);
  const std::size_t kmin = std::min(spec.min_support, kmax);
  if (kmin < 1) throw ModelError("support size must be positive");
  if (static_cast<double>(kmax) * spec.min_prob >= 1.0) throw ModelError("min_prob too large for the support size");

  std::mt19937_64 rng(seed);
  std::vector<Eigen::MatrixXd> kernels(na, Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(s)));
  for (std::size_t i = 0; i < s; ++i) {
    std::vector<std::size_t> support;
    for (std::size_t u = 0; u < na; ++u) {
      if (u == 0 || !spec.shared_support) {
        const std::size_t k = kmin + static_cast<std::size_t>(rng() % (kmax - kmin + 1));
        support = draw_support(s, k, rng);
      }
      std::vector<double> w(support.size());
      double total = 0.0;
      for (double& x : w) total += (x = unit(rng) + 1e-3);
      const double free_mass = 1.0 - static_cast<double>(support.size()) * spec.min_prob;
      double assigned = 0.0;
      for (std::size_t k = 0; k + 1 < support.size(); ++k) {
        const double p = spec.min_prob + free_mass * w[k] / total;
        kernels[u](static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(support[k])) = p;
        assigned += p;
      }
      kernels[u](static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(support.back())) = 1.0 - assigned;
    }
  }
  Eigen::MatrixXd costs(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(na));
  for (Eigen::Index i = 0; i < costs.rows(); ++i) {
    for (Eigen::Index u = 0; u < costs.cols(); ++u) costs(i, u) = spec.cost_lo + (spec.cost_hi - spec.cost_lo) * unit(rng);
  }

  std::vector<std::string> states, actions;
  for (std::size_t i = 0; i < s; ++i) states.push_back("s" + std::to_string(i));
  for (std::size_t u = 0; u < na; ++u) actions.push_back("a" + std::to_string(u));
  return MdpModel(std::move(states), std::move(actions), std::move(kernels), std::move(costs));
}

MdpModel example_model(double rho) {
  if (!(rho > 0.0 && rho < 1.0)) throw ModelError("rho must lie in (0, 1)");
  Eigen::MatrixXd p(2, 2);
  p << 1.0, 0.0, 1.0 - rho, rho;
  Eigen::MatrixXd c(2, 1);
  c << 0.0, 1.0;
  return MdpModel({"1", "2"}, {"a"}, {p}, c);
}

}  // namespace riskmdp
