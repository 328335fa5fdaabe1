#include "riskmdp/grid.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace riskmdp {

std::uint64_t composition_count(std::size_t support_size, unsigned resolution) {
  if (support_size == 0) return 0;
  if (resolution >= 63) return std::numeric_limits<std::uint64_t>::max();
  // C(N + k - 1, k - 1) with N = 2^n, built incrementally as
  // prod_{t=1}^{k-1} (N + t) / t, each partial product an exact binomial.
  // Dividing t out of the running value first keeps every step exact.
  constexpr std::uint64_t kMax = std::numeric_limits<std::uint64_t>::max();
  const std::uint64_t total = std::uint64_t{1} << resolution;
  std::uint64_t value = 1;
  for (std::size_t t = 1; t < support_size; ++t) {
    const std::uint64_t g = std::gcd(value, static_cast<std::uint64_t>(t));
    const std::uint64_t factor = (total + t) / (t / g);
    if (__builtin_mul_overflow(value / g, factor, &value)) return kMax;
  }
  return value;
}

namespace {

void compose(std::uint32_t remaining, std::size_t part, std::vector<std::uint32_t>& current,
             std::vector<std::vector<std::uint32_t>>& out) {
  if (part + 1 == current.size()) {
    current[part] = remaining;
    out.push_back(current);
    return;
  }
  for (std::uint32_t k = 0; k <= remaining; ++k) {
    current[part] = k;
    compose(remaining - k, part + 1, current, out);
  }
}

}  // namespace

std::vector<std::vector<std::uint32_t>> enumerate_rows(std::size_t support_size, unsigned resolution,
                                                       std::uint64_t guard) {
  if (support_size == 0) throw ModelError("enumerate_rows: support must be nonempty");
  if (resolution > 31) throw GuardError("resolution " + std::to_string(resolution) + " exceeds 31");
  const std::uint64_t count = composition_count(support_size, resolution);
  if (count > guard) {
    throw GuardError("grid with support " + std::to_string(support_size) + " at resolution " +
                     std::to_string(resolution) + " has " + std::to_string(count) +
                     " rows, above the guard of " + std::to_string(guard));
  }
  std::vector<std::vector<std::uint32_t>> out;
  out.reserve(static_cast<std::size_t>(count));
  std::vector<std::uint32_t> current(support_size, 0);
  compose(std::uint32_t{1} << resolution, 0, current, out);
  return out;
}

GridSpec::GridSpec(const MdpModel& model, unsigned resolution, std::uint64_t guard)
    : resolution_(resolution), num_model_states_(model.num_states()) {
  support_.resize(model.num_states());
  numerators_.resize(model.num_states());
  for (std::size_t i = 0; i < model.num_states(); ++i) {
    support_[i] = model.union_support(i);
    numerators_[i] = enumerate_rows(support_[i].size(), resolution, guard);
  }
}

std::size_t GridSpec::total_rows() const {
  std::size_t total = 0;
  for (const auto& rows : numerators_) total += rows.size();
  return total;
}

Eigen::VectorXd GridSpec::dense_row(std::size_t i, std::size_t r) const {
  Eigen::VectorXd row = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(num_model_states_));
  const auto& num = numerators(i, r);
  const double denom = std::ldexp(1.0, static_cast<int>(resolution_));
  for (std::size_t k = 0; k < num.size(); ++k) {
    row(static_cast<Eigen::Index>(support_[i][k])) = static_cast<double>(num[k]) / denom;
  }
  return row;
}

std::ptrdiff_t GridSpec::find_row(std::size_t i, const Eigen::VectorXd& row, double tol) const {
  for (std::size_t r = 0; r < num_rows(i); ++r) {
    if ((dense_row(i, r) - row).cwiseAbs().maxCoeff() <= tol) return static_cast<std::ptrdiff_t>(r);
  }
  return -1;
}

}  // namespace riskmdp
