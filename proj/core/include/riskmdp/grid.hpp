#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "riskmdp/model.hpp"

namespace riskmdp {

/// Largest number of grid rows a single state may have.
inline constexpr std::uint64_t kDefaultGridGuard = 1'000'000;

/// Number of compositions of 2^n into k nonnegative parts, C(2^n + k - 1, k - 1),
/// saturated at UINT64_MAX.
std::uint64_t composition_count(std::size_t support_size, unsigned resolution);

/// All compositions of 2^n into k nonnegative parts, in ascending
/// lexicographic order of the numerator tuple. Throws GuardError when the
/// count exceeds `guard`.
std::vector<std::vector<std::uint32_t>> enumerate_rows(std::size_t support_size, unsigned resolution,
                                                       std::uint64_t guard = kDefaultGridGuard);

/// Dyadic kernel rows per state: every distribution on union_support(i)
/// whose entries are multiples of 2^-n. Numerators are kept exactly; the
/// denominators are all 2^n.
class GridSpec {
 public:
  GridSpec(const MdpModel& model, unsigned resolution, std::uint64_t guard = kDefaultGridGuard);

  [[nodiscard]] unsigned resolution() const { return resolution_; }
  [[nodiscard]] std::uint32_t denominator() const { return std::uint32_t{1} << resolution_; }
  [[nodiscard]] std::size_t num_states() const { return support_.size(); }
  [[nodiscard]] const std::vector<std::size_t>& support(std::size_t i) const { return support_.at(i); }
  [[nodiscard]] std::size_t num_rows(std::size_t i) const { return numerators_.at(i).size(); }
  [[nodiscard]] std::size_t total_rows() const;

  /// Numerators of row r at state i, aligned with support(i).
  [[nodiscard]] const std::vector<std::uint32_t>& numerators(std::size_t i, std::size_t r) const {
    return numerators_.at(i).at(r);
  }
  /// Row r at state i as a dense distribution over all states.
  [[nodiscard]] Eigen::VectorXd dense_row(std::size_t i, std::size_t r) const;

  /// Index of the row equal to the given dense distribution, if present.
  [[nodiscard]] std::ptrdiff_t find_row(std::size_t i, const Eigen::VectorXd& row, double tol = 1e-12) const;

 private:
  unsigned resolution_;
  std::size_t num_model_states_;
  std::vector<std::vector<std::size_t>> support_;
  std::vector<std::vector<std::vector<std::uint32_t>>> numerators_;
};

inline GridSpec build_grid(const MdpModel& model, unsigned resolution,
                           std::uint64_t guard = kDefaultGridGuard) {
  return GridSpec(model, resolution, guard);
}

}  // namespace riskmdp
