#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "riskmdp/errors.hpp"

namespace riskmdp {

/// Row sums of probability vectors must be within this of 1. Rows are
/// rejected, never renormalized.
inline constexpr double kProbabilityTol = 1e-12;

/// Finite controlled Markov chain: states S, a global action list U,
/// kernel p(j|i,u) and running cost c(i,u). Immutable after construction.
class MdpModel {
 public:
  /// `kernels[u]` is the s x s matrix p(.|.,u); `costs` is s x |U|.
  /// Throws ModelError on any invariant violation.
  MdpModel(std::vector<std::string> state_labels, std::vector<std::string> action_labels,
           std::vector<Eigen::MatrixXd> kernels, Eigen::MatrixXd costs);

  [[nodiscard]] std::size_t num_states() const { return state_labels_.size(); }
  [[nodiscard]] std::size_t num_actions() const { return action_labels_.size(); }

  [[nodiscard]] const std::string& state_label(std::size_t i) const { return state_labels_.at(i); }
  [[nodiscard]] const std::string& action_label(std::size_t u) const { return action_labels_.at(u); }
  [[nodiscard]] const std::vector<std::string>& state_labels() const { return state_labels_; }
  [[nodiscard]] const std::vector<std::string>& action_labels() const { return action_labels_; }

  /// p(j | i, u).
  [[nodiscard]] double p(std::size_t u, std::size_t i, std::size_t j) const { return kernels_[u](i, j); }
  [[nodiscard]] const Eigen::MatrixXd& kernel(std::size_t u) const { return kernels_.at(u); }
  [[nodiscard]] double cost(std::size_t i, std::size_t u) const { return costs_(i, u); }
  [[nodiscard]] const Eigen::MatrixXd& costs() const { return costs_; }

  /// {j : max_u p(j|i,u) > 0}, sorted ascending. Never empty.
  [[nodiscard]] const std::vector<std::size_t>& union_support(std::size_t i) const {
    return union_support_.at(i);
  }
  [[nodiscard]] bool in_union_support(std::size_t i, std::size_t j) const { return allowed_(i, j); }

  /// Index of a state/action label; throws ModelError if unknown.
  [[nodiscard]] std::size_t state_index(const std::string& label) const;
  [[nodiscard]] std::size_t action_index(const std::string& label) const;

 private:
  std::vector<std::string> state_labels_;
  std::vector<std::string> action_labels_;
  std::vector<Eigen::MatrixXd> kernels_;
  Eigen::MatrixXd costs_;
  std::vector<std::vector<std::size_t>> union_support_;
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> allowed_;
};

/// Randomized stationary policy phi(u|i), stored s x |U|.
class StationaryPolicy {
 public:
  StationaryPolicy() = default;
  /// Throws ModelError unless every row is a distribution (tolerance 1e-12).
  explicit StationaryPolicy(Eigen::MatrixXd rows);

  static StationaryPolicy uniform(std::size_t num_states, std::size_t num_actions);

  [[nodiscard]] std::size_t num_states() const { return static_cast<std::size_t>(rows_.rows()); }
  [[nodiscard]] std::size_t num_actions() const { return static_cast<std::size_t>(rows_.cols()); }
  [[nodiscard]] double operator()(std::size_t i, std::size_t u) const { return rows_(i, u); }
  [[nodiscard]] const Eigen::MatrixXd& rows() const { return rows_; }

  /// Pointwise convex combination (1 - t) * a + t * b.
  static StationaryPolicy mix(const StationaryPolicy& a, const StationaryPolicy& b, double t);

 private:
  Eigen::MatrixXd rows_;
};

/// Deterministic stationary policy i -> v(i).
class PurePolicy {
 public:
  PurePolicy() = default;
  explicit PurePolicy(std::vector<std::size_t> choice) : choice_(std::move(choice)) {}

  [[nodiscard]] std::size_t num_states() const { return choice_.size(); }
  [[nodiscard]] std::size_t operator[](std::size_t i) const { return choice_.at(i); }
  [[nodiscard]] const std::vector<std::size_t>& choices() const { return choice_; }
  [[nodiscard]] StationaryPolicy to_stationary(std::size_t num_actions) const;

  friend bool operator==(const PurePolicy&, const PurePolicy&) = default;
  friend auto operator<=>(const PurePolicy&, const PurePolicy&) = default;

 private:
  std::vector<std::size_t> choice_;
};

/// Row-stochastic s x s matrix supported inside the union support of a
/// model (the kernel class of the maximizing player).
class KernelMatrix {
 public:
  KernelMatrix() = default;
  /// Throws ModelError if not row-stochastic within 1e-12, if an entry is
  /// outside [0, 1], or if mass sits outside the union support.
  KernelMatrix(const MdpModel& model, Eigen::MatrixXd entries);

  [[nodiscard]] std::size_t size() const { return static_cast<std::size_t>(entries_.rows()); }
  [[nodiscard]] double operator()(std::size_t i, std::size_t j) const { return entries_(i, j); }
  [[nodiscard]] Eigen::MatrixXd matrix() const { return entries_; }
  [[nodiscard]] std::span<const double> row(std::size_t i) const {
    return {entries_.row(static_cast<Eigen::Index>(i)).data(), size()};
  }

 private:
  // Row-major so that row(i) is contiguous.
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> entries_;
};

/// Markov chain induced by a stationary policy: p_v and c_v.
struct PolicyChain {
  Eigen::MatrixXd kernel;
  Eigen::VectorXd cost;
};

PolicyChain apply_policy(const MdpModel& model, const StationaryPolicy& policy);

/// Checks that `row` is a distribution within kProbabilityTol.
bool is_distribution(std::span<const double> row, double tol = kProbabilityTol);

// JSON ingestion ----------------------------------------------------------

MdpModel parse_model(const nlohmann::json& doc);
MdpModel load_model(const std::filesystem::path& path);

/// Canonical serialization in the ingestion schema (fixed key order).
nlohmann::ordered_json model_to_json(const MdpModel& model);

/// Reads a policy file: {"policy": {"<state>": "<action>" | {"<action>": w, ...}}}.
StationaryPolicy load_policy(const MdpModel& model, const std::filesystem::path& path);
StationaryPolicy parse_policy(const MdpModel& model, const nlohmann::json& doc);

}  // namespace riskmdp
