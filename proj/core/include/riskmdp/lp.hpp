#pragma once

#include <cstddef>
#include <limits>
#include <string>
#include <vector>

namespace riskmdp::lp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Sense { Minimize, Maximize };
enum class Relation { LessEqual, Equal, GreaterEqual };

/// A finite linear program
///
///   optimize  c^T x   subject to   a_k^T x  (<=, =, >=)  b_k,   l <= x <= u.
///
/// Coefficients are collected as triplets; duplicates at the same (row, col)
/// are summed when the program is compressed for solving.
class LinearProgram {
 public:
  explicit LinearProgram(Sense sense = Sense::Minimize) : sense_(sense) {}

  std::size_t add_variable(double objective, double lower = 0.0, double upper = kInf);
  std::size_t add_free_variable(double objective) { return add_variable(objective, -kInf, kInf); }
  std::size_t add_constraint(Relation relation, double rhs);
  void add_coefficient(std::size_t row, std::size_t col, double value);

  [[nodiscard]] Sense sense() const { return sense_; }
  [[nodiscard]] std::size_t num_variables() const { return objective_.size(); }
  [[nodiscard]] std::size_t num_constraints() const { return rhs_.size(); }
  [[nodiscard]] const std::vector<double>& objective() const { return objective_; }
  [[nodiscard]] const std::vector<double>& lower() const { return lower_; }
  [[nodiscard]] const std::vector<double>& upper() const { return upper_; }
  [[nodiscard]] const std::vector<Relation>& relations() const { return relations_; }
  [[nodiscard]] const std::vector<double>& rhs() const { return rhs_; }

  struct Triplet {
    std::size_t row;
    std::size_t col;
    double value;
  };
  /// Merged triplets sorted by (col, row), zeros dropped.
  [[nodiscard]] std::vector<Triplet> canonical_triplets() const;

  /// Dense copy of the constraint matrix (small problems and tests only).
  [[nodiscard]] std::vector<std::vector<double>> dense_matrix() const;

 private:
  Sense sense_;
  std::vector<double> objective_;
  std::vector<double> lower_;
  std::vector<double> upper_;
  std::vector<Relation> relations_;
  std::vector<double> rhs_;
  std::vector<Triplet> triplets_;
};

enum class Status { Optimal, Infeasible, Unbounded, NumericalFailure, IterationLimit };

std::string to_string(Status status);

/// Solution with sign convention  c = A^T y + d  (y: constraint duals,
/// d: reduced costs), in the sense of the original program.
struct LpSolution {
  Status status = Status::NumericalFailure;
  std::vector<double> primal;
  std::vector<double> duals;
  std::vector<double> reduced_costs;
  double objective = 0.0;
  double dual_objective = 0.0;
  double duality_gap = 0.0;        ///< |objective - dual_objective|
  double primal_residual = 0.0;    ///< max violation of rows and bounds
  double dual_residual = 0.0;      ///< max sign violation of y and d
  double complementarity = 0.0;    ///< max |d_j| * distance of x_j to its active bound
  std::size_t iterations = 0;
  std::size_t degenerate_pivots = 0;
  bool bland_engaged = false;
  std::string message;
};

struct LpOptions {
  double feas_tol = 1e-9;
  double opt_tol = 1e-9;
  double gap_tol = 1e-7;
  double pivot_tol = 1e-9;
  std::size_t bland_after = 500;        ///< degenerate pivots before switching to Bland's rule
  std::size_t max_iterations = 200000;
  bool scale_rows = true;
};

/// Bounded two-phase revised simplex. Deterministic: identical input gives
/// an identical pivot sequence.
LpSolution solve(const LinearProgram& program, const LpOptions& options = {});

/// The LP dual of `program`. Variable bounds must be one of [0, inf),
/// (-inf, 0] or (-inf, inf); anything else throws std::invalid_argument.
/// Row k of the result corresponds to variable k of `program` and
/// variable k of the result to row k of `program`.
LinearProgram dualize(const LinearProgram& program);

/// Solves `program` through its dual. Useful when the program has many
/// more rows than columns. The returned solution is expressed in terms of
/// `program` (primal = x, duals = row duals of `program`).
LpSolution solve_via_dual(const LinearProgram& program, const LpOptions& options = {});

}  // namespace riskmdp::lp
