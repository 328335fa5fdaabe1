#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "riskmdp/grid.hpp"
#include "riskmdp/lp.hpp"
#include "riskmdp/model.hpp"

namespace riskmdp {

// Single-controller ergodic game between a cost-minimizing controller and a
// kernel-choosing maximizer, solved through its finite LP relaxations.
//
//   primal:  min sum beta
//            beta_i - q.beta >= 0                                (per state i, row q)
//            V_i - q.V + beta_i - sum_u ct(i,q,u) y_i(u) >= 0      (per state i, row q)
//            sum_u y_i(u) = 1,  y >= 0,  V and beta free
//
//   dual:    max sum w
//            sum_{i,q} (delta_ij - q_j) mu(i,q) = 0                (per j)
//            sum_{i,q} (delta_ij - q_j) nu(i,q) + sum_q mu(j,q) = 1
//            w_i - sum_q ct(i,q,u) mu(i,q) <= 0                    (per i, u)
//
// where ct is the KL-penalized reward.

/// Candidate kernel rows per state, each stored over union_support(i).
class KernelRowSet {
 public:
  KernelRowSet() = default;
  explicit KernelRowSet(const MdpModel& model);
  static KernelRowSet from_grid(const MdpModel& model, const GridSpec& grid);
  /// One Dirac row per support state.
  static KernelRowSet diracs(const MdpModel& model);

  [[nodiscard]] std::size_t num_states() const { return support_.size(); }
  [[nodiscard]] const std::vector<std::size_t>& support(std::size_t i) const { return support_.at(i); }
  [[nodiscard]] std::size_t num_rows(std::size_t i) const { return rows_.at(i).size(); }
  [[nodiscard]] std::size_t total_rows() const;
  [[nodiscard]] const std::vector<double>& row(std::size_t i, std::size_t r) const { return rows_.at(i).at(r); }
  [[nodiscard]] Eigen::VectorXd dense_row(std::size_t i, std::size_t r) const;

  /// Adds `values` (aligned with support(i)) unless an identical row exists
  /// within `tol`; returns true if added.
  bool add(std::size_t i, std::vector<double> values, double tol = 1e-12);

 private:
  std::size_t num_model_states_ = 0;
  std::vector<std::vector<std::size_t>> support_;
  std::vector<std::vector<std::vector<double>>> rows_;
};

struct GameOptions {
  double sentinel = -1e6;           ///< LP stand-in for a -inf reward
  lp::LpOptions lp;
  double alpha_mass_tol = 1e-10;    ///< mu mass below this counts as zero
  double alpha_drop = 1e-9;         ///< row weights below this are dropped before mixing
  double b_set_tol = 1e-7;          ///< q.beta >= beta_i - tol selects the level-preserving rows
  double bias_floor = 1e4;          ///< lower bound magnitude for potentials of transient states
  double purify_tol = 1e-9;         ///< y_i(u) above this is in the support
  std::uint64_t grid_guard = kDefaultGridGuard;
};

/// ct(i, q, u) for each stored row, with -inf replaced by the sentinel.
/// Indexed [i][r * num_actions + u].
std::vector<std::vector<double>> tilde_cost_table(const MdpModel& model, const KernelRowSet& rows, double sentinel);

/// Primal program. Variable order: V (s), beta (s), y (i-major, then u).
/// Row order: per state i and row r, the beta-row then the V-row; then one
/// simplex row per state.
lp::LinearProgram build_primal(const MdpModel& model, const KernelRowSet& rows, double sentinel = -1e6);
lp::LinearProgram build_primal(const MdpModel& model, const GridSpec& grid, double sentinel = -1e6);

/// Dual program, equal to lp::dualize(build_primal(...)). Variable order:
/// per (i, r) the pair (nu, mu), then w (s). Row order: (V_j), (beta_j), (i, u).
lp::LinearProgram build_dual(const MdpModel& model, const KernelRowSet& rows, double sentinel = -1e6);
lp::LinearProgram build_dual(const MdpModel& model, const GridSpec& grid, double sentinel = -1e6);

enum class MaximizerSource { Mu, Bias, Nu, Nearest };
std::string to_string(MaximizerSource source);

struct GameSolution {
  unsigned resolution = 0;              ///< grid resolution; 0 for constraint generation
  Eigen::VectorXd value;                ///< beta
  Eigen::VectorXd potentials;           ///< V
  StationaryPolicy minimizer;           ///< y
  PurePolicy pure_minimizer;            ///< v*
  std::vector<std::vector<double>> dual_mu;  ///< [i][r]
  std::vector<std::vector<double>> dual_nu;  ///< [i][r]
  Eigen::VectorXd dual_w;
  KernelMatrix maximizer;               ///< q*
  std::vector<MaximizerSource> maximizer_source;
  std::size_t constraint_count = 0;     ///< inequality rows of the primal
  double objective = 0.0;               ///< sum beta
  double dual_objective = 0.0;          ///< sum w
  double duality_gap = 0.0;
  double primal_violation = 0.0;        ///< worst primal row violation of (V, beta, y)
  double dual_identity_residual = 0.0;  ///< ||beta - q* beta||_inf
  std::size_t lp_iterations = 0;
  std::size_t rounds = 0;               ///< constraint-generation rounds
  bool certified = false;
};

/// Solves the game restricted to the given rows.
GameSolution solve_game(const MdpModel& model, const KernelRowSet& rows, const GameOptions& options = {});
/// Solves the game on the dyadic grid of resolution n.
GameSolution solve_game(const MdpModel& model, unsigned resolution, const GameOptions& options = {});

struct SequenceOptions {
  unsigned n_start = 2;
  unsigned n_max = 8;
  double stop_tol = 1e-4;               ///< 0 runs every resolution
  double monotone_tol = 1e-7;
  std::size_t limit_samples = 200;      ///< random kernels for the limit feasibility check
  std::uint64_t seed = 12345;
  GameOptions game;
};

struct ConvergenceReport {
  std::vector<unsigned> resolutions;
  std::vector<Eigen::VectorXd> betas;
  std::vector<double> max_decrease;     ///< max_i (beta^{n-1}_i - beta^n_i), first entry 0
  Eigen::VectorXd beta_hat;
  std::string stop_reason;
  std::vector<GameSolution> solutions;
  double limit_violation = 0.0;         ///< worst violation over the sampled kernels
  double limit_slack = 0.0;
  bool limit_feasible = false;

  [[nodiscard]] const GameSolution& final_solution() const { return solutions.back(); }
};

/// Runs solve_game for n = n_start..n_max. The grids are nested, so beta^n
/// is nondecreasing in n; a decrease beyond monotone_tol throws SolverError.
ConvergenceReport solve_sequence(const MdpModel& model, const SequenceOptions& options = {});

struct CongenOptions {
  double inner_tol = 1e-6;
  std::size_t max_rounds = 200;
  GameOptions game;
};

/// Constraint generation over the full kernel class, seeded with Dirac rows.
/// On max_rounds the last iterate is returned with certified = false.
GameSolution solve_congen(const MdpModel& model, const CongenOptions& options = {});

/// Random kernel in the class: rows uniform on the simplex of union_support(i).
KernelMatrix random_kernel(const MdpModel& model, std::mt19937_64& rng);

}  // namespace riskmdp
