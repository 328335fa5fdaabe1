#include "riskmdp/game.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "riskmdp/errors.hpp"
#include "riskmdp/spectral.hpp"

namespace riskmdp {

// KernelRowSet -------------------------------------------------------------------

KernelRowSet::KernelRowSet(const MdpModel& model)
    : num_model_states_(model.num_states()), support_(model.num_states()), rows_(model.num_states()) {
  for (std::size_t i = 0; i < model.num_states(); ++i) support_[i] = model.union_support(i);
}

KernelRowSet KernelRowSet::from_grid(const MdpModel& model, const GridSpec& grid) {
  if (grid.num_states() != model.num_states()) throw ModelError("grid was built for a different model");
  KernelRowSet set(model);
  const double denom = static_cast<double>(grid.denominator());
  for (std::size_t i = 0; i < model.num_states(); ++i) {
    if (grid.support(i) != set.support_[i]) throw ModelError("grid support does not match the model");
    auto& rows = set.rows_[i];
    rows.reserve(grid.num_rows(i));
    for (std::size_t r = 0; r < grid.num_rows(i); ++r) {
      const auto& num = grid.numerators(i, r);
      std::vector<double> row(num.size());
      for (std::size_t k = 0; k < num.size(); ++k) row[k] = static_cast<double>(num[k]) / denom;
      rows.push_back(std::move(row));
    }
  }
  return set;
}

KernelRowSet KernelRowSet::diracs(const MdpModel& model) {
  KernelRowSet set(model);
  for (std::size_t i = 0; i < model.num_states(); ++i) {
    const std::size_t k = set.support_[i].size();
    for (std::size_t a = 0; a < k; ++a) {
      std::vector<double> row(k, 0.0);
      row[a] = 1.0;
      set.rows_[i].push_back(std::move(row));
    }
  }
  return set;
}

std::size_t KernelRowSet::total_rows() const {
  std::size_t total = 0;
  for (const auto& r : rows_) total += r.size();
  return total;
}

Eigen::VectorXd KernelRowSet::dense_row(std::size_t i, std::size_t r) const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(num_model_states_));
  const auto& row = rows_.at(i).at(r);
  for (std::size_t k = 0; k < row.size(); ++k) out(static_cast<Eigen::Index>(support_[i][k])) = row[k];
  return out;
}

bool KernelRowSet::add(std::size_t i, std::vector<double> values, double tol) {
  if (values.size() != support_.at(i).size()) throw ModelError("row length does not match the support");
  for (const auto& existing : rows_[i]) {
    double diff = 0.0;
    for (std::size_t k = 0; k < values.size(); ++k) diff = std::max(diff, std::abs(existing[k] - values[k]));
    if (diff <= tol) return false;
  }
  rows_[i].push_back(std::move(values));
  return true;
}

// Program construction ---------------------------------------------------------------

std::vector<std::vector<double>> tilde_cost_table(const MdpModel& model, const KernelRowSet& rows, double sentinel) {
  const std::size_t na = model.num_actions();
  std::vector<std::vector<double>> table(model.num_states());
  for (std::size_t i = 0; i < model.num_states(); ++i) {
    const auto& sup = rows.support(i);
    table[i].resize(rows.num_rows(i) * na);
    for (std::size_t r = 0; r < rows.num_rows(i); ++r) {
      const auto& q = rows.row(i, r);
      for (std::size_t u = 0; u < na; ++u) {
        double kl = 0.0;
        bool finite = true;
        for (std::size_t k = 0; k < sup.size(); ++k) {
          if (q[k] <= 0.0) continue;
          const double p = model.p(u, i, sup[k]);
          if (p <= 0.0) {
            finite = false;
            break;
          }
          kl += q[k] * std::log(q[k] / p);
        }
        table[i][r * na + u] = finite ? model.cost(i, u) - std::max(kl, 0.0) : sentinel;
      }
    }
  }
  return table;
}

lp::LinearProgram build_primal(const MdpModel& model, const KernelRowSet& rows, double sentinel) {
  if (rows.num_states() != model.num_states()) throw ModelError("row set was built for a different model");
  const std::size_t s = model.num_states();
  const std::size_t na = model.num_actions();
  const auto table = tilde_cost_table(model, rows, sentinel);

  lp::LinearProgram prog(lp::Sense::Minimize);
  for (std::size_t j = 0; j < s; ++j) prog.add_free_variable(0.0);  // V
  for (std::size_t j = 0; j < s; ++j) prog.add_free_variable(1.0);  // beta
  for (std::size_t k = 0; k < s * na; ++k) prog.add_variable(0.0);  // y
  const std::size_t beta0 = s, y0 = 2 * s;

  for (std::size_t i = 0; i < s; ++i) {
    const auto& sup = rows.support(i);
    for (std::size_t r = 0; r < rows.num_rows(i); ++r) {
      const auto& q = rows.row(i, r);
      const std::size_t br = prog.add_constraint(lp::Relation::GreaterEqual, 0.0);
      prog.add_coefficient(br, beta0 + i, 1.0);
      for (std::size_t k = 0; k < sup.size(); ++k) {
        if (q[k] != 0.0) prog.add_coefficient(br, beta0 + sup[k], -q[k]);
      }
      const std::size_t vr = prog.add_constraint(lp::Relation::GreaterEqual, 0.0);
      prog.add_coefficient(vr, i, 1.0);
      for (std::size_t k = 0; k < sup.size(); ++k) {
        if (q[k] != 0.0) prog.add_coefficient(vr, sup[k], -q[k]);
      }
      prog.add_coefficient(vr, beta0 + i, 1.0);
      for (std::size_t u = 0; u < na; ++u) prog.add_coefficient(vr, y0 + i * na + u, -table[i][r * na + u]);
    }
  }
  for (std::size_t i = 0; i < s; ++i) {
    const std::size_t row = prog.add_constraint(lp::Relation::Equal, 1.0);
    for (std::size_t u = 0; u < na; ++u) prog.add_coefficient(row, y0 + i * na + u, 1.0);
  }
  return prog;
}

lp::LinearProgram build_primal(const MdpModel& model, const GridSpec& grid, double sentinel) {
  return build_primal(model, KernelRowSet::from_grid(model, grid), sentinel);
}

lp::LinearProgram build_dual(const MdpModel& model, const KernelRowSet& rows, double sentinel) {
  if (rows.num_states() != model.num_states()) throw ModelError("row set was built for a different model");
  const std::size_t s = model.num_states();
  const std::size_t na = model.num_actions();
  const auto table = tilde_cost_table(model, rows, sentinel);

  lp::LinearProgram prog(lp::Sense::Maximize);
  for (std::size_t j = 0; j < s; ++j) prog.add_constraint(lp::Relation::Equal, 0.0);  // V_j
  for (std::size_t j = 0; j < s; ++j) prog.add_constraint(lp::Relation::Equal, 1.0);  // beta_j
  for (std::size_t k = 0; k < s * na; ++k) prog.add_constraint(lp::Relation::LessEqual, 0.0);  // y_iu
  const std::size_t beta0 = s, y0 = 2 * s;

  for (std::size_t i = 0; i < s; ++i) {
    const auto& sup = rows.support(i);
    for (std::size_t r = 0; r < rows.num_rows(i); ++r) {
      const auto& q = rows.row(i, r);
      const std::size_t nu = prog.add_variable(0.0);
      prog.add_coefficient(beta0 + i, nu, 1.0);
      for (std::size_t k = 0; k < sup.size(); ++k) {
        if (q[k] != 0.0) prog.add_coefficient(beta0 + sup[k], nu, -q[k]);
      }
      const std::size_t mu = prog.add_variable(0.0);
      prog.add_coefficient(i, mu, 1.0);
      for (std::size_t k = 0; k < sup.size(); ++k) {
        if (q[k] != 0.0) prog.add_coefficient(sup[k], mu, -q[k]);
      }
      prog.add_coefficient(beta0 + i, mu, 1.0);
      for (std::size_t u = 0; u < na; ++u) prog.add_coefficient(y0 + i * na + u, mu, -table[i][r * na + u]);
    }
  }
  for (std::size_t i = 0; i < s; ++i) {
    const std::size_t w = prog.add_free_variable(1.0);
    for (std::size_t u = 0; u < na; ++u) prog.add_coefficient(y0 + i * na + u, w, 1.0);
  }
  return prog;
}

lp::LinearProgram build_dual(const MdpModel& model, const GridSpec& grid, double sentinel) {
  return build_dual(model, KernelRowSet::from_grid(model, grid), sentinel);
}

std::string to_string(MaximizerSource source) {
  switch (source) {
    case MaximizerSource::Mu: return "mu";
    case MaximizerSource::Bias: return "bias";
    case MaximizerSource::Nu: return "nu";
    case MaximizerSource::Nearest: return "nearest";
  }
  return "unknown";
}

// Solving ---------------------------------------------------------------------------

namespace {

double row_dot(const KernelRowSet& rows, std::size_t i, std::size_t r, const Eigen::VectorXd& x) {
  const auto& q = rows.row(i, r);
  const auto& sup = rows.support(i);
  double acc = 0.0;
  for (std::size_t k = 0; k < q.size(); ++k) acc += q[k] * x(static_cast<Eigen::Index>(sup[k]));
  return acc;
}

Eigen::RowVectorXd normalized_row(Eigen::RowVectorXd row) {
  row = row.cwiseMax(0.0);
  const double sum = row.sum();
  if (sum > 0.0) return row / sum;
  row.setConstant(1.0 / static_cast<double>(row.size()));
  return row;
}

// Mixes rows of state i with nonnegative weights into a dense distribution.
Eigen::RowVectorXd mix_rows(const KernelRowSet& rows, std::size_t i, const std::vector<double>& weight,
                            double drop, std::size_t s) {
  double mass = 0.0;
  for (double w : weight) mass += std::max(w, 0.0);
  double kept = 0.0;
  for (double w : weight) {
    if (w / mass >= drop) kept += w;
  }
  Eigen::RowVectorXd out = Eigen::RowVectorXd::Zero(static_cast<Eigen::Index>(s));
  const auto& sup = rows.support(i);
  for (std::size_t r = 0; r < weight.size(); ++r) {
    const double a = weight[r] / mass;
    if (a < drop) continue;
    const auto& q = rows.row(i, r);
    for (std::size_t k = 0; k < q.size(); ++k) out(static_cast<Eigen::Index>(sup[k])) += (weight[r] / kept) * q[k];
  }
  return out / out.sum();
}

struct BiasResult {
  bool ok = false;
  Eigen::VectorXd potentials;
  Eigen::MatrixXd policy;
  std::vector<std::vector<double>> weights;  // [i][r], zero outside B_i
};

// Second-stage program for states carrying no occupation mass: with beta
// fixed, the smallest potentials satisfying the V-rows restricted to the
// level-preserving rows. Its row duals select the maximizer there.
BiasResult solve_bias(const MdpModel& model, const KernelRowSet& rows, const std::vector<std::vector<double>>& table,
                      const Eigen::VectorXd& beta, const Eigen::VectorXd& potentials,
                      const std::vector<bool>& transient, const GameOptions& opt) {
  const std::size_t s = model.num_states();
  const std::size_t na = model.num_actions();
  constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> slot(s, kNone);
  std::vector<std::size_t> states;
  for (std::size_t i = 0; i < s; ++i) {
    if (transient[i]) {
      slot[i] = states.size();
      states.push_back(i);
    }
  }
  const std::size_t t = states.size();
  const double floor = opt.bias_floor + potentials.cwiseAbs().maxCoeff();

  lp::LinearProgram prog(lp::Sense::Minimize);
  for (std::size_t a = 0; a < t; ++a) prog.add_variable(1.0);
  for (std::size_t a = 0; a < t * na; ++a) prog.add_variable(0.0);

  struct RowRef {
    std::size_t i, r, lp_row;
  };
  std::vector<RowRef> refs;
  for (std::size_t i : states) {
    const auto& sup = rows.support(i);
    for (std::size_t r = 0; r < rows.num_rows(i); ++r) {
      if (row_dot(rows, i, r, beta) < beta(static_cast<Eigen::Index>(i)) - opt.b_set_tol) continue;
      const auto& q = rows.row(i, r);
      double rhs = -beta(static_cast<Eigen::Index>(i));
      double stay = 0.0;
      for (std::size_t k = 0; k < q.size(); ++k) {
        if (slot[sup[k]] != kNone) {
          stay += q[k];
        } else {
          rhs += q[k] * potentials(static_cast<Eigen::Index>(sup[k]));
        }
      }
      rhs += floor * (1.0 - stay);
      const std::size_t row = prog.add_constraint(lp::Relation::GreaterEqual, rhs);
      prog.add_coefficient(row, slot[i], 1.0);
      for (std::size_t k = 0; k < q.size(); ++k) {
        if (slot[sup[k]] != kNone && q[k] != 0.0) prog.add_coefficient(row, slot[sup[k]], -q[k]);
      }
      for (std::size_t u = 0; u < na; ++u) prog.add_coefficient(row, t + slot[i] * na + u, -table[i][r * na + u]);
      refs.push_back({i, r, row});
    }
  }
  for (std::size_t a = 0; a < t; ++a) {
    const std::size_t row = prog.add_constraint(lp::Relation::Equal, 1.0);
    for (std::size_t u = 0; u < na; ++u) prog.add_coefficient(row, t + a * na + u, 1.0);
  }

  BiasResult out;
  const lp::LpSolution sol = lp::solve_via_dual(prog, opt.lp);
  if (sol.status != lp::Status::Optimal) return out;
  out.ok = true;
  out.potentials = potentials;
  out.policy = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(na));
  out.weights.resize(s);
  for (std::size_t a = 0; a < t; ++a) {
    const std::size_t i = states[a];
    out.potentials(static_cast<Eigen::Index>(i)) = sol.primal[a] - floor;
    for (std::size_t u = 0; u < na; ++u) {
      out.policy(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(u)) = sol.primal[t + a * na + u];
    }
    out.weights[i].assign(rows.num_rows(i), 0.0);
  }
  for (const auto& ref : refs) out.weights[ref.i][ref.r] = std::max(sol.duals[ref.lp_row], 0.0);
  return out;
}

}  // namespace

GameSolution solve_game(const MdpModel& model, const KernelRowSet& rows, const GameOptions& options) {
  const std::size_t s = model.num_states();
  const std::size_t na = model.num_actions();
  const auto si = [](std::size_t k) { return static_cast<Eigen::Index>(k); };

  const lp::LinearProgram dual = build_dual(model, rows, options.sentinel);
  const lp::LpSolution sol = lp::solve(dual, options.lp);
  if (sol.status != lp::Status::Optimal) {
    std::ostringstream msg;
    msg << "game LP over " << rows.total_rows() << " kernel rows failed: " << lp::to_string(sol.status) << " ("
        << sol.message << ")";
    throw SolverError(msg.str());
  }
  const auto table = tilde_cost_table(model, rows, options.sentinel);

  GameSolution g;
  g.constraint_count = 2 * rows.total_rows();
  g.lp_iterations = sol.iterations;
  g.potentials.resize(si(s));
  g.value.resize(si(s));
  g.dual_w.resize(si(s));
  for (std::size_t j = 0; j < s; ++j) {
    g.potentials(si(j)) = sol.duals[j];
    g.value(si(j)) = sol.duals[s + j];
  }
  Eigen::MatrixXd y(si(s), si(na));
  for (std::size_t i = 0; i < s; ++i) {
    for (std::size_t u = 0; u < na; ++u) y(si(i), si(u)) = sol.duals[2 * s + i * na + u];
  }

  g.dual_mu.resize(s);
  g.dual_nu.resize(s);
  std::size_t col = 0;
  for (std::size_t i = 0; i < s; ++i) {
    g.dual_nu[i].resize(rows.num_rows(i));
    g.dual_mu[i].resize(rows.num_rows(i));
    for (std::size_t r = 0; r < rows.num_rows(i); ++r) {
      g.dual_nu[i][r] = std::max(sol.primal[col++], 0.0);
      g.dual_mu[i][r] = std::max(sol.primal[col++], 0.0);
    }
  }
  for (std::size_t i = 0; i < s; ++i) g.dual_w(si(i)) = sol.primal[col++];

  std::vector<bool> transient(s, false);
  bool any_transient = false;
  for (std::size_t i = 0; i < s; ++i) {
    double mass = 0.0;
    for (double m : g.dual_mu[i]) mass += m;
    transient[i] = mass <= options.alpha_mass_tol;
    any_transient = any_transient || transient[i];
  }
  BiasResult bias;
  if (any_transient) {
    bias = solve_bias(model, rows, table, g.value, g.potentials, transient, options);
    if (bias.ok) {
      g.potentials = bias.potentials;
      for (std::size_t i = 0; i < s; ++i) {
        if (transient[i]) y.row(si(i)) = bias.policy.row(si(i));
      }
    }
  }
  for (std::size_t i = 0; i < s; ++i) y.row(si(i)) = normalized_row(y.row(si(i)));
  g.minimizer = StationaryPolicy(y);

  // Purification: the support action with the smallest worst-case V-row slack.
  std::vector<std::size_t> choice(s, 0);
  for (std::size_t i = 0; i < s; ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t u = 0; u < na; ++u) {
      if (y(si(i), si(u)) <= options.purify_tol) continue;
      double worst = -std::numeric_limits<double>::infinity();
      for (std::size_t r = 0; r < rows.num_rows(i); ++r) {
        worst = std::max(worst, table[i][r * na + u] + row_dot(rows, i, r, g.potentials));
      }
      worst -= g.potentials(si(i)) + g.value(si(i));
      if (worst < best - 1e-12) {
        best = worst;
        choice[i] = u;
      }
    }
  }
  g.pure_minimizer = PurePolicy(choice);

  // Maximizer from the occupation weights, falling back per state.
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(si(s), si(s));
  g.maximizer_source.assign(s, MaximizerSource::Mu);
  const auto mass_of = [](const std::vector<double>& w) {
    double m = 0.0;
    for (double x : w) m += x;
    return m;
  };
  for (std::size_t i = 0; i < s; ++i) {
    if (!transient[i]) {
      q.row(si(i)) = mix_rows(rows, i, g.dual_mu[i], options.alpha_drop, s);
    } else if (bias.ok && mass_of(bias.weights[i]) > options.alpha_mass_tol) {
      q.row(si(i)) = mix_rows(rows, i, bias.weights[i], options.alpha_drop, s);
      g.maximizer_source[i] = MaximizerSource::Bias;
    } else if (mass_of(g.dual_nu[i]) > options.alpha_mass_tol) {
      q.row(si(i)) = mix_rows(rows, i, g.dual_nu[i], options.alpha_drop, s);
      g.maximizer_source[i] = MaximizerSource::Nu;
    } else {
      const Eigen::RowVectorXd target = model.kernel(choice[i]).row(si(i));
      double best = std::numeric_limits<double>::infinity();
      std::size_t best_r = 0;
      bool best_in_b = false;
      for (std::size_t r = 0; r < rows.num_rows(i); ++r) {
        const bool in_b = row_dot(rows, i, r, g.value) >= g.value(si(i)) - options.b_set_tol;
        const double d = (rows.dense_row(i, r).transpose() - target).lpNorm<1>();
        if ((in_b && !best_in_b) || (in_b == best_in_b && d < best)) {
          best = d;
          best_r = r;
          best_in_b = in_b;
        }
      }
      q.row(si(i)) = rows.dense_row(i, best_r).transpose();
      g.maximizer_source[i] = MaximizerSource::Nearest;
    }
  }
  g.maximizer = KernelMatrix(model, q);

  g.objective = g.value.sum();
  g.dual_objective = g.dual_w.sum();
  g.duality_gap = std::abs(g.objective - g.dual_objective);
  g.dual_identity_residual = (g.value - q * g.value).cwiseAbs().maxCoeff();
  double violation = 0.0;
  for (std::size_t i = 0; i < s; ++i) {
    for (std::size_t r = 0; r < rows.num_rows(i); ++r) {
      const double qb = row_dot(rows, i, r, g.value);
      const double qv = row_dot(rows, i, r, g.potentials);
      double reward = 0.0;
      for (std::size_t u = 0; u < na; ++u) reward += y(si(i), si(u)) * table[i][r * na + u];
      violation = std::max(violation, qb - g.value(si(i)));
      violation = std::max(violation, reward + qv - g.potentials(si(i)) - g.value(si(i)));
    }
  }
  g.primal_violation = violation;
  g.certified = g.duality_gap <= 1e-6 && g.primal_violation <= 1e-6;
  return g;
}

GameSolution solve_game(const MdpModel& model, unsigned resolution, const GameOptions& options) {
  const GridSpec grid(model, resolution, options.grid_guard);
  GameSolution g = solve_game(model, KernelRowSet::from_grid(model, grid), options);
  g.resolution = resolution;
  return g;
}

// Resolution sequence -----------------------------------------------------------------

KernelMatrix random_kernel(const MdpModel& model, std::mt19937_64& rng) {
  const std::size_t s = model.num_states();
  std::exponential_distribution<double> expo(1.0);
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(s));
  for (std::size_t i = 0; i < s; ++i) {
    const auto& sup = model.union_support(i);
    double total = 0.0;
    for (std::size_t j : sup) {
      const double e = expo(rng);
      q(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = e;
      total += e;
    }
    q.row(static_cast<Eigen::Index>(i)) /= total;
  }
  return KernelMatrix(model, q);
}

ConvergenceReport solve_sequence(const MdpModel& model, const SequenceOptions& options) {
  if (options.n_start > options.n_max) {
    throw ModelError("n_start (" + std::to_string(options.n_start) + ") exceeds n_max (" +
                     std::to_string(options.n_max) + ")");
  }
  ConvergenceReport rep;
  rep.stop_reason = "n_max reached";
  for (unsigned n = options.n_start; n <= options.n_max; ++n) {
    GameSolution g = solve_game(model, n, options.game);
    double decrease = 0.0;
    double change = std::numeric_limits<double>::infinity();
    if (!rep.betas.empty()) {
      // Grids are nested, so each program adds rows to the previous one and
      // the value can only grow.
      const Eigen::VectorXd diff = g.value - rep.betas.back();
      decrease = -diff.minCoeff();
      change = diff.cwiseAbs().maxCoeff();
      if (decrease > options.monotone_tol) {
        std::ostringstream msg;
        msg.precision(3);
        msg << "value sequence decreased by " << std::scientific << decrease << " from n=" << (n - 1)
            << " to n=" << n;
        throw SolverError(msg.str());
      }
    }
    rep.resolutions.push_back(n);
    rep.betas.push_back(g.value);
    rep.max_decrease.push_back(std::max(decrease, 0.0));
    rep.solutions.push_back(std::move(g));
    if (options.stop_tol > 0.0 && change < options.stop_tol) {
      rep.stop_reason = "converged";
      break;
    }
  }
  rep.beta_hat = rep.betas.back();

  // Feasibility of the final pair against kernels drawn from the whole class.
  const GameSolution& fin = rep.solutions.back();
  rep.limit_slack = std::max(10.0 * options.stop_tol, 1e-6);
  std::mt19937_64 rng(options.seed);
  double worst = 0.0;
  for (std::size_t k = 0; k < options.limit_samples; ++k) {
    const KernelMatrix q = random_kernel(model, rng);
    const Eigen::MatrixXd qm = q.matrix();
    const Eigen::VectorXd qb = qm * fin.value;
    const Eigen::VectorXd qv = qm * fin.potentials;
    for (std::size_t i = 0; i < model.num_states(); ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      worst = std::max(worst, qb(ii) - fin.value(ii));
      const ExtendedReal reward = tilde_cost(model, i, q.row(i), fin.minimizer);
      if (reward.is_finite()) worst = std::max(worst, reward.value() + qv(ii) - fin.potentials(ii) - fin.value(ii));
    }
  }
  rep.limit_violation = worst;
  rep.limit_feasible = worst <= rep.limit_slack;
  return rep;
}

// Constraint generation -----------------------------------------------------------------

GameSolution solve_congen(const MdpModel& model, const CongenOptions& options) {
  const std::size_t s = model.num_states();
  const std::size_t na = model.num_actions();
  KernelRowSet rows = KernelRowSet::diracs(model);
  GameSolution g;
  for (std::size_t round = 1; round <= options.max_rounds; ++round) {
    g = solve_game(model, rows, options.game);
    g.rounds = round;
    bool added = false;
    for (std::size_t i = 0; i < s; ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      const auto& sup = rows.support(i);

      std::size_t arg = 0;
      for (std::size_t k = 1; k < sup.size(); ++k) {
        if (g.value(static_cast<Eigen::Index>(sup[k])) > g.value(static_cast<Eigen::Index>(sup[arg]))) arg = k;
      }
      if (g.value(static_cast<Eigen::Index>(sup[arg])) - g.value(ii) > options.inner_tol) {
        std::vector<double> dirac(sup.size(), 0.0);
        dirac[arg] = 1.0;
        added = rows.add(i, std::move(dirac)) || added;
      }

      // Gibbs maximizer of sum_u y(u) ct(i,q,u) + q.V over rows supported
      // where every active action has mass; elsewhere the reward is -inf.
      std::vector<double> z(sup.size(), -std::numeric_limits<double>::infinity());
      double base = 0.0;
      for (std::size_t u = 0; u < na; ++u) base += g.minimizer(i, u) * model.cost(i, u);
      double zmax = -std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < sup.size(); ++k) {
        double acc = g.potentials(static_cast<Eigen::Index>(sup[k]));
        bool ok = true;
        for (std::size_t u = 0; u < na && ok; ++u) {
          const double w = g.minimizer(i, u);
          if (w <= 1e-12) continue;
          const double p = model.p(u, i, sup[k]);
          if (p <= 0.0) ok = false;
          else acc += w * std::log(p);
        }
        if (ok) {
          z[k] = acc;
          zmax = std::max(zmax, acc);
        }
      }
      if (!std::isfinite(zmax)) continue;
      double sum = 0.0;
      for (double v : z) sum += std::exp(v - zmax);
      const double lse = zmax + std::log(sum);
      const double violation = base + lse - g.potentials(ii) - g.value(ii);
      if (violation > options.inner_tol) {
        std::vector<double> q(sup.size());
        for (std::size_t k = 0; k < sup.size(); ++k) q[k] = std::exp(z[k] - lse);
        added = rows.add(i, std::move(q)) || added;
      }
    }
    if (!added) return g;
  }
  g.certified = false;
  return g;
}

}  // namespace riskmdp

