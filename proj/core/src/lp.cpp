#include "riskmdp/lp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

namespace riskmdp::lp {

// LinearProgram --------------------------------------------------------------

std::size_t LinearProgram::add_variable(double objective, double lower, double upper) {
  if (!std::isfinite(objective)) throw std::invalid_argument("objective coefficient must be finite");
  if (std::isnan(lower) || std::isnan(upper) || lower > upper || lower == kInf || upper == -kInf) {
    throw std::invalid_argument("invalid variable bounds");
  }
  objective_.push_back(objective);
  lower_.push_back(lower);
  upper_.push_back(upper);
  return objective_.size() - 1;
}

std::size_t LinearProgram::add_constraint(Relation relation, double rhs) {
  if (!std::isfinite(rhs)) throw std::invalid_argument("right-hand side must be finite");
  relations_.push_back(relation);
  rhs_.push_back(rhs);
  return rhs_.size() - 1;
}

void LinearProgram::add_coefficient(std::size_t row, std::size_t col, double value) {
  if (row >= rhs_.size() || col >= objective_.size()) throw std::out_of_range("coefficient index");
  if (!std::isfinite(value)) throw std::invalid_argument("constraint coefficient must be finite");
  if (value != 0.0) triplets_.push_back({row, col, value});
}

std::vector<LinearProgram::Triplet> LinearProgram::canonical_triplets() const {
  std::vector<Triplet> t = triplets_;
  std::stable_sort(t.begin(), t.end(), [](const Triplet& a, const Triplet& b) {
    return a.col != b.col ? a.col < b.col : a.row < b.row;
  });
  std::vector<Triplet> out;
  out.reserve(t.size());
  for (const auto& e : t) {
    if (!out.empty() && out.back().row == e.row && out.back().col == e.col) {
      out.back().value += e.value;
    } else {
      out.push_back(e);
    }
  }
  std::erase_if(out, [](const Triplet& e) { return e.value == 0.0; });
  return out;
}

std::vector<std::vector<double>> LinearProgram::dense_matrix() const {
  std::vector<std::vector<double>> a(num_constraints(), std::vector<double>(num_variables(), 0.0));
  for (const auto& e : canonical_triplets()) a[e.row][e.col] = e.value;
  return a;
}

std::string to_string(Status status) {
  switch (status) {
    case Status::Optimal: return "optimal";
    case Status::Infeasible: return "infeasible";
    case Status::Unbounded: return "unbounded";
    case Status::NumericalFailure: return "numerical_failure";
    case Status::IterationLimit: return "iteration_limit";
  }
  return "unknown";
}

namespace {

struct Csc {
  std::vector<std::size_t> start;
  std::vector<std::size_t> row;
  std::vector<double> value;
};

Csc compress(const LinearProgram& program) {
  Csc a;
  const auto triplets = program.canonical_triplets();
  a.start.assign(program.num_variables() + 1, 0);
  for (const auto& e : triplets) ++a.start[e.col + 1];
  for (std::size_t j = 0; j < program.num_variables(); ++j) a.start[j + 1] += a.start[j];
  a.row.resize(triplets.size());
  a.value.resize(triplets.size());
  // Triplets are already sorted by column, then row.
  for (std::size_t k = 0; k < triplets.size(); ++k) {
    a.row[k] = triplets[k].row;
    a.value[k] = triplets[k].value;
  }
  return a;
}

// Fills reduced costs, residuals, objectives and the duality gap for a
// candidate (x, y) of `program`. Shared by both solve paths.
void certify(const LinearProgram& program, const Csc& a, LpSolution& sol, double feas_tol) {
  const std::size_t n = program.num_variables();
  const std::size_t m = program.num_constraints();
  const bool maximize = program.sense() == Sense::Maximize;
  const auto& x = sol.primal;
  const auto& y = sol.duals;
  const auto& c = program.objective();

  std::vector<double> ax(m, 0.0);
  sol.reduced_costs.assign(n, 0.0);
  sol.objective = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    double aty = 0.0;
    for (std::size_t k = a.start[j]; k < a.start[j + 1]; ++k) {
      ax[a.row[k]] += a.value[k] * x[j];
      aty += a.value[k] * y[a.row[k]];
    }
    sol.reduced_costs[j] = c[j] - aty;
    sol.objective += c[j] * x[j];
  }

  double primal_res = 0.0;
  double dual_res = 0.0;
  double compl_res = 0.0;
  double dual_obj = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    const double slack = ax[k] - program.rhs()[k];
    double viol = 0.0;
    double sign_viol = 0.0;
    switch (program.relations()[k]) {
      case Relation::LessEqual:
        viol = std::max(0.0, slack);
        sign_viol = maximize ? std::max(0.0, -y[k]) : std::max(0.0, y[k]);
        break;
      case Relation::GreaterEqual:
        viol = std::max(0.0, -slack);
        sign_viol = maximize ? std::max(0.0, y[k]) : std::max(0.0, -y[k]);
        break;
      case Relation::Equal:
        viol = std::abs(slack);
        break;
    }
    primal_res = std::max(primal_res, viol);
    dual_res = std::max(dual_res, sign_viol);
    if (program.relations()[k] != Relation::Equal) compl_res = std::max(compl_res, std::abs(y[k] * slack));
    dual_obj += program.rhs()[k] * y[k];
  }
  for (std::size_t j = 0; j < n; ++j) {
    const double lo = program.lower()[j];
    const double hi = program.upper()[j];
    primal_res = std::max(primal_res, std::max(lo - x[j], x[j] - hi));
    const double d = maximize ? -sol.reduced_costs[j] : sol.reduced_costs[j];
    const bool at_lo = std::isfinite(lo) && std::abs(x[j] - lo) <= feas_tol;
    const bool at_hi = std::isfinite(hi) && std::abs(x[j] - hi) <= feas_tol;
    double viol = 0.0;
    if (at_lo && at_hi) {
      viol = 0.0;
    } else if (at_lo) {
      viol = std::max(0.0, -d);
    } else if (at_hi) {
      viol = std::max(0.0, d);
    } else {
      viol = std::abs(d);
    }
    dual_res = std::max(dual_res, viol);
    double dist = kInf;
    if (std::isfinite(lo)) dist = std::min(dist, std::abs(x[j] - lo));
    if (std::isfinite(hi)) dist = std::min(dist, std::abs(x[j] - hi));
    if (std::isfinite(dist)) compl_res = std::max(compl_res, std::abs(d) * dist);
    dual_obj += sol.reduced_costs[j] * x[j];
  }
  sol.primal_residual = std::max(0.0, primal_res);
  sol.dual_residual = dual_res;
  sol.complementarity = compl_res;
  sol.dual_objective = dual_obj;
  sol.duality_gap = std::abs(sol.objective - dual_obj);
}

enum class VarState : unsigned char { Basic, AtLower, AtUpper, FreeZero };

class Simplex {
 public:
  Simplex(const LinearProgram& program, const LpOptions& options)
      : program_(program), opt_(options), a_(compress(program)) {
    n_ = program.num_variables();
    m_ = program.num_constraints();
    setup();
  }

  LpSolution run() {
    if (m_ == 0) return solve_unconstrained();

    Status st = iterate(/*phase=*/1);
    if (st != Status::Optimal) return finish(st, "phase 1: " + message_);
    double infeas = 0.0;
    for (std::size_t j = first_art_; j < total_; ++j) infeas += x_[j];
    double bnorm = 1.0;
    for (double b : b_) bnorm = std::max(bnorm, std::abs(b));
    if (infeas > opt_.feas_tol * bnorm * 10.0) return finish(Status::Infeasible, "phase 1 optimum is positive");

    for (std::size_t j = first_art_; j < total_; ++j) {
      hi_[j] = 0.0;
      if (state_[j] != VarState::Basic) {
        state_[j] = VarState::AtLower;
        x_[j] = 0.0;
      }
    }
    bland_ = false;
    degenerate_in_phase_ = 0;
    st = iterate(/*phase=*/2);
    return finish(st, message_);
  }

 private:
  const LinearProgram& program_;
  LpOptions opt_;
  Csc a_;
  std::size_t n_ = 0, m_ = 0, first_art_ = 0, total_ = 0;
  std::vector<double> scale_;   // row scaling factors
  std::vector<double> b_;       // scaled rhs
  std::vector<double> lo_, hi_, cost_, x_;
  std::vector<VarState> state_;
  std::vector<std::size_t> art_row_;
  std::vector<double> art_sign_;
  std::vector<std::size_t> head_;  // basic variable per basis slot
  std::vector<double> pi_;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
  bool bland_ = false;
  std::size_t degenerate_in_phase_ = 0;
  std::size_t iterations_ = 0;
  std::size_t degenerate_total_ = 0;
  bool bland_ever_ = false;
  std::string message_;

  // Column j of the internal (scaled) matrix, visited as (row, value).
  template <typename F>
  void for_column(std::size_t j, F&& f) const {
    if (j < n_) {
      for (std::size_t k = a_.start[j]; k < a_.start[j + 1]; ++k) f(a_.row[k], a_.value[k] * scale_[a_.row[k]]);
    } else if (j < first_art_) {
      f(j - n_, 1.0);
    } else {
      const std::size_t k = j - first_art_;
      f(art_row_[k], art_sign_[k]);
    }
  }

  void setup() {
    scale_.assign(m_, 1.0);
    if (opt_.scale_rows) {
      std::vector<double> mx(m_, 0.0), mn(m_, kInf);
      for (std::size_t k = 0; k < a_.value.size(); ++k) {
        const double v = std::abs(a_.value[k]);
        mx[a_.row[k]] = std::max(mx[a_.row[k]], v);
        mn[a_.row[k]] = std::min(mn[a_.row[k]], v);
      }
      // Geometric mean of the extreme magnitudes, so sentinel-sized entries
      // do not crush the ordinary coefficients of the same row.
      for (std::size_t r = 0; r < m_; ++r) {
        if (mx[r] > 0.0) scale_[r] = 1.0 / std::sqrt(mx[r] * mn[r]);
      }
    }
    b_.resize(m_);
    for (std::size_t r = 0; r < m_; ++r) b_[r] = program_.rhs()[r] * scale_[r];

    lo_ = program_.lower();
    hi_ = program_.upper();
    cost_.assign(n_, 0.0);
    state_.assign(n_, VarState::AtLower);
    x_.assign(n_, 0.0);
    for (std::size_t j = 0; j < n_; ++j) {
      if (std::isfinite(lo_[j])) {
        state_[j] = VarState::AtLower;
        x_[j] = lo_[j];
      } else if (std::isfinite(hi_[j])) {
        state_[j] = VarState::AtUpper;
        x_[j] = hi_[j];
      } else {
        state_[j] = VarState::FreeZero;
        x_[j] = 0.0;
      }
    }
    // Logicals: a_r x + s_r = b_r.
    for (std::size_t r = 0; r < m_; ++r) {
      double l = 0.0, h = 0.0;
      switch (program_.relations()[r]) {
        case Relation::LessEqual: l = 0.0; h = kInf; break;
        case Relation::GreaterEqual: l = -kInf; h = 0.0; break;
        case Relation::Equal: l = 0.0; h = 0.0; break;
      }
      lo_.push_back(l);
      hi_.push_back(h);
      cost_.push_back(0.0);
      state_.push_back(VarState::AtLower);
      x_.push_back(0.0);
    }
    first_art_ = n_ + m_;

    std::vector<double> residual = b_;
    for (std::size_t j = 0; j < n_; ++j) {
      if (x_[j] != 0.0) for_column(j, [&](std::size_t r, double v) { residual[r] -= v * x_[j]; });
    }
    head_.assign(m_, 0);
    for (std::size_t r = 0; r < m_; ++r) {
      const std::size_t s = n_ + r;
      const double res = residual[r];
      if (res >= lo_[s] && res <= hi_[s]) {
        state_[s] = VarState::Basic;
        x_[s] = res;
        head_[r] = s;
        continue;
      }
      const double v = std::clamp(res, lo_[s], hi_[s]);
      state_[s] = (v == lo_[s]) ? VarState::AtLower : VarState::AtUpper;
      x_[s] = v;
      const double gap = res - v;
      art_row_.push_back(r);
      art_sign_.push_back(gap > 0.0 ? 1.0 : -1.0);
      lo_.push_back(0.0);
      hi_.push_back(kInf);
      cost_.push_back(0.0);
      state_.push_back(VarState::Basic);
      x_.push_back(std::abs(gap));
      head_[r] = lo_.size() - 1;
    }
    total_ = lo_.size();
  }

  LpSolution solve_unconstrained() {
    LpSolution sol;
    sol.primal.assign(n_, 0.0);
    sol.duals.clear();
    const bool maximize = program_.sense() == Sense::Maximize;
    for (std::size_t j = 0; j < n_; ++j) {
      const double c = maximize ? -program_.objective()[j] : program_.objective()[j];
      if (c > 0.0) {
        if (!std::isfinite(lo_[j])) return finish_with(sol, Status::Unbounded, "unbounded variable");
        sol.primal[j] = lo_[j];
      } else if (c < 0.0) {
        if (!std::isfinite(hi_[j])) return finish_with(sol, Status::Unbounded, "unbounded variable");
        sol.primal[j] = hi_[j];
      } else {
        sol.primal[j] = std::isfinite(lo_[j]) ? lo_[j] : (std::isfinite(hi_[j]) ? hi_[j] : 0.0);
      }
    }
    sol.status = Status::Optimal;
    certify(program_, a_, sol, opt_.feas_tol);
    return sol;
  }

  LpSolution finish_with(LpSolution sol, Status st, std::string msg) {
    sol.status = st;
    sol.message = std::move(msg);
    return sol;
  }

  bool factor() {
    Eigen::MatrixXd basis = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m_), static_cast<Eigen::Index>(m_));
    for (std::size_t slot = 0; slot < m_; ++slot) {
      for_column(head_[slot], [&](std::size_t r, double v) {
        basis(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(slot)) = v;
      });
    }
    lu_.compute(basis);
    return lu_.rcond() > 1e-14;
  }

  void compute_basic_values() {
    Eigen::VectorXd rhs = Eigen::Map<const Eigen::VectorXd>(b_.data(), static_cast<Eigen::Index>(m_));
    for (std::size_t j = 0; j < total_; ++j) {
      if (state_[j] != VarState::Basic && x_[j] != 0.0) {
        for_column(j, [&](std::size_t r, double v) { rhs(static_cast<Eigen::Index>(r)) -= v * x_[j]; });
      }
    }
    const Eigen::VectorXd xb = lu_.solve(rhs);
    for (std::size_t slot = 0; slot < m_; ++slot) x_[head_[slot]] = xb(static_cast<Eigen::Index>(slot));
  }

  double phase_cost(std::size_t j, int phase) const {
    if (phase == 1) return j >= first_art_ ? 1.0 : 0.0;
    if (j >= n_) return 0.0;
    return program_.sense() == Sense::Maximize ? -program_.objective()[j] : program_.objective()[j];
  }

  void compute_duals(int phase) {
    Eigen::VectorXd cb(static_cast<Eigen::Index>(m_));
    for (std::size_t slot = 0; slot < m_; ++slot) cb(static_cast<Eigen::Index>(slot)) = phase_cost(head_[slot], phase);
    const Eigen::VectorXd pi = lu_.transpose().solve(cb);
    pi_.assign(pi.data(), pi.data() + m_);
  }

  double reduced_cost(std::size_t j, int phase) const {
    double d = phase_cost(j, phase);
    for_column(j, [&](std::size_t r, double v) { d -= pi_[r] * v; });
    return d;
  }

  Status iterate(int phase) {
    const std::size_t limit = (phase == 1) ? total_ : first_art_;
    while (true) {
      if (iterations_ >= opt_.max_iterations) {
        message_ = "iteration limit reached";
        return Status::IterationLimit;
      }
      if (!factor()) {
        message_ = "singular basis";
        return Status::NumericalFailure;
      }
      compute_basic_values();
      compute_duals(phase);

      // Pricing.
      std::size_t entering = total_;
      double best = 0.0;
      int dir = 0;
      for (std::size_t j = 0; j < limit; ++j) {
        const VarState st = state_[j];
        if (st == VarState::Basic || lo_[j] == hi_[j]) continue;
        const double d = reduced_cost(j, phase);
        int jdir = 0;
        if (st == VarState::AtLower && d < -opt_.opt_tol) jdir = 1;
        else if (st == VarState::AtUpper && d > opt_.opt_tol) jdir = -1;
        else if (st == VarState::FreeZero && std::abs(d) > opt_.opt_tol) jdir = d < 0.0 ? 1 : -1;
        if (jdir == 0) continue;
        if (bland_) {
          entering = j;
          dir = jdir;
          break;
        }
        if (std::abs(d) > best) {
          best = std::abs(d);
          entering = j;
          dir = jdir;
        }
      }
      if (entering == total_) return Status::Optimal;

      // Column in basis coordinates.
      Eigen::VectorXd col = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m_));
      for_column(entering, [&](std::size_t r, double v) { col(static_cast<Eigen::Index>(r)) = v; });
      const Eigen::VectorXd alpha = lu_.solve(col);

      // Ratio test.
      double t_min = kInf;
      for (std::size_t slot = 0; slot < m_; ++slot) {
        const double a = alpha(static_cast<Eigen::Index>(slot));
        if (std::abs(a) < opt_.pivot_tol) continue;
        const std::size_t bv = head_[slot];
        const double delta = -dir * a;
        double t = kInf;
        if (delta < 0.0 && std::isfinite(lo_[bv])) t = std::max(0.0, (x_[bv] - lo_[bv]) / -delta);
        if (delta > 0.0 && std::isfinite(hi_[bv])) t = std::max(0.0, (hi_[bv] - x_[bv]) / delta);
        t_min = std::min(t_min, t);
      }
      const double flip = hi_[entering] - lo_[entering];
      if (!std::isfinite(t_min) && !std::isfinite(flip)) {
        message_ = "unbounded ray";
        return phase == 1 ? Status::NumericalFailure : Status::Unbounded;
      }

      ++iterations_;
      if (std::isfinite(flip) && flip <= t_min) {
        state_[entering] = (state_[entering] == VarState::AtLower) ? VarState::AtUpper : VarState::AtLower;
        x_[entering] = (state_[entering] == VarState::AtLower) ? lo_[entering] : hi_[entering];
        continue;
      }

      // Among near-ties pick the largest pivot, or the lowest index under Bland.
      const double tie = t_min + 1e-12 * std::max(1.0, t_min);
      std::size_t leave_slot = m_;
      double best_pivot = 0.0;
      for (std::size_t slot = 0; slot < m_; ++slot) {
        const double a = alpha(static_cast<Eigen::Index>(slot));
        if (std::abs(a) < opt_.pivot_tol) continue;
        const std::size_t bv = head_[slot];
        const double delta = -dir * a;
        double t = kInf;
        if (delta < 0.0 && std::isfinite(lo_[bv])) t = std::max(0.0, (x_[bv] - lo_[bv]) / -delta);
        if (delta > 0.0 && std::isfinite(hi_[bv])) t = std::max(0.0, (hi_[bv] - x_[bv]) / delta);
        if (t > tie) continue;
        if (bland_) {
          if (leave_slot == m_ || bv < head_[leave_slot]) leave_slot = slot;
        } else if (std::abs(a) > best_pivot) {
          best_pivot = std::abs(a);
          leave_slot = slot;
        }
      }

      if (t_min <= 1e-12) {
        ++degenerate_total_;
        if (++degenerate_in_phase_ >= opt_.bland_after && !bland_) {
          bland_ = true;
          bland_ever_ = true;
        }
      }

      const std::size_t leaving = head_[leave_slot];
      const double delta = -dir * alpha(static_cast<Eigen::Index>(leave_slot));
      if (delta < 0.0) {
        state_[leaving] = VarState::AtLower;
        x_[leaving] = lo_[leaving];
      } else {
        state_[leaving] = VarState::AtUpper;
        x_[leaving] = hi_[leaving];
      }
      state_[entering] = VarState::Basic;
      head_[leave_slot] = entering;
    }
  }

  LpSolution finish(Status st, std::string msg) {
    LpSolution sol;
    sol.status = st;
    sol.message = std::move(msg);
    sol.iterations = iterations_;
    sol.degenerate_pivots = degenerate_total_;
    sol.bland_engaged = bland_ever_;
    if (st != Status::Optimal) return sol;

    sol.primal.assign(x_.begin(), x_.begin() + static_cast<std::ptrdiff_t>(n_));
    const double sign = program_.sense() == Sense::Maximize ? -1.0 : 1.0;
    sol.duals.resize(m_);
    for (std::size_t r = 0; r < m_; ++r) sol.duals[r] = sign * pi_[r] * scale_[r];
    certify(program_, a_, sol, opt_.feas_tol);
    if (sol.primal_residual > 1e3 * opt_.feas_tol || sol.dual_residual > 1e3 * opt_.feas_tol) {
      sol.status = Status::NumericalFailure;
      sol.message = "residuals exceed tolerance after the final basis (primal " +
                    std::to_string(sol.primal_residual) + ", dual " + std::to_string(sol.dual_residual) + ")";
    }
    return sol;
  }
};

}  // namespace

LpSolution solve(const LinearProgram& program, const LpOptions& options) {
  Simplex simplex(program, options);
  return simplex.run();
}

LinearProgram dualize(const LinearProgram& program) {
  const bool maximize = program.sense() == Sense::Maximize;
  LinearProgram dual(maximize ? Sense::Minimize : Sense::Maximize);
  for (std::size_t k = 0; k < program.num_constraints(); ++k) {
    double lo = -kInf, hi = kInf;
    switch (program.relations()[k]) {
      case Relation::GreaterEqual: (maximize ? hi : lo) = 0.0; break;
      case Relation::LessEqual: (maximize ? lo : hi) = 0.0; break;
      case Relation::Equal: break;
    }
    dual.add_variable(program.rhs()[k], lo, hi);
  }
  for (std::size_t j = 0; j < program.num_variables(); ++j) {
    const double lo = program.lower()[j];
    const double hi = program.upper()[j];
    Relation rel;
    if (lo == 0.0 && hi == kInf) {
      rel = maximize ? Relation::GreaterEqual : Relation::LessEqual;
    } else if (lo == -kInf && hi == 0.0) {
      rel = maximize ? Relation::LessEqual : Relation::GreaterEqual;
    } else if (lo == -kInf && hi == kInf) {
      rel = Relation::Equal;
    } else {
      throw std::invalid_argument("dualize: variable " + std::to_string(j) + " has unsupported bounds");
    }
    dual.add_constraint(rel, program.objective()[j]);
  }
  for (const auto& e : program.canonical_triplets()) dual.add_coefficient(e.col, e.row, e.value);
  return dual;
}

LpSolution solve_via_dual(const LinearProgram& program, const LpOptions& options) {
  const LinearProgram dual = dualize(program);
  const LpSolution ds = solve(dual, options);
  LpSolution sol;
  sol.iterations = ds.iterations;
  sol.degenerate_pivots = ds.degenerate_pivots;
  sol.bland_engaged = ds.bland_engaged;
  switch (ds.status) {
    case Status::Optimal: sol.status = Status::Optimal; break;
    case Status::Unbounded: sol.status = Status::Infeasible; break;
    case Status::Infeasible: sol.status = Status::Unbounded; break;  // or infeasible; not distinguished
    default: sol.status = ds.status; break;
  }
  sol.message = ds.message;
  if (sol.status != Status::Optimal) return sol;
  sol.primal = ds.duals;
  sol.duals = ds.primal;
  certify(program, compress(program), sol, options.feas_tol);
  return sol;
}

}  // namespace riskmdp::lp
