#include "riskmdp/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>

namespace riskmdp {

double kl_divergence(std::span<const double> q, std::span<const double> p) {
  if (q.size() != p.size()) throw ModelError("kl_divergence: length mismatch");
  double d = 0.0;
  for (std::size_t j = 0; j < q.size(); ++j) {
    if (q[j] <= 0.0) continue;
    if (p[j] <= 0.0) return std::numeric_limits<double>::infinity();
    d += q[j] * std::log(q[j] / p[j]);
  }
  // Rounding can leave a tiny negative value when q == p.
  return std::max(d, 0.0);
}

namespace {

void check_q_row(const MdpModel& model, std::size_t i, std::span<const double> qrow) {
  if (i >= model.num_states()) throw ModelError("state index out of range");
  if (qrow.size() != model.num_states()) throw ModelError("kernel row has the wrong length");
  if (!is_distribution(qrow, 1e-9)) {
    throw ModelError("kernel row at state '" + model.state_label(i) + "' is not a distribution");
  }
  for (std::size_t j = 0; j < qrow.size(); ++j) {
    if (qrow[j] > 0.0 && !model.in_union_support(i, j)) {
      throw ModelError("kernel row at state '" + model.state_label(i) + "' puts mass on '" +
                       model.state_label(j) + "' outside the union support");
    }
  }
}

ExtendedReal tilde_cost_unchecked(const MdpModel& model, std::size_t i, std::span<const double> qrow,
                                  std::size_t u) {
  const Eigen::RowVectorXd prow = model.kernel(u).row(static_cast<Eigen::Index>(i));
  const double d = kl_divergence(qrow, std::span<const double>(prow.data(), static_cast<std::size_t>(prow.size())));
  if (!std::isfinite(d)) return ExtendedReal::neg_inf();
  return ExtendedReal(model.cost(i, u) - d);
}

}  // namespace

ExtendedReal tilde_cost(const MdpModel& model, std::size_t i, std::span<const double> qrow, std::size_t u) {
  check_q_row(model, i, qrow);
  if (u >= model.num_actions()) throw ModelError("action index out of range");
  return tilde_cost_unchecked(model, i, qrow, u);
}

ExtendedReal tilde_cost(const MdpModel& model, std::size_t i, std::span<const double> qrow,
                        const StationaryPolicy& policy) {
  check_q_row(model, i, qrow);
  ExtendedReal total(0.0);
  for (std::size_t u = 0; u < model.num_actions(); ++u) {
    total += tilde_cost_unchecked(model, i, qrow, u).weighted(policy(i, u));
  }
  return total;
}

// Support-graph structure ------------------------------------------------------

namespace {

struct Components {
  std::vector<std::size_t> id;                  // component of each state
  std::vector<std::vector<std::size_t>> members;
};

// Tarjan's algorithm on the graph i -> j iff kernel(i, j) > 0.
Components strongly_connected(const Eigen::MatrixXd& kernel) {
  const auto n = static_cast<std::size_t>(kernel.rows());
  constexpr std::size_t kUnset = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> index(n, kUnset), low(n, 0);
  std::vector<bool> on_stack(n, false);
  std::vector<std::size_t> stack;
  Components comps;
  comps.id.assign(n, kUnset);
  std::size_t counter = 0;

  std::function<void(std::size_t)> visit = [&](std::size_t v) {
    index[v] = low[v] = counter++;
    stack.push_back(v);
    on_stack[v] = true;
    for (std::size_t w = 0; w < n; ++w) {
      if (!(kernel(static_cast<Eigen::Index>(v), static_cast<Eigen::Index>(w)) > 0.0)) continue;
      if (index[w] == kUnset) {
        visit(w);
        low[v] = std::min(low[v], low[w]);
      } else if (on_stack[w]) {
        low[v] = std::min(low[v], index[w]);
      }
    }
    if (low[v] == index[v]) {
      std::vector<std::size_t> members;
      std::size_t w;
      do {
        w = stack.back();
        stack.pop_back();
        on_stack[w] = false;
        comps.id[w] = comps.members.size();
        members.push_back(w);
      } while (w != v);
      std::sort(members.begin(), members.end());
      comps.members.push_back(std::move(members));
    }
  };
  for (std::size_t v = 0; v < n; ++v) {
    if (index[v] == kUnset) visit(v);
  }
  return comps;
}

std::vector<std::size_t> reachable_from(const Eigen::MatrixXd& kernel, const std::vector<std::size_t>& sources) {
  const auto n = static_cast<std::size_t>(kernel.rows());
  std::vector<bool> seen(n, false);
  std::vector<std::size_t> frontier = sources;
  for (auto s : sources) seen[s] = true;
  while (!frontier.empty()) {
    const std::size_t v = frontier.back();
    frontier.pop_back();
    for (std::size_t w = 0; w < n; ++w) {
      if (!seen[w] && kernel(static_cast<Eigen::Index>(v), static_cast<Eigen::Index>(w)) > 0.0) {
        seen[w] = true;
        frontier.push_back(w);
      }
    }
  }
  std::vector<std::size_t> out;
  for (std::size_t v = 0; v < n; ++v) {
    if (seen[v]) out.push_back(v);
  }
  return out;
}

}  // namespace

std::vector<std::vector<std::size_t>> recurrent_classes(const Eigen::MatrixXd& kernel) {
  const Components comps = strongly_connected(kernel);
  std::vector<std::vector<std::size_t>> closed;
  for (std::size_t c = 0; c < comps.members.size(); ++c) {
    bool is_closed = true;
    for (std::size_t v : comps.members[c]) {
      for (Eigen::Index w = 0; w < kernel.cols() && is_closed; ++w) {
        if (kernel(static_cast<Eigen::Index>(v), w) > 0.0 && comps.id[static_cast<std::size_t>(w)] != c) is_closed = false;
      }
    }
    if (is_closed) closed.push_back(comps.members[c]);
  }
  std::sort(closed.begin(), closed.end());
  return closed;
}

// Growth rates ---------------------------------------------------------------------

namespace {

struct ComponentRun {
  std::vector<double> rates;  // aligned with the targets
  std::size_t iterations = 0;
  bool converged = false;
};

// Power iteration of M restricted to `domain`, tracking the log growth of
// the `targets` (positions inside `domain`). Every domain state is
// reachable from the targets, so their components never underflow
// relative to the normalization.
ComponentRun run_component(const Eigen::MatrixXd& m, const std::vector<std::size_t>& domain,
                           const std::vector<std::size_t>& targets, const GrowthOptions& opt) {
  const auto d = static_cast<Eigen::Index>(domain.size());
  Eigen::MatrixXd sub(d, d);
  for (Eigen::Index a = 0; a < d; ++a) {
    for (Eigen::Index b = 0; b < d; ++b) {
      sub(a, b) = m(static_cast<Eigen::Index>(domain[a]), static_cast<Eigen::Index>(domain[b]));
    }
  }
  const std::size_t t = targets.size();
  const std::size_t w = std::max<std::size_t>(opt.window, 1);
  // Ring buffer of damped log-values, one slot per iteration.
  std::vector<std::vector<double>> ring(w + 1, std::vector<double>(t, 0.0));
  std::vector<double> prev_log(t, 0.0), rate(t, 0.0), prev_rate(t, 0.0);

  Eigen::VectorXd x = Eigen::VectorXd::Ones(d);
  double log_scale = 0.0;
  ComponentRun run;
  run.rates.assign(t, 0.0);
  for (std::size_t k = 1; k <= opt.max_iters; ++k) {
    Eigen::VectorXd y = sub * x;
    const double mx = y.maxCoeff();
    x = y / mx;
    log_scale += std::log(mx);
    auto& slot = ring[k % (w + 1)];
    for (std::size_t a = 0; a < t; ++a) {
      const double cur = log_scale + std::log(x(static_cast<Eigen::Index>(targets[a])));
      // Average of consecutive iterates in log space damps period-2 oscillation.
      slot[a] = 0.5 * (cur + prev_log[a]);
      prev_log[a] = cur;
    }
    run.iterations = k;
    if (k < w + 1) continue;
    const auto& old = ring[(k - w) % (w + 1)];
    double change = 0.0;
    for (std::size_t a = 0; a < t; ++a) {
      prev_rate[a] = rate[a];
      rate[a] = (slot[a] - old[a]) / static_cast<double>(w);
      change = std::max(change, std::abs(rate[a] - prev_rate[a]));
    }
    run.rates = rate;
    if (k > w + 1 && change < opt.rate_tol) {
      run.converged = true;
      break;
    }
  }
  return run;
}

}  // namespace

GrowthRates growth_rate(const Eigen::MatrixXd& kernel, const Eigen::VectorXd& cost, const GrowthOptions& options) {
  const auto s = kernel.rows();
  if (kernel.cols() != s || cost.size() != s) throw ModelError("growth_rate: dimension mismatch");
  const double shift = cost.maxCoeff();
  const Eigen::MatrixXd m = (cost.array() - shift).exp().matrix().asDiagonal() * kernel;

  GrowthRates out;
  out.lambda = Eigen::VectorXd::Zero(s);
  out.converged = true;
  const Components comps = strongly_connected(kernel);
  for (const auto& members : comps.members) {
    const std::vector<std::size_t> domain = reachable_from(kernel, members);
    std::vector<std::size_t> targets;
    for (std::size_t v : members) {
      targets.push_back(static_cast<std::size_t>(std::lower_bound(domain.begin(), domain.end(), v) - domain.begin()));
    }
    const ComponentRun run = run_component(m, domain, targets, options);
    for (std::size_t a = 0; a < members.size(); ++a) {
      out.lambda(static_cast<Eigen::Index>(members[a])) = run.rates[a] + shift;
    }
    out.iterations = std::max(out.iterations, run.iterations);
    out.converged = out.converged && run.converged;
  }
  out.lambda_max = out.lambda.maxCoeff();
  return out;
}

GrowthRates growth_rate(const MdpModel& model, const StationaryPolicy& policy, const GrowthOptions& options) {
  const PolicyChain chain = apply_policy(model, policy);
  return growth_rate(chain.kernel, chain.cost, options);
}

BruteForceResult brute_force_lambda_star(const MdpModel& model, const GrowthOptions& options, std::uint64_t guard) {
  const std::size_t s = model.num_states();
  const std::size_t a = model.num_actions();
  std::uint64_t count = 1;
  for (std::size_t i = 0; i < s; ++i) {
    if (count > guard / a + 1) {
      count = guard + 1;
      break;
    }
    count *= a;
  }
  if (count > guard) {
    throw GuardError("pure-policy enumeration of " + std::to_string(a) + "^" + std::to_string(s) +
                     " policies exceeds the guard of " + std::to_string(guard));
  }

  BruteForceResult best;
  best.value = std::numeric_limits<double>::infinity();
  best.policies = count;
  std::vector<std::size_t> choice(s, 0);
  for (std::uint64_t n = 0; n < count; ++n) {
    const PurePolicy policy(choice);
    const GrowthRates g = growth_rate(model, policy.to_stationary(a), options);
    best.all_converged = best.all_converged && g.converged;
    if (g.lambda_max < best.value - 1e-12) {
      best.value = g.lambda_max;
      best.argmin = policy;
      best.per_state = g.lambda;
    }
    // Odometer with the last state varying fastest: lexicographic order.
    for (std::size_t i = s; i-- > 0;) {
      if (++choice[i] < a) break;
      choice[i] = 0;
    }
  }
  return best;
}

// Cesaro limit ------------------------------------------------------------------

Eigen::MatrixXd cesaro_limit(const Eigen::MatrixXd& kernel) {
  const auto s = kernel.rows();
  const auto classes = recurrent_classes(kernel);
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(s, s);

  std::vector<bool> recurrent(static_cast<std::size_t>(s), false);
  std::vector<Eigen::VectorXd> invariant;
  for (const auto& cls : classes) {
    const auto c = static_cast<Eigen::Index>(cls.size());
    Eigen::MatrixXd sys(c, c);
    for (Eigen::Index a = 0; a < c; ++a) {
      for (Eigen::Index b = 0; b < c; ++b) {
        sys(b, a) = kernel(static_cast<Eigen::Index>(cls[a]), static_cast<Eigen::Index>(cls[b])) - (a == b ? 1.0 : 0.0);
      }
    }
    sys.row(c - 1).setOnes();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(c);
    rhs(c - 1) = 1.0;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(sys);
    if (!lu.isInvertible()) {
      std::string members;
      for (auto v : cls) members += (members.empty() ? "" : ",") + std::to_string(v);
      throw SolverError("singular invariant-distribution system for recurrent class {" + members + "}");
    }
    Eigen::VectorXd pi = lu.solve(rhs);
    pi = pi.cwiseMax(0.0);
    pi /= pi.sum();
    for (Eigen::Index a = 0; a < c; ++a) {
      recurrent[cls[a]] = true;
      for (Eigen::Index b = 0; b < c; ++b) q(static_cast<Eigen::Index>(cls[a]), static_cast<Eigen::Index>(cls[b])) = pi(b);
    }
    Eigen::VectorXd full = Eigen::VectorXd::Zero(s);
    for (Eigen::Index b = 0; b < c; ++b) full(static_cast<Eigen::Index>(cls[b])) = pi(b);
    invariant.push_back(std::move(full));
  }

  std::vector<std::size_t> transient;
  for (std::size_t v = 0; v < static_cast<std::size_t>(s); ++v) {
    if (!recurrent[v]) transient.push_back(v);
  }
  if (transient.empty()) return q;

  const auto t = static_cast<Eigen::Index>(transient.size());
  const auto k = static_cast<Eigen::Index>(classes.size());
  Eigen::MatrixXd lhs = Eigen::MatrixXd::Identity(t, t);
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(t, k);
  for (Eigen::Index a = 0; a < t; ++a) {
    const auto i = static_cast<Eigen::Index>(transient[a]);
    for (Eigen::Index b = 0; b < t; ++b) lhs(a, b) -= kernel(i, static_cast<Eigen::Index>(transient[b]));
    for (Eigen::Index c = 0; c < k; ++c) {
      for (auto j : classes[c]) rhs(a, c) += kernel(i, static_cast<Eigen::Index>(j));
    }
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(lhs);
  if (!lu.isInvertible()) {
    throw SolverError("singular absorption system over the transient states");
  }
  const Eigen::MatrixXd absorb = lu.solve(rhs);
  for (Eigen::Index a = 0; a < t; ++a) {
    Eigen::VectorXd row = Eigen::VectorXd::Zero(s);
    for (Eigen::Index c = 0; c < k; ++c) row += std::max(absorb(a, c), 0.0) * invariant[c];
    q.row(static_cast<Eigen::Index>(transient[a])) = row.transpose() / row.sum();
  }
  return q;
}

PayoffVector game_payoff(const MdpModel& model, const KernelMatrix& q, const StationaryPolicy& v) {
  const std::size_t s = model.num_states();
  if (q.size() != s) throw ModelError("game_payoff: kernel size mismatch");
  if (v.num_states() != s || v.num_actions() != model.num_actions()) {
    throw ModelError("game_payoff: policy dimensions do not match the model");
  }
  std::vector<ExtendedReal> reward(s);
  for (std::size_t i = 0; i < s; ++i) reward[i] = tilde_cost(model, i, q.row(i), v);

  const Eigen::MatrixXd cesaro = cesaro_limit(q.matrix());
  PayoffVector out;
  out.phi.resize(s);
  out.phi_max = ExtendedReal::neg_inf();
  for (std::size_t i = 0; i < s; ++i) {
    ExtendedReal total(0.0);
    for (std::size_t j = 0; j < s; ++j) {
      total += reward[j].weighted(cesaro(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
    }
    out.phi[i] = total;
    out.phi_max = max(out.phi_max, total);
  }
  return out;
}

}  // namespace riskmdp
