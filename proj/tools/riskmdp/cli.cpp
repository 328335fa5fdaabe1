#include "cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "riskmdp/dp_verify.hpp"
#include "riskmdp/errors.hpp"
#include "riskmdp/game.hpp"
#include "riskmdp/generators.hpp"
#include "riskmdp/spectral.hpp"

namespace riskmdp::cli {

namespace {

using ojson = nlohmann::ordered_json;
using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

ojson by_state(const MdpModel& m, const Eigen::VectorXd& x) {
  ojson o = ojson::object();
  for (std::size_t i = 0; i < m.num_states(); ++i) o[m.state_label(i)] = x(static_cast<Eigen::Index>(i));
  return o;
}

ojson pure_json(const MdpModel& m, const PurePolicy& v) {
  ojson o = ojson::object();
  for (std::size_t i = 0; i < m.num_states(); ++i) o[m.state_label(i)] = m.action_label(v[i]);
  return o;
}

ojson mixed_json(const MdpModel& m, const StationaryPolicy& y) {
  ojson o = ojson::object();
  for (std::size_t i = 0; i < m.num_states(); ++i) {
    ojson row = ojson::object();
    for (std::size_t u = 0; u < m.num_actions(); ++u) row[m.action_label(u)] = y(i, u);
    o[m.state_label(i)] = std::move(row);
  }
  return o;
}

ojson matrix_json(const Eigen::MatrixXd& a) {
  ojson rows = ojson::array();
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    ojson row = ojson::array();
    for (Eigen::Index j = 0; j < a.cols(); ++j) row.push_back(a(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

ojson vector_json(const Eigen::VectorXd& x) {
  ojson a = ojson::array();
  for (Eigen::Index i = 0; i < x.size(); ++i) a.push_back(x(i));
  return a;
}

std::string pure_summary(const MdpModel& m, const PurePolicy& v) {
  std::ostringstream os;
  for (std::size_t i = 0; i < m.num_states(); ++i) {
    os << (i ? ", " : "") << m.state_label(i) << " -> " << m.action_label(v[i]);
  }
  return os.str();
}

ojson header(const std::string& command, const std::vector<std::string>& args) {
  ojson rep;
  rep["report_version"] = kReportVersion;
  rep["command"] = command;
  rep["argv"] = args;
  return rep;
}

void emit(const ojson& rep, const std::string& path, std::ostream& out) {
  if (path.empty()) return;
  if (path == "-") {
    out << rep.dump(2) << "\n";
    return;
  }
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write report to '" + path + "'");
  f << rep.dump(2) << "\n";
}

ojson certificate_json(const MdpModel& m, const DpCertificate& c, double tol) {
  ojson o;
  o["max_dp1"] = c.dp.max_dp1();
  o["max_dp2"] = c.dp.max_dp2();
  o["max_twisted"] = c.twisted.max_residual();
  o["tol"] = tol;
  o["passes"] = c.passes(tol);
  o["dp1"] = by_state(m, c.dp.dp1);
  o["dp2"] = by_state(m, c.dp.dp2);
  o["star2"] = by_state(m, c.twisted.star2);
  o["star3"] = by_state(m, c.twisted.star3);
  ojson levels = ojson::array();
  for (const auto& level : c.partition.levels) {
    ojson l = ojson::array();
    for (std::size_t i : level) l.push_back(m.state_label(i));
    levels.push_back(std::move(l));
  }
  o["levels"] = std::move(levels);
  ojson flagged = ojson::array();
  for (std::size_t i : c.dp.flagged) flagged.push_back(m.state_label(i));
  o["flagged"] = std::move(flagged);
  return o;
}

// Largest residual with its equation and state, for error messages.
std::string worst_residual(const MdpModel& m, const DpCertificate& c) {
  std::string what = "none";
  double worst = -1.0;
  const auto scan = [&](const Eigen::VectorXd& r, const char* name, bool exp_mapped) {
    for (Eigen::Index i = 0; i < r.size(); ++i) {
      const double v = exp_mapped ? std::log1p(r(i)) : r(i);
      if (v > worst) {
        worst = v;
        std::ostringstream os;
        os << name << " at state '" << m.state_label(static_cast<std::size_t>(i)) << "' (residual " << r(i) << ")";
        what = os.str();
      }
    }
  };
  scan(c.dp.dp1, "DP-1", false);
  scan(c.dp.dp2, "DP-2", false);
  scan(c.twisted.star1_local, "DP*1", true);
  scan(c.twisted.star2, "DP*2", true);
  scan(c.twisted.star3, "DP*3", true);
  return what;
}

// solve ------------------------------------------------------------------------

struct SolveArgs {
  std::string model;
  std::string out;
  std::string method = "grid";
  unsigned n_start = 2;
  unsigned n_max = 8;
  double stop_tol = 1e-4;
  double inner_tol = 1e-6;
  std::size_t max_rounds = 200;
  std::uint64_t grid_guard = kDefaultGridGuard;
  std::uint64_t policy_guard = kDefaultPolicyGuard;
};

int cmd_solve(const SolveArgs& a, const std::vector<std::string>& argv, std::ostream& out) {
  const auto t_all = Clock::now();
  ojson timings = ojson::object();
  auto t = Clock::now();
  const MdpModel model = load_model(a.model);
  timings["load"] = ms_since(t);

  ojson rep = header("solve", argv);
  rep["model_digest"] = model_digest(model);
  rep["model"] = {{"states", model.state_labels()}, {"actions", model.action_labels()}};
  rep["settings"] = {{"method", a.method},       {"n_start", a.n_start},       {"n_max", a.n_max},
                     {"stop_tol", a.stop_tol},   {"inner_tol", a.inner_tol},   {"max_rounds", a.max_rounds},
                     {"grid_guard", a.grid_guard}, {"policy_guard", a.policy_guard}};

  GameOptions game;
  game.grid_guard = a.grid_guard;
  GameSolution g;
  ojson trace = ojson::array();
  ojson sequence;
  t = Clock::now();
  if (a.method == "congen") {
    CongenOptions opt;
    opt.inner_tol = a.inner_tol;
    opt.max_rounds = a.max_rounds;
    opt.game = game;
    g = solve_congen(model, opt);
    sequence = {{"rounds", g.rounds}, {"certified", g.certified}};
  } else {
    if (a.n_start > a.n_max) throw ModelError("--n-start must not exceed --n-max");
    SequenceOptions opt;
    opt.n_start = a.n_start;
    opt.n_max = a.n_max;
    opt.stop_tol = a.stop_tol;
    opt.game = game;
    ConvergenceReport cr = solve_sequence(model, opt);
    for (const auto& s : cr.solutions) {
      trace.push_back({{"n", s.resolution},
                       {"beta", vector_json(s.value)},
                       {"sum_beta", s.objective},
                       {"sum_w", s.dual_objective},
                       {"duality_gap", s.duality_gap},
                       {"dual_identity_residual", s.dual_identity_residual},
                       {"constraints", s.constraint_count},
                       {"lp_iterations", s.lp_iterations}});
    }
    sequence = {{"stop_reason", cr.stop_reason},
                {"max_decrease", cr.max_decrease},
                {"limit_violation", cr.limit_violation},
                {"limit_slack", cr.limit_slack},
                {"limit_feasible", cr.limit_feasible}};
    g = cr.final_solution();
  }
  timings["solve"] = ms_since(t);

  const double lambda_bar = g.value.maxCoeff();
  rep["trace"] = std::move(trace);
  rep["sequence"] = std::move(sequence);

  ojson sol;
  sol["resolution"] = g.resolution;
  sol["lambda_bar"] = lambda_bar;
  sol["value"] = by_state(model, g.value);
  sol["potentials"] = by_state(model, g.potentials);
  sol["pure_minimizer"] = pure_json(model, g.pure_minimizer);
  sol["minimizer"] = mixed_json(model, g.minimizer);
  sol["maximizer"] = matrix_json(g.maximizer.matrix());
  ojson sources = ojson::object();
  for (std::size_t i = 0; i < model.num_states(); ++i) sources[model.state_label(i)] = to_string(g.maximizer_source[i]);
  sol["maximizer_source"] = std::move(sources);
  sol["constraints"] = g.constraint_count;
  sol["duality_gap"] = g.duality_gap;
  sol["dual_identity_residual"] = g.dual_identity_residual;
  sol["primal_violation"] = g.primal_violation;
  sol["certified"] = g.certified;
  rep["solution"] = std::move(sol);

  t = Clock::now();
  const GrowthRates pv = growth_rate(model, g.pure_minimizer.to_stationary(model.num_actions()));
  rep["policy_value"] = {{"lambda_max", pv.lambda_max}, {"per_state", by_state(model, pv.lambda)}, {"converged", pv.converged}};
  try {
    const BruteForceResult bf = brute_force_lambda_star(model, {}, a.policy_guard);
    rep["oracle"] = {{"value", bf.value},
                     {"argmin", pure_json(model, bf.argmin)},
                     {"per_state", by_state(model, bf.per_state)},
                     {"policies", bf.policies},
                     {"converged", bf.all_converged},
                     {"gap", std::abs(lambda_bar - bf.value)}};
  } catch (const GuardError& e) {
    rep["oracle"] = {{"skipped", e.what()}};
  }
  timings["oracle"] = ms_since(t);

  t = Clock::now();
  try {
    const DpCertificate cert = certify(model, g.value, g.potentials);
    rep["certificate"] = certificate_json(model, cert, 1e-3);
  } catch (const VerificationError& e) {
    rep["certificate"] = {{"error", e.what()}};
  }
  timings["certify"] = ms_since(t);
  timings["total"] = ms_since(t_all);
  rep["timings_ms"] = std::move(timings);

  out << std::setprecision(10);
  out << "lambda_bar = " << lambda_bar << "\n";
  out << "policy: " << pure_summary(model, g.pure_minimizer) << "\n";
  if (rep["oracle"].contains("value")) out << "oracle = " << rep["oracle"]["value"].get<double>() << "\n";
  emit(rep, a.out, out);
  return kOk;
}

// oracle -------------------------------------------------------------------------

struct OracleArgs {
  std::string model;
  std::string policy;
  std::string out;
  std::uint64_t policy_guard = kDefaultPolicyGuard;
};

int cmd_oracle(const OracleArgs& a, const std::vector<std::string>& argv, std::ostream& out) {
  const MdpModel model = load_model(a.model);
  ojson rep = header("oracle", argv);
  rep["model_digest"] = model_digest(model);
  rep["model"] = {{"states", model.state_labels()}, {"actions", model.action_labels()}};
  out << std::setprecision(10);
  if (!a.policy.empty()) {
    const StationaryPolicy policy = load_policy(model, a.policy);
    const GrowthRates g = growth_rate(model, policy);
    rep["policy"] = mixed_json(model, policy);
    rep["lambda"] = by_state(model, g.lambda);
    rep["lambda_max"] = g.lambda_max;
    rep["converged"] = g.converged;
    for (std::size_t i = 0; i < model.num_states(); ++i) {
      out << "lambda[" << model.state_label(i) << "] = " << g.lambda(static_cast<Eigen::Index>(i)) << "\n";
    }
  } else {
    const BruteForceResult bf = brute_force_lambda_star(model, {}, a.policy_guard);
    rep["value"] = bf.value;
    rep["argmin"] = pure_json(model, bf.argmin);
    rep["lambda"] = by_state(model, bf.per_state);
    rep["policies"] = bf.policies;
    rep["converged"] = bf.all_converged;
    out << "lambda_bar = " << bf.value << "\n";
    out << "policy: " << pure_summary(model, bf.argmin) << "\n";
  }
  emit(rep, a.out, out);
  return kOk;
}

// verify ---------------------------------------------------------------------------

struct VerifyArgs {
  std::string model;
  std::string solution;
  std::string out;
  double tol = 1e-3;
  double level_tol = kDefaultLevelTol;
};

int cmd_verify(const VerifyArgs& a, const std::vector<std::string>& argv, std::ostream& out, std::ostream& err) {
  const MdpModel model = load_model(a.model);
  std::ifstream f(a.solution);
  if (!f) throw ModelError("cannot open solution report '" + a.solution + "'");
  nlohmann::json report;
  try {
    report = nlohmann::json::parse(f);
  } catch (const nlohmann::json::exception& e) {
    throw ModelError("solution report is not valid JSON: " + std::string(e.what()));
  }
  if (report.contains("model_digest") && report["model_digest"] != model_digest(model)) {
    throw ModelError("solution report was produced for a different model");
  }
  if (!report.contains("solution")) throw ModelError("report has no 'solution' block");
  const auto& sol = report["solution"];
  const auto s = static_cast<Eigen::Index>(model.num_states());
  Eigen::VectorXd phi(s), v(s);
  try {
    for (std::size_t i = 0; i < model.num_states(); ++i) {
      phi(static_cast<Eigen::Index>(i)) = sol.at("value").at(model.state_label(i)).get<double>();
      v(static_cast<Eigen::Index>(i)) = sol.at("potentials").at(model.state_label(i)).get<double>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw ModelError("solution block is incomplete: " + std::string(e.what()));
  }

  ojson rep = header("verify", argv);
  rep["model_digest"] = model_digest(model);
  DpCertificate cert;
  try {
    cert = certify(model, phi, v, a.level_tol);
  } catch (const VerificationError& e) {
    err << "verification failed: " << e.what() << "\n";
    rep["error"] = e.what();
    emit(rep, a.out, out);
    return kResidualViolation;
  }
  rep["certificate"] = certificate_json(model, cert, a.tol);
  emit(rep, a.out, out);
  out << std::setprecision(6);
  out << "max DP-1 residual = " << cert.dp.max_dp1() << "\n";
  out << "max DP-2 residual = " << cert.dp.max_dp2() << "\n";
  out << "max twisted residual = " << cert.twisted.max_residual() << "\n";
  if (!cert.passes(a.tol)) {
    err << "residual above " << a.tol << ": worst is " << worst_residual(model, cert) << "\n";
    return kResidualViolation;
  }
  return kOk;
}

// example --------------------------------------------------------------------------

struct ExampleArgs {
  double rho = 0.0;
  unsigned n_max = 8;
  std::string out;
};

int cmd_example(const ExampleArgs& a, const std::vector<std::string>& argv, std::ostream& out) {
  const AnalyticExample ex = analytic_example(a.rho);
  ojson rep = header("example", argv);
  rep["rho"] = a.rho;
  rep["analytic"] = {{"phi_star", {ex.phi_star(0), ex.phi_star(1)}},
                     {"q22", ex.q22},
                     {"lambda_bar", ex.lambda_bar},
                     {"interior", ex.interior},
                     {"potential_gap", ex.potential_gap}};
  out << std::setprecision(10);
  out << "phi_star = (" << ex.phi_star(0) << ", " << ex.phi_star(1) << ")\n";
  out << "q22 = " << ex.q22 << "\n";
  out << "lambda_bar = " << ex.lambda_bar << "\n";
  if (std::log(a.rho) > -1.0) {
    const PoissonScan scan = poisson_insolvability(a.rho);
    rep["poisson"] = {{"pairs", scan.pairs},
                      {"satisfying", scan.satisfying},
                      {"min_margin", scan.min_margin},
                      {"analytic_reduction", scan.analytic_reduction},
                      {"insolvable", scan.insolvable()}};
    out << "poisson_insolvable = " << (scan.insolvable() ? "true" : "false") << "\n";
  }

  const MdpModel model = example_model(a.rho);
  SequenceOptions opt;
  opt.n_max = std::max(a.n_max, opt.n_start);
  const ConvergenceReport cr = solve_sequence(model, opt);
  const GameSolution& g = cr.final_solution();
  const double lp = g.value.maxCoeff();
  rep["lp"] = {{"n", g.resolution},
               {"beta", vector_json(g.value)},
               {"lambda_bar", lp},
               {"q22", g.maximizer(1, 1)},
               {"gap", std::abs(lp - ex.lambda_bar)}};
  out << "lp_lambda_bar = " << lp << " (gap " << std::abs(lp - ex.lambda_bar) << ")\n";
  emit(rep, a.out, out);
  return kOk;
}

}  // namespace

std::string model_digest(const MdpModel& model) {
  const std::string text = model_to_json(model).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "fnv1a64:%016llx", static_cast<unsigned long long>(h));
  return buf;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Risk-sensitive MDP solver via KL-penalized ergodic games", "riskmdp"};
  app.require_subcommand(1);

  SolveArgs solve;
  auto* s = app.add_subcommand("solve", "Solve the game LP sequence or run constraint generation");
  s->add_option("--model", solve.model, "Model JSON")->required();
  s->add_option("--n-start", solve.n_start, "First grid resolution")->capture_default_str();
  s->add_option("--n-max", solve.n_max, "Last grid resolution")->capture_default_str();
  s->add_option("--stop-tol", solve.stop_tol, "Stop when successive values move less than this")->capture_default_str();
  s->add_option("--method", solve.method, "grid or congen")->check(CLI::IsMember({"grid", "congen"}))->capture_default_str();
  s->add_option("--inner-tol", solve.inner_tol, "Constraint generation violation tolerance")->capture_default_str();
  s->add_option("--max-rounds", solve.max_rounds, "Constraint generation round limit")->capture_default_str();
  s->add_option("--grid-guard", solve.grid_guard, "Maximum grid rows per state")->capture_default_str();
  s->add_option("--policy-guard", solve.policy_guard, "Maximum pure policies for the oracle block")->capture_default_str();
  s->add_option("--out", solve.out, "Report path ('-' for standard output)");

  OracleArgs oracle;
  auto* o = app.add_subcommand("oracle", "Brute-force growth rates");
  o->add_option("--model", oracle.model, "Model JSON")->required();
  o->add_option("--policy", oracle.policy, "Policy JSON; evaluates that policy only");
  o->add_option("--policy-guard", oracle.policy_guard, "Maximum pure policies")->capture_default_str();
  o->add_option("--out", oracle.out, "Report path ('-' for standard output)");

  VerifyArgs verify;
  auto* v = app.add_subcommand("verify", "Check a solve report against the dynamic-programming equations");
  v->add_option("--model", verify.model, "Model JSON")->required();
  v->add_option("--solution", verify.solution, "Report written by solve")->required();
  v->add_option("--tol", verify.tol, "Residual tolerance")->capture_default_str();
  v->add_option("--level-tol", verify.level_tol, "Value gap separating levels")->capture_default_str();
  v->add_option("--out", verify.out, "Report path ('-' for standard output)");

  ExampleArgs example;
  auto* e = app.add_subcommand("example", "Two-state example: closed forms against a fresh solve");
  e->add_option("--rho", example.rho, "Self-loop probability of state 2")->required();
  e->add_option("--n-max", example.n_max, "Last grid resolution of the LP solve")->capture_default_str();
  e->add_option("--out", example.out, "Report path ('-' for standard output)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& pe) {
    const int code = app.exit(pe, out, err);
    return code == 0 ? kOk : kModelError;
  }

  try {
    if (*s) return cmd_solve(solve, args, out);
    if (*o) return cmd_oracle(oracle, args, out);
    if (*v) return cmd_verify(verify, args, out, err);
    if (*e) return cmd_example(example, args, out);
  } catch (const ModelError& ex) {
    err << "model error: " << ex.what() << "\n";
    return kModelError;
  } catch (const GuardError& ex) {
    err << "guard exceeded: " << ex.what() << "\n";
    return kGuardError;
  } catch (const SolverError& ex) {
    err << "solver failure: " << ex.what() << "\n";
    return kSolverError;
  } catch (const VerificationError& ex) {
    err << "verification error: " << ex.what() << "\n";
    return kSolverError;
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace riskmdp::cli
