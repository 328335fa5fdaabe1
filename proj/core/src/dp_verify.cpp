#include "riskmdp/dp_verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>

#include "riskmdp/errors.hpp"

namespace riskmdp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_finite(const Eigen::VectorXd& x, const char* what) {
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x(i))) throw ModelError(std::string(what) + " has a non-finite entry");
  }
}

}  // namespace

Partition build_partition(const Eigen::VectorXd& phi, double level_tol) {
  require_finite(phi, "value vector");
  const auto n = static_cast<std::size_t>(phi.size());
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return phi(static_cast<Eigen::Index>(a)) < phi(static_cast<Eigen::Index>(b));
  });

  Partition part;
  part.level_of.assign(n, 0);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t i = order[k];
    if (k == 0 || phi(static_cast<Eigen::Index>(i)) - phi(static_cast<Eigen::Index>(order[k - 1])) > level_tol) {
      part.levels.emplace_back();
    }
    part.levels.back().push_back(i);
  }
  for (std::size_t l = 0; l < part.levels.size(); ++l) {
    auto& level = part.levels[l];
    const double lo = phi(static_cast<Eigen::Index>(level.front()));
    const double hi = phi(static_cast<Eigen::Index>(level.back()));
    if (hi - lo > level_tol) {
      std::ostringstream msg;
      msg << "ambiguous level clustering: values from " << lo << " to " << hi << " chain together within "
          << level_tol << " but spread wider than it";
      throw VerificationError(msg.str());
    }
    double sum = 0.0;
    for (std::size_t i : level) sum += phi(static_cast<Eigen::Index>(i));
    part.values.push_back(sum / static_cast<double>(level.size()));
    std::sort(level.begin(), level.end());
    for (std::size_t i : level) part.level_of[i] = l;
  }
  return part;
}

HatKernel hat_kernel(const MdpModel& model, const Partition& partition) {
  const std::size_t s = model.num_states();
  if (partition.level_of.size() != s) throw ModelError("partition does not cover the model's states");
  HatKernel hat;
  for (std::size_t u = 0; u < model.num_actions(); ++u) {
    Eigen::MatrixXd k = model.kernel(u);
    for (std::size_t i = 0; i < s; ++i) {
      for (std::size_t j = 0; j < s; ++j) {
        if (partition.level_of[i] != partition.level_of[j]) k(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = 0.0;
      }
    }
    hat.kernels.push_back(std::move(k));
  }
  for (std::size_t i = 0; i < s; ++i) {
    bool any = false;
    for (const auto& k : hat.kernels) any = any || k.row(static_cast<Eigen::Index>(i)).sum() > 0.0;
    if (!any) hat.stranded.push_back(i);
  }
  return hat;
}

DpResiduals check_dp(const MdpModel& model, const Eigen::VectorXd& phi, const Eigen::VectorXd& v, double level_tol) {
  const std::size_t s = model.num_states();
  if (static_cast<std::size_t>(phi.size()) != s || static_cast<std::size_t>(v.size()) != s) {
    throw ModelError("value and potential vectors must have one entry per state");
  }
  require_finite(phi, "value vector");
  require_finite(v, "potential vector");
  const Partition part = build_partition(phi, level_tol);
  const HatKernel hat = hat_kernel(model, part);

  DpResiduals res;
  res.dp1.resize(static_cast<Eigen::Index>(s));
  res.dp2.resize(static_cast<Eigen::Index>(s));
  res.dp2_signed.resize(static_cast<Eigen::Index>(s));
  for (std::size_t i = 0; i < s; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    double best = -kInf;
    for (std::size_t j : model.union_support(i)) best = std::max(best, phi(static_cast<Eigen::Index>(j)));
    res.dp1(ii) = std::abs(phi(ii) - best);

    // Gibbs closed form of the inner maximum, shifted by the level maximum of V.
    double shift = -kInf;
    for (std::size_t j : part.levels[part.level_of[i]]) shift = std::max(shift, v(static_cast<Eigen::Index>(j)));
    double rhs = kInf;
    for (std::size_t u = 0; u < model.num_actions(); ++u) {
      double acc = 0.0;
      for (std::size_t j = 0; j < s; ++j) {
        const double p = hat.kernels[u](ii, static_cast<Eigen::Index>(j));
        if (p > 0.0) acc += p * std::exp(v(static_cast<Eigen::Index>(j)) - shift);
      }
      if (acc > 0.0) rhs = std::min(rhs, model.cost(i, u) + shift + std::log(acc));
    }
    if (!std::isfinite(rhs)) {
      res.flagged.push_back(i);
      res.dp2(ii) = kInf;
      res.dp2_signed(ii) = kInf;
      continue;
    }
    res.dp2_signed(ii) = phi(ii) + v(ii) - rhs;
    res.dp2(ii) = std::abs(res.dp2_signed(ii));
  }
  return res;
}

double TwistedResiduals::max_residual() const {
  double m = star1;
  if (star1_local.size()) m = std::max(m, star1_local.maxCoeff());
  if (star2.size()) m = std::max(m, star2.maxCoeff());
  if (star3.size()) m = std::max(m, star3.maxCoeff());
  m = std::max(m, weight_error);
  return flagged.empty() ? m : kInf;
}

TwistedResiduals check_twisted(const MdpModel& model, const DpCertificate& cert, double argmin_tol) {
  const std::size_t s = model.num_states();
  const auto n = static_cast<Eigen::Index>(s);
  TwistedResiduals res;
  res.star1 = std::abs(cert.lambda_star - cert.lambda.maxCoeff());
  res.star1_local.resize(n);
  res.star2.resize(n);
  res.star3.resize(n);
  res.b_star.resize(s);
  for (std::size_t i = 0; i < s; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    const double li = cert.lambda(ii);
    double best = 0.0;
    for (std::size_t j : model.union_support(i)) best = std::max(best, cert.lambda(static_cast<Eigen::Index>(j)));
    res.star1_local(ii) = std::abs(li - best) / li;

    std::vector<double> total(model.num_actions(), 0.0);
    double tmin = kInf;
    for (std::size_t u = 0; u < model.num_actions(); ++u) {
      const double ec = std::exp(model.cost(i, u));
      for (std::size_t j = 0; j < s; ++j) {
        total[u] += cert.hat.kernels[u](ii, static_cast<Eigen::Index>(j)) * ec * cert.psi(static_cast<Eigen::Index>(j));
      }
      if (total[u] > 0.0) tmin = std::min(tmin, total[u]);
    }
    if (!std::isfinite(tmin)) {
      res.flagged.push_back(i);
      res.star2(ii) = kInf;
      res.star3(ii) = kInf;
      continue;
    }
    res.star2(ii) = std::abs(li * cert.psi(ii) - tmin) / tmin;

    double avg_min = kInf;
    for (std::size_t u = 0; u < model.num_actions(); ++u) {
      if (!(total[u] > 0.0) || total[u] > tmin * (1.0 + argmin_tol)) continue;
      res.b_star[i].push_back(u);
      const double ec = std::exp(model.cost(i, u));
      double wsum = 0.0, avg = 0.0;
      for (std::size_t j = 0; j < s; ++j) {
        const auto jj = static_cast<Eigen::Index>(j);
        const double w = cert.hat.kernels[u](ii, jj) * ec * cert.psi(jj) / total[u];
        wsum += w;
        avg += w * cert.lambda(jj);
      }
      res.weight_error = std::max(res.weight_error, std::abs(wsum - 1.0));
      avg_min = std::min(avg_min, avg);
    }
    res.star3(ii) = std::abs(li - avg_min) / li;
  }
  return res;
}

DpCertificate certify(const MdpModel& model, const Eigen::VectorXd& phi, const Eigen::VectorXd& v, double level_tol,
                      double argmin_tol) {
  DpCertificate cert;
  cert.phi_star = phi;
  cert.dp = check_dp(model, phi, v, level_tol);
  cert.partition = build_partition(phi, level_tol);
  cert.hat = hat_kernel(model, cert.partition);

  // Potentials are defined up to a constant per level.
  cert.v_vec = v;
  for (const auto& level : cert.partition.levels) {
    double lo = kInf;
    for (std::size_t i : level) lo = std::min(lo, v(static_cast<Eigen::Index>(i)));
    for (std::size_t i : level) cert.v_vec(static_cast<Eigen::Index>(i)) -= lo;
  }
  cert.lambda = phi.array().exp().matrix();
  cert.psi = cert.v_vec.array().exp().matrix();
  cert.lambda_star = std::exp(phi.maxCoeff());
  cert.twisted = check_twisted(model, cert, argmin_tol);
  return cert;
}

bool DpCertificate::passes(double tol) const {
  return dp.flagged.empty() && dp.max_dp1() <= tol && dp.max_dp2() <= tol &&
         twisted.max_residual() <= std::expm1(tol);
}

// Two-state example ----------------------------------------------------------------

double example_objective(double rho, double d, double q) {
  const double stay = q > 0.0 ? q * std::log(q / rho) : 0.0;
  const double leave = q < 1.0 ? (1.0 - q) * std::log((1.0 - q) / (1.0 - rho)) : 0.0;
  return 1.0 - stay - leave + (q - 1.0) * d;
}

AnalyticExample analytic_example(double rho) {
  if (!(rho > 0.0 && rho < 1.0)) throw ModelError("rho must lie in (0, 1)");
  const double lr = std::log(rho);
  if (std::abs(lr + 1.0) < 1e-12) throw ModelError("rho = 1/e is the excluded boundary case");

  AnalyticExample ex;
  ex.rho = rho;
  if (lr > -1.0) {
    ex.phi_star << 0.0, 1.0 + lr;
    ex.q22 = 1.0;
    ex.lambda_bar = 1.0 + lr;
    ex.objective_at_q22 = 1.0 + lr;
    return ex;
  }

  // Potential gap d = V_2 - V_1 for which the objective's maximum is 0.
  const double e = std::numbers::e;
  const double d = std::log(e * (1.0 - rho) / (1.0 - e * rho));
  const auto slope = [&](double q) { return -std::log(q / rho) + std::log((1.0 - q) / (1.0 - rho)) + d; };
  double lo = 1e-9, hi = 1.0 - 1e-9;
  if (!(slope(lo) > 0.0 && slope(hi) < 0.0)) {
    throw VerificationError("bisection for q22 does not bracket a root");
  }
  while (hi - lo > 1e-10) {
    const double mid = 0.5 * (lo + hi);
    (slope(mid) > 0.0 ? lo : hi) = mid;
  }
  ex.q22 = 0.5 * (lo + hi);
  ex.phi_star << 0.0, 0.0;
  ex.lambda_bar = 0.0;
  ex.potential_gap = d;
  ex.objective_at_q22 = example_objective(rho, d, ex.q22);
  ex.interior = true;
  return ex;
}

PoissonScan poisson_insolvability(double rho, double lo, double hi, double step) {
  if (!(rho > 0.0 && rho < 1.0) || !(std::log(rho) > -1.0)) {
    throw ModelError("the insolvability scan needs log(rho) > -1 and rho < 1");
  }
  if (!(step > 0.0) || !(hi >= lo)) throw ModelError("invalid scan range");
  PoissonScan scan;
  scan.rho = rho;
  scan.lo = lo;
  scan.hi = hi;
  scan.step = step;
  scan.min_margin = kInf;
  const auto count = static_cast<std::size_t>(std::llround((hi - lo) / step)) + 1;
  const double ratio = (1.0 - rho) / rho;
  for (std::size_t a = 0; a < count; ++a) {
    const double h1 = lo + static_cast<double>(a) * step;
    for (std::size_t b = 0; b < count; ++b) {
      const double h2 = lo + static_cast<double>(b) * step;
      // Both sides divided by e rho e^{h2}: 1 >= 1 + ratio e^{h1 - h2}.
      const double margin = std::log1p(ratio * std::exp(h1 - h2));
      ++scan.pairs;
      if (margin <= 0.0) ++scan.satisfying;
      scan.min_margin = std::min(scan.min_margin, margin);
    }
  }
  scan.analytic_reduction = std::numbers::e * (1.0 - rho) > 0.0;
  return scan;
}

}  // namespace riskmdp
