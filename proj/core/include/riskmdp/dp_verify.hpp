#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "riskmdp/model.hpp"

namespace riskmdp {

// Certificates for a value/potential pair (phi, V) against the nested
// dynamic-programming equations
//
//   phi_i       = max_{j in supp(i)} phi_j
//   phi_i + V_i = min_u [ c(i,u) + log sum_{j in level(i)} p(j|i,u) e^{V_j} ]
//
// and their exponentiated ("twisted") form with Lambda = e^phi, Psi = e^V.

inline constexpr double kDefaultLevelTol = 1e-6;

/// States grouped by value; levels in increasing order of value.
struct Partition {
  std::vector<std::vector<std::size_t>> levels;
  std::vector<double> values;          ///< mean value per level
  std::vector<std::size_t> level_of;   ///< level index per state
};

/// Consecutive sorted values closer than level_tol share a level. Throws
/// VerificationError when a chain of close values spreads wider than
/// level_tol (two groupings would be defensible).
Partition build_partition(const Eigen::VectorXd& phi, double level_tol = kDefaultLevelTol);

struct HatKernel {
  std::vector<Eigen::MatrixXd> kernels;  ///< per action, p restricted to same-level pairs
  std::vector<std::size_t> stranded;     ///< states whose restricted rows vanish for every action
};

HatKernel hat_kernel(const MdpModel& model, const Partition& partition);

struct DpResiduals {
  Eigen::VectorXd dp1;
  Eigen::VectorXd dp2;                   ///< +inf at stranded states
  Eigen::VectorXd dp2_signed;            ///< phi_i + V_i - right-hand side
  std::vector<std::size_t> flagged;
  [[nodiscard]] double max_dp1() const { return dp1.size() ? dp1.maxCoeff() : 0.0; }
  [[nodiscard]] double max_dp2() const { return dp2.size() ? dp2.maxCoeff() : 0.0; }
};

DpResiduals check_dp(const MdpModel& model, const Eigen::VectorXd& phi, const Eigen::VectorXd& v,
                     double level_tol = kDefaultLevelTol);

struct TwistedResiduals {
  double star1 = 0.0;                    ///< |Lambda* - max_i Lambda_i|
  Eigen::VectorXd star1_local;           ///< |Lambda_i - max_{j in supp(i)} Lambda_j| / Lambda_i
  Eigen::VectorXd star2;                 ///< |Lambda_i Psi_i - min_u T_i(u)| / min_u T_i(u)
  Eigen::VectorXd star3;                 ///< |Lambda_i - min_{u in B*_i} twisted average| / Lambda_i
  std::vector<std::vector<std::size_t>> b_star;
  double weight_error = 0.0;             ///< max |sum of twisted weights - 1|
  std::vector<std::size_t> flagged;      ///< states with a zero twisted denominator for every action
  [[nodiscard]] double max_residual() const;
};

struct DpCertificate {
  Eigen::VectorXd phi_star;
  Eigen::VectorXd v_vec;                 ///< normalized to min 0 on every level
  Partition partition;
  HatKernel hat;
  DpResiduals dp;
  Eigen::VectorXd lambda;                ///< e^phi
  Eigen::VectorXd psi;                   ///< e^V
  double lambda_star = 0.0;              ///< e^{max phi}
  TwistedResiduals twisted;

  /// DP residuals within tol, twisted residuals within expm1(tol).
  [[nodiscard]] bool passes(double tol) const;
};

/// Builds the certificate and evaluates both forms of the equations.
DpCertificate certify(const MdpModel& model, const Eigen::VectorXd& phi, const Eigen::VectorXd& v,
                      double level_tol = kDefaultLevelTol, double argmin_tol = 1e-9);

/// Twisted-form residuals for an assembled certificate.
TwistedResiduals check_twisted(const MdpModel& model, const DpCertificate& certificate, double argmin_tol = 1e-9);

// Two-state uncontrolled example: state 1 absorbing with cost 0, state 2
// with cost 1 staying put with probability rho.

struct AnalyticExample {
  double rho = 0.0;
  Eigen::Vector2d phi_star;
  double q22 = 1.0;
  double lambda_bar = 0.0;
  double potential_gap = 0.0;            ///< V_2 - V_1 in the interior case, else 0
  double objective_at_q22 = 0.0;         ///< the concave objective at q22 (0 in the interior case)
  bool interior = false;
};

/// Throws ModelError unless 0 < rho < 1 and log rho != -1.
AnalyticExample analytic_example(double rho);

/// 1 - q log(q/rho) - (1-q) log((1-q)/(1-rho)) + (q-1) d.
double example_objective(double rho, double d, double q);

struct PoissonScan {
  double rho = 0.0;
  double lo = -20.0, hi = 20.0, step = 0.1;
  std::size_t pairs = 0;
  std::size_t satisfying = 0;
  double min_margin = 0.0;               ///< smallest log-ratio by which the inequality fails
  bool analytic_reduction = false;       ///< e(1-rho)e^{h1} > 0 for every h1
  [[nodiscard]] bool insolvable() const { return satisfying == 0 && analytic_reduction; }
};

/// Scans (h1, h2) for e rho e^{h2} >= e [rho e^{h2} + (1-rho) e^{h1}].
/// Requires log rho > -1.
PoissonScan poisson_insolvability(double rho, double lo = -20.0, double hi = 20.0, double step = 0.1);

}  // namespace riskmdp
