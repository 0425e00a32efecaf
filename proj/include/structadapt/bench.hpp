#pragma once

#include "structadapt/estimator.hpp"
#include "structadapt/functions.hpp"
#include "structadapt/selection.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace structadapt {

//! [eps sqrt(ln(1/eps))]^(2 beta / (2 beta + 1)).
double phi_rate(double eps, double beta);

//! Unstructured d-dimensional rate: eps^(2a/(2a+d)) for p < inf, with the
//! extra sqrt(ln(1/eps)) inside for p = inf.
double psi_rate(double eps, double alpha, int d, double p);

//! h*_j = ((eps/L) sqrt(ln(1/eps)))^(2/(2 beta_i + s)) (|g|_2/|g|_1)^(2d/(2 beta_i + s)).
double ideal_bandwidth(double beta_i, int block_size, double lipschitz, double eps,
                       const UnivariateKernel& g, int dim);

//! (I, E, h*) of F; blocks with a zero component get `h_zero`.
ThetaPoint aligned_theta(const StructuredFunction& f, double eps, const UnivariateKernel& g,
                         double h_zero);

//! L sum_i |g|_1^|I_i| sum_{j in I_i} h_j^beta_i for theta aligned with F.
double bias_bound(const ThetaPoint& theta, const StructuredFunction& f, const UnivariateKernel& g);

//! sup |F| over the grid nodes.
double sup_norm(const Field& f);

//! norms[p][theta] = ||B_theta||_p on D0.
std::vector<std::vector<double>> bias_norms(const EstimatorBank& bank, const Field& truth,
                                            std::span<const double> ps);

//! norms[p][theta * n + nu] = ||B_{theta,nu} - B_nu||_p on D0.
std::vector<std::vector<double>> pair_bias_norms(const EstimatorBank& bank, const Field& truth,
                                                 std::span<const double> ps);

struct OracleObjective
{
  std::size_t index = 0;
  ThetaPoint theta;
  double value = 0.0;
  std::vector<double> bias;
  std::vector<double> objective;
};

//! argmin over the bank of ||B_theta||_p + kappa eps sigma_theta.
OracleObjective oracle_objective(const EstimatorBank& bank, const Field& truth, double eps,
                                 double kappa, double p);

//! Normal quantile for the 95% Monte Carlo confidence half width.
inline constexpr double kCiZ = 1.96;

struct RiskReport
{
  std::string estimator_id;
  double p = 2.0;
  double eps = 0.0;
  int n_rep = 0;
  double risk = 0.0;
  //! 1.96 sd / sqrt(n_rep)
  double ci_halfwidth = 0.0;
  std::vector<double> values;
  //! Selected theta index per replication (selected procedure only).
  std::vector<std::size_t> selected;
};

//! Mean and 95% normal half-width of a sample.
void summarize(RiskReport& r);

//! Replication r draws noise with derive_seed(seed, r); the error of the
//! fixed estimator F_theta is reported on D0, one report per p.
std::vector<RiskReport> mc_risk_fixed(const EstimatorBank& bank, std::size_t theta,
                                      const Field& truth, double eps, std::span<const double> ps,
                                      int n_rep, std::uint64_t seed);

//! Same replications through the full selection rule.
RiskReport mc_risk_selected(const EstimatorBank& bank, const Field& truth, double eps, double p,
                            const KappaCalibration& kappa, int n_rep, std::uint64_t seed);

struct OracleInequalityReport
{
  RiskReport risk;
  OracleObjective oracle;
  double m_of_k = 0.0;
  double sigma_of_k = 0.0;
  double kappa = 0.0;
  double delta = 0.0;
  double f_sup = 0.0;
  double remainder = 0.0;
  double rhs = 0.0;
  //! risk / rhs and (risk - ci) / rhs
  double ratio = 0.0;
  double ratio_lower = 0.0;
  bool pass = false;
};

//! E|F(delta) - F|_p <= (3 + 2M) inf{...} + r(delta) with
//! r(delta) = |F|_inf (1 + M) delta + eps sigma(K) sqrt(delta) sqrt(E zeta^2).
OracleInequalityReport verify_oracle_inequality(const EstimatorBank& bank, const Field& truth,
                                                double eps, double p,
                                                const KappaCalibration& kappa, int n_rep,
                                                std::uint64_t seed);

struct SandwichRow
{
  std::size_t theta = 0;
  double p = 2.0;
  double bias = 0.0;
  //! Monte Carlo mean of ||Z_theta||_p
  double noise = 0.0;
  double noise_ci = 0.0;
  double risk = 0.0;
  double risk_ci = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  bool pass = false;
};

//! 1/4 (|B| + eps E|Z|) <= risk <= |B| + eps E|Z| for each theta and p;
//! a side passes when it holds within the combined CI.
std::vector<SandwichRow> risk_sandwich(const EstimatorBank& bank,
                                       std::span<const std::size_t> thetas, const Field& truth,
                                       double eps, std::span<const double> ps, int n_rep,
                                       std::uint64_t seed);

struct ContractionRow
{
  std::size_t theta = 0;
  double p = 2.0;
  double lhs = 0.0;
  double rhs = 0.0;
  bool pass = false;
};

//! sup_nu |B_{theta,nu} - B_nu|_p <= M |B_theta|_p (1 + rel) + abs_tol.
std::vector<ContractionRow> contraction_check(const EstimatorBank& bank, const Field& truth,
                                              std::span<const double> ps, double rel,
                                              double abs_tol);

struct RateConfig
{
  FunctionSpec function;
  int points_per_axis = 151;
  //! 0 picks default_grid.
  double half_width = 0.0;
  int kernel_order = 0;
  ThetaGridConfig theta;
  std::vector<double> eps_list{0.2, 0.1, 0.05, 0.025};
  double p = kInfinity;
  double delta = 0.1;
  int n_cal = 200;
  int n_rep = 50;
  std::uint64_t seed = 1;
};

struct RatePoint
{
  double eps = 0.0;
  std::size_t grid_size = 0;
  double h_min = 0.0;
  double h_max = 0.0;
  double kappa = 0.0;
  RiskReport selected;
  RiskReport fixed;
  double h_star = 0.0;
  double phi = 0.0;
  //! selected risk / fixed-oracle risk
  double ratio = 0.0;
  //! fixed risk / (L^(1/(2 beta+1)) phi)
  double upper_constant = 0.0;
};

struct RateReport
{
  double beta = 1.0;
  std::vector<RatePoint> points;
  double slope = 0.0;
  double fixed_slope = 0.0;
  double target = 0.0;
  //! 2 beta' / (2 beta' + d) with beta' = beta, for contrast
  double unstructured_target = 0.0;
};

//! Least-squares slope of log y against log x.
double log_log_slope(std::span<const double> x, std::span<const double> y);

RateReport rate_experiment(const RateConfig& cfg);

struct KappaScalingPoint
{
  double eps = 0.0;
  double kappa = 0.0;
  double scaled = 0.0;
};

//! kappa(delta = eps) / sqrt(ln(1/eps)) on a fixed bank; replications use
//! n_cal = max(n_cal_min, ceil(20 / eps)).
std::vector<KappaScalingPoint> kappa_scaling(const EstimatorBank& bank, double p,
                                             std::span<const double> eps_list, int n_cal_min,
                                             std::uint64_t seed);

} // namespace structadapt
