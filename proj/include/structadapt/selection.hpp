#pragma once

#include "structadapt/estimator.hpp"
#include "structadapt/kernel.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace structadapt {

//! Parameters of the discretized structure set.
struct ThetaGridConfig
{
  int dim = 1;
  //! Values per Givens angle, uniform on [0, pi/2).
  int n_angles = 4;
  //! Explicit angle tuples (each of length d(d-1)/2); overrides n_angles.
  std::vector<std::vector<double>> angles;
  //! Bandwidth values per block, geometric between h_min and h_max.
  int n_h = 5;
  double beta_max = 2.0;
  double eta = 1e-3;
  //! Overrides of the window eps^2 .. eps^(2 / ((2 beta_max + 1) d)).
  std::optional<double> h_min;
  std::optional<double> h_max;
  //! Lower bound on h_min in grid cells, so that kernels stay resolvable.
  double min_bandwidth_cells = 5.0;
  //! Restriction to these partitions (text form "1.2|3"); empty means all.
  std::vector<std::string> partitions;

  bool operator==(const ThetaGridConfig&) const = default;
};

struct BandwidthWindow
{
  double h_min = 0.0;
  double h_max = 0.0;
};

//! h_min = max(eps^2, cells * dx), h_max = eps^(2 / ((2 beta_max + 1) d)),
//! then the overrides. Throws std::invalid_argument unless h_min < h_max
//! (equality is allowed when n_h == 1).
BandwidthWindow bandwidth_window(const ThetaGridConfig& cfg, double eps, const GridSpec& grid);

struct ThetaGrid
{
  std::vector<ThetaPoint> points;
  double h_min = 0.0;
  double h_max = 0.0;
  //! Number of distinct partitions.
  int structural_count = 0;
  //! Bound on the (angle, bandwidth) block: max(pi/2, h_max).
  double continuous_radius = 0.0;
  std::uint64_t hash = 0;
};

//! partitions x rotations x block-constant geometric bandwidths, in that
//! nesting order; duplicates removed keeping the first occurrence.
ThetaGrid build_theta_grid(const ThetaGridConfig& cfg, double eps, const GridSpec& grid);

//! Fingerprint of grid geometry, kernel order and theta list.
std::uint64_t bank_hash(const EstimatorBank& bank);

//! delta = eps^a with a = 24 d^3 + 12 d^2.
double theoretical_delta(double eps, int dim);

enum class KappaMode
{
  monte_carlo,
  analytic
};

std::string to_string(KappaMode m);
KappaMode parse_kappa_mode(const std::string& s);

struct KappaCalibration
{
  double p = 2.0;
  double delta = 0.05;
  double kappa = 0.0;
  KappaMode mode = KappaMode::monte_carlo;
  int n_cal = 0;
  std::uint64_t grid_hash = 0;
  std::uint64_t seed = 0;
  //! Empirical (1 - delta/2)-quantiles of the two suprema.
  double quantile_single = 0.0;
  double quantile_pair = 0.0;
  //! Mean of zeta^2, zeta = sup over x and theta of |Z_theta(x)| / sigma_theta.
  double zeta_second_moment = 0.0;
  //! Analytic mode inputs.
  double c3 = 0.0;
  double eps = 0.0;
  std::vector<double> sup_single;
  std::vector<double> sup_pair;
};

//! Normalized noise suprema of one replication.
struct NoiseSuprema
{
  //! sup_theta ||Z_theta||_p / sigma_theta
  double single = 0.0;
  //! sup_{theta,nu} ||Z_{theta,nu} - Z_nu||_p / sigma~_{theta,nu}
  double pair = 0.0;
  //! sup_theta ||Z_theta||_inf / sigma_theta
  double zeta = 0.0;
};

//! Suprema for the pure-noise field drawn with `seed`.
NoiseSuprema noise_suprema(const EstimatorBank& bank, double p, std::uint64_t seed);

//! Replication r uses the noise seed derive_seed(seed, r).
//! Requires n_cal >= ceil(20 / delta).
KappaCalibration calibrate_kappa(const EstimatorBank& bank, double p, double delta, int n_cal,
                                 std::uint64_t seed);

//! kappa = sqrt(c3 ln(1/eps)).
KappaCalibration analytic_kappa(double c3, double eps, double p, double delta,
                                std::uint64_t grid_hash);

//! Order statistic x_(ceil(n q)) of the sample (type 1 inverse CDF).
double empirical_quantile(std::vector<double> sample, double q);

//! B_theta = M^-1 max_nu [pair(theta, nu) - eps kappa sigma~(theta, nu)].
std::vector<double> bhat_from_pairs(const EstimatorBank& bank, std::span<const double> pair_table,
                                    double eps, double kappa);

//! Lower bias estimator for every theta. Throws std::invalid_argument when
//! the calibration belongs to another bank or another p.
std::vector<double> bhat(const EstimatorBank& bank, const Observation& obs,
                         const KappaCalibration& kappa, double p);

//! Ties within this absolute slack (scaled by max(1, |min|)) go to the lowest index.
inline constexpr double kTieTolerance = 1e-10;

std::size_t argmin_first(std::span<const double> values, double tol = kTieTolerance);

struct SelectionTables
{
  std::size_t index = 0;
  std::vector<double> bhat;
  std::vector<double> objective;
};

//! objective = bhat + kappa eps sigma_theta; argmin with first-index ties.
SelectionTables selection_tables(const EstimatorBank& bank, const Spectrum& data, double eps,
                                 double kappa, double p);

struct SelectionResult
{
  std::size_t index = 0;
  ThetaPoint theta_hat;
  std::vector<double> objective;
  std::vector<double> bhat;
  std::vector<double> sigma;
  EstimateField estimate;
  KappaCalibration kappa;
};

SelectionResult select(const EstimatorBank& bank, const Observation& obs, double p,
                       const KappaCalibration& kappa);

//! CSV: theta-id,bhat,sigma_sup,objective.
void write_objective_csv(std::ostream& os, const SelectionResult& r);

//! JSON record {p, delta, kappa, mode, n_cal, grid_hash, seed, quantiles}.
void write_calibration_json(std::ostream& os, const KappaCalibration& k);
KappaCalibration read_calibration_json(std::istream& is);

} // namespace structadapt
