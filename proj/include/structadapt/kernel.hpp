#pragma once

#include "structadapt/grid.hpp"
#include "structadapt/partition.hpp"

#include <Eigen/Dense>

#include <iosfwd>
#include <span>
#include <vector>

namespace structadapt {

class SpectralGrid;

//! g(x) = P(x) (1 - 4x^2)^2 on [-1/2, 1/2], zero outside, with
//! P(x) = sum_k c_k (4x^2)^k of minimal degree such that the integral is 1 and
//! the moments of order 1..order vanish.
class UnivariateKernel
{
public:
  UnivariateKernel() = default;
  UnivariateKernel(int order, std::vector<double> coefficients);

  int order() const { return order_; }
  //! c_k of P in powers of 4x^2.
  const std::vector<double>& coefficients() const { return coefficients_; }

  double operator()(double x) const;
  double derivative(double x) const;

  //! ||g||_1 and ||g||_2 by adaptive quadrature.
  double norm1() const { return norm1_; }
  double norm2() const { return norm2_; }

private:
  int order_ = 0;
  std::vector<double> coefficients_{1.875};
  double norm1_ = 1.0;
  double norm2_ = 0.0;
};

//! Solves the moment system in exact rational arithmetic; 0 <= order <= 12.
UnivariateKernel build_univariate_kernel(int order);

//! Gauss-Legendre value of the k-th moment (exact for the polynomial pieces).
double moment(const UnivariateKernel& g, int k);

//! Structural hypothesis theta = (I, E, h).
struct ThetaPoint
{
  Partition partition;
  //! Givens angles the direction matrix was built from (empty if E was given).
  std::vector<double> angles;
  //! d x d, column j is the direction of coordinate u_j = E_j^T t.
  Eigen::MatrixXd directions;
  //! One bandwidth per coordinate of u.
  std::vector<double> bandwidth;

  int dim() const { return static_cast<int>(bandwidth.size()); }
};

//! Number of Givens angles for dimension d, d(d-1)/2.
int rotation_angle_count(int d);

//! Product of plane rotations R_{ij}(angle) over pairs i < j in lexicographic
//! order. R_{ij} rotates the (e_i, e_j) plane counter-clockwise.
Eigen::MatrixXd rotation_matrix(int d, std::span<const double> angles);

ThetaPoint make_theta(Partition partition, std::vector<double> angles,
                      std::vector<double> bandwidth);
ThetaPoint make_theta(Partition partition, Eigen::MatrixXd directions,
                      std::vector<double> bandwidth);

//! Throws std::invalid_argument naming the violated condition: partition,
//! unit columns (1e-12), |det E| >= eta, h_min <= h_j <= h_max.
void validate_theta(const ThetaPoint& theta, double eta, double h_min, double h_max);

enum class KernelDiscretization
{
  //! Each product term is rescaled so that its grid sum times dx^d equals 1
  //! and, for order >= 2, multiplied by an even polynomial that restores the
  //! discrete moments up to the kernel order.
  moment_corrected,
  //! Plain samples of the continuous formula, including the |det E| factor.
  sampled
};

struct KernelField
{
  ThetaPoint theta;
  //! K_theta(u) on the centered grid.
  Field values;
  double norm1 = 0.0;
  double norm2 = 0.0;
  double integral = 0.0;
  //! Largest |k - c| of a nonzero node along any axis.
  int reach = 0;
};

//! K_theta(t) = sum_i G_{i,h}(E^T t) - (|I| - 1) G_0(E^T t), times |det E| in
//! sampled mode. Throws std::invalid_argument when the support does not fit
//! the grid margin or the moment correction is singular.
KernelField build_structural_kernel(
  const ThetaPoint& theta, const UnivariateKernel& g, const GridSpec& grid,
  KernelDiscretization mode = KernelDiscretization::moment_corrected);

struct KernelNorms
{
  double norm1 = 0.0;
  double norm2 = 0.0;
};

//! Riemann sums of |K| and K^2 over the grid.
KernelNorms kernel_norms(const KernelField& k);

//! Bounds ||K||_1 <= (2|I| - 1) ||g||_1^d and
//! ||K||_2 <= |det E|^(1/2) ||g||_2^d (sum_i prod_{j in I_i} h_j^(-1/2) + |I| - 1).
KernelNorms kernel_norm_bounds(const ThetaPoint& theta, const UnivariateKernel& g);

//! (K_a * K_b)(t) = sum_s K_a(s) K_b(t - s) dx^d on the centered grid.
Field convolve_kernels(const KernelField& a, const KernelField& b);
Field convolve_kernels(const KernelField& a, const KernelField& b, const SpectralGrid& sg);

struct CollectionConstants
{
  //! M(K) = max ||K_theta||_1, at least 1.
  double m_of_k = 1.0;
  //! sigma(K) = max ||K_theta||_2.
  double sigma_of_k = 0.0;
  std::size_t count = 0;
};

CollectionConstants collection_constants(std::span<const KernelField> kernels);
CollectionConstants collection_constants(std::span<const ThetaPoint> thetas,
                                         const UnivariateKernel& g, const GridSpec& grid);

//! CSV: theta-id,partition,rotation-angles,h1..hd,norm1,norm2,integral.
void write_kernel_catalog(std::ostream& os, std::span<const KernelField> kernels);

} // namespace structadapt
