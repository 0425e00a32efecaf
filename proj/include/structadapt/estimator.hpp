#pragma once

#include "structadapt/grid.hpp"
#include "structadapt/kernel.hpp"
#include "structadapt/noise.hpp"
#include "structadapt/spectral.hpp"

#include <map>
#include <memory>
#include <optional>
#include <span>
#include <vector>

namespace structadapt {

struct EstimateField
{
  ThetaPoint theta;
  //! Set for auxiliary estimates F_{theta,nu}.
  std::optional<ThetaPoint> nu;
  //! Values on the extended region, zero elsewhere.
  Field values;
  double sigma_sup = 0.0;
};

struct BiasField
{
  ThetaPoint theta;
  //! B_theta on the inner nodes, zero elsewhere.
  Field values;
  std::map<double, double> lp;
};

//! F_theta(x) = sum_j K(t_j - x) y_j dx^d with y = obs.data().
EstimateField estimate(const KernelField& k, const Observation& obs);

//! F_{theta,nu} from the convolved kernel K_theta * K_nu in one pass.
EstimateField estimate_pair(const KernelField& theta, const KernelField& nu,
                            const Observation& obs);

//! max(||K_theta * K_nu - K_nu||_2, 1).
double sigma_pair_sup(const KernelField& theta, const KernelField& nu);

//! B_theta = apply_kernel(K_theta, F) - F on the inner nodes.
BiasField bias_field(const KernelField& k, const Field& true_f, std::span<const double> ps);

//! Cached kernels and transfer functions for a fixed list of theta values on
//! one grid, with batched norm evaluation on the inner block.
//!
//! For a data spectrum Y every quantity is a correlation whose transfer
//! function is a product of cached kernel spectra:
//!   F_theta            conj(k_theta) Y
//!   F_{theta,nu} - F_nu  conj(k_nu) (conj(k_theta) - 1) Y
//! Reads are thread-safe after construction.
class EstimatorBank
{
public:
  EstimatorBank(GridSpec grid, UnivariateKernel g, std::vector<ThetaPoint> thetas,
                KernelDiscretization mode = KernelDiscretization::moment_corrected);
  ~EstimatorBank();

  const GridSpec& grid() const { return grid_; }
  const UnivariateKernel& univariate() const { return g_; }
  std::size_t size() const { return kernels_.size(); }
  const KernelField& kernel(std::size_t i) const { return kernels_[i]; }
  std::span<const KernelField> kernels() const { return kernels_; }
  const ThetaPoint& theta(std::size_t i) const { return kernels_[i].theta; }
  const SpectralGrid& spectral() const { return *spectral_; }
  std::span<const cplx> transfer(std::size_t i) const { return transfers_[i]; }

  //! sup_x sigma_theta(x) = ||K_theta||_2.
  double sigma(std::size_t i) const { return kernels_[i].norm2; }
  //! sigma~_{theta,nu}, truncated below at 1.
  double sigma_pair(std::size_t theta, std::size_t nu) const
  {
    return sigma_pair_[theta * size() + nu];
  }
  //! Untruncated ||K_theta * K_nu - K_nu||_2.
  double sigma_pair_raw(std::size_t theta, std::size_t nu) const
  {
    return sigma_pair_raw_[theta * size() + nu];
  }
  const CollectionConstants& constants() const { return constants_; }

  Spectrum spectrum(const Field& y) const;

  //! Inner block of F_theta, optionally minus `reference` (an inner block).
  std::vector<double> single_block(std::size_t i, const Spectrum& y,
                                   std::span<const double> reference = {}) const;

  //! norms[p][theta] = || F_theta - reference ||_p on D0 for every theta.
  std::vector<std::vector<double>> single_norms(const Spectrum& y, std::span<const double> ps,
                                                std::span<const double> reference = {}) const;

  //! norms[p][theta * size() + nu] = || F_{theta,nu} - F_nu ||_p on D0.
  std::vector<std::vector<double>> pair_norms(const Spectrum& y,
                                              std::span<const double> ps) const;

  //! Full field of F_theta on the extended region.
  Field estimate_field(std::size_t i, const Spectrum& y) const;

  //! Largest kernel reach in the bank.
  int max_reach() const { return max_reach_; }

private:
  GridSpec grid_;
  UnivariateKernel g_;
  std::vector<KernelField> kernels_;
  std::unique_ptr<SpectralGrid> spectral_;
  std::vector<Spectrum> transfers_;
  std::vector<double> sigma_pair_;
  std::vector<double> sigma_pair_raw_;
  CollectionConstants constants_;
  int max_reach_ = 0;
};

} // namespace structadapt
