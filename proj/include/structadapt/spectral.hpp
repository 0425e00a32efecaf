#pragma once

#include "structadapt/grid.hpp"

#include <complex>
#include <cstddef>
#include <memory>
#include <new>
#include <span>
#include <vector>

namespace structadapt {

namespace detail {
void* fft_alloc(std::size_t bytes);
void fft_free(void* p);
} // namespace detail

//! Allocator returning SIMD-aligned storage, so that any buffer can be fed
//! to the precomputed FFT plans.
template <typename T>
struct AlignedAllocator
{
  using value_type = T;
  AlignedAllocator() = default;
  template <typename U>
  AlignedAllocator(const AlignedAllocator<U>&)
  {}
  T* allocate(std::size_t n)
  {
    void* p = detail::fft_alloc(n * sizeof(T));
    if (!p)
      throw std::bad_alloc();
    return static_cast<T*>(p);
  }
  void deallocate(T* p, std::size_t) { detail::fft_free(p); }
  template <typename U>
  bool operator==(const AlignedAllocator<U>&) const
  {
    return true;
  }
};

using cplx = std::complex<double>;
using Spectrum = std::vector<cplx, AlignedAllocator<cplx>>;
using RealBuffer = std::vector<double, AlignedAllocator<double>>;

//! Scratch buffers for one worker. Not shareable between threads.
struct SpectralWorkspace
{
  RealBuffer real;
  Spectrum a;
  Spectrum b;
  RealBuffer rows;
};

//! Discrete Fourier machinery for one grid.
//!
//! Transforms are circular over the n^d nodes. A centered kernel K with
//! reach r (largest |k - c| of a nonzero entry along any axis) is stored
//! wrapped; correlation with it is exact at output nodes at least r nodes
//! away from every face, which the fits() checks enforce.
//!
//! Spectra use the half-complex layout n x ... x n x (n/2 + 1).
class SpectralGrid
{
public:
  explicit SpectralGrid(GridSpec grid);
  ~SpectralGrid();
  SpectralGrid(const SpectralGrid&) = delete;
  SpectralGrid& operator=(const SpectralGrid&) = delete;

  const GridSpec& grid() const { return grid_; }
  std::size_t spectrum_size() const { return spectrum_size_; }
  SpectralWorkspace make_workspace() const;

  //! Unnormalized forward DFT of a full field.
  void forward(std::span<const double> values, Spectrum& out, SpectralWorkspace& ws) const;
  Spectrum forward(std::span<const double> values) const;

  //! Transfer function DFT(wrapped K) * dx^d of a centered kernel.
  Spectrum transfer(const Field& centered_kernel) const;

  //! Inverse of a spectrum (divided by n^d) restricted to the inner block.
  //! The input spectrum is overwritten.
  void inverse_inner(Spectrum& spec, std::span<double> block, SpectralWorkspace& ws) const;

  //! Full inverse (divided by n^d). The input spectrum is overwritten.
  void inverse_full(Spectrum& spec, std::span<double> out, SpectralWorkspace& ws) const;

  //! sqrt(sum_t k(t)^2 dx^d) for the kernel with transfer function `tf`.
  double l2_from_transfer(std::span<const cplx> tf) const;
  //! Same for the kernel with transfer function a * b - c.
  double l2_of_combination(std::span<const cplx> a, std::span<const cplx> b,
                           std::span<const cplx> c) const;

  //! Hermitian multiplicity of each half-spectrum bin (1 or 2).
  std::span<const double> bin_weights() const { return weights_; }

  //! True when correlation with reach r is exact on the inner nodes.
  bool fits_inner(int reach) const;

  //! Centered kernel field from a transfer function.
  Field kernel_from_transfer(std::span<const cplx> tf) const;

private:
  struct Plans;
  GridSpec grid_;
  std::size_t spectrum_size_ = 0;
  std::vector<double> weights_;
  std::unique_ptr<Plans> plans_;
};

//! True when a footprint of `reach` nodes around every inner node stays on the grid.
bool footprint_fits(const GridSpec& grid, int reach);

//! Largest |k - c| over nonzero entries along any axis (0 for a pure spike,
//! -1 for an all-zero field).
int kernel_reach(const Field& centered_kernel);

//! output[x] = sum_j K(t_j - x) input[t_j] dx^d on the nodes of the region;
//! other nodes are zero. `extended` covers every node whose footprint stays on
//! the grid. Throws std::invalid_argument when the kernel footprint leaves the
//! grid for some inner node.
Field apply_kernel(const Field& kernel, const Field& input, OutputRegion region);

} // namespace structadapt
