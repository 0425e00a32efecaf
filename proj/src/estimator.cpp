#include "structadapt/estimator.hpp"

#include "structadapt/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace structadapt {

namespace {

// zero every node closer than `reach` to a face of the grid
void mask_extended(Field& f, int reach)
{
  const GridSpec& g = f.grid();
  const int d = g.dim();
  const int n = g.points_per_axis();
  std::vector<int> k(d);
  for (std::size_t j = 0; j < g.size(); ++j) {
    g.unravel(j, k);
    for (int a = 0; a < d; ++a) {
      if (k[a] - reach < 0 || k[a] + reach > n - 1) {
        f[j] = 0.0;
        break;
      }
    }
  }
}

std::vector<SpectralWorkspace> make_workspaces(const SpectralGrid& sg)
{
  std::vector<SpectralWorkspace> ws;
  for (unsigned w = 0; w < thread_count(); ++w)
    ws.push_back(sg.make_workspace());
  return ws;
}

} // namespace

EstimateField estimate(const KernelField& k, const Observation& obs)
{
  EstimateField e;
  e.theta = k.theta;
  e.values = apply_kernel(k.values, obs.data(), OutputRegion::extended);
  e.sigma_sup = k.norm2;
  return e;
}

EstimateField estimate_pair(const KernelField& theta, const KernelField& nu,
                            const Observation& obs)
{
  const GridSpec& g = obs.signal.grid();
  if (theta.values.grid() != g || nu.values.grid() != g)
    throw std::invalid_argument("kernels and observation live on different grids");
  const int reach = theta.reach + nu.reach;
  if (!footprint_fits(g, reach))
    throw std::invalid_argument("combined kernel support overflows " + g.describe());
  SpectralGrid sg(g);
  Spectrum ta = sg.transfer(theta.values);
  Spectrum tb = sg.transfer(nu.values);
  SpectralWorkspace ws = sg.make_workspace();
  Spectrum y(sg.spectrum_size());
  Field data = obs.data();
  sg.forward(data.values(), y, ws);
  for (std::size_t f = 0; f < y.size(); ++f)
    y[f] *= std::conj(ta[f] * tb[f]);

  EstimateField e;
  e.theta = theta.theta;
  e.nu = nu.theta;
  e.values = Field(g);
  sg.inverse_full(y, e.values.values(), ws);
  mask_extended(e.values, reach);
  e.sigma_sup = std::max(sg.l2_of_combination(ta, tb, tb), 1.0);
  return e;
}

double sigma_pair_sup(const KernelField& theta, const KernelField& nu)
{
  const GridSpec& g = theta.values.grid();
  SpectralGrid sg(g);
  Spectrum ta = sg.transfer(theta.values);
  Spectrum tb = sg.transfer(nu.values);
  return std::max(sg.l2_of_combination(ta, tb, tb), 1.0);
}

BiasField bias_field(const KernelField& k, const Field& true_f, std::span<const double> ps)
{
  const GridSpec& g = true_f.grid();
  Field smooth = apply_kernel(k.values, true_f, OutputRegion::inner);
  BiasField b;
  b.theta = k.theta;
  b.values = Field(g);
  const IndexRange r = g.inner_range();
  const int d = g.dim();
  std::vector<int> idx(d);
  for (std::size_t j = 0; j < g.size(); ++j) {
    g.unravel(j, idx);
    bool inner = true;
    for (int a = 0; a < d; ++a)
      inner = inner && r.contains(idx[a]);
    if (inner)
      b.values[j] = smooth[j] - true_f[j];
  }
  auto block = b.values.inner_block();
  for (double p : ps)
    b.lp[p] = inner_block_norm(block, g, p);
  return b;
}

EstimatorBank::EstimatorBank(GridSpec grid, UnivariateKernel g, std::vector<ThetaPoint> thetas,
                             KernelDiscretization mode)
  : grid_(std::move(grid))
  , g_(std::move(g))
{
  if (thetas.empty())
    throw std::invalid_argument("estimator bank needs at least one theta");
  spectral_ = std::make_unique<SpectralGrid>(grid_);
  const std::size_t nt = thetas.size();
  kernels_.resize(nt);
  transfers_.resize(nt);
  parallel_for(nt, [&](std::size_t i, unsigned) {
    kernels_[i] = build_structural_kernel(thetas[i], g_, grid_, mode);
    transfers_[i] = spectral_->transfer(kernels_[i].values);
  });
  for (const auto& k : kernels_)
    max_reach_ = std::max(max_reach_, k.reach);
  if (!footprint_fits(grid_, 2 * max_reach_))
    throw std::invalid_argument("pair kernel support overflows " + grid_.describe());
  constants_ = collection_constants(kernels_);

  sigma_pair_.resize(nt * nt);
  sigma_pair_raw_.resize(nt * nt);
  parallel_for(nt, [&](std::size_t i, unsigned) {
    for (std::size_t j = 0; j < nt; ++j) {
      double s = spectral_->l2_of_combination(transfers_[i], transfers_[j], transfers_[j]);
      sigma_pair_raw_[i * nt + j] = s;
      sigma_pair_[i * nt + j] = std::max(s, 1.0);
    }
  });
}

EstimatorBank::~EstimatorBank() = default;

Spectrum EstimatorBank::spectrum(const Field& y) const
{
  if (y.grid() != grid_)
    throw std::invalid_argument("field grid differs from estimator bank grid");
  return spectral_->forward(y.values());
}

std::vector<double> EstimatorBank::single_block(std::size_t i, const Spectrum& y,
                                                std::span<const double> reference) const
{
  SpectralWorkspace ws = spectral_->make_workspace();
  Spectrum s(y.size());
  const auto& t = transfers_[i];
  for (std::size_t f = 0; f < s.size(); ++f)
    s[f] = std::conj(t[f]) * y[f];
  std::vector<double> block(grid_.inner_block_size());
  spectral_->inverse_inner(s, block, ws);
  if (!reference.empty()) {
    if (reference.size() != block.size())
      throw std::invalid_argument("reference block has the wrong size");
    for (std::size_t b = 0; b < block.size(); ++b)
      block[b] -= reference[b];
  }
  return block;
}

std::vector<std::vector<double>> EstimatorBank::single_norms(
  const Spectrum& y, std::span<const double> ps, std::span<const double> reference) const
{
  const std::size_t nt = size();
  std::vector<std::vector<double>> out(ps.size(), std::vector<double>(nt));
  auto ws = make_workspaces(*spectral_);
  std::vector<Spectrum> scratch(ws.size(), Spectrum(y.size()));
  std::vector<std::vector<double>> blocks(ws.size(),
                                          std::vector<double>(grid_.inner_block_size()));
  parallel_for(nt, [&](std::size_t i, unsigned w) {
    Spectrum& s = scratch[w];
    const auto& t = transfers_[i];
    for (std::size_t f = 0; f < s.size(); ++f)
      s[f] = std::conj(t[f]) * y[f];
    auto& block = blocks[w];
    spectral_->inverse_inner(s, block, ws[w]);
    if (!reference.empty())
      for (std::size_t b = 0; b < block.size(); ++b)
        block[b] -= reference[b];
    for (std::size_t k = 0; k < ps.size(); ++k)
      out[k][i] = inner_block_norm(block, grid_, ps[k]);
  });
  return out;
}

std::vector<std::vector<double>> EstimatorBank::pair_norms(const Spectrum& y,
                                                           std::span<const double> ps) const
{
  const std::size_t nt = size();
  std::vector<std::vector<double>> out(ps.size(), std::vector<double>(nt * nt));
  auto ws = make_workspaces(*spectral_);
  const std::size_t ns = y.size();
  std::vector<Spectrum> row(ws.size(), Spectrum(ns));
  std::vector<Spectrum> scratch(ws.size(), Spectrum(ns));
  std::vector<std::vector<double>> blocks(ws.size(),
                                          std::vector<double>(grid_.inner_block_size()));
  parallel_for(nt, [&](std::size_t i, unsigned w) {
    Spectrum& r = row[w];
    const auto& ti = transfers_[i];
    for (std::size_t f = 0; f < ns; ++f)
      r[f] = (std::conj(ti[f]) - 1.0) * y[f];
    Spectrum& s = scratch[w];
    auto& block = blocks[w];
    for (std::size_t j = 0; j < nt; ++j) {
      const auto& tj = transfers_[j];
      for (std::size_t f = 0; f < ns; ++f)
        s[f] = std::conj(tj[f]) * r[f];
      spectral_->inverse_inner(s, block, ws[w]);
      for (std::size_t k = 0; k < ps.size(); ++k)
        out[k][i * nt + j] = inner_block_norm(block, grid_, ps[k]);
    }
  });
  return out;
}

Field EstimatorBank::estimate_field(std::size_t i, const Spectrum& y) const
{
  SpectralWorkspace ws = spectral_->make_workspace();
  Spectrum s(y.size());
  const auto& t = transfers_[i];
  for (std::size_t f = 0; f < s.size(); ++f)
    s[f] = std::conj(t[f]) * y[f];
  Field out(grid_);
  spectral_->inverse_full(s, out.values(), ws);
  mask_extended(out, kernels_[i].reach);
  return out;
}

} // namespace structadapt
