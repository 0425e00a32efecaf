#include "structadapt/spectral.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <mutex>
#include <stdexcept>

namespace structadapt {

namespace detail {
void* fft_alloc(std::size_t bytes)
{
  return fftw_malloc(bytes == 0 ? 1 : bytes);
}
void fft_free(void* p)
{
  fftw_free(p);
}
} // namespace detail

namespace {

// the FFTW planner is not re-entrant
std::mutex& planner_mutex()
{
  static std::mutex m;
  return m;
}

std::size_t ipow(std::size_t b, int e)
{
  std::size_t r = 1;
  for (int i = 0; i < e; ++i)
    r *= b;
  return r;
}

fftw_complex* fc(cplx* p)
{
  return reinterpret_cast<fftw_complex*>(p);
}

// wrapped position of centered index k (offset k - c taken modulo n)
inline int wrap_index(int k, int c, int n)
{
  int m = k - c;
  return m < 0 ? m + n : m;
}

} // namespace

struct SpectralGrid::Plans
{
  fftw_plan r2c = nullptr;
  fftw_plan c2r_full = nullptr;
  std::vector<fftw_plan> axis;
  fftw_plan c2r_rows = nullptr;

  ~Plans()
  {
    std::lock_guard lock(planner_mutex());
    for (auto p : axis)
      if (p)
        fftw_destroy_plan(p);
    if (r2c)
      fftw_destroy_plan(r2c);
    if (c2r_full)
      fftw_destroy_plan(c2r_full);
    if (c2r_rows)
      fftw_destroy_plan(c2r_rows);
  }
};

SpectralGrid::SpectralGrid(GridSpec grid)
  : grid_(std::move(grid))
  , plans_(std::make_unique<Plans>())
{
  const int d = grid_.dim();
  const int n = grid_.points_per_axis();
  const int nh = n / 2 + 1;
  const int m = grid_.inner_range().count();
  spectrum_size_ = ipow(n, d - 1) * nh;

  weights_.resize(spectrum_size_);
  for (std::size_t f = 0; f < spectrum_size_; ++f)
    weights_[f] = (f % nh == 0) ? 1.0 : 2.0;

  SpectralWorkspace ws = make_workspace();
  std::vector<int> dims(d, n);

  std::lock_guard lock(planner_mutex());
  plans_->r2c = fftw_plan_dft_r2c(d, dims.data(), ws.real.data(), fc(ws.a.data()),
                                  FFTW_ESTIMATE);
  plans_->c2r_full = fftw_plan_dft_c2r(d, dims.data(), fc(ws.a.data()), ws.real.data(),
                                       FFTW_ESTIMATE);
  for (int a = 0; a + 1 < d; ++a) {
    int stride = static_cast<int>(ipow(n, d - 2 - a) * nh);
    fftw_iodim dim{n, stride, stride};
    fftw_iodim loops[2] = {{static_cast<int>(ipow(m, a)), n * stride, n * stride},
                           {stride, 1, 1}};
    // out of place: in-place strided transforms are markedly slower
    plans_->axis.push_back(fftw_plan_guru_dft(1, &dim, 2, loops, fc(ws.a.data()),
                                              fc(ws.b.data()), FFTW_BACKWARD,
                                              FFTW_ESTIMATE));
  }
  fftw_iodim row{n, 1, 1};
  fftw_iodim rows{static_cast<int>(ipow(m, d - 1)), nh, n};
  plans_->c2r_rows = fftw_plan_guru_dft_c2r(1, &row, 1, &rows, fc(ws.a.data()),
                                            ws.rows.data(), FFTW_ESTIMATE);
  bool ok = plans_->r2c && plans_->c2r_full && plans_->c2r_rows;
  for (auto p : plans_->axis)
    ok = ok && p;
  if (!ok)
    throw std::runtime_error("FFT planning failed for " + grid_.describe());
}

SpectralGrid::~SpectralGrid() = default;

SpectralWorkspace SpectralGrid::make_workspace() const
{
  const int d = grid_.dim();
  const int n = grid_.points_per_axis();
  const int m = grid_.inner_range().count();
  SpectralWorkspace ws;
  ws.real.assign(grid_.size(), 0.0);
  ws.a.assign(spectrum_size_, cplx{});
  ws.b.assign(spectrum_size_, cplx{});
  ws.rows.assign(ipow(m, d - 1) * n, 0.0);
  return ws;
}

void SpectralGrid::forward(std::span<const double> values, Spectrum& out,
                           SpectralWorkspace& ws) const
{
  if (values.size() != grid_.size())
    throw std::invalid_argument("field size does not match spectral grid");
  out.resize(spectrum_size_);
  std::copy(values.begin(), values.end(), ws.real.begin());
  fftw_execute_dft_r2c(plans_->r2c, ws.real.data(), fc(out.data()));
}

Spectrum SpectralGrid::forward(std::span<const double> values) const
{
  SpectralWorkspace ws = make_workspace();
  Spectrum out(spectrum_size_);
  forward(values, out, ws);
  return out;
}

Spectrum SpectralGrid::transfer(const Field& kernel) const
{
  if (kernel.grid() != grid_)
    throw std::invalid_argument("kernel grid differs from spectral grid");
  const int d = grid_.dim();
  const int n = grid_.points_per_axis();
  const int c = grid_.center_index();
  SpectralWorkspace ws = make_workspace();
  std::vector<int> k(d);
  for (std::size_t j = 0; j < grid_.size(); ++j) {
    grid_.unravel(j, k);
    std::size_t w = 0;
    for (int a = 0; a < d; ++a)
      w = w * n + wrap_index(k[a], c, n);
    ws.real[w] = kernel[j];
  }
  Spectrum out(spectrum_size_);
  fftw_execute_dft_r2c(plans_->r2c, ws.real.data(), fc(out.data()));
  const double dv = grid_.cell_volume();
  for (auto& v : out)
    v *= dv;
  return out;
}

void SpectralGrid::inverse_inner(Spectrum& spec, std::span<double> block,
                                 SpectralWorkspace& ws) const
{
  const int d = grid_.dim();
  const int n = grid_.points_per_axis();
  const int nh = n / 2 + 1;
  const IndexRange r = grid_.inner_range();
  const int m = r.count();
  if (spec.size() != spectrum_size_ || block.size() != grid_.inner_block_size())
    throw std::invalid_argument("inverse_inner: buffer size mismatch");

  // transform axis a into ws.b, then compact its inner rows back into spec
  cplx* cur = spec.data();
  cplx* tmp = ws.b.data();
  for (int a = 0; a + 1 < d; ++a) {
    fftw_execute_dft(plans_->axis[a], fc(cur), fc(tmp));
    const std::size_t stride = ipow(n, d - 2 - a) * nh;
    const std::size_t outer = ipow(m, a);
    for (std::size_t o = 0; o < outer; ++o) {
      const cplx* src = tmp + (o * n + r.lo) * stride;
      cplx* dst = cur + o * m * stride;
      std::memcpy(static_cast<void*>(dst), src, sizeof(cplx) * stride * m);
    }
  }
  fftw_execute_dft_c2r(plans_->c2r_rows, fc(cur), ws.rows.data());

  const double scale = 1.0 / static_cast<double>(grid_.size());
  const std::size_t nrows = ipow(m, d - 1);
  for (std::size_t row = 0; row < nrows; ++row) {
    const double* src = ws.rows.data() + row * n + r.lo;
    double* dst = block.data() + row * m;
    for (int i = 0; i < m; ++i)
      dst[i] = src[i] * scale;
  }
}

void SpectralGrid::inverse_full(Spectrum& spec, std::span<double> out,
                                SpectralWorkspace& ws) const
{
  if (spec.size() != spectrum_size_ || out.size() != grid_.size())
    throw std::invalid_argument("inverse_full: buffer size mismatch");
  fftw_execute_dft_c2r(plans_->c2r_full, fc(spec.data()), ws.real.data());
  const double scale = 1.0 / static_cast<double>(grid_.size());
  for (std::size_t j = 0; j < out.size(); ++j)
    out[j] = ws.real[j] * scale;
}

double SpectralGrid::l2_from_transfer(std::span<const cplx> tf) const
{
  double s = 0.0;
  for (std::size_t f = 0; f < tf.size(); ++f)
    s += weights_[f] * std::norm(tf[f]);
  return std::sqrt(s / (static_cast<double>(grid_.size()) * grid_.cell_volume()));
}

double SpectralGrid::l2_of_combination(std::span<const cplx> a, std::span<const cplx> b,
                                       std::span<const cplx> c) const
{
  double s = 0.0;
  for (std::size_t f = 0; f < a.size(); ++f)
    s += weights_[f] * std::norm(a[f] * b[f] - c[f]);
  return std::sqrt(s / (static_cast<double>(grid_.size()) * grid_.cell_volume()));
}

bool SpectralGrid::fits_inner(int reach) const
{
  return footprint_fits(grid_, reach);
}

bool footprint_fits(const GridSpec& grid, int reach)
{
  const IndexRange r = grid.inner_range();
  return r.lo - reach >= 0 && r.hi + reach <= grid.points_per_axis() - 1;
}

Field SpectralGrid::kernel_from_transfer(std::span<const cplx> tf) const
{
  const int d = grid_.dim();
  const int n = grid_.points_per_axis();
  const int c = grid_.center_index();
  Spectrum spec(tf.begin(), tf.end());
  SpectralWorkspace ws = make_workspace();
  std::vector<double> wrapped(grid_.size());
  inverse_full(spec, wrapped, ws);
  const double inv = 1.0 / grid_.cell_volume();
  std::vector<double> values(grid_.size());
  std::vector<int> k(d);
  for (std::size_t j = 0; j < grid_.size(); ++j) {
    grid_.unravel(j, k);
    std::size_t w = 0;
    for (int a = 0; a < d; ++a)
      w = w * n + wrap_index(k[a], c, n);
    values[j] = wrapped[w] * inv;
  }
  return Field(grid_, std::move(values));
}

int kernel_reach(const Field& kernel)
{
  const GridSpec& g = kernel.grid();
  const int d = g.dim();
  const int c = g.center_index();
  std::vector<int> k(d);
  int reach = -1;
  for (std::size_t j = 0; j < g.size(); ++j) {
    if (kernel[j] == 0.0)
      continue;
    g.unravel(j, k);
    for (int a = 0; a < d; ++a)
      reach = std::max(reach, std::abs(k[a] - c));
  }
  return reach;
}

Field apply_kernel(const Field& kernel, const Field& input, OutputRegion region)
{
  const GridSpec& g = input.grid();
  if (kernel.grid() != g)
    throw std::invalid_argument("kernel and input live on different grids");
  const int reach = std::max(kernel_reach(kernel), 0);
  SpectralGrid sg(g);
  if (!sg.fits_inner(reach))
    throw std::invalid_argument("kernel support of reach " + std::to_string(reach) +
                                " nodes overflows " + g.describe());

  Spectrum tf = sg.transfer(kernel);
  SpectralWorkspace ws = sg.make_workspace();
  Spectrum y(sg.spectrum_size());
  sg.forward(input.values(), y, ws);
  for (std::size_t f = 0; f < y.size(); ++f)
    y[f] *= std::conj(tf[f]);

  Field out(g);
  const int d = g.dim();
  const int n = g.points_per_axis();
  std::vector<int> k(d);
  if (region == OutputRegion::inner) {
    std::vector<double> block(g.inner_block_size());
    sg.inverse_inner(y, block, ws);
    const IndexRange r = g.inner_range();
    const int m = r.count();
    for (std::size_t b = 0; b < block.size(); ++b) {
      std::size_t rem = b;
      for (int a = d - 1; a >= 0; --a) {
        k[a] = static_cast<int>(rem % m) + r.lo;
        rem /= m;
      }
      out[g.ravel(k)] = block[b];
    }
    return out;
  }

  std::vector<double> full(g.size());
  sg.inverse_full(y, full, ws);
  for (std::size_t j = 0; j < g.size(); ++j) {
    g.unravel(j, k);
    bool inside = true;
    for (int a = 0; a < d; ++a)
      inside = inside && k[a] - reach >= 0 && k[a] + reach <= n - 1;
    if (inside)
      out[j] = full[j];
  }
  return out;
}

} // namespace structadapt
