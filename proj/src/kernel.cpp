#include "structadapt/kernel.hpp"

#include "structadapt/spectral.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <boost/multiprecision/cpp_int.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

namespace structadapt {

namespace {

using boost::multiprecision::cpp_rational;

// int_{-1}^{1} z^{2m} (1 - z^2)^2 dz
cpp_rational window_moment(int m)
{
  return cpp_rational(2) * (cpp_rational(1, 2 * m + 1) - cpp_rational(2, 2 * m + 3) +
                            cpp_rational(1, 2 * m + 5));
}

double g_value(const std::vector<double>& c, double x)
{
  if (!(std::abs(x) < 0.5))
    return 0.0;
  double y = 4.0 * x * x;
  double p = 0.0;
  for (auto it = c.rbegin(); it != c.rend(); ++it)
    p = p * y + *it;
  double w = 1.0 - y;
  return p * w * w;
}

// multi-indices with even total degree <= max_degree
std::vector<std::vector<int>> even_monomials(int d, int max_degree)
{
  std::vector<std::vector<int>> out;
  std::vector<int> a(d, 0);
  while (true) {
    int deg = 0;
    for (int v : a)
      deg += v;
    if (deg % 2 == 0 && deg <= max_degree)
      out.push_back(a);
    int i = d - 1;
    while (i >= 0 && a[i] == max_degree) {
      a[i] = 0;
      --i;
    }
    if (i < 0)
      break;
    ++a[i];
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& x, const auto& y) {
    int dx = 0, dy = 0;
    for (int v : x)
      dx += v;
    for (int v : y)
      dy += v;
    return dx < dy;
  });
  return out;
}

struct SparseTerm
{
  std::vector<std::size_t> index;
  std::vector<double> value;
};

// rescales (order < 2) or corrects a sampled term in place so that its
// discrete moments of even degree <= 2 floor(order/2) match a unit delta
void correct_term(SparseTerm& term, const GridSpec& grid, int order)
{
  const int d = grid.dim();
  const double dv = grid.cell_volume();
  const int q = order / 2;
  if (q == 0) {
    double s = 0.0;
    for (double v : term.value)
      s += v;
    s *= dv;
    if (!(std::abs(s) > 0.0))
      throw std::invalid_argument("kernel term vanishes on the grid; bandwidth below resolution");
    for (double& v : term.value)
      v /= s;
    return;
  }

  auto mono = even_monomials(d, 2 * q);
  const std::size_t nm = mono.size();
  std::vector<double> x(d);
  double scale = 0.0;
  for (std::size_t idx : term.index) {
    grid.node(idx, x);
    for (double xi : x)
      scale = std::max(scale, std::abs(xi));
  }
  if (scale <= 0.0)
    throw std::invalid_argument("kernel term collapses to one node; bandwidth below resolution");

  auto eval_mono = [&](const std::vector<int>& a, const std::vector<double>& z) {
    double r = 1.0;
    for (int i = 0; i < d; ++i)
      for (int k = 0; k < a[i]; ++k)
        r *= z[i];
    return r;
  };

  // additive correction v + |v| q(x): the Gram matrix weighted by |v| is
  // positive definite, unlike the signed one, whose mixed fourth moments
  // vanish for product kernels with zero second moments
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(nm, nm);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nm);
  rhs(0) = 1.0;
  std::vector<double> z(d);
  std::vector<double> m(nm);
  for (std::size_t t = 0; t < term.index.size(); ++t) {
    grid.node(term.index[t], x);
    for (int i = 0; i < d; ++i)
      z[i] = x[i] / scale;
    for (std::size_t k = 0; k < nm; ++k)
      m[k] = eval_mono(mono[k], z);
    double v = term.value[t] * dv;
    double w = std::abs(v);
    for (std::size_t r = 0; r < nm; ++r) {
      rhs(r) -= v * m[r];
      for (std::size_t k = 0; k < nm; ++k)
        A(r, k) += w * m[r] * m[k];
    }
  }
  Eigen::LDLT<Eigen::MatrixXd> ldlt(A);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive() || ldlt.rcond() < 1e-14)
    throw std::invalid_argument("moment correction system is singular");
  Eigen::VectorXd coef = ldlt.solve(rhs);
  // one step of refinement
  coef += ldlt.solve(rhs - A * coef);

  for (std::size_t t = 0; t < term.index.size(); ++t) {
    grid.node(term.index[t], x);
    for (int i = 0; i < d; ++i)
      z[i] = x[i] / scale;
    double qv = 0.0;
    for (std::size_t k = 0; k < nm; ++k)
      qv += coef(k) * eval_mono(mono[k], z);
    term.value[t] += std::abs(term.value[t]) * qv;
  }
}

} // namespace

UnivariateKernel::UnivariateKernel(int order, std::vector<double> coefficients)
  : order_(order)
  , coefficients_(std::move(coefficients))
{
  using boost::math::quadrature::gauss;
  auto g = [this](double x) { return (*this)(x); };
  auto sq_g = [this](double x) {
    double v = (*this)(x);
    return v * v;
  };
  // g^2 has degree <= 2 * (2 * 6 + 4) = 32 in x
  norm2_ = std::sqrt(2.0 * gauss<double, 30>::integrate(sq_g, 0.0, 0.5));

  // |g| is a polynomial between consecutive sign changes of P on [0, 1/2)
  std::vector<double> cuts{0.0};
  const int probes = 4096;
  double prev = g(0.0);
  for (int i = 1; i < probes; ++i) {
    double x = 0.5 * i / probes;
    double cur = g(x);
    if ((prev < 0.0) != (cur < 0.0)) {
      double lo = 0.5 * (i - 1) / probes, hi = x;
      for (int it = 0; it < 80; ++it) {
        double mid = 0.5 * (lo + hi);
        ((g(mid) < 0.0) == (prev < 0.0) ? lo : hi) = mid;
      }
      cuts.push_back(0.5 * (lo + hi));
    }
    prev = cur;
  }
  cuts.push_back(0.5);
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
    s += std::abs(gauss<double, 30>::integrate(g, cuts[i], cuts[i + 1]));
  norm1_ = 2.0 * s;
}

double UnivariateKernel::operator()(double x) const
{
  return g_value(coefficients_, x);
}

double UnivariateKernel::derivative(double x) const
{
  if (!(std::abs(x) < 0.5))
    return 0.0;
  double y = 4.0 * x * x;
  double p = 0.0;
  double dp = 0.0;
  const int q = static_cast<int>(coefficients_.size());
  for (int k = q - 1; k >= 0; --k) {
    dp = dp * y + p;
    p = p * y + coefficients_[k];
  }
  // dp is dP/dy; dy/dx = 8x
  double w = 1.0 - y;
  return dp * 8.0 * x * w * w + p * 2.0 * w * (-8.0 * x);
}

UnivariateKernel build_univariate_kernel(int order)
{
  if (order < 0 || order > 12)
    throw std::invalid_argument("kernel order must lie in [0, 12]");
  const int q = order / 2;
  const int n = q + 1;
  // row i: int x^{2i} g dx = delta_{i0}; substituting x = z/2 and scaling the
  // row by 4^i gives sum_k c_k J(i + k) / 2 = delta_{i0}
  std::vector<std::vector<cpp_rational>> a(n, std::vector<cpp_rational>(n + 1));
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < n; ++k)
      a[i][k] = window_moment(i + k) / 2;
    a[i][n] = (i == 0) ? 1 : 0;
  }
  for (int col = 0; col < n; ++col) {
    int piv = col;
    while (piv < n && a[piv][col] == 0)
      ++piv;
    if (piv == n)
      throw std::logic_error("moment system for the window kernel is singular");
    std::swap(a[col], a[piv]);
    for (int r = 0; r < n; ++r) {
      if (r == col || a[r][col] == 0)
        continue;
      cpp_rational f = a[r][col] / a[col][col];
      for (int k = col; k <= n; ++k)
        a[r][k] -= f * a[col][k];
    }
  }
  std::vector<double> c(n);
  for (int i = 0; i < n; ++i)
    c[i] = static_cast<double>(a[i][n] / a[i][i]);
  return UnivariateKernel(order, std::move(c));
}

double moment(const UnivariateKernel& g, int k)
{
  if (k < 0)
    throw std::invalid_argument("moment order must be >= 0");
  auto f = [&](double x) { return std::pow(x, k) * g(x); };
  // exact for polynomial degree <= 59
  return boost::math::quadrature::gauss<double, 30>::integrate(f, -0.5, 0.5);
}

int rotation_angle_count(int d)
{
  return d * (d - 1) / 2;
}

Eigen::MatrixXd rotation_matrix(int d, std::span<const double> angles)
{
  if (static_cast<int>(angles.size()) != rotation_angle_count(d))
    throw std::invalid_argument("rotation needs d(d-1)/2 angles");
  Eigen::MatrixXd e = Eigen::MatrixXd::Identity(d, d);
  std::size_t k = 0;
  for (int i = 0; i < d; ++i) {
    for (int j = i + 1; j < d; ++j) {
      Eigen::MatrixXd r = Eigen::MatrixXd::Identity(d, d);
      double c = std::cos(angles[k]);
      double s = std::sin(angles[k]);
      ++k;
      r(i, i) = c;
      r(j, j) = c;
      r(i, j) = -s;
      r(j, i) = s;
      e = e * r;
    }
  }
  return e;
}

ThetaPoint make_theta(Partition partition, std::vector<double> angles,
                      std::vector<double> bandwidth)
{
  const int d = static_cast<int>(bandwidth.size());
  ThetaPoint t;
  t.directions = rotation_matrix(d, angles);
  t.partition = canonical(std::move(partition));
  t.angles = std::move(angles);
  t.bandwidth = std::move(bandwidth);
  return t;
}

ThetaPoint make_theta(Partition partition, Eigen::MatrixXd directions,
                      std::vector<double> bandwidth)
{
  ThetaPoint t;
  t.partition = canonical(std::move(partition));
  t.directions = std::move(directions);
  t.bandwidth = std::move(bandwidth);
  return t;
}

void validate_theta(const ThetaPoint& theta, double eta, double h_min, double h_max)
{
  const int d = theta.dim();
  if (d < 1)
    throw std::invalid_argument("theta has no bandwidths");
  if (!is_partition_of(theta.partition, d))
    throw std::invalid_argument("blocks do not partition {1.." + std::to_string(d) + "}");
  if (theta.directions.rows() != d || theta.directions.cols() != d)
    throw std::invalid_argument("direction matrix must be d x d");
  for (int j = 0; j < d; ++j) {
    if (std::abs(theta.directions.col(j).norm() - 1.0) > 1e-12)
      throw std::invalid_argument("direction column " + std::to_string(j + 1) +
                                  " is not a unit vector");
  }
  if (std::abs(theta.directions.determinant()) < eta)
    throw std::invalid_argument("|det E| below eta");
  for (double h : theta.bandwidth) {
    if (!(h >= h_min && h <= h_max))
      throw std::invalid_argument("bandwidth " + std::to_string(h) + " outside [" +
                                  std::to_string(h_min) + ", " + std::to_string(h_max) + "]");
  }
}

KernelField build_structural_kernel(const ThetaPoint& theta, const UnivariateKernel& g,
                                    const GridSpec& grid, KernelDiscretization mode)
{
  const int d = grid.dim();
  if (theta.dim() != d)
    throw std::invalid_argument("theta dimension differs from grid dimension");
  if (!is_partition_of(theta.partition, d))
    throw std::invalid_argument("theta partition is invalid");
  for (double h : theta.bandwidth)
    if (!(h > 0.0 && h <= 1.0))
      throw std::invalid_argument("bandwidths must lie in (0, 1]");

  const Eigen::MatrixXd& e = theta.directions;
  const std::size_t nblocks = theta.partition.size();
  const double det = std::abs(e.determinant());

  // per coordinate scale used by term i: h_j for j in I_i, 1 otherwise
  std::vector<std::vector<double>> scales(nblocks + 1, std::vector<double>(d, 1.0));
  for (std::size_t i = 0; i < nblocks; ++i)
    for (int j : theta.partition[i])
      scales[i][j] = theta.bandwidth[j];
  // the last entry is G_0; skipped when there is a single block
  const std::size_t nterms = nblocks > 1 ? nblocks + 1 : 1;

  std::vector<SparseTerm> terms(nterms);
  std::vector<double> x(d);
  Eigen::VectorXd t(d);
  Eigen::VectorXd u(d);
  for (std::size_t idx = 0; idx < grid.size(); ++idx) {
    grid.node(idx, x);
    for (int a = 0; a < d; ++a)
      t(a) = x[a];
    u.noalias() = e.transpose() * t;
    bool outside = false;
    for (int a = 0; a < d; ++a)
      outside = outside || !(std::abs(u(a)) < 0.5);
    if (outside)
      continue;
    for (std::size_t i = 0; i < nterms; ++i) {
      const auto& sc = (i < nblocks) ? scales[i] : scales[nblocks];
      double v = 1.0;
      for (int a = 0; a < d && v != 0.0; ++a)
        v *= g(u(a) / sc[a]) / sc[a];
      if (v != 0.0) {
        terms[i].index.push_back(idx);
        terms[i].value.push_back(v);
      }
    }
  }

  std::vector<double> values(grid.size(), 0.0);
  for (std::size_t i = 0; i < nterms; ++i) {
    if (mode == KernelDiscretization::moment_corrected)
      correct_term(terms[i], grid, g.order());
    double w = (i < nblocks) ? 1.0 : -static_cast<double>(nblocks - 1);
    if (mode == KernelDiscretization::sampled)
      w *= det;
    for (std::size_t k = 0; k < terms[i].index.size(); ++k)
      values[terms[i].index[k]] += w * terms[i].value[k];
  }

  KernelField kf;
  kf.theta = theta;
  kf.values = Field(grid, std::move(values));
  kf.reach = std::max(kernel_reach(kf.values), 0);
  // room for the kernel and for a second smoothing pass around D0
  if (!footprint_fits(grid, 2 * kf.reach))
    throw std::invalid_argument("kernel support (reach " + std::to_string(kf.reach) +
                                " nodes) overflows the margin of " + grid.describe());
  auto norms = kernel_norms(kf);
  kf.norm1 = norms.norm1;
  kf.norm2 = norms.norm2;
  double s = 0.0;
  for (double v : kf.values.values())
    s += v;
  kf.integral = s * grid.cell_volume();
  return kf;
}

KernelNorms kernel_norms(const KernelField& k)
{
  double s1 = 0.0;
  double s2 = 0.0;
  for (double v : k.values.values()) {
    s1 += std::abs(v);
    s2 += v * v;
  }
  const double dv = k.values.grid().cell_volume();
  return {s1 * dv, std::sqrt(s2 * dv)};
}

KernelNorms kernel_norm_bounds(const ThetaPoint& theta, const UnivariateKernel& g)
{
  const int d = theta.dim();
  const double nb = static_cast<double>(theta.partition.size());
  KernelNorms b;
  b.norm1 = (2.0 * nb - 1.0) * std::pow(g.norm1(), d);
  double s = nb - 1.0;
  for (const auto& block : theta.partition) {
    double prod = 1.0;
    for (int j : block)
      prod /= std::sqrt(theta.bandwidth[j]);
    s += prod;
  }
  b.norm2 = std::sqrt(std::abs(theta.directions.determinant())) * std::pow(g.norm2(), d) * s;
  return b;
}

Field convolve_kernels(const KernelField& a, const KernelField& b, const SpectralGrid& sg)
{
  const GridSpec& grid = a.values.grid();
  if (b.values.grid() != grid || sg.grid() != grid)
    throw std::invalid_argument("kernels live on different grids");
  if (a.reach + b.reach > grid.center_index())
    throw std::invalid_argument("combined kernel support overflows " + grid.describe());
  Spectrum ta = sg.transfer(a.values);
  Spectrum tb = sg.transfer(b.values);
  for (std::size_t f = 0; f < ta.size(); ++f)
    ta[f] *= tb[f];
  return sg.kernel_from_transfer(ta);
}

Field convolve_kernels(const KernelField& a, const KernelField& b)
{
  SpectralGrid sg(a.values.grid());
  return convolve_kernels(a, b, sg);
}

CollectionConstants collection_constants(std::span<const KernelField> kernels)
{
  if (kernels.empty())
    throw std::invalid_argument("empty kernel collection");
  CollectionConstants c;
  c.count = kernels.size();
  for (const auto& k : kernels) {
    c.m_of_k = std::max(c.m_of_k, k.norm1);
    c.sigma_of_k = std::max(c.sigma_of_k, k.norm2);
  }
  return c;
}

CollectionConstants collection_constants(std::span<const ThetaPoint> thetas,
                                         const UnivariateKernel& g, const GridSpec& grid)
{
  std::vector<KernelField> kernels;
  kernels.reserve(thetas.size());
  for (const auto& t : thetas)
    kernels.push_back(build_structural_kernel(t, g, grid));
  return collection_constants(kernels);
}

void write_kernel_catalog(std::ostream& os, std::span<const KernelField> kernels)
{
  if (kernels.empty())
    return;
  const int d = kernels.front().theta.dim();
  os << "theta-id,partition,rotation-angles";
  for (int j = 0; j < d; ++j)
    os << ",h" << (j + 1);
  os << ",norm1,norm2,integral\n";
  char buf[64];
  for (std::size_t i = 0; i < kernels.size(); ++i) {
    const auto& k = kernels[i];
    os << i << ',' << to_string(k.theta.partition) << ',';
    for (std::size_t a = 0; a < k.theta.angles.size(); ++a) {
      std::snprintf(buf, sizeof(buf), "%s%.12g", a ? ";" : "", k.theta.angles[a]);
      os << buf;
    }
    for (double h : k.theta.bandwidth) {
      std::snprintf(buf, sizeof(buf), ",%.12g", h);
      os << buf;
    }
    std::snprintf(buf, sizeof(buf), ",%.12g,%.12g,%.12g\n", k.norm1, k.norm2, k.integral);
    os << buf;
  }
}

} // namespace structadapt
