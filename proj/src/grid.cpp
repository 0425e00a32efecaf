#include "structadapt/grid.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace structadapt {

namespace {

constexpr double kEdgeTol = 1e-12;

std::size_t ipow(std::size_t base, int e)
{
  std::size_t r = 1;
  for (int i = 0; i < e; ++i)
    r *= base;
  return r;
}

template <typename T>
void put_le(std::ostream& os, T value)
{
  static_assert(std::endian::native == std::endian::little,
                "field serialization assumes a little-endian host");
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  os.write(buf, sizeof(T));
}

template <typename T>
T get_le(std::istream& is)
{
  char buf[sizeof(T)];
  if (!is.read(buf, sizeof(T)))
    throw std::runtime_error("field stream truncated");
  T value;
  std::memcpy(&value, buf, sizeof(T));
  return value;
}

} // namespace

void GridSpec::unravel(std::size_t j, std::span<int> k) const
{
  for (int a = dim_ - 1; a >= 0; --a) {
    k[a] = static_cast<int>(j % n_);
    j /= n_;
  }
}

std::size_t GridSpec::ravel(std::span<const int> k) const
{
  std::size_t j = 0;
  for (int a = 0; a < dim_; ++a)
    j = j * n_ + static_cast<std::size_t>(k[a]);
  return j;
}

void GridSpec::node(std::size_t j, std::span<double> x) const
{
  for (int a = dim_ - 1; a >= 0; --a) {
    x[a] = coordinate(static_cast<int>(j % n_));
    j /= n_;
  }
}

double GridSpec::inner_weight(int k) const
{
  if (!inner_range_.contains(k))
    return 0.0;
  return inner_weights_[k - inner_range_.lo];
}

std::size_t GridSpec::inner_block_size() const
{
  return ipow(static_cast<std::size_t>(inner_range_.count()), dim_);
}

double GridSpec::window_measure() const
{
  return std::pow(2.0 * half_width_, dim_);
}

bool GridSpec::operator==(const GridSpec& other) const
{
  return dim_ == other.dim_ && n_ == other.n_ &&
         half_width_ == other.half_width_;
}

std::string GridSpec::describe() const
{
  std::ostringstream os;
  os.precision(17);
  os << "grid(d=" << dim_ << ", n=" << n_ << ", W=" << half_width_ << ")";
  return os.str();
}

double min_half_width(int dim)
{
  return 0.5 + std::sqrt(static_cast<double>(dim));
}

GridSpec make_grid(int dim, int points_per_axis, double half_width)
{
  if (dim < 1)
    throw std::invalid_argument("grid dimension must be >= 1");
  if (points_per_axis < 9)
    throw std::invalid_argument("points_per_axis must be >= 9");
  if (points_per_axis % 2 == 0)
    throw std::invalid_argument(
      "points_per_axis must be odd so that the origin is a node");
  if (!(half_width >= min_half_width(dim)))
    throw std::invalid_argument(
      "half_width " + std::to_string(half_width) + " below margin 1/2+sqrt(d) = " +
      std::to_string(min_half_width(dim)));

  GridSpec g;
  g.dim_ = dim;
  g.n_ = points_per_axis;
  g.half_width_ = half_width;
  g.spacing_ = 2.0 * half_width / (points_per_axis - 1);
  g.cell_volume_ = std::pow(g.spacing_, dim);
  g.size_ = ipow(static_cast<std::size_t>(points_per_axis), dim);

  int c = g.center_index();
  // cells meeting [-1/2, 1/2]: |x| < 1/2 + spacing/2
  int m = static_cast<int>(std::ceil(0.5 / g.spacing_ + 0.5)) - 1;
  while ((m + 1) * g.spacing_ < 0.5 + 0.5 * g.spacing_ - kEdgeTol)
    ++m;
  while (m > 0 && m * g.spacing_ >= 0.5 + 0.5 * g.spacing_ - kEdgeTol)
    --m;
  g.inner_range_ = {c - m, c + m};
  int mc = static_cast<int>(std::floor(0.5 / g.spacing_ + kEdgeTol));
  g.closed_range_ = {c - mc, c + mc};
  if (g.closed_range_.count() < 1)
    throw std::invalid_argument("no grid node inside the estimation window");

  const int cnt = g.inner_range_.count();
  g.inner_weights_.assign(cnt, 0.0);
  for (int i = 0; i < cnt; ++i) {
    double x = g.coordinate(g.inner_range_.lo + i);
    double lo = std::max(x - 0.5 * g.spacing_, -0.5);
    double hi = std::min(x + 0.5 * g.spacing_, 0.5);
    double len = std::max(hi - lo, 0.0) / g.spacing_;
    double s = (0.5 * (lo + hi) - x) / g.spacing_;
    if (len >= 1.0 - kEdgeTol || s == 0.0 || cnt == 1) {
      g.inner_weights_[i] += len;
      continue;
    }
    int nbr = s < 0.0 ? i - 1 : i + 1;
    g.inner_weights_[i] += len * (1.0 - std::abs(s));
    g.inner_weights_[nbr] += len * std::abs(s);
  }
  return g;
}

GridSpec default_grid(int dim, int points_per_axis)
{
  // two spare cells beyond the margin rule
  double base = min_half_width(dim);
  double w = base * (points_per_axis - 1) / (points_per_axis - 5.0);
  return make_grid(dim, points_per_axis, w);
}

Field::Field(GridSpec grid)
  : grid_(std::move(grid))
  , values_(grid_.size(), 0.0)
{}

Field::Field(GridSpec grid, std::vector<double> values)
  : grid_(std::move(grid))
  , values_(std::move(values))
{
  if (values_.size() != grid_.size())
    throw std::invalid_argument("field size does not match grid");
  for (std::size_t j = 0; j < values_.size(); ++j) {
    if (!std::isfinite(values_[j]))
      throw std::invalid_argument("non-finite field value at node " +
                                  std::to_string(j));
  }
}

Field& Field::operator+=(const Field& other)
{
  if (grid_ != other.grid_)
    throw std::invalid_argument("field grids differ");
  for (std::size_t j = 0; j < values_.size(); ++j)
    values_[j] += other.values_[j];
  return *this;
}

Field& Field::operator-=(const Field& other)
{
  if (grid_ != other.grid_)
    throw std::invalid_argument("field grids differ");
  for (std::size_t j = 0; j < values_.size(); ++j)
    values_[j] -= other.values_[j];
  return *this;
}

Field& Field::operator*=(double a)
{
  for (auto& v : values_)
    v *= a;
  return *this;
}

std::vector<double> Field::inner_block() const
{
  const int d = grid_.dim();
  const int n = grid_.points_per_axis();
  const IndexRange r = grid_.inner_range();
  const int m = r.count();
  std::vector<double> out(grid_.inner_block_size());
  std::vector<int> k(d);
  for (std::size_t b = 0; b < out.size(); ++b) {
    std::size_t rem = b;
    std::size_t j = 0;
    std::size_t stride = 1;
    for (int a = d - 1; a >= 0; --a) {
      int ka = static_cast<int>(rem % m) + r.lo;
      rem /= m;
      j += static_cast<std::size_t>(ka) * stride;
      stride *= n;
    }
    out[b] = values_[j];
  }
  return out;
}

Field operator+(Field a, const Field& b)
{
  a += b;
  return a;
}

Field operator-(Field a, const Field& b)
{
  a -= b;
  return a;
}

Field operator*(double a, Field f)
{
  f *= a;
  return f;
}

Field sample_function(const ScalarFunction& f, const GridSpec& grid)
{
  std::vector<double> values(grid.size());
  std::vector<double> x(grid.dim());
  for (std::size_t j = 0; j < values.size(); ++j) {
    grid.node(j, x);
    double v = f(x);
    if (!std::isfinite(v)) {
      std::ostringstream os;
      os << "function not finite at node " << j << " (";
      for (int a = 0; a < grid.dim(); ++a)
        os << (a ? ", " : "") << x[a];
      os << ")";
      throw std::domain_error(os.str());
    }
    values[j] = v;
  }
  return Field(grid, std::move(values));
}

double inner_block_norm(std::span<const double> block, const GridSpec& grid, double p)
{
  const int d = grid.dim();
  const IndexRange r = grid.inner_range();
  const int m = r.count();
  if (block.size() != grid.inner_block_size())
    throw std::invalid_argument("inner block has the wrong size");

  if (std::isinf(p)) {
    double best = 0.0;
    for (double v : block)
      best = std::max(best, std::abs(v));
    return best;
  }

  if (p < 1.0)
    throw std::invalid_argument("L_p norm requires p >= 1");
  std::vector<double> w(m);
  for (int i = 0; i < m; ++i)
    w[i] = grid.inner_weight(r.lo + i);

  double sum = 0.0;
  if (d == 1) {
    for (int i = 0; i < m; ++i)
      sum += w[i] * std::pow(std::abs(block[i]), p);
  } else {
    for (std::size_t b = 0; b < block.size(); ++b) {
      std::size_t rem = b;
      double wt = 1.0;
      for (int a = 0; a < d; ++a) {
        wt *= w[rem % m];
        rem /= m;
      }
      double v = std::abs(block[b]);
      sum += wt * (p == 2.0 ? v * v : (p == 1.0 ? v : std::pow(v, p)));
    }
  }
  return std::pow(sum * grid.cell_volume(), 1.0 / p);
}

double lp_norm(const Field& field, double p, Region region)
{
  const GridSpec& grid = field.grid();
  if (region == Region::inner)
    return inner_block_norm(field.inner_block(), grid, p);

  auto v = field.values();
  if (std::isinf(p)) {
    double best = 0.0;
    for (double x : v)
      best = std::max(best, std::abs(x));
    return best;
  }
  if (p < 1.0)
    throw std::invalid_argument("L_p norm requires p >= 1");
  double sum = 0.0;
  for (double x : v)
    sum += std::pow(std::abs(x), p);
  return std::pow(sum * grid.cell_volume(), 1.0 / p);
}

void write_field_binary(std::ostream& os, const Field& field)
{
  const GridSpec& g = field.grid();
  put_le<std::int32_t>(os, g.dim());
  put_le<std::int32_t>(os, g.points_per_axis());
  put_le<double>(os, g.half_width());
  for (double v : field.values())
    put_le<double>(os, v);
}

Field read_field_binary(std::istream& is)
{
  auto dim = get_le<std::int32_t>(is);
  auto n = get_le<std::int32_t>(is);
  auto w = get_le<double>(is);
  GridSpec g = make_grid(dim, n, w);
  std::vector<double> values(g.size());
  for (auto& v : values)
    v = get_le<double>(is);
  return Field(g, std::move(values));
}

void write_field_csv(std::ostream& os, const Field& field)
{
  const GridSpec& g = field.grid();
  for (int a = 0; a < g.dim(); ++a)
    os << "x" << (a + 1) << ",";
  os << "value\n";
  std::vector<double> x(g.dim());
  char buf[64];
  for (std::size_t j = 0; j < field.size(); ++j) {
    g.node(j, x);
    for (int a = 0; a < g.dim(); ++a) {
      std::snprintf(buf, sizeof(buf), "%.12g,", x[a]);
      os << buf;
    }
    std::snprintf(buf, sizeof(buf), "%.12g\n", field[j]);
    os << buf;
  }
}

} // namespace structadapt
