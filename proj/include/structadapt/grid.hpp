#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace structadapt {

//! Regions over which norms are taken.
//! `inner` is the estimation window D0 = [-1/2, 1/2]^d, `full` the whole grid.
enum class Region
{
  inner,
  full
};

//! Output regions for smoothing operations.
//! `inner` covers the nodes needed for norms on D0, `extended` every node
//! whose kernel footprint stays inside the grid.
enum class OutputRegion
{
  inner,
  extended
};

//! Closed index range [lo, hi] along one axis.
struct IndexRange
{
  int lo = 0;
  int hi = -1;
  int count() const { return hi - lo + 1; }
  bool contains(int k) const { return k >= lo && k <= hi; }
};

//! Regular grid over [-W, W]^d with n nodes per axis (n odd, origin is a node).
//!
//! Node k on an axis sits at (k - c) * spacing with c = (n - 1) / 2, which is
//! -W + k * spacing in exact arithmetic and keeps the node set exactly
//! symmetric under negation in floating point.
class GridSpec
{
public:
  GridSpec() = default;

  int dim() const { return dim_; }
  int points_per_axis() const { return n_; }
  double half_width() const { return half_width_; }
  static constexpr double inner_half_width() { return 0.5; }
  double spacing() const { return spacing_; }
  double cell_volume() const { return cell_volume_; }
  int center_index() const { return (n_ - 1) / 2; }

  //! Number of nodes, n^d.
  std::size_t size() const { return size_; }
  double coordinate(int k) const { return (k - center_index()) * spacing_; }

  //! Per-axis index of node j (row-major, last axis fastest).
  void unravel(std::size_t j, std::span<int> k) const;
  std::size_t ravel(std::span<const int> k) const;
  void node(std::size_t j, std::span<double> x) const;

  //! Nodes whose cells [x - dx/2, x + dx/2] meet [-1/2, 1/2]. Norms on D0
  //! and the sup over D0 are taken over these nodes.
  IndexRange inner_range() const { return inner_range_; }
  //! Nodes with |x| <= 1/2.
  IndexRange closed_inner_range() const { return closed_range_; }
  //! One-axis quadrature weight of node k (in units of dx) for integrals over
  //! [-1/2, 1/2]. Full cells weigh 1; a cell cut by the boundary contributes
  //! its covered length, evaluated at the covered midpoint by linear
  //! interpolation towards the interior neighbour. Exact for linear integrands.
  double inner_weight(int k) const;
  //! Number of nodes in the inner block, inner_range().count()^d.
  std::size_t inner_block_size() const;

  //! Lebesgue measure of the observation window, (2W)^d.
  double window_measure() const;

  bool operator==(const GridSpec& other) const;
  bool operator!=(const GridSpec& other) const { return !(*this == other); }

  std::string describe() const;

private:
  friend GridSpec make_grid(int, int, double);

  int dim_ = 0;
  int n_ = 0;
  double half_width_ = 0.0;
  double spacing_ = 0.0;
  double cell_volume_ = 0.0;
  std::size_t size_ = 0;
  IndexRange inner_range_;
  IndexRange closed_range_;
  std::vector<double> inner_weights_;
};

//! Smallest admissible half width: two rotated kernel radii around D0.
double min_half_width(int dim);

//! Validated grid constructor.
//! Throws std::invalid_argument when dim < 1, n < 9, n even, or the margin
//! rule half_width >= 1/2 + sqrt(dim) is violated.
GridSpec make_grid(int dim, int points_per_axis, double half_width);

//! Grid used when a configuration does not pin W: margin plus a small pad so
//! that the cells straddling the border of D0 stay clear of wrap-around.
GridSpec default_grid(int dim, int points_per_axis);

//! Scalar field sampled on a grid, row-major.
class Field
{
public:
  Field() = default;
  explicit Field(GridSpec grid);
  //! Throws std::invalid_argument on a size mismatch or a non-finite entry.
  Field(GridSpec grid, std::vector<double> values);

  const GridSpec& grid() const { return grid_; }
  std::size_t size() const { return values_.size(); }
  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }
  double operator[](std::size_t j) const { return values_[j]; }
  double& operator[](std::size_t j) { return values_[j]; }

  Field& operator+=(const Field& other);
  Field& operator-=(const Field& other);
  Field& operator*=(double a);

  //! Values on the inner block (inner_range()^d), row-major.
  std::vector<double> inner_block() const;

private:
  GridSpec grid_;
  std::vector<double> values_;
};

Field operator+(Field a, const Field& b);
Field operator-(Field a, const Field& b);
Field operator*(double a, Field f);

using ScalarFunction = std::function<double(std::span<const double>)>;

//! values[j] = f(node_j). Throws std::domain_error naming the first node where
//! f is not finite.
Field sample_function(const ScalarFunction& f, const GridSpec& grid);

//! Discrete L_p norm. For p < inf: (sum_j w_j |v_j|^p dx^d)^(1/p), where on the
//! inner region w_j is the product of the per-axis inner_weight() values and on
//! the full region w_j = 1. For p = inf: max |v_j| over nodes of the region.
double lp_norm(const Field& field, double p, Region region);

//! Same as lp_norm(..., Region::inner) but for values already restricted to
//! the inner block (ordering as Field::inner_block()).
double inner_block_norm(std::span<const double> block, const GridSpec& grid, double p);

//! Constant used to encode p = inf in configuration files and tables.
inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

//! Flat binary layout: int32 dim, int32 n, float64 W (little-endian), then
//! n^d float64 values in row-major order.
void write_field_binary(std::ostream& os, const Field& field);
Field read_field_binary(std::istream& is);

//! CSV with columns x1..xd,value. Intended for small grids.
void write_field_csv(std::ostream& os, const Field& field);

} // namespace structadapt
