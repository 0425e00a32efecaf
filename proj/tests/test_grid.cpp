#include "structadapt/grid.hpp"
#include "structadapt/noise.hpp"
#include "structadapt/spectral.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

using namespace structadapt;

namespace {

// direct O(N * support) correlation, independent of the FFT path
Field direct_apply(const Field& kernel, const Field& input, int reach)
{
  const GridSpec& g = input.grid();
  const int d = g.dim();
  const int n = g.points_per_axis();
  const int c = g.center_index();
  const IndexRange r = g.inner_range();
  Field out(g);
  std::vector<int> k(d), t(d), kc(d);
  for (std::size_t j = 0; j < g.size(); ++j) {
    g.unravel(j, k);
    bool inner = true;
    for (int a = 0; a < d; ++a)
      inner = inner && r.contains(k[a]);
    if (!inner)
      continue;
    double s = 0.0;
    for (std::size_t m = 0; m < kernel.size(); ++m) {
      if (kernel[m] == 0.0)
        continue;
      g.unravel(m, kc);
      bool ok = true;
      for (int a = 0; a < d; ++a) {
        t[a] = k[a] + kc[a] - c;
        ok = ok && t[a] >= 0 && t[a] < n;
      }
      if (ok)
        s += kernel[m] * input[g.ravel(t)];
    }
    out[j] = s * g.cell_volume();
  }
  (void)reach;
  return out;
}

double g0(double x)
{
  return std::abs(x) < 0.5 ? 15.0 / 8.0 * std::pow(1 - 4 * x * x, 2) : 0.0;
}

} // namespace

TEST(MakeGrid, UnitLineGrid)
{
  GridSpec g = make_grid(1, 257, 1.5);
  EXPECT_DOUBLE_EQ(g.spacing(), 3.0 / 256.0);
  EXPECT_EQ(g.coordinate(128), 0.0);
  EXPECT_DOUBLE_EQ(g.coordinate(0), -1.5);
  EXPECT_DOUBLE_EQ(g.coordinate(256), 1.5);
  EXPECT_EQ(g.size(), 257u);
}

TEST(MakeGrid, PlaneGridArithmetic)
{
  // W = 1.75 sits below the two-radius margin for d = 2; the same node count
  // at the smallest admissible width gives the analogous geometry
  EXPECT_THROW(make_grid(2, 65, 1.75), std::invalid_argument);
  double w = min_half_width(2);
  GridSpec g = make_grid(2, 65, w);
  EXPECT_DOUBLE_EQ(g.spacing(), 2 * w / 64);
  EXPECT_EQ(g.size(), 65u * 65u);
}

TEST(MakeGrid, RejectsInvalid)
{
  EXPECT_THROW(make_grid(2, 65, 0.9), std::invalid_argument);
  EXPECT_THROW(make_grid(1, 256, 1.5), std::invalid_argument);
  EXPECT_THROW(make_grid(1, 7, 1.5), std::invalid_argument);
  EXPECT_THROW(make_grid(0, 65, 1.5), std::invalid_argument);
}

TEST(MakeGrid, NodesSymmetric)
{
  GridSpec g = make_grid(1, 101, 1.7);
  for (int k = 0; k < 101; ++k)
    EXPECT_EQ(g.coordinate(k), -g.coordinate(100 - k));
  EXPECT_GE(g.closed_inner_range().count(), 1);
}

TEST(SampleFunction, ConstantAndLinear)
{
  GridSpec g = make_grid(1, 257, 1.5);
  Field one = sample_function([](std::span<const double>) { return 1.0; }, g);
  for (double v : one.values())
    EXPECT_EQ(v, 1.0);
  Field lin = sample_function([](std::span<const double> x) { return x[0]; }, g);
  EXPECT_DOUBLE_EQ(lin[0], -1.5);
  EXPECT_DOUBLE_EQ(lin[256], 1.5);
  for (int k = 1; k < 257; ++k)
    EXPECT_NEAR(lin[k] - lin[k - 1], 3.0 / 256.0, 1e-15);
}

TEST(SampleFunction, ExpSquareMatchesPointwise)
{
  GridSpec g = make_grid(1, 257, 1.5);
  Field f = sample_function([](std::span<const double> x) { return std::exp(x[0] * x[0]); }, g);
  for (int k = 0; k < 257; ++k)
    EXPECT_EQ(f[k], std::exp(g.coordinate(k) * g.coordinate(k)));
}

TEST(SampleFunction, NonFiniteNamesNode)
{
  GridSpec g = make_grid(1, 257, 1.5);
  try {
    sample_function([](std::span<const double> x) { return x[0] > 1.0 ? INFINITY : 0.0; }, g);
    FAIL() << "expected domain_error";
  } catch (const std::domain_error& e) {
    EXPECT_NE(std::string(e.what()).find("node"), std::string::npos);
  }
}

TEST(Field, RejectsNonFinite)
{
  GridSpec g = make_grid(1, 9, 1.5);
  std::vector<double> v(9, 0.0);
  v[3] = NAN;
  EXPECT_THROW(Field(g, v), std::invalid_argument);
  EXPECT_THROW(Field(g, std::vector<double>(8, 0.0)), std::invalid_argument);
}

TEST(Noise, Deterministic)
{
  GridSpec g = make_grid(2, 33, 2.0);
  Field a = draw_noise(g, 42);
  Field b = draw_noise(g, 42);
  Field c = draw_noise(g, 43);
  for (std::size_t j = 0; j < a.size(); ++j)
    EXPECT_EQ(a[j], b[j]);
  int same = 0;
  for (std::size_t j = 0; j < a.size(); ++j)
    same += a[j] == c[j];
  EXPECT_EQ(same, 0);
}

TEST(Noise, PhiloxKnownAnswers)
{
  auto z = philox4x32({0, 0, 0, 0}, {0, 0});
  EXPECT_EQ(z[0], 0x6627e8d5u);
  EXPECT_EQ(z[1], 0xe169c58du);
  EXPECT_EQ(z[2], 0xbc57ac4cu);
  EXPECT_EQ(z[3], 0x9b00dbd8u);
  auto p = philox4x32({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                      {0xa4093822u, 0x299f31d0u});
  EXPECT_EQ(p[0], 0xd16cfe09u);
  EXPECT_EQ(p[1], 0x94fdccebu);
  EXPECT_EQ(p[2], 0x5001e420u);
  EXPECT_EQ(p[3], 0x24126ea1u);
  auto f = philox4x32({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
                      {0xffffffffu, 0xffffffffu});
  EXPECT_EQ(f[0], 0x408f276du);
  EXPECT_EQ(f[1], 0x41c83b0eu);
  EXPECT_EQ(f[2], 0xa20bc7c6u);
  EXPECT_EQ(f[3], 0x6d5451fdu);
}

TEST(Noise, MomentsOfMillionDraws)
{
  const std::size_t n = 1000000;
  double s = 0.0, s2 = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    double z = normal_at(2024, j);
    s += z;
    s2 += z * z;
  }
  double mean = s / n;
  double var = s2 / n - mean * mean;
  EXPECT_LT(std::abs(mean), 0.005);
  EXPECT_LT(std::abs(var - 1.0), 0.01);
}

TEST(LpNorm, OnesAndLinear)
{
  GridSpec g = make_grid(1, 257, 1.5);
  Field one = sample_function([](std::span<const double>) { return 1.0; }, g);
  EXPECT_NEAR(lp_norm(one, 2, Region::inner), 1.0, 2 * g.spacing());
  Field lin = sample_function([](std::span<const double> x) { return x[0]; }, g);
  EXPECT_NEAR(lp_norm(lin, kInfinity, Region::inner), 0.5, g.spacing() / 2);
  EXPECT_NEAR(lp_norm(lin, 2, Region::inner), std::sqrt(1.0 / 12.0), 1e-3);
  EXPECT_DOUBLE_EQ(lp_norm(lin, kInfinity, Region::full), 1.5);
}

TEST(LpNorm, OnesInPlane)
{
  GridSpec g = default_grid(2, 61);
  Field one = sample_function([](std::span<const double>) { return 1.0; }, g);
  EXPECT_NEAR(lp_norm(one, 2, Region::inner), 1.0, 4 * g.spacing());
  EXPECT_NEAR(lp_norm(one, 1, Region::inner), 1.0, 4 * g.spacing());
}

TEST(LpNorm, RiemannConsistency)
{
  // successive differences shrink by at least 1.8 as n doubles
  auto f = [](std::span<const double> x) { return std::sin(3 * x[0]) + x[0] * x[0]; };
  std::vector<double> values;
  for (int n : {65, 129, 257, 513, 1025}) {
    GridSpec g = make_grid(1, n, 1.5);
    values.push_back(lp_norm(sample_function(f, g), 2, Region::inner));
  }
  for (std::size_t i = 2; i < values.size(); ++i) {
    double prev = std::abs(values[i - 1] - values[i - 2]);
    double cur = std::abs(values[i] - values[i - 1]);
    EXPECT_GE(prev / cur, 1.8) << "level " << i;
  }
}

TEST(Serialization, BinaryRoundTrip)
{
  GridSpec g = make_grid(2, 33, 2.0);
  Field f = draw_noise(g, 7);
  std::stringstream ss;
  write_field_binary(ss, f);
  EXPECT_EQ(ss.str().size(), 16 + 8 * g.size());
  Field back = read_field_binary(ss);
  EXPECT_EQ(back.grid(), g);
  for (std::size_t j = 0; j < f.size(); ++j)
    EXPECT_EQ(back[j], f[j]);
}

TEST(Serialization, CsvHeader)
{
  GridSpec g = make_grid(1, 9, 1.5);
  Field f = sample_function([](std::span<const double> x) { return x[0]; }, g);
  std::stringstream ss;
  write_field_csv(ss, f);
  std::string line;
  std::getline(ss, line);
  EXPECT_EQ(line, "x1,value");
  std::getline(ss, line);
  EXPECT_EQ(line, "-1.5,-1.5");
}

TEST(ApplyKernel, ConstantInput)
{
  GridSpec g = make_grid(1, 257, 1.5);
  const double h = 0.25;
  Field k = sample_function([&](std::span<const double> x) { return g0(x[0] / h) / h; }, g);
  double s = 0.0;
  for (double v : k.values())
    s += v;
  k *= 1.0 / (s * g.spacing());
  Field c = sample_function([](std::span<const double>) { return 3.0; }, g);
  Field out = apply_kernel(k, c, OutputRegion::inner);
  const IndexRange r = g.inner_range();
  for (int j = r.lo; j <= r.hi; ++j)
    EXPECT_NEAR(out[j], 3.0, 1e-12);
}

TEST(ApplyKernel, LinearUnchangedAndSecondMoment)
{
  GridSpec g = make_grid(1, 257, 1.5);
  const double h = 0.25;
  Field k = sample_function([&](std::span<const double> x) { return g0(x[0] / h) / h; }, g);
  Field lin = sample_function([](std::span<const double> x) { return x[0]; }, g);
  Field sq = sample_function([](std::span<const double> x) { return x[0] * x[0]; }, g);
  Field o1 = apply_kernel(k, lin, OutputRegion::inner);
  Field o2 = apply_kernel(k, sq, OutputRegion::inner);
  double mass = 0.0;
  for (double v : k.values())
    mass += v * g.spacing();
  const IndexRange r = g.inner_range();
  for (int j = r.lo; j <= r.hi; ++j) {
    double x = g.coordinate(j);
    EXPECT_NEAR(o1[j], x * mass, 1e-12);
    EXPECT_NEAR(o2[j], x * x + h * h / 28.0, 1e-4);
  }
}

TEST(ApplyKernel, MatchesDirectSummation)
{
  for (int d : {1, 2}) {
    GridSpec g = d == 1 ? make_grid(1, 129, 1.6) : default_grid(2, 45);
    Field k = sample_function(
      [&](std::span<const double> x) {
        double v = 1.0;
        for (int a = 0; a < d; ++a)
          v *= g0(x[a] / 0.3 + 0.1 * a) / 0.3;
        return v;
      },
      g);
    Field in = draw_noise(g, 11);
    Field fast = apply_kernel(k, in, OutputRegion::inner);
    Field slow = direct_apply(k, in, 0);
    double scale = 0.0;
    for (double v : slow.values())
      scale = std::max(scale, std::abs(v));
    for (std::size_t j = 0; j < g.size(); ++j)
      EXPECT_NEAR(fast[j], slow[j], 1e-10 * scale);
  }
}

TEST(ApplyKernel, Linearity)
{
  GridSpec g = default_grid(2, 41);
  Field k = sample_function(
    [&](std::span<const double> x) { return g0(x[0] / 0.4) * g0(x[1] / 0.3) / 0.12; }, g);
  Field f = draw_noise(g, 1);
  Field h = draw_noise(g, 2);
  const double a = 1.7, b = -0.3;
  Field lhs = apply_kernel(k, a * f + b * h, OutputRegion::extended);
  Field rhs = a * apply_kernel(k, f, OutputRegion::extended) +
              b * apply_kernel(k, h, OutputRegion::extended);
  double scale = 0.0;
  for (double v : rhs.values())
    scale = std::max(scale, std::abs(v));
  for (std::size_t j = 0; j < g.size(); ++j)
    EXPECT_NEAR(lhs[j], rhs[j], 1e-12 * scale);
}

TEST(ApplyKernel, OverflowRejected)
{
  GridSpec g = make_grid(1, 65, 1.5);
  Field k(g);
  k[0] = 1.0;  // reach 32 cannot fit around the inner block
  Field in = draw_noise(g, 3);
  EXPECT_THROW(apply_kernel(k, in, OutputRegion::inner), std::invalid_argument);
}
