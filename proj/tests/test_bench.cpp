#include "structadapt/bench.hpp"
#include "structadapt/noise.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

using namespace structadapt;

namespace {

StructuredFunction function_1d(const std::string& profile, double a = 1.0, double w = 2 * std::numbers::pi)
{
  FunctionSpec s;
  s.family = "single-index";
  s.dim = 1;
  s.beta = 1.0;
  s.profile = profile;
  s.amplitude = a;
  s.frequency = w;
  return make_test_function(s);
}

std::vector<ThetaPoint> bandwidths_1d(std::initializer_list<double> hs)
{
  std::vector<ThetaPoint> out;
  for (double h : hs)
    out.push_back(make_theta({{0}}, std::vector<double>{}, {h}));
  return out;
}

} // namespace

TEST(Rates, PhiAtOneTenth)
{
  EXPECT_NEAR(phi_rate(0.1, 1.0), 0.284493203898432, 1e-12);
  EXPECT_THROW(phi_rate(1.0, 1.0), std::invalid_argument);
  EXPECT_NEAR(psi_rate(0.1, 1.0, 1, kInfinity), phi_rate(0.1, 1.0), 1e-15);
  EXPECT_NEAR(psi_rate(0.1, 2.0, 2, 2.0), std::pow(0.1, 2.0 / 3.0), 1e-15);
}

TEST(IdealBandwidth, PlugIn)
{
  auto g = build_univariate_kernel(0);
  EXPECT_NEAR(ideal_bandwidth(1.0, 1, 1.0, 0.05, g, 1), 0.220350981314613, 1e-9);
  EXPECT_NEAR(ideal_bandwidth(1.0, 1, 1.0, 0.05, g, 2), 0.248169825659252, 1e-9);
  EXPECT_THROW(ideal_bandwidth(1.0, 1, 1.0, 1.0, g, 1), std::invalid_argument);
}

TEST(IdealBandwidth, MonotoneInEps)
{
  auto g = build_univariate_kernel(2);
  double prev = 0.0;
  for (double e : {0.01, 0.02, 0.05, 0.1, 0.2, 0.3}) {
    double h = ideal_bandwidth(1.5, 2, 3.0, e, g, 3);
    EXPECT_GT(h, prev);
    prev = h;
  }
}

TEST(IdealBandwidth, ConstantWithinBlocks)
{
  FunctionSpec s;
  s.family = "additive-multi-index";
  s.dim = 3;
  s.partition = "1.2|3";
  s.beta = 1.0;
  auto f = make_test_function(s);
  auto th = aligned_theta(f, 0.05, build_univariate_kernel(0), 1.0);
  EXPECT_EQ(th.bandwidth[0], th.bandwidth[1]);
  EXPECT_NE(th.bandwidth[0], th.bandwidth[2]);
  EXPECT_EQ(to_string(th.partition), "1.2|3");
}

TEST(Risk, NoiseFreeRiskIsBias)
{
  GridSpec grid = default_grid(1, 129);
  EstimatorBank bank(grid, build_univariate_kernel(0), bandwidths_1d({0.2, 0.4}));
  Field f = sample_function(function_1d("trig").evaluator(), grid);
  std::vector<double> ps{1.0, 2.0, kInfinity};
  auto r = mc_risk_fixed(bank, 1, f, 0.0, ps, 5, 1);
  auto b = bias_norms(bank, f, ps);
  for (std::size_t k = 0; k < ps.size(); ++k) {
    EXPECT_EQ(r[k].risk, b[k][1]);
    EXPECT_EQ(r[k].ci_halfwidth, 0.0);
  }
}

TEST(Risk, PureNoiseMatchesIndependentMonteCarlo)
{
  // independent oracle: direct summation with a different generator
  GridSpec grid = make_grid(1, 257, 2.0);
  const double h = 0.25;
  EstimatorBank bank(grid, build_univariate_kernel(0), bandwidths_1d({h}));
  const double eps = 0.1;
  auto r = mc_risk_fixed(bank, 0, Field(grid), eps, std::vector<double>{2.0}, 500, 17)[0];

  const double dx = grid.spacing();
  const int reach = static_cast<int>(std::floor(0.5 * h / dx));
  std::vector<double> kern(2 * reach + 1);
  double sum = 0.0;
  for (int i = -reach; i <= reach; ++i) {
    double x = i * dx / h;
    kern[i + reach] = 1.875 * std::pow(1.0 - 4.0 * x * x, 2);
    sum += kern[i + reach];
  }
  for (double& v : kern)
    v /= sum * dx;
  std::mt19937_64 rng(31);
  std::normal_distribution<double> nd;
  std::vector<double> xi(grid.points_per_axis());
  const int c = grid.center_index();
  const int half = static_cast<int>(std::floor(0.5 / dx));
  double acc = 0.0;
  const int n_oracle = 2000;
  for (int m = 0; m < n_oracle; ++m) {
    for (double& v : xi)
      v = nd(rng);
    double s2 = 0.0;
    for (int i = c - half; i <= c + half; ++i) {
      double z = 0.0;
      for (int j = -reach; j <= reach; ++j)
        z += kern[j + reach] * xi[i + j];
      z *= std::sqrt(dx);
      s2 += z * z * dx;
    }
    acc += std::sqrt(s2);
  }
  const double oracle = acc / n_oracle;
  EXPECT_NEAR(r.risk / eps, oracle, 0.1 * oracle);
}

TEST(Oracle, PolynomialPicksLargestBandwidth)
{
  GridSpec grid = default_grid(1, 129);
  EstimatorBank bank(grid, build_univariate_kernel(0), bandwidths_1d({0.1, 0.2, 0.3, 0.5}));
  FunctionSpec s;
  s.family = "polynomial";
  s.dim = 1;
  s.degree = 1;
  Field f = sample_function(make_test_function(s).evaluator(), grid);
  auto o = oracle_objective(bank, f, 0.05, 2.0, kInfinity);
  EXPECT_EQ(o.index, 3u);
  for (double b : o.bias)
    EXPECT_LE(b, 1e-12);
}

TEST(Oracle, SingletonGrid)
{
  GridSpec grid = default_grid(1, 129);
  EstimatorBank bank(grid, build_univariate_kernel(0), bandwidths_1d({0.3}));
  Field f = sample_function(function_1d("trig").evaluator(), grid);
  auto o = oracle_objective(bank, f, 0.1, 3.0, 2.0);
  EXPECT_EQ(o.index, 0u);
  EXPECT_NEAR(o.value, o.bias[0] + 0.3 * bank.sigma(0), 1e-15);
}

TEST(Oracle, StableUnderGridRefinement)
{
  auto f = function_1d("trig");
  auto value = [&](int n) {
    GridSpec grid = make_grid(1, n, 1.6);
    EstimatorBank bank(grid, build_univariate_kernel(0), bandwidths_1d({0.15, 0.25, 0.4}));
    Field tr = sample_function(f.evaluator(), grid);
    return oracle_objective(bank, tr, 0.05, 3.0, 2.0).value;
  };
  const double coarse = value(257);
  const double fine = value(1025);
  EXPECT_NEAR(coarse, fine, 1e-3 * fine);
}

TEST(OracleInequality, SingletonGridEqualsFixedRisk)
{
  GridSpec grid = default_grid(1, 129);
  EstimatorBank bank(grid, build_univariate_kernel(0), bandwidths_1d({0.3}));
  Field f = sample_function(function_1d("trig").evaluator(), grid);
  auto k = calibrate_kappa(bank, 2.0, 0.2, 100, 4);
  auto rep = verify_oracle_inequality(bank, f, 0.1, 2.0, k, 20, 9);
  auto fixed = mc_risk_fixed(bank, 0, f, 0.1, std::vector<double>{2.0}, 20, 9)[0];
  EXPECT_NEAR(rep.risk.risk, fixed.risk, 1e-12);
  EXPECT_LE(rep.ratio, 1.0);
  EXPECT_TRUE(rep.pass);
}

TEST(OracleInequality, NoiseFreeIdealCase)
{
  GridSpec grid = default_grid(1, 129);
  EstimatorBank bank(grid, build_univariate_kernel(0), bandwidths_1d({0.1, 0.2, 0.3, 0.45}));
  Field f = sample_function(function_1d("kink", 1.0, 3.0).evaluator(), grid);
  auto k = analytic_kappa(2.0, 0.1, kInfinity, 0.1, bank_hash(bank));
  auto rep = verify_oracle_inequality(bank, f, 0.0, kInfinity, k, 2, 1);
  auto bias = bias_norms(bank, f, std::vector<double>{kInfinity})[0];
  double best = *std::min_element(bias.begin(), bias.end());
  EXPECT_LE(rep.risk.risk, (2.0 * bank.constants().m_of_k + 1.0) * best + 1e-10);
  EXPECT_TRUE(rep.pass);
}

TEST(BiasBound, HoldsForAlignedStructures)
{
  auto g = build_univariate_kernel(0);
  {
    GridSpec grid = default_grid(1, 513);
    for (const char* prof : {"trig", "kink"}) {
      auto f = function_1d(prof, 0.8, 5.0);
      Field tr = sample_function(f.evaluator(), grid);
      auto pts = bandwidths_1d({0.05, 0.1, 0.2, 0.4, 0.8});
      EstimatorBank bank(grid, g, pts);
      auto b = bias_norms(bank, tr, std::vector<double>{kInfinity})[0];
      for (std::size_t i = 0; i < pts.size(); ++i)
        EXPECT_LE(b[i], bias_bound(pts[i], f, g) * 1.01) << prof << " h=" << pts[i].bandwidth[0];
    }
  }
  {
    GridSpec grid = default_grid(2, 129);
    FunctionSpec s;
    s.family = "additive";
    s.dim = 2;
    s.beta = 1.0;
    s.frequency = 4.0;
    auto f = make_test_function(s);
    Field tr = sample_function(f.evaluator(), grid);
    std::vector<ThetaPoint> pts;
    for (double h1 : {0.15, 0.4})
      for (double h2 : {0.2, 0.6})
        pts.push_back(make_theta(f.partition, f.directions, {h1, h2}));
    EstimatorBank bank(grid, g, pts);
    auto b = bias_norms(bank, tr, std::vector<double>{kInfinity})[0];
    for (std::size_t i = 0; i < pts.size(); ++i)
      EXPECT_LE(b[i], bias_bound(pts[i], f, g) * 1.01);
  }
}

TEST(Contraction, HoldsInOneDimension)
{
  GridSpec grid = default_grid(1, 257);
  EstimatorBank bank(grid, build_univariate_kernel(2), bandwidths_1d({0.1, 0.2, 0.35, 0.6}));
  Field f = sample_function(function_1d("kink", 1.0, 4.0).evaluator(), grid);
  std::vector<double> ps{1.0, 2.0, kInfinity};
  for (const auto& row : contraction_check(bank, f, ps, 0.01, 1e-8))
    EXPECT_TRUE(row.pass) << row.theta << " p=" << row.p << " " << row.lhs << " " << row.rhs;
}

TEST(Sandwich, BoundsHold)
{
  GridSpec grid = default_grid(1, 129);
  EstimatorBank bank(grid, build_univariate_kernel(0), bandwidths_1d({0.1, 0.3, 0.6}));
  Field f = sample_function(function_1d("trig").evaluator(), grid);
  std::vector<std::size_t> idx{0, 1, 2};
  std::vector<double> ps{1.0, 2.0, kInfinity};
  auto rows = risk_sandwich(bank, idx, f, 0.1, ps, 100, 5);
  ASSERT_EQ(rows.size(), 9u);
  for (const auto& r : rows) {
    EXPECT_TRUE(r.pass);
    // the upper side holds replication by replication
    EXPECT_LE(r.risk, r.upper + 1e-12);
    EXPECT_NEAR(r.lower, 0.25 * r.upper, 1e-15);
  }
}

TEST(Rates, SlopeOfPowerLaw)
{
  std::vector<double> x{0.2, 0.1, 0.05, 0.025};
  std::vector<double> y;
  for (double v : x)
    y.push_back(3.0 * std::pow(v, 0.7));
  EXPECT_NEAR(log_log_slope(x, y), 0.7, 1e-12);
  EXPECT_THROW(log_log_slope(std::vector<double>{1.0}, std::vector<double>{1.0}),
               std::invalid_argument);
}

TEST(Rates, RejectsShortOrIncreasingEpsList)
{
  RateConfig c;
  c.eps_list = {0.1, 0.05, 0.02};
  EXPECT_THROW(rate_experiment(c), std::invalid_argument);
  c.eps_list = {0.1, 0.05, 0.06, 0.02};
  EXPECT_THROW(rate_experiment(c), std::invalid_argument);
}

TEST(Rates, FixedOracleConstantIsStable)
{
  // the risk at h* scales like L^(1/(2 beta+1)) phi_eps(beta)
  GridSpec grid = default_grid(1, 513);
  auto g = build_univariate_kernel(0);
  auto f = function_1d("kink", 1.0, 1.0);
  Field tr = sample_function(f.evaluator(), grid);
  std::vector<double> consts;
  int k = 0;
  for (double e : {0.1, 0.05, 0.025, 0.0125}) {
    ThetaPoint th = aligned_theta(f, e, g, 1.0);
    EstimatorBank bank(grid, g, {th});
    auto r = mc_risk_fixed(bank, 0, tr, e, std::vector<double>{kInfinity}, 100, derive_seed(3, k++))[0];
    consts.push_back(r.risk / (std::pow(f.lipschitz, 1.0 / 3.0) * phi_rate(e, 1.0)));
  }
  double mean = 0.0;
  for (double c : consts)
    mean += c / consts.size();
  for (double c : consts)
    EXPECT_NEAR(c, mean, 0.2 * mean);
}

TEST(StructuralInvariance, RotationDoesNotChangeRisk)
{
  GridSpec grid = default_grid(2, 81);
  auto g = build_univariate_kernel(0);
  double risks[2], cis[2];
  int k = 0;
  for (double angle : {0.0, std::numbers::pi / 4}) {
    FunctionSpec s;
    s.family = "single-index";
    s.dim = 2;
    s.beta = 1.0;
    s.profile = "kink";
    s.frequency = 1.0;
    s.angles = {angle};
    auto f = make_test_function(s);
    Field tr = sample_function(f.evaluator(), grid);
    ThetaPoint th = aligned_theta(f, 0.05, g, 0.6);
    EstimatorBank bank(grid, g, {th});
    auto r = mc_risk_fixed(bank, 0, tr, 0.05, std::vector<double>{2.0}, 100, derive_seed(8, k))[0];
    risks[k] = r.risk;
    cis[k] = r.ci_halfwidth;
    ++k;
  }
  EXPECT_NEAR(risks[0], risks[1], 1.5 * (cis[0] + cis[1]));
}

TEST(KappaScaling, RatioDefinition)
{
  GridSpec grid = default_grid(1, 129);
  EstimatorBank bank(grid, build_univariate_kernel(0), bandwidths_1d({0.15, 0.3}));
  std::vector<double> eps{0.2, 0.1};
  auto pts = kappa_scaling(bank, kInfinity, eps, 100, 6);
  ASSERT_EQ(pts.size(), 2u);
  for (const auto& p : pts)
    EXPECT_NEAR(p.scaled, p.kappa / std::sqrt(std::log(1.0 / p.eps)), 1e-15);
  EXPECT_LE(pts[0].kappa, pts[1].kappa);
}
