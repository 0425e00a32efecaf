#include "structadapt/bench.hpp"

#include "structadapt/noise.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace structadapt {

namespace {

std::vector<double> add_scaled(const std::vector<double>& a, const std::vector<double>& b,
                               double s)
{
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    out[i] = a[i] + s * b[i];
  return out;
}

// spectrum of dx^(-d/2) xi for the noise seed
Spectrum noise_spectrum(const EstimatorBank& bank, std::uint64_t seed)
{
  const GridSpec& g = bank.grid();
  Field xi = draw_noise(g, seed);
  xi *= 1.0 / std::sqrt(g.cell_volume());
  return bank.spectrum(xi);
}

Spectrum combine(const Spectrum& a, const Spectrum& b, double s)
{
  Spectrum out(a.size());
  for (std::size_t f = 0; f < a.size(); ++f)
    out[f] = a[f] + s * b[f];
  return out;
}

std::string fixed_id(const EstimatorBank& bank, std::size_t i)
{
  return "fixed:" + std::to_string(i) + ":" + to_string(bank.theta(i).partition);
}

} // namespace

double phi_rate(double eps, double beta)
{
  if (!(eps > 0.0 && eps < 1.0))
    throw std::invalid_argument("phi_rate needs 0 < eps < 1");
  return std::pow(eps * std::sqrt(std::log(1.0 / eps)), 2.0 * beta / (2.0 * beta + 1.0));
}

double psi_rate(double eps, double alpha, int d, double p)
{
  if (!(eps > 0.0 && eps < 1.0))
    throw std::invalid_argument("psi_rate needs 0 < eps < 1");
  const double e = 2.0 * alpha / (2.0 * alpha + d);
  if (std::isinf(p))
    return std::pow(eps * std::sqrt(std::log(1.0 / eps)), e);
  return std::pow(eps, e);
}

double ideal_bandwidth(double beta_i, int block_size, double lipschitz, double eps,
                       const UnivariateKernel& g, int dim)
{
  if (!(eps > 0.0 && eps < 1.0))
    throw std::invalid_argument("ideal bandwidth needs 0 < eps < 1");
  if (!(beta_i > 0.0 && lipschitz > 0.0 && block_size >= 1 && dim >= 1))
    throw std::invalid_argument("ideal bandwidth needs positive beta_i, L and sizes");
  const double denom = 2.0 * beta_i + block_size;
  return std::pow(eps / lipschitz * std::sqrt(std::log(1.0 / eps)), 2.0 / denom) *
         std::pow(g.norm2() / g.norm1(), 2.0 * dim / denom);
}

ThetaPoint aligned_theta(const StructuredFunction& f, double eps, const UnivariateKernel& g,
                         double h_zero)
{
  std::vector<double> h(f.dim, h_zero);
  for (const auto& c : f.components) {
    if (c.is_zero() || c.lipschitz <= 0.0)
      continue;
    double hs = ideal_bandwidth(c.beta, static_cast<int>(c.block.size()), c.lipschitz, eps, g,
                                f.dim);
    for (int j : c.block)
      h[j] = hs;
  }
  return make_theta(f.partition, f.directions, h);
}

double bias_bound(const ThetaPoint& theta, const StructuredFunction& f, const UnivariateKernel& g)
{
  if (theta.dim() != f.dim)
    throw std::invalid_argument("theta and function dimensions differ");
  double total = 0.0;
  for (const auto& c : f.components) {
    double s = 0.0;
    for (int j : c.block)
      s += std::pow(theta.bandwidth[j], c.beta);
    total += std::pow(g.norm1(), static_cast<double>(c.block.size())) * s;
  }
  return f.lipschitz * total;
}

double sup_norm(const Field& f)
{
  double m = 0.0;
  for (double v : f.values())
    m = std::max(m, std::abs(v));
  return m;
}

std::vector<std::vector<double>> bias_norms(const EstimatorBank& bank, const Field& truth,
                                            std::span<const double> ps)
{
  Spectrum y = bank.spectrum(truth);
  auto ref = truth.inner_block();
  return bank.single_norms(y, ps, ref);
}

std::vector<std::vector<double>> pair_bias_norms(const EstimatorBank& bank, const Field& truth,
                                                 std::span<const double> ps)
{
  // B_{theta,nu} - B_nu = E F_{theta,nu} - E F_nu
  return bank.pair_norms(bank.spectrum(truth), ps);
}

OracleObjective oracle_objective(const EstimatorBank& bank, const Field& truth, double eps,
                                 double kappa, double p)
{
  OracleObjective o;
  o.bias = bias_norms(bank, truth, std::vector<double>{p})[0];
  o.objective.resize(bank.size());
  for (std::size_t i = 0; i < bank.size(); ++i)
    o.objective[i] = o.bias[i] + kappa * eps * bank.sigma(i);
  o.index = argmin_first(o.objective);
  o.theta = bank.theta(o.index);
  o.value = o.objective[o.index];
  return o;
}

void summarize(RiskReport& r)
{
  const std::size_t n = r.values.size();
  r.n_rep = static_cast<int>(n);
  if (n == 0) {
    r.risk = r.ci_halfwidth = 0.0;
    return;
  }
  double mean = 0.0;
  for (double v : r.values)
    mean += v;
  mean /= n;
  double ss = 0.0;
  for (double v : r.values)
    ss += (v - mean) * (v - mean);
  const double sd = n > 1 ? std::sqrt(ss / (n - 1)) : 0.0;
  r.risk = mean;
  r.ci_halfwidth = kCiZ * sd / std::sqrt(static_cast<double>(n));
}

std::vector<RiskReport> mc_risk_fixed(const EstimatorBank& bank, std::size_t theta,
                                      const Field& truth, double eps, std::span<const double> ps,
                                      int n_rep, std::uint64_t seed)
{
  if (n_rep < 2)
    throw std::invalid_argument("mc_risk needs n_rep >= 2");
  if (theta >= bank.size())
    throw std::out_of_range("theta index outside the bank");
  Spectrum fy = bank.spectrum(truth);
  const auto bias = bank.single_block(theta, fy, truth.inner_block());
  std::vector<RiskReport> out(ps.size());
  for (std::size_t k = 0; k < ps.size(); ++k) {
    out[k].estimator_id = fixed_id(bank, theta);
    out[k].p = ps[k];
    out[k].eps = eps;
    out[k].values.resize(n_rep);
  }
  for (int r = 0; r < n_rep; ++r) {
    std::vector<double> err = bias;
    if (eps > 0.0) {
      Spectrum ny = noise_spectrum(bank, derive_seed(seed, static_cast<std::uint64_t>(r)));
      err = add_scaled(bias, bank.single_block(theta, ny), eps);
    }
    for (std::size_t k = 0; k < ps.size(); ++k)
      out[k].values[r] = inner_block_norm(err, bank.grid(), ps[k]);
  }
  for (auto& rep : out)
    summarize(rep);
  return out;
}

RiskReport mc_risk_selected(const EstimatorBank& bank, const Field& truth, double eps, double p,
                            const KappaCalibration& kappa, int n_rep, std::uint64_t seed)
{
  if (n_rep < 2)
    throw std::invalid_argument("mc_risk needs n_rep >= 2");
  if (kappa.mode == KappaMode::monte_carlo &&
      (kappa.grid_hash != bank_hash(bank) || kappa.p != p))
    throw std::invalid_argument("calibration does not match the bank or p");
  Spectrum fy = bank.spectrum(truth);
  const auto ref = truth.inner_block();
  RiskReport rep;
  rep.estimator_id = "selected";
  rep.p = p;
  rep.eps = eps;
  rep.values.resize(n_rep);
  rep.selected.resize(n_rep);
  for (int r = 0; r < n_rep; ++r) {
    Spectrum y = fy;
    if (eps > 0.0)
      y = combine(fy, noise_spectrum(bank, derive_seed(seed, static_cast<std::uint64_t>(r))), eps);
    SelectionTables t = selection_tables(bank, y, eps, kappa.kappa, p);
    rep.selected[r] = t.index;
    rep.values[r] = inner_block_norm(bank.single_block(t.index, y, ref), bank.grid(), p);
  }
  summarize(rep);
  return rep;
}

OracleInequalityReport verify_oracle_inequality(const EstimatorBank& bank, const Field& truth,
                                                double eps, double p,
                                                const KappaCalibration& kappa, int n_rep,
                                                std::uint64_t seed)
{
  OracleInequalityReport o;
  o.risk = mc_risk_selected(bank, truth, eps, p, kappa, n_rep, seed);
  o.oracle = oracle_objective(bank, truth, eps, kappa.kappa, p);
  o.m_of_k = bank.constants().m_of_k;
  o.sigma_of_k = bank.constants().sigma_of_k;
  o.kappa = kappa.kappa;
  o.delta = kappa.delta;
  o.f_sup = sup_norm(truth);
  o.remainder = o.f_sup * (1.0 + o.m_of_k) * o.delta +
                eps * o.sigma_of_k * std::sqrt(o.delta) * std::sqrt(kappa.zeta_second_moment);
  o.rhs = (3.0 + 2.0 * o.m_of_k) * o.oracle.value + o.remainder;
  if (o.rhs > 0.0) {
    o.ratio = o.risk.risk / o.rhs;
    o.ratio_lower = (o.risk.risk - o.risk.ci_halfwidth) / o.rhs;
    o.pass = o.ratio_lower <= 1.0;
  } else {
    o.ratio = o.ratio_lower = o.risk.risk > 0.0 ? kInfinity : 0.0;
    o.pass = o.risk.risk <= 0.0;
  }
  return o;
}

std::vector<SandwichRow> risk_sandwich(const EstimatorBank& bank,
                                       std::span<const std::size_t> thetas, const Field& truth,
                                       double eps, std::span<const double> ps, int n_rep,
                                       std::uint64_t seed)
{
  if (n_rep < 2)
    throw std::invalid_argument("risk sandwich needs n_rep >= 2");
  Spectrum fy = bank.spectrum(truth);
  const auto ref = truth.inner_block();
  const std::size_t nt = thetas.size(), np = ps.size();
  std::vector<std::vector<double>> bias(nt);
  for (std::size_t i = 0; i < nt; ++i)
    bias[i] = bank.single_block(thetas[i], fy, ref);
  // risk and noise samples per (theta, p)
  std::vector<RiskReport> risk(nt * np), noise(nt * np);
  for (auto& r : risk)
    r.values.resize(n_rep);
  for (auto& r : noise)
    r.values.resize(n_rep);
  for (int r = 0; r < n_rep; ++r) {
    Spectrum ny = noise_spectrum(bank, derive_seed(seed, static_cast<std::uint64_t>(r)));
    for (std::size_t i = 0; i < nt; ++i) {
      auto z = bank.single_block(thetas[i], ny);
      auto err = add_scaled(bias[i], z, eps);
      for (std::size_t k = 0; k < np; ++k) {
        risk[i * np + k].values[r] = inner_block_norm(err, bank.grid(), ps[k]);
        noise[i * np + k].values[r] = inner_block_norm(z, bank.grid(), ps[k]);
      }
    }
  }
  std::vector<SandwichRow> rows;
  for (std::size_t i = 0; i < nt; ++i)
    for (std::size_t k = 0; k < np; ++k) {
      RiskReport& rr = risk[i * np + k];
      RiskReport& nr = noise[i * np + k];
      summarize(rr);
      summarize(nr);
      SandwichRow row;
      row.theta = thetas[i];
      row.p = ps[k];
      row.bias = inner_block_norm(bias[i], bank.grid(), ps[k]);
      row.noise = nr.risk;
      row.noise_ci = nr.ci_halfwidth;
      row.risk = rr.risk;
      row.risk_ci = rr.ci_halfwidth;
      row.upper = row.bias + eps * row.noise;
      row.lower = 0.25 * row.upper;
      const double ci = row.risk_ci + eps * row.noise_ci;
      row.pass = row.risk + ci >= row.lower && row.risk - ci <= row.upper;
      rows.push_back(row);
    }
  return rows;
}

std::vector<ContractionRow> contraction_check(const EstimatorBank& bank, const Field& truth,
                                              std::span<const double> ps, double rel,
                                              double abs_tol)
{
  auto b = bias_norms(bank, truth, ps);
  auto pb = pair_bias_norms(bank, truth, ps);
  const double m = bank.constants().m_of_k;
  const std::size_t nt = bank.size();
  std::vector<ContractionRow> rows;
  for (std::size_t k = 0; k < ps.size(); ++k)
    for (std::size_t i = 0; i < nt; ++i) {
      ContractionRow row;
      row.theta = i;
      row.p = ps[k];
      for (std::size_t j = 0; j < nt; ++j)
        row.lhs = std::max(row.lhs, pb[k][i * nt + j]);
      row.rhs = m * b[k][i];
      row.pass = row.lhs <= row.rhs * (1.0 + rel) + abs_tol;
      rows.push_back(row);
    }
  return rows;
}

double log_log_slope(std::span<const double> x, std::span<const double> y)
{
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("slope fit needs two or more matching points");
  const std::size_t n = x.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(x[i] > 0.0 && y[i] > 0.0))
      throw std::invalid_argument("slope fit needs positive values");
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

RateReport rate_experiment(const RateConfig& cfg)
{
  if (cfg.eps_list.size() < 4)
    throw std::invalid_argument("rate experiment needs at least 4 eps values");
  for (std::size_t i = 1; i < cfg.eps_list.size(); ++i)
    if (!(cfg.eps_list[i] < cfg.eps_list[i - 1]))
      throw std::invalid_argument("eps_list must be decreasing");

  const int d = cfg.function.dim;
  GridSpec grid = cfg.half_width > 0.0 ? make_grid(d, cfg.points_per_axis, cfg.half_width)
                                       : default_grid(d, cfg.points_per_axis);
  StructuredFunction f = make_test_function(cfg.function);
  Field truth = sample_function(f.evaluator(), grid);
  UnivariateKernel g = build_univariate_kernel(cfg.kernel_order);
  ThetaGridConfig tc = cfg.theta;
  tc.dim = d;

  RateReport rep;
  rep.beta = f.beta;
  rep.target = 2.0 * f.beta / (2.0 * f.beta + 1.0);
  rep.unstructured_target = 2.0 * f.beta / (2.0 * f.beta + d);
  std::vector<double> eps, sel, fix;
  for (std::size_t k = 0; k < cfg.eps_list.size(); ++k) {
    const double e = cfg.eps_list[k];
    RatePoint pt;
    pt.eps = e;
    ThetaGrid tg = build_theta_grid(tc, e, grid);
    EstimatorBank bank(grid, g, tg.points);
    pt.grid_size = bank.size();
    pt.h_min = tg.h_min;
    pt.h_max = tg.h_max;
    KappaCalibration kap = calibrate_kappa(bank, cfg.p, cfg.delta, cfg.n_cal,
                                           derive_seed(cfg.seed, 1, k));
    pt.kappa = kap.kappa;
    const std::uint64_t risk_seed = derive_seed(cfg.seed, 2, k);
    pt.selected = mc_risk_selected(bank, truth, e, cfg.p, kap, cfg.n_rep, risk_seed);

    ThetaPoint star = aligned_theta(f, e, g, tg.h_max);
    pt.h_star = star.bandwidth[f.components.front().block.front()];
    EstimatorBank fixed_bank(grid, g, {star});
    pt.fixed = mc_risk_fixed(fixed_bank, 0, truth, e, std::vector<double>{cfg.p}, cfg.n_rep,
                             risk_seed)[0];
    pt.phi = phi_rate(e, f.beta);
    pt.ratio = pt.selected.risk / pt.fixed.risk;
    pt.upper_constant = pt.fixed.risk / (std::pow(f.lipschitz, 1.0 / (2.0 * f.beta + 1.0)) * pt.phi);
    eps.push_back(e);
    sel.push_back(pt.selected.risk);
    fix.push_back(pt.fixed.risk);
    rep.points.push_back(std::move(pt));
  }
  rep.slope = log_log_slope(eps, sel);
  rep.fixed_slope = log_log_slope(eps, fix);
  return rep;
}

std::vector<KappaScalingPoint> kappa_scaling(const EstimatorBank& bank, double p,
                                             std::span<const double> eps_list, int n_cal_min,
                                             std::uint64_t seed)
{
  std::vector<KappaScalingPoint> out;
  for (std::size_t k = 0; k < eps_list.size(); ++k) {
    const double e = eps_list[k];
    const int need = static_cast<int>(std::ceil(20.0 / e - 1e-9));
    KappaCalibration kap =
      calibrate_kappa(bank, p, e, std::max(n_cal_min, need), derive_seed(seed, 3, k));
    out.push_back({e, kap.kappa, kap.kappa / std::sqrt(std::log(1.0 / e))});
  }
  return out;
}

} // namespace structadapt
