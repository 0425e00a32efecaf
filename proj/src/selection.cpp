#include "structadapt/selection.hpp"

#include "structadapt/hash.hpp"
#include "structadapt/parallel.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace structadapt {

namespace {

std::vector<std::vector<double>> rotation_tuples(const ThetaGridConfig& cfg)
{
  const int na = rotation_angle_count(cfg.dim);
  if (!cfg.angles.empty()) {
    for (const auto& a : cfg.angles)
      if (static_cast<int>(a.size()) != na)
        throw std::invalid_argument("angle tuple needs " + std::to_string(na) + " entries");
    return cfg.angles;
  }
  if (na == 0)
    return {{}};
  if (cfg.n_angles < 1)
    throw std::invalid_argument("n_angles must be >= 1");
  std::vector<double> base(cfg.n_angles);
  for (int k = 0; k < cfg.n_angles; ++k)
    base[k] = 0.5 * std::numbers::pi * k / cfg.n_angles;
  std::vector<std::vector<double>> out;
  std::vector<int> idx(na, 0);
  while (true) {
    std::vector<double> t(na);
    for (int i = 0; i < na; ++i)
      t[i] = base[idx[i]];
    out.push_back(std::move(t));
    int i = na - 1;
    while (i >= 0 && idx[i] == cfg.n_angles - 1)
      idx[i--] = 0;
    if (i < 0)
      break;
    ++idx[i];
  }
  return out;
}

std::string theta_key(const ThetaPoint& t)
{
  std::ostringstream os;
  os << to_string(t.partition);
  for (int i = 0; i < t.directions.size(); ++i)
    os << ',' << exact_number(t.directions.data()[i]);
  for (double h : t.bandwidth)
    os << ',' << exact_number(h);
  return os.str();
}

nlohmann::json number_or_inf(double v)
{
  if (std::isinf(v))
    return "inf";
  return v;
}

double read_number(const nlohmann::json& j)
{
  if (j.is_string()) {
    if (j.get<std::string>() == "inf")
      return std::numeric_limits<double>::infinity();
    throw std::invalid_argument("expected a number or \"inf\"");
  }
  return j.get<double>();
}

} // namespace

BandwidthWindow bandwidth_window(const ThetaGridConfig& cfg, double eps, const GridSpec& grid)
{
  if (!(eps > 0.0 && eps < 1.0) && !(cfg.h_min && cfg.h_max))
    throw std::invalid_argument("the bandwidth window needs 0 < eps < 1 or explicit h_min, h_max");
  BandwidthWindow w;
  if (eps > 0.0 && eps < 1.0) {
    w.h_min = std::max(eps * eps, cfg.min_bandwidth_cells * grid.spacing());
    w.h_max = std::pow(eps, 2.0 / ((2.0 * cfg.beta_max + 1.0) * cfg.dim));
  }
  if (cfg.h_min)
    w.h_min = *cfg.h_min;
  if (cfg.h_max)
    w.h_max = *cfg.h_max;
  if (!(w.h_min > 0.0))
    throw std::invalid_argument("h_min must be positive");
  if (!(w.h_max <= 1.0))
    throw std::invalid_argument("h_max must not exceed 1");
  if (cfg.n_h > 1 ? !(w.h_min < w.h_max) : !(w.h_min <= w.h_max)) {
    std::ostringstream os;
    os << "empty bandwidth window: h_min = " << w.h_min << " >= h_max = " << w.h_max;
    throw std::invalid_argument(os.str());
  }
  return w;
}

ThetaGrid build_theta_grid(const ThetaGridConfig& cfg, double eps, const GridSpec& grid)
{
  if (cfg.dim != grid.dim())
    throw std::invalid_argument("theta grid dimension differs from the grid");
  if (cfg.n_h < 1)
    throw std::invalid_argument("n_h must be >= 1");
  BandwidthWindow w = bandwidth_window(cfg, eps, grid);

  std::vector<double> hs(cfg.n_h);
  for (int k = 0; k < cfg.n_h; ++k)
    hs[k] = cfg.n_h == 1 ? w.h_max : w.h_min * std::pow(w.h_max / w.h_min, double(k) / (cfg.n_h - 1));
  hs.front() = cfg.n_h == 1 ? w.h_max : w.h_min;
  hs.back() = w.h_max;

  std::vector<Partition> parts;
  if (cfg.partitions.empty()) {
    parts = enumerate_partitions(cfg.dim);
  } else {
    for (const auto& s : cfg.partitions) {
      Partition p = parse_partition(s);
      if (!is_partition_of(p, cfg.dim))
        throw std::invalid_argument("'" + s + "' is not a partition of {1.." +
                                    std::to_string(cfg.dim) + "}");
      parts.push_back(std::move(p));
    }
  }

  ThetaGrid tg;
  tg.h_min = w.h_min;
  tg.h_max = w.h_max;
  tg.structural_count = static_cast<int>(parts.size());
  tg.continuous_radius = std::max(0.5 * std::numbers::pi, w.h_max);

  std::set<std::string> seen;
  auto rotations = rotation_tuples(cfg);
  for (const auto& part : parts) {
    const std::size_t nb = part.size();
    for (const auto& ang : rotations) {
      std::vector<int> idx(nb, 0);
      while (true) {
        std::vector<double> h(cfg.dim);
        for (std::size_t b = 0; b < nb; ++b)
          for (int j : part[b])
            h[j] = hs[idx[b]];
        ThetaPoint t = make_theta(part, ang, h);
        validate_theta(t, cfg.eta, w.h_min, w.h_max);
        if (seen.insert(theta_key(t)).second)
          tg.points.push_back(std::move(t));
        int b = static_cast<int>(nb) - 1;
        while (b >= 0 && idx[b] == cfg.n_h - 1)
          idx[b--] = 0;
        if (b < 0)
          break;
        ++idx[b];
      }
    }
  }
  if (tg.points.empty())
    throw std::invalid_argument("theta grid is empty");

  std::string all;
  for (const auto& t : tg.points)
    all += theta_key(t) + ";";
  tg.hash = fnv1a64(all);
  return tg;
}

std::uint64_t bank_hash(const EstimatorBank& bank)
{
  std::ostringstream os;
  os << bank.grid().describe() << ";order=" << bank.univariate().order() << ";";
  for (const auto& k : bank.kernels())
    os << theta_key(k.theta) << ";";
  return fnv1a64(os.str());
}

double theoretical_delta(double eps, int dim)
{
  const double a = 24.0 * dim * dim * dim + 12.0 * dim * dim;
  return std::pow(eps, a);
}

std::string to_string(KappaMode m)
{
  return m == KappaMode::monte_carlo ? "monte-carlo" : "analytic";
}

KappaMode parse_kappa_mode(const std::string& s)
{
  if (s == "monte-carlo")
    return KappaMode::monte_carlo;
  if (s == "analytic")
    return KappaMode::analytic;
  throw std::invalid_argument("unknown kappa mode '" + s + "'");
}

NoiseSuprema noise_suprema(const EstimatorBank& bank, double p, std::uint64_t seed)
{
  const GridSpec& g = bank.grid();
  Field xi = draw_noise(g, seed);
  xi *= 1.0 / std::sqrt(g.cell_volume());
  Spectrum y = bank.spectrum(xi);

  const bool p_inf = std::isinf(p);
  std::vector<double> ps = p_inf ? std::vector<double>{p} : std::vector<double>{p, kInfinity};
  auto single = bank.single_norms(y, ps);
  auto pairs = bank.pair_norms(y, std::vector<double>{p});

  NoiseSuprema s;
  const std::size_t nt = bank.size();
  for (std::size_t i = 0; i < nt; ++i) {
    s.single = std::max(s.single, single[0][i] / bank.sigma(i));
    s.zeta = std::max(s.zeta, single[p_inf ? 0 : 1][i] / bank.sigma(i));
    for (std::size_t j = 0; j < nt; ++j)
      s.pair = std::max(s.pair, pairs[0][i * nt + j] / bank.sigma_pair(i, j));
  }
  return s;
}

double empirical_quantile(std::vector<double> sample, double q)
{
  if (sample.empty())
    throw std::invalid_argument("quantile of an empty sample");
  if (!(q > 0.0 && q <= 1.0))
    throw std::invalid_argument("quantile level must lie in (0, 1]");
  std::size_t k = static_cast<std::size_t>(std::ceil(q * sample.size() - 1e-9));
  k = std::clamp<std::size_t>(k, 1, sample.size());
  std::nth_element(sample.begin(), sample.begin() + (k - 1), sample.end());
  return sample[k - 1];
}

KappaCalibration calibrate_kappa(const EstimatorBank& bank, double p, double delta, int n_cal,
                                 std::uint64_t seed)
{
  if (!(delta > 0.0 && delta < 1.0))
    throw std::invalid_argument("delta must lie in (0, 1)");
  if (!(p >= 1.0))
    throw std::invalid_argument("p must be >= 1");
  const int need = static_cast<int>(std::ceil(20.0 / delta - 1e-9));
  if (n_cal < need)
    throw std::invalid_argument("n_cal = " + std::to_string(n_cal) + " too small for delta; need " +
                                std::to_string(need));

  KappaCalibration k;
  k.p = p;
  k.delta = delta;
  k.mode = KappaMode::monte_carlo;
  k.n_cal = n_cal;
  k.grid_hash = bank_hash(bank);
  k.seed = seed;
  k.sup_single.resize(n_cal);
  k.sup_pair.resize(n_cal);
  std::vector<double> zeta(n_cal);
  // replications run one after another; the pair scan inside is parallel
  for (int r = 0; r < n_cal; ++r) {
    NoiseSuprema s = noise_suprema(bank, p, derive_seed(seed, static_cast<std::uint64_t>(r)));
    k.sup_single[r] = s.single;
    k.sup_pair[r] = s.pair;
    zeta[r] = s.zeta;
  }
  k.quantile_single = empirical_quantile(k.sup_single, 1.0 - delta / 2.0);
  k.quantile_pair = empirical_quantile(k.sup_pair, 1.0 - delta / 2.0);
  k.kappa = std::max(k.quantile_single, k.quantile_pair);
  double m2 = 0.0;
  for (double z : zeta)
    m2 += z * z;
  k.zeta_second_moment = m2 / n_cal;
  return k;
}

KappaCalibration analytic_kappa(double c3, double eps, double p, double delta,
                                std::uint64_t grid_hash)
{
  if (!(eps > 0.0 && eps < 1.0))
    throw std::invalid_argument("analytic kappa needs 0 < eps < 1");
  if (!(c3 > 0.0))
    throw std::invalid_argument("c3 must be positive");
  KappaCalibration k;
  k.p = p;
  k.delta = delta;
  k.mode = KappaMode::analytic;
  k.grid_hash = grid_hash;
  k.c3 = c3;
  k.eps = eps;
  k.kappa = std::sqrt(c3 * std::log(1.0 / eps));
  return k;
}

std::vector<double> bhat_from_pairs(const EstimatorBank& bank, std::span<const double> pair_table,
                                    double eps, double kappa)
{
  const std::size_t nt = bank.size();
  if (pair_table.size() != nt * nt)
    throw std::invalid_argument("pair table has the wrong size");
  const double m = bank.constants().m_of_k;
  std::vector<double> out(nt);
  for (std::size_t i = 0; i < nt; ++i) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < nt; ++j)
      best = std::max(best, pair_table[i * nt + j] - eps * kappa * bank.sigma_pair(i, j));
    out[i] = best / m;
  }
  return out;
}

namespace {

void check_calibration(const EstimatorBank& bank, const KappaCalibration& k, double p)
{
  if (k.mode == KappaMode::monte_carlo && k.grid_hash != bank_hash(bank))
    throw std::invalid_argument("calibration was computed for a different theta grid");
  if (k.mode == KappaMode::monte_carlo && k.p != p)
    throw std::invalid_argument("calibration was computed for a different p");
}

} // namespace

std::vector<double> bhat(const EstimatorBank& bank, const Observation& obs,
                         const KappaCalibration& kappa, double p)
{
  check_calibration(bank, kappa, p);
  Spectrum y = bank.spectrum(obs.data());
  auto pairs = bank.pair_norms(y, std::vector<double>{p});
  return bhat_from_pairs(bank, pairs[0], obs.eps, kappa.kappa);
}

std::size_t argmin_first(std::span<const double> values, double tol)
{
  if (values.empty())
    throw std::invalid_argument("argmin of an empty table");
  double best = *std::min_element(values.begin(), values.end());
  const double slack = tol * std::max(1.0, std::abs(best));
  for (std::size_t i = 0; i < values.size(); ++i)
    if (values[i] <= best + slack)
      return i;
  return 0;
}

SelectionTables selection_tables(const EstimatorBank& bank, const Spectrum& data, double eps,
                                 double kappa, double p)
{
  auto pairs = bank.pair_norms(data, std::vector<double>{p});
  SelectionTables t;
  t.bhat = bhat_from_pairs(bank, pairs[0], eps, kappa);
  t.objective.resize(bank.size());
  for (std::size_t i = 0; i < bank.size(); ++i)
    t.objective[i] = t.bhat[i] + kappa * eps * bank.sigma(i);
  t.index = argmin_first(t.objective);
  return t;
}

SelectionResult select(const EstimatorBank& bank, const Observation& obs, double p,
                       const KappaCalibration& kappa)
{
  check_calibration(bank, kappa, p);
  Spectrum y = bank.spectrum(obs.data());
  SelectionTables t = selection_tables(bank, y, obs.eps, kappa.kappa, p);
  SelectionResult r;
  r.index = t.index;
  r.theta_hat = bank.theta(t.index);
  r.bhat = std::move(t.bhat);
  r.objective = std::move(t.objective);
  r.sigma.resize(bank.size());
  for (std::size_t i = 0; i < bank.size(); ++i)
    r.sigma[i] = bank.sigma(i);
  r.estimate.theta = r.theta_hat;
  r.estimate.values = bank.estimate_field(t.index, y);
  r.estimate.sigma_sup = bank.sigma(t.index);
  r.kappa = kappa;
  return r;
}

void write_objective_csv(std::ostream& os, const SelectionResult& r)
{
  os << "theta-id,bhat,sigma_sup,objective\n";
  char buf[128];
  for (std::size_t i = 0; i < r.objective.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%zu,%.12g,%.12g,%.12g\n", i, r.bhat[i], r.sigma[i],
                  r.objective[i]);
    os << buf;
  }
}

void write_calibration_json(std::ostream& os, const KappaCalibration& k)
{
  nlohmann::ordered_json j;
  j["p"] = number_or_inf(k.p);
  j["delta"] = k.delta;
  j["kappa"] = k.kappa;
  j["mode"] = to_string(k.mode);
  j["n_cal"] = k.n_cal;
  j["grid_hash"] = hex64(k.grid_hash);
  j["seed"] = k.seed;
  j["quantiles"] = {{"single", k.quantile_single}, {"pair", k.quantile_pair}};
  j["zeta_second_moment"] = k.zeta_second_moment;
  if (k.mode == KappaMode::analytic) {
    j["c3"] = k.c3;
    j["eps"] = k.eps;
  }
  os << j.dump(2) << "\n";
}

KappaCalibration read_calibration_json(std::istream& is)
{
  nlohmann::json j = nlohmann::json::parse(is);
  KappaCalibration k;
  k.p = read_number(j.at("p"));
  k.delta = j.at("delta").get<double>();
  k.kappa = j.at("kappa").get<double>();
  k.mode = parse_kappa_mode(j.at("mode").get<std::string>());
  k.n_cal = j.at("n_cal").get<int>();
  k.grid_hash = std::stoull(j.at("grid_hash").get<std::string>(), nullptr, 16);
  k.seed = j.at("seed").get<std::uint64_t>();
  k.quantile_single = j.at("quantiles").at("single").get<double>();
  k.quantile_pair = j.at("quantiles").at("pair").get<double>();
  k.zeta_second_moment = j.value("zeta_second_moment", 0.0);
  k.c3 = j.value("c3", 0.0);
  k.eps = j.value("eps", 0.0);
  return k;
}

} // namespace structadapt
