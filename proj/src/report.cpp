#include "structadapt/report.hpp"

#include "structadapt/hash.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

namespace structadapt {

namespace {

nlohmann::ordered_json num(double v)
{
  if (std::isfinite(v))
    return v;
  return fmt12(v);
}

} // namespace

std::string fmt12(double v)
{
  if (std::isnan(v))
    return "nan";
  if (std::isinf(v))
    return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

CsvTable::CsvTable(std::vector<std::string> header)
  : header_(std::move(header))
{}

void CsvTable::add(std::vector<std::string> row)
{
  if (row.size() != header_.size())
    throw std::invalid_argument("CSV row has " + std::to_string(row.size()) + " cells, expected " +
                                std::to_string(header_.size()));
  rows_.push_back(std::move(row));
}

void CsvTable::write(std::ostream& os) const
{
  auto line = [&os](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i)
      os << (i ? "," : "") << cells[i];
    os << '\n';
  };
  line(header_);
  for (const auto& r : rows_)
    line(r);
}

nlohmann::ordered_json tag_json(const ReportTag& tag)
{
  return {{"config_hash", hex64(tag.config_hash)}, {"seed", tag.seed}};
}

nlohmann::ordered_json to_json(const ThetaPoint& t)
{
  nlohmann::ordered_json j;
  j["partition"] = to_string(t.partition);
  j["angles"] = t.angles;
  std::vector<std::vector<double>> e(t.directions.rows(), std::vector<double>(t.directions.cols()));
  for (int r = 0; r < t.directions.rows(); ++r)
    for (int c = 0; c < t.directions.cols(); ++c)
      e[r][c] = t.directions(r, c);
  j["directions"] = e;
  j["bandwidth"] = t.bandwidth;
  return j;
}

nlohmann::ordered_json to_json(const RiskReport& r)
{
  nlohmann::ordered_json j;
  j["estimator_id"] = r.estimator_id;
  j["p"] = num(r.p);
  j["eps"] = r.eps;
  j["n_rep"] = r.n_rep;
  j["risk"] = r.risk;
  j["ci_halfwidth"] = r.ci_halfwidth;
  j["values"] = r.values;
  if (!r.selected.empty())
    j["selected"] = r.selected;
  return j;
}

nlohmann::ordered_json to_json(const KappaCalibration& k)
{
  nlohmann::ordered_json j;
  j["p"] = num(k.p);
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
  return j;
}

nlohmann::ordered_json to_json(const OracleInequalityReport& r)
{
  nlohmann::ordered_json j;
  j["risk"] = to_json(r.risk);
  j["oracle_theta"] = to_json(r.oracle.theta);
  j["oracle_index"] = r.oracle.index;
  j["oracle_value"] = r.oracle.value;
  j["m_of_k"] = r.m_of_k;
  j["sigma_of_k"] = r.sigma_of_k;
  j["kappa"] = r.kappa;
  j["delta"] = r.delta;
  j["f_sup"] = r.f_sup;
  j["remainder"] = r.remainder;
  j["rhs"] = r.rhs;
  j["ratio"] = num(r.ratio);
  j["ratio_lower"] = num(r.ratio_lower);
  j["pass"] = r.pass;
  return j;
}

nlohmann::ordered_json to_json(const SandwichRow& r)
{
  return {{"theta", r.theta},  {"p", num(r.p)},         {"bias", r.bias},
          {"noise", r.noise},  {"noise_ci", r.noise_ci}, {"risk", r.risk},
          {"risk_ci", r.risk_ci}, {"lower", r.lower},    {"upper", r.upper},
          {"pass", r.pass}};
}

nlohmann::ordered_json to_json(const RateReport& r)
{
  nlohmann::ordered_json j;
  j["beta"] = r.beta;
  j["target"] = r.target;
  j["unstructured_target"] = r.unstructured_target;
  j["slope"] = r.slope;
  j["fixed_slope"] = r.fixed_slope;
  auto pts = nlohmann::ordered_json::array();
  for (const auto& p : r.points) {
    nlohmann::ordered_json q;
    q["eps"] = p.eps;
    q["grid_size"] = p.grid_size;
    q["h_min"] = p.h_min;
    q["h_max"] = p.h_max;
    q["kappa"] = p.kappa;
    q["h_star"] = p.h_star;
    q["phi"] = p.phi;
    q["ratio"] = p.ratio;
    q["upper_constant"] = p.upper_constant;
    q["selected"] = to_json(p.selected);
    q["fixed"] = to_json(p.fixed);
    pts.push_back(q);
  }
  j["points"] = pts;
  return j;
}

CsvTable rate_table(const RateReport& r, const ReportTag& tag)
{
  CsvTable t({"eps", "risk", "ci", "phi", "ratio", "fixed-risk", "fixed-ci", "h-star", "kappa",
              "grid-size", "config-hash", "seed"});
  for (const auto& p : r.points)
    t.add({fmt12(p.eps), fmt12(p.selected.risk), fmt12(p.selected.ci_halfwidth), fmt12(p.phi),
           fmt12(p.ratio), fmt12(p.fixed.risk), fmt12(p.fixed.ci_halfwidth), fmt12(p.h_star),
           fmt12(p.kappa), std::to_string(p.grid_size), hex64(tag.config_hash),
           std::to_string(tag.seed)});
  return t;
}

CsvTable sandwich_table(std::span<const SandwichRow> rows, const ReportTag& tag)
{
  CsvTable t({"theta-id", "p", "bias", "noise", "noise-ci", "risk", "risk-ci", "lower", "upper",
              "pass", "config-hash", "seed"});
  for (const auto& r : rows)
    t.add({std::to_string(r.theta), fmt12(r.p), fmt12(r.bias), fmt12(r.noise), fmt12(r.noise_ci),
           fmt12(r.risk), fmt12(r.risk_ci), fmt12(r.lower), fmt12(r.upper),
           r.pass ? "1" : "0", hex64(tag.config_hash), std::to_string(tag.seed)});
  return t;
}

CsvTable oracle_table(std::span<const OracleInequalityReport> rows,
                      std::span<const std::string> labels, const ReportTag& tag)
{
  if (labels.size() != rows.size())
    throw std::invalid_argument("one label per oracle report expected");
  CsvTable t({"config", "eps", "p", "risk", "ci", "oracle", "remainder", "rhs", "ratio",
              "ratio-lower", "pass", "config-hash", "seed"});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    t.add({labels[i], fmt12(r.risk.eps), fmt12(r.risk.p), fmt12(r.risk.risk),
           fmt12(r.risk.ci_halfwidth), fmt12(r.oracle.value), fmt12(r.remainder), fmt12(r.rhs),
           fmt12(r.ratio), fmt12(r.ratio_lower), r.pass ? "1" : "0", hex64(tag.config_hash),
           std::to_string(tag.seed)});
  }
  return t;
}

CsvTable replication_table(const RiskReport& r)
{
  CsvTable t({"replication", "value"});
  for (std::size_t i = 0; i < r.values.size(); ++i)
    t.add({std::to_string(i), fmt12(r.values[i])});
  return t;
}

} // namespace structadapt
