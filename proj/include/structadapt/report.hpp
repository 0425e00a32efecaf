#pragma once

#include "structadapt/bench.hpp"

#include <json.hpp>

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace structadapt {

//! %.12g, with "inf", "-inf" and "nan" spelled out.
std::string fmt12(double v);

//! Tag written into every report: configuration fingerprint and master seed.
struct ReportTag
{
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;
};

//! Plain CSV table; values are pre-formatted strings.
class CsvTable
{
public:
  explicit CsvTable(std::vector<std::string> header);
  void add(std::vector<std::string> row);
  std::size_t rows() const { return rows_.size(); }
  void write(std::ostream& os) const;

private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

nlohmann::ordered_json to_json(const RiskReport& r);
nlohmann::ordered_json to_json(const OracleInequalityReport& r);
nlohmann::ordered_json to_json(const RateReport& r);
nlohmann::ordered_json to_json(const SandwichRow& r);
nlohmann::ordered_json to_json(const KappaCalibration& k);
nlohmann::ordered_json to_json(const ThetaPoint& t);
nlohmann::ordered_json tag_json(const ReportTag& tag);

//! eps,risk,ci,phi,ratio,fixed-risk,fixed-ci,h-star,kappa,grid-size,config-hash,seed
CsvTable rate_table(const RateReport& r, const ReportTag& tag);
//! theta-id,p,bias,noise,noise-ci,risk,risk-ci,lower,upper,pass,config-hash,seed
CsvTable sandwich_table(std::span<const SandwichRow> rows, const ReportTag& tag);
//! config,eps,p,risk,ci,oracle,remainder,rhs,ratio,ratio-lower,pass,config-hash,seed
CsvTable oracle_table(std::span<const OracleInequalityReport> rows,
                      std::span<const std::string> labels, const ReportTag& tag);
//! replication,value
CsvTable replication_table(const RiskReport& r);

} // namespace structadapt
