#pragma once

#include "config.hpp"

#include "structadapt/report.hpp"

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace structadapt::cli {

struct CommandOutput
{
  nlohmann::ordered_json report;
  std::vector<std::pair<std::string, CsvTable>> tables;
  //! Tables with a layout of their own, stored verbatim.
  std::vector<std::pair<std::string, std::string>> raw_tables;
  //! Constants computed during the run (M(K), kappa, grid geometry, ...).
  nlohmann::ordered_json constants = nlohmann::ordered_json::object();
  //! One entry per violated inequality.
  std::vector<std::string> failures;
};

//! Runs the command without touching the file system.
CommandOutput execute(const ExperimentConfig& c);

//! Runs the command and writes manifest.json, report.json and tables/*.csv
//! under c.out. Returns 0 on success, 2 when an acceptance check fails.
//! Failures are reported on `err`.
int run(const ExperimentConfig& c, std::ostream& err);

//! Library, compiler and dependency versions.
nlohmann::ordered_json versions();

} // namespace structadapt::cli
