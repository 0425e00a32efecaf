#pragma once

#include "structadapt/functions.hpp"
#include "structadapt/grid.hpp"
#include "structadapt/selection.hpp"

#include <json.hpp>

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace structadapt::cli {

inline const std::vector<std::string> kCommands{"verify-kernels", "calibrate",   "select",
                                                "bench-oracle",   "bench-rate", "bench-sandwich"};

//! Pass/fail thresholds used by the commands. All of them end up in the manifest.
struct Tolerances
{
  double unit_integral = 1e-6;
  double moment = 1e-10;
  double norm_slack = 0.01;
  double symmetry = 1e-10;
  int symmetry_pairs = 50;
  double rate_exponent = 0.15;
  double adaptation_factor = 3.0;

  bool operator==(const Tolerances&) const = default;
};

struct ExperimentConfig
{
  ExperimentConfig()
  {
    theta.dim = dim;
    function.dim = dim;
  }

  std::string command = "verify-kernels";

  int dim = 1;
  int points_per_axis = 129;
  //! 0 picks default_grid.
  double half_width = 0.0;
  int kernel_order = 0;

  double eps = 0.1;
  std::vector<double> eps_list{0.2, 0.1, 0.05, 0.025};
  double p = kInfinity;
  double delta = 0.1;
  //! delta = eps^(24 d^3 + 12 d^2) instead of `delta`.
  bool theoretical_delta = false;
  std::string kappa_mode = "monte-carlo";
  double c3 = 8.0;

  ThetaGridConfig theta;
  FunctionSpec function;

  int n_rep = 100;
  int n_cal = 200;
  //! bench-sandwich: number of grid points, spread evenly over the grid.
  int n_thetas = 5;
  std::vector<double> ps{1.0, 2.0, kInfinity};

  std::uint64_t seed = 1;
  unsigned threads = 0;
  std::string out = "out";

  Tolerances tol;

  bool operator==(const ExperimentConfig&) const = default;
};

//! Invalid configuration. `line` is 0 when no source position is known.
class ConfigError : public std::runtime_error
{
public:
  ConfigError(const std::string& what, int line)
    : std::runtime_error(what)
    , line_(line)
  {}
  int line() const { return line_; }

private:
  int line_;
};

nlohmann::ordered_json to_json(const ExperimentConfig& c);

//! Top-level keys set from somewhere other than the config text, mapped to a
//! label used in error messages (e.g. "eps" -> "--eps").
using Origins = std::map<std::string, std::string>;

//! Strict: unknown keys and wrong types are errors. `text` is the source used
//! to locate offending keys; pass an empty string when there is none.
ExperimentConfig config_from_json(const nlohmann::json& j, const std::string& text = {},
                                  const Origins& origins = {});

//! JSON syntax errors become ConfigError with the line of the offending token.
nlohmann::json parse_json_text(const std::string& text);

//! Parses JSON text; errors carry the line of the offending key or token.
//! A run manifest is accepted too; its embedded config is used.
ExperimentConfig parse_config(const std::string& text, const Origins& origins = {});

//! The embedded config of a run manifest, or `j` itself.
const nlohmann::json& unwrap_manifest(const nlohmann::json& j);

//! Cross-field checks that run before any computation.
void validate(const ExperimentConfig& c);

//! Hash of the serialized config without `out` and `threads`.
std::uint64_t config_hash(const ExperimentConfig& c);

double resolved_delta(const ExperimentConfig& c);

GridSpec make_config_grid(const ExperimentConfig& c);

//! Theta grid config with dim taken from the experiment.
ThetaGridConfig theta_config(const ExperimentConfig& c);

//! Function spec with dim taken from the experiment.
FunctionSpec function_spec(const ExperimentConfig& c);

} // namespace structadapt::cli
