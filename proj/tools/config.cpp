#include "config.hpp"

#include "structadapt/hash.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

namespace structadapt::cli {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

ordered_json p_json(double p)
{
  if (std::isinf(p))
    return "inf";
  return p;
}

//! Line of the last path segment, found by scanning for each quoted key in turn.
int locate(const std::string& text, const std::vector<std::string>& path)
{
  if (text.empty())
    return 0;
  std::size_t pos = 0;
  for (const auto& key : path) {
    auto at = text.find('"' + key + '"', pos);
    if (at == std::string::npos)
      return 0;
    pos = at + 1;
  }
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + pos, '\n'));
}

std::string dotted(const std::vector<std::string>& path)
{
  std::string s;
  for (const auto& k : path)
    s += (s.empty() ? "" : ".") + k;
  return s;
}

//! "line N: " or "--flag: " prefix for a key path, and the line (0 if none).
std::pair<std::string, int> source(const std::string& text, const Origins& origins,
                                   const std::vector<std::string>& path)
{
  if (!path.empty() && origins.count(path.front()))
    return {origins.at(path.front()) + ": ", 0};
  int line = locate(text, path);
  return {line ? "line " + std::to_string(line) + ": " : "", line};
}

class Reader
{
public:
  Reader(const json& obj, std::vector<std::string> path, const std::string& text,
         const Origins& origins)
    : obj_(obj)
    , path_(std::move(path))
    , text_(text)
    , origins_(origins)
  {
    if (!obj_.is_object())
      fail(path_, "expected an object");
  }

  [[noreturn]] void fail(const std::vector<std::string>& path, const std::string& msg) const
  {
    auto [prefix, line] = source(text_, origins_, path);
    std::string where = path.empty() ? "config" : dotted(path);
    throw ConfigError(prefix + where + ": " + msg, line);
  }

  Reader sub(const std::string& key)
  {
    seen_.insert(key);
    auto p = child(key);
    return Reader(obj_.at(key), p, text_, origins_);
  }

  bool has(const std::string& key) const { return obj_.contains(key); }

  template <class T>
  void get(const std::string& key, T& out)
  {
    if (!obj_.contains(key))
      return;
    seen_.insert(key);
    const json& v = obj_.at(key);
    try {
      if constexpr (std::is_same_v<T, double>) {
        out = number(v, key);
      } else if constexpr (std::is_same_v<T, std::vector<double>>) {
        if (!v.is_array())
          fail(child(key), "expected an array of numbers");
        out.clear();
        for (const auto& e : v)
          out.push_back(number(e, key));
      } else if constexpr (std::is_same_v<T, std::optional<double>>) {
        if (v.is_null())
          out.reset();
        else
          out = number(v, key);
      } else if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean())
          fail(child(key), "expected true or false");
        out = v.get<bool>();
      } else if constexpr (std::is_integral_v<T>) {
        if (!v.is_number_integer() || (std::is_unsigned_v<T> && v.get<long long>() < 0 &&
                                       !v.is_number_unsigned()))
          fail(child(key), "expected a non-negative integer");
        out = v.get<T>();
      } else {
        out = v.get<T>();
      }
    } catch (const json::exception& e) {
      fail(child(key), std::string("wrong type (") + e.what() + ")");
    }
  }

  void finish() const
  {
    for (const auto& [k, v] : obj_.items())
      if (!seen_.count(k))
        fail(child(k), "unknown key");
  }

private:
  std::vector<std::string> child(const std::string& key) const
  {
    auto p = path_;
    p.push_back(key);
    return p;
  }

  double number(const json& v, const std::string& key) const
  {
    if (v.is_number())
      return v.get<double>();
    if (v.is_string() && (v.get<std::string>() == "inf" || v.get<std::string>() == "infinity"))
      return kInfinity;
    fail(child(key), "expected a number or \"inf\"");
  }

  const json& obj_;
  std::vector<std::string> path_;
  const std::string& text_;
  const Origins& origins_;
  std::set<std::string> seen_;
};

std::string fmt_delta(double d)
{
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", d);
  return buf;
}

} // namespace

ordered_json to_json(const ExperimentConfig& c)
{
  ordered_json j;
  j["command"] = c.command;
  j["dim"] = c.dim;
  j["points_per_axis"] = c.points_per_axis;
  j["half_width"] = c.half_width;
  j["kernel_order"] = c.kernel_order;
  j["eps"] = c.eps;
  j["eps_list"] = c.eps_list;
  j["p"] = p_json(c.p);
  j["delta"] = c.delta;
  j["theoretical_delta"] = c.theoretical_delta;
  j["kappa_mode"] = c.kappa_mode;
  j["c3"] = c.c3;

  ordered_json t;
  t["n_angles"] = c.theta.n_angles;
  t["angles"] = c.theta.angles;
  t["n_h"] = c.theta.n_h;
  t["beta_max"] = c.theta.beta_max;
  t["eta"] = c.theta.eta;
  t["h_min"] = c.theta.h_min ? ordered_json(*c.theta.h_min) : ordered_json(nullptr);
  t["h_max"] = c.theta.h_max ? ordered_json(*c.theta.h_max) : ordered_json(nullptr);
  t["min_bandwidth_cells"] = c.theta.min_bandwidth_cells;
  t["partitions"] = c.theta.partitions;
  j["theta_grid"] = t;

  ordered_json f;
  f["family"] = c.function.family;
  f["beta"] = c.function.beta;
  f["angles"] = c.function.angles;
  f["profile"] = c.function.profile;
  f["amplitude"] = c.function.amplitude;
  f["frequency"] = c.function.frequency;
  f["index_dim"] = c.function.index_dim;
  f["partition"] = c.function.partition;
  f["degree"] = c.function.degree;
  j["function"] = f;

  j["n_rep"] = c.n_rep;
  j["n_cal"] = c.n_cal;
  j["n_thetas"] = c.n_thetas;
  ordered_json ps = ordered_json::array();
  for (double p : c.ps)
    ps.push_back(p_json(p));
  j["ps"] = ps;
  j["seed"] = c.seed;
  j["threads"] = c.threads;
  j["out"] = c.out;

  ordered_json tol;
  tol["unit_integral"] = c.tol.unit_integral;
  tol["moment"] = c.tol.moment;
  tol["norm_slack"] = c.tol.norm_slack;
  tol["symmetry"] = c.tol.symmetry;
  tol["symmetry_pairs"] = c.tol.symmetry_pairs;
  tol["rate_exponent"] = c.tol.rate_exponent;
  tol["adaptation_factor"] = c.tol.adaptation_factor;
  j["tolerances"] = tol;
  return j;
}

ExperimentConfig config_from_json(const json& j, const std::string& text, const Origins& origins)
{
  ExperimentConfig c;
  Reader r(j, {}, text, origins);
  r.get("command", c.command);
  r.get("dim", c.dim);
  r.get("points_per_axis", c.points_per_axis);
  r.get("half_width", c.half_width);
  r.get("kernel_order", c.kernel_order);
  r.get("eps", c.eps);
  r.get("eps_list", c.eps_list);
  r.get("p", c.p);
  r.get("delta", c.delta);
  r.get("theoretical_delta", c.theoretical_delta);
  r.get("kappa_mode", c.kappa_mode);
  r.get("c3", c.c3);
  if (r.has("theta_grid")) {
    Reader t = r.sub("theta_grid");
    t.get("n_angles", c.theta.n_angles);
    t.get("angles", c.theta.angles);
    t.get("n_h", c.theta.n_h);
    t.get("beta_max", c.theta.beta_max);
    t.get("eta", c.theta.eta);
    t.get("h_min", c.theta.h_min);
    t.get("h_max", c.theta.h_max);
    t.get("min_bandwidth_cells", c.theta.min_bandwidth_cells);
    t.get("partitions", c.theta.partitions);
    t.finish();
  }
  if (r.has("function")) {
    Reader f = r.sub("function");
    f.get("family", c.function.family);
    f.get("beta", c.function.beta);
    f.get("angles", c.function.angles);
    f.get("profile", c.function.profile);
    f.get("amplitude", c.function.amplitude);
    f.get("frequency", c.function.frequency);
    f.get("index_dim", c.function.index_dim);
    f.get("partition", c.function.partition);
    f.get("degree", c.function.degree);
    f.finish();
  }
  r.get("n_rep", c.n_rep);
  r.get("n_cal", c.n_cal);
  r.get("n_thetas", c.n_thetas);
  r.get("ps", c.ps);
  r.get("seed", c.seed);
  r.get("threads", c.threads);
  r.get("out", c.out);
  if (r.has("tolerances")) {
    Reader t = r.sub("tolerances");
    t.get("unit_integral", c.tol.unit_integral);
    t.get("moment", c.tol.moment);
    t.get("norm_slack", c.tol.norm_slack);
    t.get("symmetry", c.tol.symmetry);
    t.get("symmetry_pairs", c.tol.symmetry_pairs);
    t.get("rate_exponent", c.tol.rate_exponent);
    t.get("adaptation_factor", c.tol.adaptation_factor);
    t.finish();
  }
  r.finish();

  // the function lives in the experiment's dimension
  c.function.dim = c.dim;
  c.theta.dim = c.dim;

  try {
    validate(c);
  } catch (const std::invalid_argument& e) {
    std::string msg = e.what();
    // validation messages start with the offending key
    std::string key = msg.substr(0, msg.find(':'));
    std::vector<std::string> path;
    for (std::size_t a = 0, b; a <= key.size(); a = b + 1) {
      b = std::min(key.find('.', a), key.size());
      path.push_back(key.substr(a, b - a));
    }
    auto [prefix, line] = source(text, origins, path);
    throw ConfigError(prefix + msg, line);
  }
  return c;
}

json parse_json_text(const std::string& text)
{
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    int line = 1 + static_cast<int>(std::count(
                     text.begin(), text.begin() + std::min<std::size_t>(e.byte, text.size()), '\n'));
    if (e.byte > 0 && e.byte <= text.size() && text[e.byte - 1] == '\n')
      --line;
    throw ConfigError("line " + std::to_string(line) + ": " + e.what(), line);
  }
}

ExperimentConfig parse_config(const std::string& text, const Origins& origins)
{
  return config_from_json(unwrap_manifest(parse_json_text(text)), text, origins);
}

const json& unwrap_manifest(const json& j)
{
  if (j.is_object() && j.contains("config") && j.contains("config_hash"))
    return j.at("config");
  return j;
}

void validate(const ExperimentConfig& c)
{
  auto bad = [](const std::string& key, const std::string& msg) {
    throw std::invalid_argument(key + ": " + msg);
  };
  if (std::find(kCommands.begin(), kCommands.end(), c.command) == kCommands.end())
    bad("command", "unknown command '" + c.command + "'");
  if (c.dim < 1 || c.dim > 3)
    bad("dim", "must be 1, 2 or 3");
  if (c.points_per_axis < 9 || c.points_per_axis % 2 == 0)
    bad("points_per_axis", "must be odd and at least 9");
  if (c.half_width != 0.0 && c.half_width < min_half_width(c.dim))
    bad("half_width", "below the margin rule 1/2 + sqrt(dim)");
  if (c.kernel_order < 0 || c.kernel_order > 6)
    bad("kernel_order", "must lie in [0, 6]");
  if (!(c.eps >= 0.0 && c.eps < 1.0))
    bad("eps", "must lie in [0, 1)");
  if (c.command == "bench-rate") {
    if (c.eps_list.size() < 4)
      bad("eps_list", "needs at least 4 values");
    for (std::size_t i = 0; i < c.eps_list.size(); ++i) {
      if (!(c.eps_list[i] > 0.0 && c.eps_list[i] < 1.0))
        bad("eps_list", "values must lie in (0, 1)");
      if (i && !(c.eps_list[i] < c.eps_list[i - 1]))
        bad("eps_list", "must be strictly decreasing");
    }
  }
  auto check_p = [&](double p, const std::string& key) {
    if (!(p >= 1.0))
      bad(key, "must be >= 1 or inf");
  };
  check_p(c.p, "p");
  if (c.ps.empty())
    bad("ps", "must not be empty");
  for (double p : c.ps)
    check_p(p, "ps");
  if (!c.theoretical_delta && !(c.delta > 0.0 && c.delta < 1.0))
    bad("delta", "must lie in (0, 1)");
  try {
    parse_kappa_mode(c.kappa_mode);
  } catch (const std::exception&) {
    bad("kappa_mode", "expected monte-carlo or analytic");
  }
  if (!(c.c3 > 0.0))
    bad("c3", "must be positive");
  if (c.theta.n_angles < 1)
    bad("theta_grid.n_angles", "must be positive");
  if (c.theta.n_h < 1)
    bad("theta_grid.n_h", "must be positive");
  if (!(c.theta.beta_max > 0.0))
    bad("theta_grid.beta_max", "must be positive");
  if (!(c.theta.eta > 0.0 && c.theta.eta <= 1.0))
    bad("theta_grid.eta", "must lie in (0, 1]");
  if (c.theta.h_min && c.theta.h_max && !(*c.theta.h_min < *c.theta.h_max))
    bad("theta_grid.h_min", "must be below h_max");
  if (!(c.theta.min_bandwidth_cells > 0.0))
    bad("theta_grid.min_bandwidth_cells", "must be positive");
  for (const auto& s : c.theta.partitions) {
    try {
      if (!is_partition_of(parse_partition(s), c.dim))
        bad("theta_grid.partitions", "'" + s + "' is not a partition of {1..dim}");
    } catch (const std::invalid_argument& e) {
      if (std::string(e.what()).rfind("theta_grid", 0) == 0)
        throw;
      bad("theta_grid.partitions", e.what());
    }
  }
  try {
    make_test_function(function_spec(c));
  } catch (const std::exception& e) {
    bad("function", e.what());
  }
  if (c.n_rep < 2)
    bad("n_rep", "must be at least 2");
  if (c.n_cal < 1)
    bad("n_cal", "must be positive");
  bool calibrates = c.command != "verify-kernels" && c.command != "bench-sandwich";
  if (calibrates && c.kappa_mode == "monte-carlo") {
    double d = c.command == "bench-rate" ? c.delta : resolved_delta(c);
    if (!(d > 0.0) || c.n_cal < std::ceil(20.0 / d))
      bad("n_cal", "needs at least ceil(20 / delta) replications for delta = " + fmt_delta(d));
  }
  if (c.n_thetas < 1)
    bad("n_thetas", "must be positive");
  if (c.out.empty())
    bad("out", "must not be empty");
  if (!(c.tol.unit_integral > 0.0) || !(c.tol.moment > 0.0) || !(c.tol.norm_slack >= 0.0) ||
      !(c.tol.symmetry > 0.0) || !(c.tol.rate_exponent > 0.0) || !(c.tol.adaptation_factor > 0.0))
    bad("tolerances", "must be positive");
  if (c.tol.symmetry_pairs < 0)
    bad("tolerances.symmetry_pairs", "must be non-negative");

  // window check before any grid is built
  if (c.command != "bench-rate") {
    try {
      auto w = bandwidth_window(theta_config(c), c.eps, make_config_grid(c));
      if (!(w.h_min < w.h_max))
        bad("theta_grid", "empty bandwidth window [" + std::to_string(w.h_min) + ", " +
                            std::to_string(w.h_max) + "]");
    } catch (const std::invalid_argument& e) {
      if (std::string(e.what()).rfind("theta_grid", 0) == 0)
        throw;
      bad("theta_grid", e.what());
    }
  }
}

std::uint64_t config_hash(const ExperimentConfig& c)
{
  auto j = to_json(c);
  j.erase("out");
  j.erase("threads");
  return fnv1a64(j.dump());
}

double resolved_delta(const ExperimentConfig& c)
{
  return c.theoretical_delta ? theoretical_delta(c.eps, c.dim) : c.delta;
}

GridSpec make_config_grid(const ExperimentConfig& c)
{
  if (c.half_width == 0.0)
    return default_grid(c.dim, c.points_per_axis);
  return make_grid(c.dim, c.points_per_axis, c.half_width);
}

ThetaGridConfig theta_config(const ExperimentConfig& c)
{
  ThetaGridConfig t = c.theta;
  t.dim = c.dim;
  return t;
}

FunctionSpec function_spec(const ExperimentConfig& c)
{
  FunctionSpec f = c.function;
  f.dim = c.dim;
  return f;
}

} // namespace structadapt::cli
