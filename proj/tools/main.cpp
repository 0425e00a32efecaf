#include "commands.hpp"
#include "config.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

using namespace structadapt::cli;

namespace {

constexpr const char* kOutEnv = "STRUCTADAPT_OUT";

std::string read_file(const std::string& path)
{
  std::ifstream f(path, std::ios::binary);
  if (!f)
    throw std::runtime_error("cannot open config " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

nlohmann::json p_value(const std::string& s)
{
  if (s == "inf" || s == "infinity")
    return "inf";
  try {
    std::size_t used = 0;
    double v = std::stod(s, &used);
    if (used == s.size())
      return v;
  } catch (const std::exception&) {
  }
  return s;
}

} // namespace

int main(int argc, char** argv)
{
  CLI::App app{"Structural adaptive kernel estimation: kernels, calibration, selection, benches"};
  std::string config_path, command, out, p;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::optional<double> eps, delta;
  std::optional<int> n_rep;
  bool dump = false;
  app.add_option("--config", config_path, "JSON config file or a run manifest");
  app.add_option("--command", command, "verify-kernels | calibrate | select | bench-oracle | "
                                       "bench-rate | bench-sandwich");
  app.add_option("--seed", seed, "master seed");
  app.add_option("--threads", threads, "worker cap; 0 uses all cores");
  app.add_option("--out", out, std::string("output directory (default: $") + kOutEnv + " or ./out)");
  app.add_option("--eps", eps, "noise level");
  app.add_option("--p", p, "norm index, a number >= 1 or inf");
  app.add_option("--delta", delta, "calibration level");
  app.add_option("--n-rep", n_rep, "Monte Carlo replications");
  app.add_flag("--dump-config", dump, "print the resolved config as JSON and exit");
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  const std::string source = config_path.empty() ? "config" : config_path;
  try {
    std::string text = config_path.empty() ? std::string("{}") : read_file(config_path);
    nlohmann::json j = unwrap_manifest(parse_json_text(text));
    if (!j.is_object())
      throw ConfigError("config must be a JSON object", 1);

    Origins origins;
    auto set = [&](const char* key, const char* flag, nlohmann::json v) {
      j[key] = std::move(v);
      origins[key] = flag;
    };
    if (!command.empty())
      set("command", "--command", command);
    if (seed)
      set("seed", "--seed", *seed);
    if (threads)
      set("threads", "--threads", *threads);
    if (!out.empty())
      set("out", "--out", out);
    else if (!j.contains("out"))
      if (const char* env = std::getenv(kOutEnv); env && *env)
        set("out", kOutEnv, env);
    if (eps)
      set("eps", "--eps", *eps);
    if (!p.empty())
      set("p", "--p", p_value(p));
    if (delta)
      set("delta", "--delta", *delta);
    if (n_rep)
      set("n_rep", "--n-rep", *n_rep);

    ExperimentConfig cfg = config_from_json(j, text, origins);
    if (dump) {
      std::cout << to_json(cfg).dump(2) << '\n';
      return 0;
    }
    return run(cfg, std::cerr);
  } catch (const ConfigError& e) {
    std::cerr << "structadapt: " << source << ": " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "structadapt: error: " << e.what() << '\n';
    return 1;
  }
}
