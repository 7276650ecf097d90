// switchmc: unbiased Monte Carlo for SDE expectations via regime switching.
//
// Verbs:
//   run            one estimate, appends a CSV row
//   convergence    n_part sweep n0 * 4^q with a fitted log-stdev slope
//   complexity     mean step count over a (kappa, theta) grid vs the fitted polynomial
//   euler-compare  switching estimator vs calibrated Euler baseline per target accuracy
//   cases          lists the built-in test cases
//
// Configuration: `--config file` (flat key = value) plus --kebab-case flags
// overriding file values. Exit codes: 0 ok, 1 configuration error, 2 runtime error.

#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "switchmc/studies.hpp"

namespace {

using switchmc::ConfigError;
using switchmc::RunConfig;

const char* kUsage =
    "usage: switchmc <run|convergence|complexity|euler-compare|cases> [--config file] [--key value ...]\n"
    "\n"
    "common flags: --case N --method plain|antithetic|resample|euler --law exp|gamma\n"
    "  --lambda X --kappa X --theta X --rho X --n-part N --reps N --workers N\n"
    "  --n-iter N --seed N --output file.csv --h X --eps X\n"
    "study flags:  --n0 N --q-max N --samples N --kappa-grid a,b,.. --theta-grid a,b,.. --eps-list a,b,..\n";

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

RunConfig parse_args(const std::vector<std::string>& args) {
  std::vector<std::pair<std::string, std::string>> pairs;
  std::string config_path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    std::string token = args[i];
    if (token.rfind("--", 0) != 0) throw ConfigError("expected a --flag, got '" + token + "'");
    token.erase(0, 2);
    std::string value;
    const auto eq = token.find('=');
    if (eq != std::string::npos) {
      value = token.substr(eq + 1);
      token.erase(eq);
    } else {
      if (i + 1 >= args.size()) throw ConfigError("flag --" + token + " needs a value");
      value = args[++i];
    }
    if (token == "config")
      config_path = value;
    else
      pairs.emplace_back(token, value);
  }

  RunConfig config;
  if (!config_path.empty()) config = switchmc::parse_config(config_path);
  for (const auto& [key, value] : pairs)
    switchmc::set_config_field(config, key, value, "flag --" + key);
  return config;
}

void print_warnings(const std::vector<std::string>& warnings) {
  for (const std::string& w : warnings) std::cerr << "warning: " << w << '\n';
}

int cmd_run(const RunConfig& config) {
  print_warnings(switchmc::validate_config(config));
  const switchmc::CsvRow row = switchmc::run(config);
  switchmc::emit_rows(config, {row}, std::cout);
  return 0;
}

int cmd_convergence(const RunConfig& config) {
  print_warnings(switchmc::validate_config(config));
  const switchmc::ConvergenceResult result =
      switchmc::convergence_study(config, config.n0, config.q_max);
  switchmc::emit_rows(config, result.rows, std::cout);
  std::ostringstream note;
  note << "# fitted_slope=" << fmt(result.slope) << " slope_stderr=" << fmt(result.slope_stderr)
       << " unstable=" << (result.unstable ? 1 : 0);
  switchmc::emit_csv(config.output, note.str(), {}, std::cout);
  return 0;
}

int cmd_complexity(const RunConfig& config) {
  const auto kappas = switchmc::parse_double_list(config.kappa_grid);
  const auto thetas = switchmc::parse_double_list(config.theta_grid);
  for (double k : kappas)
    if (k < 0.2 || k > 0.5) throw ConfigError("kappa grid must stay within [0.2, 0.5]");
  for (double t : thetas)
    if (t < 1.0 || t > 10.0) throw ConfigError("theta grid must stay within [1, 10]");
  const auto points = switchmc::complexity_study(kappas, thetas, config.samples, config.seed);
  std::vector<std::string> lines;
  for (const auto& pt : points) {
    std::ostringstream os;
    os << fmt(pt.kappa) << ',' << fmt(pt.theta) << ',' << fmt(pt.steps_sim) << ','
       << fmt(pt.steps_poly) << ',' << fmt(pt.rel_gap) << ',' << pt.samples << ',' << pt.seed;
    lines.push_back(os.str());
  }
  switchmc::emit_csv(config.output, "kappa,theta,steps_sim,steps_poly,rel_gap,samples,seed", lines,
                     std::cout);
  return 0;
}

int cmd_euler_compare(const RunConfig& config) {
  print_warnings(switchmc::validate_config(config));
  const auto eps_list = switchmc::parse_double_list(config.eps_list);
  switchmc::EulerCalibrationCfg cal_cfg;
  cal_cfg.workers = config.workers;
  cal_cfg.seed = config.seed ^ 0x5ca1ab1eULL;
  const auto points = switchmc::euler_compare(config, eps_list, cal_cfg);
  std::vector<std::string> lines;
  for (const auto& pt : points) {
    std::ostringstream os;
    os << fmt(pt.eps) << ',' << pt.smc_n_part << ',' << fmt(pt.smc_mean) << ','
       << fmt(pt.smc_stderr) << ',' << fmt(pt.smc_time_s) << ',' << pt.emc_steps << ','
       << pt.emc_n << ',' << fmt(pt.emc_mean) << ',' << fmt(pt.emc_stderr) << ','
       << fmt(pt.emc_time_s) << ',' << (pt.calibration_degenerate ? 1 : 0);
    lines.push_back(os.str());
  }
  switchmc::emit_csv(config.output,
                     "eps,smc_n_part,smc_mean,smc_stderr,smc_time_s,emc_steps,emc_n,emc_mean,"
                     "emc_stderr,emc_time_s,calibration_degenerate",
                     lines, std::cout);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  if (args.empty()) {
    std::cerr << kUsage;
    return 1;
  }
  const std::string verb = args.front();
  args.erase(args.begin());

  try {
    if (verb == "cases") {
      std::cout << switchmc::list_cases();
      return 0;
    }
    const RunConfig config = parse_args(args);
    if (verb == "run") return cmd_run(config);
    if (verb == "convergence") return cmd_convergence(config);
    if (verb == "complexity") return cmd_complexity(config);
    if (verb == "euler-compare") return cmd_euler_compare(config);
    std::cerr << "unknown verb '" << verb << "'\n" << kUsage;
    return 1;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
