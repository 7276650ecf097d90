#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "switchmc/estimators.hpp"
#include "switchmc/model.hpp"
#include "switchmc/particles.hpp"
#include "switchmc/switching.hpp"

namespace switchmc {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Flat run configuration. Config files carry `key = value` lines with these
// exact field names; command-line flags are the --kebab-case spellings and
// override file values.
struct RunConfig {
  int case_id = 0;
  std::string method;         // plain | antithetic | resample | euler
  std::string law = "gamma";  // exp | gamma
  double lambda = 0.4;
  double kappa = 0.5;
  double theta = 2.5;
  double rho = -1.0;  // resample exponent; negative selects 1 - kappa
  long long n_part = 10000;
  int reps = 100;
  int workers = 1;
  int n_iter = 0;  // resample iterations; 0 derives it from a mesh pre-pass
  std::uint64_t seed = 12345;
  std::string output;  // CSV destination; empty writes to stdout
  double h = 0.0;      // euler step
  double eps = 0.0;    // euler target accuracy (calibrates h and n_E)
  long long n0 = 10000;
  int q_max = 5;
  long long samples = 100000;
  std::string kappa_grid = "0.2,0.3,0.4,0.5";
  std::string theta_grid = "1,2.5,5,10";
  std::string eps_list = "8e-4,4e-4";

  // Programmatic model injection for library callers; the CLI only selects
  // built-in cases.
  std::optional<CaseSpec> inline_spec;

  CaseSpec resolve_case() const;
  SwitchingLaw resolve_law() const;
  double resolve_rho() const;
};

// Reads a flat key = value file ('#' comments, blank lines allowed). Throws
// ConfigError with file:line context on unknown keys or malformed values.
RunConfig parse_config(const std::string& path);

// Applies one key/value pair (file spelling or --kebab-case flag spelling).
void set_config_field(RunConfig& config, const std::string& key, const std::string& value,
                      const std::string& context);

// Full validation; throws ConfigError on hard errors and returns advisory
// warnings (finite-variance gate, exponential-law notice).
std::vector<std::string> validate_config(const RunConfig& config);

struct CsvRow {
  int case_id = 0;
  std::string method;
  std::string law;
  double kappa = 0.0;  // exp law is encoded as its gamma(1, 1/lambda) equivalent
  double theta = 0.0;
  double rho = -1.0;  // negative prints as empty (not applicable)
  long long n_part = 0;
  int reps = 0;
  double mean = 0.0;
  double stderr_value = 0.0;
  double avg_switches = 0.0;
  double wall_time_s = 0.0;
  std::uint64_t seed = 0;

  static const char* header();
  std::string to_line() const;
};

// Appends lines to `output` with the header written when the file is new or
// empty; prints header+lines to `fallback` when no path is set.
void emit_csv(const std::string& output, const std::string& header,
              const std::vector<std::string>& lines, std::ostream& fallback);

void emit_rows(const RunConfig& config, const std::vector<CsvRow>& rows, std::ostream& fallback);

// Executes the configured estimator once and returns the row.
CsvRow run(const RunConfig& config);

struct ConvergenceResult {
  std::vector<CsvRow> rows;
  double slope = 0.0;
  double slope_stderr = 0.0;
  bool unstable = false;
};

// Repeats the run at n_part = n0 * 4^q, q = 0..q_max, and fits the slope of
// log(replication stdev) against log(n_part).
ConvergenceResult convergence_study(const RunConfig& config, long long n0, int q_max);

// Mean number of simulated time steps per trajectory (the truncated final
// step included), fitted over kappa in [0.2, 0.5], theta in [1, 10]:
// 15.84 - 1.63 theta - 46.16 kappa + 46.36 kappa^2 + 1.47 theta kappa.
double n_steps_polynomial(double kappa, double theta);

struct ComplexityPoint {
  double kappa = 0.0;
  double theta = 0.0;
  double steps_sim = 0.0;
  double steps_poly = 0.0;
  double rel_gap = 0.0;  // (poly - sim) / sim
  long long samples = 0;
  std::uint64_t seed = 0;
};

std::vector<ComplexityPoint> complexity_study(const std::vector<double>& kappa_grid,
                                              const std::vector<double>& theta_grid,
                                              long long samples, std::uint64_t seed);

struct EulerComparePoint {
  double eps = 0.0;
  long long smc_n_part = 0;
  double smc_mean = 0.0;
  double smc_stderr = 0.0;
  double smc_time_s = 0.0;
  long long emc_steps = 0;
  long long emc_n = 0;
  double emc_mean = 0.0;
  double emc_stderr = 0.0;
  double emc_time_s = 0.0;
  bool calibration_degenerate = false;
};

// Desk-scale head-to-head: for each target accuracy, sizes the switching
// estimator empirically and the Euler baseline through calibrate_euler.
std::vector<EulerComparePoint> euler_compare(const RunConfig& config,
                                             const std::vector<double>& eps_list,
                                             const EulerCalibrationCfg& calibration_cfg);

std::vector<double> parse_double_list(const std::string& csv);

std::string list_cases();

}  // namespace switchmc
