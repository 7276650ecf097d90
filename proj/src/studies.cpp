#include "switchmc/studies.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace switchmc {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

double parse_double(const std::string& value, const std::string& context) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ConfigError(context + ": expected a number, got '" + value + "'");
  }
}

long long parse_int(const std::string& value, const std::string& context) {
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(value, &pos);
    if (pos != value.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ConfigError(context + ": expected an integer, got '" + value + "'");
  }
}

std::uint64_t parse_u64(const std::string& value, const std::string& context) {
  try {
    std::size_t pos = 0;
    const std::uint64_t v = std::stoull(value, &pos);
    if (pos != value.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ConfigError(context + ": expected an unsigned integer, got '" + value + "'");
  }
}

// Canonical key: kebab flags fold onto the snake_case field names; the two
// short spellings used throughout the experiment scripts are kept as aliases.
std::string canonical_key(std::string key) {
  for (char& c : key)
    if (c == '-') c = '_';
  if (key == "case") return "case_id";
  if (key == "npart") return "n_part";
  return key;
}

}  // namespace

CaseSpec RunConfig::resolve_case() const {
  if (inline_spec) return *inline_spec;
  return builtin_case(case_id);
}

SwitchingLaw RunConfig::resolve_law() const {
  if (law == "exp") return SwitchingLaw::exponential(lambda);
  if (law == "gamma") return SwitchingLaw::gamma(kappa, theta);
  throw ConfigError("unknown law '" + law + "' (expected exp or gamma)");
}

double RunConfig::resolve_rho() const { return rho > 0.0 ? rho : 1.0 - kappa; }

RunConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  RunConfig config;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string stripped = trim(line);
    if (stripped.empty()) continue;
    const auto eq = stripped.find('=');
    const std::string context = path + ":" + std::to_string(line_no);
    if (eq == std::string::npos) throw ConfigError(context + ": expected 'key = value'");
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    if (key.empty()) throw ConfigError(context + ": empty key");
    set_config_field(config, key, value, context);
  }
  return config;
}

void set_config_field(RunConfig& config, const std::string& raw_key, const std::string& value,
                      const std::string& context) {
  const std::string key = canonical_key(raw_key);
  if (key == "case_id")
    config.case_id = static_cast<int>(parse_int(value, context));
  else if (key == "method")
    config.method = value;
  else if (key == "law")
    config.law = value;
  else if (key == "lambda")
    config.lambda = parse_double(value, context);
  else if (key == "kappa")
    config.kappa = parse_double(value, context);
  else if (key == "theta")
    config.theta = parse_double(value, context);
  else if (key == "rho")
    config.rho = parse_double(value, context);
  else if (key == "n_part")
    config.n_part = parse_int(value, context);
  else if (key == "reps")
    config.reps = static_cast<int>(parse_int(value, context));
  else if (key == "workers")
    config.workers = static_cast<int>(parse_int(value, context));
  else if (key == "n_iter")
    config.n_iter = static_cast<int>(parse_int(value, context));
  else if (key == "seed")
    config.seed = parse_u64(value, context);
  else if (key == "output")
    config.output = value;
  else if (key == "h")
    config.h = parse_double(value, context);
  else if (key == "eps")
    config.eps = parse_double(value, context);
  else if (key == "n0")
    config.n0 = parse_int(value, context);
  else if (key == "q_max")
    config.q_max = static_cast<int>(parse_int(value, context));
  else if (key == "samples")
    config.samples = parse_int(value, context);
  else if (key == "kappa_grid")
    config.kappa_grid = value;
  else if (key == "theta_grid")
    config.theta_grid = value;
  else if (key == "eps_list")
    config.eps_list = value;
  else
    throw ConfigError(context + ": unknown key '" + raw_key + "'");
}

std::vector<std::string> validate_config(const RunConfig& config) {
  if (config.method.empty()) throw ConfigError("missing required key: method");
  if (config.method != "plain" && config.method != "antithetic" && config.method != "resample" &&
      config.method != "euler")
    throw ConfigError("unknown method '" + config.method +
                      "' (expected plain, antithetic, resample or euler)");
  if (!config.inline_spec && (config.case_id < 1 || config.case_id > 6))
    throw ConfigError("case_id must be in 1..6 (got " + std::to_string(config.case_id) + ")");
  if (config.law != "exp" && config.law != "gamma")
    throw ConfigError("unknown law '" + config.law + "' (expected exp or gamma)");
  if (config.law == "gamma" && (config.kappa <= 0.0 || config.theta <= 0.0))
    throw ConfigError("gamma law needs kappa > 0 and theta > 0");
  if (config.law == "exp" && config.lambda <= 0.0) throw ConfigError("exp law needs lambda > 0");
  if (config.n_part < 1) throw ConfigError("n_part must be >= 1");
  if (config.reps < 1) throw ConfigError("reps must be >= 1");
  if (config.workers < 1) throw ConfigError("workers must be >= 1");
  if (config.method == "euler" && config.h <= 0.0 && config.eps <= 0.0)
    throw ConfigError("method=euler requires h or eps");
  if (config.method == "resample") {
    if (config.law != "gamma")
      throw ConfigError("method=resample requires the gamma law (kappa <= 1/2)");
    if (config.kappa > 0.5 + 1e-12)
      throw ConfigError("method=resample requires kappa <= 1/2");
    const double effective_rho = config.resolve_rho();
    if (effective_rho < 0.5 - 1e-12 || effective_rho > 1.0 - config.kappa + 1e-12)
      throw ConfigError("rho must lie in [1/2, 1 - kappa]");
    if (config.n_part / config.workers < 1)
      throw ConfigError("n_part must provide at least one particle per worker");
  }

  std::vector<std::string> warnings;
  const CaseSpec spec = config.resolve_case();
  const KappaCheck check = validate_kappa(config.resolve_law(), spec.model);
  if (!check.ok) warnings.push_back(check.message);
  return warnings;
}

const char* CsvRow::header() {
  return "case,method,law,kappa,theta,rho,n_part,reps,mean,stderr,avg_switches,wall_time_s,seed";
}

std::string CsvRow::to_line() const {
  std::ostringstream os;
  os << case_id << ',' << method << ',' << law << ',' << fmt(kappa) << ',' << fmt(theta) << ',';
  if (rho > 0.0) os << fmt(rho);
  os << ',' << n_part << ',' << reps << ',' << fmt(mean) << ',' << fmt(stderr_value) << ','
     << fmt(avg_switches) << ',' << fmt(wall_time_s) << ',' << seed;
  return os.str();
}

void emit_csv(const std::string& output, const std::string& header,
              const std::vector<std::string>& lines, std::ostream& fallback) {
  if (output.empty()) {
    fallback << header << '\n';
    for (const std::string& line : lines) fallback << line << '\n';
    return;
  }
  namespace fs = std::filesystem;
  const bool need_header = !fs::exists(output) || fs::file_size(output) == 0;
  std::ofstream out(output, std::ios::app);
  if (!out) throw std::runtime_error("cannot open output file '" + output + "'");
  if (need_header) out << header << '\n';
  for (const std::string& line : lines) out << line << '\n';
}

void emit_rows(const RunConfig& config, const std::vector<CsvRow>& rows, std::ostream& fallback) {
  std::vector<std::string> lines;
  lines.reserve(rows.size());
  for (const CsvRow& row : rows) lines.push_back(row.to_line());
  emit_csv(config.output, CsvRow::header(), lines, fallback);
}

CsvRow run(const RunConfig& config) {
  const CaseSpec spec = config.resolve_case();
  const SwitchingLaw law = config.resolve_law();

  CsvRow row;
  row.case_id = spec.case_id;
  row.method = config.method;
  row.law = config.law;
  // The exponential law is stored via its gamma(1, 1/lambda) equivalent so a
  // row re-parses into the same configuration.
  row.kappa = config.law == "exp" ? 1.0 : config.kappa;
  row.theta = config.law == "exp" ? 1.0 / config.lambda : config.theta;
  row.reps = config.reps;
  row.seed = config.seed;

  EstimateResult result;
  if (config.method == "plain") {
    result = run_monte_carlo(make_plain_fn(spec.model, spec.payoff, law), config.n_part,
                             config.reps, config.workers, config.seed);
  } else if (config.method == "antithetic") {
    result = run_monte_carlo(make_antithetic_fn(spec.model, spec.payoff, law), config.n_part,
                             config.reps, config.workers, config.seed);
  } else if (config.method == "resample") {
    const PotentialParams params = PotentialParams::for_law(law, config.resolve_rho());
    row.rho = params.rho;
    result = resample_monte_carlo(spec.model, spec.payoff, law, params, config.n_part, config.reps,
                                  config.workers, config.n_iter, config.seed);
  } else if (config.method == "euler") {
    double h = config.h;
    long long n_e = config.n_part;
    if (h <= 0.0) {
      EulerCalibrationCfg cal_cfg;
      cal_cfg.workers = config.workers;
      cal_cfg.seed = config.seed ^ 0x5ca1ab1eULL;
      const EulerCalibration cal = calibrate_euler(spec.model, spec.payoff, cal_cfg);
      h = cal.h_of_eps(config.eps);
      n_e = cal.n_of_eps(config.eps);
    }
    result = euler_estimate(spec.model, spec.payoff, h, n_e, config.workers, config.seed,
                            config.reps);
  } else {
    throw ConfigError("unknown method '" + config.method + "'");
  }

  row.n_part = result.n_part;
  row.mean = result.mean;
  row.stderr_value = result.std_error;
  row.avg_switches = result.avg_switches;
  row.wall_time_s = result.wall_time_s;
  return row;
}

ConvergenceResult convergence_study(const RunConfig& config, long long n0, int q_max) {
  if (q_max < 1) throw ConfigError("convergence study needs q_max >= 1");
  ConvergenceResult out;
  std::vector<double> log_n;
  std::vector<double> log_sd;
  for (int q = 0; q <= q_max; ++q) {
    RunConfig point = config;
    point.n_part = n0;
    for (int i = 0; i < q; ++i) point.n_part *= 4;
    point.seed = config.seed + static_cast<std::uint64_t>(q) * 1000003ULL;
    const CsvRow row = run(point);
    out.rows.push_back(row);
    // stderr = replication_stdev / sqrt(reps); undo the sqrt(reps) for the fit.
    const double rep_sd = row.stderr_value * std::sqrt(static_cast<double>(row.reps));
    if (rep_sd > 0.0) {
      log_n.push_back(std::log(static_cast<double>(row.n_part)));
      log_sd.push_back(std::log(rep_sd));
    }
  }

  const std::size_t m = log_n.size();
  if (m < 2) {
    out.unstable = true;
    return out;
  }
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    mx += log_n[i];
    my += log_sd[i];
  }
  mx /= static_cast<double>(m);
  my /= static_cast<double>(m);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    sxx += (log_n[i] - mx) * (log_n[i] - mx);
    sxy += (log_n[i] - mx) * (log_sd[i] - my);
  }
  out.slope = sxy / sxx;
  double rss = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double r = log_sd[i] - my - out.slope * (log_n[i] - mx);
    rss += r * r;
  }
  out.slope_stderr = m > 2 ? std::sqrt(rss / static_cast<double>(m - 2) / sxx) : 1.0;
  // Wide confidence interval or dropped points mark the fit as undiagnosable
  // (the infinite-variance laws never settle onto a clean decay).
  out.unstable = m < static_cast<std::size_t>(q_max) + 1 || out.slope_stderr > 0.1;
  return out;
}

double n_steps_polynomial(double kappa, double theta) {
  return 15.84 - 1.63 * theta - 46.16 * kappa + 46.36 * kappa * kappa + 1.47 * theta * kappa;
}

std::vector<ComplexityPoint> complexity_study(const std::vector<double>& kappa_grid,
                                              const std::vector<double>& theta_grid,
                                              long long samples, std::uint64_t seed) {
  if (samples < 1) throw ConfigError("complexity study needs samples >= 1");
  std::vector<ComplexityPoint> out;
  std::uint64_t point_index = 0;
  for (double kappa : kappa_grid)
    for (double theta : theta_grid) {
      RngStream stream(seed, point_index++);
      const SwitchingLaw law = SwitchingLaw::gamma(kappa, theta);
      KahanSum steps;
      for (long long i = 0; i < samples; ++i)
        steps.add(static_cast<double>(simulate_mesh(law, 0.0, 1.0, stream).n_switch) + 1.0);
      ComplexityPoint pt;
      pt.kappa = kappa;
      pt.theta = theta;
      pt.samples = samples;
      pt.seed = seed;
      pt.steps_sim = steps.value() / static_cast<double>(samples);
      pt.steps_poly = n_steps_polynomial(kappa, theta);
      pt.rel_gap = (pt.steps_poly - pt.steps_sim) / pt.steps_sim;
      out.push_back(pt);
    }
  return out;
}

std::vector<EulerComparePoint> euler_compare(const RunConfig& config,
                                             const std::vector<double>& eps_list,
                                             const EulerCalibrationCfg& calibration_cfg) {
  const CaseSpec spec = config.resolve_case();
  const SwitchingLaw law = config.resolve_law();

  // Pilot run to size the switching estimator for each target accuracy.
  const EstimateResult pilot = run_monte_carlo(make_antithetic_fn(spec.model, spec.payoff, law),
                                               100000, 1, config.workers, config.seed + 17);
  const double draw_sd = pilot.draw_stdev;

  const EulerCalibration cal = calibrate_euler(spec.model, spec.payoff, calibration_cfg);

  std::vector<EulerComparePoint> out;
  for (double eps : eps_list) {
    if (!(eps > 0.0)) throw ConfigError("euler-compare needs positive eps values");
    EulerComparePoint pt;
    pt.eps = eps;
    pt.calibration_degenerate = cal.degenerate;

    pt.smc_n_part = static_cast<long long>(std::ceil((draw_sd / eps) * (draw_sd / eps)));
    const EstimateResult smc =
        run_monte_carlo(make_antithetic_fn(spec.model, spec.payoff, law), pt.smc_n_part, 1,
                        config.workers, config.seed);
    pt.smc_mean = smc.mean;
    pt.smc_stderr = smc.std_error;
    pt.smc_time_s = smc.wall_time_s;

    const double h = cal.h_of_eps(eps);
    pt.emc_n = cal.n_of_eps(eps);
    pt.emc_steps = static_cast<long long>(
        std::ceil((spec.model.horizon - spec.model.t0) / h - 1e-12));
    const EstimateResult emc =
        euler_estimate(spec.model, spec.payoff, h, pt.emc_n, config.workers, config.seed + 31);
    pt.emc_mean = emc.mean;
    pt.emc_stderr = emc.std_error;
    pt.emc_time_s = emc.wall_time_s;
    out.push_back(pt);
  }
  return out;
}

std::vector<double> parse_double_list(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const std::string t = trim(item);
    if (t.empty()) continue;
    out.push_back(parse_double(t, "list value"));
  }
  if (out.empty()) throw ConfigError("expected a comma-separated list of numbers, got '" + csv + "'");
  return out;
}

std::string list_cases() {
  std::ostringstream os;
  os << "id  dim  reference  description\n";
  for (int id = 1; id <= 6; ++id) {
    const CaseSpec spec = builtin_case(id);
    char ref[24];
    if (spec.reference_value)
      std::snprintf(ref, sizeof(ref), "%-9g", *spec.reference_value);
    else
      std::snprintf(ref, sizeof(ref), "%-9s", "-");
    os << id << "   " << spec.model.dim << "    " << ref << ("  ") << spec.description << '\n';
  }
  return os.str();
}

}  // namespace switchmc
