#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

#include "switchmc/studies.hpp"

using namespace switchmc;

namespace {

RunConfig small_case2_config() {
  RunConfig config;
  config.case_id = 2;
  config.method = "antithetic";
  config.law = "gamma";
  config.kappa = 0.5;
  config.theta = 2.5;
  config.n_part = 5000;
  config.reps = 4;
  config.workers = 1;
  config.seed = 900;
  return config;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(item);
  return out;
}

}  // namespace

TEST_CASE("config parsing and validation") {
  SUBCASE("minimal flags build a valid config") {
    RunConfig config;
    set_config_field(config, "case", "2", "flag");
    set_config_field(config, "method", "antithetic", "flag");
    set_config_field(config, "law", "gamma", "flag");
    set_config_field(config, "kappa", "0.5", "flag");
    set_config_field(config, "theta", "2.5", "flag");
    set_config_field(config, "npart", "10000", "flag");
    CHECK(config.case_id == 2);
    CHECK(config.n_part == 10000);
    CHECK(validate_config(config).empty());
  }
  SUBCASE("kappa above the gate warns without blocking") {
    RunConfig config = small_case2_config();
    config.kappa = 0.6;
    const auto warnings = validate_config(config);
    REQUIRE(warnings.size() == 1);
    CHECK(warnings[0].find("kappa") != std::string::npos);
  }
  SUBCASE("exponential law warns about infinite variance") {
    RunConfig config = small_case2_config();
    config.law = "exp";
    const auto warnings = validate_config(config);
    REQUIRE(warnings.size() == 1);
    CHECK(warnings[0].find("infinite variance") != std::string::npos);
  }
  SUBCASE("missing method is named") {
    RunConfig config;
    config.case_id = 2;
    CHECK_THROWS_WITH_AS(validate_config(config), "missing required key: method", ConfigError);
  }
  SUBCASE("range errors") {
    RunConfig config = small_case2_config();
    config.kappa = -0.1;
    CHECK_THROWS_AS(validate_config(config), ConfigError);
    config = small_case2_config();
    config.n_part = 0;
    CHECK_THROWS_AS(validate_config(config), ConfigError);
    config = small_case2_config();
    config.case_id = 9;
    CHECK_THROWS_AS(validate_config(config), ConfigError);
    config = small_case2_config();
    config.method = "euler";
    CHECK_THROWS_AS(validate_config(config), ConfigError);  // needs h or eps
    config.h = 0.01;
    CHECK(validate_config(config).empty());
  }
  SUBCASE("resample feasibility") {
    RunConfig config = small_case2_config();
    config.method = "resample";
    config.law = "exp";
    CHECK_THROWS_AS(validate_config(config), ConfigError);
    config.law = "gamma";
    config.kappa = 0.6;
    CHECK_THROWS_AS(validate_config(config), ConfigError);
    config.kappa = 0.3;
    config.rho = 0.9;
    CHECK_THROWS_AS(validate_config(config), ConfigError);
    config.rho = -1.0;
    CHECK(validate_config(config).empty());
  }
}

TEST_CASE("config file parsing") {
  const std::string path = "test_config_tmp.cfg";
  {
    std::ofstream out(path);
    out << "# comment line\n"
        << "case_id = 3\n"
        << "method = resample\n"
        << "kappa = 0.5   # trailing comment\n"
        << "n_part = 2000\n"
        << "\n";
  }
  const RunConfig config = parse_config(path);
  CHECK(config.case_id == 3);
  CHECK(config.method == "resample");
  CHECK(config.n_part == 2000);

  {
    std::ofstream out(path);
    out << "method = plain\nnot_a_key = 1\n";
  }
  try {
    parse_config(path);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("not_a_key") != std::string::npos);
    CHECK(msg.find(":2") != std::string::npos);
  }

  {
    std::ofstream out(path);
    out << "kappa = two\n";
  }
  CHECK_THROWS_AS(parse_config(path), ConfigError);
  CHECK_THROWS_AS(parse_config("no_such_file.cfg"), ConfigError);
  std::remove(path.c_str());
}

TEST_CASE("run emits a row that reproduces the run") {
  RunConfig config = small_case2_config();
  const CsvRow row = run(config);
  CHECK(row.case_id == 2);
  CHECK(row.n_part == 5000);
  CHECK(std::abs(row.mean - 0.17466) < 0.02);

  // Re-parse the row into a config; the rerun must reproduce the mean bit for bit.
  const auto fields = split(row.to_line(), ',');
  const auto header = split(CsvRow::header(), ',');
  REQUIRE(fields.size() == header.size());
  RunConfig replay;
  replay.case_id = std::stoi(fields[0]);
  replay.method = fields[1];
  replay.law = fields[2];
  replay.kappa = std::stod(fields[3]);
  replay.theta = std::stod(fields[4]);
  replay.n_part = std::stoll(fields[6]);
  replay.reps = std::stoi(fields[7]);
  replay.seed = std::stoull(fields[12]);
  const CsvRow again = run(replay);
  CHECK(again.mean == row.mean);
  CHECK(again.to_line().substr(0, again.to_line().rfind(',')) !=
        "");  // row formats without throwing

  // Identical runs differ only in the wall-time column.
  const auto a = split(row.to_line(), ',');
  const auto b = split(again.to_line(), ',');
  for (std::size_t i = 0; i < a.size(); ++i)
    if (header[i] != "wall_time_s") CHECK(a[i] == b[i]);
}

TEST_CASE("case-2 run at 4e4 x 100 lands on the reference") {
  RunConfig config = small_case2_config();
  config.n_part = 40000;
  config.reps = 100;
  config.seed = 31415;
  const CsvRow row = run(config);
  // Case-2 draws have sd ~2, so the mean over 4e6 draws carries a ~1e-3
  // stderr; the reference must sit inside the replication band.
  CHECK(std::abs(row.mean - 0.17466) < 3.0 * row.stderr_value);
  CHECK(row.stderr_value < 2.5e-3);
}

TEST_CASE("case-2 euler run at the first comparison point") {
  RunConfig config = small_case2_config();
  config.method = "euler";
  config.h = 1.0 / 145.0;
  config.n_part = 432025;
  config.reps = 1;
  config.seed = 2718;
  const CsvRow row = run(config);
  CHECK(std::abs(row.mean - 0.1752) < 0.0015);
  CHECK(row.avg_switches == doctest::Approx(145.0));
}

TEST_CASE("exponential runs are encoded as their gamma equivalent") {
  RunConfig config = small_case2_config();
  config.law = "exp";
  config.lambda = 0.4;
  config.method = "plain";
  const CsvRow row = run(config);
  CHECK(row.kappa == 1.0);
  CHECK(row.theta == doctest::Approx(2.5));
}

TEST_CASE("csv output is append-safe") {
  const std::string path = "test_rows_tmp.csv";
  std::remove(path.c_str());
  RunConfig config = small_case2_config();
  config.output = path;

  CsvRow row;
  row.case_id = 2;
  row.method = "antithetic";
  row.law = "gamma";
  row.kappa = 0.5;
  row.theta = 2.5;
  row.n_part = 10;
  row.reps = 1;
  row.seed = 1;
  std::ostringstream unused;
  emit_rows(config, {row}, unused);
  emit_rows(config, {row}, unused);

  std::ifstream in(path);
  std::string line;
  int lines = 0;
  int headers = 0;
  while (std::getline(in, line)) {
    ++lines;
    if (line == CsvRow::header()) ++headers;
  }
  CHECK(lines == 3);
  CHECK(headers == 1);
  std::remove(path.c_str());
}

TEST_CASE("convergence study recovers the CLT slope on i.i.d. draws") {
  SdeModel model;
  model.dim = 1;
  model.x0 = {1.0};
  model.drift = [](double, const Vec&, Vec& out) { out[0] = 0.1; };
  model.sigma = [](double, const Vec&, SquareMatrix& out) { out(0, 0) = 0.3; };
  CaseSpec spec;
  spec.case_id = 1;
  spec.model = model;
  spec.payoff = Payoff{[](const Vec& x) { return x[0]; }, true};

  RunConfig config;
  config.inline_spec = spec;
  config.method = "antithetic";
  config.law = "gamma";
  config.kappa = 0.5;
  config.theta = 2.5;
  config.reps = 40;
  config.seed = 900;
  const ConvergenceResult result = convergence_study(config, 2000, 3);
  REQUIRE(result.rows.size() == 4);
  CHECK(result.rows[3].n_part == 128000);
  CHECK(std::abs(result.slope + 0.5) < 0.15);
  CHECK_FALSE(result.unstable);
}

TEST_CASE("exponential-law convergence cannot be diagnosed") {
  RunConfig config;
  config.case_id = 1;
  config.method = "plain";
  config.law = "exp";
  config.lambda = 0.4;
  config.reps = 30;
  config.seed = 424242;
  const ConvergenceResult result = convergence_study(config, 2000, 3);
  CHECK(result.unstable);
}

TEST_CASE("complexity study matches the fitted polynomial where it is sane") {
  CHECK(n_steps_polynomial(0.5, 2.5) == doctest::Approx(2.1125));
  const auto points = complexity_study({0.5}, {1.0, 2.5}, 50000, 42);
  REQUIRE(points.size() == 2);
  // Fixed kappa: simulated step count decreases as theta grows.
  CHECK(points[0].steps_sim > points[1].steps_sim);
  for (const auto& pt : points) CHECK(std::abs(pt.rel_gap) < 0.15);

  const auto again = complexity_study({0.5}, {1.0, 2.5}, 50000, 42);
  for (std::size_t i = 0; i < points.size(); ++i)
    CHECK(points[i].steps_sim == again[i].steps_sim);
}

TEST_CASE("euler comparison flags calibration-degenerate models") {
  RunConfig config;
  SdeModel model;
  model.dim = 1;
  model.x0 = {1.0};
  model.drift = [](double, const Vec&, Vec& out) { out[0] = 0.1; };
  model.sigma = [](double, const Vec&, SquareMatrix& out) { out(0, 0) = 0.3; };
  CaseSpec spec;
  spec.case_id = 1;
  spec.model = model;
  spec.payoff = Payoff{[](const Vec& x) { return x[0]; }, true};
  config.inline_spec = spec;
  config.method = "antithetic";
  config.seed = 55;

  EulerCalibrationCfg cal;
  cal.fine_steps = 100;
  cal.fine_n = 30000;
  cal.coarse_steps = 10;
  cal.coarse_n = 30000;
  const auto points = euler_compare(config, {5e-3}, cal);
  REQUIRE(points.size() == 1);
  CHECK(points[0].calibration_degenerate);
  CHECK(std::abs(points[0].smc_mean - 1.1) < 5e-3 * 4);
  CHECK(std::abs(points[0].emc_mean - 1.1) < 5e-3 * 4);
}

TEST_CASE("misc helpers") {
  CHECK(parse_double_list("8e-4, 4e-4").size() == 2);
  CHECK_THROWS_AS(parse_double_list(""), ConfigError);
  CHECK_THROWS_AS(parse_double_list("a,b"), ConfigError);
  const std::string cases = list_cases();
  CHECK(cases.find("0.17466") != std::string::npos);
  CHECK(cases.find("0.11806") != std::string::npos);
}
