#include <doctest.h>

#include <cmath>

#include "switchmc/estimators.hpp"
#include "switchmc/model.hpp"

using namespace switchmc;

namespace {

SdeModel constant_model(double mu, double sig) {
  SdeModel m;
  m.dim = 1;
  m.x0 = {1.0};
  m.drift = [mu](double, const Vec&, Vec& out) { out[0] = mu; };
  m.sigma = [sig](double, const Vec&, SquareMatrix& out) { out(0, 0) = sig; };
  return m;
}

const Payoff kIdentity{[](const Vec& x) { return x[0]; }, true};

}  // namespace

TEST_CASE("closed-form model: both single-draw estimators hit x0 + b T") {
  const SdeModel model = constant_model(0.1, 0.3);
  const SwitchingLaw law = SwitchingLaw::gamma(0.5, 2.5);

  const EstimateResult plain =
      run_monte_carlo(make_plain_fn(model, kIdentity, law), 20000, 5, 1, 42);
  CHECK(std::abs(plain.mean - 1.1) < 3.0 * plain.std_error);

  const EstimateResult anti =
      run_monte_carlo(make_antithetic_fn(model, kIdentity, law), 20000, 5, 1, 43);
  CHECK(std::abs(anti.mean - 1.1) < 3.0 * anti.std_error);
}

TEST_CASE("draws with no switching reduce to the surviving payoff") {
  const SdeModel model = constant_model(0.4, 0.2);
  const SwitchingLaw law = SwitchingLaw::gamma(0.5, 2.5);
  RngStream stream(7, 0);
  int checked = 0;
  while (checked < 200) {
    const SwitchMesh mesh = simulate_mesh(law, 0.0, 1.0, stream);
    if (mesh.n_switch != 0) continue;
    ++checked;
    const SwitchPath path = simulate_path(model, mesh, stream);
    const PathWeights w = path_weights(model, law, path);
    const double expected = path.states.back()[0] / law.survival(1.0);
    CHECK(plain_from_path(kIdentity, law, path, w) == doctest::Approx(expected).epsilon(1e-13));
    CHECK(antithetic_from_path(kIdentity, law, path, w) ==
          doctest::Approx(expected).epsilon(1e-13));
  }
}

TEST_CASE("beta vanishes for constant payoffs") {
  const CaseSpec spec = builtin_case(2);
  const SwitchingLaw law = SwitchingLaw::gamma(0.5, 2.5);
  const Payoff constant{[](const Vec&) { return 3.25; }, true};
  RngStream stream(8, 0);
  int checked = 0;
  while (checked < 100) {
    const SwitchMesh mesh = simulate_mesh(law, 0.0, 1.0, stream);
    if (mesh.n_switch < 1) continue;
    ++checked;
    const SwitchPath path = simulate_path(spec.model, mesh, stream);
    const PathWeights w = path_weights(spec.model, law, path);
    CHECK(antithetic_from_path(constant, law, path, w) == 0.0);
  }
}

TEST_CASE("plain and antithetic agree on case 2") {
  const CaseSpec spec = builtin_case(2);
  const SwitchingLaw law = SwitchingLaw::gamma(0.5, 2.5);
  const EstimateResult plain =
      run_monte_carlo(make_plain_fn(spec.model, spec.payoff, law), 30000, 8, 1, 101);
  const EstimateResult anti =
      run_monte_carlo(make_antithetic_fn(spec.model, spec.payoff, law), 30000, 8, 1, 102);
  const double combined =
      std::sqrt(plain.std_error * plain.std_error + anti.std_error * anti.std_error);
  CHECK(std::abs(plain.mean - anti.mean) < 3.0 * combined);
  CHECK(std::abs(anti.mean - 0.17466) < std::max(3.0 * anti.std_error, 2e-3));
}

TEST_CASE("replication driver contracts") {
  SUBCASE("degenerate integrand") {
    const SingleFn constant_fn = [](RngStream&) { return DrawResult{2.5, 1.0}; };
    const EstimateResult r = run_monte_carlo(constant_fn, 1000, 4, 2, 9);
    CHECK(r.mean == doctest::Approx(2.5));
    CHECK(r.replication_stdev == 0.0);
    CHECK(r.avg_switches == doctest::Approx(1.0));
  }
  SUBCASE("stderr ties to replication stdev") {
    const SingleFn noisy = [](RngStream& s) { return DrawResult{s.normal(), 0.0}; };
    const EstimateResult r = run_monte_carlo(noisy, 5000, 9, 1, 10);
    CHECK(r.std_error == doctest::Approx(r.replication_stdev / 3.0));
  }
  SUBCASE("mean is invariant to the worker count") {
    const CaseSpec spec = builtin_case(2);
    const SwitchingLaw law = SwitchingLaw::gamma(0.5, 2.5);
    const EstimateResult one =
        run_monte_carlo(make_antithetic_fn(spec.model, spec.payoff, law), 40000, 3, 1, 77);
    const EstimateResult three =
        run_monte_carlo(make_antithetic_fn(spec.model, spec.payoff, law), 40000, 3, 3, 77);
    CHECK(one.mean == three.mean);  // bitwise: chunk layout is worker-free
    CHECK(one.replication_stdev == three.replication_stdev);
  }
  SUBCASE("argument validation") {
    const SingleFn fn = [](RngStream&) { return DrawResult{0.0, 0.0}; };
    CHECK_THROWS_AS(run_monte_carlo(fn, 0, 1, 1, 1), std::invalid_argument);
    CHECK_THROWS_AS(run_monte_carlo(fn, 10, 0, 1, 1), std::invalid_argument);
  }
}

TEST_CASE("euler baseline") {
  SUBCASE("exact for constant coefficients") {
    const SdeModel model = constant_model(0.1, 0.3);
    const EstimateResult r = euler_estimate(model, kIdentity, 0.2, 50000, 1, 11, 4);
    CHECK(std::abs(r.mean - 1.1) < 3.0 * r.std_error);
    CHECK(r.avg_switches == doctest::Approx(5.0));
  }
  SUBCASE("Brownian second moment") {
    SdeModel model = constant_model(0.0, 1.0);
    model.x0 = {0.0};
    const Payoff square{[](const Vec& x) { return x[0] * x[0]; }, true};
    const EstimateResult r = euler_estimate(model, square, 0.05, 50000, 1, 12, 4);
    CHECK(std::abs(r.mean - 1.0) < 3.0 * r.std_error);
  }
  SUBCASE("final short step lands exactly on the horizon") {
    const SdeModel model = constant_model(1.0, 1e-9);
    // h = 0.3 gives steps 0.3/0.3/0.3/0.1; drift integration must still be exact.
    const EstimateResult r = euler_estimate(model, kIdentity, 0.3, 100, 1, 13);
    CHECK(r.mean == doctest::Approx(2.0).epsilon(1e-6));
    CHECK(r.avg_switches == doctest::Approx(4.0));
  }
}

TEST_CASE("antithetic estimate matches a fine-Euler oracle on a clamped OU model") {
  SdeModel model;
  model.dim = 1;
  model.x0 = {1.0};
  model.drift = [](double, const Vec& x, Vec& out) {
    out[0] = std::clamp(1.0 - x[0], -10.0, 10.0);
  };
  model.sigma = [](double, const Vec&, SquareMatrix& out) { out(0, 0) = 0.5; };
  const Payoff call{[](const Vec& x) { return std::max(x[0] - 1.0, 0.0); }, false};
  const SwitchingLaw law = SwitchingLaw::gamma(0.5, 2.5);

  const EstimateResult smc =
      run_monte_carlo(make_antithetic_fn(model, call, law), 40000, 5, 1, 201);
  const EstimateResult emc = euler_estimate(model, call, 1.0 / 200, 40000, 1, 202, 5);
  const double combined =
      std::sqrt(smc.std_error * smc.std_error + emc.std_error * emc.std_error);
  CHECK(std::abs(smc.mean - emc.mean) < 3.0 * combined);
}

TEST_CASE("euler calibration") {
  SUBCASE("constant coefficients are flagged degenerate") {
    const SdeModel model = constant_model(0.1, 0.3);
    EulerCalibrationCfg cfg;
    cfg.fine_steps = 100;
    cfg.fine_n = 40000;
    cfg.coarse_steps = 10;
    cfg.coarse_n = 40000;
    const EulerCalibration cal = calibrate_euler(model, kIdentity, cfg);
    CHECK(cal.degenerate);
    CHECK(std::abs(cal.reference_value - 1.1) < 0.01);
  }
  SUBCASE("target formulas") {
    EulerCalibration cal;
    cal.c_e_hat = 0.058;
    cal.s_hat = 0.26;
    CHECK(cal.h_of_eps(8e-4) == doctest::Approx(8e-4 / 0.116));
    CHECK(cal.h_of_eps(4e-4) == doctest::Approx(cal.h_of_eps(8e-4) / 2.0));
    CHECK(cal.n_of_eps(8e-4) == 422500);
  }
}
