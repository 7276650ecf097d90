#pragma once

#include <cstdint>
#include <functional>

#include "switchmc/chain.hpp"
#include "switchmc/model.hpp"
#include "switchmc/rng.hpp"
#include "switchmc/switching.hpp"

namespace switchmc {

struct DrawResult {
  double value = 0.0;
  double n_switch = 0.0;
};

using SingleFn = std::function<DrawResult(RngStream&)>;

// Replication-level Monte Carlo statistics. Reported dispersion comes from
// the spread of replication means, not from single-draw variance, which may
// be infinite for heavy-tailed estimators while replication means stay
// informative.
struct EstimateResult {
  double mean = 0.0;
  double std_error = 0.0;         // replication_stdev / sqrt(reps) for reps > 1
  double replication_stdev = 0.0; // sample stdev across replication means
  double draw_stdev = 0.0;        // empirical per-draw stdev (all reps pooled)
  long long n_part = 0;
  int reps = 0;
  double avg_switches = 0.0;
  double wall_time_s = 0.0;
};

// --- single-draw estimators ------------------------------------------------

// Plain representation: g(Xbar_{N+1}) / (1 - F(dT_{N+1})) * prod_{k=2}^{N+1} P_k,
// with the empty-product convention for N = 0.
double plain_from_path(const Payoff& payoff, const SwitchingLaw& law, const SwitchPath& path,
                       const PathWeights& weights);

// Antithetic terminal correction beta = (beta_1 + beta_2) / 2:
//   beta_1 = (g(Xbar_{N+1}) - g(Xbar_N)) / (1-F(dT_{N+1})) * ( M_{N+1} + V_{N+1}/2) / f(dT_N)
//   beta_2 = (g(Xhat_{N+1}) - g(Xbar_N)) / (1-F(dT_{N+1})) * (-M_{N+1} + V_{N+1}/2) / f(dT_N)
// Requires N >= 1.
double beta_from_path(const Payoff& payoff, const SwitchingLaw& law, const SwitchPath& path,
                      const PathWeights& weights);

// beta * prod_{k=2}^{N} P_k for N >= 1; g(Xbar_1) / (1 - F(T - t0)) for N = 0.
double antithetic_from_path(const Payoff& payoff, const SwitchingLaw& law, const SwitchPath& path,
                            const PathWeights& weights);

DrawResult plain_single(const SdeModel& model, const Payoff& payoff, const SwitchingLaw& law,
                        RngStream& stream);
DrawResult antithetic_single(const SdeModel& model, const Payoff& payoff, const SwitchingLaw& law,
                             RngStream& stream);

SingleFn make_plain_fn(const SdeModel& model, const Payoff& payoff, const SwitchingLaw& law);
SingleFn make_antithetic_fn(const SdeModel& model, const Payoff& payoff, const SwitchingLaw& law);
// One explicit Euler trajectory with step h (short final step), returning
// g(X_T); n_switch reports the step count.
SingleFn make_euler_fn(const SdeModel& model, const Payoff& payoff, double h);

// --- replication driver -----------------------------------------------------

// Runs `reps` replications of n_part i.i.d. draws. Work is cut into
// fixed-size chunks, each owning the stream (seed, rep << 32 | chunk), and
// partial sums are reduced in chunk order, so the result is bit-identical for
// any worker count and any thread schedule.
EstimateResult run_monte_carlo(const SingleFn& fn, long long n_part, int reps, int workers,
                               std::uint64_t seed);

EstimateResult euler_estimate(const SdeModel& model, const Payoff& payoff, double h, long long n_e,
                              int workers, std::uint64_t seed, int reps = 1);

// --- Euler bias/variance calibration ----------------------------------------

struct EulerCalibrationCfg {
  int fine_steps = 300;
  long long fine_n = 1'200'000;
  int coarse_steps = 30;
  long long coarse_n = 1'200'000;
  int workers = 1;
  std::uint64_t seed = 2024;
};

// Fits the error model bias ~ C_E h, stdev ~ S / sqrt(n_E) from a fine
// reference run and a coarse run. `degenerate` is set when the coarse bias is
// indistinguishable from Monte Carlo noise (e.g. constant coefficients);
// the calibration is then reported but not trustworthy.
struct EulerCalibration {
  double c_e_hat = 0.0;
  double s_hat = 0.0;
  double reference_value = 0.0;
  bool degenerate = false;
  double fine_h = 0.0;
  double coarse_h = 0.0;

  // Error-balancing choices for a target accuracy eps.
  double h_of_eps(double eps) const;
  long long n_of_eps(double eps) const;
};

EulerCalibration calibrate_euler(const SdeModel& model, const Payoff& payoff,
                                 const EulerCalibrationCfg& cfg);

}  // namespace switchmc
