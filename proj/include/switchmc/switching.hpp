#pragma once

#include <functional>
#include <string>
#include <vector>

#include "switchmc/model.hpp"
#include "switchmc/rng.hpp"

namespace switchmc {

// Switching-time law: exponential(rate) or gamma(shape kappa, scale theta).
// gamma(1, theta) coincides with exponential(1/theta).
class SwitchingLaw {
 public:
  enum class Kind { Exponential, Gamma };

  static SwitchingLaw exponential(double rate);
  static SwitchingLaw gamma(double shape, double scale);

  Kind kind() const { return kind_; }
  double rate() const { return rate_; }
  double shape() const { return shape_; }
  double scale() const { return scale_; }
  double mean() const;
  std::string name() const;

  // Density f(s), s > 0. Throws std::domain_error for s <= 0.
  double density(double s) const;
  // Cumulative distribution F(s), s >= 0.
  double cdf(double s) const;
  // Survival 1 - F(s), evaluated through the upper incomplete gamma so large
  // s/theta degrades to 0 without intermediate overflow.
  double survival(double s) const;

  // One draw tau > 0. Gamma shapes below one use the boosted Marsaglia-Tsang
  // method: draw shape kappa+1 and multiply by U^{1/kappa}. Exact zeros
  // (possible in floating point) are redrawn; a zero increment would sit in a
  // weight denominator downstream.
  double sample(RngStream& stream) const;

 private:
  SwitchingLaw(Kind kind, double a, double b);

  Kind kind_;
  double rate_ = 0.0;   // exponential
  double shape_ = 0.0;  // gamma
  double scale_ = 0.0;  // gamma
};

// Random absorbing mesh t0 = T_0 < T_1 < ... < T_{N+1} = horizon, built from
// i.i.d. switching times via T_{k+1} = min(T_k + tau_{k+1}, horizon).
// n_switch = N is the number of interior points; the final increment
// horizon - T_N is positive with probability one.
struct SwitchMesh {
  std::vector<double> times;       // T_0 .. T_{N+1}
  std::vector<double> increments;  // increments[k] = T_{k+1} - T_k, k = 0..N
  int n_switch = 0;

  double increment(int k) const { return increments[static_cast<std::size_t>(k) - 1]; }  // dT_k, k>=1
  double time(int k) const { return times[static_cast<std::size_t>(k)]; }
};

// Core mesh rule with an injectable draw source (tests feed fixed sequences).
SwitchMesh mesh_from_draws(const std::function<double()>& next_tau, double t0, double horizon);

SwitchMesh simulate_mesh(const SwitchingLaw& law, double t0, double horizon, RngStream& stream);

// Finite-variance parameter check: the gamma shape must satisfy
// kappa <= min(alpha, 1/2); the exponential law always trips the warning.
// Advisory only, never blocks execution.
struct KappaCheck {
  bool ok = true;
  std::string message;
};

KappaCheck validate_kappa(const SwitchingLaw& law, const SdeModel& model);

}  // namespace switchmc
