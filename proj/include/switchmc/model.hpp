#pragma once

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>

#include "switchmc/linalg.hpp"

namespace switchmc {

struct ModelError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// SDE model data: dX = b(t,X) dt + sigma(t,X) dW on [t0, horizon], X_{t0}=x0.
// Coefficient callbacks write into caller-provided storage; the hot loops
// evaluate them a few times per switching step.
struct SdeModel {
  using DriftFn = std::function<void(double t, const Vec& x, Vec& out)>;
  using SigmaFn = std::function<void(double t, const Vec& x, SquareMatrix& out)>;

  int dim = 1;
  double t0 = 0.0;
  double horizon = 1.0;
  Vec x0;
  DriftFn drift;
  SigmaFn sigma;
  // Declared Hoelder exponent of the coefficients in time, in (0,1].
  // Time-independent coefficients declare 1. Gates the kappa validation.
  double alpha = 1.0;

  Vec drift_at(double t, const Vec& x) const;
  SquareMatrix sigma_at(double t, const Vec& x) const;
};

struct Payoff {
  std::function<double(const Vec&)> g;
  // Set when the user asserts g is C^2; the antithetic estimator's variance
  // theory needs it, execution does not.
  bool smooth_c2 = false;
};

struct CaseSpec {
  int case_id = 0;
  SdeModel model;
  Payoff payoff;
  std::optional<double> reference_value;
  std::string description;
};

// The six test cases of the experiments section. Common data: x0 = 1 (vector
// of ones), T = 1, drift clamp(1 - x_i, -10, 10) applied componentwise.
//   1: d=1, g=cos(x),   sigma = 0.5 + 0.2 (x^2 ^ 1)
//   2: d=1, g=(x-1)^+,  sigma = 0.5 + 0.2 (x^2 ^ 1),  reference 0.17466
//   3: d=1, g=(x-1)^+,  sigma = 0.5 + 0.4 (x^2 ^ 1),  reference 0.21408
//   4: d=1, g=(x-1)^+,  sigma = (0.5 v x^2) ^ 1,      reference 0.2100
//   5: d=4, g=(mean-1)^+, sigma = [0.5 + 0.4 ((sum x_i)^2 ^ 1)] I, ref 0.11806
//   6: as 5 with 0.6 in place of 0.4, no reference
CaseSpec builtin_case(int case_id);

// a(t,x) = sigma sigma^T. Throws ModelError on non-finite entries.
SquareMatrix a_of(const SdeModel& model, double t, const Vec& x);

// sigma(t,x)^{-1}; SingularMatrixError surfaces as a singular-diffusion error.
SquareMatrix sigma_inv_of(const SdeModel& model, double t, const Vec& x);

}  // namespace switchmc
