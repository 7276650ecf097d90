#include "switchmc/model.hpp"

#include <algorithm>
#include <cmath>

namespace switchmc {

namespace {

double clamp_drift(double v) { return std::clamp(v, -10.0, 10.0); }

SdeModel::DriftFn common_drift() {
  return [](double, const Vec& x, Vec& out) {
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = clamp_drift(1.0 - x[i]);
  };
}

// sigma = (base + slope * (x^2 ^ 1)) in dimension 1.
SdeModel::SigmaFn scalar_sigma(double base, double slope) {
  return [base, slope](double, const Vec& x, SquareMatrix& out) {
    out(0, 0) = base + slope * std::min(x[0] * x[0], 1.0);
  };
}

// sigma = [0.5 + slope * ((sum x_i)^2 ^ 1)] * I in dimension 4.
SdeModel::SigmaFn sum_sigma(double slope) {
  return [slope](double, const Vec& x, SquareMatrix& out) {
    double s = 0.0;
    for (double xi : x) s += xi;
    const double v = 0.5 + slope * std::min(s * s, 1.0);
    for (auto& e : out.entries) e = 0.0;
    for (int i = 0; i < out.dim; ++i) out(i, i) = v;
  };
}

SdeModel base_model(int d) {
  SdeModel m;
  m.dim = d;
  m.t0 = 0.0;
  m.horizon = 1.0;
  m.x0.assign(static_cast<std::size_t>(d), 1.0);
  m.drift = common_drift();
  m.alpha = 1.0;
  return m;
}

Payoff call_payoff_1d() {
  return Payoff{[](const Vec& x) { return std::max(x[0] - 1.0, 0.0); }, false};
}

Payoff basket_call_payoff(int d) {
  return Payoff{[d](const Vec& x) {
                  double s = 0.0;
                  for (double xi : x) s += xi;
                  return std::max(s / d - 1.0, 0.0);
                },
                false};
}

}  // namespace

Vec SdeModel::drift_at(double t, const Vec& x) const {
  Vec out(x.size());
  drift(t, x, out);
  return out;
}

SquareMatrix SdeModel::sigma_at(double t, const Vec& x) const {
  SquareMatrix out(dim);
  sigma(t, x, out);
  return out;
}

CaseSpec builtin_case(int case_id) {
  CaseSpec spec;
  spec.case_id = case_id;
  switch (case_id) {
    case 1:
      spec.model = base_model(1);
      spec.model.sigma = scalar_sigma(0.5, 0.2);
      spec.payoff = Payoff{[](const Vec& x) { return std::cos(x[0]); }, true};
      spec.description = "d=1, g=cos(x), sigma=0.5+0.2(x^2^1)";
      break;
    case 2:
      spec.model = base_model(1);
      spec.model.sigma = scalar_sigma(0.5, 0.2);
      spec.payoff = call_payoff_1d();
      spec.reference_value = 0.17466;
      spec.description = "d=1, g=(x-1)+, sigma=0.5+0.2(x^2^1)";
      break;
    case 3:
      spec.model = base_model(1);
      spec.model.sigma = scalar_sigma(0.5, 0.4);
      spec.payoff = call_payoff_1d();
      spec.reference_value = 0.21408;
      spec.description = "d=1, g=(x-1)+, sigma=0.5+0.4(x^2^1)";
      break;
    case 4:
      spec.model = base_model(1);
      spec.model.sigma = [](double, const Vec& x, SquareMatrix& out) {
        out(0, 0) = std::clamp(x[0] * x[0], 0.5, 1.0);
      };
      spec.payoff = call_payoff_1d();
      spec.reference_value = 0.2100;
      spec.description = "d=1, g=(x-1)+, sigma=(0.5 v x^2)^1";
      break;
    case 5:
      spec.model = base_model(4);
      spec.model.sigma = sum_sigma(0.4);
      spec.payoff = basket_call_payoff(4);
      spec.reference_value = 0.11806;
      spec.description = "d=4, g=(mean(x)-1)+, sigma=[0.5+0.4((sum x)^2^1)]I";
      break;
    case 6:
      spec.model = base_model(4);
      spec.model.sigma = sum_sigma(0.6);
      spec.payoff = basket_call_payoff(4);
      spec.description = "d=4, g=(mean(x)-1)+, sigma=[0.5+0.6((sum x)^2^1)]I";
      break;
    default:
      throw ModelError("unknown case id " + std::to_string(case_id) +
                       " (built-in cases are 1..6)");
  }
  return spec;
}

SquareMatrix a_of(const SdeModel& model, double t, const Vec& x) {
  SquareMatrix s(model.dim);
  model.sigma(t, x, s);
  SquareMatrix a = mat_aat(s);
  for (double e : a.entries)
    if (!std::isfinite(e)) throw ModelError("non-finite diffusion value in a(t,x)");
  return a;
}

SquareMatrix sigma_inv_of(const SdeModel& model, double t, const Vec& x) {
  SquareMatrix s(model.dim);
  model.sigma(t, x, s);
  return lu_inverse(s);
}

}  // namespace switchmc
