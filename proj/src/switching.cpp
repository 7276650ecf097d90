#include "switchmc/switching.hpp"

#include <cmath>
#include <stdexcept>

#include "switchmc/special_functions.hpp"

namespace switchmc {

namespace {

// Marsaglia-Tsang squeeze for gamma(shape >= 1, scale 1).
double gamma_draw_shape_ge1(double shape, RngStream& stream) {
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x;
    double v;
    do {
      x = stream.normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = stream.uniform_open();
    const double x2 = x * x;
    if (u < 1.0 - 0.0331 * x2 * x2) return d * v;
    if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v;
  }
}

}  // namespace

SwitchingLaw::SwitchingLaw(Kind kind, double a, double b) : kind_(kind) {
  if (kind == Kind::Exponential) {
    if (!(a > 0.0)) throw std::invalid_argument("exponential law needs rate > 0");
    rate_ = a;
  } else {
    if (!(a > 0.0) || !(b > 0.0)) throw std::invalid_argument("gamma law needs shape > 0 and scale > 0");
    shape_ = a;
    scale_ = b;
  }
}

SwitchingLaw SwitchingLaw::exponential(double rate) { return SwitchingLaw(Kind::Exponential, rate, 0.0); }

SwitchingLaw SwitchingLaw::gamma(double shape, double scale) { return SwitchingLaw(Kind::Gamma, shape, scale); }

double SwitchingLaw::mean() const {
  return kind_ == Kind::Exponential ? 1.0 / rate_ : shape_ * scale_;
}

std::string SwitchingLaw::name() const {
  return kind_ == Kind::Exponential ? "exp" : "gamma";
}

double SwitchingLaw::density(double s) const {
  if (!(s > 0.0)) throw std::domain_error("switching density defined for s > 0");
  if (kind_ == Kind::Exponential) return rate_ * std::exp(-rate_ * s);
  // s^{k-1} e^{-s/theta} / (Gamma(k) theta^k), via logs.
  return std::exp((shape_ - 1.0) * std::log(s) - s / scale_ - std::lgamma(shape_) -
                  shape_ * std::log(scale_));
}

double SwitchingLaw::cdf(double s) const {
  if (s <= 0.0) return 0.0;
  if (kind_ == Kind::Exponential) return -std::expm1(-rate_ * s);
  return gamma_p(shape_, s / scale_);
}

double SwitchingLaw::survival(double s) const {
  if (s < 0.0) throw std::domain_error("survival defined for s >= 0");
  if (s == 0.0) return 1.0;
  if (kind_ == Kind::Exponential) return std::exp(-rate_ * s);
  return gamma_q(shape_, s / scale_);
}

double SwitchingLaw::sample(RngStream& stream) const {
  for (;;) {
    double tau;
    if (kind_ == Kind::Exponential) {
      tau = stream.exponential() / rate_;
    } else if (shape_ >= 1.0) {
      tau = scale_ * gamma_draw_shape_ge1(shape_, stream);
    } else {
      const double boosted = gamma_draw_shape_ge1(shape_ + 1.0, stream);
      tau = scale_ * boosted * std::pow(stream.uniform_open(), 1.0 / shape_);
    }
    if (tau > 0.0) return tau;
  }
}

SwitchMesh mesh_from_draws(const std::function<double()>& next_tau, double t0, double horizon) {
  if (!(horizon > t0)) throw std::invalid_argument("mesh needs horizon > t0");
  SwitchMesh mesh;
  mesh.times.push_back(t0);
  double t = t0;
  for (;;) {
    const double tau = next_tau();
    if (t + tau >= horizon) {
      mesh.times.push_back(horizon);
      break;
    }
    // Draws below the time resolution (t + tau rounds back to t) are
    // redrawn: a zero increment breaks weight denominators and the strict
    // monotonicity of the mesh.
    if (t + tau == t) continue;
    t += tau;
    mesh.times.push_back(t);
  }
  // Increments are stored as differences of the stored node times, so any
  // consumer recomputing times[k+1] - times[k] lands on bit-identical values.
  mesh.increments.resize(mesh.times.size() - 1);
  for (std::size_t k = 0; k + 1 < mesh.times.size(); ++k)
    mesh.increments[k] = mesh.times[k + 1] - mesh.times[k];
  mesh.n_switch = static_cast<int>(mesh.times.size()) - 2;
  return mesh;
}

SwitchMesh simulate_mesh(const SwitchingLaw& law, double t0, double horizon, RngStream& stream) {
  return mesh_from_draws([&]() { return law.sample(stream); }, t0, horizon);
}

KappaCheck validate_kappa(const SwitchingLaw& law, const SdeModel& model) {
  if (law.kind() == SwitchingLaw::Kind::Exponential) {
    return {false,
            "exponential switching times give a theoretically infinite variance; "
            "prefer gamma with kappa <= min(alpha, 0.5)"};
  }
  const double bound = std::min(model.alpha, 0.5);
  if (law.shape() > bound) {
    return {false, "gamma shape kappa = " + std::to_string(law.shape()) +
                       " exceeds min(alpha, 1/2) = " + std::to_string(bound) +
                       "; the finite-variance guarantee does not apply"};
  }
  return {true, ""};
}

}  // namespace switchmc
