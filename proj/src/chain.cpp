#include "switchmc/chain.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>

namespace switchmc {

namespace {

// (sigma^{-1})^T (dw dw^T - dt I) sigma^{-1}, the quadratic kernel of the
// second-order weight.
SquareMatrix second_order_kernel(const SquareMatrix& sigma_inv, const Vec& dw, double dt) {
  const int d = sigma_inv.dim;
  SquareMatrix inner(d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) inner(i, j) = dw[static_cast<std::size_t>(i)] * dw[static_cast<std::size_t>(j)];
  for (int i = 0; i < d; ++i) inner(i, i) -= dt;

  // (S^{-1})^T inner S^{-1}
  SquareMatrix tmp(d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      double s = 0.0;
      for (int k = 0; k < d; ++k) s += sigma_inv(k, i) * inner(k, j);
      tmp(i, j) = s;
    }
  return mat_mul(tmp, sigma_inv);
}

double weight_m(const Vec& b_cur, const Vec& b_prev, const SquareMatrix& sigma_inv_cur,
                const Vec& dw, double dt) {
  const std::size_t d = b_cur.size();
  Vec db(d);
  for (std::size_t i = 0; i < d; ++i) db[i] = b_cur[i] - b_prev[i];
  const Vec w = mat_transpose_vec(sigma_inv_cur, dw);
  return dot(db, w) / dt;
}

double weight_v(const SquareMatrix& a_cur, const SquareMatrix& a_prev,
                const SquareMatrix& sigma_inv_cur, const Vec& dw, double dt) {
  SquareMatrix da = a_cur;
  for (std::size_t i = 0; i < da.entries.size(); ++i) da.entries[i] -= a_prev.entries[i];
  const SquareMatrix kern = second_order_kernel(sigma_inv_cur, dw, dt);
  return frobenius(da, kern) / (dt * dt);
}

}  // namespace

double PathWeights::product_p() const {
  double prod = 1.0;
  for (double x : p) prod *= x;
  return prod;
}

double PathWeights::product_p_no_last() const {
  double prod = 1.0;
  for (std::size_t i = 0; i + 1 < p.size(); ++i) prod *= p[i];
  return prod;
}

SwitchPath simulate_path(const SdeModel& model, const SwitchMesh& mesh, RngStream& stream) {
  const int d = model.dim;
  const int n_steps = static_cast<int>(mesh.increments.size());  // N+1

  SwitchPath path;
  path.mesh = mesh;
  path.states.reserve(static_cast<std::size_t>(n_steps) + 1);
  path.brownian.reserve(static_cast<std::size_t>(n_steps));
  path.coef.reserve(static_cast<std::size_t>(n_steps));
  path.states.push_back(model.x0);

  Vec z(static_cast<std::size_t>(d));
  for (int k = 0; k < n_steps; ++k) {
    const double t_k = mesh.times[static_cast<std::size_t>(k)];
    const Vec& x_k = path.states.back();
    const double dt = mesh.increments[static_cast<std::size_t>(k)];

    SwitchPath::NodeCoef c;
    c.b.resize(static_cast<std::size_t>(d));
    c.sigma = SquareMatrix(d);
    model.drift(t_k, x_k, c.b);
    model.sigma(t_k, x_k, c.sigma);
    c.sigma_inv = lu_inverse(c.sigma);
    c.a = mat_aat(c.sigma);

    stream.fill_normal(z);
    const double root_dt = std::sqrt(dt);
    Vec dw(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) dw[static_cast<std::size_t>(i)] = root_dt * z[static_cast<std::size_t>(i)];

    const Vec sig_dw = mat_vec(c.sigma, dw);
    Vec x_next(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) {
      const auto ii = static_cast<std::size_t>(i);
      x_next[ii] = x_k[ii] + c.b[ii] * dt + sig_dw[ii];
    }

    if (k == n_steps - 1) {
      path.mirror_last.resize(static_cast<std::size_t>(d));
      for (int i = 0; i < d; ++i) {
        const auto ii = static_cast<std::size_t>(i);
        path.mirror_last[ii] = x_k[ii] + c.b[ii] * dt - sig_dw[ii];
      }
    }

    path.coef.push_back(std::move(c));
    path.brownian.push_back(std::move(dw));
    path.states.push_back(std::move(x_next));
  }
  return path;
}

double malliavin_first(const SdeModel& model, double t_prev, const Vec& x_prev, double t_cur,
                       const Vec& x_cur, const Vec& dw_next, double dt_next) {
  if (!(dt_next > 0.0)) throw std::domain_error("malliavin_first needs dt_next > 0");
  const Vec b_cur = model.drift_at(t_cur, x_cur);
  const Vec b_prev = model.drift_at(t_prev, x_prev);
  const SquareMatrix sigma_inv = sigma_inv_of(model, t_cur, x_cur);
  return weight_m(b_cur, b_prev, sigma_inv, dw_next, dt_next);
}

double malliavin_second(const SdeModel& model, double t_prev, const Vec& x_prev, double t_cur,
                        const Vec& x_cur, const Vec& dw_next, double dt_next) {
  if (!(dt_next > 0.0)) throw std::domain_error("malliavin_second needs dt_next > 0");
  const SquareMatrix a_cur = a_of(model, t_cur, x_cur);
  const SquareMatrix a_prev = a_of(model, t_prev, x_prev);
  const SquareMatrix sigma_inv = sigma_inv_of(model, t_cur, x_cur);
  return weight_v(a_cur, a_prev, sigma_inv, dw_next, dt_next);
}

PathWeights path_weights(const SdeModel&, const SwitchingLaw& law, const SwitchPath& path) {
  PathWeights w;
  const int n = path.n_switch();
  if (n < 1) return w;

  w.m.reserve(static_cast<std::size_t>(n));
  w.v.reserve(static_cast<std::size_t>(n));
  w.p.reserve(static_cast<std::size_t>(n));

  // Weight index k runs 2..N+1. The denominator density takes the previous
  // increment dT_{k-1}; the numerator reads dW_k, dT_k and coefficients at
  // nodes k-1 and k-2.
  for (int k = 2; k <= n + 1; ++k) {
    const auto cur = static_cast<std::size_t>(k - 1);
    const auto prev = static_cast<std::size_t>(k - 2);
    const double dt_k = path.mesh.increments[cur];
    const double dt_prev = path.mesh.increments[prev];
    const Vec& dw_k = path.brownian[cur];
    const SwitchPath::NodeCoef& c_cur = path.coef[cur];
    const SwitchPath::NodeCoef& c_prev = path.coef[prev];
    if (!(dt_k > 0.0) || !(dt_prev > 0.0))
      throw std::domain_error("path_weights found a non-positive mesh increment");

    const double mk = weight_m(c_cur.b, c_prev.b, c_cur.sigma_inv, dw_k, dt_k);
    const double vk = weight_v(c_cur.a, c_prev.a, c_cur.sigma_inv, dw_k, dt_k);
    const double pk = (mk + 0.5 * vk) / law.density(dt_prev);
    w.m.push_back(mk);
    w.v.push_back(vk);
    w.p.push_back(pk);
  }
  return w;
}

void dump_path(std::ostream& os, const SwitchPath& path) {
  const auto n_nodes = path.states.size();
  for (std::size_t k = 0; k < n_nodes; ++k) {
    os << k << '\t' << path.mesh.times[k];
    for (double x : path.states[k]) os << '\t' << x;
    if (k >= 1)
      for (double dw : path.brownian[k - 1]) os << '\t' << dw;
    os << '\n';
  }
}

}  // namespace switchmc
