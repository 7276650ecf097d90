#pragma once

#include <iosfwd>
#include <vector>

#include "switchmc/model.hpp"
#include "switchmc/rng.hpp"
#include "switchmc/switching.hpp"

namespace switchmc {

// One realization of the regime-switching chain on a mesh:
//   Xbar_{k+1} = Xbar_k + b(T_k, Xbar_k) dT_{k+1} + sigma(T_k, Xbar_k) dW_{k+1},
// with dW_{k+1} ~ N(0, dT_{k+1} I) drawn exactly. mirror_last is the
// antithetic terminal state Xhat_{N+1} = Xbar_N + b_N dT_{N+1} - sigma_N dW_{N+1}.
//
// Coefficient evaluations are cached per node; two consecutive weights read
// each node's b, sigma, sigma^{-1}, a.
struct SwitchPath {
  struct NodeCoef {
    Vec b;
    SquareMatrix sigma;
    SquareMatrix sigma_inv;
    SquareMatrix a;
  };

  SwitchMesh mesh;
  std::vector<Vec> states;     // Xbar_0 .. Xbar_{N+1}
  std::vector<Vec> brownian;   // brownian[k] = dW_{k+1} over [T_k, T_{k+1}], k = 0..N
  Vec mirror_last;             // Xhat_{N+1}
  std::vector<NodeCoef> coef;  // nodes 0..N

  int n_switch() const { return mesh.n_switch; }
};

// Malliavin weight sequence along a path, indexed k = 2..N+1:
//   P_k = (M_k + V_k/2) / f(dT_{k-1}),
//   M_k = (b_{k-1}-b_{k-2}) . (sigma_{k-1}^{-1})^T dW_k / dT_k,
//   V_k = (a_{k-1}-a_{k-2}) : (sigma_{k-1}^{-1})^T (dW_k dW_k^T - dT_k I) sigma_{k-1}^{-1} / dT_k^2.
// Empty when N < 1.
struct PathWeights {
  std::vector<double> m;  // m[i] = M_{i+2}
  std::vector<double> v;
  std::vector<double> p;

  std::size_t count() const { return p.size(); }
  double product_p() const;          // prod_{k=2}^{N+1} P_k (empty product = 1)
  double product_p_no_last() const;  // prod_{k=2}^{N} P_k
};

SwitchPath simulate_path(const SdeModel& model, const SwitchMesh& mesh, RngStream& stream);

// First-order weight component: (b_cur - b_prev) . (sigma_cur^{-1})^T dW / dT.
double malliavin_first(const SdeModel& model, double t_prev, const Vec& x_prev, double t_cur,
                       const Vec& x_cur, const Vec& dw_next, double dt_next);

// Second-order weight component:
// (a_cur - a_prev) : (sigma_cur^{-1})^T (dW dW^T - dT I) sigma_cur^{-1} / dT^2.
double malliavin_second(const SdeModel& model, double t_prev, const Vec& x_prev, double t_cur,
                        const Vec& x_cur, const Vec& dw_next, double dt_next);

PathWeights path_weights(const SdeModel& model, const SwitchingLaw& law, const SwitchPath& path);

// Debug dump, one tab-separated line per node: k, T_k, state components,
// Brownian increment components (dW_k, empty for k = 0).
void dump_path(std::ostream& os, const SwitchPath& path);

}  // namespace switchmc
