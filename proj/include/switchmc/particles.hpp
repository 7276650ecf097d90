#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "switchmc/estimators.hpp"
#include "switchmc/model.hpp"
#include "switchmc/rng.hpp"
#include "switchmc/switching.hpp"

namespace switchmc {

struct DegeneratePopulationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Exponent and law parameters of the potential functions. rho = 1 - kappa
// reproduces the base definition; any rho in [1/2, 1 - kappa] keeps the
// conditional second moments bounded (feasible only for kappa <= 1/2). The
// normalization H shares the same exponent, which is what makes the pathwise
// factorization prod P_k = H * prod G_k S_k exact.
struct PotentialParams {
  double rho = 0.5;
  double kappa = 0.5;
  double theta = 2.5;

  static PotentialParams for_law(const SwitchingLaw& law, double rho = -1.0);
};

void validate_potential_params(const PotentialParams& params);

struct ChainNode {
  double t = 0.0;
  Vec x;
};

// Path-valued chain state reduced to what the potentials and the terminal
// payload actually read: the three most recent nodes, the running sign
// product S_{1:k}, and the absorption payload. Nodes past absorption are
// frozen duplicates of the horizon node.
struct Particle {
  ChainNode prev2;  // node k-2
  ChainNode prev;   // node k-1
  ChainNode cur;    // node k
  int k = 0;
  double sign_product = 1.0;  // S_{1:k}, in {-1, +1}
  double g_check_cur = 1.0;   // Gcheck_k cache, filled by mutation
  double c_cur = 0.0;         // c_k cache, valid for k >= 1 while live
  double c_prev = 0.0;        // c_{k-1} cache, valid for k >= 2 while live
  bool absorbed = false;
  int n_t = -1;                  // N_T, set at absorption
  double terminal_value = 0.0;   // (beta_{q+1} H_{q+1}) S_{1:q}, set at absorption
};

struct ParticleSystem {
  std::vector<Particle> particles;
  int iteration = 0;
  // Running log of prod_p eta_p^N(G_p); potentials are non-negative, so the
  // only sign state needed is whether some factor was exactly zero.
  double log_potential_product = 0.0;
  bool zero_potential = false;
  RngStream stream;
  // Selection buffer, kept across iterations so particle storage is reused.
  std::vector<Particle> scratch_particles;

  double potential_product() const;
  double absorbed_fraction() const;
};

ParticleSystem init_particle_system(const SdeModel& model, int n_particles, RngStream stream);

// --- potential machinery ----------------------------------------------------

// Gcheck_k from three consecutive nodes (a,b,c) = (k-2, k-1, k):
// (Mcheck_k + Vcheck_k/2) / f(dt_{k-1}) with the Brownian increment
// reconstructed from the states; 1 for k <= 1 or degenerate increments.
double g_check(const SdeModel& model, const SwitchingLaw& law, const ChainNode& a,
               const ChainNode& b, const ChainNode& c, int k);

// c = |dt| + ||db||_inf^2 + ||da||_inf^2 between two consecutive nodes.
double c_factor(const SdeModel& model, const ChainNode& node_prev, const ChainNode& node_cur);

// Potential G_k. k = 0 -> 1; k = 1 -> |Gcheck_1| dt^rho sqrt(c);
// k >= 2 -> |Gcheck_k| sqrt(c_k/c_{k-1}) (dt_k/dt_{k-1})^rho; 1 on
// degenerate branches.
double potential_g(const PotentialParams& params, double g_check_val, double c_cur, double c_prev,
                   double dt_cur, double dt_prev, int k);

// H_{q+1} = 1 / (dt_q^rho sqrt(c_q)); throws on non-positive inputs.
double h_norm(const PotentialParams& params, double c_last, double dt_last);

// Terminal payload beta_{q+1} = (beta_1 + beta_2)/2 evaluated at absorption,
// from nodes (q-1, q, q+1); the q = 0 branch is g(x_1)/(1 - F(dt_1)). The
// mirror state uses the reconstructed Brownian increment.
double beta_terminal(const SdeModel& model, const Payoff& payoff, const SwitchingLaw& law,
                     const ChainNode& a, const ChainNode& b, const ChainNode& c, int q);

// O(N) multinomial selection via sorted uniforms (cumulative normalized
// Exp(1) draws merged against cumulative weights). Returns per-index
// offspring counts summing to n_out.
std::vector<long long> multinomial_select(const std::vector<double>& weights, long long n_out,
                                          RngStream& stream);

// --- the weighting / selection / mutation loop -------------------------------

struct IterationDiag {
  int iteration = 0;
  double absorbed_fraction = 0.0;
  double mean_potential = 0.0;
  double effective_sample_size = 0.0;
};

// One weighting/selection/mutation sweep. Absorbed particles weigh 1 and
// persist unchanged through mutation. Throws DegeneratePopulationError when
// every potential is zero.
IterationDiag ips_iteration(ParticleSystem& sys, const SdeModel& model, const Payoff& payoff,
                            const SwitchingLaw& law, const PotentialParams& params);

// Smallest iteration count for which the empirical absorption fraction over
// a pre-pass of `samples` meshes exceeds `target`.
int auto_n_iter(const SdeModel& model, const SwitchingLaw& law, std::uint64_t seed,
                int samples = 1000, double target = 0.99);

struct ResampleRun {
  double value = 0.0;
  double avg_n_t = 0.0;
};

// Product estimator: runs n_iter sweeps from N copies of (t0, x0) and returns
// mean(phi_n) * prod_p eta_p^N(G_p). phi_n is the cached terminal payload for
// absorbed particles and a single continued simulation to absorption for live
// ones. Optional diag stream receives one line per iteration.
ResampleRun resampling_run(const SdeModel& model, const Payoff& payoff, const SwitchingLaw& law,
                           const PotentialParams& params, int n_particles, int n_iter,
                           RngStream stream, std::ostream* diag = nullptr);

double resampling_estimate(const SdeModel& model, const Payoff& payoff, const SwitchingLaw& law,
                           const PotentialParams& params, int n_particles, int n_iter,
                           RngStream stream);

// Replication driver: per replication, `workers` independent systems of
// n_part / workers particles are averaged; statistics are taken across
// replications. System streams are keyed by (rep, system index), so results
// do not depend on thread scheduling.
EstimateResult resample_monte_carlo(const SdeModel& model, const Payoff& payoff,
                                    const SwitchingLaw& law, const PotentialParams& params,
                                    long long n_part, int reps, int workers, int n_iter,
                                    std::uint64_t seed);

}  // namespace switchmc
