#include "switchmc/particles.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <ostream>
#include <stdexcept>
#include <thread>

namespace switchmc {

namespace {

// Reused temporaries for the per-particle machinery. One instance per thread;
// holds only O(d) storage and no distributional state.
struct Scratch {
  Vec drift_cur, drift_prev, db, dw, residual, sig_dw, z, x_next, tvec, node_donor;
  SquareMatrix sigma, sigma_inv, a_cur, a_prev, inner, tmp;
  std::vector<double> select_weights, select_arrivals;
  std::vector<long long> select_counts;

  void fit(int d) {
    const auto n = static_cast<std::size_t>(d);
    if (drift_cur.size() == n) return;
    drift_cur.resize(n);
    drift_prev.resize(n);
    db.resize(n);
    dw.resize(n);
    residual.resize(n);
    sig_dw.resize(n);
    z.resize(n);
    x_next.resize(n);
    tvec.resize(n);
    node_donor.resize(n);
    sigma = SquareMatrix(d);
    sigma_inv = SquareMatrix(d);
    a_cur = SquareMatrix(d);
    a_prev = SquareMatrix(d);
    inner = SquareMatrix(d);
    tmp = SquareMatrix(d);
  }
};

Scratch& scratch_for(int d) {
  thread_local Scratch scratch;
  scratch.fit(d);
  return scratch;
}

double sign_of(double v) { return v < 0.0 ? -1.0 : 1.0; }

// dw = sigma(b)^{-1} (x_c - x_b - b(b) dt), written into ws.dw; leaves
// drift(b) in ws.drift_cur and sigma(b)^{-1} in ws.sigma_inv.
void reconstruct_dw(const SdeModel& model, const ChainNode& b, const ChainNode& c, double dt,
                    Scratch& ws) {
  model.drift(b.t, b.x, ws.drift_cur);
  for (std::size_t i = 0; i < ws.residual.size(); ++i)
    ws.residual[i] = c.x[i] - b.x[i] - ws.drift_cur[i] * dt;
  model.sigma(b.t, b.x, ws.sigma);
  lu_inverse_into(ws.sigma, ws.sigma_inv);
  mat_vec_into(ws.sigma_inv, ws.residual, ws.dw);
}

// (sigma^{-1})^T (dw dw^T - dt I) sigma^{-1} paired against da, divided dt^2.
double second_order_term(const SquareMatrix& sigma_inv, const Vec& dw, double dt,
                         const SquareMatrix& da, Scratch& ws) {
  const int d = sigma_inv.dim;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      ws.inner(i, j) = dw[static_cast<std::size_t>(i)] * dw[static_cast<std::size_t>(j)];
  for (int i = 0; i < d; ++i) ws.inner(i, i) -= dt;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      double s = 0.0;
      for (int l = 0; l < d; ++l) s += sigma_inv(l, i) * ws.inner(l, j);
      ws.tmp(i, j) = s;
    }
  double v = 0.0;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      double s = 0.0;
      for (int l = 0; l < d; ++l) s += ws.tmp(i, l) * sigma_inv(l, j);
      v += da(i, j) * s;
    }
  return v / (dt * dt);
}

double g_check_impl(const SdeModel& model, const SwitchingLaw& law, const ChainNode& a,
                    const ChainNode& b, const ChainNode& c, int k, Scratch& ws) {
  if (k <= 1) return 1.0;
  const double dt_prev = b.t - a.t;
  const double dt_cur = c.t - b.t;
  if (!(dt_prev > 0.0) || !(dt_cur > 0.0)) return 1.0;

  reconstruct_dw(model, b, c, dt_cur, ws);  // fills dw, drift_cur = b(b), sigma_inv
  model.drift(a.t, a.x, ws.drift_prev);
  for (std::size_t i = 0; i < ws.db.size(); ++i) ws.db[i] = ws.drift_cur[i] - ws.drift_prev[i];
  mat_transpose_vec_into(ws.sigma_inv, ws.dw, ws.tvec);
  const double m = dot(ws.db, ws.tvec) / dt_cur;

  mat_aat_into(ws.sigma, ws.a_cur);
  model.sigma(a.t, a.x, ws.tmp);
  mat_aat_into(ws.tmp, ws.a_prev);
  for (std::size_t i = 0; i < ws.a_cur.entries.size(); ++i)
    ws.a_cur.entries[i] -= ws.a_prev.entries[i];  // a_cur now holds da
  const double v = second_order_term(ws.sigma_inv, ws.dw, dt_cur, ws.a_cur, ws);

  return (m + 0.5 * v) / law.density(dt_prev);
}

double c_factor_impl(const SdeModel& model, const ChainNode& node_prev, const ChainNode& node_cur,
                     Scratch& ws) {
  const double dt = node_cur.t - node_prev.t;
  model.drift(node_cur.t, node_cur.x, ws.drift_cur);
  model.drift(node_prev.t, node_prev.x, ws.drift_prev);
  double nb = 0.0;
  for (std::size_t i = 0; i < ws.drift_cur.size(); ++i)
    nb = std::max(nb, std::abs(ws.drift_cur[i] - ws.drift_prev[i]));

  model.sigma(node_cur.t, node_cur.x, ws.sigma);
  mat_aat_into(ws.sigma, ws.a_cur);
  model.sigma(node_prev.t, node_prev.x, ws.sigma);
  mat_aat_into(ws.sigma, ws.a_prev);
  double na = 0.0;
  for (std::size_t i = 0; i < ws.a_cur.entries.size(); ++i)
    na = std::max(na, std::abs(ws.a_cur.entries[i] - ws.a_prev.entries[i]));

  return std::abs(dt) + nb * nb + na * na;
}

double beta_terminal_impl(const SdeModel& model, const Payoff& payoff, const SwitchingLaw& law,
                          const ChainNode& a, const ChainNode& b, const ChainNode& c, int q,
                          Scratch& ws) {
  const double dt_last = c.t - b.t;  // dt_{q+1}
  if (q == 0) return payoff.g(c.x) / law.survival(dt_last);

  const double dt_q = b.t - a.t;
  reconstruct_dw(model, b, c, dt_last, ws);  // dw, drift_cur = b(b), sigma, sigma_inv
  model.drift(a.t, a.x, ws.drift_prev);
  for (std::size_t i = 0; i < ws.db.size(); ++i) ws.db[i] = ws.drift_cur[i] - ws.drift_prev[i];
  mat_transpose_vec_into(ws.sigma_inv, ws.dw, ws.tvec);
  const double m = dot(ws.db, ws.tvec) / dt_last;

  mat_aat_into(ws.sigma, ws.a_cur);
  model.sigma(a.t, a.x, ws.tmp);
  mat_aat_into(ws.tmp, ws.a_prev);
  for (std::size_t i = 0; i < ws.a_cur.entries.size(); ++i)
    ws.a_cur.entries[i] -= ws.a_prev.entries[i];
  const double v = second_order_term(ws.sigma_inv, ws.dw, dt_last, ws.a_cur, ws);

  // Mirror state xhat = x_q + b_q dt - sigma_q dw.
  mat_vec_into(ws.sigma, ws.dw, ws.sig_dw);
  for (std::size_t i = 0; i < ws.x_next.size(); ++i)
    ws.x_next[i] = b.x[i] + ws.drift_cur[i] * dt_last - ws.sig_dw[i];

  const double surv = law.survival(dt_last);
  const double dens = law.density(dt_q);
  const double g_cur = payoff.g(c.x);
  const double g_prev = payoff.g(b.x);
  const double g_mirror = payoff.g(ws.x_next);

  const double beta1 = (g_cur - g_prev) / surv * (m + 0.5 * v) / dens;
  const double beta2 = (g_mirror - g_prev) / surv * (-m + 0.5 * v) / dens;
  return 0.5 * (beta1 + beta2);
}

// One chain step for a live particle: sign, c and Gcheck caches for the new
// index, or the absorption payload when the step hits the horizon. Node
// buffers are rotated, not reallocated.
void mutate_particle(Particle& p, const SdeModel& model, const Payoff& payoff,
                     const SwitchingLaw& law, const PotentialParams& params, RngStream& stream,
                     Scratch& ws) {
  bool absorbed_now;
  double t_next;
  for (;;) {
    const double tau = law.sample(stream);
    absorbed_now = p.cur.t + tau >= model.horizon;
    t_next = absorbed_now ? model.horizon : p.cur.t + tau;
    // Sub-resolution draws are redrawn, matching the mesh rule.
    if (t_next > p.cur.t) break;
  }
  const double dt = t_next - p.cur.t;

  model.drift(p.cur.t, p.cur.x, ws.drift_cur);
  model.sigma(p.cur.t, p.cur.x, ws.sigma);
  stream.fill_normal(ws.z);
  const double root_dt = std::sqrt(dt);
  for (std::size_t i = 0; i < ws.dw.size(); ++i) ws.dw[i] = root_dt * ws.z[i];
  mat_vec_into(ws.sigma, ws.dw, ws.sig_dw);
  for (std::size_t i = 0; i < ws.x_next.size(); ++i)
    ws.x_next[i] = p.cur.x[i] + ws.drift_cur[i] * dt + ws.sig_dw[i];

  ChainNode next;
  next.t = t_next;
  std::swap(next.x, ws.node_donor);  // borrow a buffer; returned below via rotation
  next.x.assign(ws.x_next.begin(), ws.x_next.end());

  if (absorbed_now) {
    const int q = p.k;
    const double beta = beta_terminal_impl(model, payoff, law, p.prev, p.cur, next, q, ws);
    double h = 1.0;
    if (q >= 1) h = h_norm(params, p.c_cur, p.cur.t - p.prev.t);
    p.terminal_value = beta * h * p.sign_product;
    p.n_t = q;
    p.absorbed = true;
  } else {
    const double g = g_check_impl(model, law, p.prev, p.cur, next, p.k + 1, ws);
    p.sign_product *= sign_of(g);
    p.g_check_cur = g;
    p.c_prev = p.c_cur;
    p.c_cur = c_factor_impl(model, p.cur, next, ws);
  }

  // Rotate node storage: prev2's buffer becomes the next donor.
  std::swap(p.prev2, p.prev);
  std::swap(p.prev, p.cur);
  std::swap(p.cur, next);
  std::swap(ws.node_donor, next.x);

  p.k += 1;
}

// Potential of a particle at its current index, reading the caches filled by
// mutation. Absorbed particles sit in the "1 elsewhere" branch.
double particle_potential(const Particle& p, const PotentialParams& params) {
  if (p.absorbed || p.k == 0) return 1.0;
  const double dt_cur = p.cur.t - p.prev.t;
  const double dt_prev = p.prev.t - p.prev2.t;
  return potential_g(params, p.g_check_cur, p.c_cur, p.c_prev, dt_cur, dt_prev, p.k);
}

}  // namespace

PotentialParams PotentialParams::for_law(const SwitchingLaw& law, double rho) {
  if (law.kind() != SwitchingLaw::Kind::Gamma)
    throw std::invalid_argument("resampling potentials are defined for the gamma law");
  PotentialParams params;
  params.kappa = law.shape();
  params.theta = law.scale();
  params.rho = rho > 0.0 ? rho : 1.0 - params.kappa;
  validate_potential_params(params);
  return params;
}

void validate_potential_params(const PotentialParams& params) {
  if (params.kappa > 0.5 + 1e-12)
    throw std::invalid_argument("resampling requires kappa <= 1/2 (got " +
                                std::to_string(params.kappa) + ")");
  if (params.rho < 0.5 - 1e-12 || params.rho > 1.0 - params.kappa + 1e-12)
    throw std::invalid_argument("rho must lie in [1/2, 1 - kappa]");
}

double ParticleSystem::potential_product() const {
  return zero_potential ? 0.0 : std::exp(log_potential_product);
}

double ParticleSystem::absorbed_fraction() const {
  if (particles.empty()) return 0.0;
  std::size_t n = 0;
  for (const Particle& p : particles) n += p.absorbed ? 1 : 0;
  return static_cast<double>(n) / static_cast<double>(particles.size());
}

ParticleSystem init_particle_system(const SdeModel& model, int n_particles, RngStream stream) {
  if (n_particles < 1) throw std::invalid_argument("particle system needs at least one particle");
  ParticleSystem sys;
  sys.stream = stream;
  Particle seed;
  seed.prev2 = seed.prev = seed.cur = ChainNode{model.t0, model.x0};
  sys.particles.assign(static_cast<std::size_t>(n_particles), seed);
  return sys;
}

double g_check(const SdeModel& model, const SwitchingLaw& law, const ChainNode& a,
               const ChainNode& b, const ChainNode& c, int k) {
  return g_check_impl(model, law, a, b, c, k, scratch_for(model.dim));
}

double c_factor(const SdeModel& model, const ChainNode& node_prev, const ChainNode& node_cur) {
  return c_factor_impl(model, node_prev, node_cur, scratch_for(model.dim));
}

double potential_g(const PotentialParams& params, double g_check_val, double c_cur, double c_prev,
                   double dt_cur, double dt_prev, int k) {
  if (k <= 0) return 1.0;
  if (k == 1) {
    if (!(dt_cur > 0.0)) return 1.0;
    return std::abs(g_check_val) * std::pow(dt_cur, params.rho) * std::sqrt(c_cur);
  }
  if (!(dt_cur > 0.0) || !(dt_prev > 0.0)) return 1.0;
  return std::abs(g_check_val) * std::sqrt(c_cur / c_prev) *
         std::pow(dt_cur / dt_prev, params.rho);
}

double h_norm(const PotentialParams& params, double c_last, double dt_last) {
  if (!(dt_last > 0.0) || !(c_last > 0.0))
    throw std::domain_error("h_norm needs dt_last > 0 and c_last > 0");
  return 1.0 / (std::pow(dt_last, params.rho) * std::sqrt(c_last));
}

double beta_terminal(const SdeModel& model, const Payoff& payoff, const SwitchingLaw& law,
                     const ChainNode& a, const ChainNode& b, const ChainNode& c, int q) {
  return beta_terminal_impl(model, payoff, law, a, b, c, q, scratch_for(model.dim));
}

namespace {

void multinomial_select_into(const std::vector<double>& weights, long long n_out,
                             RngStream& stream, std::vector<double>& arrivals,
                             std::vector<long long>& counts) {
  const std::size_t n_in = weights.size();
  counts.assign(n_in, 0);
  if (n_out <= 0) return;

  double total = 0.0;
  for (double w : weights) {
    if (w < 0.0) throw std::invalid_argument("negative selection weight");
    total += w;
  }
  if (!(total > 0.0)) throw DegeneratePopulationError("all selection weights are zero");

  // Sorted uniforms via normalized partial sums of Exp(1) draws, merged
  // against the cumulative weights in one pass.
  double exp_sum = 0.0;
  arrivals.resize(static_cast<std::size_t>(n_out));
  for (long long i = 0; i < n_out; ++i) {
    exp_sum += stream.exponential();
    arrivals[static_cast<std::size_t>(i)] = exp_sum;
  }
  exp_sum += stream.exponential();

  std::size_t bin = 0;
  double cum_weight = weights[0];
  for (long long i = 0; i < n_out; ++i) {
    const double u = arrivals[static_cast<std::size_t>(i)] / exp_sum;  // sorted in (0,1)
    while (u * total > cum_weight && bin + 1 < n_in) {
      ++bin;
      cum_weight += weights[bin];
    }
    ++counts[bin];
  }
}

}  // namespace

std::vector<long long> multinomial_select(const std::vector<double>& weights, long long n_out,
                                          RngStream& stream) {
  std::vector<long long> counts;
  std::vector<double> arrivals;
  multinomial_select_into(weights, n_out, stream, arrivals, counts);
  return counts;
}

IterationDiag ips_iteration(ParticleSystem& sys, const SdeModel& model, const Payoff& payoff,
                            const SwitchingLaw& law, const PotentialParams& params) {
  const std::size_t n = sys.particles.size();
  Scratch& ws = scratch_for(model.dim);

  // Weighting.
  std::vector<double>& weights = ws.select_weights;
  weights.resize(n);
  KahanSum sum_w;
  KahanSum sum_w2;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = particle_potential(sys.particles[i], params);
    weights[i] = w;
    sum_w.add(w);
    sum_w2.add(w * w);
  }
  const double eta = sum_w.value() / static_cast<double>(n);
  if (!(eta > 0.0))
    throw DegeneratePopulationError("every potential is zero at iteration " +
                                    std::to_string(sys.iteration));
  sys.log_potential_product += std::log(eta);

  IterationDiag diag;
  diag.iteration = sys.iteration;
  diag.absorbed_fraction = sys.absorbed_fraction();
  diag.mean_potential = eta;
  diag.effective_sample_size = sum_w.value() * sum_w.value() / sum_w2.value();

  // Selection (multinomial, population size preserved). The buffers persist
  // across iterations so the copies reuse existing particle storage.
  multinomial_select_into(weights, static_cast<long long>(n), sys.stream, ws.select_arrivals,
                          ws.select_counts);
  sys.scratch_particles.resize(n);
  std::size_t idx = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (long long c = 0; c < ws.select_counts[i]; ++c)
      sys.scratch_particles[idx++] = sys.particles[i];
  sys.particles.swap(sys.scratch_particles);

  // Mutation; absorbed particles persist unchanged.
  for (Particle& p : sys.particles)
    if (!p.absorbed) mutate_particle(p, model, payoff, law, params, sys.stream, ws);

  sys.iteration += 1;
  return diag;
}

int auto_n_iter(const SdeModel& model, const SwitchingLaw& law, std::uint64_t seed, int samples,
                double target) {
  RngStream stream(seed, 0xabe11edULL);
  std::vector<int> hist;
  for (int i = 0; i < samples; ++i) {
    const SwitchMesh mesh = simulate_mesh(law, model.t0, model.horizon, stream);
    if (mesh.n_switch >= static_cast<int>(hist.size())) hist.resize(mesh.n_switch + 1, 0);
    hist[static_cast<std::size_t>(mesh.n_switch)] += 1;
  }
  // Absorption fraction after n iterations is P(N_T <= n - 1).
  long long cum = 0;
  for (std::size_t nt = 0; nt < hist.size(); ++nt) {
    cum += hist[nt];
    if (static_cast<double>(cum) >= target * samples) return static_cast<int>(nt) + 1;
  }
  return static_cast<int>(hist.size()) + 1;
}

ResampleRun resampling_run(const SdeModel& model, const Payoff& payoff, const SwitchingLaw& law,
                           const PotentialParams& params, int n_particles, int n_iter,
                           RngStream stream, std::ostream* diag) {
  if (n_iter < 1) throw std::invalid_argument("resampling needs n_iter >= 1");
  validate_potential_params(params);

  ParticleSystem sys = init_particle_system(model, n_particles, stream);
  for (int it = 0; it < n_iter; ++it) {
    const IterationDiag d = ips_iteration(sys, model, payoff, law, params);
    if (diag)
      (*diag) << d.iteration << '\t' << d.absorbed_fraction << '\t' << d.mean_potential << '\t'
              << d.effective_sample_size << '\n';
  }

  // phi_n per particle: cached payload when absorbed, one continued
  // simulation to absorption otherwise (the remaining G factors multiply in).
  Scratch& ws = scratch_for(model.dim);
  KahanSum phi_sum;
  KahanSum nt_sum;
  constexpr int kMaxContinuation = 1000000;
  Particle walker;
  for (const Particle& p : sys.particles) {
    if (p.absorbed) {
      phi_sum.add(p.terminal_value);
      nt_sum.add(static_cast<double>(p.n_t));
      continue;
    }
    walker = p;
    double g_factors = particle_potential(walker, params);
    int guard = 0;
    while (!walker.absorbed) {
      if (++guard > kMaxContinuation)
        throw std::runtime_error("continuation failed to absorb; check the switching law");
      mutate_particle(walker, model, payoff, law, params, sys.stream, ws);
      if (!walker.absorbed) g_factors *= particle_potential(walker, params);
    }
    phi_sum.add(walker.terminal_value * g_factors);
    nt_sum.add(static_cast<double>(walker.n_t));
  }

  const double n = static_cast<double>(sys.particles.size());
  ResampleRun run;
  run.value = phi_sum.value() / n * sys.potential_product();
  run.avg_n_t = nt_sum.value() / n;
  return run;
}

double resampling_estimate(const SdeModel& model, const Payoff& payoff, const SwitchingLaw& law,
                           const PotentialParams& params, int n_particles, int n_iter,
                           RngStream stream) {
  return resampling_run(model, payoff, law, params, n_particles, n_iter, stream).value;
}

EstimateResult resample_monte_carlo(const SdeModel& model, const Payoff& payoff,
                                    const SwitchingLaw& law, const PotentialParams& params,
                                    long long n_part, int reps, int workers, int n_iter,
                                    std::uint64_t seed) {
  if (workers < 1 || reps < 1) throw std::invalid_argument("resample_monte_carlo needs workers, reps >= 1");
  const long long per_system = n_part / workers;
  if (per_system < 1) throw std::invalid_argument("n_part must provide at least one particle per worker");
  if (n_iter < 1) n_iter = auto_n_iter(model, law, seed ^ 0x9e3779b97f4a7c15ULL);

  const auto t_begin = std::chrono::steady_clock::now();

  const long long n_units = static_cast<long long>(reps) * workers;
  std::vector<ResampleRun> runs(static_cast<std::size_t>(n_units));
  std::atomic<long long> next_unit{0};
  auto work = [&]() {
    for (;;) {
      const long long unit = next_unit.fetch_add(1);
      if (unit >= n_units) break;
      const long long rep = unit / workers;
      const long long sys = unit % workers;
      RngStream stream(seed, (static_cast<std::uint64_t>(rep) << 32) |
                                 static_cast<std::uint64_t>(sys));
      runs[static_cast<std::size_t>(unit)] = resampling_run(
          model, payoff, law, params, static_cast<int>(per_system), n_iter, stream);
    }
  };
  const int n_threads = static_cast<int>(std::min<long long>(workers, n_units));
  if (n_threads <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(n_threads));
    for (int i = 0; i < n_threads; ++i) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }

  std::vector<double> rep_means(static_cast<std::size_t>(reps));
  KahanSum nt_total;
  for (int rep = 0; rep < reps; ++rep) {
    KahanSum s;
    for (int w = 0; w < workers; ++w) {
      const ResampleRun& r = runs[static_cast<std::size_t>(rep) * workers + w];
      s.add(r.value);
      nt_total.add(r.avg_n_t);
    }
    rep_means[static_cast<std::size_t>(rep)] = s.value() / workers;
  }

  EstimateResult out;
  out.n_part = per_system * workers;
  out.reps = reps;
  KahanSum mean_sum;
  for (double m : rep_means) mean_sum.add(m);
  out.mean = mean_sum.value() / reps;
  out.avg_switches = nt_total.value() / static_cast<double>(n_units);
  if (reps > 1) {
    KahanSum dev;
    for (double m : rep_means) dev.add((m - out.mean) * (m - out.mean));
    out.replication_stdev = std::sqrt(dev.value() / (reps - 1));
    out.std_error = out.replication_stdev / std::sqrt(static_cast<double>(reps));
  }
  out.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_begin).count();
  return out;
}

}  // namespace switchmc
