#include "switchmc/estimators.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <stdexcept>
#include <thread>
#include <vector>

namespace switchmc {

namespace {

constexpr long long kChunkDraws = 16384;

struct ChunkStat {
  KahanSum sum;
  KahanSum sum_sq;
  KahanSum switches;
  long long n = 0;
};

}  // namespace

double plain_from_path(const Payoff& payoff, const SwitchingLaw& law, const SwitchPath& path,
                       const PathWeights& weights) {
  const double last_dt = path.mesh.increments.back();
  return payoff.g(path.states.back()) / law.survival(last_dt) * weights.product_p();
}

double beta_from_path(const Payoff& payoff, const SwitchingLaw& law, const SwitchPath& path,
                      const PathWeights& weights) {
  const int n = path.n_switch();
  if (n < 1) throw std::domain_error("beta_from_path needs at least one switching time");

  const double m_last = weights.m.back();
  const double v_last = weights.v.back();
  const double dt_last = path.mesh.increments.back();         // dT_{N+1}
  const double dt_prev = path.mesh.increment(n);               // dT_N
  const double surv = law.survival(dt_last);
  const double dens = law.density(dt_prev);

  const double g_last = payoff.g(path.states.back());
  const double g_prev = payoff.g(path.states[static_cast<std::size_t>(n)]);
  const double g_mirror = payoff.g(path.mirror_last);

  const double beta1 = (g_last - g_prev) / surv * (m_last + 0.5 * v_last) / dens;
  const double beta2 = (g_mirror - g_prev) / surv * (-m_last + 0.5 * v_last) / dens;
  return 0.5 * (beta1 + beta2);
}

double antithetic_from_path(const Payoff& payoff, const SwitchingLaw& law, const SwitchPath& path,
                            const PathWeights& weights) {
  if (path.n_switch() == 0) {
    return payoff.g(path.states.back()) / law.survival(path.mesh.increments.back());
  }
  return beta_from_path(payoff, law, path, weights) * weights.product_p_no_last();
}

DrawResult plain_single(const SdeModel& model, const Payoff& payoff, const SwitchingLaw& law,
                        RngStream& stream) {
  const SwitchMesh mesh = simulate_mesh(law, model.t0, model.horizon, stream);
  const SwitchPath path = simulate_path(model, mesh, stream);
  const PathWeights weights = path_weights(model, law, path);
  return {plain_from_path(payoff, law, path, weights), static_cast<double>(mesh.n_switch)};
}

DrawResult antithetic_single(const SdeModel& model, const Payoff& payoff, const SwitchingLaw& law,
                             RngStream& stream) {
  const SwitchMesh mesh = simulate_mesh(law, model.t0, model.horizon, stream);
  const SwitchPath path = simulate_path(model, mesh, stream);
  const PathWeights weights = path_weights(model, law, path);
  return {antithetic_from_path(payoff, law, path, weights), static_cast<double>(mesh.n_switch)};
}

SingleFn make_plain_fn(const SdeModel& model, const Payoff& payoff, const SwitchingLaw& law) {
  return [&model, &payoff, &law](RngStream& stream) { return plain_single(model, payoff, law, stream); };
}

SingleFn make_antithetic_fn(const SdeModel& model, const Payoff& payoff, const SwitchingLaw& law) {
  return [&model, &payoff, &law](RngStream& stream) { return antithetic_single(model, payoff, law, stream); };
}

SingleFn make_euler_fn(const SdeModel& model, const Payoff& payoff, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("Euler step h must be positive");
  return [&model, &payoff, h](RngStream& stream) {
    const int d = model.dim;
    Vec x = model.x0;
    Vec b(static_cast<std::size_t>(d));
    Vec z(static_cast<std::size_t>(d));
    SquareMatrix sig(d);
    double t = model.t0;
    double steps = 0.0;
    while (t < model.horizon) {
      const double dt = std::min(h, model.horizon - t);
      model.drift(t, x, b);
      model.sigma(t, x, sig);
      stream.fill_normal(z);
      const double root_dt = std::sqrt(dt);
      for (int i = 0; i < d; ++i) {
        const auto ii = static_cast<std::size_t>(i);
        double diff = 0.0;
        for (int j = 0; j < d; ++j) diff += sig(i, j) * z[static_cast<std::size_t>(j)];
        x[ii] += b[ii] * dt + root_dt * diff;
      }
      t += dt;
      steps += 1.0;
    }
    return DrawResult{payoff.g(x), steps};
  };
}

EstimateResult run_monte_carlo(const SingleFn& fn, long long n_part, int reps, int workers,
                               std::uint64_t seed) {
  if (n_part < 1 || reps < 1) throw std::invalid_argument("run_monte_carlo needs n_part >= 1, reps >= 1");
  if (workers < 1) workers = 1;

  const auto t_begin = std::chrono::steady_clock::now();

  const long long chunks_per_rep = (n_part + kChunkDraws - 1) / kChunkDraws;
  const long long n_units = chunks_per_rep * reps;
  std::vector<ChunkStat> stats(static_cast<std::size_t>(n_units));

  std::atomic<long long> next_unit{0};
  auto work = [&]() {
    for (;;) {
      const long long unit = next_unit.fetch_add(1);
      if (unit >= n_units) break;
      const long long rep = unit / chunks_per_rep;
      const long long chunk = unit % chunks_per_rep;
      const long long lo = chunk * kChunkDraws;
      const long long hi = std::min(n_part, lo + kChunkDraws);

      RngStream stream(seed, (static_cast<std::uint64_t>(rep) << 32) |
                                 static_cast<std::uint64_t>(chunk));
      ChunkStat& st = stats[static_cast<std::size_t>(unit)];
      for (long long i = lo; i < hi; ++i) {
        const DrawResult draw = fn(stream);
        st.sum.add(draw.value);
        st.sum_sq.add(draw.value * draw.value);
        st.switches.add(draw.n_switch);
        ++st.n;
      }
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

  // Reduce in fixed chunk order.
  std::vector<double> rep_means(static_cast<std::size_t>(reps));
  KahanSum total_sum, total_sq, total_switches;
  for (long long rep = 0; rep < reps; ++rep) {
    KahanSum s;
    for (long long chunk = 0; chunk < chunks_per_rep; ++chunk) {
      const ChunkStat& st = stats[static_cast<std::size_t>(rep * chunks_per_rep + chunk)];
      s.add(st.sum.value());
      total_sum.add(st.sum.value());
      total_sq.add(st.sum_sq.value());
      total_switches.add(st.switches.value());
    }
    rep_means[static_cast<std::size_t>(rep)] = s.value() / static_cast<double>(n_part);
  }

  EstimateResult out;
  out.n_part = n_part;
  out.reps = reps;
  KahanSum mean_sum;
  for (double m : rep_means) mean_sum.add(m);
  out.mean = mean_sum.value() / reps;

  const double total_n = static_cast<double>(n_part) * reps;
  out.avg_switches = total_switches.value() / total_n;
  const double draw_var =
      std::max(0.0, total_sq.value() / total_n - (total_sum.value() / total_n) * (total_sum.value() / total_n));
  out.draw_stdev = std::sqrt(draw_var);

  if (reps > 1) {
    KahanSum dev;
    for (double m : rep_means) dev.add((m - out.mean) * (m - out.mean));
    out.replication_stdev = std::sqrt(dev.value() / (reps - 1));
    out.std_error = out.replication_stdev / std::sqrt(static_cast<double>(reps));
  } else {
    out.replication_stdev = 0.0;
    out.std_error = out.draw_stdev / std::sqrt(static_cast<double>(n_part));
  }

  out.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_begin).count();
  return out;
}

EstimateResult euler_estimate(const SdeModel& model, const Payoff& payoff, double h, long long n_e,
                              int workers, std::uint64_t seed, int reps) {
  return run_monte_carlo(make_euler_fn(model, payoff, h), n_e, reps, workers, seed);
}

double EulerCalibration::h_of_eps(double eps) const {
  return eps / (2.0 * std::max(c_e_hat, 1e-12));
}

long long EulerCalibration::n_of_eps(double eps) const {
  const double n = (2.0 * s_hat / eps) * (2.0 * s_hat / eps);
  return static_cast<long long>(std::ceil(n));
}

EulerCalibration calibrate_euler(const SdeModel& model, const Payoff& payoff,
                                 const EulerCalibrationCfg& cfg) {
  const double span = model.horizon - model.t0;
  EulerCalibration cal;
  cal.fine_h = span / cfg.fine_steps;
  cal.coarse_h = span / cfg.coarse_steps;

  const EstimateResult fine =
      euler_estimate(model, payoff, cal.fine_h, cfg.fine_n, cfg.workers, cfg.seed);
  const EstimateResult coarse =
      euler_estimate(model, payoff, cal.coarse_h, cfg.coarse_n, cfg.workers, cfg.seed + 1);

  cal.reference_value = fine.mean;
  cal.s_hat = fine.draw_stdev;

  const double bias = std::abs(coarse.mean - fine.mean);
  const double noise = 3.0 * std::sqrt(fine.std_error * fine.std_error +
                                       coarse.std_error * coarse.std_error);
  cal.degenerate = bias <= noise;
  cal.c_e_hat = std::max(bias, 1e-12) / cal.coarse_h;
  return cal;
}

}  // namespace switchmc
