#pragma once

#include <atomic>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "platoon/core.hpp"
#include "platoon/lead_profile.hpp"
#include "platoon/noise_channel.hpp"

namespace platoon {

enum class SimulationMode { stochastic, averaged, noiseless };

inline const char* to_string(SimulationMode m) {
  switch (m) {
    case SimulationMode::stochastic: return "stochastic";
    case SimulationMode::averaged: return "averaged";
    case SimulationMode::noiseless: return "noiseless";
  }
  return "?";
}

namespace detail {

/// Right-hand side of the platoon chain. The lead vehicle integrates the
/// exogenous acceleration profile directly (no actuator lag on the lead);
/// followers run the headway control law through the first-order lag. The
/// per-link noise factors w[1..N] are held fixed across one step's stages so
/// a stochastic step integrates the frozen-matrix dynamics exactly.
struct ChainRhs {
  const PlatoonConfig* config;
  const GainSet* gains;

  void operator()(double t, const std::vector<double>& x, const std::vector<double>& v,
                  const std::vector<double>& a, const std::vector<double>& w,
                  std::vector<double>& dx, std::vector<double>& dv,
                  std::vector<double>& da) const {
    const int n = config->followers;
    const double d = config->standstill_spacing;
    const double hw = gains->hw;
    const double lead_a = lead_acceleration(config->lead, t);
    dx[0] = v[0];
    dv[0] = lead_a;
    da[0] = 0.0;
    for (int i = 1; i <= n; ++i) {
      const std::size_t ii = static_cast<std::size_t>(i);
      dx[ii] = v[ii];
      dv[ii] = a[ii];
      const double pred_a = (i == 1) ? lead_a : a[ii - 1];
      const double delta = x[ii] - x[ii - 1] + d + hw * v[ii];
      const double u = gains->ka * w[ii] * pred_a - gains->kv * (v[ii] - v[ii - 1]) -
                       gains->kp * delta;
      da[ii] = (u - a[ii]) / config->tau;
    }
  }
};

inline void axpy_state(const std::vector<double>& x0, const std::vector<double>& k,
                       double h, std::vector<double>& out) {
  for (std::size_t i = 0; i < x0.size(); ++i) out[i] = x0[i] + h * k[i];
}

}  // namespace detail

/// Integrate the platoon with fixed-step RK4. Initial condition is the
/// headway equilibrium: common speed v0, zero accelerations, gaps d + hw*v0.
///
/// stochastic: one noise draw per link per step (streams derived from
///             (seed, run 0, link)), held constant within the step.
/// averaged  : w identically equal to the channel mean.
/// noiseless : w identically 1; no channel needed.
///
/// Throws on a numeric blow-up (any |state| > 1e9).
inline Trajectory simulate(const PlatoonConfig& config, const GainSet& gains,
                           const std::optional<ChannelSpec>& channel, SimulationMode mode,
                           std::uint64_t seed = 1, std::uint64_t run_index = 0) {
  config.validate();
  gains.validate();
  if (mode != SimulationMode::noiseless) {
    if (!channel) throw std::invalid_argument("simulate: this mode requires a channel");
    channel->validate();
  }

  const int n = config.followers;
  const std::size_t dim = static_cast<std::size_t>(n) + 1;
  const std::size_t steps = config.steps();
  const double dt = config.dt;
  const double d = config.standstill_spacing;
  const double hw = gains.hw;
  const double v0 = config.initial_speed;

  std::vector<double> x(dim), v(dim, v0), a(dim, 0.0);
  for (std::size_t i = 0; i < dim; ++i) x[i] = -static_cast<double>(i) * (d + hw * v0);

  std::vector<double> w(dim, 1.0);
  const double wbar = (mode == SimulationMode::averaged) ? expected_noise_factor(*channel) : 1.0;
  if (mode == SimulationMode::averaged)
    for (std::size_t i = 1; i < dim; ++i) w[i] = wbar;

  std::vector<std::mt19937_64> streams;
  if (mode == SimulationMode::stochastic) {
    streams.reserve(static_cast<std::size_t>(n));
    for (int link = 1; link <= n; ++link)
      streams.emplace_back(noise_stream_seed(seed, run_index, static_cast<std::uint64_t>(link)));
  }

  Trajectory traj;
  traj.standstill_spacing = d;
  traj.headway = hw;
  traj.time.resize(steps + 1);
  traj.x.assign(dim, std::vector<double>(steps + 1));
  traj.v.assign(dim, std::vector<double>(steps + 1));
  traj.a.assign(dim, std::vector<double>(steps + 1));
  traj.gap_error.assign(static_cast<std::size_t>(n), std::vector<double>(steps + 1));
  traj.delta.assign(static_cast<std::size_t>(n), std::vector<double>(steps + 1));
  traj.length.resize(steps + 1);

  const detail::ChainRhs rhs{&config, &gains};
  std::vector<double> k1x(dim), k1v(dim), k1a(dim), k2x(dim), k2v(dim), k2a(dim);
  std::vector<double> k3x(dim), k3v(dim), k3a(dim), k4x(dim), k4v(dim), k4a(dim);
  std::vector<double> tx(dim), tv(dim), ta(dim);

  auto record = [&](std::size_t k, double t) {
    traj.time[k] = t;
    for (std::size_t i = 0; i < dim; ++i) {
      traj.x[i][k] = x[i];
      traj.v[i][k] = v[i];
      traj.a[i][k] = (i == 0) ? lead_acceleration(config.lead, t) : a[i];
    }
    for (std::size_t i = 1; i < dim; ++i) {
      const double e = x[i] - x[i - 1] + d;
      traj.gap_error[i - 1][k] = e;
      traj.delta[i - 1][k] = e + hw * v[i];
    }
    traj.length[k] = x[0] - x[dim - 1];
  };
  record(0, 0.0);

  for (std::size_t k = 0; k < steps; ++k) {
    const double t = static_cast<double>(k) * dt;
    if (mode == SimulationMode::stochastic)
      for (int link = 1; link <= n; ++link)
        w[static_cast<std::size_t>(link)] =
            sample_noise_factor(*channel, streams[static_cast<std::size_t>(link - 1)]).value;

    rhs(t, x, v, a, w, k1x, k1v, k1a);
    detail::axpy_state(x, k1x, dt / 2, tx);
    detail::axpy_state(v, k1v, dt / 2, tv);
    detail::axpy_state(a, k1a, dt / 2, ta);
    rhs(t + dt / 2, tx, tv, ta, w, k2x, k2v, k2a);
    detail::axpy_state(x, k2x, dt / 2, tx);
    detail::axpy_state(v, k2v, dt / 2, tv);
    detail::axpy_state(a, k2a, dt / 2, ta);
    rhs(t + dt / 2, tx, tv, ta, w, k3x, k3v, k3a);
    detail::axpy_state(x, k3x, dt, tx);
    detail::axpy_state(v, k3v, dt, tv);
    detail::axpy_state(a, k3a, dt, ta);
    rhs(t + dt, tx, tv, ta, w, k4x, k4v, k4a);

    for (std::size_t i = 0; i < dim; ++i) {
      x[i] += dt / 6 * (k1x[i] + 2 * k2x[i] + 2 * k3x[i] + k4x[i]);
      v[i] += dt / 6 * (k1v[i] + 2 * k2v[i] + 2 * k3v[i] + k4v[i]);
      a[i] += dt / 6 * (k1a[i] + 2 * k2a[i] + 2 * k3a[i] + k4a[i]);
    }

    for (std::size_t i = 0; i < dim; ++i)
      if (std::abs(x[i]) > 1e9 || std::abs(v[i]) > 1e9 || std::abs(a[i]) > 1e9)
        throw std::runtime_error("simulate: numeric blow-up at t = " +
                                 std::to_string(t + dt) + " s (vehicle " + std::to_string(i) +
                                 "); configuration is dynamically unstable");
    record(k + 1, static_cast<double>(k + 1) * dt);
  }
  return traj;
}

/// Replay of the noisy communicated acceleration on one link of a
/// stochastic run: communicated[k] = w_k * a_pred(t_k) and
/// noise[k] = (w_k - 1) * a_pred(t_k), one entry per integration step.
/// Requires the trajectory, seed and run index of the original run.
struct CommunicatedTrace {
  std::vector<double> time;
  std::vector<double> communicated;
  std::vector<double> noise;
};

inline CommunicatedTrace communicated_signal_trace(const Trajectory& traj,
                                                   const ChannelSpec& channel, int link,
                                                   std::uint64_t seed,
                                                   std::uint64_t run_index = 0) {
  traj.check_consistent();
  channel.validate();
  if (link < 1 || static_cast<std::size_t>(link) >= traj.vehicles())
    throw std::invalid_argument("trace: link index out of range");
  const std::size_t steps = traj.samples() - 1;
  std::mt19937_64 stream(noise_stream_seed(seed, run_index, static_cast<std::uint64_t>(link)));
  CommunicatedTrace trace;
  trace.time.resize(steps);
  trace.communicated.resize(steps);
  trace.noise.resize(steps);
  const auto& pred_a = traj.a[static_cast<std::size_t>(link) - 1];
  for (std::size_t k = 0; k < steps; ++k) {
    const double w = sample_noise_factor(channel, stream).value;
    trace.time[k] = traj.time[k];
    trace.communicated[k] = w * pred_a[k];
    trace.noise[k] = (w - 1.0) * pred_a[k];
  }
  return trace;
}

/// Pointwise mean over M independent stochastic runs, with per-sample
/// confidence half-widths 2 * std / sqrt(M) for the spacing errors.
///
/// Runs are partitioned into a fixed number of chunks combined in chunk
/// order, so the result is independent of the worker thread count (bitwise
/// reproducibility of the mean requires this fixed reduction order).
struct MonteCarloSummary {
  std::vector<double> time;
  std::vector<std::vector<double>> mean_x, mean_v, mean_a;  // [vehicle][sample]
  std::vector<std::vector<double>> mean_delta;              // [follower-1][sample]
  std::vector<std::vector<double>> halfwidth_delta;
  int runs = 0;
};

namespace detail {

struct WelfordSet {
  std::int64_t count = 0;
  std::vector<std::vector<double>> mean_x, mean_v, mean_a, mean_delta, m2_delta;

  void init(std::size_t vehicles, std::size_t followers, std::size_t samples) {
    mean_x.assign(vehicles, std::vector<double>(samples, 0.0));
    mean_v.assign(vehicles, std::vector<double>(samples, 0.0));
    mean_a.assign(vehicles, std::vector<double>(samples, 0.0));
    mean_delta.assign(followers, std::vector<double>(samples, 0.0));
    m2_delta.assign(followers, std::vector<double>(samples, 0.0));
  }

  static void accum_mean(std::vector<double>& mean, const std::vector<double>& sample,
                         double inv_count) {
    for (std::size_t k = 0; k < mean.size(); ++k)
      mean[k] += (sample[k] - mean[k]) * inv_count;
  }

  void add(const Trajectory& traj) {
    ++count;
    const double inv = 1.0 / static_cast<double>(count);
    for (std::size_t i = 0; i < mean_x.size(); ++i) {
      accum_mean(mean_x[i], traj.x[i], inv);
      accum_mean(mean_v[i], traj.v[i], inv);
      accum_mean(mean_a[i], traj.a[i], inv);
    }
    for (std::size_t i = 0; i < mean_delta.size(); ++i) {
      auto& mean = mean_delta[i];
      auto& m2 = m2_delta[i];
      const auto& sample = traj.delta[i];
      for (std::size_t k = 0; k < mean.size(); ++k) {
        const double delta1 = sample[k] - mean[k];
        mean[k] += delta1 * inv;
        m2[k] += delta1 * (sample[k] - mean[k]);
      }
    }
  }

  static void merge_mean(std::vector<double>& ma, const std::vector<double>& mb,
                         double wb) {
    for (std::size_t k = 0; k < ma.size(); ++k) ma[k] += (mb[k] - ma[k]) * wb;
  }

  void merge(const WelfordSet& other) {
    if (other.count == 0) return;
    if (count == 0) { *this = other; return; }
    const double na = static_cast<double>(count);
    const double nb = static_cast<double>(other.count);
    const double wb = nb / (na + nb);
    for (std::size_t i = 0; i < mean_x.size(); ++i) {
      merge_mean(mean_x[i], other.mean_x[i], wb);
      merge_mean(mean_v[i], other.mean_v[i], wb);
      merge_mean(mean_a[i], other.mean_a[i], wb);
    }
    for (std::size_t i = 0; i < mean_delta.size(); ++i) {
      auto& mean = mean_delta[i];
      auto& m2 = m2_delta[i];
      const auto& meanb = other.mean_delta[i];
      const auto& m2b = other.m2_delta[i];
      for (std::size_t k = 0; k < mean.size(); ++k) {
        const double d = meanb[k] - mean[k];
        m2[k] += m2b[k] + d * d * na * wb;
        mean[k] += d * wb;
      }
    }
    count += other.count;
  }
};

}  // namespace detail

inline MonteCarloSummary monte_carlo_mean(const PlatoonConfig& config, const GainSet& gains,
                                          const ChannelSpec& channel, int runs,
                                          std::uint64_t master_seed,
                                          unsigned worker_threads = 0) {
  if (runs < 1) throw std::invalid_argument("monte carlo: need at least one run");
  config.validate();
  gains.validate();
  channel.validate();

  const std::size_t vehicles = static_cast<std::size_t>(config.followers) + 1;
  const std::size_t followers = static_cast<std::size_t>(config.followers);
  const std::size_t samples = config.steps() + 1;

  const int chunk_count = std::min(runs, 8);
  std::vector<detail::WelfordSet> chunks(static_cast<std::size_t>(chunk_count));
  for (auto& c : chunks) c.init(vehicles, followers, samples);

  auto run_chunk = [&](int chunk) {
    const int lo = runs * chunk / chunk_count;
    const int hi = runs * (chunk + 1) / chunk_count;
    auto& acc = chunks[static_cast<std::size_t>(chunk)];
    for (int m = lo; m < hi; ++m) {
      Trajectory traj = simulate(config, gains, channel, SimulationMode::stochastic,
                                 master_seed, static_cast<std::uint64_t>(m));
      acc.add(traj);
    }
  };

  unsigned hardware = std::thread::hardware_concurrency();
  if (worker_threads == 0) worker_threads = hardware ? hardware : 1;
  if (worker_threads <= 1 || chunk_count == 1) {
    for (int c = 0; c < chunk_count; ++c) run_chunk(c);
  } else {
    std::vector<std::thread> pool;
    std::atomic<int> next{0};
    const unsigned n_workers = std::min<unsigned>(worker_threads, static_cast<unsigned>(chunk_count));
    for (unsigned t = 0; t < n_workers; ++t)
      pool.emplace_back([&]() {
        for (;;) {
          const int c = next.fetch_add(1);
          if (c >= chunk_count) return;
          run_chunk(c);
        }
      });
    for (auto& th : pool) th.join();
  }

  detail::WelfordSet total = std::move(chunks.front());
  for (std::size_t c = 1; c < chunks.size(); ++c) total.merge(chunks[c]);

  MonteCarloSummary summary;
  summary.runs = runs;
  summary.time.resize(samples);
  const double dt = config.dt;
  for (std::size_t k = 0; k < samples; ++k) summary.time[k] = static_cast<double>(k) * dt;
  summary.mean_x = std::move(total.mean_x);
  summary.mean_v = std::move(total.mean_v);
  summary.mean_a = std::move(total.mean_a);
  summary.mean_delta = std::move(total.mean_delta);
  summary.halfwidth_delta.assign(followers, std::vector<double>(samples, 0.0));
  if (runs > 1) {
    const double inv_m = 1.0 / static_cast<double>(runs);
    const double inv_m1 = 1.0 / static_cast<double>(runs - 1);
    for (std::size_t i = 0; i < followers; ++i)
      for (std::size_t k = 0; k < samples; ++k)
        summary.halfwidth_delta[i][k] =
            2.0 * std::sqrt(total.m2_delta[i][k] * inv_m1 * inv_m);
  }
  return summary;
}

/// Fraction of samples whose Monte-Carlo mean spacing error falls within the
/// confidence half-width of a reference series. abs_floor absorbs the
/// floating-point quantization floor of the trajectories (position ulp scale),
/// where the half-width estimate itself is meaningless.
struct BandAgreement {
  std::size_t inside = 0;
  std::size_t total = 0;
  double fraction() const {
    return total ? static_cast<double>(inside) / static_cast<double>(total) : 1.0;
  }
};

inline BandAgreement band_agreement(const MonteCarloSummary& mc,
                                    const std::vector<std::vector<double>>& reference_delta,
                                    double abs_floor = 1e-12) {
  if (reference_delta.size() != mc.mean_delta.size())
    throw std::invalid_argument("band agreement: follower count mismatch");
  BandAgreement agreement;
  for (std::size_t i = 0; i < mc.mean_delta.size(); ++i) {
    if (reference_delta[i].size() != mc.time.size())
      throw std::invalid_argument("band agreement: sample count mismatch");
    for (std::size_t k = 0; k < mc.time.size(); ++k) {
      const double diff = std::abs(mc.mean_delta[i][k] - reference_delta[i][k]);
      if (diff <= mc.halfwidth_delta[i][k] + abs_floor) ++agreement.inside;
      ++agreement.total;
    }
  }
  return agreement;
}

/// Averaged closed-loop platoon in stacked matrix form,
/// X = [x_0, v_0, a_0, x_1, v_1, a_1, ...]:
///
///   X'(t) = A X(t) + B u(t) + c,
///
/// with u the exogenous lead acceleration. The lead block integrates u
/// directly, so the a_0 state is identically zero and u reaches follower 1's
/// actuator row through B; the constant offset c carries the -kp*d terms.
/// A is banded lower block triangular: vehicle i's rows touch only blocks
/// i and i-1.
struct ClosedLoopSystem {
  Eigen::MatrixXd A;
  Eigen::VectorXd B;
  Eigen::VectorXd c;

  Eigen::Index dim() const { return A.rows(); }
};

inline ClosedLoopSystem build_averaged_system(const PlatoonConfig& config, const GainSet& gains,
                                              double wbar) {
  config.validate();
  gains.validate();
  if (!(wbar > 0.0)) throw std::invalid_argument("averaged system: wbar must be positive");
  const int n = config.followers;
  const Eigen::Index dim = 3 * (static_cast<Eigen::Index>(n) + 1);
  const double tau = config.tau;
  const double ktilde = gains.ka * wbar;
  const double gamma = gains.gamma();

  ClosedLoopSystem sys;
  sys.A = Eigen::MatrixXd::Zero(dim, dim);
  sys.B = Eigen::VectorXd::Zero(dim);
  sys.c = Eigen::VectorXd::Zero(dim);

  sys.A(0, 1) = 1.0;  // lead: x' = v, v' = u, a-state unused
  sys.B(1) = 1.0;

  for (int i = 1; i <= n; ++i) {
    const Eigen::Index r = 3 * static_cast<Eigen::Index>(i);
    sys.A(r, r + 1) = 1.0;
    sys.A(r + 1, r + 2) = 1.0;
    sys.A(r + 2, r) = -gains.kp / tau;
    sys.A(r + 2, r + 1) = -gamma / tau;
    sys.A(r + 2, r + 2) = -1.0 / tau;
    sys.A(r + 2, r - 3) = gains.kp / tau;
    sys.A(r + 2, r - 2) = gains.kv / tau;
    if (i >= 2)
      sys.A(r + 2, r - 1) = ktilde / tau;
    else
      sys.B(r + 2) = ktilde / tau;
    sys.c(r + 2) = -gains.kp * config.standstill_spacing / tau;
  }
  return sys;
}

/// RK4 integration of the matrix-form averaged dynamics. Matches the chain
/// integrator in averaged mode up to floating-point reassociation.
inline Trajectory simulate_averaged_matrix(const ClosedLoopSystem& sys,
                                           const PlatoonConfig& config, const GainSet& gains) {
  config.validate();
  gains.validate();
  const int n = config.followers;
  if (sys.dim() != 3 * (static_cast<Eigen::Index>(n) + 1))
    throw std::invalid_argument("matrix simulate: system dimension does not match the config");
  const std::size_t steps = config.steps();
  const double dt = config.dt;
  const double d = config.standstill_spacing;
  const double hw = gains.hw;
  const double v0 = config.initial_speed;

  Eigen::VectorXd X = Eigen::VectorXd::Zero(sys.dim());
  for (int i = 0; i <= n; ++i) {
    const Eigen::Index r = 3 * static_cast<Eigen::Index>(i);
    X(r) = -static_cast<double>(i) * (d + hw * v0);
    X(r + 1) = v0;
  }

  Trajectory traj;
  traj.standstill_spacing = d;
  traj.headway = hw;
  const std::size_t dim_v = static_cast<std::size_t>(n) + 1;
  traj.time.resize(steps + 1);
  traj.x.assign(dim_v, std::vector<double>(steps + 1));
  traj.v.assign(dim_v, std::vector<double>(steps + 1));
  traj.a.assign(dim_v, std::vector<double>(steps + 1));
  traj.gap_error.assign(static_cast<std::size_t>(n), std::vector<double>(steps + 1));
  traj.delta.assign(static_cast<std::size_t>(n), std::vector<double>(steps + 1));
  traj.length.resize(steps + 1);

  auto record = [&](std::size_t k, double t) {
    traj.time[k] = t;
    for (std::size_t i = 0; i < dim_v; ++i) {
      const Eigen::Index r = 3 * static_cast<Eigen::Index>(i);
      traj.x[i][k] = X(r);
      traj.v[i][k] = X(r + 1);
      traj.a[i][k] = (i == 0) ? lead_acceleration(config.lead, t) : X(r + 2);
    }
    for (std::size_t i = 1; i < dim_v; ++i) {
      const double e = traj.x[i][k] - traj.x[i - 1][k] + d;
      traj.gap_error[i - 1][k] = e;
      traj.delta[i - 1][k] = e + hw * traj.v[i][k];
    }
    traj.length[k] = traj.x[0][k] - traj.x[dim_v - 1][k];
  };
  record(0, 0.0);

  auto f = [&](double t, const Eigen::VectorXd& state) -> Eigen::VectorXd {
    return sys.A * state + sys.B * lead_acceleration(config.lead, t) + sys.c;
  };
  for (std::size_t k = 0; k < steps; ++k) {
    const double t = static_cast<double>(k) * dt;
    const Eigen::VectorXd k1 = f(t, X);
    const Eigen::VectorXd k2 = f(t + dt / 2, X + (dt / 2) * k1);
    const Eigen::VectorXd k3 = f(t + dt / 2, X + (dt / 2) * k2);
    const Eigen::VectorXd k4 = f(t + dt, X + dt * k3);
    X += (dt / 6) * (k1 + 2 * k2 + 2 * k3 + k4);
    record(k + 1, static_cast<double>(k + 1) * dt);
  }
  return traj;
}

}  // namespace platoon
