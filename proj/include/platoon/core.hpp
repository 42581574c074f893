#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <vector>

#include "platoon/lead_profile.hpp"

namespace platoon {

/// Kinematic state of one vehicle: position [m], velocity [m/s],
/// acceleration [m/s^2].
struct VehicleState {
  double x = 0.0;
  double v = 0.0;
  double a = 0.0;
};

/// Controller parameters of the constant-time-headway control law:
/// feedforward gain on the communicated predecessor acceleration (ka),
/// relative-velocity gain (kv, 1/s), spacing-error gain (kp, 1/s^2) and
/// time headway (hw, s).
struct GainSet {
  double ka = 0.5;
  double kv = 0.63;
  double kp = 0.009;
  double hw = 0.95;

  /// Combined damping coefficient gamma = kv + hw*kp.
  double gamma() const { return kv + hw * kp; }

  void validate() const {
    if (!(ka > 0.0) || !(kv > 0.0) || !(kp > 0.0) || !(hw > 0.0))
      throw std::invalid_argument("gains: ka, kv, kp, hw must all be positive");
    if (!std::isfinite(ka) || !std::isfinite(kv) || !std::isfinite(kp) || !std::isfinite(hw))
      throw std::invalid_argument("gains: ka, kv, kp, hw must be finite");
  }
};

/// Platoon and integration parameters. The actuator lag tau is uncertain in
/// practice and bounded by tau0; a single run uses the actual value tau.
struct PlatoonConfig {
  int followers = 12;                // N
  double tau = 0.5;                  // actual actuation lag, s
  double tau0 = 0.5;                 // lag upper bound, s
  double standstill_spacing = 5.0;   // d, m
  double initial_speed = 20.0;       // v0, m/s
  LeadProfile lead;
  double dt = 0.01;                  // integration step, s
  double horizon = 150.0;            // T, s

  void validate() const {
    if (followers < 1) throw std::invalid_argument("platoon: follower count must be positive");
    if (!(tau > 0.0) || !(tau0 >= tau))
      throw std::invalid_argument("platoon: need 0 < tau <= tau0");
    if (!(standstill_spacing > 0.0))
      throw std::invalid_argument("platoon: standstill spacing must be positive");
    if (!(initial_speed >= 0.0))
      throw std::invalid_argument("platoon: initial speed must be nonnegative");
    if (!(dt > 0.0) || !(dt < tau / 10.0))
      throw std::invalid_argument("platoon: dt must satisfy 0 < dt < tau/10 to resolve the actuator lag");
    if (!(horizon > 0.0)) throw std::invalid_argument("platoon: horizon must be positive");
    lead.validate();
  }

  std::size_t steps() const { return static_cast<std::size_t>(std::llround(horizon / dt)); }
};

/// Time-indexed result of a platoon run. Vehicle 0 is the lead; series are
/// indexed [vehicle][sample]. Derived series: gap error e_i = x_i - x_{i-1} + d,
/// headway-dependent spacing error delta_i = e_i + hw*v_i, and platoon length
/// x_0 - x_N. All series share the time grid length.
struct Trajectory {
  std::vector<double> time;
  std::vector<std::vector<double>> x, v, a;        // [vehicle][sample]
  std::vector<std::vector<double>> gap_error;      // e_i, [follower-1][sample]
  std::vector<std::vector<double>> delta;          // delta_i, [follower-1][sample]
  std::vector<double> length;                      // x_0 - x_N
  double standstill_spacing = 0.0;                 // d used for the derived series
  double headway = 0.0;                            // hw used for the derived series

  std::size_t vehicles() const { return x.size(); }
  std::size_t samples() const { return time.size(); }

  void check_consistent() const {
    if (x.size() < 2 || x.size() != v.size() || x.size() != a.size())
      throw std::invalid_argument("trajectory: need >= 2 vehicles with matching x/v/a series");
    for (std::size_t i = 0; i < x.size(); ++i)
      if (x[i].size() != time.size() || v[i].size() != time.size() || a[i].size() != time.size())
        throw std::invalid_argument("trajectory: series length differs from time grid");
  }
};

/// Recompute the spacing errors delta_i(t) = x_i - x_{i-1} + d + hw*v_i from
/// the raw states, for followers i = 1..N.
inline std::vector<std::vector<double>> spacing_errors(const Trajectory& traj, double hw) {
  traj.check_consistent();
  const double d = traj.standstill_spacing;
  std::vector<std::vector<double>> out(traj.vehicles() - 1);
  for (std::size_t i = 1; i < traj.vehicles(); ++i) {
    auto& series = out[i - 1];
    series.resize(traj.samples());
    for (std::size_t k = 0; k < traj.samples(); ++k)
      series[k] = traj.x[i][k] - traj.x[i - 1][k] + d + hw * traj.v[i][k];
  }
  return out;
}

/// Platoon length L(t) = x_0(t) - x_N(t).
inline std::vector<double> platoon_length(const Trajectory& traj) {
  traj.check_consistent();
  std::vector<double> out(traj.samples());
  const auto& lead = traj.x.front();
  const auto& tail = traj.x.back();
  for (std::size_t k = 0; k < traj.samples(); ++k) out[k] = lead[k] - tail[k];
  return out;
}

/// Peak magnitudes ||delta_i||_inf and the per-pair amplification ratios
/// ||delta_i||_inf / ||delta_{i-1}||_inf. A ratio is reported as undefined
/// (nullopt) when the upstream peak is below the numeric floor.
struct AmplificationReport {
  std::vector<double> peak;                  // i = 1..N
  std::vector<std::optional<double>> ratio;  // pairs (2,1)..(N,N-1)

  std::optional<double> max_ratio() const {
    std::optional<double> m;
    for (const auto& r : ratio)
      if (r && (!m || *r > *m)) m = *r;
    return m;
  }

  /// All defined ratios <= 1 + tol. Vacuously true when no ratio is defined.
  bool string_stable(double tol = 1e-6) const {
    for (const auto& r : ratio)
      if (r && *r > 1.0 + tol) return false;
    return true;
  }
};

inline AmplificationReport amplification_ratios(const std::vector<std::vector<double>>& delta,
                                                double floor = 1e-12) {
  if (delta.empty())
    throw std::invalid_argument("amplification ratios: no follower series given");
  const std::size_t n = delta.front().size();
  AmplificationReport rep;
  rep.peak.reserve(delta.size());
  for (const auto& series : delta) {
    if (series.size() != n)
      throw std::invalid_argument("amplification ratios: series lengths differ");
    double peak = 0.0;
    for (double v : series) peak = std::max(peak, std::abs(v));
    rep.peak.push_back(peak);
  }
  rep.ratio.resize(delta.size() - 1);
  for (std::size_t i = 1; i < delta.size(); ++i) {
    if (rep.peak[i - 1] > floor)
      rep.ratio[i - 1] = rep.peak[i] / rep.peak[i - 1];
    else
      rep.ratio[i - 1] = std::nullopt;
  }
  return rep;
}

}  // namespace platoon
