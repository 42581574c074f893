#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "platoon/core.hpp"
#include "platoon/noise_channel.hpp"
#include "platoon/synthesis.hpp"

namespace platoon {

/// Spacing-error propagation transfer function
///
///   H(s; tau) = N(s) / D(s),
///   N(s) = ktilde_a s^2 + kv s + kp,
///   D(s) = tau s^3 + s^2 + gamma s + kp,    gamma = kv + hw*kp.
///
/// The DC gain N(0)/D(0) is identically 1.
struct ErrorPropagationTF {
  double ktilde_a = 0.0;
  double kv = 0.0;
  double kp = 0.0;
  double tau = 0.0;
  double gamma = 0.0;
};

inline ErrorPropagationTF build_tf(const GainSet& gains, double ktilde_a, double tau) {
  gains.validate();
  if (!(ktilde_a > 0.0)) throw std::invalid_argument("tf: effective gain must be positive");
  if (!(tau > 0.0)) throw std::invalid_argument("tf: tau must be positive");
  return {ktilde_a, gains.kv, gains.kp, tau, gains.gamma()};
}

/// |H(j omega)| from the closed-form squared magnitudes
///   |N|^2 = (kp - ktilde_a w^2)^2 + kv^2 w^2
///   |D|^2 = (kp - w^2)^2 + w^2 (gamma - tau w^2)^2.
inline double magnitude(const ErrorPropagationTF& tf, double omega) {
  if (!(omega >= 0.0)) throw std::invalid_argument("magnitude: omega must be nonnegative");
  const double w2 = omega * omega;
  const double n2 = (tf.kp - tf.ktilde_a * w2) * (tf.kp - tf.ktilde_a * w2) + tf.kv * tf.kv * w2;
  const double d2 = (tf.kp - w2) * (tf.kp - w2) + w2 * (tf.gamma - tf.tau * w2) * (tf.gamma - tf.tau * w2);
  if (d2 == 0.0) throw std::runtime_error("magnitude: denominator vanished on the imaginary axis");
  return std::sqrt(n2 / d2);
}

struct FrequencyGrid {
  double omega_min = 1e-3;       // rad/s
  double omega_max = 1e3;        // rad/s
  int points = 2000;             // log-spaced
  double refine_rel_tol = 1e-10; // golden-section bracket width, relative
};

struct HinfResult {
  double value = 0.0;
  double omega = 0.0;      // arg max; 0 when the supremum sits at DC
  bool edge_warning = false;
};

namespace detail {
inline double golden_refine(const ErrorPropagationTF& tf, double lo, double hi,
                            double rel_tol, double& best_omega) {
  constexpr double invphi = 0.6180339887498949;
  double c = hi - invphi * (hi - lo);
  double d = lo + invphi * (hi - lo);
  double fc = magnitude(tf, c);
  double fd = magnitude(tf, d);
  while ((hi - lo) > rel_tol * hi) {
    if (fc > fd) {
      hi = d; d = c; fd = fc;
      c = hi - invphi * (hi - lo);
      fc = magnitude(tf, c);
    } else {
      lo = c; c = d; fc = fd;
      d = lo + invphi * (hi - lo);
      fd = magnitude(tf, d);
    }
  }
  if (fc > fd) { best_omega = c; return fc; }
  best_omega = d;
  return fd;
}
}  // namespace detail

/// H-infinity norm over omega in [0, +inf): log-spaced sweep plus
/// golden-section refinement around the discrete peak. The DC value is
/// exactly 1, so the result is never below 1. If the discrete maximum sits
/// on the upper grid edge the range is extended (up to 1e6 rad/s) and the
/// edge flag is raised if it still does.
inline HinfResult hinf_norm(const ErrorPropagationTF& tf, FrequencyGrid grid = {}) {
  if (!(grid.omega_min > 0.0) || !(grid.omega_max > grid.omega_min) || grid.points < 8)
    throw std::invalid_argument("hinf: malformed frequency grid");
  HinfResult result;
  result.value = 1.0;  // DC
  result.omega = 0.0;

  double omega_max = grid.omega_max;
  for (;;) {
    const double log_lo = std::log(grid.omega_min);
    const double log_hi = std::log(omega_max);
    const int n = grid.points;
    double best = -1.0;
    int best_i = 0;
    std::vector<double> omegas(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      const double w = std::exp(log_lo + (log_hi - log_lo) * i / (n - 1));
      omegas[static_cast<std::size_t>(i)] = w;
      const double m = magnitude(tf, w);
      if (m > best) { best = m; best_i = i; }
    }
    if (best_i == n - 1) {
      if (omega_max < 1e6) { omega_max *= 10.0; continue; }
      result.edge_warning = true;
    }
    const double lo = omegas[static_cast<std::size_t>(std::max(0, best_i - 1))];
    const double hi = omegas[static_cast<std::size_t>(std::min(n - 1, best_i + 1))];
    double peak_omega = omegas[static_cast<std::size_t>(best_i)];
    const double refined = detail::golden_refine(tf, lo, hi, grid.refine_rel_tol, peak_omega);
    if (refined > result.value) {
      result.value = refined;
      result.omega = peak_omega;
    }
    return result;
  }
}

/// Sufficient robust string-stability conditions from the magnitude
/// inequality |N(jw)|^2 <= |D(jw)|^2, i.e.
///
///   tau^2 w^4 + (1 - ktilde^2 - 2 tau gamma) w^2
///     + gamma^2 - kv^2 - 2 kp (1 - ktilde)  >=  0  for all w,
///
/// worst-cased over tau in (0, tau0] and ktilde in [ktilde_lo, ktilde_hi]:
/// the quadratic coefficient at (tau0, ktilde_hi), the constant at ktilde_lo.
/// Both passing certifies ||H||inf <= 1 for every lag and channel statistic.
struct QuarticCheck {
  bool coefficient_ok = false;
  bool constant_ok = false;
  double coefficient_margin = 0.0;  // 1 - ktilde_hi^2 - 2 tau0 gamma
  double constant_margin = 0.0;     // gamma^2 - kv^2 - 2 kp (1 - ktilde_lo)

  bool pass() const { return coefficient_ok && constant_ok; }
};

inline QuarticCheck quartic_conditions(double ktilde_lo, double ktilde_hi, double gamma,
                                       double tau0, double kp, double kv) {
  if (!(ktilde_lo > 0.0) || !(ktilde_hi >= ktilde_lo))
    throw std::invalid_argument("quartic: need 0 < ktilde_lo <= ktilde_hi");
  if (!(gamma > 0.0) || !(tau0 > 0.0) || !(kp > 0.0) || !(kv > 0.0))
    throw std::invalid_argument("quartic: gamma, tau0, kp, kv must be positive");
  QuarticCheck q;
  q.coefficient_margin = 1.0 - ktilde_hi * ktilde_hi - 2.0 * tau0 * gamma;
  q.constant_margin = gamma * gamma - kv * kv - 2.0 * kp * (1.0 - ktilde_lo);
  q.coefficient_ok = q.coefficient_margin >= 0.0;
  q.constant_ok = q.constant_margin >= 0.0;
  return q;
}

enum class StabilityClass { certified, uncertified, unstable };

inline const char* to_string(StabilityClass c) {
  switch (c) {
    case StabilityClass::certified: return "certified";
    case StabilityClass::uncertified: return "uncertified";
    case StabilityClass::unstable: return "unstable";
  }
  return "?";
}

/// One sampled frequency-response evaluation of the lag/channel cross-check.
struct SampledPoint {
  double ktilde_a = 0.0;
  double tau = 0.0;
  double hinf = 0.0;
  double omega = 0.0;
};

/// Combined robust string-stability verdict.
///
/// certified  : analytic certificate passes (holds for all tau in (0,tau0]
///              and all channel statistics) and internal stability holds.
/// uncertified: the sufficient conditions fail but every sampled
///              frequency response stays below 1 + tolerance.
/// unstable   : internal stability fails or a sampled response exceeds
///              1 + tolerance.
struct StabilityVerdict {
  bool internally_stable = false;
  QuarticCheck analytic;
  EffectiveGain effective;              // ktilde at the channel mean + interval
  std::vector<SampledPoint> samples;    // tau grid x {lo, mean, hi}
  double max_sampled = 0.0;
  double worst_tau = 0.0;
  double worst_ktilde = 0.0;
  double worst_omega = 0.0;
  double tolerance = 1e-6;
  StabilityClass classification = StabilityClass::unstable;
};

inline StabilityVerdict robust_verdict(const GainSet& gains, const ChannelSpec& channel,
                                       double tau0, double tolerance = 1e-6,
                                       FrequencyGrid grid = {}) {
  gains.validate();
  channel.validate();
  if (!(tau0 > 0.0)) throw std::invalid_argument("verdict: tau0 must be positive");

  StabilityVerdict verdict;
  verdict.tolerance = tolerance;
  verdict.effective = effective_gain(gains.ka, channel);
  const double gamma = gains.gamma();

  // gamma > tau0*kp implies gamma > tau*kp for every tau in (0, tau0].
  verdict.internally_stable = internal_stability(tau0, gamma, gains.kp);
  verdict.analytic = quartic_conditions(verdict.effective.lo, verdict.effective.hi, gamma,
                                        tau0, gains.kp, gains.kv);

  // Sampled cross-check: 10 log-spaced lags in (tau0/10, tau0] crossed with
  // the interval endpoints and the channel-mean effective gain. The analytic
  // certificate, not these samples, carries the for-all-tau claim.
  const int tau_points = 10;
  std::vector<double> taus(tau_points);
  for (int i = 0; i < tau_points; ++i)
    taus[static_cast<std::size_t>(i)] =
        tau0 * std::pow(10.0, -1.0 + (i + 1) / static_cast<double>(tau_points));
  const double ktildes[] = {verdict.effective.lo, verdict.effective.value, verdict.effective.hi};

  verdict.max_sampled = 0.0;
  for (double tau : taus) {
    for (double kt : ktildes) {
      const auto tf = build_tf(gains, kt, tau);
      const auto h = hinf_norm(tf, grid);
      verdict.samples.push_back({kt, tau, h.value, h.omega});
      if (h.value > verdict.max_sampled) {
        verdict.max_sampled = h.value;
        verdict.worst_tau = tau;
        verdict.worst_ktilde = kt;
        verdict.worst_omega = h.omega;
      }
    }
  }

  if (!verdict.internally_stable || verdict.max_sampled > 1.0 + tolerance)
    verdict.classification = StabilityClass::unstable;
  else if (verdict.analytic.pass())
    verdict.classification = StabilityClass::certified;
  else
    verdict.classification = StabilityClass::uncertified;
  return verdict;
}

}  // namespace platoon
