#pragma once

#include <cmath>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <utility>
#include <vector>

namespace platoon {

namespace detail {
inline void require_rho(double rho) {
  if (!(rho > 1.0)) throw std::invalid_argument("synthesis: rho must exceed 1");
}
inline void require_tau0(double tau0) {
  if (!(tau0 > 0.0) || !std::isfinite(tau0))
    throw std::invalid_argument("synthesis: tau0 must be positive and finite");
}
}  // namespace detail

/// Admissible feedforward-gain range under worst-case channel statistics:
/// ka in (0, 1/(1 + 1/rho)) keeps the effective gain below 1 for every
/// realization. rho = +infinity (noiseless) gives the ideal bound 1.
inline double ka_upper_bound(double rho) {
  detail::require_rho(rho);
  return 1.0 / (1.0 + 1.0 / rho);
}

/// Robust time-headway lower bound
///
///   hw_lb(ka) = 2 tau0 (1 - (1 - 1/rho) ka) / (1 - (1 + 1/rho)^2 ka^2),
///
/// valid for ka in (0, ka_upper_bound(rho)); the denominator is positive on
/// that range. For rho = +infinity this reduces to 2 tau0 / (1 + ka).
inline double headway_lower_bound(double ka, double rho, double tau0) {
  detail::require_rho(rho);
  detail::require_tau0(tau0);
  const double ka_max = ka_upper_bound(rho);
  if (!(ka > 0.0) || !(ka < ka_max)) {
    std::ostringstream msg;
    msg << "synthesis: ka must lie in (0, " << ka_max << "), got " << ka;
    throw std::invalid_argument(msg.str());
  }
  const double inv = 1.0 / rho;
  // factored denominator: exact cancellation against the numerator as rho -> inf
  const double up = (1.0 + inv) * ka;
  return 2.0 * tau0 * (1.0 - (1.0 - inv) * ka) / ((1.0 - up) * (1.0 + up));
}

/// Minimizer of hw_lb over the admissible ka range and the corresponding
/// minimum headway bound:
///
///   ka*    = ((1 - 1/sqrt(rho)) / (1 + 1/sqrt(rho))) / (1 + 1/rho)
///   hw_lb* = tau0 (1 + 1/sqrt(rho))^2 / (1 + 1/rho)
///
/// For rho = +infinity: ka* = 1, hw_lb* = tau0.
struct OptimalHeadway {
  double ka_star = 0.0;
  double hw_lb_star = 0.0;
};

inline OptimalHeadway optimal_ka_headway(double rho, double tau0) {
  detail::require_rho(rho);
  detail::require_tau0(tau0);
  const double s = 1.0 / std::sqrt(rho);
  const double inv = 1.0 / rho;
  OptimalHeadway o;
  o.ka_star = ((1.0 - s) / (1.0 + s)) / (1.0 + inv);
  o.hw_lb_star = tau0 * (1.0 + s) * (1.0 + s) / (1.0 + inv);
  return o;
}

/// Admissible window for gamma = kv + hw*kp, worst-cased over the effective
/// gain interval:
///
///   sqrt(2 kp (1 - (1 - 1/rho) ka) + kv^2)  <=  gamma  <=  (1 - (1 + 1/rho)^2 ka^2) / (2 tau0).
///
/// An empty window (lower > upper) means no headway can place these
/// (kp, kv) inside the robust region.
struct GammaWindow {
  double gamma = 0.0;
  double lower = 0.0;
  double upper = 0.0;

  bool empty() const { return lower > upper; }
  bool pass() const { return !empty() && lower <= gamma && gamma <= upper; }
};

inline GammaWindow gamma_bounds(double ka, double rho, double tau0, double kp, double kv,
                                double hw) {
  detail::require_rho(rho);
  detail::require_tau0(tau0);
  if (!(kp > 0.0) || !(kv > 0.0) || !(hw > 0.0))
    throw std::invalid_argument("synthesis: kp, kv, hw must be positive");
  const double ka_max = ka_upper_bound(rho);
  if (!(ka > 0.0) || !(ka < ka_max))
    throw std::invalid_argument("synthesis: ka outside the admissible range");
  const double inv = 1.0 / rho;
  const double up = (1.0 + inv) * ka;
  GammaWindow w;
  w.gamma = kv + hw * kp;
  w.lower = std::sqrt(2.0 * kp * (1.0 - (1.0 - inv) * ka) + kv * kv);
  w.upper = (1.0 - up) * (1.0 + up) / (2.0 * tau0);
  return w;
}

/// Feasible (kp, kv) region S = S1 ∩ S2 for a chosen (ka, hw):
///
///   S1: kv/a1 + kp/b1 <= 1   with a1 = (1 - (1 + 1/rho)^2 ka^2)/(2 tau0), b1 = a1/hw
///   S2: kv/a2 + kp/b2 >= 1   with a2 = (1 - (1 - 1/rho) ka)/hw,          b2 = 2 a2/hw
///
/// plus kp > 0, kv > 0. Nonempty exactly when a1 > a2, i.e. hw > hw_lb(ka).
struct RegionParams {
  double a1 = 0.0, b1 = 0.0;  // 1/s, 1/s^2
  double a2 = 0.0, b2 = 0.0;

  bool nonempty() const { return a1 > a2; }

  bool contains(double kp, double kv) const {
    if (!(kp > 0.0) || !(kv > 0.0)) return false;
    return kv / a1 + kp / b1 <= 1.0 && kv / a2 + kp / b2 >= 1.0;
  }

  bool in_s1(double kp, double kv) const {
    return kp > 0.0 && kv > 0.0 && kv / a1 + kp / b1 <= 1.0;
  }
  bool in_s2(double kp, double kv) const {
    return kp > 0.0 && kv > 0.0 && kv / a2 + kp / b2 >= 1.0;
  }
};

inline RegionParams feasible_region(double ka, double rho, double tau0, double hw) {
  detail::require_rho(rho);
  detail::require_tau0(tau0);
  if (!(hw > 0.0)) throw std::invalid_argument("synthesis: hw must be positive");
  const double ka_max = ka_upper_bound(rho);
  if (!(ka > 0.0) || !(ka < ka_max))
    throw std::invalid_argument("synthesis: ka outside the admissible range");
  const double inv = 1.0 / rho;
  const double up = (1.0 + inv) * ka;
  RegionParams r;
  r.a1 = (1.0 - up) * (1.0 + up) / (2.0 * tau0);
  r.b1 = r.a1 / hw;
  r.a2 = (1.0 - (1.0 - inv) * ka) / hw;
  r.b2 = 2.0 * r.a2 / hw;
  return r;
}

/// A point in gain space.
struct GainPoint {
  double kp = 0.0;
  double kv = 0.0;
};

/// Corner polygon of S clipped to the box (0, kp_max] x (0, kv_max],
/// counterclockwise. Empty when the region misses the box. Intended for
/// plotting; membership queries should use RegionParams::contains.
inline std::vector<GainPoint> region_polygon(const RegionParams& r, double kp_max,
                                             double kv_max) {
  if (!(kp_max > 0.0) || !(kv_max > 0.0))
    throw std::invalid_argument("region polygon: box bounds must be positive");
  // Sutherland-Hodgman clip of the box against the two half-planes.
  using P = GainPoint;
  std::vector<P> poly{{0.0, 0.0}, {kp_max, 0.0}, {kp_max, kv_max}, {0.0, kv_max}};
  struct HalfPlane {
    double ckp, ckv, rhs;  // keep ckp*kp + ckv*kv <= rhs
  };
  const HalfPlane planes[] = {
      {1.0 / r.b1, 1.0 / r.a1, 1.0},    // S1
      {-1.0 / r.b2, -1.0 / r.a2, -1.0}  // S2 flipped to <=
  };
  for (const auto& h : planes) {
    std::vector<P> next;
    const std::size_t n = poly.size();
    for (std::size_t i = 0; i < n; ++i) {
      const P& cur = poly[i];
      const P& nxt = poly[(i + 1) % n];
      const double fc = h.ckp * cur.kp + h.ckv * cur.kv - h.rhs;
      const double fn = h.ckp * nxt.kp + h.ckv * nxt.kv - h.rhs;
      if (fc <= 0.0) next.push_back(cur);
      if ((fc < 0.0 && fn > 0.0) || (fc > 0.0 && fn < 0.0)) {
        const double t = fc / (fc - fn);
        next.push_back({cur.kp + t * (nxt.kp - cur.kp), cur.kv + t * (nxt.kv - cur.kv)});
      }
    }
    poly = std::move(next);
    if (poly.empty()) break;
  }
  return poly;
}

/// Internal stability of the spacing-error denominator tau s^3 + s^2 +
/// gamma s + kp. With all coefficients positive the Routh-Hurwitz criterion
/// reduces to gamma > tau*kp.
inline bool internal_stability(double tau, double gamma, double kp) {
  if (!(tau > 0.0) || !(gamma > 0.0) || !(kp > 0.0))
    throw std::invalid_argument("internal stability: tau, gamma, kp must be positive");
  return gamma > tau * kp;
}

/// One-call design summary: the admissible ka bound, the headway bound for a
/// chosen ka, the minimizing pair, and (when hw is given) the feasible
/// (kp, kv) region.
struct SynthesisResult {
  double rho = 0.0;
  double tau0 = 0.0;
  double ka_max = 0.0;
  OptimalHeadway optimal;
  std::optional<double> ka;
  std::optional<double> hw_lb;
  std::optional<double> hw;
  std::optional<RegionParams> region;
};

inline SynthesisResult synthesize(double rho, double tau0, std::optional<double> ka,
                                  std::optional<double> hw = std::nullopt) {
  SynthesisResult result;
  result.rho = rho;
  result.tau0 = tau0;
  result.ka_max = ka_upper_bound(rho);
  result.optimal = optimal_ka_headway(rho, tau0);
  if (ka) {
    result.ka = ka;
    result.hw_lb = headway_lower_bound(*ka, rho, tau0);
    if (hw) {
      result.hw = hw;
      result.region = feasible_region(*ka, rho, tau0, *hw);
    }
  }
  return result;
}

}  // namespace platoon
