#pragma once

#include <charconv>
#include <ostream>
#include <string>
#include <vector>

#include "platoon/core.hpp"
#include "platoon/simulator.hpp"
#include "platoon/stability_analysis.hpp"
#include "platoon/synthesis.hpp"

namespace platoon::csv {

/// Shortest round-trippable decimal rendering; CSV output must be locale
/// independent ('.' decimal point, LF line endings).
inline void put(std::ostream& os, double value) {
  char buf[32];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
  os.write(buf, end - buf);
  (void)ec;
}

/// Header: t,x_0,v_0,a_0,...,x_N,v_N,a_N,delta_1,...,delta_N,length
inline void write_trajectory(std::ostream& os, const Trajectory& traj) {
  const std::size_t vehicles = traj.vehicles();
  os << 't';
  for (std::size_t i = 0; i < vehicles; ++i)
    os << ",x_" << i << ",v_" << i << ",a_" << i;
  for (std::size_t i = 1; i < vehicles; ++i) os << ",delta_" << i;
  os << ",length\n";
  for (std::size_t k = 0; k < traj.samples(); ++k) {
    put(os, traj.time[k]);
    for (std::size_t i = 0; i < vehicles; ++i) {
      os << ',';
      put(os, traj.x[i][k]);
      os << ',';
      put(os, traj.v[i][k]);
      os << ',';
      put(os, traj.a[i][k]);
    }
    for (std::size_t i = 1; i < vehicles; ++i) {
      os << ',';
      put(os, traj.delta[i - 1][k]);
    }
    os << ',';
    put(os, traj.length[k]);
    os << '\n';
  }
}

/// Header: kp,kv,in_S1,in_S2,in_S over an inclusive linear grid. An empty
/// region is flagged with a marker line after the header.
inline void write_region_grid(std::ostream& os, const RegionParams& region, double kp_min,
                              double kp_max, int kp_count, double kv_min, double kv_max,
                              int kv_count) {
  os << "kp,kv,in_S1,in_S2,in_S\n";
  if (!region.nonempty()) os << "# region empty: hw <= hw_lb(ka)\n";
  for (int i = 0; i < kp_count; ++i) {
    const double kp =
        kp_count == 1 ? kp_min : kp_min + (kp_max - kp_min) * i / (kp_count - 1);
    for (int j = 0; j < kv_count; ++j) {
      const double kv =
          kv_count == 1 ? kv_min : kv_min + (kv_max - kv_min) * j / (kv_count - 1);
      const bool s1 = region.in_s1(kp, kv);
      const bool s2 = region.in_s2(kp, kv);
      put(os, kp);
      os << ',';
      put(os, kv);
      os << ',' << (s1 ? 1 : 0) << ',' << (s2 ? 1 : 0) << ',' << ((s1 && s2) ? 1 : 0) << '\n';
    }
  }
}

/// Header: kp,kv — corner polygon of the feasible region clipped to a box.
inline void write_region_polygon(std::ostream& os, const std::vector<GainPoint>& polygon) {
  os << "kp,kv\n";
  for (const auto& p : polygon) {
    put(os, p.kp);
    os << ',';
    put(os, p.kv);
    os << '\n';
  }
}

/// Header: omega,magnitude over a log-spaced frequency grid.
inline void write_frequency_response(std::ostream& os, const ErrorPropagationTF& tf,
                                     double omega_min, double omega_max, int points) {
  os << "omega,magnitude\n";
  for (int i = 0; i < points; ++i) {
    const double w = points == 1
                         ? omega_min
                         : omega_min * std::pow(omega_max / omega_min,
                                                i / static_cast<double>(points - 1));
    put(os, w);
    os << ',';
    put(os, magnitude(tf, w));
    os << '\n';
  }
}

/// Header: t,noise,communicated — replayed noisy link signal.
inline void write_communicated_trace(std::ostream& os, const CommunicatedTrace& trace) {
  os << "t,noise,communicated\n";
  for (std::size_t k = 0; k < trace.time.size(); ++k) {
    put(os, trace.time[k]);
    os << ',';
    put(os, trace.noise[k]);
    os << ',';
    put(os, trace.communicated[k]);
    os << '\n';
  }
}

/// Header: t,delta_1_mean,delta_1_halfwidth,...,delta_N_mean,delta_N_halfwidth
inline void write_montecarlo_bands(std::ostream& os, const MonteCarloSummary& mc) {
  os << 't';
  for (std::size_t i = 1; i <= mc.mean_delta.size(); ++i)
    os << ",delta_" << i << "_mean,delta_" << i << "_halfwidth";
  os << '\n';
  for (std::size_t k = 0; k < mc.time.size(); ++k) {
    put(os, mc.time[k]);
    for (std::size_t i = 0; i < mc.mean_delta.size(); ++i) {
      os << ',';
      put(os, mc.mean_delta[i][k]);
      os << ',';
      put(os, mc.halfwidth_delta[i][k]);
    }
    os << '\n';
  }
}

/// Mean state trajectory of a Monte-Carlo batch in the trajectory layout.
inline Trajectory mean_trajectory(const MonteCarloSummary& mc, double standstill_spacing,
                                  double headway) {
  Trajectory traj;
  traj.time = mc.time;
  traj.x = mc.mean_x;
  traj.v = mc.mean_v;
  traj.a = mc.mean_a;
  traj.standstill_spacing = standstill_spacing;
  traj.headway = headway;
  const std::size_t vehicles = traj.x.size();
  traj.gap_error.assign(vehicles - 1, std::vector<double>(traj.time.size()));
  traj.delta = mc.mean_delta;
  traj.length.resize(traj.time.size());
  for (std::size_t k = 0; k < traj.time.size(); ++k) {
    for (std::size_t i = 1; i < vehicles; ++i)
      traj.gap_error[i - 1][k] = traj.x[i][k] - traj.x[i - 1][k] + standstill_spacing;
    traj.length[k] = traj.x[0][k] - traj.x[vehicles - 1][k];
  }
  return traj;
}

}  // namespace platoon::csv
