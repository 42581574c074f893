#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace platoon {

enum class LeadProfileKind { constant, windowed_sine, table };

/// Acceleration input applied to the lead vehicle. The windowed sine is
/// A*sin(f*(t - start)) inside the open window (start, end) and zero outside;
/// the constant kind uses the same window; the table kind interpolates
/// linearly between samples and is zero outside the tabulated range.
struct LeadProfile {
  LeadProfileKind kind = LeadProfileKind::windowed_sine;
  double amplitude = 0.5;  // m/s^2
  double frequency = 0.1;  // rad/s
  double start = 10.0;     // s
  double end = 10.0 + 20.0 * 3.14159265358979323846;  // s
  std::vector<double> table_time;   // strictly increasing, kind == table
  std::vector<double> table_accel;

  void validate() const {
    if (!std::isfinite(amplitude)) throw std::invalid_argument("lead profile: amplitude must be finite");
    if (kind == LeadProfileKind::table) {
      if (table_time.size() != table_accel.size() || table_time.empty())
        throw std::invalid_argument("lead profile: table columns must be nonempty and equal length");
      for (std::size_t i = 1; i < table_time.size(); ++i)
        if (!(table_time[i] > table_time[i - 1]))
          throw std::invalid_argument("lead profile: table times must be strictly increasing");
    } else {
      if (!(end > start)) throw std::invalid_argument("lead profile: end must exceed start");
    }
  }

  static LeadProfile silent() {
    LeadProfile p;
    p.kind = LeadProfileKind::constant;
    p.amplitude = 0.0;
    p.start = 0.0;
    p.end = 1.0;
    return p;
  }
};

inline double lead_acceleration(const LeadProfile& p, double t) {
  switch (p.kind) {
    case LeadProfileKind::constant:
      return (t > p.start && t < p.end) ? p.amplitude : 0.0;
    case LeadProfileKind::windowed_sine:
      return (t > p.start && t < p.end)
                 ? p.amplitude * std::sin(p.frequency * (t - p.start))
                 : 0.0;
    case LeadProfileKind::table: {
      const auto& ts = p.table_time;
      const auto& as = p.table_accel;
      if (t <= ts.front() || t >= ts.back()) {
        if (t == ts.front()) return as.front();
        if (t == ts.back()) return as.back();
        return 0.0;
      }
      auto it = std::lower_bound(ts.begin(), ts.end(), t);
      std::size_t hi = static_cast<std::size_t>(it - ts.begin());
      std::size_t lo = hi - 1;
      double u = (t - ts[lo]) / (ts[hi] - ts[lo]);
      return as[lo] + u * (as[hi] - as[lo]);
    }
  }
  return 0.0;
}

}  // namespace platoon
