#include <catch2/catch_amalgamated.hpp>

#include "platoon/core.hpp"

using namespace platoon;

namespace {

// Hand-built trajectory with constant states, no simulator involved.
Trajectory constant_trajectory(const std::vector<double>& xs, const std::vector<double>& vs,
                               double d, double hw, std::size_t samples = 4) {
  Trajectory t;
  t.standstill_spacing = d;
  t.headway = hw;
  t.time.resize(samples);
  for (std::size_t k = 0; k < samples; ++k) t.time[k] = 0.1 * static_cast<double>(k);
  const std::size_t n = xs.size();
  t.x.assign(n, {});
  t.v.assign(n, {});
  t.a.assign(n, std::vector<double>(samples, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    t.x[i].assign(samples, xs[i]);
    t.v[i].assign(samples, vs[i]);
  }
  t.gap_error.assign(n - 1, std::vector<double>(samples, 0.0));
  t.delta.assign(n - 1, std::vector<double>(samples, 0.0));
  t.length.assign(samples, xs.front() - xs.back());
  return t;
}

}  // namespace

TEST_CASE("spacing errors at the headway equilibrium vanish") {
  const double d = 5.0, hw = 0.95, v0 = 20.0;
  const double gap = d + hw * v0;
  std::vector<double> xs{0.0, -gap, -2 * gap, -3 * gap};
  std::vector<double> vs(4, v0);
  const auto traj = constant_trajectory(xs, vs, d, hw);
  const auto delta = spacing_errors(traj, hw);
  REQUIRE(delta.size() == 3);
  for (const auto& series : delta)
    for (double val : series) CHECK(std::abs(val) < 1e-12);
}

TEST_CASE("spacing errors of two stationary vehicles at gap d vanish") {
  const auto traj = constant_trajectory({5.0, 0.0}, {0.0, 0.0}, 5.0, 0.8);
  const auto delta = spacing_errors(traj, 0.8);
  for (double val : delta[0]) CHECK(val == 0.0);
}

TEST_CASE("spacing error from direct arithmetic") {
  // x0=100, x1=80, d=5, v1=10, hw=0.95 -> delta_1 = 80-100+5+9.5 = -5.5
  const auto traj = constant_trajectory({100.0, 80.0}, {0.0, 10.0}, 5.0, 0.95);
  const auto delta = spacing_errors(traj, 0.95);
  CHECK(delta[0][0] == Catch::Approx(-5.5).margin(1e-14));
}

TEST_CASE("spacing errors reject mismatched series lengths") {
  auto traj = constant_trajectory({10.0, 4.0}, {0.0, 0.0}, 5.0, 1.0);
  traj.v[1].pop_back();
  CHECK_THROWS_AS(spacing_errors(traj, 1.0), std::invalid_argument);
}

TEST_CASE("platoon length") {
  SECTION("two vehicles") {
    const auto traj = constant_trajectory({10.0, 4.0}, {0.0, 0.0}, 5.0, 1.0);
    const auto len = platoon_length(traj);
    for (double l : len) CHECK(l == Catch::Approx(6.0));
  }
  SECTION("equilibrium length is N*(d + hw*v0)") {
    const double d = 5.0, hw = 0.95, v0 = 20.0;
    const double gap = d + hw * v0;
    const int n = 12;
    std::vector<double> xs, vs;
    for (int i = 0; i <= n; ++i) {
      xs.push_back(-i * gap);
      vs.push_back(v0);
    }
    const auto traj = constant_trajectory(xs, vs, d, hw);
    const auto len = platoon_length(traj);
    for (double l : len) CHECK(l == Catch::Approx(n * gap).epsilon(1e-12));
  }
}

TEST_CASE("amplification ratios") {
  std::vector<double> base{0.0, 1.0, -2.0, 0.5};
  SECTION("identical series give ratio 1") {
    const auto rep = amplification_ratios({base, base});
    REQUIRE(rep.ratio.size() == 1);
    REQUIRE(rep.ratio[0].has_value());
    CHECK(*rep.ratio[0] == Catch::Approx(1.0));
    CHECK(rep.string_stable(1e-6));
  }
  SECTION("halved series gives ratio 0.5") {
    std::vector<double> half;
    for (double v : base) half.push_back(0.5 * v);
    const auto rep = amplification_ratios({base, half});
    CHECK(*rep.ratio[0] == Catch::Approx(0.5));
  }
  SECTION("zero upstream signal reports an undefined marker") {
    std::vector<double> zero(base.size(), 0.0);
    const auto rep = amplification_ratios({zero, base});
    REQUIRE_FALSE(rep.ratio[0].has_value());
    CHECK_FALSE(rep.max_ratio().has_value());
    CHECK(rep.string_stable(1e-6));  // vacuous
  }
  SECTION("growth is flagged") {
    std::vector<double> grown;
    for (double v : base) grown.push_back(1.01 * v);
    const auto rep = amplification_ratios({base, grown});
    CHECK_FALSE(rep.string_stable(1e-6));
    CHECK(rep.string_stable(2e-2));
  }
  SECTION("mismatched lengths rejected") {
    std::vector<double> shorter(base.begin(), base.end() - 1);
    CHECK_THROWS_AS(amplification_ratios({base, shorter}), std::invalid_argument);
  }
}

TEST_CASE("gain set derives gamma and validates") {
  GainSet g{0.5, 0.63, 0.009, 0.95};
  CHECK(g.gamma() == Catch::Approx(0.63855).margin(1e-15));
  CHECK_NOTHROW(g.validate());
  g.kp = 0.0;
  CHECK_THROWS_AS(g.validate(), std::invalid_argument);
}

TEST_CASE("platoon config invariants") {
  PlatoonConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  SECTION("dt must resolve the actuator lag") {
    cfg.dt = cfg.tau / 10.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  }
  SECTION("tau bounded by tau0") {
    cfg.tau = 0.6;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  }
}
