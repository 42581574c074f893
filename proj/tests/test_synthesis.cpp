#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <random>

#include "platoon/noise_channel.hpp"
#include "platoon/synthesis.hpp"

using namespace platoon;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

double rnd(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}
}  // namespace

TEST_CASE("ka upper bound") {
  CHECK(ka_upper_bound(5.0) == Catch::Approx(0.83333333333333333).epsilon(1e-14));
  CHECK(ka_upper_bound(kInf) == 1.0);
  CHECK(ka_upper_bound(1.0 + 1e-9) == Catch::Approx(0.5).epsilon(1e-8));
  CHECK_THROWS_AS(ka_upper_bound(1.0), std::invalid_argument);
  CHECK_THROWS_AS(ka_upper_bound(0.5), std::invalid_argument);
}

TEST_CASE("headway lower bound") {
  SECTION("reference point") {
    CHECK(headway_lower_bound(0.5, 5.0, 0.5) == Catch::Approx(0.9375).margin(1e-15));
  }
  SECTION("noiseless reduction to 2*tau0/(1+ka)") {
    CHECK(headway_lower_bound(0.5, kInf, 0.5) ==
          Catch::Approx(0.66666666666666667).epsilon(1e-15));
    std::mt19937_64 rng(11);
    for (int i = 0; i < 1000; ++i) {
      const double ka = rnd(rng, 1e-6, 1.0 - 1e-6);
      const double tau0 = rnd(rng, 0.05, 2.0);
      const double expect = 2.0 * tau0 / (1.0 + ka);
      CHECK(headway_lower_bound(ka, kInf, tau0) == Catch::Approx(expect).epsilon(1e-14));
    }
  }
  SECTION("small ka limit approaches 2*tau0") {
    CHECK(headway_lower_bound(1e-12, 5.0, 0.5) == Catch::Approx(1.0).epsilon(1e-9));
  }
  SECTION("out-of-range ka is rejected with the bound in the message") {
    CHECK_THROWS_WITH(headway_lower_bound(0.9, 5.0, 0.5),
                      Catch::Matchers::ContainsSubstring("0.833333"));
    CHECK_THROWS_AS(headway_lower_bound(-0.1, 5.0, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(headway_lower_bound(0.5, 5.0, 0.0), std::invalid_argument);
  }
}

TEST_CASE("optimal ka and headway bound") {
  SECTION("rho = 5 reference values") {
    const auto opt = optimal_ka_headway(5.0, 0.5);
    CHECK(opt.ka_star == Catch::Approx(0.31830500937508763).epsilon(1e-15));
    CHECK(opt.hw_lb_star == Catch::Approx(0.87267799624996495).epsilon(1e-15));
  }
  SECTION("noiseless limit") {
    const auto opt = optimal_ka_headway(kInf, 0.5);
    CHECK(opt.ka_star == 1.0);
    CHECK(opt.hw_lb_star == 0.5);
  }
  SECTION("definitional identity hw_lb(ka*) == hw_lb*") {
    std::mt19937_64 rng(23);
    for (int i = 0; i < 500; ++i) {
      const double rho = rnd(rng, 1.01, 200.0);
      const double tau0 = rnd(rng, 0.05, 2.0);
      const auto opt = optimal_ka_headway(rho, tau0);
      CHECK(opt.ka_star < ka_upper_bound(rho));
      CHECK(headway_lower_bound(opt.ka_star, rho, tau0) ==
            Catch::Approx(opt.hw_lb_star).epsilon(1e-12));
      CHECK(opt.hw_lb_star >= tau0);
    }
  }
}

TEST_CASE("hw_lb is unimodal with minimum at ka*") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 1000; ++trial) {
    const double rho = rnd(rng, 1.01, 100.0);
    const double tau0 = rnd(rng, 0.05, 2.0);
    const auto opt = optimal_ka_headway(rho, tau0);
    const double ka_max = ka_upper_bound(rho);
    // minimizer optimality on random admissible gains
    for (int i = 0; i < 8; ++i) {
      const double ka = rnd(rng, 1e-9, 1.0) * (ka_max - 2e-9) + 1e-9;
      REQUIRE(headway_lower_bound(ka, rho, tau0) >= opt.hw_lb_star - 1e-12);
    }
  }
  // dense monotonicity sweep on each side of the minimizer
  const double rho = 5.0, tau0 = 0.5;
  const auto opt = optimal_ka_headway(rho, tau0);
  const double ka_max = ka_upper_bound(rho);
  double prev = headway_lower_bound(1e-9, rho, tau0);
  for (int i = 1; i <= 1000; ++i) {
    const double ka = 1e-9 + (opt.ka_star - 2e-9) * i / 1000.0;
    const double cur = headway_lower_bound(ka, rho, tau0);
    REQUIRE(cur < prev);
    prev = cur;
  }
  prev = headway_lower_bound(opt.ka_star, rho, tau0);
  for (int i = 1; i <= 1000; ++i) {
    const double ka = opt.ka_star + (ka_max - 1e-9 - opt.ka_star) * i / 1000.0;
    const double cur = headway_lower_bound(ka, rho, tau0);
    REQUIRE(cur > prev);
    prev = cur;
  }
}

TEST_CASE("gamma bounds") {
  SECTION("reference gain set inside the window") {
    const auto w = gamma_bounds(0.5, 5.0, 0.5, 0.009, 0.63, 0.95);
    CHECK(w.gamma == Catch::Approx(0.63855).margin(1e-15));
    CHECK(w.upper == Catch::Approx(0.64).margin(1e-15));
    CHECK(w.lower == Catch::Approx(0.63851389961378288).epsilon(1e-14));
    CHECK(w.pass());
    CHECK_FALSE(w.empty());
  }
  SECTION("kp -> 0 collapses the lower bound onto kv") {
    const auto w = gamma_bounds(0.5, 5.0, 0.5, 1e-15, 0.63, 0.95);
    CHECK(w.lower == Catch::Approx(0.63).epsilon(1e-12));
  }
  SECTION("window empty when kv alone exceeds the upper bound") {
    const auto w = gamma_bounds(0.5, 5.0, 0.5, 0.009, 0.70, 0.65);
    CHECK(w.empty());
    CHECK_FALSE(w.pass());
  }
  SECTION("headway below the bound fails for region-corner gains") {
    // hw = 0.5 < 0.9375: the region is empty, so the corner pick fails
    const auto region = feasible_region(0.5, 5.0, 0.5, 0.5);
    REQUIRE_FALSE(region.nonempty());
    const double kv = 0.5 * (region.a1 + region.a2);
    const double kp = 0.1 * region.b1;
    const auto w = gamma_bounds(0.5, 5.0, 0.5, kp, kv, 0.5);
    CHECK_FALSE(w.pass());
  }
}

TEST_CASE("feasible region reference parameters") {
  SECTION("ka = 0.5, hw = 0.95") {
    const auto r = feasible_region(0.5, 5.0, 0.5, 0.95);
    CHECK(r.a1 == Catch::Approx(0.64).margin(1e-15));
    CHECK(r.b1 == Catch::Approx(0.67368421052631579).epsilon(1e-14));
    CHECK(r.a2 == Catch::Approx(0.63157894736842105).epsilon(1e-14));
    CHECK(r.b2 == Catch::Approx(1.3296398891966759).epsilon(1e-14));
    CHECK(r.nonempty());
    CHECK(r.contains(0.009, 0.63));
    // membership sums recomputed by direct arithmetic
    CHECK(0.63 / r.a1 + 0.009 / r.b1 == Catch::Approx(0.997734375).epsilon(1e-12));
    CHECK(0.63 / r.a2 + 0.009 / r.b2 == Catch::Approx(1.00426875).epsilon(1e-12));
    CHECK_FALSE(r.contains(0.009, 0.65));   // above the S1 line
    CHECK_FALSE(r.contains(0.0001, 0.62));  // below the S2 line
    CHECK_FALSE(r.contains(-0.009, 0.63));  // positivity
  }
  SECTION("ka = ka*, hw = 0.88") {
    const auto r = feasible_region(0.31830500937508763, 5.0, 0.5, 0.88);
    CHECK(r.a1 == Catch::Approx(0.85410196624968454).epsilon(1e-14));
    CHECK(r.b1 == Catch::Approx(0.97057041619282335).epsilon(1e-14));
    CHECK(r.a2 == Catch::Approx(0.84699544602264761).epsilon(1e-14));
    CHECK(r.b2 == Catch::Approx(1.9249896500514718).epsilon(1e-14));
    CHECK(r.contains(0.003, 0.85));
    CHECK(0.85 / r.a1 + 0.003 / r.b1 == Catch::Approx(0.99828830010062621).epsilon(1e-12));
    CHECK(0.85 / r.a2 + 0.003 / r.b2 == Catch::Approx(1.0051057582395039).epsilon(1e-12));
  }
  SECTION("at the exact bound the region degenerates") {
    const double hw_lb = headway_lower_bound(0.5, 5.0, 0.5);
    const auto at = feasible_region(0.5, 5.0, 0.5, hw_lb);
    CHECK(at.a1 / at.a2 == Catch::Approx(1.0).epsilon(1e-12));
    const auto below = feasible_region(0.5, 5.0, 0.5, hw_lb * (1.0 - 1e-9));
    CHECK_FALSE(below.nonempty());
    const auto above = feasible_region(0.5, 5.0, 0.5, hw_lb * (1.0 + 1e-9));
    CHECK(above.nonempty());
  }
}

TEST_CASE("region scalars satisfy their defining identities") {
  std::mt19937_64 rng(47);
  for (int i = 0; i < 1000; ++i) {
    const double rho = rnd(rng, 1.01, 100.0);
    const double tau0 = rnd(rng, 0.05, 2.0);
    const double ka = rnd(rng, 1e-6, 1.0) * ka_upper_bound(rho) * (1.0 - 1e-9);
    const double hw_lb = headway_lower_bound(ka, rho, tau0);
    const double hw = hw_lb * rnd(rng, 0.5, 2.0);
    const auto r = feasible_region(ka, rho, tau0, hw);
    REQUIRE(r.b1 == Catch::Approx(r.a1 / hw).epsilon(1e-14));
    REQUIRE(r.b2 == Catch::Approx(2.0 * r.a2 / hw).epsilon(1e-14));
    // nonempty exactly when hw exceeds the headway bound
    if (std::abs(hw - hw_lb) > 1e-9 * hw_lb)
      REQUIRE(r.nonempty() == (hw > hw_lb));
  }
}

TEST_CASE("region membership is equivalent to the gamma window") {
  std::mt19937_64 rng(59);
  int inside_seen = 0;
  for (int i = 0; i < 2000; ++i) {
    const double rho = rnd(rng, 1.05, 50.0);
    const double tau0 = rnd(rng, 0.05, 1.5);
    const double ka = rnd(rng, 1e-3, 1.0) * ka_upper_bound(rho) * (1.0 - 1e-6);
    const double hw = rnd(rng, 0.3, 3.0);
    const auto r = feasible_region(ka, rho, tau0, hw);
    const double kp = rnd(rng, 1e-4, 1.5);
    const double kv = rnd(rng, 1e-4, 1.5);
    const double s1 = kv / r.a1 + kp / r.b1;
    const double s2 = kv / r.a2 + kp / r.b2;
    if (std::abs(s1 - 1.0) < 1e-12 || std::abs(s2 - 1.0) < 1e-12) continue;  // knife edge
    const auto w = gamma_bounds(ka, rho, tau0, kp, kv, hw);
    REQUIRE(r.contains(kp, kv) == w.pass());
    if (r.contains(kp, kv)) ++inside_seen;
  }
  CHECK(inside_seen > 20);  // the draw box actually exercises both outcomes
}

TEST_CASE("region polygon") {
  const auto r = feasible_region(0.5, 5.0, 0.5, 0.95);
  SECTION("vertices of a nonempty region satisfy both constraints") {
    const auto poly = region_polygon(r, 1.5, 0.7);
    REQUIRE(poly.size() >= 3);
    for (const auto& p : poly) {
      CHECK(p.kv / r.a1 + p.kp / r.b1 <= 1.0 + 1e-9);
      CHECK(p.kv / r.a2 + p.kp / r.b2 >= 1.0 - 1e-9);
    }
  }
  SECTION("empty region gives an empty polygon") {
    const auto empty = feasible_region(0.5, 5.0, 0.5, 0.5);
    CHECK(region_polygon(empty, 1.5, 0.7).empty());
  }
}

TEST_CASE("internal stability condition") {
  CHECK(internal_stability(0.5, 0.63855, 0.009));
  CHECK_FALSE(internal_stability(0.5, 0.5 * 0.009, 0.009));  // marginal boundary
  CHECK_THROWS_AS(internal_stability(-0.5, 0.6, 0.009), std::invalid_argument);
  CHECK_THROWS_AS(internal_stability(0.5, 0.0, 0.009), std::invalid_argument);
  // any hw >= hw_lb* with positive gains: gamma > hw*kp >= tau0*kp
  std::mt19937_64 rng(61);
  for (int i = 0; i < 200; ++i) {
    const double rho = rnd(rng, 1.05, 50.0);
    const double tau0 = rnd(rng, 0.05, 1.5);
    const auto opt = optimal_ka_headway(rho, tau0);
    const double hw = opt.hw_lb_star * rnd(rng, 1.0, 2.0);
    const double kp = rnd(rng, 1e-4, 1.0);
    const double kv = rnd(rng, 1e-4, 1.0);
    const double gamma = kv + hw * kp;
    REQUIRE(internal_stability(tau0, gamma, kp));
  }
}

TEST_CASE("synthesize bundles the design quantities") {
  const auto result = synthesize(5.0, 0.5, 0.5, 0.95);
  CHECK(result.ka_max == Catch::Approx(0.83333333333333333));
  REQUIRE(result.hw_lb.has_value());
  CHECK(*result.hw_lb == Catch::Approx(0.9375));
  CHECK(result.optimal.ka_star == Catch::Approx(0.31830500937508763));
  REQUIRE(result.region.has_value());
  CHECK(result.region->contains(0.009, 0.63));
  const auto bare = synthesize(5.0, 0.5, std::nullopt);
  CHECK_FALSE(bare.hw_lb.has_value());
  CHECK_FALSE(bare.region.has_value());
}
