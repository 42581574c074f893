#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "platoon/stability_analysis.hpp"

using namespace platoon;

namespace {

const std::vector<double> kBitMeans{0.8055, 0.5767, 0.1829, 0.2399, 0.8865, 0.0287,
                                    0.4899, 0.1679, 0.9787, 0.7127, 0.5005, 0.4711,
                                    0.0596, 0.6820, 0.0424, 0.0714};

ChannelSpec sixteen_bit_channel() {
  ChannelSpec spec;
  spec.rho = 5.0;
  spec.bit_mean = kBitMeans;
  return spec;
}

const GainSet kStable{0.5, 0.63, 0.009, 0.95};
const GainSet kUnstable{0.5, 0.63, 0.009, 0.65};
const GainSet kOptimal{0.31830500937508763, 0.85, 0.003, 0.88};

double rnd(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

}  // namespace

TEST_CASE("transfer function assembly") {
  const auto tf = build_tf(kStable, 0.6, 0.5);
  CHECK(tf.tau == 0.5);
  CHECK(tf.gamma == Catch::Approx(0.63855).margin(1e-15));
  CHECK(tf.kp == 0.009);
  CHECK(tf.kv == 0.63);
  CHECK(tf.ktilde_a == 0.6);
  SECTION("DC gain is one for any construction") {
    std::mt19937_64 rng(3);
    for (int i = 0; i < 100; ++i) {
      GainSet g{rnd(rng, 0.01, 0.9), rnd(rng, 0.01, 1.5), rnd(rng, 1e-4, 0.5),
                rnd(rng, 0.1, 2.0)};
      const auto t = build_tf(g, rnd(rng, 0.01, 1.2), rnd(rng, 0.05, 1.0));
      CHECK(magnitude(t, 0.0) == 1.0);
    }
  }
  SECTION("rejects nonpositive inputs") {
    CHECK_THROWS_AS(build_tf(kStable, 0.0, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(build_tf(kStable, 0.6, 0.0), std::invalid_argument);
  }
}

TEST_CASE("magnitude asymptotics") {
  const auto tf = build_tf(kStable, 0.52408684387207031, 0.5);
  SECTION("relative degree one rolloff") {
    for (double omega : {1e4, 1e5, 1e6}) {
      const double expect = tf.ktilde_a / (tf.tau * omega);
      CHECK(magnitude(tf, omega) == Catch::Approx(expect).epsilon(1e-2));
    }
  }
  SECTION("negative frequency rejected") {
    CHECK_THROWS_AS(magnitude(tf, -0.1), std::invalid_argument);
  }
}

TEST_CASE("hinf norm") {
  SECTION("DC-dominant response peaks at zero") {
    GainSet g{0.05, 0.5, 0.001, 2.0};
    const auto tf = build_tf(g, 0.05, 0.5);
    const auto h = hinf_norm(tf);
    CHECK(h.value == 1.0);
    CHECK(h.omega == 0.0);
    CHECK_FALSE(h.edge_warning);
  }
  SECTION("stable reference set stays at one for all interval gains") {
    for (double kt : {0.4, 0.52408684387207031, 0.6}) {
      const auto h = hinf_norm(build_tf(kStable, kt, 0.5));
      CHECK(h.value <= 1.0 + 1e-6);
    }
  }
  SECTION("short headway peaks above one at the channel mean") {
    const auto h = hinf_norm(build_tf(kUnstable, 0.52408684387207031, 0.5));
    CHECK(h.value == Catch::Approx(1.00116371777).epsilon(1e-8));
    CHECK(h.omega == Catch::Approx(0.037938577).epsilon(1e-4));
    // at the lower interval endpoint the peak is higher still
    const auto hlo = hinf_norm(build_tf(kUnstable, 0.4, 0.5));
    CHECK(hlo.value == Catch::Approx(1.00349991673).epsilon(1e-8));
    // the upper endpoint happens to stay flat
    const auto hhi = hinf_norm(build_tf(kUnstable, 0.6, 0.5));
    CHECK(hhi.value == 1.0);
  }
  SECTION("halving the refinement tolerance moves the result less than the tolerance") {
    FrequencyGrid coarse;
    coarse.refine_rel_tol = 1e-8;
    FrequencyGrid fine;
    fine.refine_rel_tol = 5e-9;
    const auto tf = build_tf(kUnstable, 0.52408684387207031, 0.5);
    const double a = hinf_norm(tf, coarse).value;
    const double b = hinf_norm(tf, fine).value;
    CHECK(std::abs(a - b) < 1e-8);
  }
}

TEST_CASE("quartic certificate margins") {
  SECTION("stable reference set") {
    const auto q = quartic_conditions(0.4, 0.6, kStable.gamma(), 0.5, kStable.kp, kStable.kv);
    CHECK(q.pass());
    CHECK(q.coefficient_margin == Catch::Approx(0.00145).margin(1e-12));
    CHECK(q.constant_margin == Catch::Approx(4.61025e-5).margin(1e-12));
  }
  SECTION("optimal reference set") {
    const auto q = quartic_conditions(0.2546440075000701, 0.38196601125010515,
                                      kOptimal.gamma(), 0.5, kOptimal.kp, kOptimal.kv);
    CHECK(q.pass());
    CHECK(q.coefficient_margin == Catch::Approx(0.0014619662496845446).margin(1e-12));
    CHECK(q.constant_margin == Catch::Approx(2.2833645000420607e-5).margin(1e-12));
  }
  SECTION("gamma just above the coefficient bound fails") {
    const double bound = (1.0 - 0.6 * 0.6) / (2.0 * 0.5);
    const auto q = quartic_conditions(0.4, 0.6, bound + 1e-9, 0.5, 0.009, 0.63);
    CHECK_FALSE(q.coefficient_ok);
  }
  SECTION("vanishing kp reduces the constant condition to gamma >= kv") {
    const double kv = 1.0, hw = 1.3, kp = 1e-15;
    const double gamma = kv + hw * kp;
    const auto q = quartic_conditions(0.3, 0.8, gamma, 0.5, kp, kv);
    CHECK(q.constant_ok);
    CHECK(std::abs(q.constant_margin) < 1e-14);
  }
  SECTION("the coefficient condition at tau0 dominates every smaller lag") {
    std::mt19937_64 rng(5);
    for (int i = 0; i < 200; ++i) {
      const double tau0 = rnd(rng, 0.1, 1.0);
      const double gamma = rnd(rng, 0.1, 1.0);
      const double kt = rnd(rng, 0.1, 0.9);
      const auto margin_at = [&](double tau) { return 1.0 - kt * kt - 2.0 * tau * gamma; };
      if (margin_at(tau0) >= 0.0)
        for (int j = 1; j <= 10; ++j) REQUIRE(margin_at(tau0 * j / 10.0) >= 0.0);
    }
  }
}

TEST_CASE("analytic certificate is sound against sampled norms") {
  std::mt19937_64 rng(71);
  int certified_draws = 0;
  while (certified_draws < 10) {
    const double rho = rnd(rng, 1.5, 30.0);
    const double tau0 = rnd(rng, 0.1, 1.0);
    const double ka = rnd(rng, 0.05, 0.95) * ka_upper_bound(rho);
    const double hw_lb = headway_lower_bound(ka, rho, tau0);
    const double hw = hw_lb * rnd(rng, 1.02, 1.6);
    const auto region = feasible_region(ka, rho, tau0, hw);
    if (!region.nonempty()) continue;
    // strict interior pick
    const double kv = 0.5 * (region.a1 + region.a2);
    const double kp = 0.25 * (region.a1 - region.a2) / hw;
    if (!(kp > 0.0)) continue;
    GainSet gains{ka, kv, kp, hw};
    const double lo = (1.0 - 1.0 / rho) * ka, hi = (1.0 + 1.0 / rho) * ka;
    const auto q = quartic_conditions(lo, hi, gains.gamma(), tau0, kp, kv);
    REQUIRE(q.pass());  // region membership and the certificate are the same inequalities
    ++certified_draws;
    for (int s = 0; s < 50; ++s) {
      const double tau = rnd(rng, 1e-3, 1.0) * tau0;
      for (int t = 0; t < 20; ++t) {
        const double kt = rnd(rng, lo, hi);
        const auto h = hinf_norm(build_tf(gains, kt, tau));
        REQUIRE(h.value <= 1.0 + 1e-9);
      }
    }
  }
}

TEST_CASE("robust verdict classifies the reference cases") {
  const auto channel = sixteen_bit_channel();
  SECTION("hw = 0.95: certified") {
    const auto v = robust_verdict(kStable, channel, 0.5);
    CHECK(v.classification == StabilityClass::certified);
    CHECK(v.internally_stable);
    CHECK(v.analytic.pass());
    CHECK(v.max_sampled <= 1.0 + 1e-6);
    CHECK(v.samples.size() == 30);  // 10 lags x {lo, mean, hi}
  }
  SECTION("hw = 0.65: unstable, worst case at the interval's low end and full lag") {
    const auto v = robust_verdict(kUnstable, channel, 0.5);
    CHECK(v.classification == StabilityClass::unstable);
    CHECK(v.max_sampled > 1.0);
    CHECK(v.worst_ktilde == Catch::Approx(0.4).margin(1e-12));
    CHECK(v.worst_tau == Catch::Approx(0.5).epsilon(1e-12));
    CHECK(v.max_sampled == Catch::Approx(1.00349991673).epsilon(1e-8));
  }
  SECTION("optimal pair at hw = 0.88: certified") {
    const auto v = robust_verdict(kOptimal, channel, 0.5);
    CHECK(v.classification == StabilityClass::certified);
  }
  SECTION("internal instability forces the unstable class") {
    GainSet bad{0.5, 0.001, 0.9, 0.001};  // gamma ~ 0.0019 < tau0*kp = 0.45
    const auto v = robust_verdict(bad, channel, 0.5);
    CHECK_FALSE(v.internally_stable);
    CHECK(v.classification == StabilityClass::unstable);
  }
}
