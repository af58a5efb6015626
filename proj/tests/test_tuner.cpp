#include <doctest.h>

#include <random>

#include "latentbox/error.hpp"
#include "latentbox/tuner.hpp"

using namespace lbx;

TEST_CASE("window rates follow the four estimator definitions") {
  WindowCounters c{100, 34, 10, 2, 1};
  auto r = rates_from_counters(c);
  CHECK(r.mr_img == doctest::Approx(0.34));
  CHECK(r.mr_lat == doctest::Approx(10.0 / 34.0));
  CHECK(r.delta_img == doctest::Approx(0.02));
  CHECK(r.delta_lat == doctest::Approx(1.0 / 34.0));
}

TEST_CASE("rates conventions and errors") {
  // no image misses: conditional rates are zero by convention
  auto r = rates_from_counters(WindowCounters{50, 0, 0, 3, 0});
  CHECK(r.mr_img == 0.0);
  CHECK(r.mr_lat == 0.0);
  CHECK(r.delta_img == doctest::Approx(0.06));
  CHECK(r.delta_lat == 0.0);

  // everything a full miss
  auto r2 = rates_from_counters(WindowCounters{10, 10, 10, 0, 0});
  CHECK(r2.mr_img == doctest::Approx(1.0));
  CHECK(r2.mr_lat == doctest::Approx(1.0));
  CHECK(r2.delta_img == 0.0);
  CHECK(r2.delta_lat == 0.0);

  CHECK_THROWS_AS(rates_from_counters(WindowCounters{}), ConfigError);
}

TEST_CASE("expected latency") {
  CHECK(expected_latency_ms(WindowRates{0, 0.5, 0, 0}, 40, 140) == 0.0);
  WindowRates r{0.337, 0.294, 0, 0};
  CHECK(expected_latency_ms(r, 40, 140) == doctest::Approx(27.35).epsilon(0.001));
  CHECK(expected_latency_ms(WindowRates{1, 1, 0, 0}, 40, 140) == doctest::Approx(180.0));
}

TEST_CASE("gradient value and sign") {
  CHECK(gradient_ms(WindowRates{0.4, 0.3, 0, 0}, 40, 140) == 0.0);

  WindowRates r{0.337, 0.294, 0.02, 0.01};
  CHECK(gradient_ms(r, 40, 140) == doctest::Approx(-1.1514).epsilon(0.001));

  // no image-side pressure, latent tail hits only: latent tier favored
  CHECK(gradient_ms(WindowRates{0.4, 0.2, 0.0, 0.05}, 40, 140) > 0.0);
}

TEST_CASE("gradient responds to cost feedback") {
  std::mt19937_64 rng(5);
  auto u = [&] { return double(rng() >> 11) * 0x1.0p-53; };
  for (int i = 0; i < 200; i++) {
    WindowRates r;
    r.mr_img = u();
    r.mr_lat = u();
    r.delta_img = 0.01 + u() * 0.2;
    r.delta_lat = u() * 0.2;
    double td = 10 + u() * 100, tf = 10 + u() * 200;
    // costlier decode pushes toward the image tier
    CHECK(gradient_ms(r, td + 5, tf) < gradient_ms(r, td, tf));
    // costlier fetch pushes toward latents when latent marginal value dominates
    if (r.mr_img * r.delta_lat > r.delta_img * r.mr_lat)
      CHECK(gradient_ms(r, td, tf + 5) > gradient_ms(r, td, tf));
  }
}

TEST_CASE("alpha step rule and clamping") {
  TunerConfig cfg;
  cfg.step = 0.005;
  CHECK(step_alpha(cfg, 0.50, -1.151) == doctest::Approx(0.505));
  CHECK(step_alpha(cfg, 0.30, +0.4) == doctest::Approx(0.295));
  CHECK(step_alpha(cfg, 0.50, 0.0) == doctest::Approx(0.50));
  CHECK(step_alpha(cfg, 1.0, -2.0) == doctest::Approx(1.0));
  CHECK(step_alpha(cfg, 0.0, +2.0) == doctest::Approx(0.0));

  std::mt19937_64 rng(9);
  double alpha = 0.5;
  for (int i = 0; i < 1000; i++) {
    double d = double(int64_t(rng() % 200)) - 100.0;
    double next = step_alpha(cfg, alpha, d);
    CHECK(std::abs(next - alpha) <= cfg.step + 1e-12);
    CHECK(next >= cfg.alpha_lo);
    CHECK(next <= cfg.alpha_hi);
    alpha = next;
  }
}

TEST_CASE("EWMA tracking of decode and fetch latencies") {
  TunerState st;
  observe_latency(st, LatencyKind::Decode, 40, 0.1);
  CHECK(st.t_decode_ms == doctest::Approx(40.0));  // first sample initializes
  observe_latency(st, LatencyKind::Decode, 60, 0.1);
  CHECK(st.t_decode_ms == doctest::Approx(42.0));

  observe_latency(st, LatencyKind::Fetch, 140, 0.1);
  CHECK(st.t_fetch_ms == doctest::Approx(140.0));

  for (int i = 0; i < 2000; i++) observe_latency(st, LatencyKind::Decode, 55, 0.1);
  CHECK(st.t_decode_ms == doctest::Approx(55.0));

  CHECK_THROWS_AS(observe_latency(st, LatencyKind::Decode, 0, 0.1), ConfigError);
  CHECK_THROWS_AS(observe_latency(st, LatencyKind::Fetch, -3, 0.1), ConfigError);
}

TEST_CASE("tuner config validation") {
  TunerConfig cfg;
  cfg.step = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = TunerConfig{};
  cfg.ewma_weight = 1.5;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = TunerConfig{};
  cfg.alpha_lo = 0.8;
  cfg.alpha_hi = 0.2;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}
