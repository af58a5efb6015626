#include <doctest.h>

#include <random>

#include "latentbox/error.hpp"
#include "latentbox/sim.hpp"
#include "latentbox/synth.hpp"
#include "test_util.hpp"

using namespace lbx;

namespace {

constexpr uint64_t kImg = 1'572'864, kLat = 304'087;

Catalog uniform_catalog(uint64_t n) {
  Catalog c;
  for (uint64_t id = 1; id <= n; id++) c.emplace(id, ObjectMeta{kImg, kLat});
  return c;
}

ClusterConfig base_cfg(Policy p) {
  ClusterConfig cfg;
  cfg.n_nodes = 1;
  cfg.node_cache_bytes = 64ull << 20;
  cfg.policy = p;
  cfg.warmup_fraction = 0.0;
  cfg.tuner.window_requests = 1'000'000'000;  // effectively no windows
  return cfg;
}

}  // namespace

TEST_CASE("cold full miss pays fetch + decode + net") {
  Trace t{{0, 1, 0, 0}};
  auto rep = run(t, uniform_catalog(1), base_cfg(Policy::LbAdaptive));
  REQUIRE(rep.requests.size() == 1);
  CHECK(rep.requests[0].total_ms == doctest::Approx(190.0));
  CHECK(rep.requests[0].fetch_ms == doctest::Approx(140.0));
  CHECK(rep.requests[0].decode_ms == doctest::Approx(40.0));
  CHECK(rep.requests[0].net_ms == doctest::Approx(10.0));
  CHECK(rep.requests[0].queue_ms == doctest::Approx(0.0));
  CHECK(rep.full_misses == 1);
}

TEST_CASE("decode-all never caches") {
  Trace t{{0, 1, 0, 0}, {1000, 1, 0, 0}, {2000, 1, 0, 0}};
  auto rep = run(t, uniform_catalog(1), base_cfg(Policy::DecodeAll));
  for (const auto& r : rep.requests) CHECK(r.total_ms == doctest::Approx(190.0));
  CHECK(rep.full_misses == 3);
  CHECK(rep.fetch_events == 3);
  CHECK(rep.decode_events == 3);
}

TEST_CASE("latent hit pays decode, image hit only net") {
  Trace t{{0, 1, 0, 0}, {1000, 1, 0, 0}, {2000, 1, 0, 0}};
  auto cfg = base_cfg(Policy::LbAdaptive);
  cfg.promotion_threshold = 1;  // promote on the first latent hit
  auto rep = run(t, uniform_catalog(1), cfg);
  CHECK(rep.requests[0].total_ms == doctest::Approx(190.0));
  CHECK(rep.requests[1].total_ms == doctest::Approx(50.0));  // decode + net
  CHECK(rep.requests[1].outcome == Outcome::LatentHit);
  CHECK(rep.requests[2].total_ms == doctest::Approx(10.0));
  CHECK(rep.requests[2].outcome == Outcome::ImageHit);
}

TEST_CASE("imgstore misses scale the fetch by the size ratio") {
  Trace t{{0, 1, 0, 0}, {1000, 1, 0, 0}};
  auto rep = run(t, uniform_catalog(1), base_cfg(Policy::ImgStore));
  double png_fetch = 140.0 * double(kImg) / double(kLat);
  CHECK(rep.requests[0].total_ms == doctest::Approx(png_fetch + 10.0));
  CHECK(rep.requests[0].decode_ms == 0.0);
  CHECK(rep.requests[1].total_ms == doctest::Approx(10.0));  // cached hit
  CHECK(rep.decode_events == 0);
}

TEST_CASE("simultaneous arrivals coalesce into one fetch and one decode") {
  for (uint64_t k : {2, 10, 100}) {
    Trace t;
    for (uint64_t i = 0; i < k; i++) t.push_back({0, 1, 0, 0});
    auto rep = run(t, uniform_catalog(1), base_cfg(Policy::LbAdaptive));
    CHECK(rep.fetch_events == 1);
    CHECK(rep.decode_events == 1);
    CHECK(rep.requests[0].total_ms == doctest::Approx(190.0));
    for (uint64_t i = 1; i < k; i++) {
      CHECK(rep.requests[i].coalesced);
      CHECK(rep.requests[i].outcome == Outcome::FullMiss);
      CHECK(rep.requests[i].total_ms == doctest::Approx(190.0));
    }
  }
}

TEST_CASE("followers arriving mid-flight wait only the remainder") {
  Trace t{{0, 1, 0, 0}, {150, 1, 0, 0}};  // second arrives during the decode
  auto rep = run(t, uniform_catalog(1), base_cfg(Policy::LbAdaptive));
  CHECK(rep.requests[1].coalesced);
  CHECK(rep.requests[1].total_ms == doctest::Approx(40.0));  // 190 - 150
  CHECK(rep.requests[1].fetch_ms == doctest::Approx(0.0));
  CHECK(rep.requests[1].decode_ms == doctest::Approx(30.0));
  CHECK(rep.requests[1].net_ms == doctest::Approx(10.0));
}

TEST_CASE("per-request latency decomposes exactly into stages") {
  auto synth = [] {
    SynthConfig c;
    c.n_objects_initial = 50;
    c.requests_per_day = 3000;
    c.duration_days = 1;
    c.seed = 5;
    return generate_trace(c);
  }();
  for (Policy p : {Policy::LbAdaptive, Policy::ImgStore, Policy::DecodeAll}) {
    auto cfg = base_cfg(p);
    cfg.n_nodes = 2;
    cfg.node_cache_bytes = 8ull << 20;
    cfg.theta = 4;
    auto rep = run(synth.trace, synth.catalog, cfg);
    uint64_t by_outcome = rep.image_hits + rep.latent_hits + rep.full_misses;
    CHECK(by_outcome == rep.total_requests);  // conservation, no warmup cut
    for (const auto& r : rep.requests) {
      double sum = r.queue_ms + r.fetch_ms + r.decode_ms + r.net_ms;
      CHECK(r.total_ms == doctest::Approx(sum).epsilon(1e-9));
    }
  }
}

TEST_CASE("GPU queue is FIFO and work-conserving") {
  // Two latent hits hitting one GPU at the same instant: second waits 40 ms.
  Trace warm{{0, 1, 0, 0}, {0, 2, 0, 0}, {500, 1, 0, 0}, {500, 2, 0, 0}};
  auto cfg = base_cfg(Policy::LbLatentCache);
  auto rep = run(warm, uniform_catalog(2), cfg);
  CHECK(rep.requests[2].queue_ms == doctest::Approx(0.0));
  CHECK(rep.requests[3].queue_ms == doctest::Approx(40.0));
  CHECK(rep.requests[3].total_ms == doctest::Approx(90.0));

  // With two GPUs the contention disappears.
  cfg.gpus_per_node = 2;
  auto rep2 = run(warm, uniform_catalog(2), cfg);
  CHECK(rep2.requests[3].queue_ms == doctest::Approx(0.0));
}

TEST_CASE("same seed, same report, different seed may differ") {
  SynthConfig sc;
  sc.n_objects_initial = 100;
  sc.requests_per_day = 5000;
  sc.duration_days = 1;
  sc.seed = 9;
  auto synth = generate_trace(sc);
  auto cfg = base_cfg(Policy::LbAdaptive);
  cfg.latency.fetch_kind = LatencyModel::FetchKind::Lognormal;
  cfg.latency.fetch_mu = 4.9;
  cfg.latency.fetch_sigma = 0.3;
  auto a = run(synth.trace, synth.catalog, cfg);
  auto b = run(synth.trace, synth.catalog, cfg);
  CHECK(a.to_json(true, "") == b.to_json(true, ""));
}

TEST_CASE("unknown object in the trace is an error naming the id") {
  Trace t{{0, 77, 0, 0}};
  CHECK_THROWS_WITH(run(t, uniform_catalog(1), base_cfg(Policy::LbAdaptive)),
                    doctest::Contains("77"));
}

TEST_CASE("tuner windows fire per node and bound the alpha path") {
  SynthConfig sc;
  sc.n_objects_initial = 400;
  sc.requests_per_day = 20'000;
  sc.duration_days = 1;
  sc.seed = 4;
  auto synth = generate_trace(sc);

  auto cfg = base_cfg(Policy::LbAdaptive);
  cfg.node_cache_bytes = 20 * kImg;
  cfg.tuner.window_requests = 1000;
  auto rep = run(synth.trace, synth.catalog, cfg);
  // Coalesced requests never probe the cache, so windows count lookups only.
  uint64_t lookups = 0;
  for (const auto& r : rep.requests)
    if (!r.coalesced) lookups++;
  CHECK(rep.windows.size() == lookups / cfg.tuner.window_requests);
  REQUIRE(!rep.windows.empty());
  for (size_t i = 0; i < rep.windows.size(); i++) {
    CHECK(rep.windows[i].counters.total_requests == 1000);
    if (i > 0) {
      double da = rep.windows[i].alpha - rep.windows[i - 1].alpha;
      CHECK(std::abs(da) <= cfg.tuner.step + 1e-12);
    }
    CHECK(rep.windows[i].alpha >= cfg.tuner.alpha_lo);
    CHECK(rep.windows[i].alpha <= cfg.tuner.alpha_hi);
  }
}

TEST_CASE("pinned-alpha sweep endpoints match the single-format policies") {
  SynthConfig sc;
  sc.n_objects_initial = 150;
  sc.requests_per_day = 4000;
  sc.duration_days = 1;
  sc.seed = 12;
  auto synth = generate_trace(sc);
  auto cfg = base_cfg(Policy::LbAdaptive);
  cfg.node_cache_bytes = 40 * kImg;

  auto rows = sweep_alpha(synth.trace, synth.catalog, cfg, {0.0, 0.5, 1.0});

  auto latent_cfg = cfg;
  latent_cfg.policy = Policy::LbLatentCache;
  auto img_cfg = cfg;
  img_cfg.policy = Policy::LbImgCache;
  CHECK(rows[0].mean_ms ==
        doctest::Approx(run(synth.trace, synth.catalog, latent_cfg).latency.mean));
  CHECK(rows[2].mean_ms ==
        doctest::Approx(run(synth.trace, synth.catalog, img_cfg).latency.mean));
}

TEST_CASE("when the working set fits as images, the sweep picks alpha = 1") {
  SynthConfig sc;
  sc.n_objects_initial = 60;
  sc.arrival_rate = 0;
  sc.decay_exponent = 0;
  sc.requests_per_day = 20'000;
  sc.duration_days = 1;
  sc.seed = 18;
  auto synth = generate_trace(sc);
  auto cfg = base_cfg(Policy::LbAdaptive);
  cfg.node_cache_bytes = 80 * kImg;  // everything fits decoded
  auto rows = sweep_alpha(synth.trace, synth.catalog, cfg, {0.0, 0.25, 0.5, 0.75, 1.0});
  auto best = std::min_element(rows.begin(), rows.end(),
                               [](auto& a, auto& b) { return a.mean_ms < b.mean_ms; });
  CHECK(best->alpha == 1.0);
}

TEST_CASE("more cache never hurts the image-format policies") {
  SynthConfig sc;
  sc.n_objects_initial = 200;
  sc.requests_per_day = 8000;
  sc.duration_days = 1;
  sc.seed = 3;
  auto synth = generate_trace(sc);
  for (Policy p : {Policy::LbImgCache, Policy::ImgStore}) {
    auto cfg = base_cfg(p);
    double prev = 1e18;
    for (uint64_t objs : {5, 20, 80, 200}) {
      cfg.node_cache_bytes = objs * kImg;
      auto rep = run(synth.trace, synth.catalog, cfg);
      CHECK(rep.latency.mean <= prev + 1e-9);
      prev = rep.latency.mean;
    }
  }
}

TEST_CASE("cache entries stay pinned to their hash owners under spillover") {
  SynthConfig sc;
  sc.n_objects_initial = 300;
  sc.requests_per_day = 50'000;
  sc.duration_days = 1;
  sc.seed = 15;
  auto synth = generate_trace(sc);
  auto cfg = base_cfg(Policy::LbAdaptive);
  cfg.n_nodes = 4;
  cfg.theta = 2;        // spill aggressively
  cfg.time_scale = 400; // compress arrivals until queues actually build
  cfg.node_cache_bytes = 30 * kImg;
  auto rep = run(synth.trace, synth.catalog, cfg);
  CHECK(rep.spill_events > 0);
  CHECK(rep.pinning_violations == 0);
  CHECK(rep.writebacks == rep.spill_events);
}

TEST_CASE("adaptive stays within the single-format envelope per window") {
  SynthConfig sc;
  sc.n_objects_initial = 300;
  sc.requests_per_day = 30'000;
  sc.duration_days = 1;
  sc.decay_exponent = 0;  // stationary
  sc.seed = 21;
  auto synth = generate_trace(sc);

  auto cfg = base_cfg(Policy::LbAdaptive);
  cfg.node_cache_bytes = 30 * kImg;
  cfg.tuner.window_requests = 2000;

  auto adaptive = run(synth.trace, synth.catalog, cfg);
  cfg.policy = Policy::LbImgCache;
  auto img = run(synth.trace, synth.catalog, cfg);
  cfg.policy = Policy::LbLatentCache;
  auto lat = run(synth.trace, synth.catalog, cfg);

  REQUIRE(adaptive.windows.size() == img.windows.size());
  size_t start = adaptive.windows.size() / 5;  // warmup
  for (size_t w = start; w < adaptive.windows.size(); w++) {
    double envelope = std::max(img.windows[w].measured_mean_ms,
                               lat.windows[w].measured_mean_ms);
    CHECK(adaptive.windows[w].measured_mean_ms <= envelope + 1e-9);
  }
}

TEST_CASE("off-path promotion decodes add background GPU work") {
  Trace t{{0, 1, 0, 0}, {1000, 1, 0, 0}};
  auto cfg = base_cfg(Policy::LbAdaptive);
  cfg.promotion_threshold = 1;
  auto baseline = run(t, uniform_catalog(1), cfg);
  cfg.promotion_decode_offpath = true;
  auto offpath = run(t, uniform_catalog(1), cfg);
  CHECK(offpath.decode_events == baseline.decode_events + 1);
  CHECK(offpath.requests[1].total_ms == doctest::Approx(baseline.requests[1].total_ms));
}

TEST_CASE("cluster config file round-trip") {
  testutil::TempDir tmp("simcfg");
  {
    std::ofstream out(tmp.file("sim.cfg"));
    out << "# test config\n"
        << "nodes = 3\n"
        << "cache_mb = 64\n"
        << "policy = lb-adaptive\n"
        << "theta = 4\n"
        << "alpha = 0.4\n"
        << "window = 5000\n"
        << "fetch_model = lognormal\n"
        << "fetch_mu = 4.9\n"
        << "fetch_sigma = 0.25\n"
        << "seed = 99\n";
  }
  auto cfg = parse_cluster_config(tmp.file("sim.cfg"));
  CHECK(cfg.n_nodes == 3);
  CHECK(cfg.node_cache_bytes == 64ull << 20);
  CHECK(cfg.policy == Policy::LbAdaptive);
  CHECK(cfg.theta == 4);
  CHECK(cfg.alpha0 == doctest::Approx(0.4));
  CHECK(cfg.tuner.window_requests == 5000);
  CHECK(cfg.latency.fetch_kind == LatencyModel::FetchKind::Lognormal);
  CHECK(cfg.seed == 99);

  {
    std::ofstream out(tmp.file("bad.cfg"));
    out << "bogus_key = 1\n";
  }
  CHECK_THROWS_AS(parse_cluster_config(tmp.file("bad.cfg")), ConfigError);
}
