#include <doctest.h>

#include <algorithm>
#include <unordered_map>

#include "latentbox/analysis.hpp"
#include "latentbox/error.hpp"
#include "latentbox/synth.hpp"
#include "test_util.hpp"

using namespace lbx;

namespace {

SynthConfig stationary_cfg(uint64_t objects, uint64_t requests, uint64_t seed) {
  SynthConfig cfg;
  cfg.n_objects_initial = objects;
  cfg.arrival_rate = 0;
  cfg.decay_exponent = 0;  // constant intensity
  cfg.duration_days = 1;
  cfg.requests_per_day = requests;
  cfg.seed = seed;
  return cfg;
}

}  // namespace

TEST_CASE("same seed yields byte-identical trace files") {
  testutil::TempDir tmp("synth_det");
  SynthConfig cfg;
  cfg.n_objects_initial = 200;
  cfg.arrival_rate = 3.5;
  cfg.duration_days = 10;
  cfg.requests_per_day = 2000;
  cfg.seed = 7;

  auto a = generate_trace(cfg);
  auto b = generate_trace(cfg);
  write_trace_bin(tmp.file("a.bin"), a.trace);
  write_trace_bin(tmp.file("b.bin"), b.trace);
  CHECK(testutil::slurp(tmp.file("a.bin")) == testutil::slurp(tmp.file("b.bin")));

  cfg.seed = 8;
  auto c = generate_trace(cfg);
  CHECK(c.trace != a.trace);
}

TEST_CASE("single object, no arrivals: every record hits the same id") {
  auto cfg = stationary_cfg(1, 500, 3);
  auto res = generate_trace(cfg);
  REQUIRE(res.trace.size() == 500);
  for (const auto& r : res.trace) CHECK(r.object_id == 1);
}

TEST_CASE("default decay reaches the 100x-per-year drop") {
  SynthConfig cfg;  // decay_exponent 1.3
  auto ratio = age_decay(cfg.decay_exponent, 365.0);
  CHECK(ratio <= 0.01);

  cfg.n_objects_initial = 10;
  cfg.requests_per_day = 10;
  cfg.duration_days = 2;
  auto res = generate_trace(cfg);
  CHECK(res.decay_ratio_365d == doctest::Approx(ratio));
}

TEST_CASE("generated traces are time-sorted and cover only born objects") {
  SynthConfig cfg;
  cfg.n_objects_initial = 50;
  cfg.arrival_rate = 10;
  cfg.duration_days = 20;
  cfg.requests_per_day = 1000;
  cfg.seed = 11;
  auto res = generate_trace(cfg);
  CHECK(is_time_sorted(res.trace));
  CHECK(res.objects_total == 50 + 200);
  for (const auto& r : res.trace) {
    CHECK(r.object_id >= 1);
    CHECK(r.object_id <= res.objects_total);
    CHECK(res.catalog.count(r.object_id) == 1);
  }
}

TEST_CASE("realized popularity tracks the configured Zipf ranks") {
  auto cfg = stationary_cfg(500, 500'000, 13);
  cfg.zipf_exponent = 1.11;
  auto res = generate_trace(cfg);

  std::unordered_map<uint64_t, uint64_t> counts;
  for (const auto& r : res.trace) counts[r.object_id]++;

  // Ranked request counts are non-increasing by construction of the ranking.
  std::vector<uint64_t> sorted;
  for (const auto& [_, c] : counts) sorted.push_back(c);
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  for (size_t i = 1; i < sorted.size(); i++) CHECK(sorted[i] <= sorted[i - 1]);

  // Kendall tau between configured rank (0 = hottest) and realized counts.
  const auto n = uint64_t(res.configured_rank.size());
  int64_t concordant = 0, discordant = 0;
  for (uint64_t i = 0; i < n; i++) {
    for (uint64_t j = i + 1; j < n; j++) {
      auto ci = int64_t(counts[i + 1]), cj = int64_t(counts[j + 1]);
      auto ri = res.configured_rank[i], rj = res.configured_rank[j];
      int64_t s = (ci - cj) * (int64_t(rj) - int64_t(ri));  // lower rank => more
      if (s > 0) concordant++;
      else if (s < 0) discordant++;
    }
  }
  double tau = double(concordant - discordant) / (double(n) * double(n - 1) / 2.0);
  CHECK(tau > 0.9);
}

TEST_CASE("fit_zipf recovers the configured exponent") {
  for (double s : {1.11, 0.8}) {
    auto cfg = stationary_cfg(2000, 400'000, 17);
    cfg.zipf_exponent = s;
    auto res = generate_trace(cfg);
    CHECK(fit_zipf(res.trace) == doctest::Approx(s).epsilon(0.05 / s));
  }
}

TEST_CASE("fit_zipf edge cases") {
  // Flat distribution: every object accessed the same number of times.
  Trace flat;
  for (uint64_t rep = 0; rep < 4; rep++)
    for (uint64_t id = 1; id <= 64; id++) flat.push_back({rep * 64 + id, id, 0, 0});
  CHECK(fit_zipf(flat) == doctest::Approx(0.0).epsilon(1e-9));

  Trace tiny;
  for (uint64_t id = 1; id <= 9; id++) tiny.push_back({id, id, 0, 0});
  CHECK_THROWS_AS(fit_zipf(tiny), InsufficientDataError);
}

TEST_CASE("config validation names the bad field") {
  SynthConfig cfg;
  cfg.zipf_exponent = 0;
  CHECK_THROWS_WITH_AS(generate_trace(cfg), "zipf_exponent must be > 0", ConfigError);
  cfg = SynthConfig{};
  cfg.duration_days = 0;
  CHECK_THROWS_AS(generate_trace(cfg), ConfigError);
  cfg = SynthConfig{};
  cfg.requests_per_day = 0;
  CHECK_THROWS_AS(generate_trace(cfg), ConfigError);
}

TEST_CASE("lognormal size model keeps per-object invariants") {
  SynthConfig cfg;
  cfg.n_objects_initial = 300;
  cfg.requests_per_day = 10;
  cfg.duration_days = 1;
  cfg.size_model.kind = SizeModel::Kind::Lognormal;
  auto res = generate_trace(cfg);
  for (const auto& [_, m] : res.catalog) {
    CHECK(m.latent_bytes > 0);
    CHECK(m.latent_bytes < m.image_bytes);
  }
}
