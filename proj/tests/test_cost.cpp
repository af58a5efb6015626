#include <doctest.h>

#include "latentbox/cost.hpp"
#include "latentbox/error.hpp"
#include "test_util.hpp"

using namespace lbx;

namespace {
constexpr double kN0 = 92.3e6;
}

TEST_CASE("image-store monthly storage at the trace-end catalog") {
  CostParams p;
  auto c = monthly_cost(Strategy::ImgStore, kN0, 0, p, PriceDecay{});
  // 92.3e6 * 1.5 MB = 135,205 GB at $0.023/GB-mo
  CHECK(c.storage_usd == doctest::Approx(3109.7).epsilon(0.001));
  CHECK(c.decode_usd == 0.0);
  CHECK(c.retrieval_usd == 0.0);
}

TEST_CASE("latent-first monthly cost on consumer GPUs") {
  CostParams p;
  auto c = monthly_cost(Strategy::LatentBox5090, kN0, 0, p, PriceDecay{});
  CHECK(c.storage_usd == doctest::Approx(632.3).epsilon(0.002));
  // 0.632 * 10.2 * 92.3e6 / 12 ~= 49.6M decodes at 40 ms and $0.69/hr
  CHECK(c.decode_usd == doctest::Approx(380.1).epsilon(0.002));
  CHECK(c.total() == doctest::Approx(1012.4).epsilon(0.002));
}

TEST_CASE("steady-state monthly ratio of latent-first to image store") {
  CostParams p;
  double lb = monthly_cost(Strategy::LatentBox5090, kN0, 0, p, PriceDecay{}).total();
  double img = monthly_cost(Strategy::ImgStore, kN0, 0, p, PriceDecay{}).total();
  double ratio = lb / img;
  CHECK(ratio >= 0.28);
  CHECK(ratio <= 0.38);
}

TEST_CASE("zero catalog costs nothing") {
  CostParams p;
  for (auto s : {Strategy::ImgStore, Strategy::ImgStoreGlacier,
                 Strategy::LatentBoxH100, Strategy::LatentBox5090})
    CHECK(monthly_cost(s, 0, 0, p, PriceDecay{}).total() == 0.0);
}

TEST_CASE("with no pixel cache and no decodes the ratio is exactly S_lat/S_px") {
  CostParams p;
  p.pixel_cache_fraction = 0.0;
  p.decode_trigger_fraction = 0.0;
  double lb = monthly_cost(Strategy::LatentBox5090, kN0, 0, p, PriceDecay{}).total();
  double img = monthly_cost(Strategy::ImgStore, kN0, 0, p, PriceDecay{}).total();
  CHECK(lb / img == doctest::Approx(p.s_lat_mb / p.s_px_mb).epsilon(1e-12));
}

TEST_CASE("latent-first cost is monotone in each cost driver") {
  CostParams base;
  double c0 = monthly_cost(Strategy::LatentBoxH100, kN0, 0, base, PriceDecay{}).total();
  auto bump = [&](auto set) {
    CostParams p = base;
    set(p);
    return monthly_cost(Strategy::LatentBoxH100, kN0, 0, p, PriceDecay{}).total();
  };
  CHECK(bump([](CostParams& p) { p.p_gpu_h100_hr *= 1.1; }) > c0);
  CHECK(bump([](CostParams& p) { p.t_dec_ms *= 1.1; }) > c0);
  CHECK(bump([](CostParams& p) { p.decode_trigger_fraction *= 1.05; }) > c0);
  CHECK(bump([](CostParams& p) { p.views_per_image_year *= 1.1; }) > c0);
  CHECK(bump([](CostParams& p) { p.pixel_cache_fraction *= 2.0; }) > c0);
}

TEST_CASE("projection accumulates strictly and normalizes at trace end") {
  GrowthModel g;
  CostParams p;
  auto rows = project(Strategy::ImgStore, g, p, PriceDecay{}, g.trace_months + 24);
  REQUIRE(rows.size() == size_t(g.trace_months + 24));
  for (size_t i = 1; i < rows.size(); i++)
    CHECK(rows[i].cumulative_usd > rows[i - 1].cumulative_usd);
  // normalized value at trace end is 1 by construction
  CHECK(rows[size_t(g.trace_months) - 1].normalized == doctest::Approx(1.0));

  auto one = project(Strategy::ImgStore, g, p, PriceDecay{}, 1);
  CHECK(one[0].cumulative_usd == doctest::Approx(one[0].storage_usd));
}

TEST_CASE("glacier tiering beats plain image store once archiving kicks in") {
  GrowthModel g;
  CostParams p;
  int horizon = horizon_for_year(g, 2040);
  auto plain = project(Strategy::ImgStore, g, p, PriceDecay{}, horizon);
  auto tiered = project(Strategy::ImgStoreGlacier, g, p, PriceDecay{}, horizon);
  for (int m = g.trace_months + p.archive_after_months; m <= horizon; m++) {
    const auto& a = tiered[size_t(m - 1)];
    const auto& b = plain[size_t(m - 1)];
    CHECK(a.storage_usd + a.retrieval_usd < b.storage_usd);
    CHECK(a.cumulative_usd <= b.cumulative_usd);
  }
}

TEST_CASE("price decay lowers projected cost") {
  GrowthModel g;
  CostParams p;
  PriceDecay decay{true, 0.20, 0.10};
  int horizon = horizon_for_year(g, 2050);
  for (auto s : {Strategy::ImgStore, Strategy::LatentBox5090}) {
    auto constant = project(s, g, p, PriceDecay{}, horizon);
    auto decayed = project(s, g, p, decay, horizon);
    CHECK(decayed.back().cumulative_usd < constant.back().cumulative_usd);
    // trace-period costs are unaffected: decay starts at the trace end
    CHECK(decayed[size_t(g.trace_months) - 1].cumulative_usd ==
          doctest::Approx(constant[size_t(g.trace_months) - 1].cumulative_usd));
  }
}

TEST_CASE("scenario files round-trip the knobs") {
  testutil::TempDir tmp("costcfg");
  {
    std::ofstream out(tmp.file("s.cfg"));
    out << "# decayed-price scenario\n"
        << "p_5090 = 0.50\n"
        << "lambda = 12.0\n"
        << "growth = linear\n"
        << "images_per_month = 4e6\n"
        << "price_decay = 1\n"
        << "gpu_decay = 0.25\n";
  }
  auto sc = parse_cost_scenario(tmp.file("s.cfg"));
  CHECK(sc.params.p_gpu_5090_hr == doctest::Approx(0.50));
  CHECK(sc.params.views_per_image_year == doctest::Approx(12.0));
  CHECK(sc.growth.mode == GrowthModel::Mode::Linear);
  CHECK(sc.growth.images_per_month == doctest::Approx(4e6));
  CHECK(sc.decay.enabled);
  CHECK(sc.decay.gpu_per_year == doctest::Approx(0.25));
  // untouched keys keep their defaults
  CHECK(sc.params.s_px_mb == doctest::Approx(1.5));

  {
    std::ofstream out(tmp.file("bad.cfg"));
    out << "nope = 3\n";
  }
  CHECK_THROWS_AS(parse_cost_scenario(tmp.file("bad.cfg")), ConfigError);
}

TEST_CASE("parameter validation") {
  CostParams p;
  p.retrieval_decay_exponent = 1.0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = CostParams{};
  p.s_px_mb = 0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  GrowthModel g;
  g.n0 = -1;
  CHECK_THROWS_AS(g.validate(), ConfigError);
  PriceDecay d{true, 1.0, 0.1};
  CHECK_THROWS_AS(d.validate(), ConfigError);
  CHECK_THROWS_AS(monthly_cost(Strategy::ImgStore, -5, 0, CostParams{}, PriceDecay{}),
                  ConfigError);
}
