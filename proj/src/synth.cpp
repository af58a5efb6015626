#include "latentbox/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "latentbox/error.hpp"

namespace lbx {

namespace {

// Uniform double in [0,1) from the top 53 bits; avoids distribution objects so
// draws are identical across standard libraries.
double uniform01(std::mt19937_64& rng) {
  return double(rng() >> 11) * 0x1.0p-53;
}

// Vose alias table: O(n) build, O(1) draw.
class AliasTable {
 public:
  explicit AliasTable(const std::vector<double>& weights) {
    const size_t n = weights.size();
    prob_.resize(n);
    alias_.resize(n);
    double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    std::vector<double> scaled(n);
    for (size_t i = 0; i < n; i++) scaled[i] = weights[i] * double(n) / total;

    std::vector<uint32_t> small, large;
    small.reserve(n);
    large.reserve(n);
    for (size_t i = 0; i < n; i++)
      (scaled[i] < 1.0 ? small : large).push_back(uint32_t(i));

    while (!small.empty() && !large.empty()) {
      uint32_t s = small.back(), l = large.back();
      small.pop_back();
      large.pop_back();
      prob_[s] = scaled[s];
      alias_[s] = l;
      scaled[l] -= 1.0 - scaled[s];
      (scaled[l] < 1.0 ? small : large).push_back(l);
    }
    for (uint32_t i : large) prob_[i] = 1.0;
    for (uint32_t i : small) prob_[i] = 1.0;  // numeric leftovers
  }

  uint32_t draw(std::mt19937_64& rng) const {
    const size_t n = prob_.size();
    double u = uniform01(rng) * double(n);
    auto idx = uint32_t(u);
    if (idx >= n) idx = uint32_t(n - 1);
    double frac = u - double(idx);
    return frac < prob_[idx] ? idx : alias_[idx];
  }

 private:
  std::vector<double> prob_;
  std::vector<uint32_t> alias_;
};

ObjectMeta draw_meta(const SizeModel& sm, std::mt19937_64& rng) {
  constexpr double kMb = 1024.0 * 1024.0;
  ObjectMeta m;
  if (sm.kind == SizeModel::Kind::Fixed) {
    m.image_bytes = uint64_t(std::llround(sm.image_mb * kMb));
    m.latent_bytes = uint64_t(std::llround(sm.latent_mb * kMb));
  } else {
    // Lognormal image size with the configured mean; latent keeps the
    // configured compression ratio so the meta invariant holds per object.
    double mu = std::log(sm.image_mb * kMb) - 0.5 * sm.sigma * sm.sigma;
    double z = std::sqrt(-2.0 * std::log(1.0 - uniform01(rng))) *
               std::cos(2.0 * M_PI * uniform01(rng));
    double img = std::exp(mu + sm.sigma * z);
    double ratio = sm.latent_mb / sm.image_mb;
    m.image_bytes = std::max<uint64_t>(2, uint64_t(std::llround(img)));
    m.latent_bytes = std::min(m.image_bytes - 1,
                              std::max<uint64_t>(1, uint64_t(std::llround(img * ratio))));
  }
  return m;
}

}  // namespace

double age_decay(double decay_exponent, double age_days) {
  return std::pow(age_days + 1.0, -decay_exponent);
}

void SynthConfig::validate() const {
  if (n_objects_initial < 1) throw ConfigError("n_objects_initial must be >= 1");
  if (arrival_rate < 0) throw ConfigError("arrival_rate must be >= 0");
  if (!(zipf_exponent > 0)) throw ConfigError("zipf_exponent must be > 0");
  if (decay_exponent < 0) throw ConfigError("decay_exponent must be >= 0");
  if (duration_days < 1) throw ConfigError("duration_days must be >= 1");
  if (requests_per_day < 1) throw ConfigError("requests_per_day must be >= 1");
  if (size_model.image_mb <= 0 || size_model.latent_mb <= 0 ||
      size_model.latent_mb >= size_model.image_mb)
    throw ConfigError("size_model requires 0 < latent_mb < image_mb");
}

SynthResult generate_trace(const SynthConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);

  const uint64_t n_arrivals =
      uint64_t(std::floor(cfg.arrival_rate * double(cfg.duration_days)));
  const uint64_t n_total = cfg.n_objects_initial + n_arrivals;

  // Birth day per object: initial objects at day 0, arrivals spread so that
  // floor(rate*d) objects exist by day d.
  std::vector<uint32_t> birth_day(n_total, 0);
  for (uint64_t k = 0; k < n_arrivals; k++) {
    auto day = uint32_t(std::floor(double(k + 1) / cfg.arrival_rate));
    birth_day[cfg.n_objects_initial + k] = std::min(day, cfg.duration_days - 1);
  }

  // Zipf weight by rank, ranks shuffled across objects so arrival order does
  // not correlate with popularity.
  std::vector<double> zipf_weight(n_total);
  std::vector<uint32_t> rank(n_total);
  {
    std::iota(rank.begin(), rank.end(), 0);
    for (size_t i = n_total - 1; i > 0; i--) {
      size_t j = size_t(uniform01(rng) * double(i + 1));
      std::swap(rank[i], rank[std::min(j, i)]);
    }
    for (uint64_t i = 0; i < n_total; i++)
      zipf_weight[i] = std::pow(double(rank[i]) + 1.0, -cfg.zipf_exponent);
  }

  SynthResult res;
  res.configured_rank = std::move(rank);
  res.objects_total = n_total;
  res.decay_ratio_365d = age_decay(cfg.decay_exponent, 365.0);
  res.catalog.reserve(n_total);
  for (uint64_t i = 0; i < n_total; i++)
    res.catalog.emplace(i + 1, draw_meta(cfg.size_model, rng));

  res.trace.reserve(cfg.requests_per_day * cfg.duration_days);
  constexpr uint64_t kDayMs = 86'400'000;

  std::vector<double> weights(n_total);
  std::vector<std::pair<uint64_t, uint32_t>> day_buf;  // (ts, object index)
  day_buf.reserve(cfg.requests_per_day);

  for (uint32_t day = 0; day < cfg.duration_days; day++) {
    for (uint64_t i = 0; i < n_total; i++) {
      weights[i] = birth_day[i] > day
                       ? 0.0
                       : zipf_weight[i] * age_decay(cfg.decay_exponent,
                                                    double(day - birth_day[i]));
    }
    AliasTable table(weights);

    day_buf.clear();
    for (uint64_t r = 0; r < cfg.requests_per_day; r++) {
      uint32_t obj = table.draw(rng);
      // Unborn objects carry zero weight but may still surface through alias
      // numeric dust; redraw.
      while (weights[obj] == 0.0) obj = table.draw(rng);
      auto ts = uint64_t(day) * kDayMs + uint64_t(uniform01(rng) * double(kDayMs));
      day_buf.emplace_back(ts, obj);
    }
    std::stable_sort(day_buf.begin(), day_buf.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    for (const auto& [ts, obj] : day_buf)
      res.trace.push_back(TraceRecord{ts, uint64_t(obj) + 1, 1, 1});
  }
  return res;
}

}  // namespace lbx
