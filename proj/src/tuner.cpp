#include "latentbox/tuner.hpp"

#include <algorithm>

#include "latentbox/error.hpp"

namespace lbx {

void TunerConfig::validate() const {
  if (!(step > 0.0 && step < 1.0)) throw ConfigError("step must be in (0,1)");
  if (!(ewma_weight > 0.0 && ewma_weight <= 1.0))
    throw ConfigError("ewma_weight must be in (0,1]");
  if (alpha_lo < 0.0 || alpha_hi > 1.0 || alpha_lo > alpha_hi)
    throw ConfigError("alpha bounds must satisfy 0 <= lo <= hi <= 1");
}

WindowRates rates_from_counters(const WindowCounters& c) {
  if (c.total_requests == 0) throw ConfigError("empty tuning window");
  WindowRates r;
  const double total = double(c.total_requests);
  r.mr_img = double(c.image_misses) / total;
  r.delta_img = double(c.image_tail_hits) / total;
  if (c.image_misses > 0) {
    r.mr_lat = double(c.full_misses) / double(c.image_misses);
    r.delta_lat = double(c.latent_tail_hits) / double(c.image_misses);
  }
  return r;
}

double expected_latency_ms(const WindowRates& r, double t_decode_ms,
                           double t_fetch_ms) {
  return r.mr_img * (t_decode_ms + r.mr_lat * t_fetch_ms);
}

double gradient_ms(const WindowRates& r, double t_decode_ms, double t_fetch_ms) {
  return -r.delta_img * (t_decode_ms + t_fetch_ms * r.mr_lat) +
         t_fetch_ms * r.mr_img * r.delta_lat;
}

double step_alpha(const TunerConfig& cfg, double alpha, double gradient) {
  if (gradient < 0.0)
    alpha += cfg.step;
  else if (gradient > 0.0)
    alpha -= cfg.step;
  return std::clamp(alpha, cfg.alpha_lo, cfg.alpha_hi);
}

void observe_latency(TunerState& state, LatencyKind kind, double sample_ms,
                     double ewma_weight) {
  if (!(sample_ms > 0.0)) throw ConfigError("latency sample must be positive");
  auto update = [&](double& avg, bool& seen) {
    avg = seen ? (1.0 - ewma_weight) * avg + ewma_weight * sample_ms : sample_ms;
    seen = true;
  };
  if (kind == LatencyKind::Decode)
    update(state.t_decode_ms, state.seen_decode);
  else
    update(state.t_fetch_ms, state.seen_fetch);
}

}  // namespace lbx
