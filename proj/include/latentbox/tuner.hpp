#pragma once

#include <cstdint>

#include "latentbox/dual_cache.hpp"

namespace lbx {

struct TunerConfig {
  uint64_t window_requests = 1'000'000;  // W; 0 means auto-scale to the trace
  double step = 0.005;                   // per-window alpha step
  double ewma_weight = 0.1;
  double alpha_lo = 0.0;
  double alpha_hi = 1.0;

  void validate() const;
};

struct TunerState {
  double alpha = 0.5;
  double t_decode_ms = 0.0;  // EWMA of observed decode latency
  double t_fetch_ms = 0.0;   // EWMA of observed cloud-fetch latency
  bool seen_decode = false;
  bool seen_fetch = false;
  double last_gradient = 0.0;
};

// Window-normalized rates. MR_lat and delta_lat are conditional on an image
// miss; when a window has no image misses both are 0 by convention.
struct WindowRates {
  double mr_img = 0.0;     // image misses / total requests
  double mr_lat = 0.0;     // full misses / image misses
  double delta_img = 0.0;  // image tail hits / total requests
  double delta_lat = 0.0;  // latent tail hits / image misses
};

// Throws ConfigError on an empty window.
WindowRates rates_from_counters(const WindowCounters& c);

// Expected per-request cost at the current split: image hits are free, latent
// hits pay a decode, full misses pay fetch plus decode.
double expected_latency_ms(const WindowRates& r, double t_decode_ms,
                           double t_fetch_ms);

// Marginal-cost gradient of expected latency in alpha. Negative means the
// image tier has higher marginal value; only the sign is consumed.
double gradient_ms(const WindowRates& r, double t_decode_ms, double t_fetch_ms);

// One step of the update rule: D < 0 grows the image tier, D > 0 shrinks it,
// D == 0 holds, clamped to [alpha_lo, alpha_hi].
double step_alpha(const TunerConfig& cfg, double alpha, double gradient);

enum class LatencyKind { Decode, Fetch };

// EWMA update; the first sample of each kind initializes the average.
// Throws ConfigError on a non-positive sample.
void observe_latency(TunerState& state, LatencyKind kind, double sample_ms,
                     double ewma_weight);

}  // namespace lbx
