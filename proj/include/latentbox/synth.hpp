#pragma once

#include <cstdint>
#include <vector>

#include "latentbox/trace.hpp"

namespace lbx {

// Object size model for generated catalogs. Fixed sizes by default; the
// lognormal option draws image_bytes around the configured mean and keeps
// latent_bytes at the same latent/image ratio.
struct SizeModel {
  enum class Kind { Fixed, Lognormal } kind = Kind::Fixed;
  double image_mb = 1.5;
  double latent_mb = 0.29;
  double sigma = 0.35;  // lognormal shape, log-space
};

struct SynthConfig {
  uint64_t n_objects_initial = 10000;  // objects present at day 0
  double arrival_rate = 0.0;           // new objects per simulated day
  double zipf_exponent = 1.11;
  double decay_exponent = 1.3;         // intensity ~ (age_days + 1)^-decay
  uint32_t duration_days = 30;
  uint64_t requests_per_day = 100000;
  uint64_t seed = 1;
  SizeModel size_model;

  void validate() const;  // throws ConfigError naming the bad field
};

struct SynthResult {
  Trace trace;
  Catalog catalog;
  // Self-report: modeled intensity at age 365d relative to age 0.
  double decay_ratio_365d = 1.0;
  uint64_t objects_total = 0;
  // Popularity rank assigned to object id i+1 (0 = most popular).
  std::vector<uint32_t> configured_rank;
};

// Deterministic synthetic workload: per-object lifetime popularity follows a
// Zipf law over a randomly permuted rank assignment, each object's intensity
// decays as (age_days + 1)^-decay, and new objects arrive hot at arrival_rate
// per day. Same config (incl. seed) always yields the same bytes.
SynthResult generate_trace(const SynthConfig& cfg);

// Modeled per-object intensity multiplier at the given age.
double age_decay(double decay_exponent, double age_days);

}  // namespace lbx
