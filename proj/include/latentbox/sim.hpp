#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "latentbox/dual_cache.hpp"
#include "latentbox/router.hpp"
#include "latentbox/trace.hpp"
#include "latentbox/tuner.hpp"

namespace lbx {

// Stage latency model. All times are virtual milliseconds.
struct LatencyModel {
  enum class FetchKind { Constant, Lognormal, Empirical };

  double net_ms = 10.0;             // node -> frontend transfer, every response
  double decode_ms = 40.0;          // GPU service time per decode
  double intra_cluster_ms = 5.0;    // shipping a cached latent between nodes
  FetchKind fetch_kind = FetchKind::Constant;
  double fetch_const_ms = 140.0;    // cloud fetch, constant model
  double fetch_mu = 0.0;            // lognormal model, log-space
  double fetch_sigma = 0.0;
  std::vector<double> fetch_table;  // empirical model, sampled uniformly

  void validate() const;
  double fetch_mean_ms() const;
};

enum class Policy {
  ImgStore,       // image-only LRU over stored PNGs, no GPU
  DecodeAll,      // fetch + decode every request, no cache
  LbImgCache,     // alpha pinned 1.0, misses admit decoded images
  LbLatentCache,  // alpha pinned 0.0
  LbStatic,       // dual-format at a fixed alpha, tuner off
  LbAdaptive,     // dual-format with online split tuning
};

const char* policy_name(Policy p);
Policy policy_from_name(const std::string& name);

struct ClusterConfig {
  uint32_t n_nodes = 3;
  uint64_t node_cache_bytes = 2ull << 30;
  uint32_t gpus_per_node = 1;
  uint32_t theta = kNoSpill;     // GPU queue-depth spill threshold
  uint32_t vnodes_per_node = 128;
  Policy policy = Policy::LbAdaptive;
  double alpha0 = 0.5;           // initial (or pinned) image-tier fraction
  double tail_fraction = 0.10;
  uint32_t promotion_threshold = 8;
  TunerConfig tuner;             // window_requests == 0 auto-scales
  LatencyModel latency;
  uint64_t seed = 1;
  double warmup_fraction = 0.20;  // leading requests excluded from stats
  double time_scale = 1.0;        // replay speed-up factor on timestamps
  bool record_requests = false;   // keep per-request rows in the report JSON
  // When set, a promotion additionally schedules an off-path decode job on the
  // owner GPU instead of reusing the request's own decode for the insert.
  bool promotion_decode_offpath = false;

  void validate() const;
};

struct RequestRecord {
  uint64_t ts_ms = 0;
  uint64_t object_id = 0;
  Outcome outcome = Outcome::FullMiss;
  double queue_ms = 0, fetch_ms = 0, decode_ms = 0, net_ms = 0, total_ms = 0;
  uint32_t node = 0;  // executor
  bool spilled = false;
  bool coalesced = false;  // served by waiting on another request's work
};

// One tuning window on one node. `alpha` is the split in effect during the
// window; `measured_mean_ms` averages the per-outcome costs the cache actually
// served (image hit 0, latent hit decode, full miss decode+fetch).
struct WindowLog {
  uint64_t window_idx = 0;
  uint32_t node = 0;
  double alpha = 0;
  WindowCounters counters;
  WindowRates rates;
  double gradient = 0;
  double t_decode_ms = 0;
  double t_fetch_ms = 0;
  double measured_mean_ms = 0;
};

struct LatencySummary {
  double mean = 0, p50 = 0, p95 = 0, p99 = 0;
};

struct SimReport {
  uint64_t total_requests = 0;
  uint64_t warmup_requests = 0;  // excluded from the summary statistics
  LatencySummary latency;
  // Post-warmup outcome mix; fractions sum to 1 for cached policies.
  uint64_t image_hits = 0, latent_hits = 0, full_misses = 0;
  double frac_image_hit = 0, frac_latent_hit = 0, frac_full_miss = 0;
  // Event totals over the whole run.
  uint64_t fetch_events = 0, decode_events = 0, spill_events = 0, writebacks = 0;
  // Cache residents whose hash owner is a different node (always 0: spillover
  // moves work, never cache entries).
  uint64_t pinning_violations = 0;
  std::vector<uint64_t> decodes_by_node;
  LatencySummary gpu_queue_wait;  // per decode job, post-warmup
  double stage_queue_ms = 0, stage_fetch_ms = 0, stage_decode_ms = 0,
         stage_net_ms = 0;  // post-warmup means over all requests
  double final_alpha = 0;
  std::vector<WindowLog> windows;
  std::vector<RequestRecord> requests;  // always populated in memory

  std::string to_json(bool include_requests, const std::string& invocation) const;
};

// Deterministic trace replay against the cluster model. Requires a time-sorted
// trace and a catalog entry for every referenced object.
SimReport run(const Trace& trace, const Catalog& catalog, const ClusterConfig& cfg);

struct AlphaSweepRow {
  double alpha;
  double mean_ms;
  double p99_ms;
};

// One full run per alpha with the tuner off. 0.0 and 1.0 map onto the
// latent-only and image-only policies.
std::vector<AlphaSweepRow> sweep_alpha(const Trace& trace, const Catalog& catalog,
                                       ClusterConfig cfg,
                                       const std::vector<double>& alphas);

struct SpilloverRow {
  uint32_t theta;  // kNoSpill encodes the no-spillover baseline
  LatencySummary latency;
  LatencySummary gpu_queue_wait;
  uint64_t spill_events;
};

std::vector<SpilloverRow> compare_spillover(const Trace& trace,
                                            const Catalog& catalog,
                                            ClusterConfig cfg,
                                            const std::vector<uint32_t>& thetas);

// Flat key=value config file; '#' starts a comment. Unknown keys are errors.
ClusterConfig parse_cluster_config(const std::string& path);

// Plot-ready emitters. Every file starts with a '#' line recording the
// invocation when one is given.
void write_windows_csv(const std::string& path, const std::vector<WindowLog>& windows,
                       const std::string& comment);
void write_requests_csv(const std::string& path,
                        const std::vector<RequestRecord>& requests,
                        const std::string& comment);

}  // namespace lbx
