#pragma once

#include <cstdint>
#include <vector>

#include "latentbox/trace.hpp"

namespace lbx {

// Rank-frequency Zipf exponent: least-squares slope of log(count) vs
// log(rank), negated. Objects with a single access are excluded from the fit
// unless that would leave fewer than two points.
double fit_zipf(const Trace& trace);

struct AgeRateRow {
  uint32_t quartile;   // 0 = least popular lifetime quartile, 3 = most
  uint32_t age_days;   // days since the object's first access
  double rate;         // mean accesses per alive object at this age
};

struct TraceStats {
  uint64_t total_requests = 0;
  uint64_t distinct_objects = 0;
  double share_top_1pct = 0.0;   // request share of the top ceil(1%) objects
  double share_top_10pct = 0.0;
  // (fraction of objects, cumulative fraction of requests), most popular first.
  std::vector<std::pair<double, double>> popularity_cdf;
  // (interval_ms, cumulative fraction) over consecutive same-object accesses.
  std::vector<std::pair<uint64_t, double>> reaccess_cdf;
  std::vector<AgeRateRow> age_rate;
};

// Requires a time-sorted trace; throws on an empty one.
TraceStats trace_stats(const Trace& trace);

enum class MrcPolicy { Lru, Belady };

// Object-granularity miss ratios at each capacity (in objects, ascending).
// Belady uses exact forward next-use eviction among cached objects.
std::vector<std::pair<uint64_t, double>> miss_ratio_curve(
    const Trace& trace, const std::vector<uint64_t>& capacities, MrcPolicy policy);

// Byte-budget variant; entries occupy their catalog image_bytes. Belady evicts
// farthest-next-use entries until the new object fits (exact for uniform
// sizes).
std::vector<std::pair<uint64_t, double>> miss_ratio_curve_bytes(
    const Trace& trace, const Catalog& catalog,
    const std::vector<uint64_t>& byte_capacities, MrcPolicy policy);

// Uniformly samples k_objects distinct ids and keeps every record whose id was
// sampled, preserving order.
Trace downsample(const Trace& trace, uint64_t k_objects, uint64_t seed);

}  // namespace lbx
