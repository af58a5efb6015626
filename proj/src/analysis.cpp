#include "latentbox/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <list>
#include <map>
#include <random>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "latentbox/error.hpp"

namespace lbx {

namespace {

std::unordered_map<uint64_t, uint64_t> count_by_object(const Trace& trace) {
  std::unordered_map<uint64_t, uint64_t> counts;
  counts.reserve(trace.size() / 4 + 16);
  for (const auto& r : trace) counts[r.object_id]++;
  return counts;
}

// Unified LRU: every entry occupies size_of(id) units against the budget.
template <typename SizeFn>
double lru_miss_ratio_sized(const Trace& trace, uint64_t budget, SizeFn size_of) {
  std::list<std::pair<uint64_t, uint64_t>> order;  // (id, size), MRU front
  std::unordered_map<uint64_t, std::list<std::pair<uint64_t, uint64_t>>::iterator> where;
  uint64_t used = 0, misses = 0;
  for (const auto& r : trace) {
    auto it = where.find(r.object_id);
    if (it != where.end()) {
      order.splice(order.begin(), order, it->second);
      continue;
    }
    misses++;
    uint64_t sz = size_of(r.object_id);
    if (sz > budget) continue;
    order.emplace_front(r.object_id, sz);
    where[r.object_id] = order.begin();
    used += sz;
    while (used > budget) {
      used -= order.back().second;
      where.erase(order.back().first);
      order.pop_back();
    }
  }
  return trace.empty() ? 0.0 : double(misses) / double(trace.size());
}

double lru_miss_ratio(const Trace& trace, uint64_t capacity) {
  return lru_miss_ratio_sized(trace, capacity, [](uint64_t) { return uint64_t(1); });
}

template <typename SizeFn>
double belady_miss_ratio_sized(const Trace& trace, uint64_t budget, SizeFn size_of) {
  const int64_t kNever = std::numeric_limits<int64_t>::max();
  // next[i] = index of the next access to the same object, or kNever.
  std::vector<int64_t> next(trace.size());
  {
    std::unordered_map<uint64_t, int64_t> last;
    for (int64_t i = int64_t(trace.size()) - 1; i >= 0; i--) {
      auto it = last.find(trace[i].object_id);
      next[i] = it == last.end() ? kNever : it->second;
      last[trace[i].object_id] = i;
    }
  }

  // Cached objects keyed by next use; ties broken by id for determinism.
  std::set<std::pair<int64_t, uint64_t>> by_next;
  std::unordered_map<uint64_t, int64_t> cached;  // id -> current next-use key
  uint64_t used = 0, misses = 0;
  for (size_t i = 0; i < trace.size(); i++) {
    uint64_t id = trace[i].object_id;
    auto it = cached.find(id);
    if (it != cached.end()) {
      by_next.erase({it->second, id});
      it->second = next[i];
      by_next.insert({next[i], id});
      continue;
    }
    misses++;
    // Demand admission: the new object always enters; farthest-next-use
    // residents make room.
    uint64_t sz = size_of(id);
    if (sz > budget) continue;
    while (used + sz > budget) {
      auto victim = std::prev(by_next.end());
      used -= size_of(victim->second);
      cached.erase(victim->second);
      by_next.erase(victim);
    }
    used += sz;
    cached[id] = next[i];
    by_next.insert({next[i], id});
  }
  return trace.empty() ? 0.0 : double(misses) / double(trace.size());
}

double belady_miss_ratio(const Trace& trace, uint64_t capacity) {
  return belady_miss_ratio_sized(trace, capacity, [](uint64_t) { return uint64_t(1); });
}

void check_capacities(const std::vector<uint64_t>& capacities) {
  for (size_t i = 0; i < capacities.size(); i++) {
    if (capacities[i] == 0) throw ConfigError("capacities must be positive");
    if (i > 0 && capacities[i] < capacities[i - 1])
      throw ConfigError("capacities must be ascending");
  }
}

}  // namespace

double fit_zipf(const Trace& trace) {
  if (trace.empty()) throw InsufficientDataError("fit_zipf: empty trace");
  auto counts = count_by_object(trace);
  if (counts.size() < 10)
    throw InsufficientDataError("fit_zipf: need at least 10 distinct objects");

  std::vector<uint64_t> sorted;
  sorted.reserve(counts.size());
  for (const auto& [_, c] : counts) sorted.push_back(c);
  std::sort(sorted.begin(), sorted.end(), std::greater<>());

  // Count-1 objects flatten the tail; drop them unless that empties the fit.
  size_t n = sorted.size();
  while (n > 0 && sorted[n - 1] < 2) n--;
  if (n < 2) n = sorted.size();

  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (size_t i = 0; i < n; i++) {
    double x = std::log(double(i + 1));
    double y = std::log(double(sorted[i]));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  double denom = double(n) * sxx - sx * sx;
  if (denom == 0) return 0.0;  // single rank
  double slope = (double(n) * sxy - sx * sy) / denom;
  return -slope;
}

TraceStats trace_stats(const Trace& trace) {
  if (trace.empty()) throw InsufficientDataError("trace_stats: empty trace");
  if (!is_time_sorted(trace))
    throw ConfigError("trace_stats requires a time-sorted trace");

  TraceStats st;
  st.total_requests = trace.size();

  auto counts = count_by_object(trace);
  st.distinct_objects = counts.size();

  std::vector<uint64_t> sorted;
  sorted.reserve(counts.size());
  for (const auto& [_, c] : counts) sorted.push_back(c);
  std::sort(sorted.begin(), sorted.end(), std::greater<>());

  const double total = double(trace.size());
  const uint64_t n_obj = sorted.size();
  auto share_top = [&](double frac) {
    auto k = uint64_t(std::ceil(double(n_obj) * frac));
    k = std::min(k, n_obj);
    uint64_t sum = 0;
    for (uint64_t i = 0; i < k; i++) sum += sorted[i];
    return double(sum) / total;
  };
  st.share_top_1pct = share_top(0.01);
  st.share_top_10pct = share_top(0.10);

  // Popularity CDF, downsampled to at most ~2048 rank points.
  {
    uint64_t step = std::max<uint64_t>(1, n_obj / 2048);
    uint64_t cum = 0;
    for (uint64_t i = 0; i < n_obj; i++) {
      cum += sorted[i];
      if ((i + 1) % step == 0 || i + 1 == n_obj)
        st.popularity_cdf.emplace_back(double(i + 1) / double(n_obj),
                                       double(cum) / total);
    }
  }

  // Re-access intervals: gaps between consecutive accesses per object.
  {
    std::unordered_map<uint64_t, uint64_t> last_seen;
    std::map<uint64_t, uint64_t> gap_counts;
    uint64_t n_gaps = 0;
    for (const auto& r : trace) {
      auto it = last_seen.find(r.object_id);
      if (it != last_seen.end()) {
        gap_counts[r.ts_ms - it->second]++;
        n_gaps++;
        it->second = r.ts_ms;
      } else {
        last_seen.emplace(r.object_id, r.ts_ms);
      }
    }
    uint64_t cum = 0;
    for (const auto& [gap, c] : gap_counts) {
      cum += c;
      st.reaccess_cdf.emplace_back(gap, double(cum) / double(n_gaps));
    }
  }

  // Access rate vs age, stratified by lifetime-view quartile.
  {
    constexpr uint64_t kDayMs = 86'400'000;
    std::unordered_map<uint64_t, uint64_t> birth;
    for (const auto& r : trace) birth.emplace(r.object_id, r.ts_ms);

    std::vector<std::pair<uint64_t, uint64_t>> by_pop;  // (count, id)
    by_pop.reserve(counts.size());
    for (const auto& [id, c] : counts) by_pop.emplace_back(c, id);
    std::sort(by_pop.begin(), by_pop.end());
    std::unordered_map<uint64_t, uint32_t> quartile_of;
    for (uint64_t i = 0; i < by_pop.size(); i++)
      quartile_of[by_pop[i].second] = uint32_t(std::min<uint64_t>(3, 4 * i / n_obj));

    uint64_t span_days = (trace.back().ts_ms - trace.front().ts_ms) / kDayMs + 1;
    std::vector<std::vector<uint64_t>> hits(4, std::vector<uint64_t>(span_days, 0));
    for (const auto& r : trace) {
      auto age = uint32_t((r.ts_ms - birth[r.object_id]) / kDayMs);
      hits[quartile_of[r.object_id]][age]++;
    }
    // alive[q][a]: objects in quartile q whose birth leaves >= a full days of
    // observation before the trace ends.
    uint64_t end_ms = trace.back().ts_ms;
    std::vector<std::vector<uint64_t>> alive(4, std::vector<uint64_t>(span_days, 0));
    for (const auto& [id, b] : birth) {
      uint64_t max_age = (end_ms - b) / kDayMs;
      uint32_t q = quartile_of[id];
      for (uint64_t a = 0; a <= max_age && a < span_days; a++) alive[q][a]++;
    }
    for (uint32_t q = 0; q < 4; q++)
      for (uint64_t a = 0; a < span_days; a++)
        if (alive[q][a] > 0)
          st.age_rate.push_back(
              {q, uint32_t(a), double(hits[q][a]) / double(alive[q][a])});
  }

  return st;
}

std::vector<std::pair<uint64_t, double>> miss_ratio_curve(
    const Trace& trace, const std::vector<uint64_t>& capacities,
    MrcPolicy policy) {
  check_capacities(capacities);
  std::vector<std::pair<uint64_t, double>> out;
  out.reserve(capacities.size());
  for (uint64_t cap : capacities)
    out.emplace_back(cap, policy == MrcPolicy::Lru ? lru_miss_ratio(trace, cap)
                                                   : belady_miss_ratio(trace, cap));
  return out;
}

std::vector<std::pair<uint64_t, double>> miss_ratio_curve_bytes(
    const Trace& trace, const Catalog& catalog,
    const std::vector<uint64_t>& byte_capacities, MrcPolicy policy) {
  check_capacities(byte_capacities);
  auto size_of = [&](uint64_t id) {
    auto it = catalog.find(id);
    if (it == catalog.end())
      throw std::runtime_error("trace references object missing from catalog: " +
                               std::to_string(id));
    return it->second.image_bytes;
  };
  std::vector<std::pair<uint64_t, double>> out;
  out.reserve(byte_capacities.size());
  for (uint64_t cap : byte_capacities)
    out.emplace_back(cap, policy == MrcPolicy::Lru
                              ? lru_miss_ratio_sized(trace, cap, size_of)
                              : belady_miss_ratio_sized(trace, cap, size_of));
  return out;
}

Trace downsample(const Trace& trace, uint64_t k_objects, uint64_t seed) {
  if (k_objects == 0) throw ConfigError("k_objects must be >= 1");

  std::vector<uint64_t> ids;  // first-appearance order
  {
    std::unordered_set<uint64_t> seen;
    for (const auto& r : trace)
      if (seen.insert(r.object_id).second) ids.push_back(r.object_id);
  }
  if (k_objects > ids.size())
    throw ConfigError("k_objects exceeds distinct object count");

  std::mt19937_64 rng(seed);
  for (size_t i = ids.size() - 1; i > 0; i--) {
    size_t j = size_t((rng() >> 11) * 0x1.0p-53 * double(i + 1));
    std::swap(ids[i], ids[std::min(j, i)]);
  }
  std::unordered_set<uint64_t> keep(ids.begin(), ids.begin() + long(k_objects));

  Trace out;
  for (const auto& r : trace)
    if (keep.count(r.object_id)) out.push_back(r);
  return out;
}

}  // namespace lbx
