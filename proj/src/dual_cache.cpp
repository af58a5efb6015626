#include "latentbox/dual_cache.hpp"

#include <cmath>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "latentbox/error.hpp"

namespace lbx {

void DualCacheConfig::validate() const {
  if (alpha < 0.0 || alpha > 1.0) throw ConfigError("alpha must be in [0,1]");
  if (!(tail_fraction > 0.0 && tail_fraction < 1.0))
    throw ConfigError("tail_fraction must be in (0,1)");
  if (promotion_threshold < 1) throw ConfigError("promotion_threshold must be >= 1");
}

DualCache::DualCache(const DualCacheConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  recompute_budgets();
}

DualCache::DualCache(const DualCache& other)
    : cfg_(other.cfg_), counters_(other.counters_) {
  tiers_[0] = other.tiers_[0];
  tiers_[1] = other.tiers_[1];
  rebuild_locators();
}

DualCache& DualCache::operator=(const DualCache& other) {
  if (this == &other) return *this;
  cfg_ = other.cfg_;
  counters_ = other.counters_;
  tiers_[0] = other.tiers_[0];
  tiers_[1] = other.tiers_[1];
  rebuild_locators();
  return *this;
}

void DualCache::rebuild_locators() {
  where_.clear();
  for (uint8_t t = 0; t < 2; t++) {
    for (auto it = tiers_[t].main.begin(); it != tiers_[t].main.end(); ++it)
      where_[it->id] = Locator{t, false, it};
    for (auto it = tiers_[t].tail.begin(); it != tiers_[t].tail.end(); ++it)
      where_[it->id] = Locator{t, true, it};
  }
}

namespace {

// floor(frac * total) with protection against ulp wobble: products that are
// integers up to rounding error (0.7 * 70000 = 48999.999...) must not lose a
// whole byte of budget. The tolerance stays well below 0.5 so genuinely
// fractional products (0.5 * odd C) still floor.
uint64_t scaled_budget(double frac, uint64_t total) {
  double x = frac * double(total);
  double r = std::round(x);
  if (std::abs(x - r) < std::max(1e-9, 4e-15 * x)) return uint64_t(r);
  return uint64_t(std::floor(x));
}

}  // namespace

void DualCache::recompute_budgets() {
  tiers_[0].budget = scaled_budget(cfg_.alpha, cfg_.capacity_bytes);
  tiers_[1].budget = scaled_budget(1.0 - cfg_.alpha, cfg_.capacity_bytes);
  for (auto& t : tiers_)
    t.main_budget = scaled_budget(1.0 - cfg_.tail_fraction, t.budget);
}

// Overflow cascade: main overflow demotes LRU entries into the tail, tail
// overflow evicts from the tail's LRU end.
void DualCache::enforce(Tier& tier, std::vector<uint64_t>& evicted) {
  while (tier.main_used > tier.main_budget) {
    auto it = std::prev(tier.main.end());
    tier.main_used -= it->bytes;
    tier.tail_used += it->bytes;
    auto& loc = where_[it->id];
    tier.tail.splice(tier.tail.begin(), tier.main, it);
    loc.in_tail = true;
    loc.it = tier.tail.begin();
  }
  while (tier.tail_used > tier.tail_budget()) {
    auto it = std::prev(tier.tail.end());
    tier.tail_used -= it->bytes;
    evicted.push_back(it->id);
    where_.erase(it->id);
    tier.tail.erase(it);
  }
}

void DualCache::move_to_main_mru(uint8_t tier_idx, Locator& loc) {
  Tier& tier = tiers_[tier_idx];
  if (loc.in_tail) {
    tier.tail_used -= loc.it->bytes;
    tier.main_used += loc.it->bytes;
    tier.main.splice(tier.main.begin(), tier.tail, loc.it);
    loc.in_tail = false;
  } else {
    tier.main.splice(tier.main.begin(), tier.main, loc.it);
  }
  loc.it = tier.main.begin();
}

std::vector<uint64_t> DualCache::admit(uint8_t tier_idx, uint64_t id,
                                       uint64_t bytes) {
  if (where_.count(id))
    throw std::logic_error("admit: object already cached");
  Tier& tier = tiers_[tier_idx];
  if (bytes > tier.budget) return {id};  // bypass, no state change

  tier.main.push_front(Entry{id, bytes, 0});
  tier.main_used += bytes;
  where_[id] = Locator{tier_idx, false, tier.main.begin()};
  std::vector<uint64_t> evicted;
  enforce(tier, evicted);
  return evicted;
}

std::vector<uint64_t> DualCache::admit_latent(uint64_t object_id,
                                              const ObjectMeta& meta) {
  return admit(1, object_id, meta.latent_bytes);
}

std::vector<uint64_t> DualCache::admit_image(uint64_t object_id,
                                             const ObjectMeta& meta) {
  return admit(0, object_id, meta.image_bytes);
}

LookupResult DualCache::lookup(uint64_t object_id, const ObjectMeta& meta) {
  if (!meta.valid())
    throw ConfigError("lookup requires object sizes with 0 < latent < image");

  counters_.total_requests++;
  auto found = where_.find(object_id);
  if (found == where_.end()) {
    counters_.image_misses++;
    counters_.full_misses++;
    return LookupResult{Outcome::FullMiss, false, false};
  }

  Locator& loc = found->second;
  LookupResult res;
  res.tail_hit = loc.in_tail;

  if (loc.tier == 0) {
    res.outcome = Outcome::ImageHit;
    if (res.tail_hit) counters_.image_tail_hits++;
    move_to_main_mru(0, loc);
    std::vector<uint64_t> evicted;
    enforce(tiers_[0], evicted);  // the move may overflow main
    return res;
  }

  res.outcome = Outcome::LatentHit;
  counters_.image_misses++;
  if (res.tail_hit) counters_.latent_tail_hits++;
  move_to_main_mru(1, loc);
  std::vector<uint64_t> evicted;
  enforce(tiers_[1], evicted);

  // The enforce above can evict the hit entry itself when budgets shrank
  // underneath it; the hit still counts, but there is nothing to promote.
  auto again = where_.find(object_id);
  if (again == where_.end()) return res;
  Locator& cur = again->second;

  if (cur.it->hits + 1 >= cfg_.promotion_threshold) {
    // Promotion is attempted only if the decoded image fits the image main
    // segment on its own; otherwise the counter saturates at h-1 and the
    // object stays latent.
    if (meta.image_bytes <= tiers_[0].main_budget) {
      Tier& lat = tiers_[1];
      if (cur.in_tail) {
        lat.tail_used -= cur.it->bytes;
        lat.tail.erase(cur.it);
      } else {
        lat.main_used -= cur.it->bytes;
        lat.main.erase(cur.it);
      }
      where_.erase(again);
      tiers_[0].main.push_front(Entry{object_id, meta.image_bytes, 0});
      tiers_[0].main_used += meta.image_bytes;
      where_[object_id] = Locator{0, false, tiers_[0].main.begin()};
      enforce(tiers_[0], evicted);
      res.promoted = true;
    } else {
      cur.it->hits = cfg_.promotion_threshold - 1;
    }
  } else {
    cur.it->hits++;
  }
  return res;
}

std::vector<uint64_t> DualCache::set_alpha(double alpha) {
  if (alpha < 0.0 || alpha > 1.0) throw ConfigError("alpha must be in [0,1]");
  cfg_.alpha = alpha;
  recompute_budgets();
  std::vector<uint64_t> evicted;
  enforce(tiers_[0], evicted);
  enforce(tiers_[1], evicted);
  return evicted;
}

WindowCounters DualCache::snapshot_and_reset_counters() {
  WindowCounters out = counters_;
  counters_ = WindowCounters{};
  return out;
}

bool DualCache::in_image_tier(uint64_t object_id) const {
  auto it = where_.find(object_id);
  return it != where_.end() && it->second.tier == 0;
}

bool DualCache::in_latent_tier(uint64_t object_id) const {
  auto it = where_.find(object_id);
  return it != where_.end() && it->second.tier == 1;
}

std::vector<uint64_t> DualCache::resident_ids() const {
  std::vector<uint64_t> ids;
  ids.reserve(where_.size());
  for (const auto& tier : tiers_) {
    for (const auto& e : tier.main) ids.push_back(e.id);
    for (const auto& e : tier.tail) ids.push_back(e.id);
  }
  return ids;
}

std::string DualCache::dump_json() const {
  nlohmann::json j;
  j["capacity_bytes"] = cfg_.capacity_bytes;
  j["alpha"] = cfg_.alpha;
  j["tail_fraction"] = cfg_.tail_fraction;
  j["promotion_threshold"] = cfg_.promotion_threshold;
  const char* names[2] = {"image", "latent"};
  for (int t = 0; t < 2; t++) {
    nlohmann::json tier;
    tier["budget"] = tiers_[t].budget;
    tier["main_budget"] = tiers_[t].main_budget;
    tier["main_used"] = tiers_[t].main_used;
    tier["tail_used"] = tiers_[t].tail_used;
    std::vector<uint64_t> ids;
    for (const auto& e : tiers_[t].main) ids.push_back(e.id);
    tier["main"] = ids;
    ids.clear();
    for (const auto& e : tiers_[t].tail) ids.push_back(e.id);
    tier["tail"] = ids;
    j[names[t]] = tier;
  }
  j["counters"] = {{"total_requests", counters_.total_requests},
                   {"image_misses", counters_.image_misses},
                   {"full_misses", counters_.full_misses},
                   {"image_tail_hits", counters_.image_tail_hits},
                   {"latent_tail_hits", counters_.latent_tail_hits}};
  return j.dump(2);
}

void DualCache::check_invariants() const {
  uint64_t n = 0;
  for (int t = 0; t < 2; t++) {
    uint64_t main_used = 0, tail_used = 0;
    for (const auto& e : tiers_[t].main) main_used += e.bytes;
    for (const auto& e : tiers_[t].tail) tail_used += e.bytes;
    if (main_used != tiers_[t].main_used || tail_used != tiers_[t].tail_used)
      throw std::logic_error("used-bytes accounting drifted");
    if (main_used > tiers_[t].main_budget) throw std::logic_error("main over budget");
    if (tail_used > tiers_[t].tail_budget()) throw std::logic_error("tail over budget");
    n += tiers_[t].main.size() + tiers_[t].tail.size();
  }
  if (n != where_.size()) throw std::logic_error("locator map out of sync");
  for (const auto& [id, loc] : where_)
    if (loc.it->id != id) throw std::logic_error("locator points at wrong entry");
}

}  // namespace lbx
