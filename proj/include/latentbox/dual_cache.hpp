#pragma once

#include <cstdint>
#include <list>
#include <string>
#include <unordered_map>
#include <vector>

#include "latentbox/trace.hpp"

namespace lbx {

struct DualCacheConfig {
  uint64_t capacity_bytes = 0;       // C, shared by both tiers
  double alpha = 0.5;                // image-tier fraction of C
  double tail_fraction = 0.10;       // tau, per-tier tail share
  uint32_t promotion_threshold = 8;  // h, latent hits before promotion

  void validate() const;
};

// Per-window counters consumed by the split tuner.
struct WindowCounters {
  uint64_t total_requests = 0;
  uint64_t image_misses = 0;     // request missed the image tier
  uint64_t full_misses = 0;      // missed both tiers
  uint64_t image_tail_hits = 0;  // image hits served from the tail segment
  uint64_t latent_tail_hits = 0;

  friend bool operator==(const WindowCounters&, const WindowCounters&) = default;
};

enum class Outcome { ImageHit, LatentHit, FullMiss };

struct LookupResult {
  Outcome outcome = Outcome::FullMiss;
  bool promoted = false;  // latent hit that crossed the promotion threshold
  bool tail_hit = false;  // served from the tail segment of its tier
};

// Per-node dual-format cache: one byte budget C split by alpha into an image
// tier and a latent tier, each a segmented LRU with a main segment of fraction
// (1 - tau) and a thin tail segment whose hits estimate the marginal value of
// the tier's last tau of capacity. An object lives in at most one tier.
//
// Single-owner mutable state: callers serialize access per node.
class DualCache {
 public:
  explicit DualCache(const DualCacheConfig& cfg);
  DualCache(const DualCache& other);
  DualCache& operator=(const DualCache& other);
  DualCache(DualCache&&) = default;
  DualCache& operator=(DualCache&&) = default;

  // Cascading probe: image tier, then latent tier. Hits move the entry to the
  // MRU end of the tier's main segment. A latent hit increments the entry's
  // hit counter and promotes it into the image tier once the counter reaches
  // the threshold; promotion never evicts the object being promoted, and an
  // object too large for the image main segment keeps a saturated counter
  // instead. On a full miss the caller is expected to admit_latent().
  LookupResult lookup(uint64_t object_id, const ObjectMeta& meta);

  // Inserts a fetched latent at the MRU end of the latent main segment with a
  // zero hit counter. Returns ids evicted by the overflow cascade; an object
  // larger than the whole latent tier bypasses the cache and is returned as
  // immediately evicted. The object must not already be cached.
  std::vector<uint64_t> admit_latent(uint64_t object_id, const ObjectMeta& meta);

  // Same, for decoded images into the image tier (image-only configurations
  // admit on miss instead of promoting through the latent tier).
  std::vector<uint64_t> admit_image(uint64_t object_id, const ObjectMeta& meta);

  // Recomputes both tier budgets and evicts overflow, tail LRU end first.
  std::vector<uint64_t> set_alpha(double alpha);

  WindowCounters snapshot_and_reset_counters();
  const WindowCounters& counters() const { return counters_; }

  double alpha() const { return cfg_.alpha; }
  const DualCacheConfig& config() const { return cfg_; }
  uint64_t image_budget() const { return tiers_[0].budget; }
  uint64_t latent_budget() const { return tiers_[1].budget; }
  uint64_t image_used() const { return tiers_[0].used(); }
  uint64_t latent_used() const { return tiers_[1].used(); }

  bool contains(uint64_t object_id) const { return where_.count(object_id) > 0; }
  bool in_image_tier(uint64_t object_id) const;
  bool in_latent_tier(uint64_t object_id) const;

  // Every resident object id, both tiers, in deterministic MRU->LRU order.
  std::vector<uint64_t> resident_ids() const;

  // State dump (tier contents MRU->LRU, budgets, counters) for debugging and
  // golden tests.
  std::string dump_json() const;

  // Throws std::logic_error if any structural invariant is violated.
  void check_invariants() const;

 private:
  struct Entry {
    uint64_t id;
    uint64_t bytes;
    uint32_t hits;  // latent tier only
  };
  using EntryList = std::list<Entry>;

  struct Tier {
    EntryList main;  // MRU front
    EntryList tail;
    uint64_t main_used = 0;
    uint64_t tail_used = 0;
    uint64_t budget = 0;
    uint64_t main_budget = 0;

    uint64_t used() const { return main_used + tail_used; }
    uint64_t tail_budget() const { return budget - main_budget; }
  };

  struct Locator {
    uint8_t tier;  // 0 = image, 1 = latent
    bool in_tail;
    EntryList::iterator it;
  };

  void recompute_budgets();
  void enforce(Tier& tier, std::vector<uint64_t>& evicted);
  void move_to_main_mru(uint8_t tier_idx, Locator& loc);
  std::vector<uint64_t> admit(uint8_t tier_idx, uint64_t id, uint64_t bytes);
  void rebuild_locators();

  DualCacheConfig cfg_;
  Tier tiers_[2];  // [0] image, [1] latent
  std::unordered_map<uint64_t, Locator> where_;
  WindowCounters counters_;
};

}  // namespace lbx
