#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

namespace lbx {

// 64-bit FNV-1a. Keys are hashed from explicit little-endian byte strings so
// ring layouts are reproducible across languages and platforms.
uint64_t fnv1a64(const uint8_t* data, size_t len);
uint64_t hash_object_id(uint64_t object_id);

// Spill threshold value meaning "never spill".
constexpr uint32_t kNoSpill = UINT32_MAX;

// Consistent-hash ring: every node contributes vnodes_per_node points, each
// placed at splitmix64(fnv1a64(8-byte LE node id || 4-byte LE vnode index)).
// Object lookups use the plain FNV-1a hash of the LE object id.
class HashRing {
 public:
  HashRing(std::vector<uint32_t> nodes, uint32_t vnodes_per_node);

  // First ring point clockwise (>=) from hash_object_id(object_id).
  uint32_t owner_of(uint64_t object_id) const;

  const std::vector<uint32_t>& nodes() const { return nodes_; }
  uint32_t vnodes_per_node() const { return vnodes_; }

  // Ring layout (sorted hash points per node) as JSON, for golden tests.
  std::string layout_json() const;

 private:
  std::vector<uint32_t> nodes_;  // sorted
  uint32_t vnodes_;
  std::vector<std::pair<uint64_t, uint32_t>> ring_;  // (point, node) ascending
};

struct RouteDecision {
  uint32_t owner_node = 0;
  uint32_t executor_node = 0;
  bool spilled = false;
  bool writeback_required = false;
};

// Owner dispatch with queue-depth spillover: below theta the owner executes;
// otherwise work moves to the globally least-loaded node (ties to the lowest
// node id) and the result must be written back to the owner's cache. Spilling
// to self collapses to normal dispatch.
RouteDecision route(const HashRing& ring, uint64_t object_id,
                    const std::unordered_map<uint32_t, uint32_t>& queue_depths,
                    uint32_t theta);

enum class CoalesceRole { Leader, Follower };

// In-flight request map: the first caller for an object becomes the Leader and
// owns the work; later callers wait on the same ticket.
class Coalescer {
 public:
  CoalesceRole begin(uint64_t object_id, uint64_t request_id);
  // Removes the ticket and returns all waiting request ids (leader first).
  // Throws std::logic_error if no ticket exists (double completion).
  std::vector<uint64_t> complete(uint64_t object_id);
  bool in_flight(uint64_t object_id) const { return tickets_.count(object_id) > 0; }
  size_t open_tickets() const { return tickets_.size(); }

 private:
  std::unordered_map<uint64_t, std::vector<uint64_t>> tickets_;
};

}  // namespace lbx
