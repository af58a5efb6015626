#include "latentbox/router.hpp"

#include <algorithm>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "latentbox/error.hpp"

namespace lbx {

uint64_t fnv1a64(const uint8_t* data, size_t len) {
  uint64_t h = 14695981039346656037ULL;
  for (size_t i = 0; i < len; i++) {
    h ^= data[i];
    h *= 1099511628211ULL;
  }
  return h;
}

namespace {

void put_le(uint8_t* out, uint64_t v, int n) {
  for (int i = 0; i < n; i++) out[i] = uint8_t((v >> (8 * i)) & 0xff);
}

// splitmix64 finalizer. FNV-1a alone disperses short structured vnode keys
// poorly (arc shares off uniform by 2x and more); the finalizer restores
// per-node balance while staying trivially portable.
uint64_t mix64(uint64_t x) {
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return x;
}

}  // namespace

uint64_t hash_object_id(uint64_t object_id) {
  uint8_t buf[8];
  put_le(buf, object_id, 8);
  return fnv1a64(buf, 8);
}

HashRing::HashRing(std::vector<uint32_t> nodes, uint32_t vnodes_per_node)
    : nodes_(std::move(nodes)), vnodes_(vnodes_per_node) {
  if (nodes_.empty()) throw ConfigError("ring requires at least one node");
  if (vnodes_ == 0) throw ConfigError("vnodes_per_node must be >= 1");
  std::sort(nodes_.begin(), nodes_.end());

  ring_.reserve(nodes_.size() * vnodes_);
  uint8_t buf[12];
  for (uint32_t node : nodes_) {
    put_le(buf, node, 8);
    for (uint32_t v = 0; v < vnodes_; v++) {
      put_le(buf + 8, v, 4);
      ring_.emplace_back(mix64(fnv1a64(buf, 12)), node);
    }
  }
  std::sort(ring_.begin(), ring_.end());
}

uint32_t HashRing::owner_of(uint64_t object_id) const {
  uint64_t h = hash_object_id(object_id);
  auto it = std::lower_bound(ring_.begin(), ring_.end(),
                             std::make_pair(h, uint32_t(0)));
  if (it == ring_.end()) it = ring_.begin();  // wrap
  return it->second;
}

std::string HashRing::layout_json() const {
  nlohmann::json j;
  j["vnodes_per_node"] = vnodes_;
  nlohmann::json per_node = nlohmann::json::object();
  for (uint32_t node : nodes_) per_node[std::to_string(node)] = nlohmann::json::array();
  for (const auto& [point, node] : ring_)
    per_node[std::to_string(node)].push_back(point);
  j["points"] = per_node;
  return j.dump(2);
}

RouteDecision route(const HashRing& ring, uint64_t object_id,
                    const std::unordered_map<uint32_t, uint32_t>& queue_depths,
                    uint32_t theta) {
  RouteDecision d;
  d.owner_node = ring.owner_of(object_id);
  d.executor_node = d.owner_node;

  auto depth_of = [&](uint32_t node) {
    auto it = queue_depths.find(node);
    if (it == queue_depths.end())
      throw ConfigError("queue_depths must cover all ring nodes");
    return it->second;
  };
  for (uint32_t node : ring.nodes()) depth_of(node);

  if (theta == kNoSpill || depth_of(d.owner_node) < theta) return d;

  // Owner saturated: pick the globally least-loaded node, lowest id on ties.
  uint32_t best = d.owner_node;
  uint32_t best_depth = depth_of(d.owner_node);
  for (uint32_t node : ring.nodes()) {
    uint32_t dep = depth_of(node);
    if (dep < best_depth || (dep == best_depth && node < best)) {
      best = node;
      best_depth = dep;
    }
  }
  d.executor_node = best;
  d.spilled = best != d.owner_node;
  d.writeback_required = d.spilled;
  return d;
}

CoalesceRole Coalescer::begin(uint64_t object_id, uint64_t request_id) {
  auto [it, inserted] = tickets_.try_emplace(object_id);
  it->second.push_back(request_id);
  return inserted ? CoalesceRole::Leader : CoalesceRole::Follower;
}

std::vector<uint64_t> Coalescer::complete(uint64_t object_id) {
  auto it = tickets_.find(object_id);
  if (it == tickets_.end())
    throw std::logic_error("coalesce complete without ticket");
  std::vector<uint64_t> waiters = std::move(it->second);
  tickets_.erase(it);
  return waiters;
}

}  // namespace lbx
