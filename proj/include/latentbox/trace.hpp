#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

namespace lbx {

// One access event. Trace files keep records sorted by non-decreasing ts_ms.
struct TraceRecord {
  uint64_t ts_ms = 0;        // milliseconds since trace epoch
  uint64_t object_id = 0;    // stable across all accesses to the same image
  uint32_t model_id = 0;
  uint32_t model_version = 0;

  friend bool operator==(const TraceRecord&, const TraceRecord&) = default;
};

// Per-object byte sizes in both stored formats.
struct ObjectMeta {
  uint64_t image_bytes = 0;   // decoded / PNG-equivalent size
  uint64_t latent_bytes = 0;  // compressed-latent size, always < image_bytes

  bool valid() const { return latent_bytes > 0 && latent_bytes < image_bytes; }
};

using Trace = std::vector<TraceRecord>;
using Catalog = std::unordered_map<uint64_t, ObjectMeta>;

// CSV trace: header `ts_ms,object_id,model_id,model_version`, decimal fields.
// Lines starting with '#' are comments (used for the invocation audit line).
void write_trace_csv(const std::string& path, const Trace& trace,
                     const std::string& comment = "");
Trace read_trace_csv(const std::string& path);

// Binary trace: magic "LBTR", version byte 0x01, then little-endian records of
// {u64 ts_ms, u64 object_id, u32 model_id, u32 model_version}, 24 bytes each.
void write_trace_bin(const std::string& path, const Trace& trace);
Trace read_trace_bin(const std::string& path);

// Reads either format, sniffing the LBTR magic.
Trace read_trace_any(const std::string& path);

// Catalog CSV: `object_id,image_bytes,latent_bytes`, rows sorted by id.
void write_catalog_csv(const std::string& path, const Catalog& catalog,
                       const std::string& comment = "");
Catalog read_catalog_csv(const std::string& path);

// True if records are sorted by non-decreasing ts_ms.
bool is_time_sorted(const Trace& trace);

}  // namespace lbx
