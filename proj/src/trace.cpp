#include "latentbox/trace.hpp"

#include <algorithm>
#include <array>
#include <cstring>
#include <fstream>
#include <sstream>

#include "latentbox/error.hpp"

namespace lbx {

namespace {

std::ofstream open_out(const std::string& path, bool binary) {
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  return out;
}

std::ifstream open_in(const std::string& path, bool binary) {
  std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  return in;
}

void put_u32(std::string& buf, uint32_t v) {
  for (int i = 0; i < 4; i++) buf.push_back(char((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& buf, uint64_t v) {
  for (int i = 0; i < 8; i++) buf.push_back(char((v >> (8 * i)) & 0xff));
}

uint64_t get_u64(const char* p) {
  uint64_t v = 0;
  for (int i = 7; i >= 0; i--) v = (v << 8) | uint8_t(p[i]);
  return v;
}

uint32_t get_u32(const char* p) {
  uint32_t v = 0;
  for (int i = 3; i >= 0; i--) v = (v << 8) | uint8_t(p[i]);
  return v;
}

constexpr char kMagic[4] = {'L', 'B', 'T', 'R'};
constexpr uint8_t kVersion = 0x01;
constexpr size_t kRecordBytes = 24;

}  // namespace

bool is_time_sorted(const Trace& trace) {
  for (size_t i = 1; i < trace.size(); i++)
    if (trace[i].ts_ms < trace[i - 1].ts_ms) return false;
  return true;
}

void write_trace_csv(const std::string& path, const Trace& trace,
                     const std::string& comment) {
  auto out = open_out(path, false);
  if (!comment.empty()) out << "# " << comment << "\n";
  out << "ts_ms,object_id,model_id,model_version\n";
  for (const auto& r : trace)
    out << r.ts_ms << ',' << r.object_id << ',' << r.model_id << ','
        << r.model_version << '\n';
}

Trace read_trace_csv(const std::string& path) {
  auto in = open_in(path, false);
  Trace trace;
  std::string line;
  bool saw_header = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!saw_header) {  // header row
      saw_header = true;
      continue;
    }
    TraceRecord r;
    if (std::sscanf(line.c_str(), "%lu,%lu,%u,%u", &r.ts_ms, &r.object_id,
                    &r.model_id, &r.model_version) != 4)
      throw std::runtime_error("bad trace row in " + path + ": " + line);
    trace.push_back(r);
  }
  return trace;
}

void write_trace_bin(const std::string& path, const Trace& trace) {
  auto out = open_out(path, true);
  std::string buf;
  buf.reserve(5 + trace.size() * kRecordBytes);
  buf.append(kMagic, 4);
  buf.push_back(char(kVersion));
  for (const auto& r : trace) {
    put_u64(buf, r.ts_ms);
    put_u64(buf, r.object_id);
    put_u32(buf, r.model_id);
    put_u32(buf, r.model_version);
  }
  out.write(buf.data(), std::streamsize(buf.size()));
}

Trace read_trace_bin(const std::string& path) {
  auto in = open_in(path, true);
  std::array<char, 5> head{};
  if (!in.read(head.data(), 5) || std::memcmp(head.data(), kMagic, 4) != 0)
    throw std::runtime_error("not an LBTR trace: " + path);
  if (uint8_t(head[4]) != kVersion)
    throw std::runtime_error("unsupported LBTR version in " + path);
  Trace trace;
  std::array<char, kRecordBytes> rec{};
  while (in.read(rec.data(), kRecordBytes)) {
    TraceRecord r;
    r.ts_ms = get_u64(rec.data());
    r.object_id = get_u64(rec.data() + 8);
    r.model_id = get_u32(rec.data() + 16);
    r.model_version = get_u32(rec.data() + 20);
    trace.push_back(r);
  }
  if (in.gcount() != 0)
    throw std::runtime_error("truncated LBTR trace: " + path);
  return trace;
}

Trace read_trace_any(const std::string& path) {
  {
    auto in = open_in(path, true);
    std::array<char, 4> head{};
    if (in.read(head.data(), 4) && std::memcmp(head.data(), kMagic, 4) == 0)
      return read_trace_bin(path);
  }
  return read_trace_csv(path);
}

void write_catalog_csv(const std::string& path, const Catalog& catalog,
                       const std::string& comment) {
  std::vector<uint64_t> ids;
  ids.reserve(catalog.size());
  for (const auto& [id, _] : catalog) ids.push_back(id);
  std::sort(ids.begin(), ids.end());

  auto out = open_out(path, false);
  if (!comment.empty()) out << "# " << comment << "\n";
  out << "object_id,image_bytes,latent_bytes\n";
  for (uint64_t id : ids) {
    const auto& m = catalog.at(id);
    out << id << ',' << m.image_bytes << ',' << m.latent_bytes << '\n';
  }
}

Catalog read_catalog_csv(const std::string& path) {
  auto in = open_in(path, false);
  Catalog catalog;
  std::string line;
  bool saw_header = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!saw_header) {
      saw_header = true;
      continue;
    }
    uint64_t id;
    ObjectMeta m;
    if (std::sscanf(line.c_str(), "%lu,%lu,%lu", &id, &m.image_bytes,
                    &m.latent_bytes) != 3)
      throw std::runtime_error("bad catalog row in " + path + ": " + line);
    if (!m.valid())
      throw std::runtime_error("catalog sizes must satisfy 0 < latent_bytes < image_bytes: " + line);
    catalog.emplace(id, m);
  }
  return catalog;
}

}  // namespace lbx
