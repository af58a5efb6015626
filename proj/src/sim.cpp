#include "latentbox/sim.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <memory>
#include <queue>
#include <random>
#include <sstream>
#include <tuple>

#include <nlohmann/json.hpp>

#include "latentbox/error.hpp"

namespace lbx {

void LatencyModel::validate() const {
  if (net_ms <= 0) throw ConfigError("net_ms must be > 0");
  if (decode_ms <= 0) throw ConfigError("decode_ms must be > 0");
  if (intra_cluster_ms <= 0) throw ConfigError("intra_cluster_ms must be > 0");
  switch (fetch_kind) {
    case FetchKind::Constant:
      if (fetch_const_ms <= 0) throw ConfigError("fetch_const_ms must be > 0");
      break;
    case FetchKind::Lognormal:
      if (fetch_sigma < 0) throw ConfigError("fetch_sigma must be >= 0");
      break;
    case FetchKind::Empirical:
      if (fetch_table.empty()) throw ConfigError("fetch_table must be non-empty");
      for (double v : fetch_table)
        if (v <= 0) throw ConfigError("fetch_table entries must be > 0");
      break;
  }
}

double LatencyModel::fetch_mean_ms() const {
  switch (fetch_kind) {
    case FetchKind::Constant:
      return fetch_const_ms;
    case FetchKind::Lognormal:
      return std::exp(fetch_mu + 0.5 * fetch_sigma * fetch_sigma);
    case FetchKind::Empirical: {
      double s = 0;
      for (double v : fetch_table) s += v;
      return s / double(fetch_table.size());
    }
  }
  return fetch_const_ms;
}

const char* policy_name(Policy p) {
  switch (p) {
    case Policy::ImgStore: return "imgstore";
    case Policy::DecodeAll: return "decode-all";
    case Policy::LbImgCache: return "lb-img";
    case Policy::LbLatentCache: return "lb-latent";
    case Policy::LbStatic: return "lb-static";
    case Policy::LbAdaptive: return "lb-adaptive";
  }
  return "?";
}

Policy policy_from_name(const std::string& name) {
  for (Policy p : {Policy::ImgStore, Policy::DecodeAll, Policy::LbImgCache,
                   Policy::LbLatentCache, Policy::LbStatic, Policy::LbAdaptive})
    if (name == policy_name(p)) return p;
  throw ConfigError("unknown policy: " + name);
}

void ClusterConfig::validate() const {
  if (n_nodes < 1) throw ConfigError("n_nodes must be >= 1");
  if (gpus_per_node < 1) throw ConfigError("gpus_per_node must be >= 1");
  if (vnodes_per_node < 1) throw ConfigError("vnodes_per_node must be >= 1");
  if (alpha0 < 0 || alpha0 > 1) throw ConfigError("alpha0 must be in [0,1]");
  if (!(tail_fraction > 0 && tail_fraction < 1))
    throw ConfigError("tail_fraction must be in (0,1)");
  if (promotion_threshold < 1) throw ConfigError("promotion_threshold must be >= 1");
  if (warmup_fraction < 0 || warmup_fraction >= 1)
    throw ConfigError("warmup_fraction must be in [0,1)");
  if (time_scale <= 0) throw ConfigError("time_scale must be > 0");
  latency.validate();
  TunerConfig t = tuner;
  if (t.window_requests == 0) t.window_requests = 1;  // auto, resolved at run
  t.validate();
}

namespace {

struct Ticket {
  uint64_t object_id = 0;
  uint64_t leader = 0;  // request index
  Outcome outcome = Outcome::FullMiss;
  bool spilled = false;
  bool needs_gpu = false;
  double cloud_fetch_ms = 0;  // > 0 when the work includes a cloud fetch
  uint32_t owner = 0, executor = 0;
  // Contiguous stage boundaries: t0 -> fetch_end -> gpu_start -> gpu_end -> complete.
  double t0 = 0, fetch_end = 0, gpu_start = 0, gpu_end = 0, complete = 0;
};

struct Gpu {
  double free_at = 0;
  uint32_t depth = 0;  // jobs queued + running
};

struct NodeState {
  std::unique_ptr<DualCache> cache;  // null for DecodeAll
  TunerState tuner;
  std::vector<Gpu> gpus;
  uint64_t window_lookups = 0;
  double window_cost_sum = 0;
};

enum class EvKind : uint8_t { JobReady, JobDone, Complete };

struct Ev {
  double t = 0;
  uint64_t seq = 0;
  EvKind kind = EvKind::Complete;
  uint32_t node = 0, gpu = 0;
  int64_t ticket = -1;  // -1: off-path background decode
};

struct EvLater {
  bool operator()(const Ev& a, const Ev& b) const {
    return std::tie(a.t, a.seq) > std::tie(b.t, b.seq);
  }
};

double overlap(double a, double x1, double x2) {
  return std::max(0.0, x2 - std::max(a, x1));
}

LatencySummary summarize(std::vector<double> v) {
  LatencySummary s;
  if (v.empty()) return s;
  double sum = 0;
  for (double x : v) sum += x;
  s.mean = sum / double(v.size());
  std::sort(v.begin(), v.end());
  auto at = [&](double q) {
    auto idx = size_t(std::ceil(q * double(v.size())));
    return v[std::min(v.size() - 1, idx == 0 ? 0 : idx - 1)];
  };
  s.p50 = at(0.50);
  s.p95 = at(0.95);
  s.p99 = at(0.99);
  return s;
}

class Engine {
 public:
  Engine(const Trace& trace, const Catalog& catalog, const ClusterConfig& cfg)
      : trace_(trace),
        catalog_(catalog),
        cfg_(cfg),
        ring_(make_node_ids(cfg.n_nodes), cfg.vnodes_per_node),
        rng_(cfg.seed) {
    cfg_.validate();
    if (!is_time_sorted(trace_)) throw ConfigError("trace must be time-sorted");

    tcfg_ = cfg_.tuner;
    if (tcfg_.window_requests == 0)
      tcfg_.window_requests = std::max<uint64_t>(10'000, trace_.size() / 60);

    double a0 = cfg_.alpha0;
    if (cfg_.policy == Policy::ImgStore || cfg_.policy == Policy::LbImgCache) a0 = 1.0;
    if (cfg_.policy == Policy::LbLatentCache) a0 = 0.0;

    nodes_.resize(cfg_.n_nodes);
    for (auto& n : nodes_) {
      if (cfg_.policy != Policy::DecodeAll) {
        DualCacheConfig cc;
        cc.capacity_bytes = cfg_.node_cache_bytes;
        cc.alpha = a0;
        cc.tail_fraction = cfg_.tail_fraction;
        cc.promotion_threshold = cfg_.promotion_threshold;
        n.cache = std::make_unique<DualCache>(cc);
      }
      n.tuner.alpha = a0;
      n.gpus.resize(cfg_.gpus_per_node);
    }
    rep_.decodes_by_node.assign(cfg_.n_nodes, 0);
    rep_.requests.resize(trace_.size());
  }

  SimReport run() {
    for (size_t i = 0; i < trace_.size(); i++) {
      double t = arrive(i);
      drain(t);
      on_arrival(i, t);
    }
    drain(std::numeric_limits<double>::infinity());
    finalize();
    return std::move(rep_);
  }

 private:
  static std::vector<uint32_t> make_node_ids(uint32_t n) {
    std::vector<uint32_t> ids(n);
    for (uint32_t i = 0; i < n; i++) ids[i] = i;
    return ids;
  }

  double arrive(size_t i) const { return double(trace_[i].ts_ms) / cfg_.time_scale; }

  double uniform01() { return double(rng_() >> 11) * 0x1.0p-53; }

  double fetch_sample() {
    const auto& lm = cfg_.latency;
    switch (lm.fetch_kind) {
      case LatencyModel::FetchKind::Constant:
        return lm.fetch_const_ms;
      case LatencyModel::FetchKind::Lognormal: {
        double u1 = 1.0 - uniform01();
        double u2 = uniform01();
        double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
        return std::exp(lm.fetch_mu + lm.fetch_sigma * z);
      }
      case LatencyModel::FetchKind::Empirical: {
        auto idx = size_t(uniform01() * double(lm.fetch_table.size()));
        return lm.fetch_table[std::min(idx, lm.fetch_table.size() - 1)];
      }
    }
    return lm.fetch_const_ms;
  }

  const ObjectMeta& meta_of(uint64_t id) const {
    auto it = catalog_.find(id);
    if (it == catalog_.end())
      throw std::runtime_error("trace references object missing from catalog: " +
                               std::to_string(id));
    return it->second;
  }

  uint32_t least_loaded_gpu(const NodeState& n) const {
    uint32_t best = 0;
    for (uint32_t g = 1; g < n.gpus.size(); g++)
      if (n.gpus[g].depth < n.gpus[best].depth) best = g;
    return best;
  }

  uint32_t node_depth(uint32_t node) const {
    const auto& n = nodes_[node];
    return n.gpus[least_loaded_gpu(n)].depth;
  }

  RouteDecision route_gpu_work(uint64_t object_id) {
    std::unordered_map<uint32_t, uint32_t> depths;
    depths.reserve(cfg_.n_nodes);
    for (uint32_t i = 0; i < cfg_.n_nodes; i++) depths[i] = node_depth(i);
    return route(ring_, object_id, depths, cfg_.theta);
  }

  void push_event(double t, EvKind kind, uint32_t node, uint32_t gpu, int64_t ticket) {
    events_.push(Ev{t, seq_++, kind, node, gpu, ticket});
  }

  int64_t new_ticket(uint64_t object_id, uint64_t leader, Outcome outcome, double t0) {
    tickets_.push_back(Ticket{});
    Ticket& tk = tickets_.back();
    tk.object_id = object_id;
    tk.leader = leader;
    tk.outcome = outcome;
    tk.t0 = tk.fetch_end = tk.gpu_start = tk.gpu_end = t0;
    return int64_t(tickets_.size()) - 1;
  }

  void fire_window(uint32_t node_idx) {
    NodeState& n = nodes_[node_idx];
    WindowCounters c = n.cache->snapshot_and_reset_counters();
    WindowRates rates = rates_from_counters(c);
    double td = n.tuner.seen_decode ? n.tuner.t_decode_ms : cfg_.latency.decode_ms;
    double tf = n.tuner.seen_fetch ? n.tuner.t_fetch_ms : cfg_.latency.fetch_mean_ms();
    double d = gradient_ms(rates, td, tf);

    WindowLog log;
    log.window_idx = window_counter_++;
    log.node = node_idx;
    log.alpha = n.cache->alpha();
    log.counters = c;
    log.rates = rates;
    log.gradient = d;
    log.t_decode_ms = td;
    log.t_fetch_ms = tf;
    log.measured_mean_ms = n.window_cost_sum / double(c.total_requests);
    rep_.windows.push_back(log);

    if (cfg_.policy == Policy::LbAdaptive) {
      double next = step_alpha(tcfg_, n.cache->alpha(), d);
      n.cache->set_alpha(next);
      n.tuner.alpha = next;
      n.tuner.last_gradient = d;
    }
    n.window_lookups = 0;
    n.window_cost_sum = 0;
  }

  void record_image_hit(size_t i, uint32_t node) {
    RequestRecord& r = rep_.requests[i];
    r.ts_ms = trace_[i].ts_ms;
    r.object_id = trace_[i].object_id;
    r.outcome = Outcome::ImageHit;
    r.net_ms = cfg_.latency.net_ms;
    r.total_ms = cfg_.latency.net_ms;
    r.node = node;
  }

  void on_arrival(size_t i, double t) {
    const TraceRecord& rec = trace_[i];
    const ObjectMeta& meta = meta_of(rec.object_id);

    if (cfg_.policy == Policy::DecodeAll) {
      int64_t ti = new_ticket(rec.object_id, i, Outcome::FullMiss, t);
      Ticket& tk = tickets_[size_t(ti)];
      RouteDecision d = route_gpu_work(rec.object_id);
      tk.owner = d.owner_node;
      tk.executor = d.executor_node;
      tk.spilled = d.spilled;
      if (d.spilled) rep_.spill_events++;
      tk.needs_gpu = true;
      tk.cloud_fetch_ms = fetch_sample();
      tk.fetch_end = t + tk.cloud_fetch_ms;
      rep_.fetch_events++;
      push_event(tk.fetch_end, EvKind::JobReady, tk.executor, 0, ti);
      return;
    }

    // A request for an in-flight object waits on the existing work and never
    // probes the cache.
    if (coalescer_.in_flight(rec.object_id)) {
      coalescer_.begin(rec.object_id, i);
      return;
    }

    uint32_t owner = ring_.owner_of(rec.object_id);
    NodeState& n = nodes_[owner];
    LookupResult res = n.cache->lookup(rec.object_id, meta);

    // Window accounting uses the nominal per-outcome costs so the expected
    // latency identity can be checked against the same counters.
    double nominal = res.outcome == Outcome::ImageHit ? 0.0
                     : res.outcome == Outcome::LatentHit
                         ? cfg_.latency.decode_ms
                         : cfg_.latency.decode_ms + cfg_.latency.fetch_mean_ms();
    n.window_lookups++;
    n.window_cost_sum += nominal;
    bool window_due = n.window_lookups >= tcfg_.window_requests;

    if (res.outcome == Outcome::ImageHit) {
      record_image_hit(i, owner);
      if (window_due) fire_window(owner);
      return;
    }

    coalescer_.begin(rec.object_id, i);  // leader
    int64_t ti = new_ticket(rec.object_id, i, res.outcome, t);
    Ticket& tk = tickets_[size_t(ti)];
    tk.owner = owner;
    tk.executor = owner;

    if (res.outcome == Outcome::LatentHit) {
      tk.needs_gpu = true;
      RouteDecision d = route_gpu_work(rec.object_id);
      tk.executor = d.executor_node;
      tk.spilled = d.spilled;
      if (d.spilled) {
        rep_.spill_events++;
        rep_.writebacks++;
        tk.fetch_end = t + cfg_.latency.intra_cluster_ms;  // ship the latent
      }
      push_event(tk.fetch_end, EvKind::JobReady, tk.executor, 0, ti);
      // Off-path promotion decode: extra owner-GPU work, behind the request.
      if (res.promoted && cfg_.promotion_decode_offpath)
        push_event(t, EvKind::JobReady, owner, 0, -1);
    } else {  // FullMiss
      if (cfg_.policy == Policy::ImgStore || cfg_.policy == Policy::LbImgCache)
        n.cache->admit_image(rec.object_id, meta);
      else
        n.cache->admit_latent(rec.object_id, meta);

      rep_.fetch_events++;
      if (cfg_.policy == Policy::ImgStore) {
        // PNG fetch: transfer time scales with the image/latent size ratio.
        double png = fetch_sample() * (double(meta.image_bytes) / double(meta.latent_bytes));
        tk.cloud_fetch_ms = png;
        tk.fetch_end = tk.gpu_start = tk.gpu_end = t + png;
        tk.complete = tk.gpu_end + cfg_.latency.net_ms;
        push_event(tk.complete, EvKind::Complete, owner, 0, ti);
      } else {
        tk.needs_gpu = true;
        RouteDecision d = route_gpu_work(rec.object_id);
        tk.executor = d.executor_node;
        tk.spilled = d.spilled;
        if (d.spilled) {
          rep_.spill_events++;
          rep_.writebacks++;
        }
        tk.cloud_fetch_ms = fetch_sample();
        tk.fetch_end = t + tk.cloud_fetch_ms;
        push_event(tk.fetch_end, EvKind::JobReady, tk.executor, 0, ti);
      }
    }
    if (window_due) fire_window(owner);
  }

  void on_job_ready(const Ev& ev) {
    NodeState& n = nodes_[ev.node];
    uint32_t g = least_loaded_gpu(n);
    Gpu& gpu = n.gpus[g];
    double start = std::max(ev.t, gpu.free_at);
    gpu.free_at = start + cfg_.latency.decode_ms;
    gpu.depth++;
    push_event(gpu.free_at, EvKind::JobDone, ev.node, g, ev.ticket);

    if (ev.ticket >= 0) {
      Ticket& tk = tickets_[size_t(ev.ticket)];
      tk.gpu_start = start;
      tk.gpu_end = gpu.free_at;
      tk.complete = tk.gpu_end + cfg_.latency.net_ms;
      queue_waits_.emplace_back(tk.leader, start - ev.t);
      if (tk.cloud_fetch_ms > 0 && cfg_.policy != Policy::DecodeAll)
        observe_latency(nodes_[tk.owner].tuner, LatencyKind::Fetch,
                        tk.cloud_fetch_ms, tcfg_.ewma_weight);
      push_event(tk.complete, EvKind::Complete, ev.node, 0, ev.ticket);
    }
  }

  void on_job_done(const Ev& ev) {
    NodeState& n = nodes_[ev.node];
    n.gpus[ev.gpu].depth--;
    rep_.decode_events++;
    rep_.decodes_by_node[ev.node]++;
    if (ev.ticket >= 0 && cfg_.policy != Policy::DecodeAll) {
      Ticket& tk = tickets_[size_t(ev.ticket)];
      observe_latency(nodes_[tk.owner].tuner, LatencyKind::Decode,
                      (tk.gpu_start - tk.fetch_end) + cfg_.latency.decode_ms,
                      tcfg_.ewma_weight);
    }
  }

  void on_complete(const Ev& ev) {
    Ticket& tk = tickets_[size_t(ev.ticket)];
    std::vector<uint64_t> waiters;
    if (cfg_.policy == Policy::DecodeAll) {
      waiters.push_back(tk.leader);
    } else {
      waiters = coalescer_.complete(tk.object_id);
    }
    double net_start = tk.needs_gpu ? tk.gpu_end : tk.fetch_end;
    for (uint64_t w : waiters) {
      double a = arrive(w);
      RequestRecord& r = rep_.requests[w];
      r.ts_ms = trace_[w].ts_ms;
      r.object_id = tk.object_id;
      r.outcome = tk.outcome;
      r.node = tk.executor;
      r.spilled = tk.spilled;
      r.coalesced = w != tk.leader;
      r.fetch_ms = overlap(a, tk.t0, tk.fetch_end);
      r.queue_ms = overlap(a, tk.fetch_end, tk.gpu_start);
      r.decode_ms = overlap(a, tk.gpu_start, tk.gpu_end);
      r.net_ms = overlap(a, net_start, tk.complete);
      r.total_ms = tk.complete - a;
    }
  }

  void drain(double until) {
    while (!events_.empty() && events_.top().t <= until) {
      Ev ev = events_.top();
      events_.pop();
      switch (ev.kind) {
        case EvKind::JobReady: on_job_ready(ev); break;
        case EvKind::JobDone: on_job_done(ev); break;
        case EvKind::Complete: on_complete(ev); break;
      }
    }
  }

  void finalize() {
    const uint64_t n = trace_.size();
    rep_.total_requests = n;
    rep_.warmup_requests = uint64_t(std::floor(cfg_.warmup_fraction * double(n)));

    std::vector<double> totals;
    totals.reserve(n - rep_.warmup_requests);
    double sq = 0, sf = 0, sd = 0, sn = 0;
    for (uint64_t i = rep_.warmup_requests; i < n; i++) {
      const auto& r = rep_.requests[i];
      totals.push_back(r.total_ms);
      sq += r.queue_ms;
      sf += r.fetch_ms;
      sd += r.decode_ms;
      sn += r.net_ms;
      switch (r.outcome) {
        case Outcome::ImageHit: rep_.image_hits++; break;
        case Outcome::LatentHit: rep_.latent_hits++; break;
        case Outcome::FullMiss: rep_.full_misses++; break;
      }
    }
    rep_.latency = summarize(std::move(totals));
    const double m = double(n - rep_.warmup_requests);
    if (m > 0) {
      rep_.stage_queue_ms = sq / m;
      rep_.stage_fetch_ms = sf / m;
      rep_.stage_decode_ms = sd / m;
      rep_.stage_net_ms = sn / m;
      rep_.frac_image_hit = double(rep_.image_hits) / m;
      rep_.frac_latent_hit = double(rep_.latent_hits) / m;
      rep_.frac_full_miss = double(rep_.full_misses) / m;
    }

    std::vector<double> waits;
    waits.reserve(queue_waits_.size());
    for (const auto& [leader, w] : queue_waits_)
      if (leader >= rep_.warmup_requests) waits.push_back(w);
    rep_.gpu_queue_wait = summarize(std::move(waits));

    double alpha_sum = 0;
    for (const auto& node : nodes_)
      alpha_sum += node.cache ? node.cache->alpha() : cfg_.alpha0;
    rep_.final_alpha = alpha_sum / double(nodes_.size());

    // Cache-pinning audit: every resident entry must live on its hash owner.
    for (uint32_t ni = 0; ni < cfg_.n_nodes; ni++) {
      if (!nodes_[ni].cache) continue;
      for (uint64_t id : nodes_[ni].cache->resident_ids())
        if (ring_.owner_of(id) != ni) rep_.pinning_violations++;
    }
  }

  const Trace& trace_;
  const Catalog& catalog_;
  ClusterConfig cfg_;
  TunerConfig tcfg_;
  HashRing ring_;
  std::mt19937_64 rng_;
  std::vector<NodeState> nodes_;
  Coalescer coalescer_;
  std::deque<Ticket> tickets_;
  std::priority_queue<Ev, std::vector<Ev>, EvLater> events_;
  uint64_t seq_ = 0;
  uint64_t window_counter_ = 0;
  std::vector<std::pair<uint64_t, double>> queue_waits_;
  SimReport rep_;
};

const char* outcome_name(Outcome o) {
  switch (o) {
    case Outcome::ImageHit: return "image_hit";
    case Outcome::LatentHit: return "latent_hit";
    case Outcome::FullMiss: return "full_miss";
  }
  return "?";
}

}  // namespace

SimReport run(const Trace& trace, const Catalog& catalog, const ClusterConfig& cfg) {
  Engine engine(trace, catalog, cfg);
  return engine.run();
}

std::vector<AlphaSweepRow> sweep_alpha(const Trace& trace, const Catalog& catalog,
                                       ClusterConfig cfg,
                                       const std::vector<double>& alphas) {
  std::vector<AlphaSweepRow> rows;
  rows.reserve(alphas.size());
  for (double a : alphas) {
    if (a < 0 || a > 1) throw ConfigError("alpha must be in [0,1]");
    ClusterConfig c = cfg;
    c.alpha0 = a;
    c.policy = a == 0.0   ? Policy::LbLatentCache
               : a == 1.0 ? Policy::LbImgCache
                          : Policy::LbStatic;
    SimReport rep = run(trace, catalog, c);
    rows.push_back({a, rep.latency.mean, rep.latency.p99});
  }
  return rows;
}

std::vector<SpilloverRow> compare_spillover(const Trace& trace,
                                            const Catalog& catalog,
                                            ClusterConfig cfg,
                                            const std::vector<uint32_t>& thetas) {
  std::vector<SpilloverRow> rows;
  rows.reserve(thetas.size());
  for (uint32_t theta : thetas) {
    ClusterConfig c = cfg;
    c.theta = theta;
    SimReport rep = run(trace, catalog, c);
    rows.push_back({theta, rep.latency, rep.gpu_queue_wait, rep.spill_events});
  }
  return rows;
}

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

std::string SimReport::to_json(bool include_requests,
                               const std::string& invocation) const {
  nlohmann::json j;
  if (!invocation.empty()) j["_invocation"] = invocation;
  j["total_requests"] = total_requests;
  j["warmup_requests"] = warmup_requests;
  j["latency_ms"] = {{"mean", latency.mean},
                     {"p50", latency.p50},
                     {"p95", latency.p95},
                     {"p99", latency.p99}};
  j["outcomes"] = {{"image_hits", image_hits},
                   {"latent_hits", latent_hits},
                   {"full_misses", full_misses},
                   {"frac_image_hit", frac_image_hit},
                   {"frac_latent_hit", frac_latent_hit},
                   {"frac_full_miss", frac_full_miss}};
  j["events"] = {{"fetches", fetch_events},
                 {"decodes", decode_events},
                 {"spills", spill_events},
                 {"writebacks", writebacks},
                 {"pinning_violations", pinning_violations}};
  j["decodes_by_node"] = decodes_by_node;
  j["gpu_queue_wait_ms"] = {{"mean", gpu_queue_wait.mean},
                            {"p50", gpu_queue_wait.p50},
                            {"p95", gpu_queue_wait.p95},
                            {"p99", gpu_queue_wait.p99}};
  j["stage_means_ms"] = {{"queue", stage_queue_ms},
                         {"fetch", stage_fetch_ms},
                         {"decode", stage_decode_ms},
                         {"net", stage_net_ms}};
  j["final_alpha"] = final_alpha;

  nlohmann::json wins = nlohmann::json::array();
  for (const auto& w : windows) {
    wins.push_back({{"window_idx", w.window_idx},
                    {"node", w.node},
                    {"alpha", w.alpha},
                    {"total_requests", w.counters.total_requests},
                    {"image_misses", w.counters.image_misses},
                    {"full_misses", w.counters.full_misses},
                    {"image_tail_hits", w.counters.image_tail_hits},
                    {"latent_tail_hits", w.counters.latent_tail_hits},
                    {"MR_img", w.rates.mr_img},
                    {"MR_lat", w.rates.mr_lat},
                    {"delta_img", w.rates.delta_img},
                    {"delta_lat", w.rates.delta_lat},
                    {"D", w.gradient},
                    {"T_decode", w.t_decode_ms},
                    {"T_fetch", w.t_fetch_ms},
                    {"measured_mean_ms", w.measured_mean_ms}});
  }
  j["windows"] = wins;

  if (include_requests) {
    nlohmann::json reqs = nlohmann::json::array();
    for (size_t i = 0; i < requests.size(); i++) {
      const auto& r = requests[i];
      reqs.push_back({{"req_idx", i},
                      {"ts_ms", r.ts_ms},
                      {"object_id", r.object_id},
                      {"outcome", outcome_name(r.outcome)},
                      {"queue_ms", r.queue_ms},
                      {"fetch_ms", r.fetch_ms},
                      {"decode_ms", r.decode_ms},
                      {"net_ms", r.net_ms},
                      {"total_ms", r.total_ms},
                      {"node", r.node},
                      {"spilled", r.spilled}});
    }
    j["requests"] = reqs;
  }
  return j.dump(2);
}

void write_windows_csv(const std::string& path, const std::vector<WindowLog>& windows,
                       const std::string& comment) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  if (!comment.empty()) out << "# " << comment << "\n";
  out << "window_idx,alpha,MR_img,MR_lat,delta_img,delta_lat,D,T_decode,T_fetch\n";
  for (const auto& w : windows)
    out << w.window_idx << ',' << fmt(w.alpha) << ',' << fmt(w.rates.mr_img) << ','
        << fmt(w.rates.mr_lat) << ',' << fmt(w.rates.delta_img) << ','
        << fmt(w.rates.delta_lat) << ',' << fmt(w.gradient) << ','
        << fmt(w.t_decode_ms) << ',' << fmt(w.t_fetch_ms) << '\n';
}

void write_requests_csv(const std::string& path,
                        const std::vector<RequestRecord>& requests,
                        const std::string& comment) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  if (!comment.empty()) out << "# " << comment << "\n";
  out << "req_idx,ts_ms,object_id,outcome,queue_ms,fetch_ms,decode_ms,net_ms,"
         "total_ms,node,spilled\n";
  for (size_t i = 0; i < requests.size(); i++) {
    const auto& r = requests[i];
    out << i << ',' << r.ts_ms << ',' << r.object_id << ',' << outcome_name(r.outcome)
        << ',' << fmt(r.queue_ms) << ',' << fmt(r.fetch_ms) << ',' << fmt(r.decode_ms)
        << ',' << fmt(r.net_ms) << ',' << fmt(r.total_ms) << ',' << r.node << ','
        << (r.spilled ? 1 : 0) << '\n';
  }
}

ClusterConfig parse_cluster_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  ClusterConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    lineno++;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    // trim
    auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    auto e = line.find_last_not_of(" \t\r");
    line = line.substr(b, e - b + 1);
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + " is not key=value");
    auto strip = [](std::string s) {
      auto b2 = s.find_first_not_of(" \t");
      auto e2 = s.find_last_not_of(" \t");
      return b2 == std::string::npos ? std::string() : s.substr(b2, e2 - b2 + 1);
    };
    std::string key = strip(line.substr(0, eq));
    std::string val = strip(line.substr(eq + 1));

    if (key == "nodes") cfg.n_nodes = uint32_t(std::stoul(val));
    else if (key == "cache_mb") cfg.node_cache_bytes = uint64_t(std::stod(val) * 1024 * 1024);
    else if (key == "cache_bytes") cfg.node_cache_bytes = std::stoull(val);
    else if (key == "gpus_per_node") cfg.gpus_per_node = uint32_t(std::stoul(val));
    else if (key == "theta") cfg.theta = val == "inf" ? kNoSpill : uint32_t(std::stoul(val));
    else if (key == "vnodes") cfg.vnodes_per_node = uint32_t(std::stoul(val));
    else if (key == "policy") cfg.policy = policy_from_name(val);
    else if (key == "alpha") cfg.alpha0 = std::stod(val);
    else if (key == "tau") cfg.tail_fraction = std::stod(val);
    else if (key == "h") cfg.promotion_threshold = uint32_t(std::stoul(val));
    else if (key == "window") cfg.tuner.window_requests = std::stoull(val);
    else if (key == "step") cfg.tuner.step = std::stod(val);
    else if (key == "ewma") cfg.tuner.ewma_weight = std::stod(val);
    else if (key == "alpha_lo") cfg.tuner.alpha_lo = std::stod(val);
    else if (key == "alpha_hi") cfg.tuner.alpha_hi = std::stod(val);
    else if (key == "net_ms") cfg.latency.net_ms = std::stod(val);
    else if (key == "decode_ms") cfg.latency.decode_ms = std::stod(val);
    else if (key == "intra_ms") cfg.latency.intra_cluster_ms = std::stod(val);
    else if (key == "fetch_model") {
      if (val == "constant") cfg.latency.fetch_kind = LatencyModel::FetchKind::Constant;
      else if (val == "lognormal") cfg.latency.fetch_kind = LatencyModel::FetchKind::Lognormal;
      else if (val == "empirical") cfg.latency.fetch_kind = LatencyModel::FetchKind::Empirical;
      else throw ConfigError("unknown fetch_model: " + val);
    } else if (key == "fetch_const_ms") cfg.latency.fetch_const_ms = std::stod(val);
    else if (key == "fetch_mu") cfg.latency.fetch_mu = std::stod(val);
    else if (key == "fetch_sigma") cfg.latency.fetch_sigma = std::stod(val);
    else if (key == "fetch_table") {
      cfg.latency.fetch_table.clear();
      std::stringstream ss(val);
      std::string tok;
      while (std::getline(ss, tok, ',')) cfg.latency.fetch_table.push_back(std::stod(tok));
    } else if (key == "seed") cfg.seed = std::stoull(val);
    else if (key == "warmup") cfg.warmup_fraction = std::stod(val);
    else if (key == "time_scale") cfg.time_scale = std::stod(val);
    else if (key == "record_requests") cfg.record_requests = val == "1" || val == "true";
    else if (key == "promotion_offpath") cfg.promotion_decode_offpath = val == "1" || val == "true";
    else throw ConfigError("unknown config key: " + key);
  }
  return cfg;
}

}  // namespace lbx
