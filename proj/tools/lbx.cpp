// lbx: trace generation, trace analysis, cluster simulation, and storage cost
// projection for latent-first image serving. Every artifact embeds the full
// invocation so results can be reproduced from the file alone.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "latentbox/analysis.hpp"
#include "latentbox/cost.hpp"
#include "latentbox/error.hpp"
#include "latentbox/sim.hpp"
#include "latentbox/synth.hpp"
#include "latentbox/trace.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string g_invocation;

std::string default_out_dir() {
  const char* env = std::getenv("LB_OUT_DIR");
  return env && *env ? env : ".";
}

std::string out_path(const std::string& dir, const std::string& name) {
  fs::create_directories(dir);
  return (fs::path(dir) / name).string();
}

void write_json(const std::string& path, json j) {
  j["_invocation"] = g_invocation;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << j.dump(2) << "\n";
}

std::vector<double> parse_double_list(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(std::stod(tok));
  if (out.empty()) throw lbx::ConfigError("expected a comma-separated list");
  return out;
}

std::vector<uint64_t> parse_u64_list(const std::string& csv) {
  std::vector<uint64_t> out;
  for (double v : parse_double_list(csv)) out.push_back(uint64_t(v));
  return out;
}

// Shared simulator flags. Flags the user sets override a --config file.
struct SimFlags {
  std::string trace_path, catalog_path, config_path;
  std::string out_dir = default_out_dir();
  std::string policy = "lb-adaptive";
  std::string theta = "inf";
  uint32_t nodes = 3;
  double cache_mb = 2048;
  uint32_t gpus = 1;
  uint32_t vnodes = 128;
  double alpha = 0.5;
  double tau = 0.10;
  uint32_t h = 8;
  uint64_t window = 0;
  double step = 0.005;
  double ewma = 0.1;
  double net_ms = 10, decode_ms = 40, fetch_ms = 140, intra_ms = 5;
  uint64_t seed = 1;
  double warmup = 0.2;
  double time_scale = 1.0;
  bool record_requests = false;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--trace", trace_path, "trace file (csv or LBTR binary)")->required();
    cmd->add_option("--catalog", catalog_path, "object size catalog csv")->required();
    cmd->add_option("--config", config_path, "key=value cluster config file");
    cmd->add_option("--out", out_dir, "output directory");
    cmd->add_option("--nodes", nodes, "GPU nodes");
    cmd->add_option("--cache-mb", cache_mb, "per-node cache budget (MiB)");
    cmd->add_option("--policy", policy,
                    "imgstore|decode-all|lb-img|lb-latent|lb-static|lb-adaptive");
    cmd->add_option("--theta", theta, "spill threshold (integer or 'inf')");
    cmd->add_option("--gpus", gpus, "GPUs per node");
    cmd->add_option("--vnodes", vnodes, "ring points per node");
    cmd->add_option("--alpha", alpha, "initial/pinned image-tier fraction");
    cmd->add_option("--tau", tau, "tail fraction");
    cmd->add_option("--promote-h", h, "promotion threshold");
    cmd->add_option("--window", window, "tuning window (0 = trace/60, min 10k)");
    cmd->add_option("--step", step, "alpha step per window");
    cmd->add_option("--ewma", ewma, "latency EWMA weight");
    cmd->add_option("--net-ms", net_ms, "response transfer time");
    cmd->add_option("--decode-ms", decode_ms, "GPU decode service time");
    cmd->add_option("--fetch-ms", fetch_ms, "constant cloud fetch time");
    cmd->add_option("--intra-ms", intra_ms, "intra-cluster latent transfer");
    cmd->add_option("--seed", seed, "run seed");
    cmd->add_option("--warmup", warmup, "fraction excluded from stats");
    cmd->add_option("--time-scale", time_scale, "timestamp replay speed-up");
    cmd->add_flag("--record-requests", record_requests, "emit per-request csv");
  }

  lbx::ClusterConfig resolve(const CLI::App* cmd) const {
    lbx::ClusterConfig cfg;
    if (!config_path.empty()) cfg = lbx::parse_cluster_config(config_path);
    auto set = [&](const char* flag) { return cmd->count(flag) > 0; };
    if (config_path.empty() || set("--nodes")) cfg.n_nodes = nodes;
    if (config_path.empty() || set("--cache-mb"))
      cfg.node_cache_bytes = uint64_t(cache_mb * 1024 * 1024);
    if (config_path.empty() || set("--policy")) cfg.policy = lbx::policy_from_name(policy);
    if (config_path.empty() || set("--theta"))
      cfg.theta = theta == "inf" ? lbx::kNoSpill : uint32_t(std::stoul(theta));
    if (config_path.empty() || set("--gpus")) cfg.gpus_per_node = gpus;
    if (config_path.empty() || set("--vnodes")) cfg.vnodes_per_node = vnodes;
    if (config_path.empty() || set("--alpha")) cfg.alpha0 = alpha;
    if (config_path.empty() || set("--tau")) cfg.tail_fraction = tau;
    if (config_path.empty() || set("--promote-h")) cfg.promotion_threshold = h;
    if (config_path.empty() || set("--window")) cfg.tuner.window_requests = window;
    if (config_path.empty() || set("--step")) cfg.tuner.step = step;
    if (config_path.empty() || set("--ewma")) cfg.tuner.ewma_weight = ewma;
    if (config_path.empty() || set("--net-ms")) cfg.latency.net_ms = net_ms;
    if (config_path.empty() || set("--decode-ms")) cfg.latency.decode_ms = decode_ms;
    if (config_path.empty() || set("--fetch-ms")) cfg.latency.fetch_const_ms = fetch_ms;
    if (config_path.empty() || set("--intra-ms")) cfg.latency.intra_cluster_ms = intra_ms;
    if (config_path.empty() || set("--seed")) cfg.seed = seed;
    if (config_path.empty() || set("--warmup")) cfg.warmup_fraction = warmup;
    if (config_path.empty() || set("--time-scale")) cfg.time_scale = time_scale;
    if (record_requests) cfg.record_requests = true;
    return cfg;
  }
};

int cmd_trace_gen(const lbx::SynthConfig& cfg, const std::string& out_dir,
                  const std::string& format) {
  auto res = lbx::generate_trace(cfg);
  if (format == "csv" || format == "both")
    lbx::write_trace_csv(out_path(out_dir, "trace.csv"), res.trace, g_invocation);
  if (format == "bin" || format == "both")
    lbx::write_trace_bin(out_path(out_dir, "trace.bin"), res.trace);
  lbx::write_catalog_csv(out_path(out_dir, "catalog.csv"), res.catalog, g_invocation);
  write_json(out_path(out_dir, "gen_summary.json"),
             {{"requests", res.trace.size()},
              {"objects", res.objects_total},
              {"decay_ratio_365d", res.decay_ratio_365d},
              {"seed", cfg.seed}});
  std::cout << "trace-gen: " << res.trace.size() << " requests over "
            << res.objects_total << " objects -> " << out_dir << "\n";
  return 0;
}

int cmd_trace_stats(const std::string& trace_path, const std::string& out_dir) {
  auto trace = lbx::read_trace_any(trace_path);
  auto st = lbx::trace_stats(trace);

  {
    std::ofstream out(out_path(out_dir, "popularity_cdf.csv"));
    out << "# " << g_invocation << "\nobject_fraction,request_share\n";
    for (auto [of, rs] : st.popularity_cdf) out << of << ',' << rs << '\n';
  }
  {
    std::ofstream out(out_path(out_dir, "reaccess_cdf.csv"));
    out << "# " << g_invocation << "\ninterval_ms,cum_fraction\n";
    for (auto [gap, cf] : st.reaccess_cdf) out << gap << ',' << cf << '\n';
  }
  {
    std::ofstream out(out_path(out_dir, "age_rate.csv"));
    out << "# " << g_invocation << "\nquartile,age_days,rate\n";
    for (const auto& row : st.age_rate)
      out << row.quartile << ',' << row.age_days << ',' << row.rate << '\n';
  }
  json j{{"total_requests", st.total_requests},
         {"distinct_objects", st.distinct_objects},
         {"share_top_1pct", st.share_top_1pct},
         {"share_top_10pct", st.share_top_10pct}};
  try {
    j["zipf_fit"] = lbx::fit_zipf(trace);
  } catch (const lbx::InsufficientDataError&) {
    j["zipf_fit"] = nullptr;
  }
  write_json(out_path(out_dir, "stats.json"), j);
  std::cout << "trace-stats: " << st.total_requests << " requests, "
            << st.distinct_objects << " objects, top-1% share "
            << st.share_top_1pct << " -> " << out_dir << "\n";
  return 0;
}

int cmd_mrc(const std::string& trace_path, const std::string& caps_csv,
            const std::string& policy, const std::string& unit,
            const std::string& catalog_path, const std::string& out_dir) {
  auto trace = lbx::read_trace_any(trace_path);
  auto caps = parse_u64_list(caps_csv);
  const bool bytes = unit == "bytes";
  lbx::Catalog catalog;
  if (bytes) {
    if (catalog_path.empty())
      throw lbx::ConfigError("--unit bytes requires --catalog");
    catalog = lbx::read_catalog_csv(catalog_path);
  }
  std::ofstream out(out_path(out_dir, "mrc.csv"));
  out << "# " << g_invocation << "\ncapacity_" << (bytes ? "bytes" : "objects")
      << ",policy,miss_ratio\n";
  auto emit = [&](lbx::MrcPolicy p, const char* name) {
    auto curve = bytes ? lbx::miss_ratio_curve_bytes(trace, catalog, caps, p)
                       : lbx::miss_ratio_curve(trace, caps, p);
    for (auto [cap, mr] : curve) out << cap << ',' << name << ',' << mr << '\n';
  };
  if (policy == "lru" || policy == "both") emit(lbx::MrcPolicy::Lru, "lru");
  if (policy == "belady" || policy == "both") emit(lbx::MrcPolicy::Belady, "belady");
  std::cout << "mrc: " << caps.size() << " capacities (" << policy << ", " << unit
            << ") -> " << out_dir << "/mrc.csv\n";
  return 0;
}

int cmd_sim_run(const SimFlags& f, const CLI::App* cmd) {
  auto trace = lbx::read_trace_any(f.trace_path);
  auto catalog = lbx::read_catalog_csv(f.catalog_path);
  auto cfg = f.resolve(cmd);
  auto rep = lbx::run(trace, catalog, cfg);

  {
    std::ofstream out(out_path(f.out_dir, "report.json"));
    out << rep.to_json(cfg.record_requests, g_invocation) << "\n";
  }
  lbx::write_windows_csv(out_path(f.out_dir, "windows.csv"), rep.windows, g_invocation);
  if (cfg.record_requests)
    lbx::write_requests_csv(out_path(f.out_dir, "requests.csv"), rep.requests,
                            g_invocation);
  std::cout << "sim-run: " << lbx::policy_name(cfg.policy) << " mean "
            << rep.latency.mean << " ms, p99 " << rep.latency.p99
            << " ms, hit mix " << rep.frac_image_hit << "/" << rep.frac_latent_hit
            << "/" << rep.frac_full_miss << " -> " << f.out_dir << "\n";
  return 0;
}

int cmd_sim_sweep_alpha(const SimFlags& f, const CLI::App* cmd,
                        const std::string& alphas_csv) {
  auto trace = lbx::read_trace_any(f.trace_path);
  auto catalog = lbx::read_catalog_csv(f.catalog_path);
  auto rows = lbx::sweep_alpha(trace, catalog, f.resolve(cmd),
                               parse_double_list(alphas_csv));
  std::ofstream out(out_path(f.out_dir, "sweep.csv"));
  out << "# " << g_invocation << "\nalpha,mean_ms,p99_ms\n";
  for (const auto& r : rows)
    out << r.alpha << ',' << r.mean_ms << ',' << r.p99_ms << '\n';
  std::cout << "sim-sweep-alpha: " << rows.size() << " points -> " << f.out_dir
            << "/sweep.csv\n";
  return 0;
}

int cmd_sim_spillover(const SimFlags& f, const CLI::App* cmd,
                      const std::string& thetas_csv) {
  auto trace = lbx::read_trace_any(f.trace_path);
  auto catalog = lbx::read_catalog_csv(f.catalog_path);
  std::vector<uint32_t> thetas;
  {
    std::stringstream ss(thetas_csv);
    std::string tok;
    while (std::getline(ss, tok, ','))
      thetas.push_back(tok == "inf" ? lbx::kNoSpill : uint32_t(std::stoul(tok)));
  }
  auto rows = lbx::compare_spillover(trace, catalog, f.resolve(cmd), thetas);
  std::ofstream out(out_path(f.out_dir, "spillover.csv"));
  out << "# " << g_invocation
      << "\ntheta,mean_ms,p50_ms,p95_ms,p99_ms,queue_mean_ms,queue_p99_ms,spills\n";
  for (const auto& r : rows) {
    if (r.theta == lbx::kNoSpill) out << "inf";
    else out << r.theta;
    out << ',' << r.latency.mean << ',' << r.latency.p50 << ',' << r.latency.p95
        << ',' << r.latency.p99 << ',' << r.gpu_queue_wait.mean << ','
        << r.gpu_queue_wait.p99 << ',' << r.spill_events << '\n';
  }
  std::cout << "sim-spillover: " << rows.size() << " thresholds -> " << f.out_dir
            << "/spillover.csv\n";
  return 0;
}

struct CostFlags {
  std::string strategy = "all";
  std::string growth = "cagr";
  std::string prices = "constant";
  std::string scenario_path;
  std::string out_dir = default_out_dir();
  int horizon_year = 2050;
  int horizon_months = 0;  // overrides the year when set
  lbx::CostParams params;
  lbx::GrowthModel model;
};

int cmd_cost_project(const CostFlags& f, const CLI::App* cmd) {
  lbx::GrowthModel g = f.model;
  lbx::CostParams params = f.params;
  lbx::PriceDecay decay;
  if (!f.scenario_path.empty()) {
    auto sc = lbx::parse_cost_scenario(f.scenario_path);
    params = sc.params;
    g = sc.growth;
    decay = sc.decay;
    // command-line flags win over the scenario file
    if (cmd->count("--n0")) g.n0 = f.model.n0;
    if (cmd->count("--trace-months")) g.trace_months = f.model.trace_months;
    if (cmd->count("--ramp-exponent"))
      g.trace_growth_exponent = f.model.trace_growth_exponent;
    if (cmd->count("--images-per-month")) g.images_per_month = f.model.images_per_month;
    if (cmd->count("--cagr")) g.cagr_per_year = f.model.cagr_per_year;
    if (cmd->count("--retrieval-decay"))
      params.retrieval_decay_exponent = f.params.retrieval_decay_exponent;
  }
  if (f.scenario_path.empty() || cmd->count("--growth"))
    g.mode = f.growth == "linear" ? lbx::GrowthModel::Mode::Linear
                                  : lbx::GrowthModel::Mode::Cagr;
  if (f.scenario_path.empty() || cmd->count("--prices"))
    decay.enabled = f.prices == "decay";
  int horizon = f.horizon_months > 0 ? f.horizon_months
                                     : lbx::horizon_for_year(g, f.horizon_year);

  std::vector<lbx::Strategy> strategies;
  if (f.strategy == "all")
    strategies = {lbx::Strategy::ImgStore, lbx::Strategy::ImgStoreGlacier,
                  lbx::Strategy::LatentBoxH100, lbx::Strategy::LatentBox5090};
  else {
    bool found = false;
    for (auto s : {lbx::Strategy::ImgStore, lbx::Strategy::ImgStoreGlacier,
                   lbx::Strategy::LatentBoxH100, lbx::Strategy::LatentBox5090})
      if (f.strategy == lbx::strategy_name(s)) {
        strategies = {s};
        found = true;
      }
    if (!found) throw lbx::ConfigError("unknown strategy: " + f.strategy);
  }

  std::vector<std::pair<lbx::Strategy, std::vector<lbx::ProjectionRow>>> series;
  json summary;
  for (auto s : strategies) {
    auto rows = lbx::project(s, g, params, decay, horizon);
    summary[lbx::strategy_name(s)] = {
        {"cumulative_usd", rows.back().cumulative_usd},
        {"normalized", rows.back().normalized}};
    series.emplace_back(s, std::move(rows));
  }
  lbx::write_cost_csv(out_path(f.out_dir, "cost.csv"), series, g_invocation);
  write_json(out_path(f.out_dir, "cost_summary.json"),
             {{"horizon_month", horizon},
              {"growth", f.growth},
              {"prices", f.prices},
              {"at_horizon", summary}});

  std::cout << "cost-project: horizon month " << horizon << " normalized:";
  for (const auto& [s, rows] : series)
    std::cout << ' ' << lbx::strategy_name(s) << '=' << rows.back().normalized;
  std::cout << " -> " << f.out_dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  std::ostringstream inv;
  for (int i = 0; i < argc; i++) inv << (i ? " " : "") << argv[i];
  g_invocation = inv.str();

  CLI::App app{"latent-first image serving: workload generator, trace analysis, "
               "cluster simulator, and cost projection"};
  app.require_subcommand(1);

  // trace-gen
  auto* gen = app.add_subcommand("trace-gen", "generate a synthetic access trace");
  lbx::SynthConfig gen_cfg;
  std::string gen_out = default_out_dir(), gen_format = "both", gen_size = "fixed";
  gen->add_option("--objects", gen_cfg.n_objects_initial, "objects at day 0");
  gen->add_option("--arrival-rate", gen_cfg.arrival_rate, "new objects per day");
  gen->add_option("--zipf", gen_cfg.zipf_exponent, "popularity skew");
  gen->add_option("--decay", gen_cfg.decay_exponent, "age-decay exponent");
  gen->add_option("--days", gen_cfg.duration_days, "trace length in days");
  gen->add_option("--rpd", gen_cfg.requests_per_day, "requests per day");
  gen->add_option("--seed", gen_cfg.seed, "generator seed");
  gen->add_option("--size-model", gen_size, "fixed|lognormal");
  gen->add_option("--image-mb", gen_cfg.size_model.image_mb, "image size (MiB)");
  gen->add_option("--latent-mb", gen_cfg.size_model.latent_mb, "latent size (MiB)");
  gen->add_option("--sigma", gen_cfg.size_model.sigma, "lognormal shape");
  gen->add_option("--format", gen_format, "csv|bin|both");
  gen->add_option("--out", gen_out, "output directory");
  gen->callback([&] {
    gen_cfg.size_model.kind = gen_size == "lognormal" ? lbx::SizeModel::Kind::Lognormal
                                                      : lbx::SizeModel::Kind::Fixed;
    g_invocation += " seed=" + std::to_string(gen_cfg.seed);
    cmd_trace_gen(gen_cfg, gen_out, gen_format);
  });

  // trace-stats
  auto* stats = app.add_subcommand("trace-stats", "characterize an access trace");
  std::string stats_trace, stats_out = default_out_dir();
  stats->add_option("--trace", stats_trace, "trace file")->required();
  stats->add_option("--out", stats_out, "output directory");
  stats->callback([&] { cmd_trace_stats(stats_trace, stats_out); });

  // mrc
  auto* mrc = app.add_subcommand("mrc", "miss ratio vs cache size");
  std::string mrc_trace, mrc_caps, mrc_policy = "both", mrc_unit = "objects",
              mrc_catalog, mrc_out = default_out_dir();
  mrc->add_option("--trace", mrc_trace, "trace file")->required();
  mrc->add_option("--capacities", mrc_caps, "capacities, ascending")->required();
  mrc->add_option("--policy", mrc_policy, "lru|belady|both");
  mrc->add_option("--unit", mrc_unit, "objects|bytes");
  mrc->add_option("--catalog", mrc_catalog, "size catalog (bytes mode)");
  mrc->add_option("--out", mrc_out, "output directory");
  mrc->callback(
      [&] { cmd_mrc(mrc_trace, mrc_caps, mrc_policy, mrc_unit, mrc_catalog, mrc_out); });

  // sim-run
  auto* simc = app.add_subcommand("sim-run", "replay a trace through the cluster");
  SimFlags sim_flags;
  sim_flags.add_to(simc);
  simc->callback([&] {
    g_invocation += " seed=" + std::to_string(sim_flags.seed);
    cmd_sim_run(sim_flags, simc);
  });

  // sim-sweep-alpha
  auto* sweep = app.add_subcommand("sim-sweep-alpha", "static split sweep");
  SimFlags sweep_flags;
  std::string sweep_alphas = "0.0,0.3,0.5,0.7,1.0";
  sweep_flags.add_to(sweep);
  sweep->add_option("--alphas", sweep_alphas, "comma-separated alpha values");
  sweep->callback([&] {
    g_invocation += " seed=" + std::to_string(sweep_flags.seed);
    cmd_sim_sweep_alpha(sweep_flags, sweep, sweep_alphas);
  });

  // sim-spillover
  auto* spill = app.add_subcommand("sim-spillover", "spill threshold comparison");
  SimFlags spill_flags;
  std::string spill_thetas = "4,inf";
  spill_flags.add_to(spill);
  spill->add_option("--thetas", spill_thetas, "thresholds, integers or 'inf'");
  spill->callback([&] {
    g_invocation += " seed=" + std::to_string(spill_flags.seed);
    cmd_sim_spillover(spill_flags, spill, spill_thetas);
  });

  // cost-project
  auto* cost = app.add_subcommand("cost-project", "long-horizon storage cost model");
  CostFlags cf;
  cost->add_option("--strategy", cf.strategy,
                   "all|imgstore|imgstore-glacier|lb-h100|lb-5090");
  cost->add_option("--growth", cf.growth, "cagr|linear");
  cost->add_option("--prices", cf.prices, "constant|decay");
  cost->add_option("--horizon", cf.horizon_year, "horizon calendar year");
  cost->add_option("--horizon-months", cf.horizon_months,
                   "horizon in months since platform start (overrides --horizon)");
  cost->add_option("--n0", cf.model.n0, "catalog size at trace end");
  cost->add_option("--trace-months", cf.model.trace_months, "trace length");
  cost->add_option("--ramp-exponent", cf.model.trace_growth_exponent,
                   "trace-period growth shape");
  cost->add_option("--images-per-month", cf.model.images_per_month, "linear growth");
  cost->add_option("--cagr", cf.model.cagr_per_year, "compound growth per year");
  cost->add_option("--retrieval-decay", cf.params.retrieval_decay_exponent,
                   "archived-object access decay exponent");
  cost->add_option("--scenario", cf.scenario_path, "key=value scenario file");
  cost->add_option("--out", cf.out_dir, "output directory");
  cost->callback([&] { cmd_cost_project(cf, cost); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help() << "\n";
    return 2;
  } catch (const lbx::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
