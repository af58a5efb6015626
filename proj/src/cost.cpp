#include "latentbox/cost.hpp"

#include <cmath>
#include <fstream>

#include "latentbox/error.hpp"

namespace lbx {

namespace {
constexpr double kMbPerGb = 1024.0;
constexpr double kMsPerHour = 3'600'000.0;
}  // namespace

const char* strategy_name(Strategy s) {
  switch (s) {
    case Strategy::ImgStore: return "imgstore";
    case Strategy::ImgStoreGlacier: return "imgstore-glacier";
    case Strategy::LatentBoxH100: return "lb-h100";
    case Strategy::LatentBox5090: return "lb-5090";
  }
  return "?";
}

void CostParams::validate() const {
  for (double v : {s_px_mb, s_lat_mb, p_s3_gb_month, p_glacier_gb_month,
                   glacier_retrieval_per_gb, glacier_retrieval_per_req,
                   p_gpu_h100_hr, p_gpu_5090_hr, t_dec_ms, views_per_image_year})
    if (!(v > 0)) throw ConfigError("cost parameters must be positive");
  if (pixel_cache_fraction < 0 || pixel_cache_fraction > 1)
    throw ConfigError("pixel_cache_fraction must be in [0,1]");
  if (decode_trigger_fraction < 0 || decode_trigger_fraction > 1)
    throw ConfigError("decode_trigger_fraction must be in [0,1]");
  if (archive_after_months < 1) throw ConfigError("archive_after_months must be >= 1");
  if (!(retrieval_decay_exponent > 1))
    throw ConfigError("retrieval_decay_exponent must be > 1");
}

void GrowthModel::validate() const {
  if (!(n0 > 0)) throw ConfigError("n0 must be positive");
  if (trace_months < 1) throw ConfigError("trace_months must be >= 1");
  if (!(trace_growth_exponent > 0)) throw ConfigError("trace_growth_exponent must be > 0");
  if (mode == Mode::Linear && images_per_month < 0)
    throw ConfigError("images_per_month must be >= 0");
  if (mode == Mode::Cagr && cagr_per_year < 0)
    throw ConfigError("cagr_per_year must be >= 0");
}

void PriceDecay::validate() const {
  if (gpu_per_year < 0 || gpu_per_year >= 1 || storage_per_year < 0 ||
      storage_per_year >= 1)
    throw ConfigError("price decay rates must be in [0,1)");
}

double GrowthModel::images_at(int month) const {
  if (month <= 0) return 0.0;
  if (month <= trace_months)
    return n0 * std::pow(double(month) / double(trace_months), trace_growth_exponent);
  int k = month - trace_months;
  if (mode == Mode::Linear) return n0 + images_per_month * double(k);
  return n0 * std::pow(1.0 + cagr_per_year, double(k) / 12.0);
}

MonthlyCost monthly_cost(Strategy s, double n_images, int months_after_trace_end,
                         const CostParams& p, const PriceDecay& decay,
                         double n_archived) {
  p.validate();
  decay.validate();
  if (n_images < 0) throw ConfigError("n_images must be >= 0");

  double storage_factor = 1.0, gpu_factor = 1.0;
  if (decay.enabled && months_after_trace_end > 0) {
    int years = (months_after_trace_end - 1) / 12;
    storage_factor = std::pow(1.0 - decay.storage_per_year, double(years));
    gpu_factor = std::pow(1.0 - decay.gpu_per_year, double(years));
  }

  MonthlyCost c;
  const double px_gb = n_images * p.s_px_mb / kMbPerGb;

  switch (s) {
    case Strategy::ImgStore:
      c.storage_usd = px_gb * p.p_s3_gb_month * storage_factor;
      break;

    case Strategy::ImgStoreGlacier: {
      double archived = std::min(n_archived, n_images);
      double young_gb = (n_images - archived) * p.s_px_mb / kMbPerGb;
      double old_gb = archived * p.s_px_mb / kMbPerGb;
      c.storage_usd = (young_gb * p.p_s3_gb_month + old_gb * p.p_glacier_gb_month) *
                      storage_factor;
      // Retrieval traffic to archived objects under the power-law age decay:
      // the share of lifetime views falling beyond the archive age.
      double archive_days = double(p.archive_after_months) / 12.0 * 365.0;
      double tail_share =
          std::pow(archive_days + 1.0, 1.0 - p.retrieval_decay_exponent);
      double reqs = p.views_per_image_year * tail_share * archived / 12.0;
      c.retrieval_usd = (reqs * p.s_px_mb / kMbPerGb * p.glacier_retrieval_per_gb +
                         reqs * p.glacier_retrieval_per_req) *
                        storage_factor;
      break;
    }

    case Strategy::LatentBoxH100:
    case Strategy::LatentBox5090: {
      double per_image_mb = p.s_lat_mb + p.pixel_cache_fraction * p.s_px_mb;
      c.storage_usd = n_images * per_image_mb / kMbPerGb * p.p_s3_gb_month *
                      storage_factor;
      double decodes =
          p.decode_trigger_fraction * p.views_per_image_year * n_images / 12.0;
      double gpu_rate =
          s == Strategy::LatentBoxH100 ? p.p_gpu_h100_hr : p.p_gpu_5090_hr;
      c.decode_usd = decodes * p.t_dec_ms * gpu_rate * gpu_factor / kMsPerHour;
      break;
    }
  }
  return c;
}

std::vector<ProjectionRow> project(Strategy s, const GrowthModel& g,
                                   const CostParams& p, const PriceDecay& decay,
                                   int horizon_month) {
  g.validate();
  p.validate();
  if (horizon_month < 1) throw ConfigError("horizon must be >= 1 month");

  auto series = [&](Strategy strat, int months) {
    std::vector<ProjectionRow> rows;
    rows.reserve(size_t(months));
    double cum = 0;
    for (int m = 1; m <= months; m++) {
      double n = g.images_at(m);
      double archived = g.images_at(m - p.archive_after_months);
      MonthlyCost mc =
          monthly_cost(strat, n, m - g.trace_months, p, decay, archived);
      cum += mc.total();
      rows.push_back({m, n, mc.storage_usd, mc.decode_usd, mc.retrieval_usd, cum, 0});
    }
    return rows;
  };

  // Normalizer: plain image storage, accumulated over the trace period.
  double norm = series(Strategy::ImgStore, g.trace_months).back().cumulative_usd;

  auto rows = series(s, horizon_month);
  for (auto& r : rows) r.normalized = r.cumulative_usd / norm;
  return rows;
}

int horizon_for_year(const GrowthModel& g, int year) {
  if (year < 2026) throw ConfigError("horizon year must be >= 2026");
  return g.trace_months + 12 * (year - 2026);
}

CostScenario parse_cost_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario file: " + path);
  CostScenario sc;
  std::string line;
  int lineno = 0;
  auto strip = [](std::string s) {
    auto b = s.find_first_not_of(" \t\r");
    auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    lineno++;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = strip(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("scenario line " + std::to_string(lineno) + " is not key=value");
    std::string key = strip(line.substr(0, eq));
    std::string val = strip(line.substr(eq + 1));

    auto& p = sc.params;
    auto& g = sc.growth;
    if (key == "s_px_mb") p.s_px_mb = std::stod(val);
    else if (key == "s_lat_mb") p.s_lat_mb = std::stod(val);
    else if (key == "p_s3") p.p_s3_gb_month = std::stod(val);
    else if (key == "p_glacier") p.p_glacier_gb_month = std::stod(val);
    else if (key == "retrieval_per_gb") p.glacier_retrieval_per_gb = std::stod(val);
    else if (key == "retrieval_per_req") p.glacier_retrieval_per_req = std::stod(val);
    else if (key == "p_h100") p.p_gpu_h100_hr = std::stod(val);
    else if (key == "p_5090") p.p_gpu_5090_hr = std::stod(val);
    else if (key == "t_dec_ms") p.t_dec_ms = std::stod(val);
    else if (key == "f") p.pixel_cache_fraction = std::stod(val);
    else if (key == "m_gpu") p.decode_trigger_fraction = std::stod(val);
    else if (key == "lambda") p.views_per_image_year = std::stod(val);
    else if (key == "archive_months") p.archive_after_months = std::stoi(val);
    else if (key == "retrieval_decay") p.retrieval_decay_exponent = std::stod(val);
    else if (key == "growth") {
      if (val == "linear") g.mode = GrowthModel::Mode::Linear;
      else if (val == "cagr") g.mode = GrowthModel::Mode::Cagr;
      else throw ConfigError("unknown growth mode: " + val);
    } else if (key == "images_per_month") g.images_per_month = std::stod(val);
    else if (key == "cagr") g.cagr_per_year = std::stod(val);
    else if (key == "n0") g.n0 = std::stod(val);
    else if (key == "trace_months") g.trace_months = std::stoi(val);
    else if (key == "ramp_exponent") g.trace_growth_exponent = std::stod(val);
    else if (key == "price_decay") sc.decay.enabled = val == "1" || val == "true";
    else if (key == "gpu_decay") sc.decay.gpu_per_year = std::stod(val);
    else if (key == "storage_decay") sc.decay.storage_per_year = std::stod(val);
    else throw ConfigError("unknown scenario key: " + key);
  }
  return sc;
}

void write_cost_csv(
    const std::string& path,
    const std::vector<std::pair<Strategy, std::vector<ProjectionRow>>>& series,
    const std::string& comment) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  if (!comment.empty()) out << "# " << comment << "\n";
  out << "month,strategy,N_images,storage_usd,decode_usd,retrieval_usd,"
         "cumulative_usd,normalized\n";
  char buf[256];
  for (const auto& [strat, rows] : series)
    for (const auto& r : rows) {
      std::snprintf(buf, sizeof buf, "%d,%s,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g\n",
                    r.month, strategy_name(strat), r.n_images, r.storage_usd,
                    r.decode_usd, r.retrieval_usd, r.cumulative_usd, r.normalized);
      out << buf;
    }
}

}  // namespace lbx
