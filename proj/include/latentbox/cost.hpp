#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace lbx {

enum class Strategy {
  ImgStore,        // PNGs on standard object storage
  ImgStoreGlacier, // PNGs with an archive tier for old objects
  LatentBoxH100,   // compressed latents + pixel cache + datacenter-GPU decode
  LatentBox5090,   // same, consumer-GPU rental rate
};

const char* strategy_name(Strategy s);

struct CostParams {
  double s_px_mb = 1.5;                   // average stored image
  double s_lat_mb = 0.29;                 // average compressed latent
  double p_s3_gb_month = 0.023;
  double p_glacier_gb_month = 0.004;
  double glacier_retrieval_per_gb = 0.01;
  double glacier_retrieval_per_req = 0.0001;
  double p_gpu_h100_hr = 2.50;
  double p_gpu_5090_hr = 0.69;
  double t_dec_ms = 40.0;
  double pixel_cache_fraction = 0.01;     // f, hot pixels kept on S3 alongside latents
  double decode_trigger_fraction = 0.632; // m_gpu, share of reads that decode
  double views_per_image_year = 10.2;     // lambda
  int archive_after_months = 60;          // Glacier cutoff
  // Power-law age-decay exponent of the retrieval-traffic model for archived
  // objects (stand-in for a stratified fit; must be > 1 for a finite tail).
  double retrieval_decay_exponent = 1.6;

  void validate() const;
};

// Catalog growth. Months 1..trace_months ramp from zero to n0 following
// (t/trace_months)^trace_growth_exponent; afterwards the projection mode takes
// over. The default exponent models the platform's accelerating launch phase.
struct GrowthModel {
  enum class Mode { Linear, Cagr } mode = Mode::Cagr;
  double images_per_month = 3.76e6;  // Linear mode
  double cagr_per_year = 0.127;      // Cagr mode
  double n0 = 92.3e6;                // catalog size at trace end
  int trace_months = 35;
  double trace_growth_exponent = 2.45;

  void validate() const;
  // Cumulative images at the given month since platform start (<= 0 -> 0).
  double images_at(int month) const;
};

struct PriceDecay {
  bool enabled = false;
  double gpu_per_year = 0.20;      // fractional decline per elapsed year
  double storage_per_year = 0.10;  // applies to storage and retrieval prices

  void validate() const;
};

struct MonthlyCost {
  double storage_usd = 0;
  double decode_usd = 0;
  double retrieval_usd = 0;
  double total() const { return storage_usd + decode_usd + retrieval_usd; }
};

// Cost of one month of operation with n_images in the catalog, of which
// n_archived are old enough for the archive tier (Glacier variant only).
// months_after_trace_end drives price decay; values <= 0 mean trace-period
// prices.
MonthlyCost monthly_cost(Strategy s, double n_images, int months_after_trace_end,
                         const CostParams& p, const PriceDecay& decay,
                         double n_archived = 0.0);

struct ProjectionRow {
  int month = 0;  // months since platform start, 1-based
  double n_images = 0;
  double storage_usd = 0;
  double decode_usd = 0;
  double retrieval_usd = 0;
  double cumulative_usd = 0;
  double normalized = 0;  // cumulative / ImgStore cumulative at trace end
};

// Month-by-month accumulation from platform start through horizon_month
// (months since platform start).
std::vector<ProjectionRow> project(Strategy s, const GrowthModel& g,
                                   const CostParams& p, const PriceDecay& decay,
                                   int horizon_month);

// Horizon helper: month index of March of the given calendar year, where the
// trace ends in March 2026.
int horizon_for_year(const GrowthModel& g, int year);

void write_cost_csv(const std::string& path,
                    const std::vector<std::pair<Strategy, std::vector<ProjectionRow>>>& series,
                    const std::string& comment);

struct CostScenario {
  CostParams params;
  GrowthModel growth;
  PriceDecay decay;
};

// Flat key=value scenario file; '#' starts a comment, unknown keys are errors.
CostScenario parse_cost_scenario(const std::string& path);

}  // namespace lbx
