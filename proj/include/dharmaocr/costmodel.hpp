#pragma once

#include <map>
#include <string>
#include <string_view>

namespace dharmaocr::costmodel {

enum class PricingKind {
  kLocal,        // hourly infrastructure price + measured time per page
  kFixedPer1k,   // flat fee per thousand pages
  kTokenPriced,  // per-token prices + average tokens per page
};

std::string_view pricing_kind_name(PricingKind kind);
PricingKind pricing_kind_from_name(std::string_view name);

struct CostSpec {
  PricingKind kind = PricingKind::kLocal;
  // kLocal
  double t_avg_seconds = 0.0;
  double p_hour_usd = 0.0;
  // kFixedPer1k
  double price_per_1k_usd = 0.0;
  // kTokenPriced
  double n_in_tokens = 0.0;
  double n_out_tokens = 0.0;
  double p_in_usd_per_1m = 0.0;
  double p_out_usd_per_1m = 0.0;

  static CostSpec local(double t_avg_seconds, double p_hour_usd);
  static CostSpec fixed_per_1k(double price_per_1k_usd);
  static CostSpec token_priced(double n_in_tokens, double n_out_tokens,
                               double p_in_usd_per_1m,
                               double p_out_usd_per_1m);
};

// USD per million processed pages. Throws std::invalid_argument when the
// fields required by the spec's kind are missing or non-positive.
//   local:  1e6 * t_avg * p_hour / 3600
//   fixed:  1e6 * price_per_1k / 1000
//   token:  n_in * p_in + n_out * p_out   (prices per 1M tokens)
double cost_per_million(const CostSpec& spec);

// 100 * candidate_t_avg / reference_t_avg: on shared infrastructure the
// hourly price cancels, leaving the time ratio. Throws on non-positives.
double relative_cost(double candidate_t_avg_s, double reference_t_avg_s);

// 100 * (observed - no_degeneration) / observed.
// Requires 0 < no_degeneration <= observed.
double counterfactual_relative_reduction(double observed_minutes,
                                         double no_degen_minutes);

// Half-up display rounding; internal values stay unrounded.
double display_round(double value, int decimals);

// Pricing file: JSON object mapping provider name -> CostSpec.
std::map<std::string, CostSpec> load_pricing(const std::string& path);
std::string pricing_to_json(const std::map<std::string, CostSpec>& pricing);

}  // namespace dharmaocr::costmodel
