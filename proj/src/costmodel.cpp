#include "dharmaocr/costmodel.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace dharmaocr::costmodel {

namespace {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

void require_positive(double value, const char* name) {
  if (!(value > 0.0))
    throw std::invalid_argument(std::string("CostSpec: ") + name +
                                " must be > 0");
}

}  // namespace

std::string_view pricing_kind_name(PricingKind kind) {
  switch (kind) {
    case PricingKind::kLocal: return "local";
    case PricingKind::kFixedPer1k: return "fixed_per_1k";
    case PricingKind::kTokenPriced: return "token_priced";
  }
  return "unknown";
}

PricingKind pricing_kind_from_name(std::string_view name) {
  if (name == "local") return PricingKind::kLocal;
  if (name == "fixed_per_1k") return PricingKind::kFixedPer1k;
  if (name == "token_priced") return PricingKind::kTokenPriced;
  throw std::invalid_argument("unknown pricing kind: " + std::string(name));
}

CostSpec CostSpec::local(double t_avg_seconds, double p_hour_usd) {
  CostSpec s;
  s.kind = PricingKind::kLocal;
  s.t_avg_seconds = t_avg_seconds;
  s.p_hour_usd = p_hour_usd;
  return s;
}

CostSpec CostSpec::fixed_per_1k(double price_per_1k_usd) {
  CostSpec s;
  s.kind = PricingKind::kFixedPer1k;
  s.price_per_1k_usd = price_per_1k_usd;
  return s;
}

CostSpec CostSpec::token_priced(double n_in_tokens, double n_out_tokens,
                                double p_in_usd_per_1m,
                                double p_out_usd_per_1m) {
  CostSpec s;
  s.kind = PricingKind::kTokenPriced;
  s.n_in_tokens = n_in_tokens;
  s.n_out_tokens = n_out_tokens;
  s.p_in_usd_per_1m = p_in_usd_per_1m;
  s.p_out_usd_per_1m = p_out_usd_per_1m;
  return s;
}

double cost_per_million(const CostSpec& spec) {
  switch (spec.kind) {
    case PricingKind::kLocal:
      require_positive(spec.t_avg_seconds, "t_avg_seconds");
      require_positive(spec.p_hour_usd, "p_hour_usd");
      return 1e6 * spec.t_avg_seconds * (spec.p_hour_usd / 3600.0);
    case PricingKind::kFixedPer1k:
      require_positive(spec.price_per_1k_usd, "price_per_1k_usd");
      return 1e6 * (spec.price_per_1k_usd / 1000.0);
    case PricingKind::kTokenPriced:
      require_positive(spec.n_in_tokens, "n_in_tokens");
      require_positive(spec.n_out_tokens, "n_out_tokens");
      require_positive(spec.p_in_usd_per_1m, "p_in_usd_per_1m");
      require_positive(spec.p_out_usd_per_1m, "p_out_usd_per_1m");
      return 1e6 * (spec.n_in_tokens * spec.p_in_usd_per_1m / 1e6 +
                    spec.n_out_tokens * spec.p_out_usd_per_1m / 1e6);
  }
  throw std::invalid_argument("CostSpec: malformed kind");
}

double relative_cost(double candidate_t_avg_s, double reference_t_avg_s) {
  if (!(candidate_t_avg_s > 0.0) || !(reference_t_avg_s > 0.0))
    throw std::invalid_argument("relative_cost: times must be > 0");
  return 100.0 * candidate_t_avg_s / reference_t_avg_s;
}

double counterfactual_relative_reduction(double observed_minutes,
                                         double no_degen_minutes) {
  if (!(no_degen_minutes > 0.0) || no_degen_minutes > observed_minutes)
    throw std::invalid_argument(
        "counterfactual_relative_reduction: requires 0 < no_degen <= observed");
  return 100.0 * (observed_minutes - no_degen_minutes) / observed_minutes;
}

double display_round(double value, int decimals) {
  const double scale = std::pow(10.0, decimals);
  return std::floor(value * scale + 0.5) / scale;
}

std::map<std::string, CostSpec> load_pricing(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open pricing file " + path);
  json doc = json::parse(in);
  std::map<std::string, CostSpec> out;
  for (const auto& [provider, entry] : doc.items()) {
    CostSpec spec;
    spec.kind = pricing_kind_from_name(entry.at("kind").get<std::string>());
    switch (spec.kind) {
      case PricingKind::kLocal:
        spec.t_avg_seconds = entry.value("t_avg_seconds", 0.0);
        spec.p_hour_usd = entry.at("p_hour_usd").get<double>();
        break;
      case PricingKind::kFixedPer1k:
        spec.price_per_1k_usd = entry.at("price_per_1k_usd").get<double>();
        break;
      case PricingKind::kTokenPriced:
        spec.n_in_tokens = entry.at("n_in_tokens").get<double>();
        spec.n_out_tokens = entry.at("n_out_tokens").get<double>();
        spec.p_in_usd_per_1m = entry.at("p_in_usd_per_1m").get<double>();
        spec.p_out_usd_per_1m = entry.at("p_out_usd_per_1m").get<double>();
        break;
    }
    out.emplace(provider, spec);
  }
  return out;
}

std::string pricing_to_json(const std::map<std::string, CostSpec>& pricing) {
  ordered_json doc = ordered_json::object();
  for (const auto& [provider, spec] : pricing) {
    ordered_json entry;
    entry["kind"] = std::string(pricing_kind_name(spec.kind));
    switch (spec.kind) {
      case PricingKind::kLocal:
        entry["t_avg_seconds"] = spec.t_avg_seconds;
        entry["p_hour_usd"] = spec.p_hour_usd;
        break;
      case PricingKind::kFixedPer1k:
        entry["price_per_1k_usd"] = spec.price_per_1k_usd;
        break;
      case PricingKind::kTokenPriced:
        entry["n_in_tokens"] = spec.n_in_tokens;
        entry["n_out_tokens"] = spec.n_out_tokens;
        entry["p_in_usd_per_1m"] = spec.p_in_usd_per_1m;
        entry["p_out_usd_per_1m"] = spec.p_out_usd_per_1m;
        break;
    }
    doc[provider] = entry;
  }
  return doc.dump(2);
}

}  // namespace dharmaocr::costmodel
