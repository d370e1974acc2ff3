#include "dharmaocr/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

#include "dharmaocr/text.hpp"

namespace dharmaocr::metrics {

namespace {

void check_config(const BleuConfig& cfg) {
  if (cfg.max_ngram_order < 1)
    throw std::invalid_argument("BleuConfig: max_ngram_order must be >= 1");
  if (!(cfg.smoothing_epsilon > 0.0))
    throw std::invalid_argument("BleuConfig: smoothing_epsilon must be > 0");
}

// Candidate/reference tokens mapped to integer ids so n-gram keys are cheap.
std::vector<int> intern(const std::vector<std::string_view>& tokens,
                        std::unordered_map<std::string_view, int>& ids) {
  std::vector<int> out;
  out.reserve(tokens.size());
  for (auto t : tokens) {
    auto [it, inserted] = ids.emplace(t, static_cast<int>(ids.size()));
    out.push_back(it->second);
  }
  return out;
}

std::map<std::vector<int>, long> ngram_counts(const std::vector<int>& toks,
                                              int n) {
  std::map<std::vector<int>, long> counts;
  if (static_cast<std::size_t>(n) > toks.size()) return counts;
  for (std::size_t i = 0; i + n <= toks.size(); ++i) {
    counts[std::vector<int>(toks.begin() + i, toks.begin() + i + n)] += 1;
  }
  return counts;
}

}  // namespace

std::size_t levenshtein_distance(std::string_view a, std::string_view b) {
  const std::u32string ua = text::decode_utf8(a);
  const std::u32string ub = text::decode_utf8(b);
  const std::u32string& shorter = ua.size() <= ub.size() ? ua : ub;
  const std::u32string& longer = ua.size() <= ub.size() ? ub : ua;
  if (shorter.empty()) return longer.size();

  std::vector<std::size_t> row(shorter.size() + 1);
  std::iota(row.begin(), row.end(), std::size_t{0});
  for (std::size_t i = 0; i < longer.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i + 1;
    for (std::size_t j = 0; j < shorter.size(); ++j) {
      const std::size_t up = row[j + 1];
      if (longer[i] == shorter[j]) {
        row[j + 1] = diag;
      } else {
        row[j + 1] = 1 + std::min({diag, up, row[j]});
      }
      diag = up;
    }
  }
  return row[shorter.size()];
}

double levenshtein_ratio(std::string_view a, std::string_view b) {
  const std::size_t la = text::decode_utf8(a).size();
  const std::size_t lb = text::decode_utf8(b).size();
  const std::size_t longest = std::max(la, lb);
  if (longest == 0) return 1.0;
  return 1.0 - static_cast<double>(levenshtein_distance(a, b)) /
                   static_cast<double>(longest);
}

double bleu(std::string_view candidate, std::string_view reference,
            const BleuConfig& cfg) {
  check_config(cfg);
  const auto cand_tokens = text::split_whitespace(candidate);
  const auto ref_tokens = text::split_whitespace(reference);
  if (cand_tokens.empty()) return ref_tokens.empty() ? 1.0 : 0.0;

  std::unordered_map<std::string_view, int> ids;
  const std::vector<int> cand = intern(cand_tokens, ids);
  const std::vector<int> ref = intern(ref_tokens, ids);

  // Orders beyond the candidate length have no n-grams at all; cap the
  // geometric mean there so identical short texts still score 1.
  const int orders = std::min<int>(cfg.max_ngram_order,
                                   static_cast<int>(cand.size()));
  double log_precision_sum = 0.0;
  for (int n = 1; n <= orders; ++n) {
    const auto cand_counts = ngram_counts(cand, n);
    const auto ref_counts = ngram_counts(ref, n);
    long total = 0;
    long clipped = 0;
    for (const auto& [gram, count] : cand_counts) {
      total += count;
      auto it = ref_counts.find(gram);
      if (it != ref_counts.end()) clipped += std::min(count, it->second);
    }
    double precision =
        total > 0 ? static_cast<double>(clipped) / static_cast<double>(total)
                  : 0.0;
    if (precision == 0.0) precision = cfg.smoothing_epsilon;
    log_precision_sum += std::log(precision);
  }

  const double c = static_cast<double>(cand.size());
  const double r = static_cast<double>(ref.size());
  const double brevity = c >= r ? 1.0 : std::exp(1.0 - r / c);
  return brevity * std::exp(log_precision_sum / orders);
}

ScoreBreakdown dharma_score(std::string_view prediction,
                            std::string_view reference,
                            const BleuConfig& cfg) {
  check_config(cfg);
  const std::string pred = text::nfc_utf8(prediction);
  const std::string ref = text::nfc_utf8(reference);
  ScoreBreakdown out;
  out.levenshtein_ratio = levenshtein_ratio(pred, ref);
  out.bleu = bleu(pred, ref, cfg);
  out.score = (out.levenshtein_ratio + out.bleu) / 2.0;
  return out;
}

CorpusReport corpus_score(
    const std::vector<std::pair<std::string, std::string>>& pairs,
    const BleuConfig& cfg) {
  if (pairs.empty())
    throw std::invalid_argument("corpus_score: empty pair list");
  CorpusReport report;
  report.items.reserve(pairs.size());
  double sum = 0.0;
  for (const auto& [prediction, reference] : pairs) {
    report.items.push_back(dharma_score(prediction, reference, cfg));
    sum += report.items.back().score;
  }
  report.mean_score = sum / static_cast<double>(pairs.size());
  return report;
}

}  // namespace dharmaocr::metrics
