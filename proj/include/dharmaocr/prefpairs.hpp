#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace dharmaocr::prefpairs {

// Judge scores for one candidate response, each an integer in [0, 1000].
struct CriterionScores {
  int completeness = 0;
  int precision = 0;
  int formatting = 0;
  int structure_adherence = 0;
};

// Arithmetic mean of the four criterion scores. Throws std::invalid_argument
// when a score is outside [0, 1000].
double aggregate_score(const CriterionScores& s);

struct CandidateResponse {
  std::string response_id;  // unique within its instance
  std::string text;
  CriterionScores scores;
  bool is_degenerate = false;
  std::optional<std::string> justification;
};

// Five scored candidate responses for one document.
struct PreferenceInstance {
  std::string document_id;
  std::vector<CandidateResponse> candidates;
};

inline constexpr std::size_t kCandidatesPerInstance = 5;

// All C(5,2) = 10 unordered id pairs, sorted by (first, second) id.
// Throws std::invalid_argument when the candidate count is not 5.
std::vector<std::pair<std::string, std::string>> enumerate_pairs(
    const PreferenceInstance& inst);

enum class PairRule { kMidQualityMargin, kHighQualityMargin };

std::string_view pair_rule_name(PairRule rule);

struct FilterDecision {
  bool include = false;
  std::optional<PairRule> rule;  // set when included
  std::string reason;            // set when discarded
};

// The three-row filtering policy over aggregated scores, with s_l <= s_w:
//   both below 800            -> discard (unreliable signal)
//   max in [800, 900)         -> include iff s_w - s_l >= 400
//   max >= 900                -> include iff s_w - s_l >= 200
// Boundaries are inclusive. Throws std::invalid_argument when s_l > s_w or
// either score is outside [0, 1000].
FilterDecision filter_pair(double s_w, double s_l);

struct PreferencePair {
  std::string document_id;
  std::string chosen_id;
  std::string rejected_id;
  double s_w = 0.0;
  double s_l = 0.0;
  PairRule rule = PairRule::kHighQualityMargin;
  bool rejected_is_degenerate = false;
};

// Scope for the degeneration-retention constraint: a pair whose rejected
// response is degenerate is dropped when that response identity is also a
// chosen response. Corpus-wide matches bare response ids across the whole
// dataset; instance-local matches only within the same document.
enum class RetentionScope { kCorpusWide, kInstanceLocal };

struct DatasetStats {
  std::size_t instances = 0;
  std::size_t candidate_pairs = 0;
  std::size_t discarded_low_quality = 0;   // both scores below 800
  std::size_t discarded_small_margin = 0;  // margin below the regime minimum
  std::size_t included_mid_quality = 0;
  std::size_t included_high_quality = 0;
  std::size_t degenerate_rejected_retained = 0;
  std::size_t degenerate_conflict_dropped = 0;
  std::size_t final_pairs = 0;
};

struct BuildResult {
  std::vector<PreferencePair> pairs;
  DatasetStats stats;
};

BuildResult build_preference_dataset(
    std::span<const PreferenceInstance> instances,
    RetentionScope scope = RetentionScope::kCorpusWide);

// Sequence log-probabilities of the chosen/rejected responses under the
// trained policy and the frozen reference policy.
struct DpoPairLogProbs {
  double logp_policy_chosen = 0.0;
  double logp_policy_rejected = 0.0;
  double logp_ref_chosen = 0.0;
  double logp_ref_rejected = 0.0;
  double beta = 1.0;
};

// (logp_policy_chosen - logp_ref_chosen) -
// (logp_policy_rejected - logp_ref_rejected)
double dpo_margin(const DpoPairLogProbs& p);

// -ln sigmoid(beta * margin), evaluated in softplus form so that
// |beta * margin| up to 1e4 neither overflows nor flushes to zero error.
double dpo_loss(const DpoPairLogProbs& p);

// JSONL I/O. One PreferenceInstance per line on input; one training-ready
// pair per line on output (document_id, chosen/rejected texts, scores, rule).
std::vector<PreferenceInstance> read_instances_jsonl(const std::string& path);
void write_pairs_jsonl(std::span<const PreferenceInstance> instances,
                       std::span<const PreferencePair> pairs,
                       const std::string& path);
void write_stats_json(const DatasetStats& stats, const std::string& path);

}  // namespace dharmaocr::prefpairs
