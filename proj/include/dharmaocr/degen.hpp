#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dharmaocr::degen {

// One model output for one page, as reported by the serving layer.
// hit_token_limit is authoritative; output_tokens may be below max_tokens
// even when the limit was hit, depending on how the provider clips.
struct GenerationRecord {
  std::string output_text;
  long output_tokens = 0;
  long max_tokens = 1;
  bool hit_token_limit = false;
  std::optional<double> start_time;  // seconds
  std::optional<double> end_time;
};

struct DegenConfig {
  int ngram_order = 8;             // preferred repeating-unit length, in tokens
  int min_consecutive_repeats = 4;
  int tail_window_tokens = 256;
  double min_tail_fraction = 0.5;  // of the tail window's characters
};

struct RepetitionReport {
  bool degenerate = false;
  std::optional<std::vector<std::string>> repeating_ngram;
  long repeat_count = 0;                 // complete back-to-back copies
  double tail_repetition_fraction = 0.0; // window chars covered by the run
};

// Scans the last cfg.tail_window_tokens whitespace tokens for the repeating
// unit with the strongest back-to-back run. Unit lengths up to half the
// window are considered (degenerate loops routinely cycle over multi-line
// blocks longer than ngram_order); units of at most cfg.ngram_order tokens
// are preferred when runs tie, longest first. Runs of >= 20 identical
// characters (dot leaders and the like) compare as a single pseudo-token
// regardless of length. Degenerate iff the best run has at least
// cfg.min_consecutive_repeats complete copies and covers at least
// cfg.min_tail_fraction of the window's characters.
RepetitionReport detect_repetition(std::string_view output_text,
                                   const DegenConfig& cfg = {});

struct DegeneracyResult {
  bool degenerate = false;  // hit_token_limit AND repetition, conjunctive
  RepetitionReport repetition;
};

DegeneracyResult is_degenerate(const GenerationRecord& record,
                               const DegenConfig& cfg = {});

// 100 * degenerate / total. Throws std::invalid_argument on an empty span.
double degeneration_rate(std::span<const GenerationRecord> records,
                         const DegenConfig& cfg = {});

}  // namespace dharmaocr::degen
