#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace dharmaocr::metrics {

struct BleuConfig {
  int max_ngram_order = 4;
  double smoothing_epsilon = 1e-9;
  // Tokenization is whitespace splitting; no other tokenizer is offered.
};

struct ScoreBreakdown {
  double levenshtein_ratio = 0.0;
  double bleu = 0.0;
  double score = 0.0;  // (levenshtein_ratio + bleu) / 2
};

// Minimal number of single-character insertions, deletions and substitutions
// transforming a into b, counted over Unicode scalar values.
std::size_t levenshtein_distance(std::string_view a, std::string_view b);

// 1 - distance(a, b) / max(|a|, |b|); defined as 1.0 when both are empty.
double levenshtein_ratio(std::string_view a, std::string_view b);

// Modified n-gram precision BLEU with brevity penalty. Zero precisions are
// replaced by cfg.smoothing_epsilon; an empty candidate against a non-empty
// reference scores 0.
double bleu(std::string_view candidate, std::string_view reference,
            const BleuConfig& cfg = {});

// Benchmark score: arithmetic mean of the Levenshtein ratio and BLEU.
// Both inputs are canonically composed (NFC over the Latin range) before
// comparison so that combining-mark accents do not show up as edits.
ScoreBreakdown dharma_score(std::string_view prediction,
                            std::string_view reference,
                            const BleuConfig& cfg = {});

struct CorpusReport {
  double mean_score = 0.0;
  std::vector<ScoreBreakdown> items;  // in input order
};

// Mean dharma_score over (prediction, reference) pairs. Throws
// std::invalid_argument on an empty list.
CorpusReport corpus_score(
    const std::vector<std::pair<std::string, std::string>>& pairs,
    const BleuConfig& cfg = {});

}  // namespace dharmaocr::metrics
