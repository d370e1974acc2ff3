#include "dharmaocr/degen.hpp"

#include <algorithm>
#include <stdexcept>
#include <unordered_map>

#include "dharmaocr/text.hpp"

namespace dharmaocr::degen {

namespace {

constexpr std::size_t kCharRunCollapse = 20;

struct RepToken {
  std::string key;   // collapsed form used for equality
  std::string show;  // original text, for reporting
  std::size_t begin = 0;
  std::size_t end = 0;
};

// Whitespace tokens, with maximal runs of >= kCharRunCollapse identical
// characters split out and keyed by the character alone so leaders of
// different lengths compare equal.
std::vector<RepToken> tokenize(std::string_view s) {
  std::vector<RepToken> out;
  for (const auto& span : text::split_whitespace_spans(s)) {
    const std::string_view tok = span.token;
    std::size_t i = 0;
    std::size_t lit_begin = 0;
    bool have_lit = false;
    const auto flush_literal = [&](std::size_t end_pos) {
      if (have_lit && end_pos > lit_begin) {
        std::string piece(tok.substr(lit_begin, end_pos - lit_begin));
        out.push_back(
            {piece, piece, span.begin + lit_begin, span.begin + end_pos});
      }
      have_lit = false;
    };
    while (i < tok.size()) {
      std::size_t j = i + 1;
      while (j < tok.size() && tok[j] == tok[i]) ++j;
      if (j - i >= kCharRunCollapse) {
        flush_literal(i);
        out.push_back({std::string("\x01run:") + tok[i],
                       std::string(tok.substr(i, j - i)), span.begin + i,
                       span.begin + j});
      } else if (!have_lit) {
        lit_begin = i;
        have_lit = true;
      }
      i = j;
    }
    flush_literal(tok.size());
  }
  return out;
}

struct Run {
  std::size_t start = 0;  // window token index
  std::size_t period = 0;
  long copies = 0;        // complete copies of the unit
  double coverage = 0.0;  // of the window's characters
};

}  // namespace

RepetitionReport detect_repetition(std::string_view output_text,
                                   const DegenConfig& cfg) {
  if (cfg.ngram_order < 1 || cfg.min_consecutive_repeats < 1 ||
      cfg.tail_window_tokens < 1 || !(cfg.min_tail_fraction > 0.0) ||
      cfg.min_tail_fraction > 1.0)
    throw std::invalid_argument("DegenConfig: invalid field");

  RepetitionReport report;
  const std::vector<RepToken> all = tokenize(output_text);
  if (all.size() < 2) return report;

  const std::size_t window =
      std::min<std::size_t>(all.size(), cfg.tail_window_tokens);
  const std::size_t base = all.size() - window;
  const double window_chars =
      static_cast<double>(all.back().end - all[base].begin);

  // Equality over interned keys.
  std::unordered_map<std::string_view, int> ids;
  std::vector<int> key(window);
  for (std::size_t i = 0; i < window; ++i) {
    auto [it, inserted] =
        ids.emplace(all[base + i].key, static_cast<int>(ids.size()));
    key[i] = it->second;
  }

  const auto run_coverage = [&](std::size_t start, std::size_t len) {
    const std::size_t first = base + start;
    const std::size_t last = base + start + len - 1;
    return static_cast<double>(all[last].end - all[first].begin) /
           window_chars;
  };

  // A stretch where key[i] == key[i + p] for m consecutive positions spans
  // m + p tokens: one unit of length p repeated floor(m / p) + 1 full times
  // plus a fractional tail.
  std::optional<Run> best_ok;    // qualifies as degenerate
  std::optional<Run> best_any;   // best-effort, for non-degenerate reports
  const auto prefer = [&](const Run& a, const Run& b) {  // true if a beats b
    if (a.coverage != b.coverage) return a.coverage > b.coverage;
    const bool a_small = a.period <= static_cast<std::size_t>(cfg.ngram_order);
    const bool b_small = b.period <= static_cast<std::size_t>(cfg.ngram_order);
    if (a_small != b_small) return a_small;
    if (a.period != b.period) return a_small ? a.period > b.period
                                             : a.period < b.period;
    return a.start > b.start;
  };

  for (std::size_t p = 1; p <= window / 2; ++p) {
    std::size_t i = 0;
    while (i + p < window) {
      if (key[i] != key[i + p]) {
        ++i;
        continue;
      }
      std::size_t m = 0;
      while (i + m + p < window && key[i + m] == key[i + m + p]) ++m;
      if (m >= p) {  // at least two complete copies
        Run run{i, p, static_cast<long>(m / p) + 1, run_coverage(i, m + p)};
        const bool ok =
            run.copies >= cfg.min_consecutive_repeats &&
            run.coverage >= cfg.min_tail_fraction;
        if (ok && (!best_ok || prefer(run, *best_ok))) best_ok = run;
        if (!best_any || prefer(run, *best_any)) best_any = run;
      }
      i += m + 1;
    }
  }

  const std::optional<Run>& chosen = best_ok ? best_ok : best_any;
  if (!chosen) return report;
  report.degenerate = best_ok.has_value();
  report.repeat_count = chosen->copies;
  report.tail_repetition_fraction = chosen->coverage;
  std::vector<std::string> unit;
  unit.reserve(chosen->period);
  for (std::size_t k = 0; k < chosen->period; ++k)
    unit.push_back(all[base + chosen->start + k].show);
  report.repeating_ngram = std::move(unit);
  return report;
}

DegeneracyResult is_degenerate(const GenerationRecord& record,
                               const DegenConfig& cfg) {
  DegeneracyResult result;
  result.repetition = detect_repetition(record.output_text, cfg);
  result.degenerate = record.hit_token_limit && result.repetition.degenerate;
  return result;
}

double degeneration_rate(std::span<const GenerationRecord> records,
                         const DegenConfig& cfg) {
  if (records.empty())
    throw std::invalid_argument("degeneration_rate: empty record list");
  long flagged = 0;
  for (const auto& record : records) {
    if (is_degenerate(record, cfg).degenerate) ++flagged;
  }
  return 100.0 * static_cast<double>(flagged) /
         static_cast<double>(records.size());
}

}  // namespace dharmaocr::degen
