#pragma once

// Test-only oracles, kept independent of the library implementations they
// check: plain recursion instead of dynamic programming, and a literal
// transcription of the pair-filtering table.

#include <algorithm>
#include <cstddef>
#include <optional>
#include <string_view>

namespace oracles {

// Exhaustive recursion over all edit scripts; exponential, only for short
// ASCII strings.
inline std::size_t levenshtein_recursive(std::string_view a,
                                         std::string_view b) {
  if (a.empty()) return b.size();
  if (b.empty()) return a.size();
  const std::size_t del = levenshtein_recursive(a.substr(1), b) + 1;
  const std::size_t ins = levenshtein_recursive(a, b.substr(1)) + 1;
  const std::size_t sub = levenshtein_recursive(a.substr(1), b.substr(1)) +
                          (a[0] == b[0] ? 0 : 1);
  return std::min({del, ins, sub});
}

enum class FilterVerdict { kDiscard, kIncludeMid, kIncludeHigh };

// Direct reading of the three-row filtering table, row by row.
inline FilterVerdict filter_table(double s_w, double s_l) {
  // Row 1: s_w < 800 and s_l < 800 -> discard.
  if (s_w < 800 && s_l < 800) return FilterVerdict::kDiscard;
  const double top = std::max(s_w, s_l);
  // Row 2: max in [800, 900) -> require s_w - s_l >= 400.
  if (top >= 800 && top < 900) {
    return s_w - s_l >= 400 ? FilterVerdict::kIncludeMid
                            : FilterVerdict::kDiscard;
  }
  // Row 3: max >= 900 -> require s_w - s_l >= 200.
  return s_w - s_l >= 200 ? FilterVerdict::kIncludeHigh
                          : FilterVerdict::kDiscard;
}

}  // namespace oracles
