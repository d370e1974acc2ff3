#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dharmaocr::structured {

// The strict four-field page transcription. Absent (JSON null) is distinct
// from present-but-empty text.
struct PageExtraction {
  std::optional<std::string> header;
  std::optional<std::string> margin;
  std::optional<std::string> footer;
  std::optional<std::string> text;

  bool operator==(const PageExtraction&) const = default;
};

enum class Violation {
  kNotParseable,
  kMissingKey,
  kExtraKey,
  kNonTextValue,
};

std::string_view violation_name(Violation v);

struct SchemaReport {
  bool adheres = false;
  std::vector<std::pair<Violation, std::string>> violations;
  std::vector<std::string> notes;  // non-fatal, e.g. stripped code fences
};

struct ParseOutcome {
  std::optional<PageExtraction> extraction;  // set iff report.adheres
  SchemaReport report;
};

// Parses a model's raw output into the four-field schema. Tolerates
// surrounding whitespace and markdown code fences (noted in the report).
// Never throws on bad input; failures come back as violations.
ParseOutcome parse_extraction(std::string_view raw);

SchemaReport validate_schema(std::string_view raw);

enum class Field { kHeader, kMargin, kFooter, kText };

inline constexpr Field kDefaultFlattenOrder[] = {Field::kHeader, Field::kText,
                                                 Field::kFooter,
                                                 Field::kMargin};

// Joins the present fields, in order, with the separator.
std::string flatten(const PageExtraction& e,
                    std::span<const Field> order = kDefaultFlattenOrder,
                    std::string_view separator = "\n");

// Strips header/footer/margin text that the model repeated verbatim at the
// start or end of the text field (whitespace-trimmed, newline-bounded exact
// matches). The peripheral fields themselves are never modified. Idempotent.
PageExtraction dedupe_peripherals(PageExtraction e);

// Canonical serialized form: a JSON object with exactly the keys
// header, margin, footer, text; absent encoded as null.
std::string to_json(const PageExtraction& e);

}  // namespace dharmaocr::structured
