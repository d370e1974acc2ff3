#include "dharmaocr/structured.hpp"

#include <algorithm>
#include <array>

#include <json.hpp>

namespace dharmaocr::structured {

namespace {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

constexpr std::array<std::string_view, 4> kKeys{"header", "margin", "footer",
                                                "text"};

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
    s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
    s.remove_suffix(1);
  return s;
}

// Strips a leading/trailing markdown fence line (``` or ```json). Returns
// whether anything was removed.
bool strip_code_fence(std::string_view& s) {
  bool stripped = false;
  std::string_view t = trim(s);
  if (t.substr(0, 3) == "```") {
    const std::size_t eol = t.find('\n');
    t = eol == std::string_view::npos ? std::string_view{} : t.substr(eol + 1);
    stripped = true;
  }
  if (const std::size_t pos = t.rfind("```");
      pos != std::string_view::npos && trim(t.substr(pos + 3)).empty()) {
    t = t.substr(0, pos);
    stripped = true;
  }
  if (stripped) s = t;
  return stripped;
}

// `needle` equals the start of `t` (ignoring leading whitespace) up to a
// newline boundary: strip through that boundary. needle may span lines.
bool strip_matching_prefix(std::string& t, std::string_view needle) {
  std::size_t a = 0;
  while (a < t.size() && std::isspace(static_cast<unsigned char>(t[a]))) ++a;
  if (t.compare(a, needle.size(), needle) != 0) return false;
  std::size_t c = a + needle.size();
  while (c < t.size() && (t[c] == ' ' || t[c] == '\t' || t[c] == '\r')) ++c;
  if (c < t.size()) {
    if (t[c] != '\n') return false;
    ++c;
  }
  t.erase(0, c);
  return true;
}

bool strip_matching_suffix(std::string& t, std::string_view needle) {
  std::size_t b = t.size();
  while (b > 0 && std::isspace(static_cast<unsigned char>(t[b - 1]))) --b;
  if (b < needle.size()) return false;
  const std::size_t a = b - needle.size();
  if (t.compare(a, needle.size(), needle) != 0) return false;
  std::size_t c = a;
  while (c > 0 && (t[c - 1] == ' ' || t[c - 1] == '\t' || t[c - 1] == '\r'))
    --c;
  if (c > 0) {
    if (t[c - 1] != '\n') return false;
    --c;
  }
  t.erase(c);
  return true;
}

}  // namespace

std::string_view violation_name(Violation v) {
  switch (v) {
    case Violation::kNotParseable: return "not-parseable";
    case Violation::kMissingKey: return "missing-key";
    case Violation::kExtraKey: return "extra-key";
    case Violation::kNonTextValue: return "non-text-value";
  }
  return "unknown";
}

ParseOutcome parse_extraction(std::string_view raw) {
  ParseOutcome out;
  std::string_view body = trim(raw);
  if (strip_code_fence(body))
    out.report.notes.emplace_back("stripped markdown code fence");

  json doc = json::parse(body, nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded() || !doc.is_object()) {
    out.report.violations.emplace_back(
        Violation::kNotParseable,
        doc.is_discarded() ? "output is not valid JSON"
                           : "top-level value is not an object");
    return out;
  }

  PageExtraction extraction;
  for (const auto key : kKeys) {
    auto it = doc.find(key);
    if (it == doc.end()) {
      out.report.violations.emplace_back(Violation::kMissingKey,
                                         std::string(key));
      continue;
    }
    if (it->is_null()) continue;
    if (!it->is_string()) {
      out.report.violations.emplace_back(
          Violation::kNonTextValue,
          std::string(key) + " is " + std::string(it->type_name()));
      continue;
    }
    const std::string value = it->get<std::string>();
    if (key == "header") extraction.header = value;
    else if (key == "margin") extraction.margin = value;
    else if (key == "footer") extraction.footer = value;
    else extraction.text = value;
  }
  for (const auto& [key, value] : doc.items()) {
    if (std::ranges::find(kKeys, key) == kKeys.end())
      out.report.violations.emplace_back(Violation::kExtraKey, key);
  }

  out.report.adheres = out.report.violations.empty();
  if (out.report.adheres) out.extraction = std::move(extraction);
  return out;
}

SchemaReport validate_schema(std::string_view raw) {
  return parse_extraction(raw).report;
}

std::string flatten(const PageExtraction& e, std::span<const Field> order,
                    std::string_view separator) {
  std::string out;
  bool first = true;
  const auto append = [&](const std::optional<std::string>& field) {
    if (!field) return;
    if (!first) out += separator;
    out += *field;
    first = false;
  };
  for (const Field f : order) {
    switch (f) {
      case Field::kHeader: append(e.header); break;
      case Field::kMargin: append(e.margin); break;
      case Field::kFooter: append(e.footer); break;
      case Field::kText: append(e.text); break;
    }
  }
  return out;
}

PageExtraction dedupe_peripherals(PageExtraction e) {
  if (!e.text) return e;
  std::string& t = *e.text;
  const std::array<const std::optional<std::string>*, 3> peripherals{
      &e.header, &e.footer, &e.margin};
  bool changed = true;
  while (changed) {
    changed = false;
    for (const auto* field : peripherals) {
      if (!*field) continue;
      const std::string needle{trim(**field)};
      if (needle.empty()) continue;
      while (strip_matching_prefix(t, needle)) changed = true;
      while (strip_matching_suffix(t, needle)) changed = true;
    }
  }
  return e;
}

std::string to_json(const PageExtraction& e) {
  ordered_json doc;
  const auto put = [&](const char* key,
                       const std::optional<std::string>& field) {
    if (field) doc[key] = *field;
    else doc[key] = nullptr;
  };
  put("header", e.header);
  put("margin", e.margin);
  put("footer", e.footer);
  put("text", e.text);
  return doc.dump();
}

}  // namespace dharmaocr::structured
