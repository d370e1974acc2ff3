#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace dharmaocr::text {

// UTF-8 <-> Unicode scalar values. Invalid byte sequences decode to U+FFFD.
std::u32string decode_utf8(std::string_view s);
std::string encode_utf8(std::u32string_view s);

// Canonical composition of base letter + combining mark pairs for the Latin
// range (grave, acute, circumflex, tilde, diaeresis, cedilla, ring, macron,
// breve, caron). Already-composed text passes through unchanged.
std::u32string compose_latin(std::u32string_view s);

// compose_latin with UTF-8 in/out.
std::string nfc_utf8(std::string_view s);

struct TokenSpan {
  std::string_view token;
  std::size_t begin = 0;  // byte offsets into the source string
  std::size_t end = 0;
};

// Splits on ASCII whitespace; returned views alias the input.
std::vector<std::string_view> split_whitespace(std::string_view s);
std::vector<TokenSpan> split_whitespace_spans(std::string_view s);

}  // namespace dharmaocr::text
