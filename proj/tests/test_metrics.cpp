#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "dharmaocr/metrics.hpp"
#include "oracles.hpp"

using namespace dharmaocr;

namespace {

// All strings over {a, b} with length <= max_len.
std::vector<std::string> two_symbol_strings(std::size_t max_len) {
  std::vector<std::string> out{""};
  std::size_t begin = 0;
  for (std::size_t len = 1; len <= max_len; ++len) {
    const std::size_t end = out.size();
    for (std::size_t i = begin; i < end; ++i) {
      out.push_back(out[i] + 'a');
      out.push_back(out[i] + 'b');
    }
    begin = end;
  }
  return out;
}

std::string random_string(std::mt19937& rng, std::size_t max_len) {
  std::uniform_int_distribution<std::size_t> len(0, max_len);
  std::uniform_int_distribution<int> ch('a', 'e');
  std::string s(len(rng), ' ');
  for (char& c : s) c = static_cast<char>(ch(rng));
  return s;
}

}  // namespace

TEST_CASE("levenshtein_distance basics") {
  CHECK(metrics::levenshtein_distance("abc", "abc") == 0);
  CHECK(metrics::levenshtein_distance("", "abc") == 3);
  CHECK(metrics::levenshtein_distance("abc", "") == 3);
  CHECK(metrics::levenshtein_distance("", "") == 0);
  // Frozen from the recursive oracle.
  const std::size_t kitten = oracles::levenshtein_recursive("kitten", "sitting");
  CHECK(kitten == 3);
  CHECK(metrics::levenshtein_distance("kitten", "sitting") == kitten);
}

TEST_CASE("levenshtein_distance counts codepoints, not bytes") {
  // 'é' is two bytes; one substitution, not two.
  CHECK(metrics::levenshtein_distance("café", "cafe") == 1);
  CHECK(metrics::levenshtein_distance("ação", "acao") == 2);
}

TEST_CASE("levenshtein DP equals the exhaustive recursive oracle") {
  const auto strings = two_symbol_strings(6);
  REQUIRE(strings.size() == 127);
  for (const auto& a : strings) {
    for (const auto& b : strings) {
      CHECK(metrics::levenshtein_distance(a, b) ==
            oracles::levenshtein_recursive(a, b));
    }
  }
}

TEST_CASE("levenshtein symmetry and triangle inequality") {
  std::mt19937 rng(20240913);
  for (int iter = 0; iter < 300; ++iter) {
    const std::string a = random_string(rng, 12);
    const std::string b = random_string(rng, 12);
    const std::string c = random_string(rng, 12);
    const auto ab = metrics::levenshtein_distance(a, b);
    CHECK(ab == metrics::levenshtein_distance(b, a));
    CHECK(metrics::levenshtein_distance(a, c) <=
          ab + metrics::levenshtein_distance(b, c));
  }
}

TEST_CASE("levenshtein_ratio") {
  CHECK(metrics::levenshtein_ratio("abc", "abc") == 1.0);
  CHECK(metrics::levenshtein_ratio("", "") == 1.0);
  const std::size_t d = oracles::levenshtein_recursive("kitten", "sitting");
  CHECK(metrics::levenshtein_ratio("kitten", "sitting") ==
        doctest::Approx(1.0 - static_cast<double>(d) / 7.0));

  std::mt19937 rng(7);
  for (int iter = 0; iter < 300; ++iter) {
    const std::string a = random_string(rng, 10);
    const std::string b = random_string(rng, 10);
    const double r = metrics::levenshtein_ratio(a, b);
    CHECK(r >= 0.0);
    CHECK(r <= 1.0);
    CHECK((r == 1.0) == (a == b));
  }
}

TEST_CASE("bleu trivial cases") {
  CHECK(metrics::bleu("the cat sat", "the cat sat") == doctest::Approx(1.0));
  CHECK(metrics::bleu("", "a b c") == 0.0);
  CHECK(metrics::bleu("", "") == 1.0);
}

TEST_CASE("bleu matches the hand-count oracle on the fixture pair") {
  // candidate: the cat sat on the mat   (6 tokens)
  // reference: the cat is on the mat    (6 tokens)
  // Clipped counts by hand:
  //   1-grams: the(2) cat(1) on(1) mat(1) of 6 -> 5/6
  //   2-grams: "the cat", "on the", "the mat" of 5 -> 3/5
  //   3-grams: "on the mat" of 4 -> 1/4
  //   4-grams: none of 3 -> epsilon
  // Lengths equal -> brevity penalty 1.
  const double expected =
      std::pow(5.0 / 6.0 * 3.0 / 5.0 * 1.0 / 4.0 * 1e-9, 0.25);
  const double got =
      metrics::bleu("the cat sat on the mat", "the cat is on the mat");
  CHECK(std::abs(got - expected) < 1e-9);
}

TEST_CASE("bleu brevity penalty and whitespace invariance") {
  // Shorter candidate gets penalized even with perfect precisions.
  const double short_cand = metrics::bleu("the cat", "the cat sat on a mat");
  CHECK(short_cand < 1.0);
  CHECK(short_cand > 0.0);

  const double plain = metrics::bleu("a b c d e", "a b c d e");
  const double padded = metrics::bleu("  a b c d e \n", "a b c d e");
  CHECK(plain == padded);

  CHECK(metrics::bleu("x", "x", {1, 1e-9}) == doctest::Approx(1.0));
}

TEST_CASE("bleu(x, x) == 1 for non-empty x") {
  std::mt19937 rng(99);
  for (int iter = 0; iter < 100; ++iter) {
    std::string s = random_string(rng, 8);
    if (s.empty()) s = "a";
    std::string sentence = s;
    std::uniform_int_distribution<int> extra(0, 6);
    for (int k = extra(rng); k > 0; --k)
      sentence += " " + random_string(rng, 5);
    CHECK(metrics::bleu(sentence, sentence) == doctest::Approx(1.0));
  }
}

TEST_CASE("bleu config validation") {
  CHECK_THROWS_AS(metrics::bleu("a", "a", {0, 1e-9}), std::invalid_argument);
  CHECK_THROWS_AS(metrics::bleu("a", "a", {4, 0.0}), std::invalid_argument);
}

TEST_CASE("dharma_score is the exact component mean") {
  const auto identical = metrics::dharma_score("mesmo texto", "mesmo texto");
  CHECK(identical.levenshtein_ratio == 1.0);
  CHECK(identical.bleu == 1.0);
  CHECK(identical.score == 1.0);

  const auto b = metrics::dharma_score("o gato sentou", "o gato pulou");
  CHECK(b.score == (b.levenshtein_ratio + b.bleu) / 2.0);

  // Composed and combining-mark accents are the same text after NFC.
  const auto nfc = metrics::dharma_score("Júri", "Júri");
  CHECK(nfc.score == 1.0);
}

TEST_CASE("corpus_score") {
  using Pairs = std::vector<std::pair<std::string, std::string>>;
  CHECK_THROWS_AS(metrics::corpus_score(Pairs{}), std::invalid_argument);

  const Pairs one{{"texto igual", "texto igual"}};
  CHECK(metrics::corpus_score(one).mean_score == doctest::Approx(1.0));

  // One perfect, one empty-vs-text: scores 1.0 and 0.0 -> mean 0.5.
  const Pairs two{{"texto igual", "texto igual"}, {"", "texto"}};
  const auto report = metrics::corpus_score(two);
  CHECK(report.items.size() == 2);
  CHECK(report.items[0].score == doctest::Approx(1.0));
  CHECK(report.items[1].score == doctest::Approx(0.0));
  CHECK(report.mean_score == doctest::Approx(0.5));

  const Pairs copies(7, {"um dois tres", "um dois quatro"});
  const auto rep = metrics::corpus_score(copies);
  CHECK(rep.mean_score == doctest::Approx(rep.items[0].score));
}
