#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace dharmaocr::judge {

struct JudgeCriterion {
  std::string id;    // C1..C6
  std::string name;
  std::string guiding_question;
};

// The six pairwise evaluation criteria, embedded verbatim in the prompt.
const std::array<JudgeCriterion, 6>& judge_criteria();

// Raw per-round choice, relative to presentation order.
enum class Choice { kLeft, kRight, kTie };

// Final verdict, relative to the caller's (A, B) labeling.
enum class Verdict { kWinA, kWinB, kTie };

struct AnonymousIds {
  std::string id_a;  // random short id presented for output A
  std::string id_b;
};

// Fresh random 3-character identifiers, never derived from model names;
// the returned mapping is what de-anonymizes them. Seeded for tests.
AnonymousIds anonymize(std::uint64_t& rng_state);

struct JudgeRequest {
  std::string page_image;  // base64 payload or URL
  std::string left_id;     // anonymous id shown first
  std::string right_id;
  std::string left_text;
  std::string right_text;
};

struct JudgeReply {
  std::map<std::string, Choice> choices;  // criterion id -> choice
};

// One pairwise evaluation call. Implementations throw std::runtime_error on
// transport failure or a malformed reply; adjudicate() turns that into an
// unadjudicated page.
class JudgeClient {
 public:
  virtual ~JudgeClient() = default;
  virtual JudgeReply evaluate(const JudgeRequest& request) = 0;
};

// Deterministic in-process judges for tests and hermetic runs.

// Prefers the lexicographically smaller text regardless of presentation
// order; ties on equal texts.
class LexicographicJudge : public JudgeClient {
 public:
  JudgeReply evaluate(const JudgeRequest& request) override;
};

// Always prefers whichever output is presented first (pure order bias).
class FirstPresentedJudge : public JudgeClient {
 public:
  JudgeReply evaluate(const JudgeRequest& request) override;
};

// HTTP judge endpoint: POST of a JSON body carrying the page image, the two
// anonymized outputs in presentation order, and the six criteria; expects
// {"choices": {"C1": "left"|"right"|"tie", ...}}.
class HttpJudgeClient : public JudgeClient {
 public:
  HttpJudgeClient(std::string base_url, std::string bearer_token = {},
                  std::string path = "/v1/judge");
  JudgeReply evaluate(const JudgeRequest& request) override;

 private:
  std::string base_url_;
  std::string token_;
  std::string path_;
};

struct RoundRecord {
  bool a_presented_first = true;
  std::string left_id;  // ids as presented in this round
  std::string right_id;
  std::map<std::string, Choice> raw;  // criterion id -> raw choice
};

struct PairVerdict {
  std::string page_id;
  std::map<std::string, Verdict> per_criterion;
  std::vector<RoundRecord> rounds;
};

struct JudgeConfig {
  // Calls issued per presentation order. 1 gives the two-round protocol
  // (one call per order); 2 gives four calls with per-order majority before
  // the cross-order consistency rule.
  int rounds_per_order = 1;
};

struct AdjudicationInput {
  std::string page_id;
  std::string page_image;
  std::string output_a;
  std::string output_b;
};

// Runs the double-execution, order-shuffled protocol for one page: the pair
// is anonymized, judged once per presentation order (rounds_per_order times
// each), and a criterion verdict is a win only when every round agrees on
// the same output; any disagreement or tie round yields a tie. Returns
// nullopt when a judge call fails or replies malformed (page excluded from
// tallies, counted by the caller).
std::optional<PairVerdict> adjudicate(const AdjudicationInput& input,
                                      JudgeClient& client,
                                      std::uint64_t seed,
                                      const JudgeConfig& cfg = {});

struct CriterionTally {
  double pct_model_a = 0.0;
  double pct_model_b = 0.0;
  double pct_tie = 0.0;
};

struct Tally {
  std::map<std::string, CriterionTally> per_criterion;  // by criterion id
  std::size_t pages = 0;
};

// Percentages of win-A / win-B / tie per criterion over the adjudicated
// pages. Throws std::invalid_argument on an empty list.
Tally tally(std::span<const PairVerdict> verdicts);

}  // namespace dharmaocr::judge
