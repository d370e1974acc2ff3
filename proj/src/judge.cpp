#include "dharmaocr/judge.hpp"

#include <algorithm>
#include <stdexcept>

#include <httplib.h>
#include <json.hpp>

namespace dharmaocr::judge {

namespace {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

Choice choice_from_name(std::string_view name) {
  if (name == "left") return Choice::kLeft;
  if (name == "right") return Choice::kRight;
  if (name == "tie") return Choice::kTie;
  throw std::runtime_error("judge reply: unknown choice '" +
                           std::string(name) + "'");
}

// splitmix64; enough randomness for short ids and order shuffling, and
// seedable so tests are reproducible.
std::uint64_t next_rand(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

std::string short_id(std::uint64_t& state) {
  static constexpr char alphabet[] = "0123456789ABCDEF";
  std::string id(3, '0');
  std::uint64_t r = next_rand(state);
  for (char& c : id) {
    c = alphabet[r & 0xF];
    r >>= 4;
  }
  return id;
}

// Per-criterion choice applied uniformly; mocks decide once per call.
JudgeReply uniform_reply(Choice choice) {
  JudgeReply reply;
  for (const auto& criterion : judge_criteria())
    reply.choices[criterion.id] = choice;
  return reply;
}

Verdict to_model_space(Choice raw, bool a_presented_first) {
  if (raw == Choice::kTie) return Verdict::kTie;
  const bool left_wins = raw == Choice::kLeft;
  return left_wins == a_presented_first ? Verdict::kWinA : Verdict::kWinB;
}

}  // namespace

const std::array<JudgeCriterion, 6>& judge_criteria() {
  static const std::array<JudgeCriterion, 6> criteria{{
      {"C1", "Comprehensibility",
       "Which text enables information to be extracted more easily?"},
      {"C2", "Precision",
       "Which text exhibits the lowest rate of extraction errors?"},
      {"C3", "Completeness",
       "Which model extracted the largest amount of relevant information?"},
      {"C4", "Fidelity",
       "Which text is more faithful, avoiding hallucinated words that are "
       "not present?"},
      {"C5", "General Adequacy",
       "Which model is more robust for deployment in production systems?"},
      {"C6", "Formatting", "Which model better preserves the structure?"},
  }};
  return criteria;
}

AnonymousIds anonymize(std::uint64_t& rng_state) {
  AnonymousIds ids;
  ids.id_a = short_id(rng_state);
  do {
    ids.id_b = short_id(rng_state);
  } while (ids.id_b == ids.id_a);
  return ids;
}

JudgeReply LexicographicJudge::evaluate(const JudgeRequest& request) {
  if (request.left_text == request.right_text)
    return uniform_reply(Choice::kTie);
  return uniform_reply(request.left_text < request.right_text
                           ? Choice::kLeft
                           : Choice::kRight);
}

JudgeReply FirstPresentedJudge::evaluate(const JudgeRequest&) {
  return uniform_reply(Choice::kLeft);
}

HttpJudgeClient::HttpJudgeClient(std::string base_url, std::string bearer_token,
                                 std::string path)
    : base_url_(std::move(base_url)),
      token_(std::move(bearer_token)),
      path_(std::move(path)) {}

JudgeReply HttpJudgeClient::evaluate(const JudgeRequest& request) {
  ordered_json body;
  body["page_image"] = request.page_image;
  body["responses"] = ordered_json::array();
  body["responses"].push_back(
      {{"id", request.left_id}, {"text", request.left_text}});
  body["responses"].push_back(
      {{"id", request.right_id}, {"text", request.right_text}});
  body["criteria"] = ordered_json::array();
  for (const auto& criterion : judge_criteria()) {
    body["criteria"].push_back({{"id", criterion.id},
                                {"name", criterion.name},
                                {"guiding_question",
                                 criterion.guiding_question}});
  }
  body["instruction"] =
      "For each criterion, answer the guiding question by choosing \"left\" "
      "(the first response), \"right\" (the second response), or \"tie\". "
      "Reply with a JSON object {\"choices\": {\"C1\": ..., ..., \"C6\": "
      "...}} and nothing else.";

  httplib::Client client(base_url_);
  client.set_read_timeout(120, 0);
  httplib::Headers headers;
  if (!token_.empty())
    headers.emplace("Authorization", "Bearer " + token_);
  auto res = client.Post(path_, headers, body.dump(), "application/json");
  if (!res)
    throw std::runtime_error("judge endpoint unreachable: " +
                             httplib::to_string(res.error()));
  if (res->status != 200)
    throw std::runtime_error("judge endpoint returned status " +
                             std::to_string(res->status));

  json doc = json::parse(res->body, nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded() || !doc.contains("choices") ||
      !doc["choices"].is_object())
    throw std::runtime_error("judge reply is not the expected JSON object");
  JudgeReply reply;
  for (const auto& criterion : judge_criteria()) {
    const auto it = doc["choices"].find(criterion.id);
    if (it == doc["choices"].end() || !it->is_string())
      throw std::runtime_error("judge reply missing criterion " +
                               criterion.id);
    reply.choices[criterion.id] = choice_from_name(it->get<std::string>());
  }
  return reply;
}

std::optional<PairVerdict> adjudicate(const AdjudicationInput& input,
                                      JudgeClient& client, std::uint64_t seed,
                                      const JudgeConfig& cfg) {
  if (cfg.rounds_per_order < 1)
    throw std::invalid_argument("JudgeConfig: rounds_per_order must be >= 1");
  if (input.output_a.empty() || input.output_b.empty())
    throw std::invalid_argument("adjudicate: outputs must be non-empty");

  std::uint64_t rng = seed;
  const AnonymousIds ids = anonymize(rng);
  const bool a_first_in_round_one = (next_rand(rng) & 1) == 0;

  PairVerdict verdict;
  verdict.page_id = input.page_id;

  // Per-order, per-criterion verdicts in model space; round records kept raw.
  std::array<std::map<std::string, Verdict>, 2> order_verdicts;
  for (int order = 0; order < 2; ++order) {
    const bool a_first = order == 0 ? a_first_in_round_one
                                    : !a_first_in_round_one;
    std::map<std::string, std::vector<Verdict>> calls;
    for (int round = 0; round < cfg.rounds_per_order; ++round) {
      JudgeRequest request;
      request.page_image = input.page_image;
      request.left_id = a_first ? ids.id_a : ids.id_b;
      request.right_id = a_first ? ids.id_b : ids.id_a;
      request.left_text = a_first ? input.output_a : input.output_b;
      request.right_text = a_first ? input.output_b : input.output_a;
      JudgeReply reply;
      try {
        reply = client.evaluate(request);
      } catch (const std::exception&) {
        return std::nullopt;  // unadjudicated
      }
      RoundRecord record;
      record.a_presented_first = a_first;
      record.left_id = request.left_id;
      record.right_id = request.right_id;
      record.raw = reply.choices;
      verdict.rounds.push_back(std::move(record));
      for (const auto& [criterion, raw] : reply.choices)
        calls[criterion].push_back(to_model_space(raw, a_first));
    }
    // Majority within the order; any split defaults to tie.
    for (const auto& [criterion, votes] : calls) {
      const bool unanimous =
          std::all_of(votes.begin(), votes.end(),
                      [&](Verdict v) { return v == votes.front(); });
      order_verdicts[order][criterion] =
          unanimous ? votes.front() : Verdict::kTie;
    }
  }

  // Consistency across the two orders: a win stands only if both orders
  // preferred the same output.
  for (const auto& criterion : judge_criteria()) {
    const Verdict v0 = order_verdicts[0].at(criterion.id);
    const Verdict v1 = order_verdicts[1].at(criterion.id);
    verdict.per_criterion[criterion.id] =
        (v0 == v1 && v0 != Verdict::kTie) ? v0 : Verdict::kTie;
  }
  return verdict;
}

Tally tally(std::span<const PairVerdict> verdicts) {
  if (verdicts.empty())
    throw std::invalid_argument("tally: no verdicts");
  Tally out;
  out.pages = verdicts.size();
  std::map<std::string, std::array<std::size_t, 3>> counts;
  for (const auto& verdict : verdicts) {
    for (const auto& [criterion, v] : verdict.per_criterion)
      counts[criterion][static_cast<std::size_t>(v)] += 1;
  }
  for (const auto& [criterion, c] : counts) {
    const double n = static_cast<double>(c[0] + c[1] + c[2]);
    CriterionTally t;
    t.pct_model_a = 100.0 * static_cast<double>(c[0]) / n;
    t.pct_model_b = 100.0 * static_cast<double>(c[1]) / n;
    t.pct_tie = 100.0 * static_cast<double>(c[2]) / n;
    out.per_criterion[criterion] = t;
  }
  return out;
}

}  // namespace dharmaocr::judge
