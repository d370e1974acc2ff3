#include "dharmaocr/prefpairs.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <stdexcept>

#include <json.hpp>

namespace dharmaocr::prefpairs {

namespace {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

void check_score(int value, const char* name) {
  if (value < 0 || value > 1000)
    throw std::invalid_argument(std::string("CriterionScores: ") + name +
                                " outside [0, 1000]");
}

}  // namespace

double aggregate_score(const CriterionScores& s) {
  check_score(s.completeness, "completeness");
  check_score(s.precision, "precision");
  check_score(s.formatting, "formatting");
  check_score(s.structure_adherence, "structure_adherence");
  return (s.completeness + s.precision + s.formatting +
          s.structure_adherence) /
         4.0;
}

std::vector<std::pair<std::string, std::string>> enumerate_pairs(
    const PreferenceInstance& inst) {
  if (inst.candidates.size() != kCandidatesPerInstance)
    throw std::invalid_argument("enumerate_pairs: instance '" +
                                inst.document_id + "' has " +
                                std::to_string(inst.candidates.size()) +
                                " candidates, expected 5");
  std::vector<std::string> ids;
  ids.reserve(inst.candidates.size());
  for (const auto& c : inst.candidates) ids.push_back(c.response_id);
  std::sort(ids.begin(), ids.end());
  if (std::adjacent_find(ids.begin(), ids.end()) != ids.end())
    throw std::invalid_argument("enumerate_pairs: duplicate response_id in '" +
                                inst.document_id + "'");
  std::vector<std::pair<std::string, std::string>> out;
  out.reserve(10);
  for (std::size_t i = 0; i < ids.size(); ++i)
    for (std::size_t j = i + 1; j < ids.size(); ++j)
      out.emplace_back(ids[i], ids[j]);
  return out;
}

std::string_view pair_rule_name(PairRule rule) {
  switch (rule) {
    case PairRule::kMidQualityMargin: return "mid-quality-margin";
    case PairRule::kHighQualityMargin: return "high-quality-margin";
  }
  return "unknown";
}

FilterDecision filter_pair(double s_w, double s_l) {
  if (s_l > s_w)
    throw std::invalid_argument("filter_pair: s_l > s_w");
  if (s_l < 0.0 || s_w > 1000.0)
    throw std::invalid_argument("filter_pair: score outside [0, 1000]");

  if (s_w < 800.0 && s_l < 800.0)
    return {false, std::nullopt, "both scores below 800"};
  if (s_w < 900.0) {
    if (s_w - s_l >= 400.0)
      return {true, PairRule::kMidQualityMargin, {}};
    return {false, std::nullopt, "margin below 400 in mid-quality regime"};
  }
  if (s_w - s_l >= 200.0)
    return {true, PairRule::kHighQualityMargin, {}};
  return {false, std::nullopt, "margin below 200 in high-quality regime"};
}

BuildResult build_preference_dataset(
    std::span<const PreferenceInstance> instances, RetentionScope scope) {
  BuildResult result;
  result.stats.instances = instances.size();

  std::vector<PreferencePair> included;
  // Chosen identities of every filter-included pair; retention is resolved
  // against this set, before any retention drop.
  std::set<std::pair<std::string, std::string>> chosen_ids;  // (doc, response)

  for (const auto& inst : instances) {
    const auto id_pairs = enumerate_pairs(inst);
    result.stats.candidate_pairs += id_pairs.size();

    std::map<std::string, const CandidateResponse*> by_id;
    std::map<std::string, double> score_of;
    for (const auto& c : inst.candidates) {
      by_id[c.response_id] = &c;
      score_of[c.response_id] = aggregate_score(c.scores);
    }

    for (const auto& [first, second] : id_pairs) {
      const bool first_wins = score_of[first] >= score_of[second];
      const std::string& winner = first_wins ? first : second;
      const std::string& loser = first_wins ? second : first;
      const double s_w = score_of[winner];
      const double s_l = score_of[loser];
      const FilterDecision decision = filter_pair(s_w, s_l);
      if (!decision.include) {
        if (s_w < 800.0 && s_l < 800.0) ++result.stats.discarded_low_quality;
        else ++result.stats.discarded_small_margin;
        continue;
      }
      if (*decision.rule == PairRule::kMidQualityMargin)
        ++result.stats.included_mid_quality;
      else
        ++result.stats.included_high_quality;
      included.push_back({inst.document_id, winner, loser, s_w, s_l,
                          *decision.rule, by_id[loser]->is_degenerate});
      chosen_ids.emplace(inst.document_id, winner);
    }
  }

  std::set<std::string> chosen_bare;
  for (const auto& [doc, id] : chosen_ids) chosen_bare.insert(id);
  const auto chosen_elsewhere = [&](const PreferencePair& pair) {
    // Corpus-wide: the bare response id must not be chosen anywhere.
    if (scope == RetentionScope::kCorpusWide)
      return chosen_bare.count(pair.rejected_id) > 0;
    return chosen_ids.count({pair.document_id, pair.rejected_id}) > 0;
  };

  for (auto& pair : included) {
    if (pair.rejected_is_degenerate && chosen_elsewhere(pair)) {
      ++result.stats.degenerate_conflict_dropped;
      continue;
    }
    if (pair.rejected_is_degenerate)
      ++result.stats.degenerate_rejected_retained;
    result.pairs.push_back(std::move(pair));
  }
  result.stats.final_pairs = result.pairs.size();
  return result;
}

double dpo_margin(const DpoPairLogProbs& p) {
  return (p.logp_policy_chosen - p.logp_ref_chosen) -
         (p.logp_policy_rejected - p.logp_ref_rejected);
}

double dpo_loss(const DpoPairLogProbs& p) {
  if (!(p.beta > 0.0))
    throw std::invalid_argument("dpo_loss: beta must be > 0");
  const double z = p.beta * dpo_margin(p);
  // -ln sigmoid(z) = softplus(-z)
  if (z < 0.0) return -z + std::log1p(std::exp(z));
  return std::log1p(std::exp(-z));
}

std::vector<PreferenceInstance> read_instances_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<PreferenceInstance> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json doc = json::parse(line);
    PreferenceInstance inst;
    inst.document_id = doc.at("document_id").get<std::string>();
    for (const auto& c : doc.at("candidates")) {
      CandidateResponse cand;
      cand.response_id = c.at("response_id").get<std::string>();
      cand.text = c.value("text", std::string{});
      const auto& s = c.at("scores");
      cand.scores.completeness = s.at("completeness").get<int>();
      cand.scores.precision = s.at("precision").get<int>();
      cand.scores.formatting = s.at("formatting").get<int>();
      cand.scores.structure_adherence = s.at("structure_adherence").get<int>();
      cand.is_degenerate = c.value("is_degenerate", false);
      if (c.contains("justification") && !c["justification"].is_null())
        cand.justification = c["justification"].get<std::string>();
      inst.candidates.push_back(std::move(cand));
    }
    out.push_back(std::move(inst));
  }
  return out;
}

void write_pairs_jsonl(std::span<const PreferenceInstance> instances,
                       std::span<const PreferencePair> pairs,
                       const std::string& path) {
  std::map<std::pair<std::string, std::string>, const std::string*> text_of;
  for (const auto& inst : instances)
    for (const auto& c : inst.candidates)
      text_of[{inst.document_id, c.response_id}] = &c.text;

  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (const auto& pair : pairs) {
    ordered_json line;
    line["document_id"] = pair.document_id;
    const auto chosen = text_of.find({pair.document_id, pair.chosen_id});
    const auto rejected = text_of.find({pair.document_id, pair.rejected_id});
    line["chosen"] = chosen != text_of.end() ? *chosen->second : std::string{};
    line["rejected"] =
        rejected != text_of.end() ? *rejected->second : std::string{};
    line["s_w"] = pair.s_w;
    line["s_l"] = pair.s_l;
    line["rule"] = std::string(pair_rule_name(pair.rule));
    line["rejected_is_degenerate"] = pair.rejected_is_degenerate;
    out << line.dump() << '\n';
  }
}

void write_stats_json(const DatasetStats& stats, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  ordered_json doc;
  doc["instances"] = stats.instances;
  doc["candidate_pairs"] = stats.candidate_pairs;
  doc["discarded_low_quality"] = stats.discarded_low_quality;
  doc["discarded_small_margin"] = stats.discarded_small_margin;
  doc["included_mid_quality"] = stats.included_mid_quality;
  doc["included_high_quality"] = stats.included_high_quality;
  doc["degenerate_rejected_retained"] = stats.degenerate_rejected_retained;
  doc["degenerate_conflict_dropped"] = stats.degenerate_conflict_dropped;
  doc["final_pairs"] = stats.final_pairs;
  out << doc.dump(2) << '\n';
}

}  // namespace dharmaocr::prefpairs
