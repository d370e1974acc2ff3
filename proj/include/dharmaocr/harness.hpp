#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dharmaocr/degen.hpp"
#include "dharmaocr/metrics.hpp"
#include "dharmaocr/structured.hpp"
#include "dharmaocr/tracelab.hpp"

namespace dharmaocr::harness {

enum class Subset { kPrinted, kHandwritten, kLegal, kOther };

std::string_view subset_name(Subset s);
Subset subset_from_name(std::string_view name);

struct BenchmarkItem {
  std::string item_id;
  std::string image;  // file path, http(s)/data URL, or raw base64 payload
  std::string reference;
  Subset subset = Subset::kOther;
};

struct IngestReport {
  std::vector<BenchmarkItem> items;  // valid items, manifest order
  std::map<std::string, std::size_t> subset_counts;
  std::vector<std::string> errors;  // item-level problems, by item id
};

// Manifest: JSONL of {item_id, image, reference, subset}. Images given as
// paths must resolve on disk; references must be non-empty. Offending items
// land in `errors` and are left out of `items`.
IngestReport ingest_dataset(const std::string& manifest_path);

struct InferenceRequest {
  const BenchmarkItem* item = nullptr;
  std::string prompt;
  int max_tokens = 8192;
  double temperature = 0.0;
};

struct InferenceReply {
  std::string text;
  long prompt_tokens = 0;
  long completion_tokens = 0;
  std::string finish_reason;  // "length" maps to hit_token_limit
  // Honored by simulated-clock runs; wall-clock runs measure for real.
  std::optional<double> simulated_duration_s;
};

class InferenceClient {
 public:
  virtual ~InferenceClient() = default;
  // Must be safe to call from multiple threads. Throws std::runtime_error
  // on transport or protocol failure.
  virtual InferenceReply complete(const InferenceRequest& request) = 0;
};

// Chat-completions-shaped HTTP client: POST {base}/v1/chat/completions with
// the prompt and the page image (file paths are inlined as base64 data
// URLs), temperature and max_tokens; reads back message content, token
// usage, and finish_reason.
class HttpChatClient : public InferenceClient {
 public:
  HttpChatClient(std::string base_url, std::string bearer_token = {},
                 std::string model = {});
  InferenceReply complete(const InferenceRequest& request) override;

 private:
  std::string base_url_;
  std::string token_;
  std::string model_;
};

// In-process endpoint with canned replies keyed by item id; hermetic runs
// and tests use this in place of a live server.
class MockEndpoint : public InferenceClient {
 public:
  struct CannedReply {
    std::string text;
    long prompt_tokens = 0;
    long completion_tokens = 0;
    std::string finish_reason = "stop";
    double duration_s = 1.0;
  };

  void add(const std::string& item_id, CannedReply reply);
  // JSONL: {item_id, text, prompt_tokens, completion_tokens, finish_reason,
  // duration_s} per line.
  static MockEndpoint from_jsonl(const std::string& path);

  InferenceReply complete(const InferenceRequest& request) override;

 private:
  std::map<std::string, CannedReply> replies_;
};

enum class ClockMode {
  kWallClock,  // threads + monotonic clock
  kSimulated,  // virtual time from declared durations; deterministic
};

struct RunOptions {
  int concurrency_limit = 30;
  int max_tokens = 8192;
  double temperature = 0.0;
  int max_retries = 2;
  std::string prompt;  // empty -> default transcription prompt
  ClockMode clock = ClockMode::kWallClock;
};

struct ItemGeneration {
  std::string item_id;
  degen::GenerationRecord record;
  bool failed = false;  // exhausted retries; excluded from scoring
};

struct RunOutcome {
  std::vector<ItemGeneration> generations;  // item order
  tracelab::RequestTrace trace;             // successful requests
  std::size_t failed_count = 0;
};

std::string default_prompt();

// Fans out over the items with at most concurrency_limit requests in flight,
// recording per-request wall times into a trace that tracelab can consume
// directly.
RunOutcome run_inference(std::span<const BenchmarkItem> items,
                         InferenceClient& client, const RunOptions& opts = {});

// Marks trace events whose generation is degenerate (limit hit + repetition).
void annotate_trace_degeneracy(RunOutcome& outcome,
                               const degen::DegenConfig& cfg = {});

struct EvalConfig {
  metrics::BleuConfig bleu;
  degen::DegenConfig degen;
  std::vector<structured::Field> flatten_order{
      structured::kDefaultFlattenOrder,
      structured::kDefaultFlattenOrder + 4};
  std::string flatten_separator = "\n";
  std::optional<double> reference_time_s;  // enables the relative-cost column
  std::string model_label = "model";
};

struct ItemRow {
  std::string item_id;
  Subset subset = Subset::kOther;
  double levenshtein_ratio = 0.0;
  double bleu = 0.0;
  double score = 0.0;
  bool degenerate = false;
  bool parse_ok = false;       // output adhered to the four-field schema
  bool scored_on_raw = false;  // fell back to scoring the raw output string
  bool hit_token_limit = false;
  long output_tokens = 0;
  double duration_s = 0.0;
};

struct RunReport {
  std::string model_label;
  double mean_score = 0.0;
  double degeneration_rate = 0.0;   // percent
  double mean_time_per_page = 0.0;  // seconds
  std::optional<double> relative_cost_pct;
  std::size_t failed_items = 0;
  std::vector<ItemRow> rows;
};

// Per item: parse the structured output, strip duplicated peripherals,
// flatten, and score against the reference; outputs that do not parse are
// scored on the raw string and flagged. Aggregates mean score, the
// degeneration rate, and mean time per page.
RunReport evaluate_run(std::span<const BenchmarkItem> items,
                       const RunOutcome& outcome, const EvalConfig& cfg = {});

// Writes report.json (full per-item detail), report.csv (per-item rows) and
// report.md (benchmark-table row) into out_dir; byte-deterministic for a
// given report. Returns the written paths.
std::vector<std::string> emit_report(const RunReport& report,
                                     const std::string& out_dir);

}  // namespace dharmaocr::harness
