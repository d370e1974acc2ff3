#include "dharmaocr/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <queue>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "dharmaocr/costmodel.hpp"

namespace dharmaocr::harness {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

std::string base64_encode(std::string_view data) {
  static constexpr char table[] =
      "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  std::string out;
  out.reserve((data.size() + 2) / 3 * 4);
  std::size_t i = 0;
  while (i + 3 <= data.size()) {
    const unsigned v = (static_cast<unsigned char>(data[i]) << 16) |
                       (static_cast<unsigned char>(data[i + 1]) << 8) |
                       static_cast<unsigned char>(data[i + 2]);
    out.push_back(table[(v >> 18) & 63]);
    out.push_back(table[(v >> 12) & 63]);
    out.push_back(table[(v >> 6) & 63]);
    out.push_back(table[v & 63]);
    i += 3;
  }
  if (const std::size_t rest = data.size() - i; rest == 1) {
    const unsigned v = static_cast<unsigned char>(data[i]) << 16;
    out.push_back(table[(v >> 18) & 63]);
    out.push_back(table[(v >> 12) & 63]);
    out += "==";
  } else if (rest == 2) {
    const unsigned v = (static_cast<unsigned char>(data[i]) << 16) |
                       (static_cast<unsigned char>(data[i + 1]) << 8);
    out.push_back(table[(v >> 18) & 63]);
    out.push_back(table[(v >> 12) & 63]);
    out.push_back(table[(v >> 6) & 63]);
    out.push_back('=');
  }
  return out;
}

bool looks_like_url(std::string_view image) {
  return image.starts_with("http://") || image.starts_with("https://") ||
         image.starts_with("data:");
}

std::string image_payload(const std::string& image) {
  if (looks_like_url(image)) return image;
  if (fs::exists(image)) {
    std::ifstream in(image, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    std::string mime = "image/png";
    const std::string ext = fs::path(image).extension().string();
    if (ext == ".jpg" || ext == ".jpeg") mime = "image/jpeg";
    else if (ext == ".webp") mime = "image/webp";
    return "data:" + mime + ";base64," + base64_encode(buf.str());
  }
  // Raw base64 payload.
  return "data:image/png;base64," + image;
}

bool image_resolvable(const std::string& image) {
  if (image.empty()) return false;
  if (looks_like_url(image)) return true;
  if (fs::exists(image)) return true;
  // Accept raw base64 payloads (no path separators, plausible alphabet).
  return image.find('/') == std::string::npos ||
         image.find_first_not_of("ABCDEFGHIJKLMNOPQRSTUVWXYZ"
                                 "abcdefghijklmnopqrstuvwxyz0123456789+/=") ==
             std::string::npos;
}

std::string format_double(double value, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, value);
  return buf;
}

}  // namespace

std::string_view subset_name(Subset s) {
  switch (s) {
    case Subset::kPrinted: return "printed";
    case Subset::kHandwritten: return "handwritten";
    case Subset::kLegal: return "legal";
    case Subset::kOther: return "other";
  }
  return "other";
}

Subset subset_from_name(std::string_view name) {
  if (name == "printed") return Subset::kPrinted;
  if (name == "handwritten") return Subset::kHandwritten;
  if (name == "legal") return Subset::kLegal;
  if (name == "other") return Subset::kOther;
  throw std::invalid_argument("unknown subset: " + std::string(name));
}

IngestReport ingest_dataset(const std::string& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in)
    throw std::runtime_error("cannot open manifest " + manifest_path);
  const fs::path manifest_dir = fs::path(manifest_path).parent_path();

  IngestReport report;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json doc = json::parse(line, nullptr, /*allow_exceptions=*/false);
    if (doc.is_discarded() || !doc.is_object()) {
      report.errors.push_back("line " + std::to_string(line_no) +
                              ": not a JSON object");
      continue;
    }
    BenchmarkItem item;
    item.item_id = doc.value("item_id", "line-" + std::to_string(line_no));
    item.image = doc.value("image", std::string{});
    item.reference = doc.value("reference", std::string{});
    try {
      item.subset = subset_from_name(doc.value("subset", "other"));
    } catch (const std::invalid_argument& e) {
      report.errors.push_back(item.item_id + ": " + e.what());
      continue;
    }
    // Relative image paths resolve against the manifest location.
    if (!item.image.empty() && !looks_like_url(item.image) &&
        !fs::exists(item.image)) {
      const fs::path relative = manifest_dir / item.image;
      if (fs::exists(relative)) item.image = relative.string();
    }
    if (item.reference.empty()) {
      report.errors.push_back(item.item_id + ": empty reference");
      continue;
    }
    if (!image_resolvable(item.image)) {
      report.errors.push_back(item.item_id + ": image not resolvable: " +
                              item.image);
      continue;
    }
    report.subset_counts[std::string(subset_name(item.subset))] += 1;
    report.items.push_back(std::move(item));
  }
  return report;
}

HttpChatClient::HttpChatClient(std::string base_url, std::string bearer_token,
                               std::string model)
    : base_url_(std::move(base_url)),
      token_(std::move(bearer_token)),
      model_(std::move(model)) {}

InferenceReply HttpChatClient::complete(const InferenceRequest& request) {
  ordered_json content = ordered_json::array();
  content.push_back({{"type", "text"}, {"text", request.prompt}});
  content.push_back(
      {{"type", "image_url"},
       {"image_url", {{"url", image_payload(request.item->image)}}}});
  ordered_json body;
  if (!model_.empty()) body["model"] = model_;
  body["temperature"] = request.temperature;
  body["max_tokens"] = request.max_tokens;
  body["messages"] =
      ordered_json::array({{{"role", "user"}, {"content", content}}});

  httplib::Client client(base_url_);
  client.set_read_timeout(600, 0);
  client.set_connection_timeout(30, 0);
  httplib::Headers headers;
  if (!token_.empty())
    headers.emplace("Authorization", "Bearer " + token_);
  auto res =
      client.Post("/v1/chat/completions", headers, body.dump(),
                  "application/json");
  if (!res)
    throw std::runtime_error("endpoint unreachable: " +
                             httplib::to_string(res.error()));
  if (res->status != 200)
    throw std::runtime_error("endpoint returned status " +
                             std::to_string(res->status));
  json doc = json::parse(res->body, nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded() || !doc.contains("choices") ||
      doc["choices"].empty())
    throw std::runtime_error("endpoint reply missing choices");
  const auto& choice = doc["choices"][0];
  InferenceReply reply;
  reply.text = choice.at("message").at("content").get<std::string>();
  reply.finish_reason = choice.value("finish_reason", "stop");
  if (doc.contains("usage")) {
    reply.prompt_tokens = doc["usage"].value("prompt_tokens", 0L);
    reply.completion_tokens = doc["usage"].value("completion_tokens", 0L);
  }
  return reply;
}

void MockEndpoint::add(const std::string& item_id, CannedReply reply) {
  replies_[item_id] = std::move(reply);
}

MockEndpoint MockEndpoint::from_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open mock replies " + path);
  MockEndpoint endpoint;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json doc = json::parse(line);
    CannedReply reply;
    reply.text = doc.at("text").get<std::string>();
    reply.prompt_tokens = doc.value("prompt_tokens", 0L);
    reply.completion_tokens = doc.value("completion_tokens", 0L);
    reply.finish_reason = doc.value("finish_reason", "stop");
    reply.duration_s = doc.value("duration_s", 1.0);
    endpoint.add(doc.at("item_id").get<std::string>(), std::move(reply));
  }
  return endpoint;
}

InferenceReply MockEndpoint::complete(const InferenceRequest& request) {
  const auto it = replies_.find(request.item->item_id);
  if (it == replies_.end())
    throw std::runtime_error("mock endpoint has no reply for item " +
                             request.item->item_id);
  InferenceReply reply;
  reply.text = it->second.text;
  reply.prompt_tokens = it->second.prompt_tokens;
  reply.completion_tokens = it->second.completion_tokens;
  reply.finish_reason = it->second.finish_reason;
  reply.simulated_duration_s = it->second.duration_s;
  return reply;
}

std::string default_prompt() {
  return "Transcribe this document page into a JSON object with exactly the "
         "keys \"header\", \"margin\", \"footer\" and \"text\". Copy the "
         "visible text faithfully and use null for fields absent from the "
         "page.";
}

RunOutcome run_inference(std::span<const BenchmarkItem> items,
                         InferenceClient& client, const RunOptions& opts) {
  if (opts.concurrency_limit < 1)
    throw std::invalid_argument("run_inference: concurrency_limit >= 1");
  if (opts.max_tokens < 1)
    throw std::invalid_argument("run_inference: max_tokens >= 1");
  const std::string prompt =
      opts.prompt.empty() ? default_prompt() : opts.prompt;

  RunOutcome outcome;
  outcome.generations.resize(items.size());
  outcome.trace.concurrency_limit = opts.concurrency_limit;

  struct Timed {
    bool ok = false;
    double start = 0.0;
    double end = 0.0;
  };
  std::vector<Timed> timings(items.size());

  const auto attempt = [&](std::size_t i) -> bool {
    InferenceRequest request{&items[i], prompt, opts.max_tokens,
                             opts.temperature};
    ItemGeneration& gen = outcome.generations[i];
    gen.item_id = items[i].item_id;
    for (int tries = 0; tries <= opts.max_retries; ++tries) {
      try {
        const InferenceReply reply = client.complete(request);
        gen.record.output_text = reply.text;
        gen.record.output_tokens = reply.completion_tokens;
        gen.record.max_tokens = opts.max_tokens;
        gen.record.hit_token_limit = reply.finish_reason == "length";
        if (opts.clock == ClockMode::kSimulated)
          timings[i].end = reply.simulated_duration_s.value_or(1.0);
        return true;
      } catch (const std::exception&) {
        if (tries == opts.max_retries) break;
      }
    }
    gen.failed = true;
    return false;
  };

  if (opts.clock == ClockMode::kSimulated) {
    // Virtual time: declared durations run through the same greedy
    // bounded-concurrency schedule the semaphore would produce.
    std::priority_queue<double, std::vector<double>, std::greater<>> free_at;
    for (int s = 0; s < opts.concurrency_limit; ++s) free_at.push(0.0);
    for (std::size_t i = 0; i < items.size(); ++i) {
      const bool ok = attempt(i);
      if (!ok) {
        ++outcome.failed_count;
        continue;
      }
      const double duration = timings[i].end;
      const double start = free_at.top();
      free_at.pop();
      timings[i] = {true, start, start + duration};
      free_at.push(start + duration);
    }
  } else {
    const auto epoch = std::chrono::steady_clock::now();
    const auto seconds_since_epoch = [&] {
      return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                           epoch)
          .count();
    };
    std::atomic<std::size_t> next{0};
    const std::size_t workers = std::min<std::size_t>(
        static_cast<std::size_t>(opts.concurrency_limit), items.size());
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        while (true) {
          const std::size_t i = next.fetch_add(1);
          if (i >= items.size()) return;
          const double start = seconds_since_epoch();
          const bool ok = attempt(i);
          const double end = seconds_since_epoch();
          timings[i] = {ok, start, end};
        }
      });
    }
    for (auto& t : pool) t.join();
    for (const auto& timing : timings)
      if (!timing.ok) ++outcome.failed_count;
  }

  for (std::size_t i = 0; i < items.size(); ++i) {
    if (!timings[i].ok) continue;
    outcome.generations[i].record.start_time = timings[i].start;
    outcome.generations[i].record.end_time = timings[i].end;
    outcome.trace.events.push_back({items[i].item_id, i, timings[i].start,
                                    timings[i].end, false});
  }
  return outcome;
}

void annotate_trace_degeneracy(RunOutcome& outcome,
                               const degen::DegenConfig& cfg) {
  std::map<std::string, bool> flags;
  for (const auto& gen : outcome.generations) {
    if (gen.failed) continue;
    flags[gen.item_id] = degen::is_degenerate(gen.record, cfg).degenerate;
  }
  for (auto& event : outcome.trace.events) {
    const auto it = flags.find(event.request_id);
    if (it != flags.end()) event.degenerate = it->second;
  }
}

RunReport evaluate_run(std::span<const BenchmarkItem> items,
                       const RunOutcome& outcome, const EvalConfig& cfg) {
  std::map<std::string, const BenchmarkItem*> by_id;
  for (const auto& item : items) by_id[item.item_id] = &item;

  RunReport report;
  report.model_label = cfg.model_label;
  report.failed_items = outcome.failed_count;

  std::vector<degen::GenerationRecord> records;
  double score_sum = 0.0;
  double time_sum = 0.0;
  std::size_t timed = 0;

  for (const auto& gen : outcome.generations) {
    if (gen.failed) continue;
    const auto item_it = by_id.find(gen.item_id);
    if (item_it == by_id.end())
      throw std::invalid_argument("evaluate_run: record for unknown item " +
                                  gen.item_id);
    const BenchmarkItem& item = *item_it->second;

    ItemRow row;
    row.item_id = gen.item_id;
    row.subset = item.subset;

    std::string scored_text;
    const auto parsed = structured::parse_extraction(gen.record.output_text);
    if (parsed.extraction) {
      row.parse_ok = true;
      const auto deduped = structured::dedupe_peripherals(*parsed.extraction);
      scored_text = structured::flatten(deduped, cfg.flatten_order,
                                        cfg.flatten_separator);
    } else {
      row.scored_on_raw = true;
      scored_text = gen.record.output_text;
    }
    const auto breakdown =
        metrics::dharma_score(scored_text, item.reference, cfg.bleu);
    row.levenshtein_ratio = breakdown.levenshtein_ratio;
    row.bleu = breakdown.bleu;
    row.score = breakdown.score;
    row.degenerate = degen::is_degenerate(gen.record, cfg.degen).degenerate;
    row.hit_token_limit = gen.record.hit_token_limit;
    row.output_tokens = gen.record.output_tokens;
    if (gen.record.start_time && gen.record.end_time) {
      row.duration_s = *gen.record.end_time - *gen.record.start_time;
      time_sum += row.duration_s;
      ++timed;
    }
    score_sum += row.score;
    records.push_back(gen.record);
    report.rows.push_back(std::move(row));
  }

  if (!report.rows.empty()) {
    report.mean_score = score_sum / static_cast<double>(report.rows.size());
    report.degeneration_rate = degen::degeneration_rate(records, cfg.degen);
  }
  if (timed > 0) report.mean_time_per_page = time_sum / timed;
  if (cfg.reference_time_s && timed > 0)
    report.relative_cost_pct = costmodel::relative_cost(
        report.mean_time_per_page, *cfg.reference_time_s);
  return report;
}

std::vector<std::string> emit_report(const RunReport& report,
                                     const std::string& out_dir) {
  fs::create_directories(out_dir);
  const fs::path dir(out_dir);
  std::vector<std::string> written;

  {
    ordered_json doc;
    doc["model_label"] = report.model_label;
    doc["mean_score"] = report.mean_score;
    doc["degeneration_rate_pct"] = report.degeneration_rate;
    doc["mean_time_per_page_s"] = report.mean_time_per_page;
    if (report.relative_cost_pct)
      doc["relative_cost_pct"] = *report.relative_cost_pct;
    else
      doc["relative_cost_pct"] = nullptr;
    doc["failed_items"] = report.failed_items;
    doc["items"] = ordered_json::array();
    for (const auto& row : report.rows) {
      ordered_json r;
      r["item_id"] = row.item_id;
      r["subset"] = std::string(subset_name(row.subset));
      r["levenshtein_ratio"] = row.levenshtein_ratio;
      r["bleu"] = row.bleu;
      r["score"] = row.score;
      r["degenerate"] = row.degenerate;
      r["parse_ok"] = row.parse_ok;
      r["scored_on_raw"] = row.scored_on_raw;
      r["hit_token_limit"] = row.hit_token_limit;
      r["output_tokens"] = row.output_tokens;
      r["duration_s"] = row.duration_s;
      doc["items"].push_back(std::move(r));
    }
    const fs::path path = dir / "report.json";
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << doc.dump(2) << '\n';
    written.push_back(path.string());
  }

  {
    const fs::path path = dir / "report.csv";
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "item_id,subset,levenshtein_ratio,bleu,score,degenerate,parse_ok,"
           "scored_on_raw,hit_token_limit,output_tokens,duration_s\n";
    for (const auto& row : report.rows) {
      out << row.item_id << ',' << subset_name(row.subset) << ','
          << format_double(row.levenshtein_ratio, 6) << ','
          << format_double(row.bleu, 6) << ',' << format_double(row.score, 6)
          << ',' << (row.degenerate ? 1 : 0) << ',' << (row.parse_ok ? 1 : 0)
          << ',' << (row.scored_on_raw ? 1 : 0) << ','
          << (row.hit_token_limit ? 1 : 0) << ',' << row.output_tokens << ','
          << format_double(row.duration_s, 6) << '\n';
    }
    written.push_back(path.string());
  }

  {
    const fs::path path = dir / "report.md";
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "| Model | Score | Degeneration rate (%) | Time per page (s) | "
           "Relative cost (%) |\n";
    out << "|---|---|---|---|---|\n";
    out << "| " << report.model_label << " | "
        << format_double(report.mean_score, 3) << " | "
        << format_double(report.degeneration_rate, 2) << " | "
        << format_double(report.mean_time_per_page, 3) << " | "
        << (report.relative_cost_pct
                ? format_double(*report.relative_cost_pct, 2) + "%"
                : std::string("--"))
        << " |\n";
    written.push_back(path.string());
  }

  return written;
}

}  // namespace dharmaocr::harness
