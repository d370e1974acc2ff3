#include "dharmaocr/tracelab.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <queue>
#include <random>
#include <set>
#include <stdexcept>

#include <json.hpp>

namespace dharmaocr::tracelab {

namespace {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

std::vector<const RequestEvent*> by_submit_order(const RequestTrace& trace) {
  std::vector<const RequestEvent*> out;
  out.reserve(trace.events.size());
  for (const auto& e : trace.events) out.push_back(&e);
  std::sort(out.begin(), out.end(), [](const auto* a, const auto* b) {
    return a->submit_order < b->submit_order;
  });
  return out;
}

double mean_healthy_duration(const RequestTrace& trace) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& e : trace.events) {
    if (e.degenerate) continue;
    sum += e.end_time - e.start_time;
    ++n;
  }
  if (n == 0)
    throw std::invalid_argument("trace has no non-degenerate events");
  return sum / static_cast<double>(n);
}

// Nearest-rank percentile of non-degenerate durations.
double healthy_percentile(const RequestTrace& trace, double percentile) {
  if (!(percentile > 0.0) || !(percentile < 1.0))
    throw std::invalid_argument("percentile must be in (0, 1)");
  std::vector<double> durations;
  for (const auto& e : trace.events)
    if (!e.degenerate) durations.push_back(e.end_time - e.start_time);
  if (durations.empty())
    throw std::invalid_argument("trace has no non-degenerate events");
  std::sort(durations.begin(), durations.end());
  const std::size_t rank = static_cast<std::size_t>(
      std::ceil(percentile * static_cast<double>(durations.size())));
  return durations[std::max<std::size_t>(rank, 1) - 1];
}

// Greedy bounded-concurrency replay of the given per-request durations in
// submit order; returns the finishing time of the last request.
double replay_makespan(const std::vector<double>& durations, int slots) {
  std::priority_queue<double, std::vector<double>, std::greater<>> free_at;
  for (int i = 0; i < slots; ++i) free_at.push(0.0);
  double last_end = 0.0;
  for (const double d : durations) {
    const double start = free_at.top();
    free_at.pop();
    const double end = start + d;
    last_end = std::max(last_end, end);
    free_at.push(end);
  }
  return last_end;
}

// Deterministic uniform in [0, 1) from the engine's raw 64-bit output.
double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double normal01(std::mt19937_64& rng) {
  double u1 = uniform01(rng);
  while (u1 <= 0.0) u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

}  // namespace

int max_concurrency(const RequestTrace& trace) {
  std::vector<std::pair<double, int>> edges;
  edges.reserve(trace.events.size() * 2);
  for (const auto& e : trace.events) {
    edges.emplace_back(e.start_time, +1);
    edges.emplace_back(e.end_time, -1);
  }
  // Ends sort before starts at the same instant: [start, end) intervals.
  std::sort(edges.begin(), edges.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first < b.first;
    return a.second < b.second;
  });
  int current = 0;
  int peak = 0;
  for (const auto& [time, delta] : edges) {
    current += delta;
    peak = std::max(peak, current);
  }
  return peak;
}

void validate(const RequestTrace& trace) {
  if (trace.events.empty())
    throw std::invalid_argument("trace has no events");
  if (trace.concurrency_limit < 1)
    throw std::invalid_argument("concurrency_limit must be >= 1");
  std::set<std::uint64_t> orders;
  for (const auto& e : trace.events) {
    if (e.end_time < e.start_time)
      throw std::invalid_argument("event " + e.request_id +
                                  " ends before it starts");
    if (!orders.insert(e.submit_order).second)
      throw std::invalid_argument("duplicate submit_order " +
                                  std::to_string(e.submit_order));
  }
  if (const int peak = max_concurrency(trace); peak > trace.concurrency_limit)
    throw std::invalid_argument(
        "trace exceeds concurrency limit: peak " + std::to_string(peak) +
        " > " + std::to_string(trace.concurrency_limit));
}

double makespan(const RequestTrace& trace) {
  if (trace.events.empty())
    throw std::invalid_argument("makespan: trace has no events");
  double first = trace.events.front().start_time;
  double last = trace.events.front().end_time;
  for (const auto& e : trace.events) {
    first = std::min(first, e.start_time);
    last = std::max(last, e.end_time);
  }
  return last - first;
}

double counterfactual_makespan(const RequestTrace& trace,
                               CounterfactualMode mode) {
  const bool any_degenerate =
      std::any_of(trace.events.begin(), trace.events.end(),
                  [](const RequestEvent& e) { return e.degenerate; });
  if (!any_degenerate) return makespan(trace);  // nothing replaced

  const double mu = mean_healthy_duration(trace);
  if (mode == CounterfactualMode::kFixedStart) {
    double first = trace.events.front().start_time;
    double last = 0.0;
    for (const auto& e : trace.events) first = std::min(first, e.start_time);
    for (const auto& e : trace.events) {
      const double end =
          e.degenerate ? e.start_time + mu : e.end_time;
      last = std::max(last, end);
    }
    return last - first;
  }

  std::vector<double> durations;
  durations.reserve(trace.events.size());
  for (const auto* e : by_submit_order(trace))
    durations.push_back(e->degenerate ? mu : e->end_time - e->start_time);
  return replay_makespan(durations, trace.concurrency_limit);
}

std::vector<Interval> degeneration_windows(const RequestTrace& trace,
                                           double percentile) {
  const double q = healthy_percentile(trace, percentile);
  std::vector<Interval> windows;
  for (const auto& e : trace.events) {
    if (!e.degenerate) continue;
    const double begin = e.start_time + q;
    if (begin < e.end_time) windows.push_back({begin, e.end_time});
  }
  std::sort(windows.begin(), windows.end(),
            [](const Interval& a, const Interval& b) {
              return a.begin < b.begin;
            });
  std::vector<Interval> merged;
  for (const auto& w : windows) {
    if (!merged.empty() && w.begin <= merged.back().end)
      merged.back().end = std::max(merged.back().end, w.end);
    else
      merged.push_back(w);
  }
  return merged;
}

SlowdownReport slowdown_report(const RequestTrace& trace, double percentile,
                               OverlapMode mode) {
  const std::vector<Interval> windows =
      degeneration_windows(trace, percentile);
  SlowdownReport report;
  double sum_during = 0.0;
  double sum_outside = 0.0;
  for (const auto& e : trace.events) {
    if (e.degenerate) continue;
    const double duration = e.end_time - e.start_time;
    double overlap = 0.0;
    for (const auto& w : windows) {
      const double lo = std::max(e.start_time, w.begin);
      const double hi = std::min(e.end_time, w.end);
      if (hi > lo) overlap += hi - lo;
    }
    const bool during = mode == OverlapMode::kAny
                            ? overlap > 0.0
                            : overlap >= duration / 2.0 && duration > 0.0;
    if (during) {
      sum_during += duration;
      ++report.n_during;
    } else {
      sum_outside += duration;
      ++report.n_outside;
    }
  }
  if (report.n_during > 0)
    report.mean_during_degeneration =
        sum_during / static_cast<double>(report.n_during);
  if (report.n_outside > 0)
    report.mean_outside = sum_outside / static_cast<double>(report.n_outside);
  if (report.mean_during_degeneration && report.mean_outside &&
      *report.mean_outside > 0.0)
    report.relative_increase =
        100.0 * (*report.mean_during_degeneration - *report.mean_outside) /
        *report.mean_outside;
  return report;
}

RequestTrace generate_trace(const GeneratorConfig& cfg, std::uint64_t seed) {
  if (cfg.request_count == 0)
    throw std::invalid_argument("generate_trace: request_count must be >= 1");
  if (cfg.concurrency_limit < 1)
    throw std::invalid_argument("generate_trace: concurrency_limit >= 1");
  if (cfg.degenerate_fraction < 0.0 || cfg.degenerate_fraction > 1.0)
    throw std::invalid_argument("generate_trace: fraction in [0, 1]");
  if (!(cfg.degenerate_multiplier > 0.0) || !(cfg.slowdown_multiplier > 0.0))
    throw std::invalid_argument("generate_trace: multipliers must be > 0");

  std::mt19937_64 rng(seed);
  const std::size_t n = cfg.request_count;
  std::vector<bool> degenerate(n);
  std::vector<double> base(n);
  for (std::size_t i = 0; i < n; ++i) {
    degenerate[i] = uniform01(rng) < cfg.degenerate_fraction;
    base[i] = std::exp(cfg.lognormal_mu + cfg.lognormal_sigma * normal01(rng));
  }

  // Window threshold from the healthy draws themselves (nearest rank), so
  // generated slowdowns line up with what the analyzer will compute.
  std::vector<double> healthy;
  for (std::size_t i = 0; i < n; ++i)
    if (!degenerate[i]) healthy.push_back(base[i]);
  double q = 0.0;
  if (!healthy.empty()) {
    std::sort(healthy.begin(), healthy.end());
    const std::size_t rank = static_cast<std::size_t>(std::ceil(
        cfg.window_percentile * static_cast<double>(healthy.size())));
    q = healthy[std::min(std::max<std::size_t>(rank, 1), healthy.size()) - 1];
  }

  RequestTrace trace;
  trace.concurrency_limit = cfg.concurrency_limit;
  std::priority_queue<double, std::vector<double>, std::greater<>> free_at;
  for (int i = 0; i < cfg.concurrency_limit; ++i) free_at.push(0.0);
  std::vector<Interval> known_windows;  // from already-admitted degenerates

  for (std::size_t i = 0; i < n; ++i) {
    const double start = free_at.top();
    free_at.pop();
    double duration =
        degenerate[i] ? base[i] * cfg.degenerate_multiplier : base[i];
    if (!degenerate[i] && cfg.slowdown_multiplier != 1.0) {
      for (const auto& w : known_windows) {
        if (start < w.end && w.begin < start + duration) {
          duration = base[i] * cfg.slowdown_multiplier;
          break;
        }
      }
    }
    const double end = start + duration;
    if (degenerate[i] && start + q < end)
      known_windows.push_back({start + q, end});
    char id[32];
    std::snprintf(id, sizeof(id), "req-%05zu", i);
    trace.events.push_back({id, i, start, end, degenerate[i]});
    free_at.push(end);
  }
  return trace;
}

RequestTrace read_trace_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open trace file " + path);
  RequestTrace trace;
  std::string line;
  bool saw_header = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json doc = json::parse(line);
    if (!saw_header) {
      saw_header = true;
      if (doc.contains("concurrency_limit")) {
        trace.concurrency_limit = doc["concurrency_limit"].get<int>();
        continue;
      }
      // Headerless files fall back to the default limit.
    }
    RequestEvent e;
    e.request_id = doc.at("request_id").get<std::string>();
    e.submit_order = doc.at("submit_order").get<std::uint64_t>();
    e.start_time = doc.at("start_time").get<double>();
    e.end_time = doc.at("end_time").get<double>();
    e.degenerate = doc.value("degenerate", false);
    trace.events.push_back(std::move(e));
  }
  validate(trace);
  return trace;
}

void write_trace_jsonl(const RequestTrace& trace, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write trace file " + path);
  out << ordered_json{{"concurrency_limit", trace.concurrency_limit}}.dump()
      << '\n';
  for (const auto& e : trace.events) {
    ordered_json doc;
    doc["request_id"] = e.request_id;
    doc["submit_order"] = e.submit_order;
    doc["start_time"] = e.start_time;
    doc["end_time"] = e.end_time;
    doc["degenerate"] = e.degenerate;
    out << doc.dump() << '\n';
  }
}

}  // namespace dharmaocr::tracelab
