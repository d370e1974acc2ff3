#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace dharmaocr::tracelab {

struct RequestEvent {
  std::string request_id;
  std::uint64_t submit_order = 0;
  double start_time = 0.0;  // seconds relative to trace start
  double end_time = 0.0;
  bool degenerate = false;
};

// A recorded semaphore-bounded inference run: at any instant the number of
// in-flight events must not exceed concurrency_limit.
struct RequestTrace {
  std::vector<RequestEvent> events;
  int concurrency_limit = 30;
};

// Highest number of simultaneously in-flight events ([start, end) intervals).
int max_concurrency(const RequestTrace& trace);

// Throws std::invalid_argument when the trace breaks its invariants
// (empty, end < start, duplicate submit_order, concurrency exceeded).
void validate(const RequestTrace& trace);

// max(end_time) - min(start_time). Throws on an empty trace.
double makespan(const RequestTrace& trace);

enum class CounterfactualMode {
  kReplay,      // replay through the bounded-concurrency scheduler
  kFixedStart,  // keep original start times, swap degenerate durations
};

// Makespan after degenerate durations are replaced by the mean duration of
// the non-degenerate events. Replay admits requests in submit_order as slots
// free (ties broken by submit_order); a trace with no degenerate events
// returns the observed makespan unchanged. Throws when every event is
// degenerate or the trace is empty.
double counterfactual_makespan(const RequestTrace& trace,
                               CounterfactualMode mode =
                                   CounterfactualMode::kReplay);

struct Interval {
  double begin = 0.0;
  double end = 0.0;
};

// Degeneration-in-progress windows: for each degenerate event, the span of
// its run beyond the given percentile (nearest-rank) of non-degenerate
// durations. Overlapping windows are merged; output is sorted and disjoint.
std::vector<Interval> degeneration_windows(const RequestTrace& trace,
                                           double percentile = 0.99);

enum class OverlapMode {
  kAny,       // any nonzero interval overlap counts as "during"
  kMajority,  // at least half the event's duration inside windows
};

struct SlowdownReport {
  std::optional<double> mean_during_degeneration;  // seconds
  std::optional<double> mean_outside;
  std::optional<double> relative_increase;  // percent, needs both classes
  std::size_t n_during = 0;
  std::size_t n_outside = 0;
};

// Duration statistics of non-degenerate events, split by whether they ran
// while a degeneration window was open.
SlowdownReport slowdown_report(const RequestTrace& trace,
                               double percentile = 0.99,
                               OverlapMode mode = OverlapMode::kAny);

struct GeneratorConfig {
  std::size_t request_count = 0;
  int concurrency_limit = 30;
  // Healthy durations are log-normal: exp(mu + sigma * N(0,1)).
  double lognormal_mu = 1.0;
  double lognormal_sigma = 0.25;
  double degenerate_fraction = 0.0;
  double degenerate_multiplier = 10.0;
  // Applied to healthy requests admitted while a degeneration window is
  // open; 1.0 disables the effect.
  double slowdown_multiplier = 1.0;
  double window_percentile = 0.99;
};

// Deterministic synthetic trace for a given (config, seed); the randomness
// is hand-rolled on top of mt19937_64 so results do not depend on the
// standard library's distribution implementations.
RequestTrace generate_trace(const GeneratorConfig& cfg, std::uint64_t seed);

// JSONL trace file: a header line {"concurrency_limit": N} followed by one
// RequestEvent object per line.
RequestTrace read_trace_jsonl(const std::string& path);
void write_trace_jsonl(const RequestTrace& trace, const std::string& path);

}  // namespace dharmaocr::tracelab
