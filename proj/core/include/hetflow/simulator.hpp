#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "hetflow/design_point.hpp"
#include "hetflow/target.hpp"

namespace hetflow {

struct EventRecord {
  std::int64_t seq = 0;
  std::int64_t n_inputs = 0;
  std::int64_t arrival_ps = 0;

  double arrival_time_s() const { return double(arrival_ps) * 1e-12; }
  bool operator==(const EventRecord&) const = default;
};

enum class WorkloadMode { Uniform, Random, Poisson };

std::string_view to_string(WorkloadMode m);
WorkloadMode parse_workload_mode(std::string_view s);

/// Synthetic workload. `uniform`: fixed 1/rate spacing, full n_inputs.
/// `random`: fixed spacing, seeded n_inputs in [0, max_inputs].
/// `poisson`: seeded exponential inter-arrivals and random n_inputs.
/// Throws Error{"invalid-workload"} for n < 1 or rate <= 0.
std::vector<EventRecord> generate_events(std::int64_t n, double rate_eps, std::uint64_t seed,
                                         WorkloadMode mode = WorkloadMode::Uniform,
                                         std::int64_t max_inputs = 128);

struct StageRecord {
  std::int64_t seq = 0;
  std::string stage;
  std::int64_t enter_ps = 0;
  std::int64_t exit_ps = 0;

  bool operator==(const StageRecord&) const = default;
};

struct SimTrace {
  std::vector<StageRecord> records;  // in order of stage exit
  std::vector<std::int64_t> completion_order;

  bool operator==(const SimTrace&) const = default;
};

struct SimResult {
  std::int64_t events = 0;
  double mean_latency_s = 0;  // Load start to Store finish
  double max_latency_s = 0;
  double mean_sojourn_s = 0;  // arrival to Store finish
  double throughput_eps = 0;
  bool in_order = false;
  std::int64_t backpressure_stalls = 0;
};

struct SimOptions {
  int buffer_depth = 2;  // credits per edge, in-flight transfers included
};

/// Discrete-event run of the lowered graph: every mapped node is a stage with
/// the cost model's latency and II, every edge a bounded FIFO, edges between
/// platforms add the PLIO transfer delay. Throws Error{"deadlock"} when no
/// event can make progress and Error{"not-evaluated"} without estimates.
std::pair<SimTrace, SimResult> simulate(const DesignPoint& d, const std::vector<EventRecord>& events,
                                        const TargetDescription& target, const SimOptions& options = {});

/// True iff completions are exactly 0, 1, 2, ...
bool check_in_order(const SimTrace& trace);

/// One JSON object per line: {"seq", "stage", "enter_ps", "exit_ps"}.
void write_trace_jsonl(const SimTrace& trace, std::ostream& out);

}  // namespace hetflow
