#include "hetflow/simulator.hpp"

#include <algorithm>
#include <deque>
#include <ostream>
#include <queue>
#include <random>

#include <fmt/format.h>
#include <fmt/ranges.h>
#include <nlohmann/json.hpp>

#include "hetflow/cost_model.hpp"

namespace hetflow {

std::string_view to_string(WorkloadMode m) {
  switch (m) {
    case WorkloadMode::Uniform: return "uniform";
    case WorkloadMode::Random: return "random";
    case WorkloadMode::Poisson: return "poisson";
  }
  return "?";
}

WorkloadMode parse_workload_mode(std::string_view s) {
  if (s == "uniform") return WorkloadMode::Uniform;
  if (s == "random") return WorkloadMode::Random;
  if (s == "poisson") return WorkloadMode::Poisson;
  throw Error("invalid-workload", fmt::format("unknown workload mode '{}'", s));
}

std::vector<EventRecord> generate_events(std::int64_t n, double rate_eps, std::uint64_t seed, WorkloadMode mode,
                                         std::int64_t max_inputs) {
  if (n < 1) throw Error("invalid-workload", fmt::format("event count must be >= 1, got {}", n));
  if (!(rate_eps > 0)) throw Error("invalid-workload", fmt::format("rate must be positive, got {}", rate_eps));
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::int64_t> inputs(0, max_inputs);
  std::exponential_distribution<double> gap(rate_eps);
  double spacing_ps = 1e12 / rate_eps;

  std::vector<EventRecord> events;
  events.reserve(static_cast<std::size_t>(n));
  double t = 0;
  for (std::int64_t i = 0; i < n; ++i) {
    EventRecord e;
    e.seq = i;
    e.n_inputs = mode == WorkloadMode::Uniform ? max_inputs : inputs(rng);
    if (mode == WorkloadMode::Poisson) {
      if (i > 0) t += gap(rng) * 1e12;
      e.arrival_ps = std::llround(t);
    } else {
      e.arrival_ps = std::llround(double(i) * spacing_ps);
    }
    events.push_back(e);
  }
  return events;
}

namespace {

struct SimEdge {
  std::size_t from = 0, to = 0;
  std::int64_t delay_ps = 0;
  int credits = 0;
  std::deque<std::int64_t> queue;  // delivered, not yet consumed
};

struct SimStage {
  NodeId id;
  std::int64_t latency_ps = 0, ii_ps = 0;
  std::vector<std::size_t> in, out;
  std::int64_t next_seq = 0;
  std::int64_t last_start = -1;
  std::int64_t wake_at = -1;
  std::deque<std::pair<std::int64_t, std::int64_t>> staging;  // (seq, enter)
  bool blocked = false;
};

enum class Kind { Wake, Finish, Arrive };

struct Pending {
  std::int64_t time;
  std::uint64_t order;
  Kind kind;
  std::size_t target;  // stage or edge index
  std::int64_t seq;
  std::int64_t enter;
  bool operator>(const Pending& o) const { return std::tie(time, order) > std::tie(o.time, o.order); }
};

class Engine {
 public:
  Engine(const DesignPoint& d, const std::vector<EventRecord>& events, const TargetDescription& target,
         const SimOptions& opt)
      : events_(events) {
    const auto& g = d.graph;
    const auto& perf = *d.performance;
    std::map<NodeId, std::size_t> index;
    for (const auto& id : topological_order(g)) {
      auto it = perf.per_kernel.find(id);
      if (it == perf.per_kernel.end())
        throw Error("not-evaluated", fmt::format("node '{}' has no timing; lower the design first", id));
      index[id] = stages_.size();
      SimStage s;
      s.id = id;
      s.latency_ps = it->second.latency_ps;
      s.ii_ps = std::max<std::int64_t>(it->second.ii_ps, 1);
      stages_.push_back(std::move(s));
    }
    for (const auto& e : g.edges()) {
      SimEdge se;
      se.from = index.at(e.from.node);
      se.to = index.at(e.to.node);
      se.delay_ps = transfer_delay_ps(g, e, target);
      se.credits = opt.buffer_depth;
      stages_[se.from].out.push_back(edges_.size());
      stages_[se.to].in.push_back(edges_.size());
      edges_.push_back(std::move(se));
    }
    source_ = index.at(*g.source());
    sink_ = index.at(*g.sink());
    load_start_.assign(events.size(), 0);
    finish_.assign(events.size(), 0);
  }

  std::pair<SimTrace, SimResult> run() {
    for (const auto& e : events_) push(e.arrival_ps, Kind::Wake, source_, -1, 0);
    while (!pq_.empty()) {
      auto p = pq_.top();
      pq_.pop();
      now_ = p.time;
      switch (p.kind) {
        case Kind::Wake: try_start(p.target); break;
        case Kind::Finish:
          stages_[p.target].staging.emplace_back(p.seq, p.enter);
          try_flush(p.target);
          break;
        case Kind::Arrive:
          edges_[p.target].queue.push_back(p.seq);
          try_start(edges_[p.target].to);
          break;
      }
    }
    if (trace_.completion_order.size() != events_.size()) throw Error("deadlock", diagnose());
    return {std::move(trace_), summarize()};
  }

 private:
  void push(std::int64_t t, Kind k, std::size_t target, std::int64_t seq, std::int64_t enter) {
    pq_.push({t, counter_++, k, target, seq, enter});
  }

  void try_start(std::size_t si) {
    auto& s = stages_[si];
    auto n = static_cast<std::int64_t>(events_.size());
    if (s.next_seq >= n || !s.staging.empty()) return;
    if (s.last_start >= 0 && now_ < s.last_start + s.ii_ps) {
      auto at = s.last_start + s.ii_ps;
      if (s.wake_at != at) {
        s.wake_at = at;
        push(at, Kind::Wake, si, -1, 0);
      }
      return;
    }
    if (si == source_) {
      if (events_[static_cast<std::size_t>(s.next_seq)].arrival_ps > now_) return;
    } else {
      for (auto ei : s.in)
        if (edges_[ei].queue.empty() || edges_[ei].queue.front() != s.next_seq) return;
    }
    auto seq = s.next_seq++;
    s.last_start = now_;
    if (si == source_) load_start_[static_cast<std::size_t>(seq)] = now_;
    push(now_ + s.latency_ps, Kind::Finish, si, seq, now_);
    for (auto ei : s.in) {
      edges_[ei].queue.pop_front();
      ++edges_[ei].credits;
    }
    for (auto ei : stages_[si].in) try_flush(edges_[ei].from);
  }

  void try_flush(std::size_t si) {
    auto& s = stages_[si];
    while (!s.staging.empty()) {
      for (auto ei : s.out) {
        if (edges_[ei].credits > 0) continue;
        if (!s.blocked) ++stalls_;
        s.blocked = true;
        return;
      }
      s.blocked = false;
      auto [seq, enter] = s.staging.front();
      s.staging.pop_front();
      trace_.records.push_back({seq, s.id, enter, now_});
      for (auto ei : s.out) {
        --edges_[ei].credits;
        push(now_ + edges_[ei].delay_ps, Kind::Arrive, ei, seq, 0);
      }
      if (si == sink_) {
        trace_.completion_order.push_back(seq);
        finish_[static_cast<std::size_t>(seq)] = now_;
      }
    }
    try_start(si);
  }

  std::string diagnose() const {
    std::vector<std::string> stuck;
    for (const auto& s : stages_) {
      if (s.next_seq >= static_cast<std::int64_t>(events_.size()) && s.staging.empty()) continue;
      std::vector<int> credits;
      for (auto ei : s.out) credits.push_back(edges_[ei].credits);
      stuck.push_back(fmt::format("{} (next seq {}, staged {}, out credits [{}])", s.id, s.next_seq,
                                  s.staging.size(), fmt::join(credits, ",")));
    }
    return fmt::format("{} of {} events completed; stalled stages: {}", trace_.completion_order.size(),
                       events_.size(), fmt::join(stuck, "; "));
  }

  SimResult summarize() const {
    SimResult r;
    r.events = static_cast<std::int64_t>(events_.size());
    double lat_sum = 0, soj_sum = 0;
    std::int64_t lat_max = 0;
    for (std::size_t i = 0; i < events_.size(); ++i) {
      auto lat = finish_[i] - load_start_[i];
      lat_sum += double(lat);
      lat_max = std::max(lat_max, lat);
      soj_sum += double(finish_[i] - events_[i].arrival_ps);
    }
    auto n = double(events_.size());
    r.mean_latency_s = lat_sum / n * 1e-12;
    r.max_latency_s = double(lat_max) * 1e-12;
    r.mean_sojourn_s = soj_sum / n * 1e-12;
    if (events_.size() > 1) {
      auto first = finish_[static_cast<std::size_t>(trace_.completion_order.front())];
      auto last = finish_[static_cast<std::size_t>(trace_.completion_order.back())];
      if (last > first) r.throughput_eps = (n - 1) / (double(last - first) * 1e-12);
    }
    r.in_order = check_in_order(trace_);
    r.backpressure_stalls = stalls_;
    return r;
  }

  const std::vector<EventRecord>& events_;
  std::vector<SimStage> stages_;
  std::vector<SimEdge> edges_;
  std::size_t source_ = 0, sink_ = 0;
  std::priority_queue<Pending, std::vector<Pending>, std::greater<>> pq_;
  std::uint64_t counter_ = 0;
  std::int64_t now_ = 0;
  std::int64_t stalls_ = 0;
  std::vector<std::int64_t> load_start_, finish_;
  SimTrace trace_;
};

}  // namespace

std::pair<SimTrace, SimResult> simulate(const DesignPoint& d, const std::vector<EventRecord>& events,
                                        const TargetDescription& target, const SimOptions& options) {
  if (!d.performance) throw Error("not-evaluated", "design point carries no performance estimate");
  if (events.empty()) throw Error("invalid-workload", "no events to simulate");
  if (options.buffer_depth < 1) throw Error("invalid-workload", "buffer depth must be >= 1");
  for (std::size_t i = 0; i < events.size(); ++i) {
    if (events[i].seq != static_cast<std::int64_t>(i))
      throw Error("invalid-workload", fmt::format("event {} carries seq {}", i, events[i].seq));
    if (i > 0 && events[i].arrival_ps < events[i - 1].arrival_ps)
      throw Error("invalid-workload", "events are not sorted by arrival");
    if (events[i].n_inputs < 0 || events[i].n_inputs > d.graph.spatial_extent)
      throw Error("invalid-workload", fmt::format("event {} has n_inputs {}", i, events[i].n_inputs));
  }
  Engine engine(d, events, target, options);
  return engine.run();
}

bool check_in_order(const SimTrace& trace) {
  for (std::size_t i = 0; i < trace.completion_order.size(); ++i)
    if (trace.completion_order[i] != static_cast<std::int64_t>(i)) return false;
  return true;
}

void write_trace_jsonl(const SimTrace& trace, std::ostream& out) {
  for (const auto& r : trace.records) {
    nlohmann::json j{{"seq", r.seq}, {"stage", r.stage}, {"enter_ps", r.enter_ps}, {"exit_ps", r.exit_ps}};
    out << j.dump() << '\n';
  }
}

}  // namespace hetflow
