#include <doctest.h>

#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "builder.hpp"
#include "hetflow/passes.hpp"
#include "hetflow/simulator.hpp"

using namespace hetflow;
using hetflow::testing::reference_model;
using hetflow::testing::vck190;

namespace {

const DesignPoint& design(const std::string& name) {
  static std::map<std::string, DesignPoint> cache;
  auto it = cache.find(name);
  if (it == cache.end())
    it = cache.emplace(name, run_pipeline(reference_model(), PassPipeline::named(name), vck190())).first;
  return it->second;
}

std::pair<SimTrace, SimResult> run(const DesignPoint& d, std::int64_t n, double overdrive,
                                   WorkloadMode mode = WorkloadMode::Uniform, SimOptions opt = {}) {
  auto events = generate_events(n, d.performance->throughput_eps * overdrive, 7, mode);
  return simulate(d, events, vck190(), opt);
}

}  // namespace

TEST_CASE("generate_events: spacing, determinism, validation") {
  auto one = generate_events(1, 1e6, 0);
  REQUIRE(one.size() == 1);
  CHECK(one[0].arrival_ps == 0);
  CHECK(one[0].seq == 0);

  auto three = generate_events(3, 2e6, 0);
  CHECK(three[0].arrival_ps == 0);
  CHECK(three[1].arrival_ps == 500'000);
  CHECK(three[2].arrival_ps == 1'000'000);
  CHECK(three[2].arrival_time_s() == doctest::Approx(1e-6));

  for (auto mode : {WorkloadMode::Uniform, WorkloadMode::Random, WorkloadMode::Poisson}) {
    auto a = generate_events(500, 1e6, 7, mode);
    CHECK(a == generate_events(500, 1e6, 7, mode));
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].seq == static_cast<std::int64_t>(i));
      CHECK(a[i].n_inputs >= 0);
      CHECK(a[i].n_inputs <= 128);
      if (i) CHECK(a[i].arrival_ps >= a[i - 1].arrival_ps);
    }
  }
  CHECK(generate_events(50, 1e6, 1, WorkloadMode::Random) != generate_events(50, 1e6, 2, WorkloadMode::Random));
  CHECK_THROWS_AS(generate_events(0, 1e6, 0), Error);
  CHECK_THROWS_AS(generate_events(1, 0, 0), Error);
  CHECK(parse_workload_mode("poisson") == WorkloadMode::Poisson);
}

TEST_CASE("solo event latency equals the analytic latency exactly") {
  for (const char* name : {"design1", "design2", "design3"}) {
    const auto& d = design(name);
    auto [trace, result] = run(d, 1, 1.0);
    CHECK(result.max_latency_s == doctest::Approx(d.performance->latency_s).epsilon(1e-12));
    std::int64_t first = INT64_MAX, last = 0;
    for (const auto& r : trace.records) {
      first = std::min(first, r.enter_ps);
      last = std::max(last, r.exit_ps);
    }
    CHECK(last - first == d.performance->latency_ps);
  }
}

TEST_CASE("saturated run matches the min-II bound within 1 percent") {
  const auto& d = design("design3");
  auto [trace, result] = run(d, 10000, 10.0);
  CHECK(result.events == 10000);
  CHECK(result.in_order);
  CHECK(result.throughput_eps == doctest::Approx(d.performance->throughput_eps).epsilon(0.01));
  CHECK(result.throughput_eps <= d.performance->throughput_eps * (1 + 1e-9));
  CHECK(result.backpressure_stalls > 0);
}

TEST_CASE("rate-matched drive reproduces the design 3 operating point") {
  const auto& d = design("design3");
  auto [trace, result] = run(d, 5000, 1.0);
  CHECK(result.throughput_eps == doctest::Approx(2.94e6).epsilon(0.02));
  CHECK(result.mean_latency_s == doctest::Approx(7.15e-6).epsilon(0.02));
  CHECK(result.mean_latency_s >= d.performance->latency_s * (1 - 1e-12));
}

TEST_CASE("conservation, stage ordering and enter <= exit") {
  const auto& d = design("design2");
  auto [trace, result] = run(d, 300, 3.0, WorkloadMode::Poisson);
  CHECK(trace.completion_order.size() == 300);
  CHECK(check_in_order(trace));
  std::map<NodeId, std::size_t> per_stage;
  std::map<std::pair<std::int64_t, NodeId>, StageRecord> by_key;
  for (const auto& r : trace.records) {
    CHECK(r.enter_ps <= r.exit_ps);
    ++per_stage[r.stage];
    by_key[{r.seq, r.stage}] = r;
  }
  CHECK(per_stage.size() == d.graph.nodes().size());
  for (const auto& [stage, n] : per_stage) CHECK(n == 300);
  for (std::int64_t seq = 0; seq < 300; seq += 37)
    for (const auto& e : d.graph.edges())
      CHECK(by_key.at({seq, e.to.node}).enter_ps >= by_key.at({seq, e.from.node}).exit_ps);
}

TEST_CASE("runs are bit-identical") {
  const auto& d = design("design3");
  auto a = run(d, 2000, 4.0, WorkloadMode::Random);
  auto b = run(d, 2000, 4.0, WorkloadMode::Random);
  CHECK(a.first == b.first);
  CHECK(a.second.throughput_eps == b.second.throughput_eps);
  std::ostringstream sa, sb;
  write_trace_jsonl(a.first, sa);
  write_trace_jsonl(b.first, sb);
  CHECK(sa.str() == sb.str());
}

TEST_CASE("zero-padded events take dense time") {
  const auto& d = design("design3");
  auto full = run(d, 400, 2.0, WorkloadMode::Uniform);
  auto sparse = run(d, 400, 2.0, WorkloadMode::Random);
  CHECK(full.first == sparse.first);
}

TEST_CASE("shallow buffers under overload stall but keep order") {
  SimOptions opt;
  opt.buffer_depth = 1;
  const auto& d = design("design1");
  auto [trace, result] = run(d, 1000, 20.0, WorkloadMode::Uniform, opt);
  CHECK(result.backpressure_stalls > 0);
  CHECK(result.in_order);
  CHECK(result.throughput_eps <= d.performance->throughput_eps * (1 + 1e-9));
}

TEST_CASE("check_in_order on a hand-built trace") {
  SimTrace t;
  t.completion_order = {0, 1, 2, 3, 5, 4};
  CHECK_FALSE(check_in_order(t));
  t.completion_order = {0, 1, 2, 3, 4, 5};
  CHECK(check_in_order(t));
}

TEST_CASE("a stage that can never start is reported as a deadlock") {
  auto d = design("design1");
  OperatorNode ghost = d.graph.node("C");
  ghost.id = "ghost";
  ghost.inputs.clear();
  d.graph.add_node(ghost);
  auto cat_inputs = d.graph.in_edges("B_cat").size();
  d.graph.add_edge({"ghost", 0}, {"B_cat", static_cast<int>(cat_inputs)});
  d.performance->per_kernel["ghost"] = d.performance->per_kernel.at("C");
  try {
    simulate(d, generate_events(10, 1e6, 0), vck190());
    FAIL("expected deadlock");
  } catch (const Error& e) {
    CHECK(e.code() == "deadlock");
    CHECK(std::string(e.what()).find("B_cat") != std::string::npos);
  }
}

TEST_CASE("trace export is one JSON record per line") {
  auto [trace, result] = run(design("design1"), 3, 1.0);
  std::ostringstream os;
  write_trace_jsonl(trace, os);
  std::istringstream is(os.str());
  std::string line;
  std::size_t n = 0;
  while (std::getline(is, line)) {
    auto j = nlohmann::json::parse(line);
    CHECK(j.size() == 4);
    CHECK(j["enter_ps"].get<std::int64_t>() <= j["exit_ps"].get<std::int64_t>());
    ++n;
  }
  CHECK(n == trace.records.size());
}

TEST_CASE("simulate rejects unevaluated designs and malformed workloads") {
  DesignPoint bare;
  CHECK_THROWS_AS(simulate(bare, generate_events(1, 1e6, 0), vck190()), Error);
  auto events = generate_events(3, 1e6, 0);
  std::swap(events[0], events[1]);
  CHECK_THROWS_AS(simulate(design("design1"), events, vck190()), Error);
}
