#include <benchmark/benchmark.h>

#include "hetflow/cost_model.hpp"
#include "hetflow/dse.hpp"
#include "hetflow/emitter.hpp"
#include "hetflow/model_io.hpp"
#include "hetflow/passes.hpp"
#include "hetflow/simulator.hpp"

using namespace hetflow;

namespace {

const DataflowGraph& model() {
  static const auto g = load_model_file(HETFLOW_DATA_DIR "/models/reference.model.json");
  return g;
}

const TargetDescription& target() {
  static const auto t = load_target_file(HETFLOW_DATA_DIR "/targets/vck190.target.json");
  return t;
}

void BM_Pipeline(benchmark::State& state) {
  const char* names[] = {"design1", "design2", "design3"};
  auto p = PassPipeline::named(names[state.range(0)]);
  for (auto _ : state) benchmark::DoNotOptimize(run_pipeline(model(), p, target()));
  state.SetLabel(p.name);
}
BENCHMARK(BM_Pipeline)->DenseRange(0, 2);

void BM_Search(benchmark::State& state) {
  SearchSpec spec;
  spec.throughput_goal_eps = 2e6;
  spec.p_max = static_cast<int>(state.range(0));
  spec.concurrent = state.range(1) != 0;
  for (auto _ : state) benchmark::DoNotOptimize(find_min_parallelization(model(), target(), spec, OptMode::Flattened));
}
BENCHMARK(BM_Search)->Args({8, 0})->Args({8, 1})->Args({16, 1})->Unit(benchmark::kMillisecond);

void BM_Simulate(benchmark::State& state) {
  auto d = run_pipeline(model(), PassPipeline::named("design3"), target());
  auto events = generate_events(state.range(0), d.performance->throughput_eps * 2, 1);
  for (auto _ : state) benchmark::DoNotOptimize(simulate(d, events, target()));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Simulate)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_Emit(benchmark::State& state) {
  auto d = run_pipeline(model(), PassPipeline::named("design3"), target());
  for (auto _ : state) benchmark::DoNotOptimize(generate_sources(d, target()));
}
BENCHMARK(BM_Emit);

}  // namespace

BENCHMARK_MAIN();
