#include <algorithm>
#include <array>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "hetflow/cost_model.hpp"
#include "hetflow/passes.hpp"

namespace hetflow {

namespace {

constexpr std::array<std::pair<Stage, std::string_view>, 7> kStageNames{{
    {Stage::FuseLinearRelu, "fuse_linear_relu"},
    {Stage::MergeParallelDense, "merge_parallel_dense"},
    {Stage::Partition, "partition"},
    {Stage::Map, "map"},
    {Stage::Legalize, "legalize"},
    {Stage::Spatial, "spatial"},
    {Stage::KernelOpt, "kernel_opt"},
}};

}  // namespace

std::string_view to_string(Stage s) {
  for (const auto& [stage, name] : kStageNames)
    if (stage == s) return name;
  return "?";
}

std::optional<Stage> parse_stage(std::string_view name) {
  for (const auto& [stage, n] : kStageNames)
    if (n == name) return stage;
  return std::nullopt;
}

PassPipeline PassPipeline::named(std::string_view name) {
  PassPipeline p;
  p.name = std::string(name);
  const std::vector<Stage> base{Stage::Partition, Stage::Map, Stage::Legalize};
  if (name == "design1") {
    p.stages = base;
    return p;
  }
  if (name == "design2" || name == "design3") {
    p.stages = {Stage::FuseLinearRelu, Stage::MergeParallelDense};
    p.stages.insert(p.stages.end(), base.begin(), base.end());
    p.stages.push_back(Stage::Spatial);
    p.p_fpga = 2;
    p.p_aie = 4;
    if (name == "design3") {
      p.stages.push_back(Stage::KernelOpt);
      p.mode = OptMode::Flattened;
    }
    return p;
  }
  throw Error("unknown-pipeline", fmt::format("unknown pipeline '{}' (expected design1, design2 or design3)", name));
}

bool PassPipeline::contains(Stage s) const { return std::find(stages.begin(), stages.end(), s) != stages.end(); }

DesignPoint apply_kernel_optimization(DesignPoint d, OptMode mode) {
  d.mode = mode;
  for (const auto& [id, n] : d.graph.nodes()) {
    auto& m = d.graph.node(id);
    if (m.binding && m.binding->platform == Platform::AIE) m.mode = mode;
  }
  d.resources.reset();
  d.performance.reset();
  return d;
}

Diagnostics verify_pass_semantics(const DataflowGraph& before, const DataflowGraph& after) {
  Diagnostics out;
  for (auto& d : validate_graph(after))
    if (d.severity == Severity::Error) out.push_back(std::move(d));
  if (!out.empty()) return out;

  auto bs = before.source(), as = after.source();
  auto bk = before.sink(), ak = after.sink();
  if (!bs || !as || !bk || !ak) {
    out.push_back({Severity::Error, "interface-shape", after.name, "source or sink missing after pass"});
    return out;
  }
  const auto& src_before = before.node(*bs).outputs.front().dims;
  const auto& src_after = after.node(*as).outputs.front().dims;
  if (src_before != src_after)
    out.push_back({Severity::Error, "interface-shape", *as,
                   fmt::format("source shape changed from [{}] to [{}]", fmt::join(src_before, ","),
                               fmt::join(src_after, ","))});
  const auto& sink_before = before.node(*bk).inputs;
  const auto& sink_after = after.node(*ak).inputs;
  if (sink_before.empty() || sink_after.empty()) {
    out.push_back({Severity::Error, "interface-shape", *ak, "sink lost its input"});
    return out;
  }
  if (sink_before.front().dims != sink_after.front().dims)
    out.push_back({Severity::Error, "interface-shape", *ak,
                   fmt::format("sink shape changed from [{}] to [{}]", fmt::join(sink_before.front().dims, ","),
                               fmt::join(sink_after.front().dims, ","))});
  if (sink_before.front().elements() != sink_after.front().elements())
    out.push_back({Severity::Error, "element-count", *ak,
                   fmt::format("sink element count {} != {}", sink_after.front().elements(),
                               sink_before.front().elements())});
  return out;
}

DesignPoint run_pipeline(const DataflowGraph& g, const PassPipeline& pipeline, const TargetDescription& target,
                         std::vector<StageSnapshot>* trace) {
  DesignPoint d;
  d.name = pipeline.name;
  d.graph = g;
  d.p_fpga = pipeline.p_fpga;
  d.p_aie = pipeline.p_aie;
  if (trace) trace->push_back({"input", g});

  bool partitioned = false;
  for (auto stage : pipeline.stages) {
    DataflowGraph before = d.graph;
    switch (stage) {
      case Stage::FuseLinearRelu: d.graph = fuse_linear_relu(d.graph); break;
      case Stage::MergeParallelDense: d.graph = merge_parallel_dense(d.graph); break;
      case Stage::Partition:
        d.plan = partition(d.graph);
        for (const auto& [id, seg] : d.plan.assignment) d.graph.node(id).segment = seg;
        partitioned = true;
        break;
      case Stage::Map:
        if (!partitioned) throw Error("pipeline-order", "map requires a preceding partition stage");
        d.graph = map_operators(d.graph, d.plan);
        break;
      case Stage::Legalize:
        d.graph = legalize_layouts(d.graph);
        if (partitioned) d.plan = plan_from_annotations(d.graph, d.plan);
        break;
      case Stage::Spatial:
        if (!partitioned) throw Error("pipeline-order", "spatial requires a preceding partition stage");
        d.graph = apply_spatial_parallelization(d.graph, d.plan, pipeline.p_fpga, pipeline.p_aie);
        d.plan = plan_from_annotations(d.graph, d.plan);
        break;
      case Stage::KernelOpt: d = apply_kernel_optimization(std::move(d), pipeline.mode); break;
    }
    auto diags = verify_pass_semantics(before, d.graph);
    if (!diags.empty()) {
      std::vector<std::string> msgs;
      for (const auto& x : diags) msgs.push_back(to_string(x));
      throw Error("pass-semantics",
                  fmt::format("stage {} broke the graph: {}", to_string(stage), fmt::join(msgs, "; ")));
    }
    d.stages.emplace_back(to_string(stage));
    if (trace) trace->push_back({std::string(to_string(stage)), d.graph});
  }
  if (d.mapped_node_count() == d.graph.nodes().size() && !d.graph.nodes().empty()) evaluate(d, target);
  return d;
}

}  // namespace hetflow
