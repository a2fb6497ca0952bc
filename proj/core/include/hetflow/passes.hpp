#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hetflow/design_point.hpp"
#include "hetflow/graph.hpp"
#include "hetflow/target.hpp"

namespace hetflow {

enum class Stage {
  FuseLinearRelu,
  MergeParallelDense,
  Partition,
  Map,
  Legalize,
  Spatial,
  KernelOpt,
};

std::string_view to_string(Stage s);
std::optional<Stage> parse_stage(std::string_view name);

/// Ordered pass list plus the parameters the stages consume.
struct PassPipeline {
  std::string name = "custom";
  std::vector<Stage> stages;
  int p_fpga = 1;
  int p_aie = 1;
  OptMode mode = OptMode::Pipelined;

  /// design1: partition, map, legalize.
  /// design2: design1 preceded by both fusions, followed by spatial
  ///          parallelization with P = (2, 4).
  /// design3: design2 followed by flattened kernel optimization.
  /// Throws Error{"unknown-pipeline"} for any other name.
  static PassPipeline named(std::string_view name);

  bool contains(Stage s) const;
};

/// Pinned kernel template for a (kind, platform) pair, if one exists.
/// The precision is carried by the node and does not select a different
/// template.
std::optional<std::string> template_for(OperatorKind kind, Platform platform, int precision_bits);

DataflowGraph fuse_linear_relu(const DataflowGraph& g);
DataflowGraph merge_parallel_dense(const DataflowGraph& g);

/// Greedy AIE-first partitioning. Regular nodes go to the AIE unless they
/// form the input or output layer (adjacent to the graph source or sink,
/// together with a directly fused activation); irregular and io nodes go to
/// the FPGA. Maximal same-platform runs in topological order become segments.
PartitionPlan partition(const DataflowGraph& g);

/// Segment list reconstructed from the per-node `segment` annotations.
PartitionPlan plan_from_annotations(const DataflowGraph& g, const PartitionPlan& previous);

/// Binds each node to a template, lowers Input/Output to Load/Store and
/// applies segment precision. Throws Error{"no-template"} or
/// Error{"unassigned-node"}.
DataflowGraph map_operators(const DataflowGraph& g, const PartitionPlan& plan);

/// Inserts a Retile on every edge whose producer layout differs from the
/// layout the consumer expects. Idempotent.
DataflowGraph legalize_layouts(const DataflowGraph& g);

/// Edges whose layouts still disagree.
std::vector<Edge> unlegalized_edges(const DataflowGraph& g);

/// Replicates each separable segment chain P times over disjoint spatial
/// slices with Scatter/Gather adapters on the FPGA side. Throws
/// Error{"non-separable"}, Error{"indivisible"} or Error{"invalid-parallelism"}.
DataflowGraph apply_spatial_parallelization(const DataflowGraph& g, const PartitionPlan& plan,
                                            int p_fpga, int p_aie);

/// Sets the optimization mode of every AIE kernel. Structure, partition and
/// P factors are unchanged; stale estimates are dropped.
DesignPoint apply_kernel_optimization(DesignPoint d, OptMode mode);

/// Empty iff `after` preserves the external interface of `before`:
/// same source/sink shapes, valid and acyclic, same element count at the sink.
Diagnostics verify_pass_semantics(const DataflowGraph& before, const DataflowGraph& after);

struct StageSnapshot {
  std::string stage;
  DataflowGraph graph;
};

/// Runs every stage, verifying semantics after each, and evaluates the
/// resulting design point against the target. `trace`, when given, receives
/// the graph after every stage (the first entry is the input).
DesignPoint run_pipeline(const DataflowGraph& g, const PassPipeline& pipeline,
                         const TargetDescription& target,
                         std::vector<StageSnapshot>* trace = nullptr);

}  // namespace hetflow
