#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hetflow/diagnostics.hpp"
#include "hetflow/graph.hpp"

namespace hetflow {

struct Segment {
  int id = 0;
  Platform platform = Platform::FPGA;
  std::vector<NodeId> node_ids;
  int precision_bits = 8;

  bool operator==(const Segment&) const = default;
};

struct PartitionPlan {
  std::vector<Segment> segments;
  std::map<NodeId, int> assignment;

  std::size_t count(Platform p) const;
  const Segment& segment_of(const NodeId& id) const;

  bool operator==(const PartitionPlan&) const = default;
};

/// Absolute count plus integer percent of the device total (rounded half-up).
struct Utilization {
  std::int64_t abs = 0;
  int percent = 0;

  bool operator==(const Utilization&) const = default;
};

struct ResourceEstimate {
  Utilization ff;
  Utilization lut;
  Utilization dsp;
  Utilization bram;
  Utilization aie_tiles;
  Utilization aie_compute_tiles;
  Utilization aie_memory_buffers;
  std::map<NodeId, std::int64_t> program_memory_bytes;
  // Over-budget findings; reported, not fatal.
  Diagnostics diagnostics;

  bool operator==(const ResourceEstimate&) const = default;
};

struct KernelTiming {
  Platform platform = Platform::FPGA;
  std::int64_t latency_cycles = 0;
  std::int64_t ii_cycles = 0;
  std::int64_t latency_ps = 0;
  std::int64_t ii_ps = 0;
  std::int64_t program_memory_bytes = 0;

  bool operator==(const KernelTiming&) const = default;
};

struct PerformanceEstimate {
  std::map<NodeId, KernelTiming> per_kernel;
  // Critical-path latency including transfer overheads, integer picoseconds.
  std::int64_t latency_ps = 0;
  double latency_s = 0;
  double throughput_eps = 0;
  NodeId bottleneck;
  Diagnostics diagnostics;

  bool operator==(const PerformanceEstimate&) const = default;
};

/// A lowered graph together with the choices that produced it and the
/// estimates computed for it.
struct DesignPoint {
  std::string name = "custom";
  DataflowGraph graph;
  PartitionPlan plan;
  int p_fpga = 1;
  int p_aie = 1;
  OptMode mode = OptMode::Pipelined;
  std::vector<std::string> stages;
  std::optional<ResourceEstimate> resources;
  std::optional<PerformanceEstimate> performance;

  /// Nodes carrying a template binding, i.e. emitted kernels.
  std::size_t mapped_node_count() const;
  /// Mapped nodes excluding Load/Store.
  std::size_t compute_kernel_count() const;
};

}  // namespace hetflow
