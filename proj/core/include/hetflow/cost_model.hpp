#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hetflow/design_point.hpp"
#include "hetflow/target.hpp"

namespace hetflow {

// Calibration keys read by the cost model. FPGA templates use
// "fpga.<template>.<field>" with fields lat_per_input, lat_fix, ii_per_input,
// ii_fix and the resource classes ff, lut, dsp, bram (plus optional
// <class>_per_mac for Linear/Dense). The remaining keys:
namespace cal {
inline constexpr const char* kAieFix = "aie.c_fix";
inline constexpr const char* kAiePipe = "aie.c_pipe";
inline constexpr const char* kAieFlat = "aie.c_flat";
inline constexpr const char* kAiePmBase = "aie.pm_base_bytes";
inline constexpr const char* kAiePmPerIter = "aie.pm_bytes_per_iter";
inline constexpr const char* kAieWeightsPerTile = "aie.weights_per_tile";
inline constexpr const char* kAieBuffersPerMemTile = "aie.buffers_per_memory_tile";
inline constexpr const char* kPlioTransfer = "plio.transfer_s";
}  // namespace cal

struct KernelCost {
  std::int64_t latency_cycles = 0;
  std::int64_t ii_cycles = 0;
  std::int64_t program_memory_bytes = 0;

  bool operator==(const KernelCost&) const = default;
};

/// Per-kernel cycle model.
///
/// AIE: cycles = ceil(work / lanes) + (c_pipe | c_flat) + c_fix, where work
/// is in*out*slice for Linear/Dense and the element count otherwise; the
/// kernel runs to completion per window so II equals latency. Program memory
/// is pm_base when pipelined and pm_base + pm_per_iter*ceil(work/lanes) when
/// flattened.
///
/// FPGA: latency = ceil(lat_per_input * S * k) + lat_fix with k the neighbour
/// count for GravNetConv (1 otherwise); II = ceil(ii_per_input * S) + ii_fix.
/// S is the spatial slice the node processes. Mode has no effect.
///
/// Throws Error{"no-template"} for kinds the platform cannot run.
KernelCost estimate_kernel_latency(const OperatorNode& node, Platform platform, OptMode mode,
                                   const TargetDescription& target);

/// Superlinear FPGA replication law r(P) = r1 * P * (1 + alpha * log2 P).
double fpga_scaled_resource(double r1, int p, double alpha);

/// Half-up integer percent of `total`.
int percent_of(double abs, double total);

/// Delay charged on an edge crossing between FPGA and AIE; zero otherwise.
std::int64_t transfer_delay_ps(const DataflowGraph& g, const Edge& e, const TargetDescription& target);

std::int64_t cycles_to_ps(std::int64_t cycles, double clock_hz);

/// AIE array footprint of one kernel: compute tiles hold the weights
/// (ceil(in*out / weights_per_tile) for Linear/Dense, 1 otherwise), buffer
/// tiles host its memory buffers.
struct AieTileUse {
  std::int64_t compute_tiles = 0;
  std::int64_t buffer_tiles = 0;
  std::int64_t buffers = 0;
};
AieTileUse aie_tile_use(const DataflowGraph& g, const NodeId& id, const TargetDescription& target);

/// Absolute and percent utilization. FPGA totals are the shell plus every
/// FPGA kernel, replicated groups scaled by the replication law and rounded
/// half-up per group.
ResourceEstimate estimate_resources(const DesignPoint& d, const TargetDescription& target);

/// One stream connection of an AIE kernel: `fanout` > 1 marks a multicast.
struct PortUse {
  enum class Direction { In, Out } direction = Direction::In;
  std::size_t fanout = 1;
};

/// Memory buffers a kernel needs: 2 per point-to-point connection (double
/// buffering), 4 per multicast connection.
int buffer_demand(std::span<const PortUse> ports);
std::vector<PortUse> port_uses(const DataflowGraph& g, const NodeId& id);
int buffer_demand(const DataflowGraph& g, const NodeId& id);

/// One "buffer-overflow" diagnostic per AIE kernel whose demand exceeds the
/// per-tile buffer limit.
Diagnostics check_buffer_constraint(const DesignPoint& d, const TargetDescription& target);

/// Timings per mapped kernel, critical-path latency and throughput
/// min_k(clock_k / II_k). Every replica processes its slice of every event, so
/// spatial parallelism shows up through the smaller per-replica II.
/// The returned diagnostics hold the deadline and latency findings.
PerformanceEstimate estimate_performance(const DesignPoint& d, const TargetDescription& target);

/// Requirement gates: end-to-end latency, per-kernel deadline, throughput goal.
Diagnostics check_requirements(const PerformanceEstimate& perf, const TargetDescription& target);

/// Fills d.resources and d.performance.
void evaluate(DesignPoint& d, const TargetDescription& target);

/// Sum of utilization fractions over FF, LUT, DSP, BRAM and AIE tiles.
double total_resource_fraction(const ResourceEstimate& r, const TargetDescription& target);

}  // namespace hetflow
