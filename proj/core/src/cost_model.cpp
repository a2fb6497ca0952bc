#include "hetflow/cost_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include <fmt/format.h>

#include "hetflow/passes.hpp"

namespace hetflow {

namespace {

std::int64_t ceil_div(double num, double den) {
  if (num <= 0) return 0;
  return static_cast<std::int64_t>(std::ceil(num / den - 1e-12));
}

std::int64_t ceil_pos(double v) { return v <= 0 ? 0 : static_cast<std::int64_t>(std::ceil(v - 1e-12)); }

std::int64_t spatial_slice(const OperatorNode& n) {
  std::int64_t s = 0;
  for (const auto& t : n.inputs)
    if (!t.dims.empty()) s = std::max(s, t.dims.front());
  for (const auto& t : n.outputs)
    if (!t.dims.empty()) s = std::max(s, t.dims.front());
  return s;
}

bool is_matmul(OperatorKind k) { return k == OperatorKind::Linear || k == OperatorKind::Dense; }

double node_work(const OperatorNode& n) {
  if (n.outputs.empty()) return 0;
  auto out_elems = static_cast<double>(n.outputs.front().elements());
  if (is_matmul(n.kind)) return static_cast<double>(n.attr_int("in_features")) * out_elems;
  return out_elems;
}

std::string template_of(const OperatorNode& n, Platform platform) {
  if (n.binding && n.binding->platform == platform) return n.binding->template_name;
  auto t = template_for(n.kind, platform, n.precision_bits);
  if (!t)
    throw Error("no-template",
                fmt::format("no template for {} on {} (node '{}')", to_string(n.kind), to_string(platform), n.id));
  return *t;
}

}  // namespace

std::int64_t cycles_to_ps(std::int64_t cycles, double clock_hz) {
  return std::llround(static_cast<double>(cycles) * 1e12 / clock_hz);
}

KernelCost estimate_kernel_latency(const OperatorNode& node, Platform platform, OptMode mode,
                                   const TargetDescription& target) {
  auto tmpl = template_of(node, platform);
  KernelCost cost;
  if (platform == Platform::AIE) {
    double lanes = target.lanes(node.precision_bits);
    auto iterations = ceil_div(node_work(node), lanes);
    auto sched = mode == OptMode::Flattened ? target.cal(cal::kAieFlat) : target.cal(cal::kAiePipe);
    cost.latency_cycles = iterations + ceil_pos(sched) + ceil_pos(target.cal(cal::kAieFix));
    cost.ii_cycles = cost.latency_cycles;
    auto base = ceil_pos(target.cal(cal::kAiePmBase));
    cost.program_memory_bytes =
        mode == OptMode::Flattened ? base + ceil_pos(target.cal(cal::kAiePmPerIter) * static_cast<double>(iterations))
                                   : base;
    return cost;
  }

  auto slice = static_cast<double>(spatial_slice(node));
  double k = node.kind == OperatorKind::GravNetConv ? static_cast<double>(node.attr_int("k", 1)) : 1.0;
  cost.latency_cycles =
      ceil_pos(target.cal(tmpl + ".lat_per_input") * slice * k) + ceil_pos(target.cal(tmpl + ".lat_fix"));
  cost.ii_cycles = ceil_pos(target.cal(tmpl + ".ii_per_input") * slice) + ceil_pos(target.cal(tmpl + ".ii_fix"));
  cost.ii_cycles = std::max<std::int64_t>(cost.ii_cycles, 1);
  return cost;
}

double fpga_scaled_resource(double r1, int p, double alpha) {
  return r1 * p * (1.0 + alpha * std::log2(static_cast<double>(p)));
}

int percent_of(double abs, double total) {
  if (total <= 0) return 0;
  return static_cast<int>(std::floor(100.0 * abs / total + 0.5));
}

std::int64_t transfer_delay_ps(const DataflowGraph& g, const Edge& e, const TargetDescription& target) {
  const auto& a = g.node(e.from.node);
  const auto& b = g.node(e.to.node);
  if (!a.binding || !b.binding || a.binding->platform == b.binding->platform) return 0;
  return std::llround(target.cal(cal::kPlioTransfer) * 1e12);
}

int buffer_demand(std::span<const PortUse> ports) {
  int total = 0;
  for (const auto& p : ports) {
    if (p.fanout == 0) continue;
    total += p.fanout > 1 ? 4 : 2;
  }
  return total;
}

std::vector<PortUse> port_uses(const DataflowGraph& g, const NodeId& id) {
  std::vector<PortUse> uses;
  for (const auto& e : g.in_edges(id))
    uses.push_back({PortUse::Direction::In, g.fanout(e.from.node, e.from.port)});
  const auto& n = g.node(id);
  for (int port = 0; port < static_cast<int>(n.outputs.size()); ++port) {
    auto f = g.fanout(id, port);
    if (f > 0) uses.push_back({PortUse::Direction::Out, f});
  }
  return uses;
}

int buffer_demand(const DataflowGraph& g, const NodeId& id) {
  auto uses = port_uses(g, id);
  return buffer_demand(std::span<const PortUse>(uses));
}

Diagnostics check_buffer_constraint(const DesignPoint& d, const TargetDescription& target) {
  Diagnostics out;
  for (const auto& [id, n] : d.graph.nodes()) {
    if (!n.binding || n.binding->platform != Platform::AIE) continue;
    auto demand = buffer_demand(d.graph, id);
    if (demand > target.aie.memory_buffers_per_tile)
      out.push_back({Severity::Error, "buffer-overflow", id,
                     fmt::format("kernel needs {} memory buffers, tile provides {}", demand,
                                 target.aie.memory_buffers_per_tile)});
  }
  return out;
}

namespace {

struct FpgaVec {
  double ff = 0, lut = 0, dsp = 0, bram = 0;
};

FpgaVec fpga_node_resources(const OperatorNode& n, const TargetDescription& t) {
  const auto& tmpl = n.binding->template_name;
  double macs = is_matmul(n.kind) ? static_cast<double>(n.attr_int("in_features") * n.attr_int("out_features")) : 0;
  auto r = [&](const char* cls) {
    return t.cal(fmt::format("{}.{}", tmpl, cls), 0.0) + macs * t.cal(fmt::format("{}.{}_per_mac", tmpl, cls), 0.0);
  };
  return {r("ff"), r("lut"), r("dsp"), r("bram")};
}

std::int64_t round_half_up(double v) { return static_cast<std::int64_t>(std::floor(v + 0.5)); }

}  // namespace

AieTileUse aie_tile_use(const DataflowGraph& g, const NodeId& id, const TargetDescription& t) {
  const auto& n = g.node(id);
  AieTileUse use;
  use.compute_tiles = 1;
  if (is_matmul(n.kind))
    use.compute_tiles = std::max<std::int64_t>(
        1, ceil_div(static_cast<double>(n.attr_int("in_features") * n.attr_int("out_features")),
                    t.cal(cal::kAieWeightsPerTile)));
  use.buffers = buffer_demand(g, id);
  use.buffer_tiles = ceil_div(double(use.buffers), t.cal(cal::kAieBuffersPerMemTile));
  return use;
}

ResourceEstimate estimate_resources(const DesignPoint& d, const TargetDescription& t) {
  ResourceEstimate est;
  const auto& g = d.graph;

  // FPGA: plain nodes add up, replicated chains follow the superlinear law.
  FpgaVec plain;
  std::map<std::pair<int, int>, FpgaVec> replicated;  // (segment, P) -> sum over replicas
  std::int64_t aie_tiles = 0, compute_tiles = 0, buffers = 0;
  for (const auto& [id, n] : g.nodes()) {
    if (!n.binding) continue;
    if (n.binding->platform == Platform::FPGA) {
      auto r = fpga_node_resources(n, t);
      auto& acc = n.replicas > 1 ? replicated[{n.segment, n.replicas}] : plain;
      acc.ff += r.ff;
      acc.lut += r.lut;
      acc.dsp += r.dsp;
      acc.bram += r.bram;
      continue;
    }
    auto cost = estimate_kernel_latency(n, Platform::AIE, n.mode, t);
    est.program_memory_bytes[id] = cost.program_memory_bytes;
    auto use = aie_tile_use(g, id, t);
    compute_tiles += use.compute_tiles;
    aie_tiles += use.compute_tiles + use.buffer_tiles;
    buffers += use.buffers;
  }

  std::int64_t ff = round_half_up(t.cal("fpga.shell.ff", 0.0) + plain.ff);
  std::int64_t lut = round_half_up(t.cal("fpga.shell.lut", 0.0) + plain.lut);
  std::int64_t dsp = round_half_up(t.cal("fpga.shell.dsp", 0.0) + plain.dsp);
  std::int64_t bram = round_half_up(t.cal("fpga.shell.bram", 0.0) + plain.bram);
  for (const auto& [key, sum] : replicated) {
    int p = key.second;
    // `sum` already holds P copies; the law's P factor is applied through it.
    auto grow = [&](double total, const char* cls) {
      return round_half_up(total * (1.0 + t.cal(fmt::format("fpga.alpha.{}", cls)) * std::log2(double(p))));
    };
    ff += grow(sum.ff, "ff");
    lut += grow(sum.lut, "lut");
    dsp += grow(sum.dsp, "dsp");
    bram += grow(sum.bram, "bram");
  }

  auto util = [](std::int64_t abs, double total) { return Utilization{abs, percent_of(double(abs), total)}; };
  est.ff = util(ff, t.fpga.ff_total);
  est.lut = util(lut, t.fpga.lut_total);
  est.dsp = util(dsp, t.fpga.dsp_total);
  est.bram = util(bram, t.fpga.bram_total);
  est.aie_tiles = util(aie_tiles, t.aie.tile_total);
  est.aie_compute_tiles = util(compute_tiles, t.aie.tile_total);
  est.aie_memory_buffers = util(buffers, t.aie.tile_total * t.aie.memory_buffers_per_tile);

  auto budget = [&](const char* what, std::int64_t abs, double total) {
    if (double(abs) > total)
      est.diagnostics.push_back({Severity::Error, "over-budget", what,
                                 fmt::format("{} estimate {} exceeds {}", what, abs, total)});
  };
  budget("FF", ff, t.fpga.ff_total);
  budget("LUT", lut, t.fpga.lut_total);
  budget("DSP", dsp, t.fpga.dsp_total);
  budget("BRAM", bram, t.fpga.bram_total);
  budget("AIE tiles", aie_tiles, t.aie.tile_total);
  for (const auto& [id, bytes] : est.program_memory_bytes)
    if (double(bytes) > t.aie.program_memory_bytes)
      est.diagnostics.push_back({Severity::Error, "program-memory", id,
                                 fmt::format("program memory {} B exceeds {} B", bytes, t.aie.program_memory_bytes)});
  return est;
}

namespace {

Diagnostics deadline_diagnostics(const PerformanceEstimate& perf, const TargetDescription& t) {
  Diagnostics out;
  if (perf.latency_s > t.constraints.max_latency_s)
    out.push_back({Severity::Error, "latency", "end-to-end",
                   fmt::format("latency {:.3f} us exceeds {:.3f} us", perf.latency_s * 1e6,
                               t.constraints.max_latency_s * 1e6)});
  auto deadline_ps = std::llround(t.constraints.kernel_deadline_s * 1e12);
  for (const auto& [id, k] : perf.per_kernel)
    if (k.latency_ps > deadline_ps)
      out.push_back({Severity::Error, "kernel-deadline", id,
                     fmt::format("kernel latency {:.3f} us exceeds {:.3f} us", double(k.latency_ps) * 1e-6,
                                 t.constraints.kernel_deadline_s * 1e6)});
  return out;
}

}  // namespace

PerformanceEstimate estimate_performance(const DesignPoint& d, const TargetDescription& t) {
  PerformanceEstimate perf;
  const auto& g = d.graph;
  for (const auto& [id, n] : g.nodes()) {
    if (!n.binding) continue;
    auto platform = n.binding->platform;
    auto cost = estimate_kernel_latency(n, platform, n.mode, t);
    double clock = platform == Platform::AIE ? t.aie.clock_hz : t.fpga.clock_hz;
    KernelTiming k;
    k.platform = platform;
    k.latency_cycles = cost.latency_cycles;
    k.ii_cycles = cost.ii_cycles;
    k.latency_ps = cycles_to_ps(cost.latency_cycles, clock);
    k.ii_ps = cycles_to_ps(cost.ii_cycles, clock);
    k.program_memory_bytes = cost.program_memory_bytes;
    perf.per_kernel.emplace(id, k);
  }

  // Longest path: kernel latencies plus platform-crossing transfers.
  std::map<NodeId, std::int64_t> done;
  for (const auto& id : topological_order(g)) {
    std::int64_t start = 0;
    for (const auto& e : g.in_edges(id)) start = std::max(start, done[e.from.node] + transfer_delay_ps(g, e, t));
    auto it = perf.per_kernel.find(id);
    done[id] = start + (it == perf.per_kernel.end() ? 0 : it->second.latency_ps);
    perf.latency_ps = std::max(perf.latency_ps, done[id]);
  }
  perf.latency_s = double(perf.latency_ps) * 1e-12;

  double best = std::numeric_limits<double>::infinity();
  for (const auto& [id, k] : perf.per_kernel) {
    if (k.ii_cycles <= 0) continue;
    double clock = k.platform == Platform::AIE ? t.aie.clock_hz : t.fpga.clock_hz;
    double eps = clock / double(k.ii_cycles);
    if (eps < best) {
      best = eps;
      perf.bottleneck = id;
    }
  }
  perf.throughput_eps = std::isinf(best) ? 0.0 : best;
  perf.diagnostics = deadline_diagnostics(perf, t);
  return perf;
}

Diagnostics check_requirements(const PerformanceEstimate& perf, const TargetDescription& t) {
  auto out = deadline_diagnostics(perf, t);
  if (perf.throughput_eps < t.constraints.throughput_goal_eps)
    out.push_back({Severity::Error, "throughput", "end-to-end",
                   fmt::format("throughput {:.4g} eps below goal {:.4g} eps", perf.throughput_eps,
                               t.constraints.throughput_goal_eps)});
  return out;
}

void evaluate(DesignPoint& d, const TargetDescription& target) {
  d.resources = estimate_resources(d, target);
  d.performance = estimate_performance(d, target);
}

double total_resource_fraction(const ResourceEstimate& r, const TargetDescription& t) {
  return double(r.ff.abs) / t.fpga.ff_total + double(r.lut.abs) / t.fpga.lut_total +
         double(r.dsp.abs) / t.fpga.dsp_total + double(r.bram.abs) / t.fpga.bram_total +
         double(r.aie_tiles.abs) / t.aie.tile_total;
}

}  // namespace hetflow
