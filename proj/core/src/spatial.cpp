#include <algorithm>
#include <set>

#include <fmt/format.h>

#include "hetflow/passes.hpp"

namespace hetflow {

namespace {

bool is_power_of_two(int p) { return p >= 1 && (p & (p - 1)) == 0; }

bool is_adapter_or_io(OperatorKind k) {
  return k == OperatorKind::Scatter || k == OperatorKind::Gather || is_source(k) || is_sink(k);
}

// Compute nodes of the segment in topological order if they form a linear
// chain entered by exactly one edge; empty optional otherwise.
std::optional<std::vector<NodeId>> linear_chain(const DataflowGraph& g, const Segment& seg) {
  std::vector<NodeId> chain;
  for (const auto& id : seg.node_ids)
    if (!is_adapter_or_io(g.node(id).kind)) chain.push_back(id);
  if (chain.empty()) return chain;
  if (g.in_edges(chain.front()).size() != 1) return std::nullopt;
  for (std::size_t i = 0; i < chain.size(); ++i) {
    const auto& n = g.node(chain[i]);
    if (n.outputs.size() != 1) return std::nullopt;
    if (i > 0) {
      auto ins = g.in_edges(chain[i]);
      if (ins.size() != 1 || ins.front().from.node != chain[i - 1]) return std::nullopt;
    }
    if (i + 1 < chain.size()) {
      auto outs = g.out_edges(chain[i]);
      if (outs.size() != 1 || outs.front().to.node != chain[i + 1]) return std::nullopt;
    }
  }
  return chain;
}

bool separable(const DataflowGraph& g, const std::vector<NodeId>& chain) {
  for (const auto& id : chain) {
    const auto& n = g.node(id);
    if (access_class(n.kind) == AccessClass::Irregular) return false;
    if (n.outputs.front().dims.front() != g.spatial_extent) return false;
    for (const auto& in : n.inputs)
      if (in.dims.empty() || in.dims.front() != g.spatial_extent) return false;
  }
  return true;
}

TensorSpec sliced(TensorSpec t, int parts, const NodeId& owner) {
  t.dims.front() /= parts;
  if (!t.layout.tile_dims.empty() && t.dims.front() % t.layout.tile_dims.front() != 0)
    throw Error("layout-tile", fmt::format("layout tile of '{}' does not divide the spatial slice", owner));
  return t;
}

OperatorNode make_adapter(OperatorKind kind, NodeId id, int parts, const TensorSpec& whole, int segment) {
  OperatorNode n;
  n.id = std::move(id);
  n.kind = kind;
  n.attrs = {{"parts", parts}};
  n.precision_bits = whole.precision_bits;
  n.layout = whole.layout;
  n.segment = segment;
  n.binding = Binding{*template_for(kind, Platform::FPGA, whole.precision_bits), Platform::FPGA};
  if (kind == OperatorKind::Scatter) {
    for (int r = 0; r < parts; ++r) n.outputs.push_back(sliced(whole, parts, n.id));
  } else {
    n.outputs.push_back(whole);
  }
  return n;
}

void replicate_chain(DataflowGraph& out, const PartitionPlan& plan, const Segment& seg,
                     const std::vector<NodeId>& chain, int parts) {
  const DataflowGraph g = out;
  auto segment_of = [&](const NodeId& id) {
    const auto& n = g.node(id);
    if (n.segment >= 0) return n.segment;
    auto it = plan.assignment.find(id);
    return it == plan.assignment.end() ? seg.id : it->second;
  };
  auto entry = g.in_edges(chain.front()).front();
  auto exits = g.out_edges(chain.back());
  const auto& producer = g.node(entry.from.node);
  const auto& whole_in = producer.outputs[static_cast<std::size_t>(entry.from.port)];
  const auto& whole_out = g.node(chain.back()).outputs.front();

  // Adapters live on the FPGA; for AIE segments they join the neighbouring
  // FPGA segments.
  int scatter_seg = seg.platform == Platform::AIE ? segment_of(producer.id) : seg.id;
  int gather_seg = seg.id;
  if (seg.platform == Platform::AIE)
    gather_seg = exits.empty() ? scatter_seg : segment_of(exits.front().to.node);

  auto scatter = make_adapter(OperatorKind::Scatter, out.unique_id(fmt::format("scatter_s{}", seg.id)), parts,
                              whole_in, scatter_seg);
  auto scatter_id = scatter.id;
  out.add_node(std::move(scatter));
  auto gather = make_adapter(OperatorKind::Gather, out.unique_id(fmt::format("gather_s{}", seg.id)), parts,
                             whole_out, gather_seg);
  auto gather_id = gather.id;
  out.add_node(std::move(gather));

  for (int r = 0; r < parts; ++r) {
    NodeId prev;
    for (std::size_t i = 0; i < chain.size(); ++i) {
      OperatorNode copy = g.node(chain[i]);
      copy.id = out.unique_id(fmt::format("{}_r{}", chain[i], r));
      copy.segment = seg.id;
      copy.replica = r;
      copy.replicas = parts;
      copy.outputs.front() = sliced(copy.outputs.front(), parts, copy.id);
      auto cid = copy.id;
      out.add_node(std::move(copy));
      if (i == 0) out.add_edge({scatter_id, r}, {cid, 0});
      else out.add_edge({prev, 0}, {cid, 0});
      prev = cid;
    }
    out.add_edge({prev, 0}, {gather_id, r});
  }
  out.add_edge(entry.from, {scatter_id, 0});
  for (const auto& e : exits) out.add_edge({gather_id, 0}, e.to);
  for (const auto& id : chain) out.remove_node(id);
}

}  // namespace

DataflowGraph apply_spatial_parallelization(const DataflowGraph& g, const PartitionPlan& plan, int p_fpga,
                                            int p_aie) {
  if (!is_power_of_two(p_fpga) || !is_power_of_two(p_aie))
    throw Error("invalid-parallelism", fmt::format("P must be a power of two, got ({}, {})", p_fpga, p_aie));
  for (int p : {p_fpga, p_aie})
    if (g.spatial_extent % p != 0)
      throw Error("indivisible", fmt::format("P={} does not divide spatial extent {}", p, g.spatial_extent));

  DataflowGraph out = g;
  for (const auto& seg : plan.segments) {
    int parts = seg.platform == Platform::AIE ? p_aie : p_fpga;
    if (parts == 1) continue;
    auto chain = linear_chain(out, seg);
    bool ok = chain && separable(out, *chain);
    if (!ok) {
      if (seg.platform == Platform::AIE)
        throw Error("non-separable", fmt::format("AIE segment {} is not a separable linear chain", seg.id));
      continue;
    }
    if (chain->empty()) continue;
    replicate_chain(out, plan, seg, *chain, parts);
  }
  out.resolve_inputs();
  return out;
}

}  // namespace hetflow
