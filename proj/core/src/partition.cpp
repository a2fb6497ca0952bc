#include <algorithm>
#include <functional>
#include <set>

#include <fmt/format.h>

#include "hetflow/passes.hpp"

namespace hetflow {

std::size_t PartitionPlan::count(Platform p) const {
  return static_cast<std::size_t>(
      std::count_if(segments.begin(), segments.end(), [&](const Segment& s) { return s.platform == p; }));
}

const Segment& PartitionPlan::segment_of(const NodeId& id) const {
  auto it = assignment.find(id);
  if (it == assignment.end()) throw Error("unassigned-node", "node '" + id + "' has no segment");
  for (const auto& s : segments)
    if (s.id == it->second) return s;
  throw Error("unassigned-node", fmt::format("segment {} of node '{}' does not exist", it->second, id));
}

std::size_t DesignPoint::mapped_node_count() const {
  std::size_t n = 0;
  for (const auto& [id, node] : graph.nodes())
    if (node.binding) ++n;
  return n;
}

std::size_t DesignPoint::compute_kernel_count() const {
  std::size_t n = 0;
  for (const auto& [id, node] : graph.nodes())
    if (node.binding && !is_source(node.kind) && !is_sink(node.kind)) ++n;
  return n;
}

std::optional<std::string> template_for(OperatorKind kind, Platform platform, int /*precision_bits*/) {
  if (platform == Platform::AIE) {
    switch (kind) {
      case OperatorKind::Linear: return "aie.linear";
      case OperatorKind::ReLU: return "aie.relu";
      case OperatorKind::Dense: return "aie.dense";
      case OperatorKind::Concat: return "aie.concat";
      case OperatorKind::Retile: return "aie.retile";
      default: return std::nullopt;
    }
  }
  switch (kind) {
    case OperatorKind::Input:
    case OperatorKind::Load: return "fpga.load";
    case OperatorKind::Output:
    case OperatorKind::Store: return "fpga.store";
    case OperatorKind::Linear: return "fpga.linear";
    case OperatorKind::ReLU: return "fpga.relu";
    case OperatorKind::Dense: return "fpga.dense";
    case OperatorKind::Concat: return "fpga.concat";
    case OperatorKind::GravNetConv: return "fpga.gravnetconv";
    case OperatorKind::CPS: return "fpga.cps";
    case OperatorKind::Retile: return "fpga.retile";
    case OperatorKind::Scatter: return "fpga.scatter";
    case OperatorKind::Gather: return "fpga.gather";
  }
  return std::nullopt;
}

namespace {

bool touches_interface(const DataflowGraph& g, const NodeId& id) {
  const auto& n = g.node(id);
  if (is_source(n.kind) || is_sink(n.kind)) return true;
  for (const auto& p : g.predecessors(id))
    if (is_source(g.node(p).kind)) return true;
  for (const auto& s : g.successors(id))
    if (is_sink(g.node(s).kind)) return true;
  return false;
}

// Regular nodes forming the input or output layer stay on the FPGA next to
// the DDR interface: the node adjacent to the source/sink plus the ReLU
// activation it is fused with.
std::set<NodeId> boundary_layer_nodes(const DataflowGraph& g) {
  std::set<NodeId> pinned;
  for (const auto& [id, n] : g.nodes())
    if (access_class(n.kind) == AccessClass::Regular && touches_interface(g, id)) pinned.insert(id);

  std::set<NodeId> partners;
  for (const auto& id : pinned) {
    const auto& n = g.node(id);
    if (n.kind == OperatorKind::Linear) {
      auto outs = g.out_edges(id);
      if (outs.size() == 1 && g.node(outs.front().to.node).kind == OperatorKind::ReLU)
        partners.insert(outs.front().to.node);
    }
    if (n.kind == OperatorKind::ReLU) {
      auto preds = g.predecessors(id);
      if (preds.size() == 1 && g.node(preds.front()).kind == OperatorKind::Linear &&
          g.out_edges(preds.front()).size() == 1)
        partners.insert(preds.front());
    }
  }
  pinned.insert(partners.begin(), partners.end());
  return pinned;
}

Platform preferred_platform(const OperatorNode& n, bool pinned) {
  if (access_class(n.kind) == AccessClass::Regular && !pinned) return Platform::AIE;
  return Platform::FPGA;
}

// Splits a run into weakly connected components, preserving order.
std::vector<std::vector<NodeId>> connected_parts(const DataflowGraph& g, const std::vector<NodeId>& run) {
  std::set<NodeId> members(run.begin(), run.end());
  std::map<NodeId, int> comp;
  int next = 0;
  for (const auto& start : run) {
    if (comp.count(start)) continue;
    std::vector<NodeId> stack{start};
    comp[start] = next;
    while (!stack.empty()) {
      auto cur = stack.back();
      stack.pop_back();
      auto visit = [&](const NodeId& nb) {
        if (members.count(nb) && !comp.count(nb)) {
          comp[nb] = next;
          stack.push_back(nb);
        }
      };
      for (const auto& p : g.predecessors(cur)) visit(p);
      for (const auto& s : g.successors(cur)) visit(s);
    }
    ++next;
  }
  std::vector<std::vector<NodeId>> parts(static_cast<std::size_t>(next));
  for (const auto& id : run) parts[static_cast<std::size_t>(comp[id])].push_back(id);
  return parts;
}

int segment_precision(const DataflowGraph& g, const std::vector<NodeId>& nodes) {
  for (const auto& id : nodes)
    if (touches_interface(g, id)) return 16;
  return 8;
}

}  // namespace

PartitionPlan partition(const DataflowGraph& g) {
  auto order = topological_order(g);
  auto pinned = boundary_layer_nodes(g);

  std::vector<std::pair<Platform, std::vector<NodeId>>> runs;
  for (const auto& id : order) {
    auto platform = preferred_platform(g.node(id), pinned.count(id) != 0);
    if (runs.empty() || runs.back().first != platform) runs.push_back({platform, {}});
    runs.back().second.push_back(id);
  }

  PartitionPlan plan;
  for (const auto& [platform, run] : runs) {
    for (auto& part : connected_parts(g, run)) {
      Segment s;
      s.id = static_cast<int>(plan.segments.size());
      s.platform = platform;
      s.precision_bits = segment_precision(g, part);
      s.node_ids = std::move(part);
      for (const auto& id : s.node_ids) plan.assignment[id] = s.id;
      plan.segments.push_back(std::move(s));
    }
  }
  return plan;
}

PartitionPlan plan_from_annotations(const DataflowGraph& g, const PartitionPlan& previous) {
  PartitionPlan plan;
  plan.segments = previous.segments;
  for (auto& s : plan.segments) s.node_ids.clear();
  for (const auto& id : topological_order(g)) {
    int seg_id = g.node(id).segment;
    if (seg_id < 0) {
      auto prev = previous.assignment.find(id);
      if (prev == previous.assignment.end())
        throw Error("unassigned-node", "node '" + id + "' carries no segment");
      seg_id = prev->second;
    }
    auto it = std::find_if(plan.segments.begin(), plan.segments.end(),
                           [&](const Segment& s) { return s.id == seg_id; });
    if (it == plan.segments.end())
      throw Error("unassigned-node", fmt::format("node '{}' names unknown segment {}", id, seg_id));
    it->node_ids.push_back(id);
    plan.assignment[id] = seg_id;
  }
  return plan;
}

DataflowGraph map_operators(const DataflowGraph& g, const PartitionPlan& plan) {
  DataflowGraph out = g;
  for (auto& [id, n] : g.nodes()) {
    const auto& seg = plan.segment_of(id);
    auto tmpl = template_for(n.kind, seg.platform, seg.precision_bits);
    if (!tmpl)
      throw Error("no-template", fmt::format("no template for {} on {} (node '{}')", to_string(n.kind),
                                             to_string(seg.platform), id));
    auto& m = out.node(id);
    if (m.kind == OperatorKind::Input) m.kind = OperatorKind::Load;
    if (m.kind == OperatorKind::Output) m.kind = OperatorKind::Store;
    m.binding = Binding{*tmpl, seg.platform};
    m.segment = seg.id;
    m.precision_bits = seg.precision_bits;
    for (auto& o : m.outputs) o.precision_bits = seg.precision_bits;
  }
  out.resolve_inputs();
  return out;
}

std::vector<Edge> unlegalized_edges(const DataflowGraph& g) {
  std::vector<Edge> bad;
  for (const auto& e : g.edges()) {
    if (!g.contains(e.from.node) || !g.contains(e.to.node)) continue;
    const auto& src = g.node(e.from.node);
    const auto& dst = g.node(e.to.node);
    if (dst.kind == OperatorKind::Retile) continue;
    if (e.from.port < 0 || static_cast<std::size_t>(e.from.port) >= src.outputs.size()) continue;
    if (src.outputs[static_cast<std::size_t>(e.from.port)].layout != dst.layout) bad.push_back(e);
  }
  return bad;
}

DataflowGraph legalize_layouts(const DataflowGraph& g) {
  DataflowGraph out = g;
  for (const auto& e : unlegalized_edges(g)) {
    const auto& src = g.node(e.from.node);
    const auto& dst = g.node(e.to.node);
    const auto& produced = src.outputs[static_cast<std::size_t>(e.from.port)];

    OperatorNode retile;
    retile.id = out.unique_id(fmt::format("retile_{}_{}", src.id, dst.id));
    retile.kind = OperatorKind::Retile;
    retile.precision_bits = src.precision_bits;
    retile.layout = dst.layout;
    retile.outputs = {TensorSpec{produced.dims, produced.precision_bits, dst.layout}};
    retile.segment = src.segment;
    retile.replica = src.replica;
    retile.replicas = src.replicas;
    if (src.binding) {
      // Reshaping runs where the data originates.
      auto tmpl = template_for(OperatorKind::Retile, src.binding->platform, src.precision_bits);
      retile.binding = Binding{*tmpl, src.binding->platform};
      retile.mode = src.binding->platform == Platform::AIE ? src.mode : OptMode::Pipelined;
    }
    auto rid = retile.id;
    out.add_node(std::move(retile));
    out.remove_edge(e);
    out.add_edge(e.from, {rid, 0});
    out.add_edge({rid, 0}, e.to);
  }
  out.resolve_inputs();
  return out;
}

}  // namespace hetflow
