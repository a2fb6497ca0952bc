#include <algorithm>
#include <map>

#include "hetflow/passes.hpp"

namespace hetflow {

DataflowGraph fuse_linear_relu(const DataflowGraph& g) {
  DataflowGraph out = g;
  for (const auto& id : topological_order(g)) {
    const auto& lin = g.node(id);
    if (lin.kind != OperatorKind::Linear) continue;
    auto outs = g.out_edges(id);
    if (outs.size() != 1) continue;
    const auto& relu = g.node(outs.front().to.node);
    if (relu.kind != OperatorKind::ReLU) continue;

    // The Dense keeps the Linear's id, input expectation and attributes and
    // takes over the ReLU's output spec.
    auto& dense = out.node(id);
    dense.kind = OperatorKind::Dense;
    dense.outputs = relu.outputs;
    for (const auto& e : g.out_edges(relu.id)) out.add_edge({id, 0}, e.to);
    out.remove_node(relu.id);
  }
  out.resolve_inputs();
  return out;
}

namespace {

struct MergeGroup {
  Endpoint producer;
  NodeId concat;
  std::vector<NodeId> members;  // ascending id
};

// Dense nodes fed only by `producer`, each consumed solely by `concat`.
std::vector<MergeGroup> find_merge_groups(const DataflowGraph& g) {
  std::map<std::pair<Endpoint, NodeId>, std::vector<NodeId>> buckets;
  for (const auto& [id, n] : g.nodes()) {
    if (n.kind != OperatorKind::Dense) continue;
    auto ins = g.in_edges(id);
    auto outs = g.out_edges(id);
    if (ins.size() != 1 || outs.size() != 1) continue;
    const auto& consumer = g.node(outs.front().to.node);
    if (consumer.kind != OperatorKind::Concat) continue;
    auto rank = consumer.outputs.empty() ? 0 : static_cast<std::int64_t>(consumer.outputs[0].dims.size());
    auto axis = consumer.attr_int("axis", -1);
    if (axis != -1 && axis != rank - 1) continue;
    buckets[{ins.front().from, consumer.id}].push_back(id);
  }

  std::vector<MergeGroup> groups;
  for (auto& [key, members] : buckets) {
    if (members.size() < 2) continue;
    const auto& first = g.node(members.front());
    bool compatible = std::all_of(members.begin(), members.end(), [&](const NodeId& m) {
      const auto& n = g.node(m);
      return n.attr_int("in_features") == first.attr_int("in_features") &&
             n.precision_bits == first.precision_bits && n.layout == first.layout &&
             n.outputs.front().layout == first.outputs.front().layout;
    });
    if (!compatible) continue;

    // The merged output lists features in member-id order, so the members
    // must occupy consecutive concat ports in that same order.
    std::vector<int> ports;
    for (const auto& m : members) ports.push_back(g.out_edges(m).front().to.port);
    bool consecutive = true;
    for (std::size_t i = 1; i < ports.size(); ++i) consecutive = consecutive && ports[i] == ports[i - 1] + 1;
    if (!consecutive) continue;
    groups.push_back({key.first, key.second, members});
  }
  return groups;
}

}  // namespace

DataflowGraph merge_parallel_dense(const DataflowGraph& g) {
  DataflowGraph out = g;
  for (const auto& group : find_merge_groups(g)) {
    const auto& keep_id = group.members.front();
    std::int64_t total_out = 0;
    for (const auto& m : group.members) total_out += g.node(m).attr_int("out_features");

    auto& merged = out.node(keep_id);
    merged.attrs["out_features"] = total_out;
    merged.outputs.front().dims.back() = total_out;

    int first_port = g.out_edges(keep_id).front().to.port;
    auto concat_ins = g.in_edges(group.concat);
    for (const auto& m : group.members)
      if (m != keep_id) out.remove_node(m);
    for (const auto& e : concat_ins) out.remove_edge(e);

    auto remaining = static_cast<int>(concat_ins.size() - group.members.size());
    if (remaining == 0) {
      // The concat only joined the merged members; the merged Dense replaces it.
      for (const auto& e : g.out_edges(group.concat)) out.add_edge({keep_id, 0}, e.to);
      out.remove_node(group.concat);
      continue;
    }
    // Compact the concat's ports, merged input at the first member's slot.
    int port = 0;
    for (const auto& e : concat_ins) {
      bool member = std::find(group.members.begin(), group.members.end(), e.from.node) != group.members.end();
      if (member) {
        if (e.to.port == first_port) out.add_edge({keep_id, 0}, {group.concat, port++});
        continue;
      }
      out.add_edge(e.from, {group.concat, port++});
    }
  }
  out.resolve_inputs();
  return out;
}

}  // namespace hetflow
