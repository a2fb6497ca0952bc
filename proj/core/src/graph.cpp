#include "hetflow/graph.hpp"

#include <algorithm>
#include <array>
#include <queue>

#include <fmt/format.h>

namespace hetflow {

namespace {

struct KindName {
  OperatorKind kind;
  std::string_view name;
};

constexpr std::array<KindName, 13> kKindNames{{
    {OperatorKind::Input, "Input"},
    {OperatorKind::Output, "Output"},
    {OperatorKind::Load, "Load"},
    {OperatorKind::Store, "Store"},
    {OperatorKind::Linear, "Linear"},
    {OperatorKind::ReLU, "ReLU"},
    {OperatorKind::Dense, "Dense"},
    {OperatorKind::Concat, "Concat"},
    {OperatorKind::GravNetConv, "GravNetConv"},
    {OperatorKind::CPS, "CPS"},
    {OperatorKind::Retile, "Retile"},
    {OperatorKind::Scatter, "Scatter"},
    {OperatorKind::Gather, "Gather"},
}};

std::string dims_str(const std::vector<std::int64_t>& dims) {
  return fmt::format("[{}]", fmt::join(dims, ","));
}

}  // namespace

std::string to_string(const Diagnostic& d) {
  return fmt::format("{}: {} [{}] {}", d.severity == Severity::Error ? "error" : "warning", d.code,
                     d.subject, d.message);
}

AccessClass access_class(OperatorKind kind) {
  switch (kind) {
    case OperatorKind::Linear:
    case OperatorKind::ReLU:
    case OperatorKind::Dense:
    case OperatorKind::Concat:
    case OperatorKind::Retile:
      return AccessClass::Regular;
    case OperatorKind::GravNetConv:
    case OperatorKind::CPS:
      return AccessClass::Irregular;
    default:
      return AccessClass::Io;
  }
}

std::string_view to_string(OperatorKind kind) {
  for (const auto& k : kKindNames)
    if (k.kind == kind) return k.name;
  return "?";
}

std::string_view to_string(LayoutOrder order) {
  return order == LayoutOrder::RowMajor ? "row_major" : "tile_major";
}

std::string_view to_string(Platform platform) { return platform == Platform::FPGA ? "FPGA" : "AIE"; }

std::string_view to_string(OptMode mode) {
  return mode == OptMode::Pipelined ? "pipelined" : "flattened";
}

std::optional<OperatorKind> parse_kind(std::string_view name) {
  for (const auto& k : kKindNames)
    if (k.name == name) return k.kind;
  return std::nullopt;
}

std::optional<LayoutOrder> parse_layout_order(std::string_view name) {
  if (name == "row_major") return LayoutOrder::RowMajor;
  if (name == "tile_major") return LayoutOrder::TileMajor;
  return std::nullopt;
}

LayoutSpec LayoutSpec::row_major(std::size_t rank) {
  return LayoutSpec{std::vector<std::int64_t>(rank, 1), LayoutOrder::RowMajor};
}

std::int64_t TensorSpec::elements() const {
  if (dims.empty()) return 0;
  std::int64_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

std::int64_t OperatorNode::attr_int(const char* key, std::int64_t fallback) const {
  if (!attrs.is_object()) return fallback;
  auto it = attrs.find(key);
  if (it == attrs.end() || !it->is_number_integer()) return fallback;
  return it->get<std::int64_t>();
}

std::string to_string(const Edge& e) {
  return fmt::format("{}:{}->{}:{}", e.from.node, e.from.port, e.to.node, e.to.port);
}

const OperatorNode& DataflowGraph::node(const NodeId& id) const {
  auto it = nodes_.find(id);
  if (it == nodes_.end()) throw Error("unknown-node", "no node with id '" + id + "'");
  return it->second;
}

OperatorNode& DataflowGraph::node(const NodeId& id) {
  auto it = nodes_.find(id);
  if (it == nodes_.end()) throw Error("unknown-node", "no node with id '" + id + "'");
  return it->second;
}

void DataflowGraph::add_node(OperatorNode n) {
  if (nodes_.count(n.id)) throw Error("duplicate-node", "duplicate node id '" + n.id + "'");
  auto id = n.id;
  nodes_.emplace(std::move(id), std::move(n));
}

void DataflowGraph::remove_node(const NodeId& id) {
  nodes_.erase(id);
  std::erase_if(edges_, [&](const Edge& e) { return e.from.node == id || e.to.node == id; });
}

void DataflowGraph::add_edge(Endpoint from, Endpoint to) {
  edges_.insert(Edge{std::move(from), std::move(to)});
}

void DataflowGraph::remove_edge(const Edge& e) { edges_.erase(e); }

std::vector<Edge> DataflowGraph::in_edges(const NodeId& id) const {
  std::vector<Edge> out;
  for (const auto& e : edges_)
    if (e.to.node == id) out.push_back(e);
  std::sort(out.begin(), out.end(),
            [](const Edge& a, const Edge& b) { return a.to.port < b.to.port; });
  return out;
}

std::vector<Edge> DataflowGraph::out_edges(const NodeId& id) const {
  std::vector<Edge> out;
  for (const auto& e : edges_)
    if (e.from.node == id) out.push_back(e);
  return out;
}

std::vector<Edge> DataflowGraph::out_edges(const NodeId& id, int port) const {
  std::vector<Edge> out;
  for (const auto& e : edges_)
    if (e.from.node == id && e.from.port == port) out.push_back(e);
  return out;
}

std::size_t DataflowGraph::fanout(const NodeId& id, int port) const {
  return out_edges(id, port).size();
}

std::vector<NodeId> DataflowGraph::predecessors(const NodeId& id) const {
  std::vector<NodeId> out;
  for (const auto& e : in_edges(id))
    if (std::find(out.begin(), out.end(), e.from.node) == out.end()) out.push_back(e.from.node);
  return out;
}

std::vector<NodeId> DataflowGraph::successors(const NodeId& id) const {
  std::vector<NodeId> out;
  for (const auto& e : out_edges(id))
    if (std::find(out.begin(), out.end(), e.to.node) == out.end()) out.push_back(e.to.node);
  return out;
}

std::optional<NodeId> DataflowGraph::find_unique(OperatorKind kind) const {
  std::optional<NodeId> found;
  for (const auto& [id, n] : nodes_) {
    if (n.kind != kind) continue;
    if (found) return std::nullopt;
    found = id;
  }
  return found;
}

std::optional<NodeId> DataflowGraph::source() const {
  std::optional<NodeId> found;
  for (const auto& [id, n] : nodes_) {
    if (!is_source(n.kind)) continue;
    if (found) return std::nullopt;
    found = id;
  }
  return found;
}

std::optional<NodeId> DataflowGraph::sink() const {
  std::optional<NodeId> found;
  for (const auto& [id, n] : nodes_) {
    if (!is_sink(n.kind)) continue;
    if (found) return std::nullopt;
    found = id;
  }
  return found;
}

void DataflowGraph::resolve_inputs() {
  for (auto& [id, n] : nodes_) {
    auto ins = in_edges(id);
    if (ins.empty() && is_sink(n.kind)) continue;
    int max_port = -1;
    for (const auto& e : ins) max_port = std::max(max_port, e.to.port);
    std::vector<TensorSpec> resolved(static_cast<std::size_t>(max_port + 1));
    for (const auto& e : ins) {
      auto src = nodes_.find(e.from.node);
      if (src == nodes_.end()) continue;
      const auto& outs = src->second.outputs;
      if (e.from.port < 0 || static_cast<std::size_t>(e.from.port) >= outs.size()) continue;
      if (e.to.port < 0) continue;
      resolved[static_cast<std::size_t>(e.to.port)] = outs[static_cast<std::size_t>(e.from.port)];
    }
    n.inputs = std::move(resolved);
  }
}

NodeId DataflowGraph::unique_id(const std::string& stem) const {
  if (!nodes_.count(stem)) return stem;
  for (int i = 1;; ++i) {
    auto candidate = fmt::format("{}_{}", stem, i);
    if (!nodes_.count(candidate)) return candidate;
  }
}

std::vector<NodeId> topological_order(const DataflowGraph& g) {
  std::map<NodeId, int> indegree;
  for (const auto& [id, n] : g.nodes()) indegree[id] = 0;
  for (const auto& e : g.edges())
    if (indegree.count(e.to.node) && indegree.count(e.from.node)) ++indegree[e.to.node];

  std::priority_queue<NodeId, std::vector<NodeId>, std::greater<>> ready;
  for (const auto& [id, deg] : indegree)
    if (deg == 0) ready.push(id);

  std::vector<NodeId> order;
  order.reserve(indegree.size());
  while (!ready.empty()) {
    auto id = ready.top();
    ready.pop();
    order.push_back(id);
    for (const auto& e : g.out_edges(id)) {
      auto it = indegree.find(e.to.node);
      if (it != indegree.end() && --it->second == 0) ready.push(e.to.node);
    }
  }
  if (order.size() != indegree.size()) {
    std::vector<NodeId> stuck;
    for (const auto& [id, deg] : indegree)
      if (deg > 0) stuck.push_back(id);
    throw Error("cycle", fmt::format("cycle through nodes {}", fmt::join(stuck, ",")));
  }
  return order;
}

std::size_t count_kind(const DataflowGraph& g, OperatorKind kind) {
  std::size_t n = 0;
  for (const auto& [id, node] : g.nodes())
    if (node.kind == kind) ++n;
  return n;
}

namespace {

struct Arity {
  int min_inputs;
  int max_inputs;  // -1: unbounded
  int min_outputs;
  int max_outputs;
};

Arity arity_of(const OperatorNode& n) {
  switch (n.kind) {
    case OperatorKind::Input:
    case OperatorKind::Load:
      return {0, 0, 1, 1};
    case OperatorKind::Output:
    case OperatorKind::Store:
      return {1, 1, 0, 0};
    case OperatorKind::Concat:
      return {2, -1, 1, 1};
    case OperatorKind::Scatter:
      return {1, 1, 1, -1};
    case OperatorKind::Gather:
      return {1, -1, 1, 1};
    default:
      return {1, 1, 1, 1};
  }
}

void add(Diagnostics& out, std::string code, std::string subject, std::string message) {
  out.push_back({Severity::Error, std::move(code), std::move(subject), std::move(message)});
}

// Checks the output spec of a node against its resolved inputs.
void check_shapes(const DataflowGraph& g, const OperatorNode& n, Diagnostics& out) {
  auto producer_names = [&] {
    std::vector<std::string> names;
    for (const auto& e : g.in_edges(n.id)) names.push_back(e.from.node);
    return fmt::format("{}", fmt::join(names, ","));
  };
  auto mismatch = [&](const std::string& what) {
    add(out, "shape-mismatch", producer_names() + "->" + n.id,
        fmt::format("shape mismatch between {} and {}: {}", producer_names(), n.id, what));
  };
  if (n.inputs.empty()) return;
  for (const auto& in : n.inputs)
    if (in.dims.empty()) return;  // dangling, reported elsewhere
  const auto& in0 = n.inputs.front();
  const TensorSpec* out0 = n.outputs.empty() ? nullptr : &n.outputs.front();

  switch (n.kind) {
    case OperatorKind::Linear:
    case OperatorKind::Dense: {
      auto in_f = n.attr_int("in_features");
      auto out_f = n.attr_int("out_features");
      if (in0.dims.back() != in_f)
        mismatch(fmt::format("input {} but in_features={}", dims_str(in0.dims), in_f));
      if (out0) {
        auto expect = in0.dims;
        expect.back() = out_f;
        if (out0->dims.back() != out_f)
          add(out, "features", n.id,
              fmt::format("output last dim {} != out_features {}", out0->dims.back(), out_f));
        else if (out0->dims != expect)
          mismatch(fmt::format("output {} expected {}", dims_str(out0->dims), dims_str(expect)));
      }
      break;
    }
    case OperatorKind::ReLU:
    case OperatorKind::Retile:
    case OperatorKind::Output:
    case OperatorKind::Store: {
      const auto& declared = out0 ? out0->dims : in0.dims;
      if (declared != in0.dims)
        mismatch(fmt::format("input {} output {}", dims_str(in0.dims), dims_str(declared)));
      break;
    }
    case OperatorKind::Concat: {
      auto rank = static_cast<std::int64_t>(in0.dims.size());
      auto axis = n.attr_int("axis", -1);
      if (axis < 0) axis += rank;
      if (axis < 0 || axis >= rank) {
        add(out, "attrs", n.id, "concat axis out of range");
        break;
      }
      auto expect = in0.dims;
      expect[static_cast<std::size_t>(axis)] = 0;
      bool ok = true;
      for (const auto& in : n.inputs) {
        if (in.dims.size() != in0.dims.size()) { ok = false; break; }
        for (std::size_t d = 0; d < in.dims.size(); ++d) {
          if (static_cast<std::int64_t>(d) == axis) expect[d] += in.dims[d];
          else if (in.dims[d] != in0.dims[d]) ok = false;
        }
      }
      if (!ok) mismatch("concat inputs disagree outside the concat axis");
      else if (out0 && out0->dims != expect)
        mismatch(fmt::format("concat output {} expected {}", dims_str(out0->dims), dims_str(expect)));
      break;
    }
    case OperatorKind::GravNetConv: {
      if (out0 && (out0->dims.size() != in0.dims.size() || out0->dims.front() != in0.dims.front() ||
                   out0->dims.back() != n.attr_int("out_features")))
        mismatch(fmt::format("input {} output {} out_features={}", dims_str(in0.dims),
                             dims_str(out0->dims), n.attr_int("out_features")));
      if (n.attrs.contains("in_features") && in0.dims.back() != n.attr_int("in_features"))
        mismatch(fmt::format("input {} but in_features={}", dims_str(in0.dims), n.attr_int("in_features")));
      break;
    }
    case OperatorKind::CPS: {
      if (out0 && out0->dims.front() != in0.dims.front())
        mismatch("CPS must preserve the spatial extent");
      else if (out0 && n.attrs.contains("out_features") && out0->dims.back() != n.attr_int("out_features"))
        mismatch(fmt::format("output {} but out_features={}", dims_str(out0->dims), n.attr_int("out_features")));
      if (n.attrs.contains("in_features") && in0.dims.back() != n.attr_int("in_features"))
        mismatch(fmt::format("input {} but in_features={}", dims_str(in0.dims), n.attr_int("in_features")));
      break;
    }
    case OperatorKind::Scatter: {
      std::int64_t total = 0;
      for (const auto& o : n.outputs) {
        total += o.dims.front();
        if (o.dims.size() != in0.dims.size() ||
            !std::equal(o.dims.begin() + 1, o.dims.end(), in0.dims.begin() + 1))
          mismatch("scatter slices must keep non-spatial dims");
      }
      if (total != in0.dims.front()) mismatch("scatter slices do not cover the spatial extent");
      break;
    }
    case OperatorKind::Gather: {
      std::int64_t total = 0;
      for (const auto& in : n.inputs) total += in.dims.front();
      if (out0 && out0->dims.front() != total) mismatch("gather output does not cover its slices");
      break;
    }
    default:
      break;
  }
}

}  // namespace

Diagnostics validate_graph(const DataflowGraph& g) {
  Diagnostics out;

  // Interface nodes.
  std::size_t sources = count_kind(g, OperatorKind::Input) + count_kind(g, OperatorKind::Load);
  std::size_t sinks = count_kind(g, OperatorKind::Output) + count_kind(g, OperatorKind::Store);
  if (sources != 1) add(out, "interface", g.name, fmt::format("expected one Input/Load, found {}", sources));
  if (sinks != 1) add(out, "interface", g.name, fmt::format("expected one Output/Store, found {}", sinks));

  // Edge endpoints.
  std::map<Endpoint, int> in_port_use;
  for (const auto& e : g.edges()) {
    if (!g.contains(e.from.node) || !g.contains(e.to.node)) {
      add(out, "dangling-edge", to_string(e), "edge references a missing node");
      continue;
    }
    const auto& src = g.node(e.from.node);
    if (e.from.port < 0 || static_cast<std::size_t>(e.from.port) >= src.outputs.size())
      add(out, "dangling-edge", to_string(e), "producer port out of range");
    if (++in_port_use[e.to] > 1)
      add(out, "port-conflict", to_string(e), "input port driven by more than one edge");
  }

  for (const auto& [id, n] : g.nodes()) {
    auto arity = arity_of(n);
    auto ins = g.in_edges(id);
    int in_count = static_cast<int>(n.inputs.size());
    int out_count = static_cast<int>(n.outputs.size());
    if (in_count < arity.min_inputs || (arity.max_inputs >= 0 && in_count > arity.max_inputs))
      add(out, "arity", id, fmt::format("{} has {} inputs", to_string(n.kind), in_count));
    if (out_count < arity.min_outputs || (arity.max_outputs >= 0 && out_count > arity.max_outputs))
      add(out, "arity", id, fmt::format("{} has {} outputs", to_string(n.kind), out_count));

    for (int port = 0; port < arity.min_inputs || port < in_count; ++port) {
      bool connected = std::any_of(ins.begin(), ins.end(), [&](const Edge& e) { return e.to.port == port; });
      if (!connected && !is_source(n.kind))
        add(out, "dangling-input", fmt::format("{}:{}", id, port), "input port is not connected");
    }
    if (!is_sink(n.kind) && g.out_edges(id).empty())
      add(out, "no-consumer", id, "node output is never consumed");

    if (n.precision_bits != 8 && n.precision_bits != 16)
      add(out, "precision", id, fmt::format("precision_bits {} not in {{8,16}}", n.precision_bits));
    for (const auto& t : n.outputs) {
      if (t.dims.empty() || std::any_of(t.dims.begin(), t.dims.end(), [](auto d) { return d < 1; }))
        add(out, "dims", id, "tensor dims must be nonempty and positive");
      else if (t.layout.tile_dims.size() != t.dims.size())
        add(out, "layout-rank", id, "layout rank differs from tensor rank");
      else
        for (std::size_t d = 0; d < t.dims.size(); ++d)
          if (t.layout.tile_dims[d] < 1 || t.dims[d] % t.layout.tile_dims[d] != 0)
            add(out, "layout-tile", id, fmt::format("tile extent does not divide dim {}", d));
    }
    check_shapes(g, n, out);
  }

  try {
    (void)topological_order(g);
  } catch (const Error& e) {
    add(out, "cycle", g.name, e.what());
  }
  return out;
}

}  // namespace hetflow
