#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "hetflow/diagnostics.hpp"

namespace hetflow {

using NodeId = std::string;

enum class OperatorKind {
  Input,
  Output,
  Load,
  Store,
  Linear,
  ReLU,
  Dense,
  Concat,
  GravNetConv,
  CPS,
  Retile,
  // Replication boundary adapters inserted by spatial parallelization.
  Scatter,
  Gather,
};

enum class AccessClass { Regular, Irregular, Io };

enum class LayoutOrder { RowMajor, TileMajor };

enum class Platform { FPGA, AIE };

enum class OptMode { Pipelined, Flattened };

AccessClass access_class(OperatorKind kind);

std::string_view to_string(OperatorKind kind);
std::string_view to_string(LayoutOrder order);
std::string_view to_string(Platform platform);
std::string_view to_string(OptMode mode);

std::optional<OperatorKind> parse_kind(std::string_view name);
std::optional<LayoutOrder> parse_layout_order(std::string_view name);

/// Graph sources and sinks. Input/Output before lowering, Load/Store after.
inline bool is_source(OperatorKind k) { return k == OperatorKind::Input || k == OperatorKind::Load; }
inline bool is_sink(OperatorKind k) { return k == OperatorKind::Output || k == OperatorKind::Store; }

struct LayoutSpec {
  std::vector<std::int64_t> tile_dims;
  LayoutOrder order = LayoutOrder::RowMajor;

  /// Row-major layout with unit tiles for a tensor of the given rank.
  static LayoutSpec row_major(std::size_t rank);

  bool operator==(const LayoutSpec&) const = default;
};

struct TensorSpec {
  std::vector<std::int64_t> dims;
  int precision_bits = 8;
  LayoutSpec layout;

  std::int64_t elements() const;
  bool same_shape(const TensorSpec& other) const { return dims == other.dims; }

  bool operator==(const TensorSpec&) const = default;
};

/// Result of template matching: which kernel template implements a node and
/// on which platform it runs.
struct Binding {
  std::string template_name;
  Platform platform = Platform::FPGA;

  bool operator==(const Binding&) const = default;
};

struct OperatorNode {
  NodeId id;
  OperatorKind kind = OperatorKind::Input;
  nlohmann::json attrs = nlohmann::json::object();
  int precision_bits = 8;
  // Layout this node produces and expects on its inputs. Retile accepts any
  // input layout.
  LayoutSpec layout;
  std::vector<TensorSpec> outputs;
  // Resolved from incoming edges; for sinks this is the interface spec.
  std::vector<TensorSpec> inputs;

  // Lowering annotations.
  std::optional<Binding> binding;
  int segment = -1;
  int replica = 0;
  int replicas = 1;
  OptMode mode = OptMode::Pipelined;

  std::int64_t attr_int(const char* key, std::int64_t fallback = 0) const;

  bool operator==(const OperatorNode&) const = default;
};

struct Endpoint {
  NodeId node;
  int port = 0;

  auto operator<=>(const Endpoint&) const = default;
};

struct Edge {
  Endpoint from;
  Endpoint to;

  auto operator<=>(const Edge&) const = default;
};

std::string to_string(const Edge& e);

/// Directed acyclic dataflow graph. Nodes are keyed by id; edges are kept in
/// canonical sorted order so iteration is deterministic.
class DataflowGraph {
 public:
  std::string name = "model";
  std::int64_t spatial_extent = 1;

  const std::map<NodeId, OperatorNode>& nodes() const { return nodes_; }
  const std::set<Edge>& edges() const { return edges_; }

  bool contains(const NodeId& id) const { return nodes_.count(id) != 0; }
  const OperatorNode& node(const NodeId& id) const;
  OperatorNode& node(const NodeId& id);

  void add_node(OperatorNode n);
  /// Removes the node and every edge touching it.
  void remove_node(const NodeId& id);
  void add_edge(Endpoint from, Endpoint to);
  void remove_edge(const Edge& e);

  std::vector<Edge> in_edges(const NodeId& id) const;
  std::vector<Edge> out_edges(const NodeId& id) const;
  std::vector<Edge> out_edges(const NodeId& id, int port) const;
  std::size_t fanout(const NodeId& id, int port) const;

  std::vector<NodeId> predecessors(const NodeId& id) const;
  std::vector<NodeId> successors(const NodeId& id) const;

  /// Returns the single node of the given kind, if exactly one exists.
  std::optional<NodeId> find_unique(OperatorKind kind) const;
  std::optional<NodeId> source() const;
  std::optional<NodeId> sink() const;

  /// Recomputes every node's `inputs` from its incoming edges. Sinks keep
  /// their declared interface spec when unconnected.
  void resolve_inputs();

  /// Fresh id with the given stem that does not collide with existing nodes.
  NodeId unique_id(const std::string& stem) const;

  bool operator==(const DataflowGraph&) const = default;

 private:
  std::map<NodeId, OperatorNode> nodes_;
  std::set<Edge> edges_;
};

/// Deterministic Kahn order; ties broken by ascending node id.
/// Throws Error{"cycle"} when the graph is cyclic.
std::vector<NodeId> topological_order(const DataflowGraph& g);

/// Structural validation. Empty iff every graph invariant holds.
Diagnostics validate_graph(const DataflowGraph& g);

/// Node count by kind, excluding nothing.
std::size_t count_kind(const DataflowGraph& g, OperatorKind kind);

}  // namespace hetflow
