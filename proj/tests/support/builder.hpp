#pragma once

#include <random>
#include <string>
#include <vector>

#include "hetflow/graph.hpp"
#include "hetflow/target.hpp"

namespace hetflow::testing {

std::string data_path(const std::string& rel);
const TargetDescription& vck190();
DataflowGraph reference_model();

/// Fluent construction of [S, F] feature graphs. Every node gets a row-major
/// layout with unit tiles unless overridden.
class GraphBuilder {
 public:
  explicit GraphBuilder(std::int64_t extent = 128, std::string name = "test");

  GraphBuilder& input(const NodeId& id, std::int64_t features, int bits = 16);
  GraphBuilder& linear(const NodeId& id, const NodeId& from, std::int64_t out_features);
  GraphBuilder& relu(const NodeId& id, const NodeId& from);
  GraphBuilder& dense(const NodeId& id, const NodeId& from, std::int64_t out_features);
  GraphBuilder& concat(const NodeId& id, const std::vector<NodeId>& from);
  GraphBuilder& gravnet(const NodeId& id, const NodeId& from, std::int64_t out_features, int k = 4);
  GraphBuilder& cps(const NodeId& id, const NodeId& from, std::int64_t out_features);
  GraphBuilder& output(const NodeId& id, const NodeId& from);

  /// Overrides the layout a node produces and expects.
  GraphBuilder& layout(const NodeId& id, LayoutSpec l);

  std::int64_t features(const NodeId& id) const;
  DataflowGraph build() const;

 private:
  OperatorNode& add(const NodeId& id, OperatorKind kind, std::int64_t features);
  void connect(const NodeId& from, const NodeId& to, int port = 0);

  DataflowGraph g_;
};

/// Random valid graph: Input -> random mix of Linear, ReLU, Linear->ReLU
/// pairs, parallel Linear branches joined by Concat, GravNetConv, CPS ->
/// Output. `fusable_pairs`, if given, receives the number of Linear nodes
/// whose single consumer is a ReLU.
DataflowGraph random_graph(std::mt19937_64& rng, std::size_t* fusable_pairs = nullptr);

/// Random chain of Linear/ReLU layers framed by io nodes.
DataflowGraph random_chain(std::mt19937_64& rng, int min_layers, int max_layers);

}  // namespace hetflow::testing
