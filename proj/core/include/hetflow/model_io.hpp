#pragma once

#include <string>
#include <string_view>

#include "hetflow/graph.hpp"

namespace hetflow {

/// Parses a model-description document (JSON) into a validated graph.
///
/// Schema, field names normative, unknown fields rejected:
///   {name, spatial_extent,
///    nodes: [{id, kind, attrs{...}, precision_bits, output_dims[],
///             layout{tile_dims[], order}}],
///    edges: [{from: [id, port], to: [id, port]}]}
///
/// `layout` is optional and defaults to row_major with unit tiles. For
/// Output nodes `output_dims` is the interface shape and must match the
/// producer. Throws Error with code "schema", "dangling-edge" or
/// "shape-mismatch" (or any other validation code) naming the offending ids.
DataflowGraph load_model(std::string_view model_text);
DataflowGraph load_model_file(const std::string& path);

/// Inverse of load_model for unannotated graphs.
std::string serialize_model(const DataflowGraph& g);

/// Full dump including lowering annotations (bindings, segments, replicas,
/// modes). Used for determinism checks and the explain command.
nlohmann::json dump_graph(const DataflowGraph& g);

}  // namespace hetflow
