#include "hetflow/model_io.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>

namespace hetflow {

namespace {

using nlohmann::json;

[[noreturn]] void schema_error(const std::string& where, const std::string& what) {
  throw Error("schema", fmt::format("schema violation at {}: {}", where, what));
}

void reject_unknown(const json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!obj.is_object()) schema_error(where, "expected an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : obj.items())
    if (!ok.count(key)) schema_error(where, "unknown field '" + key + "'");
}

const json& require(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) schema_error(where, std::string("missing field '") + key + "'");
  return *it;
}

std::vector<std::int64_t> int_list(const json& j, const std::string& where) {
  if (!j.is_array()) schema_error(where, "expected an array of integers");
  std::vector<std::int64_t> out;
  for (const auto& v : j) {
    if (!v.is_number_integer()) schema_error(where, "expected an integer");
    out.push_back(v.get<std::int64_t>());
  }
  return out;
}

Endpoint endpoint(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_string() || !j[1].is_number_integer())
    schema_error(where, "endpoint must be [id, port]");
  return Endpoint{j[0].get<std::string>(), j[1].get<int>()};
}

OperatorNode parse_node(const json& j, std::size_t index) {
  auto where = fmt::format("nodes[{}]", index);
  reject_unknown(j, {"id", "kind", "attrs", "precision_bits", "output_dims", "layout"}, where);
  OperatorNode n;
  const auto& id = require(j, "id", where);
  if (!id.is_string() || id.get<std::string>().empty()) schema_error(where, "id must be a nonempty string");
  n.id = id.get<std::string>();
  where = "node '" + n.id + "'";

  const auto& kind = require(j, "kind", where);
  if (!kind.is_string()) schema_error(where, "kind must be a string");
  auto k = parse_kind(kind.get<std::string>());
  if (!k || *k == OperatorKind::Scatter || *k == OperatorKind::Gather)
    schema_error(where, "unknown kind '" + kind.get<std::string>() + "'");
  n.kind = *k;

  if (auto it = j.find("attrs"); it != j.end()) {
    if (!it->is_object()) schema_error(where, "attrs must be an object");
    n.attrs = *it;
  }
  const auto& prec = require(j, "precision_bits", where);
  if (!prec.is_number_integer()) schema_error(where, "precision_bits must be an integer");
  n.precision_bits = prec.get<int>();

  auto dims = int_list(require(j, "output_dims", where), where + ".output_dims");
  n.layout = LayoutSpec::row_major(dims.size());
  if (auto it = j.find("layout"); it != j.end()) {
    reject_unknown(*it, {"tile_dims", "order"}, where + ".layout");
    n.layout.tile_dims = int_list(require(*it, "tile_dims", where), where + ".layout.tile_dims");
    const auto& order = require(*it, "order", where + ".layout");
    auto o = order.is_string() ? parse_layout_order(order.get<std::string>()) : std::nullopt;
    if (!o) schema_error(where + ".layout", "order must be row_major or tile_major");
    n.layout.order = *o;
  }

  TensorSpec spec{dims, n.precision_bits, n.layout};
  if (is_sink(n.kind)) n.inputs.push_back(spec);
  else n.outputs.push_back(spec);
  return n;
}

}  // namespace

DataflowGraph load_model(std::string_view model_text) {
  json doc;
  try {
    doc = json::parse(model_text);
  } catch (const json::parse_error& e) {
    throw Error("schema", std::string("model is not valid JSON: ") + e.what());
  }
  reject_unknown(doc, {"name", "spatial_extent", "nodes", "edges"}, "model");

  DataflowGraph g;
  const auto& name = require(doc, "name", "model");
  if (!name.is_string()) schema_error("model", "name must be a string");
  g.name = name.get<std::string>();
  const auto& extent = require(doc, "spatial_extent", "model");
  if (!extent.is_number_integer() || extent.get<std::int64_t>() < 1)
    schema_error("model", "spatial_extent must be a positive integer");
  g.spatial_extent = extent.get<std::int64_t>();

  const auto& nodes = require(doc, "nodes", "model");
  if (!nodes.is_array()) schema_error("model", "nodes must be an array");
  std::map<NodeId, TensorSpec> declared_sinks;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    auto n = parse_node(nodes[i], i);
    if (is_sink(n.kind)) declared_sinks.emplace(n.id, n.inputs.front());
    try {
      g.add_node(std::move(n));
    } catch (const Error& e) {
      throw Error("schema", e.what());
    }
  }

  const auto& edges = require(doc, "edges", "model");
  if (!edges.is_array()) schema_error("model", "edges must be an array");
  for (std::size_t i = 0; i < edges.size(); ++i) {
    auto where = fmt::format("edges[{}]", i);
    reject_unknown(edges[i], {"from", "to"}, where);
    auto from = endpoint(require(edges[i], "from", where), where + ".from");
    auto to = endpoint(require(edges[i], "to", where), where + ".to");
    if (!g.contains(from.node) || !g.contains(to.node))
      throw Error("dangling-edge",
                  fmt::format("edge {}:{}->{}:{} references a missing node", from.node, from.port,
                              to.node, to.port));
    g.add_edge(from, to);
  }
  g.resolve_inputs();

  for (const auto& [id, declared] : declared_sinks) {
    const auto& n = g.node(id);
    if (!n.inputs.empty() && !n.inputs.front().dims.empty() && n.inputs.front().dims != declared.dims) {
      auto producers = g.predecessors(id);
      throw Error("shape-mismatch",
                  fmt::format("shape mismatch between {} and {}: declared {} dims differ from producer",
                              producers.empty() ? "?" : producers.front(), id, to_string(n.kind)));
    }
  }

  auto diags = validate_graph(g);
  if (!diags.empty()) {
    std::ostringstream msg;
    for (const auto& d : diags) msg << to_string(d) << "\n";
    throw Error(diags.front().code, msg.str());
  }
  return g;
}

DataflowGraph load_model_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("model-not-found", "cannot open model file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return load_model(buf.str());
}

namespace {

json node_json(const OperatorNode& n) {
  json j;
  j["id"] = n.id;
  j["kind"] = std::string(to_string(n.kind));
  j["attrs"] = n.attrs;
  j["precision_bits"] = n.precision_bits;
  const auto& spec = is_sink(n.kind) ? n.inputs.front() : n.outputs.front();
  j["output_dims"] = spec.dims;
  j["layout"] = {{"tile_dims", n.layout.tile_dims}, {"order", std::string(to_string(n.layout.order))}};
  return j;
}

json edges_json(const DataflowGraph& g) {
  json edges = json::array();
  for (const auto& e : g.edges())
    edges.push_back({{"from", {e.from.node, e.from.port}}, {"to", {e.to.node, e.to.port}}});
  return edges;
}

}  // namespace

std::string serialize_model(const DataflowGraph& g) {
  json doc;
  doc["name"] = g.name;
  doc["spatial_extent"] = g.spatial_extent;
  doc["nodes"] = json::array();
  for (const auto& id : topological_order(g)) doc["nodes"].push_back(node_json(g.node(id)));
  doc["edges"] = edges_json(g);
  return doc.dump(2) + "\n";
}

json dump_graph(const DataflowGraph& g) {
  json doc;
  doc["name"] = g.name;
  doc["spatial_extent"] = g.spatial_extent;
  doc["nodes"] = json::array();
  for (const auto& [id, n] : g.nodes()) {
    json j;
    j["id"] = id;
    j["kind"] = std::string(to_string(n.kind));
    j["attrs"] = n.attrs;
    j["precision_bits"] = n.precision_bits;
    j["layout"] = {{"tile_dims", n.layout.tile_dims}, {"order", std::string(to_string(n.layout.order))}};
    j["outputs"] = json::array();
    for (const auto& o : n.outputs) j["outputs"].push_back(o.dims);
    if (n.binding)
      j["binding"] = {{"template", n.binding->template_name},
                      {"platform", std::string(to_string(n.binding->platform))}};
    j["segment"] = n.segment;
    j["replica"] = n.replica;
    j["replicas"] = n.replicas;
    j["mode"] = std::string(to_string(n.mode));
    doc["nodes"].push_back(std::move(j));
  }
  doc["edges"] = edges_json(g);
  return doc;
}

}  // namespace hetflow
