#include "hetflow/emitter.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>

#include <fmt/format.h>
#include <fmt/ranges.h>
#include <openssl/evp.h>

#include "hetflow/cost_model.hpp"
#include "hetflow/passes.hpp"

namespace hetflow {

std::string_view to_string(ArtifactKind k) {
  switch (k) {
    case ArtifactKind::FpgaKernelStub: return "fpga_kernel_stub";
    case ArtifactKind::AieKernelStub: return "aie_kernel_stub";
    case ArtifactKind::AieGraphManifest: return "aie_graph_manifest";
    case ArtifactKind::ReportTable: return "report_table";
    case ArtifactKind::ReportJson: return "report_json";
  }
  return "?";
}

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw Error("hash-failed", "SHA-256 computation failed");
  std::string hex;
  hex.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", digest[i]);
  return hex;
}

double round_to_decimals(double v, int decimals) {
  double f = std::pow(10.0, decimals);
  return std::round(v * f) / f;
}

double round_significant(double v, int digits) {
  if (v == 0 || !std::isfinite(v)) return v;
  int mag = static_cast<int>(std::floor(std::log10(std::fabs(v))));
  return round_to_decimals(v, digits - 1 - mag);
}

namespace {

EmittedArtifact make_artifact(std::string path, ArtifactKind kind, std::string content) {
  EmittedArtifact a{std::move(path), kind, std::move(content), {}};
  a.content_hash = sha256_hex(a.content);
  return a;
}

std::string template_suffix(const Binding& b) {
  auto dot = b.template_name.rfind('.');
  return dot == std::string::npos ? b.template_name : b.template_name.substr(dot + 1);
}

std::string kernel_name(const OperatorNode& n) {
  std::string name = fmt::format("s{}_{}_{}", n.segment, n.id, template_suffix(*n.binding));
  std::replace_if(name.begin(), name.end(), [](char c) { return !std::isalnum(static_cast<unsigned char>(c)); }, '_');
  return name;
}

std::string dims_text(const std::vector<std::int64_t>& dims) { return fmt::format("{}", fmt::join(dims, "x")); }

std::string fpga_stub(const DataflowGraph& g, const OperatorNode& n, const KernelCost& cost) {
  std::string ports;
  auto elem = fmt::format("ap_int<{}>", n.precision_bits);
  for (std::size_t i = 0; i < n.inputs.size(); ++i)
    ports += fmt::format("{}hls::stream<{}>& in{}", ports.empty() ? "" : ", ", elem, i);
  for (std::size_t i = 0; i < n.outputs.size(); ++i)
    ports += fmt::format("{}hls::stream<{}>& out{}", ports.empty() ? "" : ", ", elem, i);

  std::string out;
  out += fmt::format("// {} ({}) on FPGA, template {}\n", n.id, to_string(n.kind), n.binding->template_name);
  out += "#include <ap_int.h>\n#include <hls_stream.h>\n\n";
  for (std::size_t i = 0; i < n.inputs.size(); ++i)
    out += fmt::format("// in{}: {}\n", i, dims_text(n.inputs[i].dims));
  for (std::size_t i = 0; i < n.outputs.size(); ++i)
    out += fmt::format("// out{}: {}\n", i, dims_text(n.outputs[i].dims));
  if (n.replicas > 1) out += fmt::format("// replica {} of {}\n", n.replica, n.replicas);
  if (!n.attrs.empty()) out += fmt::format("// attrs: {}\n", n.attrs.dump());
  out += fmt::format("\nvoid {}({}) {{\n", kernel_name(n), ports);
  for (std::size_t i = 0; i < n.inputs.size(); ++i) out += fmt::format("#pragma HLS INTERFACE axis port=in{}\n", i);
  for (std::size_t i = 0; i < n.outputs.size(); ++i) out += fmt::format("#pragma HLS INTERFACE axis port=out{}\n", i);
  out += fmt::format("#pragma HLS PIPELINE II={}\n", cost.ii_cycles);
  out += fmt::format("  // expected latency {} cycles\n}}\n", cost.latency_cycles);
  (void)g;
  return out;
}

std::string aie_stub(const OperatorNode& n, const KernelCost& cost, const TargetDescription& t) {
  auto elem = fmt::format("int{}", n.precision_bits);
  std::string ports;
  for (std::size_t i = 0; i < n.inputs.size(); ++i)
    ports += fmt::format("{}input_window<{}>* in{}", ports.empty() ? "" : ", ", elem, i);
  for (std::size_t i = 0; i < n.outputs.size(); ++i)
    ports += fmt::format("{}output_window<{}>* out{}", ports.empty() ? "" : ", ", elem, i);
  auto lanes = static_cast<int>(t.lanes(n.precision_bits));
  bool flat = n.mode == OptMode::Flattened;

  std::string out;
  out += fmt::format("// {} ({}) on AIE, template {}\n", n.id, to_string(n.kind), n.binding->template_name);
  out += "#include <adf.h>\n#include <aie_api/aie.hpp>\n\n";
  for (std::size_t i = 0; i < n.inputs.size(); ++i)
    out += fmt::format("constexpr int kIn{}Elems = {};  // {}\n", i, n.inputs[i].elements(), dims_text(n.inputs[i].dims));
  for (std::size_t i = 0; i < n.outputs.size(); ++i)
    out += fmt::format("constexpr int kOut{}Elems = {};  // {}\n", i, n.outputs[i].elements(),
                       dims_text(n.outputs[i].dims));
  out += fmt::format("constexpr int kLanes = {};\n", lanes);
  if (n.kind == OperatorKind::Dense || n.kind == OperatorKind::Linear)
    out += fmt::format("constexpr int kInFeatures = {};\nconstexpr int kOutFeatures = {};\n",
                       n.attr_int("in_features"), n.attr_int("out_features"));
  out += fmt::format("\nvoid {}({}) {{\n", kernel_name(n), ports);
  out += fmt::format("  // {} cycles per window, program memory {} B\n", cost.latency_cycles,
                     cost.program_memory_bytes);
  out += fmt::format("  for (int i = 0; i < kOut0Elems / kLanes; ++i)\n    {}\n  {{\n", flat ? kFlattenMarker : kPipelineMarker);
  out += "  }\n}\n";
  return out;
}

nlohmann::json manifest(const DesignPoint& d, const TargetDescription& t) {
  const auto& g = d.graph;
  nlohmann::json aie = nlohmann::json::array(), fpga = nlohmann::json::array(), links = nlohmann::json::array();
  std::int64_t next_tile = 0, tiles = 0, compute = 0, buffers = 0;
  const int rows = 8;
  for (const auto& id : topological_order(g)) {
    const auto& n = g.node(id);
    if (!n.binding) continue;
    if (n.binding->platform == Platform::FPGA) {
      fpga.push_back({{"kernel", kernel_name(n)}, {"node", id}, {"segment", n.segment}});
      continue;
    }
    auto use = aie_tile_use(g, id, t);
    auto place = [&](std::int64_t count) {
      nlohmann::json coords = nlohmann::json::array();
      for (std::int64_t i = 0; i < count; ++i, ++next_tile) coords.push_back({next_tile / rows, next_tile % rows});
      return coords;
    };
    auto compute_tiles = place(use.compute_tiles);
    auto buffer_tiles = place(use.buffer_tiles);
    aie.push_back({{"kernel", kernel_name(n)},
                   {"node", id},
                   {"segment", n.segment},
                   {"compute_tiles", compute_tiles},
                   {"buffer_tiles", buffer_tiles},
                   {"buffers", use.buffers}});
    tiles += use.compute_tiles + use.buffer_tiles;
    compute += use.compute_tiles;
    buffers += use.buffers;
  }
  for (const auto& e : g.edges())
    links.push_back({{"from", to_string(e)}, {"plio", transfer_delay_ps(g, e, t) > 0}});
  return {{"design", d.name},
          {"aie", {{"kernels", aie}, {"totals", {{"tiles", tiles}, {"compute_tiles", compute}, {"buffers", buffers}}}}},
          {"fpga", {{"kernels", fpga}}},
          {"connections", links}};
}

}  // namespace

std::vector<EmittedArtifact> generate_sources(const DesignPoint& d, const TargetDescription& target) {
  auto bad = unlegalized_edges(d.graph);
  if (!bad.empty()) {
    std::vector<std::string> names;
    for (const auto& e : bad) names.push_back(to_string(e));
    throw Error("unlegalized-edge", fmt::format("layout mismatch on {}", fmt::join(names, ", ")));
  }
  std::vector<EmittedArtifact> out;
  for (const auto& [id, n] : d.graph.nodes()) {
    if (!n.binding) continue;
    auto cost = estimate_kernel_latency(n, n.binding->platform, n.mode, target);
    if (n.binding->platform == Platform::FPGA)
      out.push_back(make_artifact(fmt::format("kernels/fpga/{}.cpp", kernel_name(n)), ArtifactKind::FpgaKernelStub,
                                  fpga_stub(d.graph, n, cost)));
    else
      out.push_back(make_artifact(fmt::format("kernels/aie/{}.cc", kernel_name(n)), ArtifactKind::AieKernelStub,
                                  aie_stub(n, cost, target)));
  }
  out.push_back(make_artifact("manifest.json", ArtifactKind::AieGraphManifest, manifest(d, target).dump(2) + "\n"));
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.path < b.path; });
  return out;
}

void write_artifacts(const std::vector<EmittedArtifact>& artifacts, const std::filesystem::path& out_dir) {
  for (const auto& a : artifacts) {
    auto path = out_dir / a.path;
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw Error("write-failed", fmt::format("cannot create {}: {}", path.parent_path().string(), ec.message()));
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    f << a.content;
    if (!f) throw Error("write-failed", fmt::format("cannot write {}", path.string()));
  }
}

std::vector<EmittedArtifact> emit_sources(const DesignPoint& d, const TargetDescription& target,
                                          const std::filesystem::path& out_dir) {
  auto artifacts = generate_sources(d, target);
  write_artifacts(artifacts, out_dir);
  return artifacts;
}

std::pair<EmittedArtifact, EmittedArtifact> emit_report(const DesignPoint& d, const std::optional<SimResult>& sim,
                                                        std::uint64_t seed, const std::filesystem::path& out_dir) {
  auto pair = generate_report(d, sim, seed);
  write_artifacts({pair.first, pair.second}, out_dir);
  return pair;
}

}  // namespace hetflow
