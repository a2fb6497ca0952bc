#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "builder.hpp"
#include "hetflow/cost_model.hpp"
#include "hetflow/emitter.hpp"
#include "hetflow/passes.hpp"

using namespace hetflow;
using hetflow::testing::reference_model;
using hetflow::testing::vck190;

namespace {

const DesignPoint& design(const std::string& name) {
  static std::map<std::string, DesignPoint> cache;
  auto it = cache.find(name);
  if (it == cache.end())
    it = cache.emplace(name, run_pipeline(reference_model(), PassPipeline::named(name), vck190())).first;
  return it->second;
}

std::size_t count_kind(const std::vector<EmittedArtifact>& arts, ArtifactKind k) {
  return static_cast<std::size_t>(
      std::count_if(arts.begin(), arts.end(), [&](const auto& a) { return a.kind == k; }));
}

const EmittedArtifact& find(const std::vector<EmittedArtifact>& arts, const std::string& path) {
  for (const auto& a : arts)
    if (a.path == path) return a;
  FAIL("missing artifact " << path);
  throw 0;
}

}  // namespace

TEST_CASE("sha256 known vectors") {
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("one stub per mapped node") {
  for (const char* name : {"design1", "design2", "design3"}) {
    const auto& d = design(name);
    auto arts = generate_sources(d, vck190());
    CHECK(count_kind(arts, ArtifactKind::FpgaKernelStub) + count_kind(arts, ArtifactKind::AieKernelStub) ==
          d.mapped_node_count());
    CHECK(count_kind(arts, ArtifactKind::AieGraphManifest) == 1);
    for (std::size_t i = 1; i < arts.size(); ++i) CHECK(arts[i - 1].path < arts[i].path);
    for (const auto& a : arts) CHECK(a.content_hash == sha256_hex(a.content));
  }
}

TEST_CASE("flatten markers follow the optimization mode") {
  auto flat = generate_sources(design("design3"), vck190());
  auto piped = generate_sources(design("design1"), vck190());
  std::size_t aie = 0;
  for (const auto& a : flat) {
    if (a.kind != ArtifactKind::AieKernelStub) continue;
    ++aie;
    CHECK(a.content.find(kFlattenMarker) != std::string::npos);
    CHECK(a.content.find(kPipelineMarker) == std::string::npos);
  }
  CHECK(aie > 0);
  for (const auto& a : piped) {
    CHECK(a.content.find(kFlattenMarker) == std::string::npos);
    if (a.kind == ArtifactKind::AieKernelStub) CHECK(a.content.find(kPipelineMarker) != std::string::npos);
  }
}

TEST_CASE("unlegalized edges are refused") {
  auto d = design("design1");
  d.graph.node("C").layout.tile_dims = {4, 1};
  REQUIRE_FALSE(unlegalized_edges(d.graph).empty());
  try {
    generate_sources(d, vck190());
    FAIL("expected unlegalized-edge");
  } catch (const Error& e) {
    CHECK(e.code() == "unlegalized-edge");
  }
}

TEST_CASE("emission is byte-deterministic") {
  auto a = generate_sources(design("design3"), vck190());
  auto fresh = run_pipeline(reference_model(), PassPipeline::named("design3"), vck190());
  auto b = generate_sources(fresh, vck190());
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].path == b[i].path);
    CHECK(a[i].content_hash == b[i].content_hash);
  }
  auto ra = generate_report(design("design3"), std::nullopt, 1);
  auto rb = generate_report(fresh, std::nullopt, 1);
  CHECK(ra.first.content == rb.first.content);
  CHECK(ra.second.content == rb.second.content);
}

TEST_CASE("manifest totals agree with the cost model") {
  for (const char* name : {"design1", "design3"}) {
    const auto& d = design(name);
    auto arts = generate_sources(d, vck190());
    auto m = nlohmann::json::parse(find(arts, "manifest.json").content);
    const auto& totals = m["aie"]["totals"];
    CHECK(totals["tiles"].get<std::int64_t>() == d.resources->aie_tiles.abs);
    CHECK(totals["compute_tiles"].get<std::int64_t>() == d.resources->aie_compute_tiles.abs);
    CHECK(totals["buffers"].get<std::int64_t>() == d.resources->aie_memory_buffers.abs);
    std::int64_t demand = 0;
    for (const auto& [id, n] : d.graph.nodes())
      if (n.binding && n.binding->platform == Platform::AIE) demand += buffer_demand(d.graph, id);
    CHECK(totals["buffers"].get<std::int64_t>() == demand);
    std::set<std::pair<int, int>> coords;
    std::size_t placed = 0;
    for (const auto& k : m["aie"]["kernels"])
      for (const char* key : {"compute_tiles", "buffer_tiles"})
        for (const auto& c : k[key]) {
          CHECK(c[1].get<int>() < 8);
          coords.insert({c[0].get<int>(), c[1].get<int>()});
          ++placed;
        }
    CHECK(coords.size() == placed);
  }
}

TEST_CASE("report rounding and schema") {
  CHECK(round_to_decimals(7.15002, 1) == doctest::Approx(7.2));
  CHECK(round_to_decimals(7.14, 1) == doctest::Approx(7.1));
  CHECK(round_significant(2941176.47, 3) == doctest::Approx(2.94e6));
  CHECK(round_significant(0.0, 3) == 0.0);

  auto j = report_json(design("design3"), std::nullopt, 42);
  CHECK(j["seed"] == 42);
  CHECK(j["performance"]["latency_us"].get<double>() == doctest::Approx(7.2));
  CHECK(j["performance"]["latency_ps"] == 7150020);
  CHECK(j["performance"]["throughput_eps"].get<double>() == doctest::Approx(2.94e6));
  CHECK(j["resources"]["dsp"]["abs"] == 372);
  CHECK(j["resources"]["dsp"]["percent"] == 19);
  for (const auto& [key, v] : j["resources"].items()) {
    CHECK(v["abs"].is_number_integer());
    CHECK(v["percent"].is_number_integer());
  }
  CHECK_FALSE(j.contains("simulation"));
}

TEST_CASE("design 2 and 3 share a byte-identical resources section") {
  auto r2 = report_json(design("design2"), std::nullopt, 0)["resources"].dump();
  auto r3 = report_json(design("design3"), std::nullopt, 0)["resources"].dump();
  CHECK(r2 == r3);
  auto p2 = report_json(design("design2"), std::nullopt, 0)["performance"].dump();
  auto p3 = report_json(design("design3"), std::nullopt, 0)["performance"].dump();
  CHECK(p2 != p3);
}

TEST_CASE("an unevaluated design reports all-zero rows") {
  DesignPoint empty;
  empty.name = "empty";
  auto j = report_json(empty, std::nullopt, 0);
  for (const auto& [key, v] : j["resources"].items()) {
    CHECK(v["abs"] == 0);
    CHECK(v["percent"] == 0);
  }
  CHECK(j["performance"]["throughput_eps"] == 0);
  auto text = report_text(empty, std::nullopt, 0);
  CHECK_FALSE(text.empty());
}

TEST_CASE("text report lists every column") {
  auto text = report_text(design("design2"), std::nullopt, 0);
  for (const char* col : {"ff", "lut", "dsp", "bram", "tiles", "compute", "memory"})
    CHECK(text.find(col) != std::string::npos);
  CHECK(text.find("372") != std::string::npos);
}

TEST_CASE("artifacts land on disk with matching hashes") {
  auto dir = std::filesystem::temp_directory_path() / "hetflow_emitter_test";
  std::filesystem::remove_all(dir);
  auto arts = emit_sources(design("design3"), vck190(), dir);
  auto rep = emit_report(design("design3"), std::nullopt, 0, dir);
  arts.push_back(rep.first);
  arts.push_back(rep.second);
  for (const auto& a : arts) {
    std::ifstream in(dir / a.path, std::ios::binary);
    REQUIRE(in);
    std::stringstream ss;
    ss << in.rdbuf();
    CHECK(sha256_hex(ss.str()) == a.content_hash);
  }
  std::filesystem::remove_all(dir);
  CHECK_THROWS_AS(write_artifacts(arts, "/proc/definitely/not/writable"), Error);
}
