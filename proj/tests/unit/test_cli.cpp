#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "builder.hpp"
#include "cli.hpp"
#include "hetflow/emitter.hpp"

namespace fs = std::filesystem;
using hetflow::testing::data_path;

namespace {

struct Outcome {
  int status;
  std::string out;
  std::string err;
};

Outcome invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "hetflow");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  int status = hetflow::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {status, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("hetflow_cli_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> base(const std::string& cmd, const fs::path& out, const std::string& pipeline = "design3",
                              const std::string& model = "models/reference.model.json") {
  return {cmd,        "--model", data_path(model), "--target", data_path("targets/vck190.target.json"),
          "--pipeline", pipeline, "--out",                    out.string()};
}

// Hash of every regular file below `dir`, keyed by relative path.
std::map<std::string, std::string> tree_hashes(const fs::path& dir) {
  std::map<std::string, std::string> h;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) h[fs::relative(e.path(), dir).string()] = hetflow::sha256_hex(slurp(e.path()));
  return h;
}

}  // namespace

TEST_CASE("compile design3 writes the report and stubs") {
  auto dir = scratch("compile");
  auto r = invoke(base("compile", dir));
  REQUIRE(r.status == 0);
  auto j = nlohmann::json::parse(slurp(dir / "report.json"));
  CHECK(j["performance"]["throughput_eps"].get<double>() == doctest::Approx(2.94e6));
  CHECK(j["resources"]["dsp"]["abs"] == 372);
  CHECK(fs::exists(dir / "manifest.json"));
  CHECK(fs::exists(dir / "report.txt"));
  CHECK_FALSE(fs::is_empty(dir / "kernels" / "aie"));
  CHECK(r.out.find("wrote") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("trivial model under design1 has no compute kernels") {
  auto dir = scratch("trivial");
  auto r = invoke(base("compile", dir, "design1", "models/trivial.model.json"));
  CHECK(r.status == 0);
  auto j = nlohmann::json::parse(slurp(dir / "report.json"));
  CHECK(j["performance"]["kernels"].size() == 2);
  CHECK(j["resources"]["compute"]["abs"] == 0);
  CHECK_FALSE(fs::exists(dir / "kernels" / "aie"));
  fs::remove_all(dir);
}

TEST_CASE("missing inputs exit 1 with a qualified code") {
  auto dir = scratch("missing");
  auto args = base("compile", dir);
  args[4] = (dir / "nope.target.json").string();
  auto r = invoke(args);
  CHECK(r.status == 1);
  CHECK(r.err.find("target-not-found") != std::string::npos);
  CHECK(r.err.find("cost_model") != std::string::npos);

  args = base("compile", dir);
  args[2] = (dir / "nope.model.json").string();
  r = invoke(args);
  CHECK(r.status == 1);
  CHECK(r.err.find("model-not-found") != std::string::npos);

  r = invoke(base("compile", dir, "design9"));
  CHECK(r.status == 1);
  CHECK(r.err.find("unknown-pipeline") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("usage errors exit 2") {
  CHECK(invoke({}).status == 2);
  CHECK(invoke({"frobnicate"}).status == 2);
  CHECK(invoke({"compile", "--no-such-flag"}).status == 2);
  CHECK(invoke({"compile", "--seed", "abc"}).status == 2);
  CHECK(invoke({"--help"}).status == 0);
}

TEST_CASE("simulate asserts order and writes its outputs") {
  auto dir = scratch("simulate");
  auto args = base("simulate", dir);
  for (const char* a : {"--events", "500", "--overdrive", "4", "--mode", "poisson", "--assert-in-order"})
    args.push_back(a);
  auto r = invoke(args);
  CHECK(r.status == 0);
  auto sim = nlohmann::json::parse(slurp(dir / "sim_result.json"));
  CHECK(sim["events"] == 500);
  CHECK(sim["in_order"] == true);
  CHECK(sim["throughput_eps"].get<double>() <= sim["analytic_throughput_eps"].get<double>() * (1 + 1e-9));
  auto rep = nlohmann::json::parse(slurp(dir / "report.json"));
  CHECK(rep.contains("simulation"));
  std::size_t lines = 0;
  std::istringstream trace(slurp(dir / "trace.jsonl"));
  for (std::string l; std::getline(trace, l);) ++lines;
  CHECK(lines > 500);
  fs::remove_all(dir);
}

TEST_CASE("simulate rejects a bad workload with exit 1") {
  auto dir = scratch("badworkload");
  auto args = base("simulate", dir);
  args.insert(args.end(), {"--events", "0"});
  auto r = invoke(args);
  CHECK(r.status == 1);
  CHECK(r.err.find("simulator") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("explain reports per-pass deltas") {
  auto dir = scratch("explain");
  auto r = invoke(base("explain", dir, "design2"));
  REQUIRE(r.status == 0);
  CHECK(r.out.find("fuse_linear_relu: -") != std::string::npos);
  CHECK(r.out.find("7 segments: 4 FPGA, 3 AIE") != std::string::npos);
  CHECK(r.out.find("P_fpga 2, P_aie 4") != std::string::npos);

  fs::create_directories(dir);
  std::ofstream(dir / "identity.run.json") << nlohmann::json{
      {"model", data_path("models/reference.model.json")},
      {"target", data_path("targets/vck190.target.json")},
      {"pipeline", "custom"},
      {"stages", std::vector<std::string>{"partition"}}}.dump();
  r = invoke({"explain", "--config", (dir / "identity.run.json").string()});
  REQUIRE(r.status == 0);
  CHECK(r.out.find("partition: +0 nodes, +0 edges (") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("config file with flag overrides") {
  auto dir = scratch("config");
  fs::create_directories(dir);
  nlohmann::json cfg{{"model", data_path("models/reference.model.json")},
                     {"target", data_path("targets/vck190.target.json")},
                     {"pipeline", "design1"},
                     {"out", "a"},
                     {"seed", 3}};
  std::ofstream(dir / "run.json") << cfg.dump();
  auto r = invoke({"compile", "--config", (dir / "run.json").string()});
  REQUIRE(r.status == 0);
  auto j = nlohmann::json::parse(slurp(dir / "a" / "report.json"));
  CHECK(j["performance"]["design"] == "design1");
  CHECK(j["seed"] == 3);

  r = invoke({"compile", "--config", (dir / "run.json").string(), "--pipeline", "design3", "--out",
              (dir / "b").string()});
  REQUIRE(r.status == 0);
  j = nlohmann::json::parse(slurp(dir / "b" / "report.json"));
  CHECK(j["performance"]["design"] == "design3");

  std::ofstream(dir / "bad.json") << R"({"model": "m.json", "colour": "red"})";
  r = invoke({"compile", "--config", (dir / "bad.json").string()});
  CHECK(r.status == 1);
  CHECK(r.err.find("colour") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("repeated compiles produce identical hashes") {
  auto a = scratch("hash_a"), b = scratch("hash_b");
  REQUIRE(invoke(base("compile", a)).status == 0);
  REQUIRE(invoke(base("compile", b)).status == 0);
  auto ha = tree_hashes(a), hb = tree_hashes(b);
  CHECK(ha.size() > 3);
  CHECK(ha == hb);
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("strict turns error diagnostics into exit 1") {
  auto dir = scratch("strict");
  // design1 misses a 2e6 goal, which is an error diagnostic.
  fs::create_directories(dir);
  auto target = nlohmann::json::parse(slurp(data_path("targets/vck190.target.json")));
  target["constraints"]["throughput_goal_eps"] = 2e6;
  std::ofstream(dir / "fast.target.json") << target.dump();
  auto args = base("compile", dir / "out", "design1");
  args[4] = (dir / "fast.target.json").string();
  CHECK(invoke(args).status == 0);
  args.push_back("--strict");
  auto r = invoke(args);
  CHECK(r.status == 1);
  CHECK(r.out.find("throughput") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("goal search picks the minimal parallelism") {
  auto dir = scratch("goal");
  auto args = base("report", dir);
  args.insert(args.end(), {"--goal", "2e6", "--p-max", "8"});
  auto r = invoke(args);
  REQUIRE(r.status == 0);
  CHECK(r.out.find("P_fpga 2 P_aie 4") != std::string::npos);

  args = base("report", dir);
  args.insert(args.end(), {"--goal", "1e9", "--p-max", "4"});
  r = invoke(args);
  CHECK(r.status == 1);
  CHECK(r.err.find("best") != std::string::npos);
  fs::remove_all(dir);
}
