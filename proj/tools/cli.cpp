#include "cli.hpp"

#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ostream.h>
#include <nlohmann/json.hpp>

#include "hetflow/cost_model.hpp"
#include "hetflow/emitter.hpp"
#include "hetflow/model_io.hpp"

namespace hetflow::cli {

using nlohmann::json;

namespace {

OptMode parse_mode(const std::string& s) {
  if (s == "pipelined") return OptMode::Pipelined;
  if (s == "flattened") return OptMode::Flattened;
  throw Error("config", fmt::format("unknown mode '{}'", s));
}

void reject_unknown(const json& obj, std::initializer_list<const char*> allowed, const char* where) {
  for (const auto& [key, v] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw Error("config", fmt::format("unknown field '{}' in {}", key, where));
  }
}

// Re-labels upstream errors with the module that raised them.
template <class F>
auto in_module(const char* module, F&& f) {
  try {
    return f();
  } catch (const InfeasibleError&) {
    throw;
  } catch (const Error& e) {
    throw Error(e.code(), fmt::format("{}: {}", module, e.what()));
  }
}

}  // namespace

RunConfig parse_run_config(const std::string& text, const std::filesystem::path& base_dir) {
  RunConfig cfg;
  try {
    auto doc = json::parse(text);
    if (!doc.is_object()) throw Error("config", "run configuration must be an object");
    reject_unknown(doc,
                   {"model", "target", "pipeline", "stages", "p_fpga", "p_aie", "mode", "search", "workload", "out",
                    "seed", "strict", "assert_in_order"},
                   "run config");
    auto path = [&](const char* key) { return base_dir / doc.at(key).get<std::string>(); };
    if (doc.contains("model")) cfg.model_path = path("model");
    if (doc.contains("target")) cfg.target_path = path("target");
    if (doc.contains("out")) cfg.out_dir = path("out");
    if (doc.contains("pipeline")) cfg.pipeline = doc["pipeline"].get<std::string>();
    if (doc.contains("stages")) cfg.stages = doc["stages"].get<std::vector<std::string>>();
    if (doc.contains("p_fpga")) cfg.p_fpga = doc["p_fpga"].get<int>();
    if (doc.contains("p_aie")) cfg.p_aie = doc["p_aie"].get<int>();
    if (doc.contains("mode")) cfg.mode = parse_mode(doc["mode"].get<std::string>());
    if (doc.contains("seed")) cfg.seed = doc["seed"].get<std::uint64_t>();
    if (doc.contains("strict")) cfg.strict = doc["strict"].get<bool>();
    if (doc.contains("assert_in_order")) cfg.assert_in_order = doc["assert_in_order"].get<bool>();
    if (doc.contains("search")) {
      const auto& s = doc["search"];
      reject_unknown(s, {"throughput_goal_eps", "p_max"}, "search");
      SearchSpec spec;
      if (s.contains("throughput_goal_eps")) spec.throughput_goal_eps = s["throughput_goal_eps"].get<double>();
      if (s.contains("p_max")) spec.p_max = s["p_max"].get<int>();
      spec.validate();
      cfg.search = spec;
    }
    if (doc.contains("workload")) {
      const auto& w = doc["workload"];
      reject_unknown(w, {"events", "rate_eps", "overdrive", "mode", "buffer_depth"}, "workload");
      WorkloadSpec spec;
      if (w.contains("events")) spec.events = w["events"].get<std::int64_t>();
      if (w.contains("rate_eps")) spec.rate_eps = w["rate_eps"].get<double>();
      if (w.contains("overdrive")) spec.overdrive = w["overdrive"].get<double>();
      if (w.contains("mode")) spec.mode = parse_workload_mode(w["mode"].get<std::string>());
      if (w.contains("buffer_depth")) spec.buffer_depth = w["buffer_depth"].get<int>();
      cfg.workload = spec;
    }
  } catch (const json::exception& e) {
    throw Error("config", std::string("invalid run configuration: ") + e.what());
  }
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw Error("config-not-found", fmt::format("cannot open run configuration '{}'", path.string()));
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_run_config(ss.str(), path.parent_path());
}

PassPipeline pipeline_for(const RunConfig& cfg) {
  if (cfg.pipeline != "custom") return PassPipeline::named(cfg.pipeline);
  PassPipeline p;
  for (const auto& name : cfg.stages) {
    auto s = parse_stage(name);
    if (!s) throw Error("unknown-stage", fmt::format("unknown stage '{}'", name));
    p.stages.push_back(*s);
  }
  p.p_fpga = cfg.p_fpga;
  p.p_aie = cfg.p_aie;
  p.mode = cfg.mode;
  return p;
}

namespace {

struct Loaded {
  DataflowGraph graph;
  TargetDescription target;
};

Loaded load_inputs(const RunConfig& cfg) {
  if (cfg.model_path.empty()) throw Error("config", "no model given (--model)");
  if (cfg.target_path.empty()) throw Error("config", "no target given (--target)");
  Loaded in;
  in.graph = in_module("graph_ir", [&] { return load_model_file(cfg.model_path.string()); });
  in.target = in_module("cost_model", [&] { return load_target_file(cfg.target_path.string()); });
  return in;
}

DesignPoint build_design(const RunConfig& cfg, const Loaded& in, std::ostream& out) {
  auto pipeline = in_module("passes", [&] { return pipeline_for(cfg); });
  if (!cfg.search) return in_module("passes", [&] { return run_pipeline(in.graph, pipeline, in.target); });
  auto result = in_module("dse", [&] { return find_min_parallelization(in.graph, in.target, *cfg.search, pipeline.mode); });
  fmt::print(out, "dse: goal {:.4g} eps -> P_fpga {} P_aie {}\n", cfg.search->throughput_goal_eps, result.p_fpga,
             result.p_aie);
  return result.design;
}

Diagnostics all_diagnostics(const DesignPoint& d, const TargetDescription& t) {
  Diagnostics out;
  if (d.resources) out = d.resources->diagnostics;
  if (d.performance)
    for (auto& x : check_requirements(*d.performance, t)) out.push_back(std::move(x));
  for (auto& x : check_buffer_constraint(d, t)) out.push_back(std::move(x));
  return out;
}

int strict_status(const RunConfig& cfg, const Diagnostics& diags, std::ostream& out) {
  for (const auto& x : diags) fmt::print(out, "{}\n", to_string(x));
  return cfg.strict && has_errors(diags) ? 1 : 0;
}

}  // namespace

int cmd_compile(const RunConfig& cfg, std::ostream& out) {
  auto in = load_inputs(cfg);
  auto d = build_design(cfg, in, out);
  auto sources = in_module("emitter", [&] { return emit_sources(d, in.target, cfg.out_dir); });
  auto report = in_module("emitter", [&] { return emit_report(d, std::nullopt, cfg.seed, cfg.out_dir); });
  sources.push_back(report.first);
  sources.push_back(report.second);
  out << report.second.content;
  fmt::print(out, "\nwrote {} artifacts to {}\n", sources.size(), cfg.out_dir.string());
  return strict_status(cfg, all_diagnostics(d, in.target), out);
}

int cmd_report(const RunConfig& cfg, std::ostream& out) {
  auto in = load_inputs(cfg);
  auto d = build_design(cfg, in, out);
  auto report = in_module("emitter", [&] { return emit_report(d, std::nullopt, cfg.seed, cfg.out_dir); });
  out << report.second.content;
  return strict_status(cfg, all_diagnostics(d, in.target), out);
}

int cmd_simulate(const RunConfig& cfg, std::ostream& out) {
  auto in = load_inputs(cfg);
  auto d = build_design(cfg, in, out);
  auto w = cfg.workload.value_or(WorkloadSpec{});
  double rate = w.rate_eps.value_or(d.performance->throughput_eps * w.overdrive);
  auto events = in_module("simulator", [&] { return generate_events(w.events, rate, cfg.seed, w.mode, in.graph.spatial_extent); });
  SimOptions opt;
  opt.buffer_depth = w.buffer_depth;
  auto [trace, result] = in_module("simulator", [&] { return simulate(d, events, in.target, opt); });

  std::error_code ec;
  std::filesystem::create_directories(cfg.out_dir, ec);
  {
    std::ofstream f(cfg.out_dir / "trace.jsonl", std::ios::binary | std::ios::trunc);
    write_trace_jsonl(trace, f);
    if (!f) throw Error("write-failed", "simulator: cannot write trace.jsonl");
  }
  auto report = in_module("emitter", [&] { return emit_report(d, result, cfg.seed, cfg.out_dir); });
  json sim{{"seed", cfg.seed},
           {"rate_eps", rate},
           {"events", result.events},
           {"mean_latency_s", result.mean_latency_s},
           {"max_latency_s", result.max_latency_s},
           {"mean_sojourn_s", result.mean_sojourn_s},
           {"throughput_eps", result.throughput_eps},
           {"analytic_throughput_eps", d.performance->throughput_eps},
           {"analytic_latency_s", d.performance->latency_s},
           {"in_order", result.in_order},
           {"backpressure_stalls", result.backpressure_stalls}};
  write_artifacts({{"sim_result.json", ArtifactKind::ReportJson, sim.dump(2) + "\n", {}}}, cfg.out_dir);
  out << report.second.content;

  int status = strict_status(cfg, all_diagnostics(d, in.target), out);
  if (cfg.assert_in_order && !result.in_order) {
    fmt::print(out, "error [out-of-order]: completions are not in sequence order\n");
    status = 1;
  }
  return status;
}

int cmd_explain(const RunConfig& cfg, std::ostream& out) {
  auto in = load_inputs(cfg);
  auto pipeline = in_module("passes", [&] { return pipeline_for(cfg); });
  std::vector<StageSnapshot> trace;
  auto d = in_module("passes", [&] { return run_pipeline(in.graph, pipeline, in.target, &trace); });

  auto kinds = [](const DataflowGraph& g) {
    std::map<std::string, long> c;
    for (const auto& [id, n] : g.nodes()) ++c[std::string(to_string(n.kind))];
    return c;
  };
  fmt::print(out, "pipeline {}: {} nodes, {} edges\n", pipeline.name, in.graph.nodes().size(),
             in.graph.edges().size());
  for (std::size_t i = 1; i < trace.size(); ++i) {
    const auto& a = trace[i - 1].graph;
    const auto& b = trace[i].graph;
    auto dn = static_cast<long>(b.nodes().size()) - static_cast<long>(a.nodes().size());
    auto de = static_cast<long>(b.edges().size()) - static_cast<long>(a.edges().size());
    std::string line = fmt::format("{}: {:+d} nodes, {:+d} edges", trace[i].stage, dn, de);
    auto ka = kinds(a), kb = kinds(b);
    for (const auto& [k, v] : kb) ka.try_emplace(k, 0);
    for (const auto& [k, v] : ka) {
      auto delta = (kb.count(k) ? kb.at(k) : 0) - v;
      if (delta != 0) line += fmt::format(", {:+d} {}", delta, k);
    }
    if (trace[i].stage == "partition")
      line += fmt::format(" ({} segments: {} FPGA, {} AIE)", d.plan.segments.size(), d.plan.count(Platform::FPGA),
                          d.plan.count(Platform::AIE));
    if (trace[i].stage == "spatial")
      line += fmt::format(" (P_fpga {}, P_aie {})", pipeline.p_fpga, pipeline.p_aie);
    fmt::print(out, "{}\n", line);
  }
  if (d.performance)
    fmt::print(out, "result: {:.3g} events/s, {:.2f} us\n", d.performance->throughput_eps,
               d.performance->latency_s * 1e6);
  return 0;
}

}  // namespace hetflow::cli
