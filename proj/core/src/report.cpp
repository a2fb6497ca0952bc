#include <fmt/format.h>

#include "hetflow/emitter.hpp"

namespace hetflow {

namespace {

nlohmann::json util_json(const Utilization& u) { return {{"abs", u.abs}, {"percent", u.percent}}; }

const char* const kColumns[] = {"ff", "lut", "dsp", "bram", "tiles", "compute", "memory"};

}  // namespace

nlohmann::json report_json(const DesignPoint& d, const std::optional<SimResult>& sim, std::uint64_t seed) {
  ResourceEstimate r = d.resources.value_or(ResourceEstimate{});
  PerformanceEstimate p = d.performance.value_or(PerformanceEstimate{});

  // "memory" counts tiles whose data memory is in use: every compute tile
  // and every buffer tile.
  nlohmann::json resources{{"ff", util_json(r.ff)},           {"lut", util_json(r.lut)},
                           {"dsp", util_json(r.dsp)},         {"bram", util_json(r.bram)},
                           {"tiles", util_json(r.aie_tiles)}, {"compute", util_json(r.aie_compute_tiles)},
                           {"memory", util_json(r.aie_tiles)}, {"buffers", util_json(r.aie_memory_buffers)}};

  nlohmann::json kernels = nlohmann::json::array();
  for (const auto& [id, k] : p.per_kernel)
    kernels.push_back({{"node", id},
                       {"platform", to_string(k.platform)},
                       {"latency_cycles", k.latency_cycles},
                       {"ii_cycles", k.ii_cycles},
                       {"program_memory_bytes", k.program_memory_bytes}});

  nlohmann::json diags = nlohmann::json::array();
  for (const auto* list : {&r.diagnostics, &p.diagnostics})
    for (const auto& x : *list) diags.push_back({{"code", x.code}, {"subject", x.subject}, {"message", x.message}});

  nlohmann::json perf{{"design", d.name},
                      {"p_fpga", d.p_fpga},
                      {"p_aie", d.p_aie},
                      {"mode", to_string(d.mode)},
                      {"latency_us", round_to_decimals(p.latency_s * 1e6, 1)},
                      {"latency_ps", p.latency_ps},
                      {"throughput_eps", round_significant(p.throughput_eps, 3)},
                      {"bottleneck", p.bottleneck},
                      {"kernels", kernels},
                      {"diagnostics", diags}};

  nlohmann::json doc{{"seed", seed}, {"resources", resources}, {"performance", perf}};
  if (sim)
    doc["simulation"] = {{"events", sim->events},
                         {"mean_latency_us", round_to_decimals(sim->mean_latency_s * 1e6, 3)},
                         {"max_latency_us", round_to_decimals(sim->max_latency_s * 1e6, 3)},
                         {"mean_sojourn_us", round_to_decimals(sim->mean_sojourn_s * 1e6, 3)},
                         {"throughput_eps", round_significant(sim->throughput_eps, 4)},
                         {"in_order", sim->in_order},
                         {"backpressure_stalls", sim->backpressure_stalls}};
  return doc;
}

std::string report_text(const DesignPoint& d, const std::optional<SimResult>& sim, std::uint64_t seed) {
  auto j = report_json(d, sim, seed);
  const auto& res = j["resources"];
  const auto& perf = j["performance"];
  std::string out = fmt::format("design {}  seed {}\n\n", d.name, seed);
  out += fmt::format("{:<10}", "");
  for (const char* c : kColumns) out += fmt::format("{:>10}", c);
  out += fmt::format("\n{:<10}", "abs");
  for (const char* c : kColumns) out += fmt::format("{:>10}", res[c]["abs"].get<std::int64_t>());
  out += fmt::format("\n{:<10}", "%");
  for (const char* c : kColumns) out += fmt::format("{:>10}", res[c]["percent"].get<int>());
  out += fmt::format("\n\nP_fpga {}  P_aie {}  mode {}\n", perf["p_fpga"].get<int>(), perf["p_aie"].get<int>(),
                     perf["mode"].get<std::string>());
  out += fmt::format("latency    {:.1f} us\n", perf["latency_us"].get<double>());
  out += fmt::format("throughput {:.3g} events/s\n", perf["throughput_eps"].get<double>());
  if (!perf["bottleneck"].get<std::string>().empty())
    out += fmt::format("bottleneck {}\n", perf["bottleneck"].get<std::string>());
  for (const auto& x : perf["diagnostics"])
    out += fmt::format("error [{}] {}: {}\n", x["code"].get<std::string>(), x["subject"].get<std::string>(),
                       x["message"].get<std::string>());
  if (sim) {
    const auto& s = j["simulation"];
    out += fmt::format("\nsimulated {} events: latency mean {:.3f} us max {:.3f} us, {:.4g} events/s, in order: {}, "
                       "stalls {}\n",
                       s["events"].get<std::int64_t>(), s["mean_latency_us"].get<double>(),
                       s["max_latency_us"].get<double>(), s["throughput_eps"].get<double>(),
                       s["in_order"].get<bool>() ? "yes" : "no", s["backpressure_stalls"].get<std::int64_t>());
  }
  return out;
}

std::pair<EmittedArtifact, EmittedArtifact> generate_report(const DesignPoint& d, const std::optional<SimResult>& sim,
                                                            std::uint64_t seed) {
  auto json_text = report_json(d, sim, seed).dump(2) + "\n";
  auto text = report_text(d, sim, seed);
  EmittedArtifact a{"report.json", ArtifactKind::ReportJson, json_text, sha256_hex(json_text)};
  EmittedArtifact b{"report.txt", ArtifactKind::ReportTable, text, sha256_hex(text)};
  return {a, b};
}

}  // namespace hetflow
