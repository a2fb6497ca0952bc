#include "oracles.hpp"

#include <cmath>
#include <limits>
#include <set>

#include "builder.hpp"
#include "hetflow/passes.hpp"

namespace hetflow::testing {

double closed_form_throughput(const PerformanceEstimate& p, const TargetDescription& t) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& [id, k] : p.per_kernel) {
    double clock = k.platform == Platform::AIE ? t.aie.clock_hz : t.fpga.clock_hz;
    best = std::min(best, clock / double(k.ii_cycles));
  }
  return best;
}

int count_buffers(const DataflowGraph& g, const NodeId& id) {
  int total = 0;
  auto fanout = [&](const Endpoint& src) {
    int n = 0;
    for (const auto& e : g.edges()) n += e.from == src;
    return n;
  };
  std::set<int> out_ports;
  for (const auto& e : g.edges()) {
    if (e.to.node == id) total += fanout(e.from) > 1 ? 4 : 2;
    if (e.from.node == id) out_ports.insert(e.from.port);
  }
  for (int port : out_ports) total += fanout({id, port}) > 1 ? 4 : 2;
  return total;
}

bool oracle_feasible(const DesignPoint& d, const TargetDescription& t, double goal_eps) {
  const auto& p = *d.performance;
  const auto& r = *d.resources;
  if (closed_form_throughput(p, t) < goal_eps) return false;
  if (p.latency_s > t.constraints.max_latency_s) return false;
  for (const auto& [id, k] : p.per_kernel) {
    if (double(k.latency_ps) * 1e-12 > t.constraints.kernel_deadline_s) return false;
    if (k.platform == Platform::AIE && double(k.program_memory_bytes) > t.aie.program_memory_bytes) return false;
  }
  for (const auto& [id, n] : d.graph.nodes())
    if (n.binding && n.binding->platform == Platform::AIE && count_buffers(d.graph, id) > t.aie.memory_buffers_per_tile)
      return false;
  return double(r.ff.abs) <= t.fpga.ff_total && double(r.lut.abs) <= t.fpga.lut_total &&
         double(r.dsp.abs) <= t.fpga.dsp_total && double(r.bram.abs) <= t.fpga.bram_total &&
         double(r.aie_tiles.abs) <= t.aie.tile_total;
}

std::optional<OracleChoice> brute_force_dse(const DataflowGraph& g, const TargetDescription& t, double goal_eps,
                                            int p_max, OptMode mode) {
  std::optional<OracleChoice> best;
  double best_cost = 0;
  for (int pf = 1; pf <= p_max; pf *= 2) {
    for (int pa = 1; pa <= p_max; pa *= 2) {
      if (g.spatial_extent % pf || g.spatial_extent % pa) continue;
      auto pl = PassPipeline::named("design3");
      pl.p_fpga = pf;
      pl.p_aie = pa;
      pl.mode = mode;
      DesignPoint d;
      try {
        d = run_pipeline(g, pl, t);
      } catch (const Error&) {
        continue;
      }
      if (!oracle_feasible(d, t, goal_eps)) continue;
      const auto& r = *d.resources;
      double cost = double(r.ff.abs) / t.fpga.ff_total + double(r.lut.abs) / t.fpga.lut_total +
                    double(r.dsp.abs) / t.fpga.dsp_total + double(r.bram.abs) / t.fpga.bram_total +
                    double(r.aie_tiles.abs) / t.aie.tile_total;
      bool better = !best || cost < best_cost ||
                    (cost == best_cost && (pa < best->p_aie || (pa == best->p_aie && pf < best->p_fpga)));
      if (better) {
        best = OracleChoice{pf, pa};
        best_cost = cost;
      }
    }
  }
  return best;
}

DseInstance random_dse_instance(std::mt19937_64& rng) {
  DseInstance in;
  in.graph = random_chain(rng, 2, 5);
  in.target = vck190();
  std::uniform_real_distribution<double> scale(0.5, 2.0);
  in.target.fpga.clock_hz *= scale(rng);
  in.target.aie.clock_hz *= scale(rng);
  in.target.calibration["fpga.dense.ii_per_input"] *= scale(rng);
  in.target.calibration["fpga.linear.ii_per_input"] *= scale(rng);
  in.target.calibration["fpga.alpha.lut"] *= scale(rng);
  in.target.fpga.lut_total *= scale(rng);
  in.target.aie.tile_total = std::floor(in.target.aie.tile_total * scale(rng));
  in.goal_eps = std::uniform_real_distribution<double>(0.5e6, 6e6)(rng);
  const int pmax[] = {2, 4, 8, 16};
  in.p_max = pmax[rng() % 4];
  in.mode = rng() % 2 ? OptMode::Flattened : OptMode::Pipelined;
  return in;
}

}  // namespace hetflow::testing
