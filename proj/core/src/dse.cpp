#include "hetflow/dse.hpp"

#include <algorithm>
#include <future>
#include <tuple>

#include <fmt/format.h>

#include "hetflow/cost_model.hpp"
#include "hetflow/passes.hpp"

namespace hetflow {

void SearchSpec::validate() const {
  if (!(throughput_goal_eps > 0))
    throw Error("invalid-search", fmt::format("throughput goal must be positive, got {}", throughput_goal_eps));
  if (p_max < 1 || (p_max & (p_max - 1)) != 0)
    throw Error("invalid-search", fmt::format("P_max must be a power of two >= 1, got {}", p_max));
}

std::vector<int> parallelism_grid(int p_max) {
  std::vector<int> grid;
  for (int p = 1; p <= p_max; p *= 2) grid.push_back(p);
  return grid;
}

DesignPoint lower_at(const DataflowGraph& g, const TargetDescription& target, int p_fpga, int p_aie, OptMode mode) {
  auto pipeline = PassPipeline::named("design3");
  pipeline.name = fmt::format("dse_{}_{}", p_fpga, p_aie);
  pipeline.p_fpga = p_fpga;
  pipeline.p_aie = p_aie;
  pipeline.mode = mode;
  auto d = run_pipeline(g, pipeline, target);
  return d;
}

Diagnostics feasibility_violations(const DesignPoint& d, const TargetDescription& target, double goal_eps) {
  auto t = target;
  t.constraints.throughput_goal_eps = goal_eps;
  Diagnostics out = check_requirements(*d.performance, t);
  for (auto& x : check_buffer_constraint(d, t)) out.push_back(std::move(x));
  for (const auto& x : d.resources->diagnostics) out.push_back(x);
  return out;
}

namespace {

struct Evaluated {
  Candidate candidate;
  std::optional<DesignPoint> design;
};

Evaluated evaluate_candidate(const DataflowGraph& g, const TargetDescription& target, const SearchSpec& spec,
                             OptMode mode, int p_fpga, int p_aie) {
  Evaluated ev;
  ev.candidate.p_fpga = p_fpga;
  ev.candidate.p_aie = p_aie;
  if (g.spatial_extent % p_fpga != 0 || g.spatial_extent % p_aie != 0) {
    ev.candidate.error = "indivisible";
    return ev;
  }
  try {
    auto d = lower_at(g, target, p_fpga, p_aie, mode);
    ev.candidate.throughput_eps = d.performance->throughput_eps;
    ev.candidate.resource_fraction = total_resource_fraction(*d.resources, target);
    ev.candidate.violations = feasibility_violations(d, target, spec.throughput_goal_eps);
    ev.candidate.feasible = ev.candidate.violations.empty();
    ev.design = std::move(d);
  } catch (const Error& e) {
    ev.candidate.error = e.code();
  }
  return ev;
}

}  // namespace

SearchResult find_min_parallelization(const DataflowGraph& g, const TargetDescription& target,
                                      const SearchSpec& spec, OptMode mode) {
  spec.validate();
  auto grid = parallelism_grid(spec.p_max);

  std::vector<Evaluated> all;
  if (spec.concurrent) {
    std::vector<std::future<Evaluated>> jobs;
    for (int pf : grid)
      for (int pa : grid)
        jobs.push_back(std::async(std::launch::async, evaluate_candidate, std::cref(g), std::cref(target),
                                  std::cref(spec), mode, pf, pa));
    for (auto& j : jobs) all.push_back(j.get());
  } else {
    for (int pf : grid)
      for (int pa : grid) all.push_back(evaluate_candidate(g, target, spec, mode, pf, pa));
  }

  SearchResult result;
  const Evaluated* best = nullptr;
  double best_eps = 0;
  for (const auto& ev : all) {
    result.candidates.push_back(ev.candidate);
    best_eps = std::max(best_eps, ev.candidate.throughput_eps);
    if (!ev.candidate.feasible) continue;
    auto key = [](const Candidate& c) { return std::tuple(c.resource_fraction, c.p_aie, c.p_fpga); };
    if (!best || key(ev.candidate) < key(best->candidate)) best = &ev;
  }
  if (!best)
    throw InfeasibleError(best_eps, fmt::format("no P <= {} reaches {:.4g} eps; best achieved {:.4g} eps",
                                                spec.p_max, spec.throughput_goal_eps, best_eps));
  result.p_fpga = best->candidate.p_fpga;
  result.p_aie = best->candidate.p_aie;
  result.design = *best->design;
  return result;
}

}  // namespace hetflow
