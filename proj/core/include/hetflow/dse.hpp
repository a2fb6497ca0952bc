#pragma once

#include <vector>

#include "hetflow/design_point.hpp"
#include "hetflow/target.hpp"

namespace hetflow {

struct SearchSpec {
  double throughput_goal_eps = 2.0e6;
  int p_max = 16;
  bool concurrent = true;

  /// Throws Error{"invalid-search"} when a field is out of range.
  void validate() const;
};

/// One evaluated grid point. `error` is set when lowering rejected the
/// candidate (non-separable, indivisible, ...).
struct Candidate {
  int p_fpga = 1;
  int p_aie = 1;
  bool feasible = false;
  double throughput_eps = 0;
  double resource_fraction = 0;
  Diagnostics violations;
  std::string error;
};

struct SearchResult {
  int p_fpga = 1;
  int p_aie = 1;
  DesignPoint design;
  std::vector<Candidate> candidates;  // every grid point, (p_fpga, p_aie) ascending
};

/// Thrown when no grid point meets the goal.
class InfeasibleError : public Error {
 public:
  InfeasibleError(double best_eps, std::string msg) : Error("infeasible", std::move(msg)), best_eps_(best_eps) {}
  double best_throughput_eps() const { return best_eps_; }

 private:
  double best_eps_;
};

/// Powers of two 1..p_max.
std::vector<int> parallelism_grid(int p_max);

/// Lowers `g` with fusion, partitioning, mapping, legalization, spatial
/// parallelization at (p_fpga, p_aie) and kernel optimization in `mode`, then
/// evaluates it.
DesignPoint lower_at(const DataflowGraph& g, const TargetDescription& target, int p_fpga, int p_aie, OptMode mode);

/// Checks a lowered design against the goal: throughput, deadlines, buffer
/// limits and resource budgets. Empty iff feasible.
Diagnostics feasibility_violations(const DesignPoint& d, const TargetDescription& target, double goal_eps);

/// Exhaustive search over the grid. Among feasible points picks the one with
/// the smallest total resource fraction; ties go to smaller P_aie, then
/// smaller P_fpga.
SearchResult find_min_parallelization(const DataflowGraph& g, const TargetDescription& target,
                                      const SearchSpec& spec, OptMode mode);

}  // namespace hetflow
