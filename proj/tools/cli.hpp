#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "hetflow/dse.hpp"
#include "hetflow/passes.hpp"
#include "hetflow/simulator.hpp"

namespace hetflow::cli {

struct WorkloadSpec {
  std::int64_t events = 10000;
  // Arrival rate; unset means drive at the analytic throughput times overdrive.
  std::optional<double> rate_eps;
  double overdrive = 1.0;
  WorkloadMode mode = WorkloadMode::Uniform;
  int buffer_depth = 2;
};

struct RunConfig {
  std::filesystem::path model_path;
  std::filesystem::path target_path;
  std::string pipeline = "design3";
  // Only for pipeline "custom".
  std::vector<std::string> stages;
  int p_fpga = 1;
  int p_aie = 1;
  OptMode mode = OptMode::Pipelined;
  std::optional<SearchSpec> search;
  std::optional<WorkloadSpec> workload;
  std::filesystem::path out_dir = "out";
  std::uint64_t seed = 0;
  bool strict = false;
  bool assert_in_order = false;
};

/// Parses a run configuration document. Relative paths resolve against
/// `base_dir`. Throws Error{"config"}.
RunConfig parse_run_config(const std::string& text, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);

PassPipeline pipeline_for(const RunConfig& cfg);

int cmd_compile(const RunConfig& cfg, std::ostream& out);
int cmd_simulate(const RunConfig& cfg, std::ostream& out);
int cmd_explain(const RunConfig& cfg, std::ostream& out);
int cmd_report(const RunConfig& cfg, std::ostream& out);

/// Full command line: 0 success, 1 diagnostics or errors, 2 usage.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace hetflow::cli
