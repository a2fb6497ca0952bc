#include <ostream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include "cli.hpp"

namespace hetflow::cli {

namespace {

struct Flags {
  std::string config, model, target, pipeline, out, mode;
  std::uint64_t seed = 0;
  bool strict = false, assert_in_order = false;
  std::int64_t events = 0;
  double rate = 0, overdrive = 0, goal = 0;
  int buffer_depth = 0, p_max = 0;
  std::string workload_mode;
};

struct Registered {
  CLI::App* cmd;
  std::map<std::string, CLI::Option*> opts;
};

Registered add_command(CLI::App& app, const char* name, const char* help, Flags& f) {
  Registered r{app.add_subcommand(name, help), {}};
  auto* c = r.cmd;
  r.opts["config"] = c->add_option("--config", f.config, "Run configuration (JSON); flags override it");
  r.opts["model"] = c->add_option("--model", f.model, "Model description");
  r.opts["target"] = c->add_option("--target", f.target, "Target description");
  r.opts["pipeline"] = c->add_option("--pipeline", f.pipeline, "design1, design2, design3 or custom");
  r.opts["out"] = c->add_option("--out", f.out, "Output directory");
  r.opts["seed"] = c->add_option("--seed", f.seed, "Workload seed");
  r.opts["strict"] = c->add_flag("--strict", f.strict, "Exit nonzero on error diagnostics");
  r.opts["assert_in_order"] = c->add_flag("--assert-in-order", f.assert_in_order, "Fail if completions reorder");
  r.opts["goal"] = c->add_option("--goal", f.goal, "Run the P search for this throughput (events/s)");
  r.opts["p_max"] = c->add_option("--p-max", f.p_max, "Largest P in the search grid");
  r.opts["events"] = c->add_option("--events", f.events, "Simulated event count");
  r.opts["rate"] = c->add_option("--rate", f.rate, "Arrival rate (events/s)");
  r.opts["overdrive"] = c->add_option("--overdrive", f.overdrive, "Arrival rate as a multiple of the analytic bound");
  r.opts["workload_mode"] = c->add_option("--mode", f.workload_mode, "uniform, random or poisson");
  r.opts["buffer_depth"] = c->add_option("--buffer-depth", f.buffer_depth, "Credits per simulated edge");
  return r;
}

RunConfig resolve(const Registered& r, const Flags& f) {
  auto given = [&](const char* k) { return r.opts.at(k)->count() > 0; };
  RunConfig cfg = given("config") ? load_run_config(f.config) : RunConfig{};
  if (given("model")) cfg.model_path = f.model;
  if (given("target")) cfg.target_path = f.target;
  if (given("pipeline")) cfg.pipeline = f.pipeline;
  if (given("out")) cfg.out_dir = f.out;
  if (given("seed")) cfg.seed = f.seed;
  if (given("strict")) cfg.strict = true;
  if (given("assert_in_order")) cfg.assert_in_order = true;
  if (given("goal") || given("p_max")) {
    auto s = cfg.search.value_or(SearchSpec{});
    if (given("goal")) s.throughput_goal_eps = f.goal;
    if (given("p_max")) s.p_max = f.p_max;
    s.validate();
    cfg.search = s;
  }
  bool workload = false;
  for (const char* k : {"events", "rate", "overdrive", "workload_mode", "buffer_depth"}) workload = workload || given(k);
  if (workload) {
    auto w = cfg.workload.value_or(WorkloadSpec{});
    if (given("events")) w.events = f.events;
    if (given("rate")) w.rate_eps = f.rate;
    if (given("overdrive")) w.overdrive = f.overdrive;
    if (given("workload_mode")) w.mode = parse_workload_mode(f.workload_mode);
    if (given("buffer_depth")) w.buffer_depth = f.buffer_depth;
    cfg.workload = w;
  }
  return cfg;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"hetflow: FPGA/AIE dataflow compiler, estimator and simulator", "hetflow"};
  app.require_subcommand(1);
  Flags flags;
  auto compile = add_command(app, "compile", "Lower a model and emit kernel stubs and reports", flags);
  auto simulate = add_command(app, "simulate", "Lower a model and run the event simulation", flags);
  auto explain = add_command(app, "explain", "Show node and edge deltas per pass", flags);
  auto report = add_command(app, "report", "Lower a model and write only the report", flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return 0;
    fmt::print(err, "{}\n{}", e.what(), app.help());
    return 2;
  }

  try {
    if (compile.cmd->parsed()) return cmd_compile(resolve(compile, flags), out);
    if (simulate.cmd->parsed()) return cmd_simulate(resolve(simulate, flags), out);
    if (explain.cmd->parsed()) return cmd_explain(resolve(explain, flags), out);
    if (report.cmd->parsed()) return cmd_report(resolve(report, flags), out);
  } catch (const InfeasibleError& e) {
    fmt::print(err, "error [{}]: dse: {} (best {:.4g} eps)\n", e.code(), e.what(), e.best_throughput_eps());
    return 1;
  } catch (const Error& e) {
    fmt::print(err, "error [{}]: {}\n", e.code(), e.what());
    return 1;
  } catch (const std::exception& e) {
    fmt::print(err, "error: {}\n", e.what());
    return 1;
  }
  return 2;
}

}  // namespace hetflow::cli
