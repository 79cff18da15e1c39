#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "prefbo/dm.hpp"
#include "prefbo/engine.hpp"
#include "prefbo/harness.hpp"
#include "prefbo/serialize.hpp"
#include "prefbo/service.hpp"

namespace {

using namespace prefbo;

Service* g_service = nullptr;

void on_signal(int) {
  if (g_service != nullptr) g_service->stop();
}

void write_file(const std::filesystem::path& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << body;
}

ReferenceBestCache make_cache(const std::string& dir) {
  return ReferenceBestCache(dir.empty() ? ReferenceBestCache::default_dir()
                                        : std::filesystem::path(dir));
}

UtilityModel make_dm_model(const std::string& problem_name,
                           const std::string& kind,
                           const std::vector<double>& theta,
                           double rho, std::uint64_t seed) {
  UtilityModel model;
  model.kind = utility_kind_from_string(kind);
  model.rho = rho;
  if (!theta.empty()) {
    model.theta = theta;
  } else {
    const ProblemSpec problem = lookup_problem(problem_name);
    RngStream rng(seed, "dm-theta", 0);
    model.theta = sample_theta(problem.num_objectives, rng);
  }
  return model;
}

struct CommonRunFlags {
  std::string problem = "POL";
  int budget = 40;
  int p = 1;
  int n0 = 21;
  double rho = 0.05;
  std::uint64_t seed = 1;
  std::string dm_utility = "tchebychev";
  std::vector<double> dm_theta;
  std::string out;
  std::string cache_dir;
  int nsga_pop = 100;
  int nsga_gens = 300;
};

void add_common_flags(CLI::App* cmd, CommonRunFlags& f) {
  cmd->add_option("--problem", f.problem, "Problem name (HOLE-1, HOLE-2, POL)")
      ->capture_default_str();
  cmd->add_option("--budget,-B", f.budget, "Total evaluation budget")
      ->capture_default_str();
  cmd->add_option("-p,--elicit-steps", f.p,
                  "Evaluations reserved after the preference elicitation")
      ->capture_default_str();
  cmd->add_option("--n0,--initial-design", f.n0, "Initial design size")
      ->capture_default_str();
  cmd->add_option("--rho", f.rho, "Tchebychev augmentation weight")
      ->capture_default_str();
  cmd->add_option("--seed", f.seed, "Master seed")->capture_default_str();
  cmd->add_option("--dm-utility", f.dm_utility,
                  "Hidden utility of the simulated DM")
      ->check(CLI::IsMember({"tchebychev", "linear"}))
      ->capture_default_str();
  cmd->add_option("--dm-theta", f.dm_theta,
                  "Hidden DM weights (comma separated; default drawn from "
                  "the seed)")
      ->delimiter(',');
  cmd->add_option("--cache-dir", f.cache_dir,
                  "Reference-best cache directory (default "
                  "$PREFBO_CACHE_DIR or ~/.cache/prefbo)");
  cmd->add_option("--nsga-pop", f.nsga_pop, "NSGA-II population size")
      ->capture_default_str();
  cmd->add_option("--nsga-gens", f.nsga_gens, "NSGA-II generations")
      ->capture_default_str();
}

int cmd_run(const CommonRunFlags& f) {
  RunConfig config;
  config.problem = f.problem;
  config.budget = f.budget;
  config.elicit_steps = f.p;
  config.initial_design = f.n0;
  config.rho = f.rho;
  config.seed = f.seed;
  config.nsga.population_size = f.nsga_pop;
  config.nsga.generations = f.nsga_gens;

  const UtilityModel model =
      make_dm_model(f.problem, f.dm_utility, f.dm_theta, f.rho, f.seed);
  SimulatedDM oracle(model);
  ReferenceBestCache cache = make_cache(f.cache_dir);
  const ReferenceBest reference =
      cache.get(lookup_problem(f.problem), model);

  const RunResult result = Engine::run(config, oracle, &reference);
  if (!f.out.empty()) {
    std::filesystem::create_directories(f.out);
    write_file(std::filesystem::path(f.out) / "result.json",
               run_result_to_json(result) + "\n");
    write_file(std::filesystem::path(f.out) / "history.csv",
               history_to_csv(result));
  }
  if (result.failed) {
    std::cerr << "run failed after " << result.history.size()
              << " evaluations: " << result.error << '\n';
    return 1;
  }
  std::cout << "problem=" << f.problem << " budget=" << f.budget
            << " p=" << f.p << " seed=" << f.seed
            << " picked_index=" << *result.picked_index
            << " picked_utility=" << *result.picked_utility
            << " opportunity_cost=" << *result.opportunity_cost
            << " duplicate_fallbacks=" << result.duplicate_fallbacks << '\n';
  return 0;
}

struct ExperimentFlags {
  std::vector<std::string> problems = {"POL"};
  int budget = 40;
  std::vector<int> p_values = {0, 1};
  int reps = 10;
  std::string dm_utility = "tchebychev";
  double rho = 0.05;
  std::uint64_t seed = 1;
  int stride = 5;
  bool paper_scale = false;
  int workers = 0;
  int n0 = 21;
  std::string out = "plotdata";
  std::string cache_dir;
  int nsga_pop = 100;
  int nsga_gens = 300;
};

void add_experiment_flags(CLI::App* cmd, ExperimentFlags& f) {
  cmd->add_option("--problem", f.problems,
                  "Problem names (repeatable or comma separated)")
      ->delimiter(',')
      ->capture_default_str();
  cmd->add_option("--budget,-B", f.budget, "Total evaluation budget")
      ->capture_default_str();
  cmd->add_option("-p", f.p_values,
                  "Post-elicitation step counts (repeatable or comma "
                  "separated)")
      ->delimiter(',')
      ->capture_default_str();
  cmd->add_option("--reps", f.reps, "Replications per cell")
      ->capture_default_str();
  cmd->add_option("--dm-utility", f.dm_utility,
                  "Hidden utility of the simulated DM")
      ->check(CLI::IsMember({"tchebychev", "linear"}))
      ->capture_default_str();
  cmd->add_option("--rho", f.rho, "Tchebychev augmentation weight")
      ->capture_default_str();
  cmd->add_option("--seed", f.seed, "Base seed (replication r uses seed+r)")
      ->capture_default_str();
  cmd->add_option("--workers", f.workers,
                  "Worker threads (0 = hardware concurrency)")
      ->capture_default_str();
  cmd->add_option("--n0,--initial-design", f.n0, "Initial design size")
      ->capture_default_str();
  cmd->add_option("--out", f.out, "Output directory for CSV/JSON plot data")
      ->capture_default_str();
  cmd->add_option("--cache-dir", f.cache_dir,
                  "Reference-best cache directory");
  cmd->add_option("--nsga-pop", f.nsga_pop, "NSGA-II population size")
      ->capture_default_str();
  cmd->add_option("--nsga-gens", f.nsga_gens, "NSGA-II generations")
      ->capture_default_str();
}

ExperimentSpec make_spec(const ExperimentFlags& f) {
  ExperimentSpec spec;
  spec.problems = f.problems;
  spec.budget = f.budget;
  spec.p_values = f.p_values;
  spec.replications = f.reps;
  spec.dm_kind = utility_kind_from_string(f.dm_utility);
  spec.rho = f.rho;
  spec.base_seed = f.seed;
  spec.checkpoint_stride = f.stride;
  spec.paper_scale = f.paper_scale;
  spec.workers = f.workers;
  spec.initial_design = f.n0;
  spec.nsga.population_size = f.nsga_pop;
  spec.nsga.generations = f.nsga_gens;
  if (!f.cache_dir.empty()) spec.cache_dir = f.cache_dir;
  return spec;
}

int report(const ExperimentResult& result, const std::string& out) {
  emit_plotdata(result, out);
  for (const Series& series : result.series) {
    const CellStats& final_stats = series.stats.back();
    std::cout << series.problem << " p=" << series.p
              << " final mean_oc=" << final_stats.mean << " ci=["
              << final_stats.ci_lo << ", " << final_stats.ci_hi << "] n="
              << final_stats.count << '\n';
  }
  std::cout << "plot data written to " << out << '\n';
  if (result.failed_replications > 0) {
    std::cerr << result.failed_replications << " replication(s) failed\n";
    return 2;
  }
  return 0;
}

int cmd_serve(const std::string& host, int port, const std::string& state_dir,
              int nsga_pop, int nsga_gens) {
  ServiceOptions options;
  options.host = host;
  options.port = port;
  if (!state_dir.empty()) options.state_dir = state_dir;
  options.nsga.population_size = nsga_pop;
  options.nsga.generations = nsga_gens;
  Service service(options);
  g_service = &service;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::cout << "serving on http://" << host << ":" << port;
  if (!state_dir.empty()) std::cout << " (state in " << state_dir << ")";
  std::cout << '\n';
  service.run();
  g_service = nullptr;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Multi-objective Bayesian optimization with one mid-run preference "
      "elicitation"};
  app.require_subcommand(1);

  CommonRunFlags run_flags;
  CLI::App* run_cmd =
      app.add_subcommand("run", "Single run against a simulated DM");
  add_common_flags(run_cmd, run_flags);
  run_cmd->add_option("--out", run_flags.out,
                      "Directory for result.json and history.csv");

  ExperimentFlags trace_flags;
  CLI::App* trace_cmd = app.add_subcommand(
      "trace", "Replicated runs scored at iteration checkpoints");
  add_experiment_flags(trace_cmd, trace_flags);
  trace_cmd->add_option("--stride", trace_flags.stride,
                        "Checkpoint spacing in evaluations")
      ->capture_default_str();
  trace_cmd->add_flag("--paper-scale", trace_flags.paper_scale,
                      "Replication counts and stride used for the full "
                      "study (slow)");

  ExperimentFlags psweep_flags;
  psweep_flags.p_values = {1, 5, 10, 20};
  psweep_flags.n0 = 10;
  CLI::App* psweep_cmd = app.add_subcommand(
      "psweep", "Final regret as a function of p at a fixed budget");
  add_experiment_flags(psweep_cmd, psweep_flags);

  std::string ref_problem = "POL";
  std::vector<double> ref_theta;
  std::string ref_kind = "tchebychev";
  double ref_rho = 0.05;
  std::string ref_cache;
  CLI::App* ref_cmd = app.add_subcommand(
      "reference-best", "True utility optimum for a problem and weights");
  ref_cmd->add_option("--problem", ref_problem, "Problem name")
      ->capture_default_str();
  ref_cmd->add_option("--theta", ref_theta, "Weights (comma separated)")
      ->delimiter(',')
      ->required();
  ref_cmd->add_option("--dm-utility", ref_kind, "Utility kind")
      ->check(CLI::IsMember({"tchebychev", "linear"}))
      ->capture_default_str();
  ref_cmd->add_option("--rho", ref_rho, "Tchebychev augmentation weight")
      ->capture_default_str();
  ref_cmd->add_option("--cache-dir", ref_cache,
                      "Reference-best cache directory");

  std::string serve_host = "127.0.0.1";
  int serve_port = 8080;
  std::string serve_state_dir;
  int serve_nsga_pop = 100;
  int serve_nsga_gens = 300;
  CLI::App* serve_cmd =
      app.add_subcommand("serve", "HTTP service for interactive runs");
  serve_cmd->add_option("--host", serve_host, "Bind address")
      ->capture_default_str();
  serve_cmd->add_option("--port", serve_port, "Bind port")
      ->capture_default_str();
  serve_cmd->add_option("--state-dir", serve_state_dir,
                        "Session persistence directory (empty disables)");
  serve_cmd->add_option("--nsga-pop", serve_nsga_pop,
                        "NSGA-II population size for new sessions")
      ->capture_default_str();
  serve_cmd->add_option("--nsga-gens", serve_nsga_gens,
                        "NSGA-II generations for new sessions")
      ->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) return cmd_run(run_flags);
    if (*trace_cmd) {
      return report(run_experiment(make_spec(trace_flags)), trace_flags.out);
    }
    if (*psweep_cmd) {
      return report(psweep(make_spec(psweep_flags)), psweep_flags.out);
    }
    if (*ref_cmd) {
      UtilityModel model;
      model.kind = utility_kind_from_string(ref_kind);
      model.theta = ref_theta;
      model.rho = ref_rho;
      ReferenceBestCache cache = make_cache(ref_cache);
      const ReferenceBest best =
          cache.get(lookup_problem(ref_problem), model);
      nlohmann::json out{{"problem", best.problem},
                         {"utility", std::string(to_string(model.kind))},
                         {"theta", model.theta},
                         {"rho", model.rho},
                         {"u_star", best.u_star},
                         {"x_star", best.x_star}};
      std::cout << out.dump(2) << '\n';
      return 0;
    }
    if (*serve_cmd) {
      return cmd_serve(serve_host, serve_port, serve_state_dir,
                       serve_nsga_pop, serve_nsga_gens);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
