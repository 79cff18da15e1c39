#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "prefbo/engine.hpp"

namespace prefbo {

struct ExperimentSpec {
  std::vector<std::string> problems = {"POL"};
  int budget = 40;
  std::vector<int> p_values = {0, 1};
  int replications = 10;
  UtilityKind dm_kind = UtilityKind::Tchebychev;
  double rho = 0.05;
  std::uint64_t base_seed = 1;
  int checkpoint_stride = 5;
  bool final_only = false;   // score only the full-budget checkpoint
  bool paper_scale = false;  // 50 (HOLE) / 160 (POL) reps, stride 1
  int workers = 0;           // 0 = hardware concurrency
  int initial_design = 21;
  Nsga2Params nsga;
  std::filesystem::path cache_dir;  // empty = ReferenceBestCache default
};

struct ReplicationOutcome {
  int replication = 0;
  std::uint64_t seed = 0;
  Theta theta_true;
  bool failed = false;
  std::string error;
  std::vector<TracePoint> trace;
};

struct CellStats {
  int checkpoint = 0;
  double mean = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  int count = 0;
};

struct Series {
  std::string problem;
  int p = 0;
  std::vector<int> checkpoints;
  std::vector<ReplicationOutcome> replications;
  std::vector<CellStats> stats;  // aggregated over non-failed replications
};

struct ExperimentResult {
  ExperimentSpec spec;
  std::vector<Series> series;
  int failed_replications = 0;
};

/// 95% Student-t interval around the mean (n - 1 dof; zero half-width for
/// a single value).
CellStats mean_ci(const std::vector<double>& values);

/// Runs every (problem, p, replication) cell. Replication r of every
/// series uses master seed base_seed + r and draws the hidden true
/// weights from it, so the p variants are seed-paired. Replications run
/// in a worker pool; aggregation order is fixed, so results are
/// reproducible regardless of scheduling. Failed replications are
/// recorded and excluded from the statistics, with a warning on stderr.
ExperimentResult run_experiment(const ExperimentSpec& spec);

/// Final-regret sweep over p: the trace is restricted to the single
/// checkpoint at the full budget.
ExperimentResult psweep(ExperimentSpec spec);

/// Writes, per problem, a trace CSV ("iter,series,mean_oc,ci_lo,ci_hi"),
/// a sweep CSV when the result is final-only ("p,mean_oc,ci_lo,ci_hi"),
/// a paired-difference CSV when exactly two p series exist, and a JSON
/// dump of the full result. Outputs are byte-reproducible from the spec.
void emit_plotdata(const ExperimentResult& result,
                   const std::filesystem::path& dir);

}  // namespace prefbo
