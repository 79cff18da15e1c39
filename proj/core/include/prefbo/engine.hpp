#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "prefbo/dm.hpp"
#include "prefbo/nsga2.hpp"
#include "prefbo/scalarize.hpp"
#include "prefbo/testbed.hpp"
#include "prefbo/types.hpp"

namespace prefbo {

struct RunConfig {
  std::string problem = "HOLE-2";
  int budget = 40;          // total true evaluations
  int elicit_steps = 1;     // steps reserved after the elicitation; 0 = none
  int initial_design = 21;  // Latin hypercube size
  double rho = 0.05;        // engine-side Tchebychev augmentation
  Nsga2Params nsga;
  std::uint64_t seed = 0;
};

enum class RunPhase {
  InitialDesign,
  ParEGOLoop,
  AwaitingElicitation,
  FocusedPhase,
  Done
};

/// Snapshot of the elicitation event. The front is recorded when built;
/// pick, predicted objectives and estimated weights are filled once the
/// decision maker answers.
struct ElicitationRecord {
  int iteration = 0;  // history size when the front was built
  FrontApproximation front;
  std::optional<std::size_t> picked_index;
  ObjectiveVector picked_predicted;
  Theta theta_hat;
};

/// Complete, resumable run state. Together with the embedded config it
/// determines the rest of the run: per-iteration randomness is indexed by
/// history length, so no generator state needs to be carried.
struct RunState {
  RunConfig config;
  std::vector<Sample> history;
  RunPhase phase = RunPhase::InitialDesign;
  std::optional<ElicitationRecord> elicitation;
  int duplicate_fallbacks = 0;
};

struct RunResult {
  RunConfig config;
  std::vector<Sample> history;
  std::vector<std::size_t> pareto_indices;  // ascending into history
  std::optional<ElicitationRecord> elicitation;
  std::optional<std::size_t> picked_index;
  std::optional<double> picked_utility;
  std::optional<double> opportunity_cost;
  int duplicate_fallbacks = 0;
  bool failed = false;
  RunPhase phase = RunPhase::Done;  // phase reached when the run stopped
  std::string error;
};

struct TracePoint {
  int iteration = 0;
  double oc = 0.0;
  ObjectiveVector picked_y;
};

using ProgressFn = std::function<void(const RunState&)>;

/// Latin hypercube: per dimension, one point in each of `count` strata.
std::vector<DesignPoint> initial_design(int count, const Bounds& bounds,
                                        RngStream& rng);

/// One optimization run as an explicit state machine. The static entry
/// points drive it to completion; the step methods exist so tests can
/// exercise single transitions.
class Engine {
 public:
  Engine(RunConfig config, DMOracle& oracle, ProgressFn on_progress = nullptr);

  /// Continues from a snapshot; the state's embedded config governs.
  Engine(RunState state, DMOracle& oracle, ProgressFn on_progress = nullptr);

  const RunState& state() const { return state_; }
  const ProblemSpec& problem() const { return problem_; }

  /// Evaluates the Latin hypercube design; phase becomes ParEGOLoop.
  void run_initial_design();

  /// One scalarized step under a freshly sampled weight vector.
  Sample parego_step();

  /// Builds the posterior-mean front, obtains the pick (blocking for an
  /// interactive DM), estimates the weights; phase becomes FocusedPhase.
  /// Resuming a state parked in AwaitingElicitation reuses the recorded
  /// front instead of rebuilding it.
  void elicit();

  /// One scalarized step under the elicited weights.
  Sample focused_step();

  /// Non-dominated set, end-of-run pick and (given a reference) regret;
  /// phase becomes Done.
  RunResult finish(const ReferenceBest* reference = nullptr);

  /// Runs every remaining phase. Exceptions propagate.
  RunResult run_to_completion(const ReferenceBest* reference = nullptr);

  /// Full run; failures (except RunCancelled) are captured in the result.
  static RunResult run(const RunConfig& config, DMOracle& oracle,
                       const ReferenceBest* reference = nullptr,
                       ProgressFn on_progress = nullptr);

  /// Same capture semantics, continuing from a snapshot.
  static RunResult resume(RunState state, DMOracle& oracle,
                          const ReferenceBest* reference = nullptr,
                          ProgressFn on_progress = nullptr);

  /// Regret-versus-iteration protocol: for each checkpoint i, branch off
  /// the shared evaluation prefix of length i - p, elicit, spend the last
  /// p steps focused, and score the branch's final pick. The checkpoint
  /// at i = budget reproduces run() exactly.
  static std::vector<TracePoint> oc_trace(const RunConfig& config,
                                          DMOracle& oracle,
                                          const std::vector<int>& checkpoints,
                                          const ReferenceBest& reference);

 private:
  Sample bo_step(const Theta& theta);
  void notify();

  RunState state_;
  ProblemSpec problem_;
  DMOracle* oracle_;
  ProgressFn on_progress_;
};

}  // namespace prefbo
