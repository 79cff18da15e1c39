#include "prefbo/engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <utility>

#include "prefbo/acquisition.hpp"
#include "prefbo/gp.hpp"

namespace prefbo {

namespace {

constexpr double kDuplicateDistance = 1e-9;  // normalized units

void validate_config(const RunConfig& cfg, const ProblemSpec& problem) {
  if (cfg.budget <= 0) {
    throw std::invalid_argument("RunConfig: budget must be positive");
  }
  if (cfg.elicit_steps < 0) {
    throw std::invalid_argument("RunConfig: elicit steps must be >= 0");
  }
  if (cfg.initial_design < problem.dim + 1) {
    throw std::invalid_argument(
        "RunConfig: initial design must have at least D + 1 points");
  }
  if (cfg.elicit_steps >= cfg.budget - cfg.initial_design) {
    throw std::invalid_argument(
        "RunConfig: p must be smaller than the budget after the initial "
        "design");
  }
  if (!(cfg.rho > 0.0)) {
    throw std::invalid_argument("RunConfig: rho must be positive");
  }
}

double normalized_distance(const DesignPoint& a, const DesignPoint& b,
                           const Bounds& bounds) {
  double s = 0.0;
  for (std::size_t d = 0; d < bounds.size(); ++d) {
    const double g =
        (a[d] - b[d]) / (bounds[d].second - bounds[d].first);
    s += g * g;
  }
  return std::sqrt(s);
}

}  // namespace

std::vector<DesignPoint> initial_design(int count, const Bounds& bounds,
                                        RngStream& rng) {
  if (count < 1) {
    throw std::invalid_argument("initial_design: count must be >= 1");
  }
  if (bounds.empty()) {
    throw std::invalid_argument("initial_design: empty bounds");
  }
  const int dim = static_cast<int>(bounds.size());
  std::vector<std::vector<int>> strata(dim);
  for (int d = 0; d < dim; ++d) {
    strata[d].resize(count);
    for (int i = 0; i < count; ++i) strata[d][i] = i;
    for (int i = count - 1; i > 0; --i) {
      const auto j = rng.uniform_index(static_cast<std::size_t>(i) + 1);
      std::swap(strata[d][i], strata[d][j]);
    }
  }
  std::vector<DesignPoint> points(count, DesignPoint(dim));
  for (int i = 0; i < count; ++i) {
    for (int d = 0; d < dim; ++d) {
      const auto [lo, hi] = bounds[d];
      points[i][d] =
          lo + (hi - lo) * (strata[d][i] + rng.uniform()) / count;
    }
  }
  return points;
}

Engine::Engine(RunConfig config, DMOracle& oracle, ProgressFn on_progress)
    : problem_(lookup_problem(config.problem)),
      oracle_(&oracle),
      on_progress_(std::move(on_progress)) {
  validate_config(config, problem_);
  state_.config = std::move(config);
}

Engine::Engine(RunState state, DMOracle& oracle, ProgressFn on_progress)
    : problem_(lookup_problem(state.config.problem)),
      oracle_(&oracle),
      on_progress_(std::move(on_progress)) {
  validate_config(state.config, problem_);
  if (static_cast<int>(state.history.size()) > state.config.budget) {
    throw std::invalid_argument("Engine: history exceeds budget");
  }
  for (const Sample& s : state.history) {
    require_in_bounds(problem_, s.x);
  }
  state_ = std::move(state);
}

void Engine::notify() {
  if (on_progress_) on_progress_(state_);
}

void Engine::run_initial_design() {
  if (state_.phase != RunPhase::InitialDesign) {
    throw std::logic_error("run_initial_design: wrong phase");
  }
  RngStream rng(state_.config.seed, "design");
  const auto points =
      initial_design(state_.config.initial_design, problem_.bounds, rng);
  if (state_.history.size() > points.size()) {
    throw std::logic_error("run_initial_design: history exceeds the design");
  }
  // The design is a pure function of the seed, so a snapshot taken midway
  // resumes by skipping the prefix it already evaluated.
  for (std::size_t i = state_.history.size(); i < points.size(); ++i) {
    state_.history.push_back({points[i], evaluate(problem_, points[i])});
    notify();
  }
  state_.phase = RunPhase::ParEGOLoop;
  notify();
}

Sample Engine::bo_step(const Theta& theta) {
  const auto n = static_cast<std::uint64_t>(state_.history.size());
  const UtilityModel model{UtilityKind::Tchebychev, theta,
                           state_.config.rho};

  std::vector<DesignPoint> xs;
  std::vector<double> us;
  xs.reserve(state_.history.size());
  us.reserve(state_.history.size());
  double u_max = -std::numeric_limits<double>::infinity();
  for (const Sample& s : state_.history) {
    xs.push_back(s.x);
    us.push_back(utility(s.y, model));
    u_max = std::max(u_max, us.back());
  }

  const GPModel gp = GPModel::fit(xs, us, problem_.bounds);
  RngStream ei_rng(state_.config.seed, "ei", n);
  const EIResult ei = maximize_ei({gp, u_max, problem_.bounds}, ei_rng);

  const DesignPoint* chosen = nullptr;
  for (const EICandidate& cand : ei.candidates) {
    bool duplicate = false;
    for (const Sample& s : state_.history) {
      if (normalized_distance(cand.x, s.x, problem_.bounds) <=
          kDuplicateDistance) {
        duplicate = true;
        break;
      }
    }
    if (!duplicate) {
      chosen = &cand.x;
      break;
    }
  }
  if (chosen == nullptr) {
    throw std::runtime_error(
        "bo_step: every acquisition candidate duplicates an evaluated "
        "point");
  }
  if (chosen != &ei.candidates.front().x) {
    ++state_.duplicate_fallbacks;
  }

  Sample sample{*chosen, evaluate(problem_, *chosen)};
  state_.history.push_back(sample);
  notify();
  return sample;
}

Sample Engine::parego_step() {
  if (state_.phase != RunPhase::ParEGOLoop) {
    throw std::logic_error("parego_step: wrong phase");
  }
  const int prefix_end = state_.config.budget - state_.config.elicit_steps;
  if (static_cast<int>(state_.history.size()) >= prefix_end) {
    throw std::logic_error("parego_step: prefix budget exhausted");
  }
  RngStream theta_rng(state_.config.seed, "theta",
                      static_cast<std::uint64_t>(state_.history.size()));
  const Theta theta =
      sample_theta(problem_.num_objectives, theta_rng);
  return bo_step(theta);
}

void Engine::elicit() {
  if (state_.config.elicit_steps == 0) {
    throw std::logic_error("elicit: configured without an elicitation step");
  }
  const int m = state_.config.budget - state_.config.elicit_steps;
  if (!state_.elicitation.has_value()) {
    if (state_.phase != RunPhase::ParEGOLoop ||
        static_cast<int>(state_.history.size()) != m) {
      throw std::logic_error("elicit: requires the full evaluation prefix");
    }
    std::vector<DesignPoint> xs;
    xs.reserve(state_.history.size());
    for (const Sample& s : state_.history) xs.push_back(s.x);

    std::vector<GPModel> gps;
    gps.reserve(problem_.num_objectives);
    for (int j = 0; j < problem_.num_objectives; ++j) {
      std::vector<double> ys;
      ys.reserve(state_.history.size());
      for (const Sample& s : state_.history) ys.push_back(s.y[j]);
      gps.push_back(GPModel::fit(xs, ys, problem_.bounds));
    }
    const auto posterior_means = [&gps](const DesignPoint& x) {
      ObjectiveVector y(gps.size());
      for (std::size_t j = 0; j < gps.size(); ++j) {
        y[j] = gps[j].posterior_mean(x);
      }
      return y;
    };

    RngStream nsga_rng(state_.config.seed, "nsga2",
                       static_cast<std::uint64_t>(state_.config.budget));
    FrontApproximation front = run_nsga2(posterior_means, problem_.bounds,
                                         state_.config.nsga, nsga_rng);
    std::ostringstream label;
    label << "posterior-mean of GP snapshot at iteration " << m;
    front.evaluator_label = label.str();

    ElicitationRecord rec;
    rec.iteration = m;
    rec.front = std::move(front);
    state_.elicitation = std::move(rec);
    state_.phase = RunPhase::AwaitingElicitation;
    notify();
  } else if (state_.phase != RunPhase::AwaitingElicitation) {
    throw std::logic_error("elicit: already elicited");
  }

  ElicitationRecord& rec = *state_.elicitation;
  const std::size_t pick = oracle_->pick_from_front(rec.front);
  if (pick >= rec.front.members.size()) {
    throw std::out_of_range("elicit: pick outside the front");
  }
  rec.picked_index = pick;
  rec.picked_predicted = rec.front.members[pick].objectives;
  rec.theta_hat = estimate_theta(rec.picked_predicted);
  state_.phase = RunPhase::FocusedPhase;
  notify();
}

Sample Engine::focused_step() {
  if (state_.phase != RunPhase::FocusedPhase ||
      !state_.elicitation.has_value() ||
      !state_.elicitation->picked_index.has_value()) {
    throw std::logic_error("focused_step: elicitation has not happened");
  }
  if (static_cast<int>(state_.history.size()) >= state_.config.budget) {
    throw std::logic_error("focused_step: budget exhausted");
  }
  return bo_step(state_.elicitation->theta_hat);
}

RunResult Engine::finish(const ReferenceBest* reference) {
  if (static_cast<int>(state_.history.size()) != state_.config.budget) {
    throw std::logic_error("finish: budget not fully consumed");
  }
  RunResult result;
  result.config = state_.config;
  result.history = state_.history;
  result.elicitation = state_.elicitation;
  result.duplicate_fallbacks = state_.duplicate_fallbacks;

  std::vector<ObjectiveVector> ys;
  ys.reserve(result.history.size());
  for (const Sample& s : result.history) ys.push_back(s.y);
  const auto fronts = fast_non_dominated_sort(ys);
  for (int idx : fronts[0]) {
    result.pareto_indices.push_back(static_cast<std::size_t>(idx));
  }

  if (const UtilityModel* model = oracle_->true_model()) {
    const std::size_t picked = final_pick(*oracle_, result.history);
    result.picked_index = picked;
    result.picked_utility = utility(result.history[picked].y, *model);
    if (reference != nullptr) {
      result.opportunity_cost =
          opportunity_cost(*reference, result.history[picked].y, *model);
    }
  }

  state_.phase = RunPhase::Done;
  result.phase = RunPhase::Done;
  notify();
  return result;
}

RunResult Engine::run_to_completion(const ReferenceBest* reference) {
  if (state_.phase == RunPhase::InitialDesign) {
    run_initial_design();
  }
  const int prefix_end = state_.config.budget - state_.config.elicit_steps;
  while (state_.phase == RunPhase::ParEGOLoop &&
         static_cast<int>(state_.history.size()) < prefix_end) {
    parego_step();
  }
  if (state_.config.elicit_steps > 0 &&
      (state_.phase == RunPhase::ParEGOLoop ||
       state_.phase == RunPhase::AwaitingElicitation)) {
    elicit();
  }
  while (static_cast<int>(state_.history.size()) < state_.config.budget) {
    focused_step();
  }
  return finish(reference);
}

RunResult Engine::run(const RunConfig& config, DMOracle& oracle,
                      const ReferenceBest* reference,
                      ProgressFn on_progress) {
  Engine engine(config, oracle, std::move(on_progress));
  try {
    return engine.run_to_completion(reference);
  } catch (const RunCancelled&) {
    throw;
  } catch (const std::exception& e) {
    RunResult failed;
    failed.config = engine.state_.config;
    failed.history = engine.state_.history;
    failed.elicitation = engine.state_.elicitation;
    failed.duplicate_fallbacks = engine.state_.duplicate_fallbacks;
    failed.failed = true;
    failed.phase = engine.state_.phase;
    failed.error = e.what();
    return failed;
  }
}

RunResult Engine::resume(RunState state, DMOracle& oracle,
                         const ReferenceBest* reference,
                         ProgressFn on_progress) {
  Engine engine(std::move(state), oracle, std::move(on_progress));
  try {
    return engine.run_to_completion(reference);
  } catch (const RunCancelled&) {
    throw;
  } catch (const std::exception& e) {
    RunResult failed;
    failed.config = engine.state_.config;
    failed.history = engine.state_.history;
    failed.elicitation = engine.state_.elicitation;
    failed.duplicate_fallbacks = engine.state_.duplicate_fallbacks;
    failed.failed = true;
    failed.phase = engine.state_.phase;
    failed.error = e.what();
    return failed;
  }
}

std::vector<TracePoint> Engine::oc_trace(const RunConfig& config,
                                         DMOracle& oracle,
                                         const std::vector<int>& checkpoints,
                                         const ReferenceBest& reference) {
  if (oracle.true_model() == nullptr) {
    throw std::invalid_argument(
        "oc_trace: requires a simulated decision maker");
  }
  std::vector<int> points = checkpoints;
  std::sort(points.begin(), points.end());
  points.erase(std::unique(points.begin(), points.end()), points.end());
  if (points.empty()) {
    throw std::invalid_argument("oc_trace: no checkpoints");
  }
  const int p = config.elicit_steps;
  for (int i : points) {
    if (i <= config.initial_design + p || i > config.budget) {
      std::ostringstream os;
      os << "oc_trace: checkpoint " << i << " outside ("
         << config.initial_design + p << ", " << config.budget << "]";
      throw std::invalid_argument(os.str());
    }
  }

  // The prefix engine is configured so its plain steps can reach the
  // longest prefix; branches re-budget a copy of its state.
  Engine prefix(config, oracle);
  prefix.run_initial_design();

  std::vector<TracePoint> trace;
  trace.reserve(points.size());
  for (int i : points) {
    while (static_cast<int>(prefix.state_.history.size()) < i - p) {
      prefix.parego_step();
    }
    RunState branch_state = prefix.state_;
    branch_state.config.budget = i;
    Engine branch(std::move(branch_state), oracle);
    const RunResult result = branch.run_to_completion(&reference);
    TracePoint tp;
    tp.iteration = i;
    tp.oc = result.opportunity_cost.value();
    tp.picked_y = result.history[result.picked_index.value()].y;
    trace.push_back(std::move(tp));
  }
  return trace;
}

}  // namespace prefbo
