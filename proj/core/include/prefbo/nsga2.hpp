#pragma once

#include <functional>
#include <string>
#include <vector>

#include "prefbo/rng.hpp"
#include "prefbo/types.hpp"

namespace prefbo {

struct Individual {
  DesignPoint design;
  ObjectiveVector objectives;
  int rank = 0;
  double crowding = 0.0;
};

/// Rank-0 members of the final population. Pairwise non-dominated; all
/// designs inside the bounds that produced them.
struct FrontApproximation {
  std::vector<Individual> members;
  int generations = 0;
  int population_size = 0;
  std::string evaluator_label;
};

struct Nsga2Params {
  int population_size = 100;
  int generations = 300;
  double crossover_rate = 0.9;
  double crossover_eta = 15.0;
  double mutation_eta = 20.0;
  double mutation_rate = -1.0;  // <= 0 means 1/D
};

/// Pareto dominance under minimization: a is nowhere worse and somewhere
/// strictly better.
bool dominates(const ObjectiveVector& a, const ObjectiveVector& b);

/// Partition of indices into fronts: front k is the non-dominated set
/// once fronts 0..k-1 are removed.
std::vector<std::vector<int>> fast_non_dominated_sort(
    const std::vector<ObjectiveVector>& points);

/// Per-member crowding distance within one front. Per-objective extremes
/// get +infinity; interior members sum normalized neighbor gaps. An
/// objective with zero range contributes nothing.
std::vector<double> crowding_distance(
    const std::vector<ObjectiveVector>& front);

using Evaluator = std::function<ObjectiveVector(const DesignPoint&)>;

/// Standard generational NSGA-II: binary tournament on (rank, crowding),
/// simulated binary crossover, polynomial mutation, (mu + lambda)
/// truncation. Deterministic given the stream state.
FrontApproximation run_nsga2(const Evaluator& evaluator, const Bounds& bounds,
                             const Nsga2Params& params, RngStream& rng);

}  // namespace prefbo
