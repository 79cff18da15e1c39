#pragma once

#include <vector>

#include "prefbo/gp.hpp"
#include "prefbo/rng.hpp"
#include "prefbo/types.hpp"

namespace prefbo {

/// Query for one acquisition maximization. The model predicts utilities
/// (higher is better) and u_max is the incumbent best among evaluated
/// points.
struct EIQuery {
  const GPModel& model;
  double u_max = 0.0;
  Bounds bounds;
};

struct EICandidate {
  DesignPoint x;
  double ei = 0.0;
};

/// Outcome of maximize_ei. candidates holds every probe (polished starts
/// first in merit order), sorted by EI descending with ties broken by
/// generation order; best duplicates candidates.front(). all_zero is set
/// when no probe had positive EI, in which case best is simply the first
/// random candidate in generation order.
struct EIResult {
  DesignPoint best;
  double best_ei = 0.0;
  bool all_zero = false;
  std::vector<EICandidate> candidates;
};

/// Closed-form E[max(N(mean, variance) - u_max, 0)]. Exact branch at
/// variance = 0.
double expected_improvement(double mean, double variance, double u_max);

/// Multi-start maximization: uniform random candidates plus coordinate
/// golden-section polish from the best few. Deterministic given the
/// stream state; the result is always inside bounds.
EIResult maximize_ei(const EIQuery& query, RngStream& rng);

}  // namespace prefbo
