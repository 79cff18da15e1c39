#pragma once

#include <string>

#include "prefbo/types.hpp"

namespace prefbo {

enum class ProblemFamily { Hole, Pol };

/// Parameters of the HOLE family. The hole_enabled flag distinguishes
/// HOLE-1 (true, disconnected front) from HOLE-2 (false, convex front).
struct HoleParams {
  double q = 0.2;
  double p = 2.0;
  double d0 = 0.02;
  double hardness = 0.2;
  bool hole_enabled = true;
};

struct ProblemSpec {
  std::string name;
  ProblemFamily family = ProblemFamily::Hole;
  int dim = 0;
  int num_objectives = 0;
  Bounds bounds;
  HoleParams hole;  // meaningful only for the Hole family
};

/// Throws std::domain_error if x lies outside the problem's box, or
/// std::invalid_argument if its length is not the problem dimension.
void require_in_bounds(const ProblemSpec& spec, const DesignPoint& x);

/// HOLE objectives (minimization). Requires x in [-1,1]^2.
ObjectiveVector eval_hole(const DesignPoint& x, const ProblemSpec& spec);

/// POL objectives (minimization). Requires x in [-pi,pi]^2.
ObjectiveVector eval_pol(const DesignPoint& x);

/// Dispatches to the evaluator for spec's family.
ObjectiveVector evaluate(const ProblemSpec& spec, const DesignPoint& x);

/// Returns the parameterized spec for "HOLE-1", "HOLE-2" or "POL".
ProblemSpec lookup_problem(const std::string& name);

}  // namespace prefbo
