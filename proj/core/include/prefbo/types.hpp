#pragma once

#include <utility>
#include <vector>

namespace prefbo {

/// A point in design space, length D.
using DesignPoint = std::vector<double>;

/// Objective values at a design point, length K (minimization convention).
using ObjectiveVector = std::vector<double>;

/// Per-dimension (lo, hi) box bounds.
using Bounds = std::vector<std::pair<double, double>>;

/// One evaluated design together with its true objective values.
struct Sample {
  DesignPoint x;
  ObjectiveVector y;
};

}  // namespace prefbo
