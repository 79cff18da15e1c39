#pragma once

#include <string_view>
#include <vector>

#include "prefbo/rng.hpp"
#include "prefbo/types.hpp"

namespace prefbo {

/// Simplex weight vector: nonnegative entries that sum to 1.
using Theta = std::vector<double>;

enum class UtilityKind { Tchebychev, Linear };

/// Utility model over objective vectors. Objectives are minimized, so
/// higher utility is better and both kinds negate an aggregate of y.
struct UtilityModel {
  UtilityKind kind = UtilityKind::Tchebychev;
  Theta theta;
  double rho = 0.05;  // augmentation weight, Tchebychev only
};

/// Augmented Tchebychev achievement scalarizing function, lower is better:
/// max_j(theta_j y_j) + rho * sum_j(theta_j y_j).
double tchebychev_asf(const ObjectiveVector& y, const Theta& theta,
                      double rho);

/// Utility of y under the model: -asf for Tchebychev, -sum(theta_j y_j)
/// for Linear.
double utility(const ObjectiveVector& y, const UtilityModel& model);

/// Uniform draw from the (k-1)-simplex.
Theta sample_theta(int k, RngStream& rng);

/// Weights under which the picked objective vector maximizes utility:
/// theta_i proportional to 1 / max(y_p[i], 1e-6).
Theta estimate_theta(const ObjectiveVector& y_p);

/// "tchebychev" or "linear"; the inverse throws on unknown names.
std::string_view to_string(UtilityKind kind);
UtilityKind utility_kind_from_string(std::string_view name);

}  // namespace prefbo
