#include "prefbo/scalarize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace prefbo {

namespace {

void require_same_length(const ObjectiveVector& y, const Theta& theta) {
  if (y.size() != theta.size() || y.empty()) {
    throw std::invalid_argument(
        "scalarize: objective vector and weights must have equal, nonzero "
        "length");
  }
}

}  // namespace

double tchebychev_asf(const ObjectiveVector& y, const Theta& theta,
                      double rho) {
  require_same_length(y, theta);
  double worst = -std::numeric_limits<double>::infinity();
  double sum = 0.0;
  for (std::size_t j = 0; j < y.size(); ++j) {
    const double w = theta[j] * y[j];
    worst = std::max(worst, w);
    sum += w;
  }
  return worst + rho * sum;
}

double utility(const ObjectiveVector& y, const UtilityModel& model) {
  switch (model.kind) {
    case UtilityKind::Tchebychev:
      return -tchebychev_asf(y, model.theta, model.rho);
    case UtilityKind::Linear: {
      require_same_length(y, model.theta);
      double sum = 0.0;
      for (std::size_t j = 0; j < y.size(); ++j) {
        sum += model.theta[j] * y[j];
      }
      return -sum;
    }
  }
  throw std::logic_error("utility: unhandled utility kind");
}

Theta sample_theta(int k, RngStream& rng) {
  if (k < 1) {
    throw std::invalid_argument("sample_theta: requires k >= 1");
  }
  // Exponential spacings give the uniform (flat Dirichlet) distribution.
  Theta theta(static_cast<std::size_t>(k));
  double total = 0.0;
  for (double& t : theta) {
    double u = rng.uniform();
    while (u <= 0.0) u = rng.uniform();
    t = -std::log(u);
    total += t;
  }
  for (double& t : theta) t /= total;
  return theta;
}

std::string_view to_string(UtilityKind kind) {
  switch (kind) {
    case UtilityKind::Tchebychev:
      return "tchebychev";
    case UtilityKind::Linear:
      return "linear";
  }
  throw std::logic_error("to_string: unhandled utility kind");
}

UtilityKind utility_kind_from_string(std::string_view name) {
  if (name == "tchebychev") return UtilityKind::Tchebychev;
  if (name == "linear") return UtilityKind::Linear;
  throw std::invalid_argument("unknown utility kind '" + std::string(name) +
                              "'; supported: tchebychev, linear");
}

Theta estimate_theta(const ObjectiveVector& y_p) {
  if (y_p.empty()) {
    throw std::invalid_argument("estimate_theta: empty objective vector");
  }
  // Floor keeps the inversion defined when an objective reaches zero (or
  // goes negative); weight then concentrates on that objective.
  constexpr double kFloor = 1e-6;
  Theta theta(y_p.size());
  double total = 0.0;
  for (std::size_t j = 0; j < y_p.size(); ++j) {
    theta[j] = 1.0 / std::max(y_p[j], kFloor);
    total += theta[j];
  }
  for (double& t : theta) t /= total;
  return theta;
}

}  // namespace prefbo
