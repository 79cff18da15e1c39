#include "prefbo/testbed.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace prefbo {

void require_in_bounds(const ProblemSpec& spec, const DesignPoint& x) {
  if (static_cast<int>(x.size()) != spec.dim) {
    std::ostringstream os;
    os << spec.name << ": expected " << spec.dim << " coordinates, got "
       << x.size();
    throw std::invalid_argument(os.str());
  }
  for (int d = 0; d < spec.dim; ++d) {
    const auto [lo, hi] = spec.bounds[d];
    // The negated comparison also rejects NaN coordinates.
    if (!(x[d] >= lo && x[d] <= hi)) {
      std::ostringstream os;
      os << spec.name << ": coordinate " << d << " = " << x[d]
         << " outside [" << lo << ", " << hi << "]";
      throw std::domain_error(os.str());
    }
  }
}

ObjectiveVector eval_hole(const DesignPoint& x, const ProblemSpec& spec) {
  require_in_bounds(spec, x);
  const HoleParams& hp = spec.hole;

  // Translate, rotate by 45 degrees, scale by pi. One shared constant for
  // cos and sin of the angle keeps the map exactly antisymmetric: inputs
  // with x2 = -x1 land exactly on u = 0.
  const double delta = 1.0 - std::numbers::sqrt2 / 2.0;
  const double r = std::numbers::sqrt2 / 2.0;
  const double x1t = x[0] + delta;
  const double x2t = x[1] - delta;
  const double x1r = (x1t * r + x2t * r) * std::numbers::pi;
  const double x2r = (-x1t * r + x2t * r) * std::numbers::pi;

  // Problem coordinates u in [-1,1], v in [0,1].
  const double u = std::sin(x1r / 2.0);
  const double sv = std::sin(x2r / 2.0);
  const double v = sv * sv;

  // Hardness: odd root of u (0 at 0), large power of v.
  double t = 0.0;
  if (u > 0.0) {
    t = std::pow(u, hp.hardness);
  } else if (u < 0.0) {
    t = -std::pow(-u, hp.hardness);
  }
  const double a = std::pow(v, 1.0 / hp.hardness) * 2.0 * hp.p;

  double b = 0.0;
  if (hp.hole_enabled && a <= hp.p) {
    b = (hp.p - a) * std::exp(hp.q);
  }
  const double d = a / 2.0 + hp.d0;
  const double c = hp.q / (d * d);

  const double f1 =
      (t + 1.0) * (t + 1.0) + a + b * std::exp(-(c - t) * (c - t));
  const double f2 =
      (t - 1.0) * (t - 1.0) + a + b * std::exp(-(c + t) * (c + t));
  return {f1, f2};
}

ObjectiveVector eval_pol(const DesignPoint& x) {
  static const ProblemSpec pol = lookup_problem("POL");
  require_in_bounds(pol, x);

  const double a = 0.5 * std::sin(1.0) - 2.0 * std::cos(1.0) +
                   1.0 * std::sin(2.0) - 1.5 * std::cos(2.0);
  const double c = 1.5 * std::sin(1.0) - 1.0 * std::cos(1.0) +
                   2.0 * std::sin(2.0) - 0.5 * std::cos(2.0);
  const double b = 0.5 * std::sin(x[0]) - 2.0 * std::cos(x[0]) +
                   1.0 * std::sin(x[1]) - 1.5 * std::cos(x[1]);
  const double d = 1.5 * std::sin(x[0]) - 1.0 * std::cos(x[0]) +
                   2.0 * std::sin(x[1]) - 0.5 * std::cos(x[1]);

  const double f1 = 1.0 + (a - b) * (a - b) + (c - d) * (c - d);
  const double f2 = (x[0] + 3.0) * (x[0] + 3.0) + (x[1] + 1.0) * (x[1] + 1.0);
  return {f1, f2};
}

ObjectiveVector evaluate(const ProblemSpec& spec, const DesignPoint& x) {
  switch (spec.family) {
    case ProblemFamily::Hole:
      return eval_hole(x, spec);
    case ProblemFamily::Pol:
      return eval_pol(x);
  }
  throw std::logic_error("evaluate: unhandled problem family");
}

ProblemSpec lookup_problem(const std::string& name) {
  ProblemSpec spec;
  spec.name = name;
  spec.dim = 2;
  spec.num_objectives = 2;
  if (name == "HOLE-1" || name == "HOLE-2") {
    spec.family = ProblemFamily::Hole;
    spec.bounds = {{-1.0, 1.0}, {-1.0, 1.0}};
    spec.hole.hole_enabled = (name == "HOLE-1");
  } else if (name == "POL") {
    spec.family = ProblemFamily::Pol;
    spec.bounds = {{-std::numbers::pi, std::numbers::pi},
                   {-std::numbers::pi, std::numbers::pi}};
  } else {
    throw std::invalid_argument("unknown problem '" + name +
                                "'; supported: HOLE-1, HOLE-2, POL");
  }
  return spec;
}

}  // namespace prefbo
