#include "prefbo/acquisition.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace prefbo {

namespace {

constexpr int kRandomCandidates = 1000;
constexpr int kPolishStarts = 5;
constexpr int kPolishSweeps = 3;
constexpr int kGoldenIters = 16;

double normal_pdf(double z) {
  return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

double normal_cdf(double z) {
  return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

// Maximizes f on [lo, hi]; returns the argmax only if it beats the
// incumbent value (golden section can regress on non-unimodal slices).
template <typename F>
void golden_improve(const F& f, double lo, double hi, double& arg,
                    double& val) {
  constexpr double kRatio = 0.6180339887498949;
  double a = lo;
  double b = hi;
  double c = b - kRatio * (b - a);
  double d = a + kRatio * (b - a);
  double fc = f(c);
  double fd = f(d);
  for (int i = 0; i < kGoldenIters; ++i) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kRatio * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kRatio * (b - a);
      fd = f(d);
    }
  }
  const double mid = 0.5 * (a + b);
  const double fm = f(mid);
  if (fm > val) {
    val = fm;
    arg = mid;
  }
}

}  // namespace

double expected_improvement(double mean, double variance, double u_max) {
  if (!(variance >= 0.0)) {
    throw std::invalid_argument(
        "expected_improvement: variance must be nonnegative");
  }
  if (variance == 0.0) {
    return std::max(mean - u_max, 0.0);
  }
  const double s = std::sqrt(variance);
  const double z = (mean - u_max) / s;
  return std::max(s * (z * normal_cdf(z) + normal_pdf(z)), 0.0);
}

EIResult maximize_ei(const EIQuery& query, RngStream& rng) {
  if (query.bounds.empty()) {
    throw std::invalid_argument("maximize_ei: empty bounds");
  }
  for (const auto& [lo, hi] : query.bounds) {
    if (!(lo < hi)) {
      throw std::invalid_argument("maximize_ei: bounds require lo < hi");
    }
  }
  const int dim = static_cast<int>(query.bounds.size());

  auto ei_at = [&](const DesignPoint& x) {
    return expected_improvement(query.model.posterior_mean(x),
                                query.model.posterior_variance(x),
                                query.u_max);
  };

  std::vector<EICandidate> cands(kRandomCandidates);
  for (EICandidate& c : cands) {
    c.x.resize(dim);
    for (int d = 0; d < dim; ++d) {
      c.x[d] = rng.uniform(query.bounds[d].first, query.bounds[d].second);
    }
    c.ei = ei_at(c.x);
  }

  // Merit order with ties broken by generation order.
  std::vector<int> order(cands.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return cands[a].ei > cands[b].ei; });

  const int starts = std::min<int>(kPolishStarts, static_cast<int>(cands.size()));
  for (int s = 0; s < starts; ++s) {
    EICandidate& c = cands[order[s]];
    for (int sweep = 0; sweep < kPolishSweeps; ++sweep) {
      for (int d = 0; d < dim; ++d) {
        auto slice = [&](double v) {
          DesignPoint probe = c.x;
          probe[d] = v;
          return ei_at(probe);
        };
        golden_improve(slice, query.bounds[d].first, query.bounds[d].second,
                       c.x[d], c.ei);
      }
    }
  }

  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return cands[a].ei > cands[b].ei; });

  EIResult result;
  result.candidates.reserve(cands.size());
  for (int idx : order) result.candidates.push_back(std::move(cands[idx]));
  result.all_zero = !(result.candidates.front().ei > 0.0);
  result.best = result.candidates.front().x;
  result.best_ei = result.candidates.front().ei;
  return result;
}

}  // namespace prefbo
