#include "prefbo/nsga2.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace prefbo {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

ObjectiveVector checked_eval(const Evaluator& evaluator,
                             const DesignPoint& x) {
  ObjectiveVector y = evaluator(x);
  for (double v : y) {
    if (!std::isfinite(v)) {
      std::ostringstream os;
      os << "run_nsga2: evaluator returned non-finite objectives at (";
      for (std::size_t d = 0; d < x.size(); ++d) {
        os << (d ? ", " : "") << x[d];
      }
      os << ")";
      throw std::runtime_error(os.str());
    }
  }
  return y;
}

// Deb's bounded simulated binary crossover for one variable pair.
void sbx_pair(double p1, double p2, double lo, double hi, double eta,
              RngStream& rng, double& c1, double& c2) {
  c1 = p1;
  c2 = p2;
  if (std::abs(p1 - p2) <= 1e-14) return;
  const double y1 = std::min(p1, p2);
  const double y2 = std::max(p1, p2);
  const double u = rng.uniform();
  const double exponent = 1.0 / (eta + 1.0);

  double beta = 1.0 + 2.0 * (y1 - lo) / (y2 - y1);
  double alpha = 2.0 - std::pow(beta, -(eta + 1.0));
  double betaq = (u <= 1.0 / alpha)
                     ? std::pow(u * alpha, exponent)
                     : std::pow(1.0 / (2.0 - u * alpha), exponent);
  double lo_child = 0.5 * ((y1 + y2) - betaq * (y2 - y1));

  beta = 1.0 + 2.0 * (hi - y2) / (y2 - y1);
  alpha = 2.0 - std::pow(beta, -(eta + 1.0));
  betaq = (u <= 1.0 / alpha) ? std::pow(u * alpha, exponent)
                             : std::pow(1.0 / (2.0 - u * alpha), exponent);
  double hi_child = 0.5 * ((y1 + y2) + betaq * (y2 - y1));

  lo_child = std::clamp(lo_child, lo, hi);
  hi_child = std::clamp(hi_child, lo, hi);
  if (rng.uniform() <= 0.5) {
    c1 = hi_child;
    c2 = lo_child;
  } else {
    c1 = lo_child;
    c2 = hi_child;
  }
}

// Deb's polynomial mutation for one variable.
double polynomial_mutate(double y, double lo, double hi, double eta,
                         RngStream& rng) {
  const double range = hi - lo;
  const double u = rng.uniform();
  const double exponent = 1.0 / (eta + 1.0);
  double deltaq;
  if (u <= 0.5) {
    const double d = (y - lo) / range;
    const double val =
        2.0 * u + (1.0 - 2.0 * u) * std::pow(1.0 - d, eta + 1.0);
    deltaq = std::pow(val, exponent) - 1.0;
  } else {
    const double d = (hi - y) / range;
    const double val =
        2.0 * (1.0 - u) + 2.0 * (u - 0.5) * std::pow(1.0 - d, eta + 1.0);
    deltaq = 1.0 - std::pow(val, exponent);
  }
  return std::clamp(y + deltaq * range, lo, hi);
}

// Lexicographic (rank asc, crowding desc); first argument wins ties.
int tournament(const std::vector<Individual>& pop, RngStream& rng) {
  const int a = static_cast<int>(rng.uniform_index(pop.size()));
  const int b = static_cast<int>(rng.uniform_index(pop.size()));
  if (pop[b].rank < pop[a].rank) return b;
  if (pop[a].rank == pop[b].rank && pop[b].crowding > pop[a].crowding) {
    return b;
  }
  return a;
}

void assign_rank_and_crowding(std::vector<Individual>& pop) {
  std::vector<ObjectiveVector> ys;
  ys.reserve(pop.size());
  for (const Individual& ind : pop) ys.push_back(ind.objectives);
  const auto fronts = fast_non_dominated_sort(ys);
  for (std::size_t r = 0; r < fronts.size(); ++r) {
    std::vector<ObjectiveVector> front_ys;
    front_ys.reserve(fronts[r].size());
    for (int idx : fronts[r]) front_ys.push_back(ys[idx]);
    const std::vector<double> crowd = crowding_distance(front_ys);
    for (std::size_t k = 0; k < fronts[r].size(); ++k) {
      pop[fronts[r][k]].rank = static_cast<int>(r);
      pop[fronts[r][k]].crowding = crowd[k];
    }
  }
}

}  // namespace

bool dominates(const ObjectiveVector& a, const ObjectiveVector& b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("dominates: length mismatch");
  }
  bool strictly_better = false;
  for (std::size_t j = 0; j < a.size(); ++j) {
    if (a[j] > b[j]) return false;
    if (a[j] < b[j]) strictly_better = true;
  }
  return strictly_better;
}

std::vector<std::vector<int>> fast_non_dominated_sort(
    const std::vector<ObjectiveVector>& points) {
  const int n = static_cast<int>(points.size());
  if (n == 0) {
    throw std::invalid_argument("fast_non_dominated_sort: empty input");
  }
  std::vector<std::vector<int>> dominated(n);
  std::vector<int> dom_count(n, 0);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (dominates(points[i], points[j])) {
        dominated[i].push_back(j);
        ++dom_count[j];
      } else if (dominates(points[j], points[i])) {
        dominated[j].push_back(i);
        ++dom_count[i];
      }
    }
  }
  std::vector<std::vector<int>> fronts;
  std::vector<int> current;
  for (int i = 0; i < n; ++i) {
    if (dom_count[i] == 0) current.push_back(i);
  }
  while (!current.empty()) {
    fronts.push_back(current);
    std::vector<int> next;
    for (int i : fronts.back()) {
      for (int j : dominated[i]) {
        if (--dom_count[j] == 0) next.push_back(j);
      }
    }
    std::sort(next.begin(), next.end());
    current = std::move(next);
  }
  return fronts;
}

std::vector<double> crowding_distance(
    const std::vector<ObjectiveVector>& front) {
  const int n = static_cast<int>(front.size());
  if (n == 0) {
    throw std::invalid_argument("crowding_distance: empty front");
  }
  std::vector<double> dist(n, 0.0);
  if (n <= 2) {
    std::fill(dist.begin(), dist.end(), kInf);
    return dist;
  }
  const int k = static_cast<int>(front[0].size());
  std::vector<int> order(n);
  for (int j = 0; j < k; ++j) {
    for (int i = 0; i < n; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return front[a][j] < front[b][j];
    });
    dist[order.front()] = kInf;
    dist[order.back()] = kInf;
    const double range = front[order.back()][j] - front[order.front()][j];
    if (range <= 0.0) continue;
    for (int i = 1; i < n - 1; ++i) {
      if (dist[order[i]] == kInf) continue;
      dist[order[i]] +=
          (front[order[i + 1]][j] - front[order[i - 1]][j]) / range;
    }
  }
  return dist;
}

FrontApproximation run_nsga2(const Evaluator& evaluator, const Bounds& bounds,
                             const Nsga2Params& params, RngStream& rng) {
  const int pop_size = params.population_size;
  if (pop_size < 4 || pop_size % 2 != 0) {
    throw std::invalid_argument("run_nsga2: population must be even and >= 4");
  }
  if (params.generations < 0) {
    throw std::invalid_argument("run_nsga2: negative generation count");
  }
  if (bounds.empty()) {
    throw std::invalid_argument("run_nsga2: empty bounds");
  }
  for (const auto& [lo, hi] : bounds) {
    if (!(lo < hi)) {
      throw std::invalid_argument("run_nsga2: bounds require lo < hi");
    }
  }
  const int dim = static_cast<int>(bounds.size());
  const double mutation_rate =
      params.mutation_rate > 0.0 ? params.mutation_rate : 1.0 / dim;

  std::vector<Individual> pop(pop_size);
  for (Individual& ind : pop) {
    ind.design.resize(dim);
    for (int d = 0; d < dim; ++d) {
      ind.design[d] = rng.uniform(bounds[d].first, bounds[d].second);
    }
    ind.objectives = checked_eval(evaluator, ind.design);
  }
  assign_rank_and_crowding(pop);

  for (int gen = 0; gen < params.generations; ++gen) {
    std::vector<Individual> offspring;
    offspring.reserve(pop_size);
    while (static_cast<int>(offspring.size()) < pop_size) {
      const Individual& pa = pop[tournament(pop, rng)];
      const Individual& pb = pop[tournament(pop, rng)];
      Individual ca;
      Individual cb;
      ca.design = pa.design;
      cb.design = pb.design;
      if (rng.uniform() <= params.crossover_rate) {
        for (int d = 0; d < dim; ++d) {
          if (rng.uniform() <= 0.5) {
            sbx_pair(pa.design[d], pb.design[d], bounds[d].first,
                     bounds[d].second, params.crossover_eta, rng,
                     ca.design[d], cb.design[d]);
          }
        }
      }
      for (Individual* child : {&ca, &cb}) {
        for (int d = 0; d < dim; ++d) {
          if (rng.uniform() <= mutation_rate) {
            child->design[d] = polynomial_mutate(
                child->design[d], bounds[d].first, bounds[d].second,
                params.mutation_eta, rng);
          }
        }
        child->objectives = checked_eval(evaluator, child->design);
        offspring.push_back(std::move(*child));
        if (static_cast<int>(offspring.size()) == pop_size) break;
      }
    }

    // (mu + lambda) truncation: whole fronts, then crowding within the
    // last partial front.
    std::vector<Individual> merged = std::move(pop);
    merged.insert(merged.end(), std::make_move_iterator(offspring.begin()),
                  std::make_move_iterator(offspring.end()));
    assign_rank_and_crowding(merged);

    std::vector<int> order(merged.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
      order[i] = static_cast<int>(i);
    }
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      if (merged[a].rank != merged[b].rank) {
        return merged[a].rank < merged[b].rank;
      }
      return merged[a].crowding > merged[b].crowding;
    });
    // Survivors keep their rank and crowding from the merged sort; front 0
    // always survives whole or is cut only by crowding, so merged ranks
    // remain valid within the survivors.
    pop.clear();
    pop.reserve(pop_size);
    for (int i = 0; i < pop_size; ++i) pop.push_back(merged[order[i]]);
  }

  FrontApproximation front;
  front.generations = params.generations;
  front.population_size = pop_size;
  for (Individual& ind : pop) {
    if (ind.rank == 0) front.members.push_back(std::move(ind));
  }
  return front;
}

}  // namespace prefbo
