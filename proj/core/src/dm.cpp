#include "prefbo/dm.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

#include "json.hpp"

namespace prefbo {

namespace {

using nlohmann::json;

void require_model_matches(const UtilityModel& a, const UtilityModel& b) {
  bool ok = a.kind == b.kind && a.theta.size() == b.theta.size();
  if (ok) {
    for (std::size_t j = 0; j < a.theta.size(); ++j) {
      ok = ok && std::abs(a.theta[j] - b.theta[j]) <= 1e-12;
    }
    if (a.kind == UtilityKind::Tchebychev) {
      ok = ok && std::abs(a.rho - b.rho) <= 1e-12;
    }
  }
  if (!ok) {
    throw std::invalid_argument(
        "opportunity_cost: utility model does not match the reference");
  }
}

// Downhill simplex on -f with reflection 1, expansion 2, contraction 0.5,
// shrink 0.5. Deterministic; f is responsible for handling out-of-box
// probes (the callers clamp).
void nelder_mead_maximize(const std::function<double(const DesignPoint&)>& f,
                          double step, int max_iters, DesignPoint& x,
                          double& value) {
  const int dim = static_cast<int>(x.size());
  struct Vertex {
    DesignPoint x;
    double v;
  };
  std::vector<Vertex> s(dim + 1);
  s[0] = {x, f(x)};
  for (int d = 0; d < dim; ++d) {
    DesignPoint p = x;
    p[d] += step;
    s[d + 1] = {p, f(p)};
  }
  auto by_value_desc = [](const Vertex& a, const Vertex& b) {
    return a.v > b.v;
  };
  for (int it = 0; it < max_iters; ++it) {
    std::stable_sort(s.begin(), s.end(), by_value_desc);
    if (s.front().v - s.back().v < 1e-14) break;

    DesignPoint centroid(dim, 0.0);
    for (int i = 0; i < dim; ++i) {
      for (int d = 0; d < dim; ++d) centroid[d] += s[i].x[d];
    }
    for (double& c : centroid) c /= dim;

    auto blend = [&](double coeff) {
      DesignPoint p(dim);
      for (int d = 0; d < dim; ++d) {
        p[d] = centroid[d] + coeff * (centroid[d] - s[dim].x[d]);
      }
      return p;
    };

    const DesignPoint refl = blend(1.0);
    const double refl_v = f(refl);
    if (refl_v > s[0].v) {
      const DesignPoint expo = blend(2.0);
      const double expo_v = f(expo);
      s[dim] = expo_v > refl_v ? Vertex{expo, expo_v} : Vertex{refl, refl_v};
      continue;
    }
    if (refl_v > s[dim - 1].v) {
      s[dim] = {refl, refl_v};
      continue;
    }
    const DesignPoint contr = blend(-0.5);
    const double contr_v = f(contr);
    if (contr_v > s[dim].v) {
      s[dim] = {contr, contr_v};
      continue;
    }
    for (int i = 1; i <= dim; ++i) {
      for (int d = 0; d < dim; ++d) {
        s[i].x[d] = s[0].x[d] + 0.5 * (s[i].x[d] - s[0].x[d]);
      }
      s[i].v = f(s[i].x);
    }
  }
  std::stable_sort(s.begin(), s.end(), by_value_desc);
  if (s.front().v > value) {
    value = s.front().v;
    x = s.front().x;
  }
}

std::string format_double_key(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string model_key(const std::string& problem, const UtilityModel& m) {
  std::string key = problem;
  key += '|';
  key += to_string(m.kind);
  key += "|rho=";
  key += format_double_key(m.kind == UtilityKind::Tchebychev ? m.rho : 0.0);
  for (double t : m.theta) {
    key += '|';
    key += format_double_key(t);
  }
  return key;
}

json to_cache_json(const ReferenceBest& best) {
  return json{{"problem", best.problem},
              {"kind", std::string(to_string(best.model.kind))},
              {"theta", best.model.theta},
              {"rho", best.model.rho},
              {"u_star", best.u_star},
              {"x_star", best.x_star}};
}

bool from_cache_json(const json& j, const std::string& problem,
                     const UtilityModel& model, ReferenceBest& out) {
  if (!j.is_object()) return false;
  if (j.value("problem", "") != problem) return false;
  if (j.value("kind", "") != to_string(model.kind)) return false;
  const auto theta = j.value("theta", std::vector<double>{});
  if (theta != model.theta) return false;
  if (model.kind == UtilityKind::Tchebychev &&
      j.value("rho", -1.0) != model.rho) {
    return false;
  }
  if (!j.contains("u_star") || !j.contains("x_star")) return false;
  out.problem = problem;
  out.model = model;
  out.u_star = j["u_star"].get<double>();
  out.x_star = j["x_star"].get<std::vector<double>>();
  return true;
}

}  // namespace

SimulatedDM::SimulatedDM(UtilityModel model) : model_(std::move(model)) {
  if (model_.theta.empty()) {
    throw std::invalid_argument("SimulatedDM: utility model without weights");
  }
}

std::size_t SimulatedDM::pick_from_front(const FrontApproximation& front) {
  if (front.members.empty()) {
    throw std::invalid_argument("pick_from_front: empty front");
  }
  std::size_t best = 0;
  double best_u = utility(front.members[0].objectives, model_);
  for (std::size_t i = 1; i < front.members.size(); ++i) {
    const double u = utility(front.members[i].objectives, model_);
    if (u > best_u) {
      best_u = u;
      best = i;
    }
  }
  return best;
}

std::size_t InteractiveDM::pick_from_front(const FrontApproximation& front) {
  if (front.members.empty()) {
    throw std::invalid_argument("pick_from_front: empty front");
  }
  std::unique_lock lock(mu_);
  if (cancelled_) throw RunCancelled("pick rendezvous cancelled");
  front_size_ = front.members.size();
  awaiting_ = true;
  pick_.reset();
  cv_.wait(lock, [&] { return pick_.has_value() || cancelled_; });
  awaiting_ = false;
  front_size_ = 0;
  if (!pick_.has_value()) {
    throw RunCancelled("pick rendezvous cancelled");
  }
  return *pick_;
}

PickDelivery InteractiveDM::deliver_pick(std::size_t index) {
  std::lock_guard lock(mu_);
  if (!awaiting_) return PickDelivery::NotAwaiting;
  if (pick_.has_value()) return PickDelivery::AlreadyPicked;
  if (index >= front_size_) return PickDelivery::OutOfRange;
  pick_ = index;
  cv_.notify_all();
  return PickDelivery::Delivered;
}

void InteractiveDM::cancel() {
  std::lock_guard lock(mu_);
  cancelled_ = true;
  cv_.notify_all();
}

bool InteractiveDM::awaiting() const {
  std::lock_guard lock(mu_);
  return awaiting_ && !pick_.has_value();
}

std::size_t final_pick(const DMOracle& oracle,
                       const std::vector<Sample>& evaluated) {
  if (evaluated.empty()) {
    throw std::invalid_argument("final_pick: no evaluated points");
  }
  const UtilityModel* model = oracle.true_model();
  if (model == nullptr) {
    throw std::invalid_argument(
        "final_pick: requires a simulated decision maker");
  }
  std::vector<ObjectiveVector> ys;
  ys.reserve(evaluated.size());
  for (const Sample& s : evaluated) ys.push_back(s.y);
  const auto fronts = fast_non_dominated_sort(ys);
  const std::vector<int>& gamma = fronts[0];

  std::size_t best = static_cast<std::size_t>(gamma[0]);
  double best_u = utility(evaluated[best].y, *model);
  for (int idx : gamma) {
    const double u = utility(evaluated[idx].y, *model);
    if (u > best_u) {
      best_u = u;
      best = static_cast<std::size_t>(idx);
    }
  }
  return best;
}

ReferenceBest compute_reference_best(const ProblemSpec& problem,
                                     const UtilityModel& model) {
  if (problem.dim != 2) {
    throw std::invalid_argument(
        "compute_reference_best: dense grid supports D = 2 only");
  }
  if (static_cast<int>(model.theta.size()) != problem.num_objectives) {
    throw std::invalid_argument(
        "compute_reference_best: weight count must match objectives");
  }

  auto score = [&](const DesignPoint& raw) {
    DesignPoint x = raw;
    for (int d = 0; d < problem.dim; ++d) {
      x[d] = std::clamp(x[d], problem.bounds[d].first,
                        problem.bounds[d].second);
    }
    return utility(evaluate(problem, x), model);
  };

  constexpr int kGrid = 1001;
  constexpr int kSeeds = 10;
  struct Cell {
    double v;
    DesignPoint x;
  };
  // Best cells so far, ascending by value; cells[0] is the replacement
  // candidate.
  std::vector<Cell> cells;
  const auto [lo0, hi0] = problem.bounds[0];
  const auto [lo1, hi1] = problem.bounds[1];
  for (int i = 0; i < kGrid; ++i) {
    const double x0 = lo0 + (hi0 - lo0) * i / (kGrid - 1);
    for (int j = 0; j < kGrid; ++j) {
      const double x1 = lo1 + (hi1 - lo1) * j / (kGrid - 1);
      const double v = utility(evaluate(problem, {x0, x1}), model);
      if (cells.size() < kSeeds) {
        cells.push_back({v, {x0, x1}});
        std::sort(cells.begin(), cells.end(),
                  [](const Cell& a, const Cell& b) { return a.v < b.v; });
      } else if (v > cells[0].v) {
        cells[0] = {v, {x0, x1}};
        std::sort(cells.begin(), cells.end(),
                  [](const Cell& a, const Cell& b) { return a.v < b.v; });
      }
    }
  }

  ReferenceBest best;
  best.problem = problem.name;
  best.model = model;
  best.u_star = cells.back().v;
  best.x_star = cells.back().x;
  const double step =
      std::max((hi0 - lo0), (hi1 - lo1)) / (kGrid - 1) * 2.0;
  for (const Cell& cell : cells) {
    DesignPoint x = cell.x;
    double v = cell.v;
    nelder_mead_maximize(score, step, 300, x, v);
    if (v > best.u_star) {
      best.u_star = v;
      for (int d = 0; d < problem.dim; ++d) {
        x[d] = std::clamp(x[d], problem.bounds[d].first,
                          problem.bounds[d].second);
      }
      best.x_star = x;
    }
  }
  return best;
}

double opportunity_cost(const ReferenceBest& best,
                        const ObjectiveVector& picked_y,
                        const UtilityModel& model) {
  require_model_matches(best.model, model);
  const double oc = best.u_star - utility(picked_y, model);
  if (oc < -1e-9) {
    std::ostringstream os;
    os << "opportunity_cost: " << oc
       << " below tolerance; the reference best for " << best.problem
       << " is stale";
    throw std::runtime_error(os.str());
  }
  return oc;
}

ReferenceBestCache::ReferenceBestCache(std::filesystem::path dir)
    : dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_);
}

std::filesystem::path ReferenceBestCache::default_dir() {
  if (const char* env = std::getenv("PREFBO_CACHE_DIR")) {
    return env;
  }
  if (const char* home = std::getenv("HOME")) {
    return std::filesystem::path(home) / ".cache" / "prefbo";
  }
  return ".prefbo-cache";
}

ReferenceBest ReferenceBestCache::get(const ProblemSpec& problem,
                                      const UtilityModel& model) {
  const std::string key = model_key(problem.name, model);
  {
    std::lock_guard lock(mu_);
    const auto it = memory_.find(key);
    if (it != memory_.end()) return it->second;
  }

  char hash[20];
  std::snprintf(hash, sizeof hash, "%016llx",
                static_cast<unsigned long long>(fnv1a64(key)));
  const std::filesystem::path file =
      dir_ / (problem.name + "-" + std::string(to_string(model.kind)) + "-" +
              hash + ".json");

  if (std::filesystem::exists(file)) {
    std::ifstream in(file);
    json j;
    in >> j;
    ReferenceBest cached;
    if (in && from_cache_json(j, problem.name, model, cached)) {
      std::lock_guard lock(mu_);
      memory_.emplace(key, cached);
      return cached;
    }
  }

  const ReferenceBest fresh = compute_reference_best(problem, model);
  const std::filesystem::path tmp = file.string() + ".tmp";
  {
    std::ofstream out(tmp);
    out << to_cache_json(fresh).dump(2) << '\n';
    if (!out) {
      throw std::runtime_error("ReferenceBestCache: cannot write " +
                               tmp.string());
    }
  }
  std::filesystem::rename(tmp, file);
  std::lock_guard lock(mu_);
  memory_.emplace(key, fresh);
  return fresh;
}

}  // namespace prefbo
