#include "prefbo/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <stdexcept>
#include <thread>

#include <boost/math/distributions/students_t.hpp>

#include "json.hpp"

#include "prefbo/serialize.hpp"

namespace prefbo {

namespace {

std::string format_g9(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

int effective_replications(const ExperimentSpec& spec,
                           const std::string& problem) {
  if (!spec.paper_scale) return spec.replications;
  return problem.rfind("POL", 0) == 0 ? 160 : 50;
}

/// Checkpoints a branch can be scored at: stride multiples past the point
/// where the branch still has room for the initial design plus p focused
/// steps, and always the full budget.
std::vector<int> make_checkpoints(const ExperimentSpec& spec, int p,
                                  int initial_design) {
  if (spec.final_only) return {spec.budget};
  const int stride = spec.paper_scale ? 1 : spec.checkpoint_stride;
  std::vector<int> points;
  for (int i = stride; i < spec.budget; i += stride) {
    if (i > initial_design + p) points.push_back(i);
  }
  points.push_back(spec.budget);
  return points;
}

void validate_spec(const ExperimentSpec& spec) {
  if (spec.problems.empty()) {
    throw std::invalid_argument("experiment needs at least one problem");
  }
  if (spec.p_values.empty()) {
    throw std::invalid_argument("experiment needs at least one p value");
  }
  if (spec.replications < 1 && !spec.paper_scale) {
    throw std::invalid_argument("replications must be positive");
  }
  if (spec.checkpoint_stride < 1) {
    throw std::invalid_argument("checkpoint stride must be positive");
  }
  // Rejects a bad (budget, p, n0) combination before any replication
  // starts; the per-run constructor would throw the same way mid-flight.
  for (const auto& name : spec.problems) {
    const ProblemSpec problem = lookup_problem(name);
    if (spec.initial_design < problem.dim + 1) {
      throw std::invalid_argument(
          "initial design must have at least D + 1 points");
    }
    for (int p : spec.p_values) {
      if (p < 0) {
        throw std::invalid_argument("p must be >= 0");
      }
      if (p >= spec.budget - spec.initial_design) {
        throw std::invalid_argument(
            "p must be smaller than the budget after the initial design");
      }
    }
  }
  if (!(spec.rho > 0.0)) {
    throw std::invalid_argument("rho must be positive");
  }
}

Theta true_theta_for(std::uint64_t seed, int k) {
  RngStream rng(seed, "dm-theta", 0);
  return sample_theta(k, rng);
}

struct Job {
  std::size_t series = 0;
  int replication = 0;
};

}  // namespace

CellStats mean_ci(const std::vector<double>& values) {
  CellStats out;
  out.count = static_cast<int>(values.size());
  if (values.empty()) return out;
  double sum = 0.0;
  for (double v : values) sum += v;
  const double mean = sum / out.count;
  out.mean = mean;
  if (out.count == 1) {
    out.ci_lo = mean;
    out.ci_hi = mean;
    return out;
  }
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / (out.count - 1));
  boost::math::students_t_distribution<double> dist(out.count - 1);
  const double half =
      boost::math::quantile(dist, 0.975) * sd / std::sqrt(out.count);
  out.ci_lo = mean - half;
  out.ci_hi = mean + half;
  return out;
}

ExperimentResult run_experiment(const ExperimentSpec& spec) {
  validate_spec(spec);

  ExperimentResult result;
  result.spec = spec;

  ReferenceBestCache cache(spec.cache_dir.empty()
                               ? ReferenceBestCache::default_dir()
                               : spec.cache_dir);

  // References are shared across p values (the true weights depend only on
  // the replication seed), so warming them once here keeps the parallel
  // phase free of duplicate grid searches.
  for (const auto& name : spec.problems) {
    const ProblemSpec problem = lookup_problem(name);
    const int reps = effective_replications(spec, name);
    for (int r = 0; r < reps; ++r) {
      UtilityModel model{spec.dm_kind,
                         true_theta_for(spec.base_seed + r,
                                        problem.num_objectives),
                         spec.rho};
      (void)cache.get(problem, model);
    }
  }

  for (const auto& name : spec.problems) {
    const int reps = effective_replications(spec, name);
    for (int p : spec.p_values) {
      Series series;
      series.problem = name;
      series.p = p;
      series.checkpoints = make_checkpoints(spec, p, spec.initial_design);
      series.replications.resize(reps);
      result.series.push_back(std::move(series));
    }
  }

  std::vector<Job> jobs;
  for (std::size_t s = 0; s < result.series.size(); ++s) {
    const int reps = static_cast<int>(result.series[s].replications.size());
    for (int r = 0; r < reps; ++r) jobs.push_back({s, r});
  }

  const auto run_job = [&](const Job& job) {
    Series& series = result.series[job.series];
    ReplicationOutcome& out = series.replications[job.replication];
    out.replication = job.replication;
    out.seed = spec.base_seed + job.replication;
    const ProblemSpec problem = lookup_problem(series.problem);
    out.theta_true = true_theta_for(out.seed, problem.num_objectives);
    UtilityModel model{spec.dm_kind, out.theta_true, spec.rho};
    try {
      const ReferenceBest reference = cache.get(problem, model);
      SimulatedDM oracle(model);
      RunConfig config;
      config.problem = series.problem;
      config.budget = spec.budget;
      config.elicit_steps = series.p;
      config.initial_design = spec.initial_design;
      config.rho = spec.rho;
      config.nsga = spec.nsga;
      config.seed = out.seed;
      out.trace = Engine::oc_trace(config, oracle, series.checkpoints,
                                   reference);
    } catch (const std::exception& e) {
      out.failed = true;
      out.error = e.what();
    }
  };

  int workers = spec.workers > 0
                    ? spec.workers
                    : static_cast<int>(std::thread::hardware_concurrency());
  workers = std::max(1, std::min<int>(workers,
                                      static_cast<int>(jobs.size())));
  if (workers == 1) {
    for (const Job& job : jobs) run_job(job);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (;;) {
          const std::size_t i = next.fetch_add(1);
          if (i >= jobs.size()) return;
          run_job(jobs[i]);
        }
      });
    }
    for (auto& t : pool) t.join();
  }

  // Aggregation runs after the pool joins and in series order, so the
  // statistics do not depend on scheduling.
  for (Series& series : result.series) {
    for (std::size_t c = 0; c < series.checkpoints.size(); ++c) {
      std::vector<double> values;
      values.reserve(series.replications.size());
      for (const ReplicationOutcome& rep : series.replications) {
        if (!rep.failed) values.push_back(rep.trace[c].oc);
      }
      CellStats stats = mean_ci(values);
      stats.checkpoint = series.checkpoints[c];
      series.stats.push_back(stats);
    }
    for (const ReplicationOutcome& rep : series.replications) {
      if (!rep.failed) continue;
      ++result.failed_replications;
      std::cerr << "warning: " << series.problem << " p=" << series.p
                << " replication " << rep.replication
                << " failed: " << rep.error << '\n';
    }
  }
  return result;
}

ExperimentResult psweep(ExperimentSpec spec) {
  spec.final_only = true;
  return run_experiment(spec);
}

namespace {

nlohmann::json stats_to_json(const CellStats& s) {
  return {{"checkpoint", s.checkpoint},
          {"mean", s.mean},
          {"ci_lo", s.ci_lo},
          {"ci_hi", s.ci_hi},
          {"count", s.count}};
}

nlohmann::json replication_to_json(const ReplicationOutcome& rep) {
  nlohmann::json j{{"replication", rep.replication},
                   {"seed", rep.seed},
                   {"theta_true", rep.theta_true},
                   {"failed", rep.failed}};
  if (rep.failed) {
    j["error"] = rep.error;
  } else {
    nlohmann::json trace = nlohmann::json::array();
    for (const TracePoint& point : rep.trace) {
      trace.push_back({{"iteration", point.iteration},
                       {"oc", point.oc},
                       {"picked_y", point.picked_y}});
    }
    j["trace"] = std::move(trace);
  }
  return j;
}

void write_text(const std::filesystem::path& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot write " + path.string());
  }
  out << body;
}

}  // namespace

void emit_plotdata(const ExperimentResult& result,
                   const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);

  std::vector<std::string> problems;
  for (const Series& series : result.series) {
    if (std::find(problems.begin(), problems.end(), series.problem) ==
        problems.end()) {
      problems.push_back(series.problem);
    }
  }

  for (const auto& name : problems) {
    std::vector<const Series*> local;
    for (const Series& series : result.series) {
      if (series.problem == name) local.push_back(&series);
    }

    std::string trace = "iter,series,mean_oc,ci_lo,ci_hi\n";
    for (const Series* series : local) {
      for (const CellStats& s : series->stats) {
        trace += std::to_string(s.checkpoint);
        trace += ",p=" + std::to_string(series->p);
        trace += ',' + format_g9(s.mean);
        trace += ',' + format_g9(s.ci_lo);
        trace += ',' + format_g9(s.ci_hi);
        trace += '\n';
      }
    }
    write_text(dir / ("trace_" + name + ".csv"), trace);

    if (result.spec.final_only) {
      std::string sweep = "p,mean_oc,ci_lo,ci_hi\n";
      for (const Series* series : local) {
        const CellStats& s = series->stats.back();
        sweep += std::to_string(series->p);
        sweep += ',' + format_g9(s.mean);
        sweep += ',' + format_g9(s.ci_lo);
        sweep += ',' + format_g9(s.ci_hi);
        sweep += '\n';
      }
      write_text(dir / ("psweep_" + name + ".csv"), sweep);
    }

    // Replications are seed-paired across p, so a two-series result admits
    // a per-replication difference table at the final checkpoint.
    if (local.size() == 2 &&
        local[0]->replications.size() == local[1]->replications.size()) {
      const Series& a = *local[0];
      const Series& b = *local[1];
      std::string paired = "replication,seed,oc_p=" + std::to_string(a.p) +
                           ",oc_p=" + std::to_string(b.p) + ",diff\n";
      for (std::size_t r = 0; r < a.replications.size(); ++r) {
        const ReplicationOutcome& ra = a.replications[r];
        const ReplicationOutcome& rb = b.replications[r];
        if (ra.failed || rb.failed) continue;
        const double oa = ra.trace.back().oc;
        const double ob = rb.trace.back().oc;
        paired += std::to_string(ra.replication);
        paired += ',' + std::to_string(ra.seed);
        paired += ',' + format_g9(oa);
        paired += ',' + format_g9(ob);
        paired += ',' + format_g9(ob - oa);
        paired += '\n';
      }
      write_text(dir / ("paired_" + name + ".csv"), paired);
    }
  }

  nlohmann::json doc;
  doc["spec"] = {{"problems", result.spec.problems},
                 {"budget", result.spec.budget},
                 {"p_values", result.spec.p_values},
                 {"replications", result.spec.replications},
                 {"dm_utility", std::string(to_string(result.spec.dm_kind))},
                 {"rho", result.spec.rho},
                 {"base_seed", result.spec.base_seed},
                 {"checkpoint_stride", result.spec.checkpoint_stride},
                 {"final_only", result.spec.final_only},
                 {"paper_scale", result.spec.paper_scale},
                 {"initial_design", result.spec.initial_design}};
  doc["failed_replications"] = result.failed_replications;
  nlohmann::json series = nlohmann::json::array();
  for (const Series& s : result.series) {
    nlohmann::json js{{"problem", s.problem},
                      {"p", s.p},
                      {"checkpoints", s.checkpoints}};
    nlohmann::json stats = nlohmann::json::array();
    for (const CellStats& cell : s.stats) stats.push_back(stats_to_json(cell));
    js["stats"] = std::move(stats);
    nlohmann::json reps = nlohmann::json::array();
    for (const ReplicationOutcome& rep : s.replications) {
      reps.push_back(replication_to_json(rep));
    }
    js["replications"] = std::move(reps);
    series.push_back(std::move(js));
  }
  doc["series"] = std::move(series);
  write_text(dir / "experiment.json", doc.dump(2) + "\n");
}

}  // namespace prefbo
