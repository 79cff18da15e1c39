#pragma once

#include <condition_variable>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "prefbo/nsga2.hpp"
#include "prefbo/scalarize.hpp"
#include "prefbo/testbed.hpp"
#include "prefbo/types.hpp"

namespace prefbo {

/// Decision maker. pick_from_front judges the front's (predicted)
/// objective vectors; a simulated DM answers from its hidden utility, an
/// interactive one blocks until a human pick arrives.
class DMOracle {
 public:
  virtual ~DMOracle() = default;

  virtual std::size_t pick_from_front(const FrontApproximation& front) = 0;

  /// Hidden true utility when simulated; nullptr for a human DM.
  virtual const UtilityModel* true_model() const { return nullptr; }
};

class SimulatedDM final : public DMOracle {
 public:
  explicit SimulatedDM(UtilityModel model);

  /// Argmax of true utility over the members; ties go to the lowest index.
  std::size_t pick_from_front(const FrontApproximation& front) override;
  const UtilityModel* true_model() const override { return &model_; }

 private:
  UtilityModel model_;
};

/// Thrown into a run parked on an interactive pick when the rendezvous is
/// cancelled (service shutdown).
class RunCancelled : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class PickDelivery { Delivered, NotAwaiting, AlreadyPicked, OutOfRange };

/// Rendezvous between a paused run and its resolver: the run blocks in
/// pick_from_front, the other side delivers exactly one pick or cancels.
class InteractiveDM final : public DMOracle {
 public:
  std::size_t pick_from_front(const FrontApproximation& front) override;

  PickDelivery deliver_pick(std::size_t index);

  /// Unblocks a parked run with RunCancelled. Idempotent.
  void cancel();

  bool awaiting() const;

 private:
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::size_t front_size_ = 0;
  bool awaiting_ = false;
  bool cancelled_ = false;
  std::optional<std::size_t> pick_;
};

/// Index into `evaluated` of the simulated DM's end-of-run choice:
/// dominated points are filtered first, then the true utility ranks the
/// rest (ties to the lowest index). Requires a simulated oracle.
std::size_t final_pick(const DMOracle& oracle,
                       const std::vector<Sample>& evaluated);

/// Utility-optimal point of a problem under a given model, for regret
/// computation.
struct ReferenceBest {
  std::string problem;
  UtilityModel model;
  double u_star = 0.0;
  DesignPoint x_star;
};

/// Dense-grid search (1001 per dimension, D = 2 only) refined by simplex
/// polish from the best cells. The polish never lowers the grid value.
ReferenceBest compute_reference_best(const ProblemSpec& problem,
                                     const UtilityModel& model);

/// u_star - utility(picked_y). Below -1e-9 the reference must be stale or
/// mismatched and an error is thrown.
double opportunity_cost(const ReferenceBest& best,
                        const ObjectiveVector& picked_y,
                        const UtilityModel& model);

/// Disk-backed store of ReferenceBest values keyed by
/// (problem, utility kind, theta, rho): one JSON file per key.
class ReferenceBestCache {
 public:
  explicit ReferenceBestCache(std::filesystem::path dir);

  /// Memory, then disk, then compute-and-store.
  ReferenceBest get(const ProblemSpec& problem, const UtilityModel& model);

  const std::filesystem::path& dir() const { return dir_; }

  /// PREFBO_CACHE_DIR when set, else <home>/.cache/prefbo, else
  /// ./.prefbo-cache.
  static std::filesystem::path default_dir();

 private:
  std::filesystem::path dir_;
  std::mutex mu_;
  std::map<std::string, ReferenceBest> memory_;
};

}  // namespace prefbo
