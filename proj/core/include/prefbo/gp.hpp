#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <vector>

#include "prefbo/types.hpp"

namespace prefbo {

struct KernelParams {
  double signal_variance = 1.0;  // sigma0^2
  double lengthscale = 1.0;      // shared across dimensions, in [0,1] units
};

/// Gaussian process with zero prior mean and isotropic squared-exponential
/// kernel sigma0^2 * exp(-|x-x'|^2 / (2 l^2)). Inputs are mapped to the
/// unit box (from the supplied bounds, or the data range when bounds are
/// absent) and targets standardized to zero mean and unit scale; public
/// predictions are in original units. A fitted model is immutable and safe
/// to read from several threads.
class GPModel {
 public:
  /// Empty model: prior with mean 0 and unit variance everywhere.
  GPModel() = default;

  /// Fits hyperparameters by maximum marginal likelihood: profiled signal
  /// variance, lengthscale by multi-start grid search with local polish.
  /// Requires distinct inputs and finite targets.
  static GPModel fit(const std::vector<DesignPoint>& inputs,
                     const std::vector<double>& targets,
                     const Bounds& bounds = {});

  /// Fits only the signal variance (profiled), keeping the given
  /// lengthscale.
  static GPModel fit_at_lengthscale(const std::vector<DesignPoint>& inputs,
                                    const std::vector<double>& targets,
                                    double lengthscale,
                                    const Bounds& bounds = {});

  /// Uses both hyperparameters exactly as given.
  static GPModel fit_with_params(const std::vector<DesignPoint>& inputs,
                                 const std::vector<double>& targets,
                                 const KernelParams& params,
                                 const Bounds& bounds = {});

  double posterior_mean(const DesignPoint& x) const;

  /// Never negative; at most the prior variance plus jitter slack.
  double posterior_variance(const DesignPoint& x) const;

  /// Far-field predictive variance in original units.
  double prior_variance() const {
    return params_.signal_variance * target_scale_ * target_scale_;
  }

  /// Evidence of the standardized targets under the fitted kernel.
  double log_marginal_likelihood() const;

  const KernelParams& params() const { return params_; }
  double jitter() const { return jitter_; }
  int size() const { return static_cast<int>(targets_std_.size()); }
  int input_dim() const { return static_cast<int>(offset_.size()); }

 private:
  static GPModel assemble(const std::vector<DesignPoint>& inputs,
                          const std::vector<double>& targets,
                          const Bounds& bounds, double lengthscale,
                          double fixed_signal_variance,
                          bool profile_signal_variance);

  Eigen::VectorXd normalize(const DesignPoint& x) const;
  Eigen::VectorXd correlations(const Eigen::VectorXd& z) const;

  KernelParams params_;
  double jitter_ = 1e-8;  // relative to signal variance
  // Input map: z_d = (x_d - offset_d) * scale_d.
  std::vector<double> offset_;
  std::vector<double> scale_;
  // Target map: y_std = (y - target_mean_) / target_scale_.
  double target_mean_ = 0.0;
  double target_scale_ = 1.0;

  Eigen::MatrixXd points_;  // n x D, normalized
  Eigen::VectorXd targets_std_;
  Eigen::LLT<Eigen::MatrixXd> chol_;  // of correlation matrix + jitter I
  Eigen::VectorXd alpha_;             // chol_ solve of targets_std_
  double log_det_corr_ = 0.0;
};

}  // namespace prefbo
