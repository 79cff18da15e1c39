#include "prefbo/gp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace prefbo {

namespace {

constexpr double kBaseJitter = 1e-8;
constexpr double kMaxJitter = 1e-4;
constexpr double kMinLengthscale = 1e-3;
constexpr double kMaxLengthscale = 10.0;
constexpr double kMinSignalVariance = 1e-6;
constexpr double kMaxSignalVariance = 1e3;
constexpr int kLengthscaleGrid = 32;

void validate_data(const std::vector<DesignPoint>& inputs,
                   const std::vector<double>& targets, const Bounds& bounds) {
  if (inputs.size() != targets.size()) {
    throw std::invalid_argument("GPModel: inputs and targets differ in size");
  }
  for (double t : targets) {
    if (!std::isfinite(t)) {
      throw std::invalid_argument("GPModel: non-finite target");
    }
  }
  const std::size_t dim = inputs.empty() ? bounds.size() : inputs[0].size();
  for (const DesignPoint& x : inputs) {
    if (x.size() != dim) {
      throw std::invalid_argument("GPModel: inconsistent input dimensions");
    }
    for (double v : x) {
      if (!std::isfinite(v)) {
        throw std::invalid_argument("GPModel: non-finite input coordinate");
      }
    }
  }
  if (!bounds.empty() && !inputs.empty() && bounds.size() != dim) {
    throw std::invalid_argument("GPModel: bounds dimension mismatch");
  }
  for (const auto& [lo, hi] : bounds) {
    if (!(lo < hi)) {
      throw std::invalid_argument("GPModel: bounds require lo < hi");
    }
  }
}

// Shared intermediate state for hyperparameter search.
struct FitData {
  std::vector<double> offset;
  std::vector<double> scale;
  double target_mean = 0.0;
  double target_scale = 1.0;
  Eigen::MatrixXd points;  // n x D, normalized
  Eigen::MatrixXd sqdist;  // pairwise squared distances of normalized rows
  Eigen::VectorXd ytilde;
};

FitData prepare(const std::vector<DesignPoint>& inputs,
                const std::vector<double>& targets, const Bounds& bounds) {
  FitData d;
  const int n = static_cast<int>(inputs.size());
  const int dim = static_cast<int>(inputs[0].size());

  d.offset.resize(dim);
  d.scale.resize(dim);
  if (!bounds.empty()) {
    for (int k = 0; k < dim; ++k) {
      d.offset[k] = bounds[k].first;
      d.scale[k] = 1.0 / (bounds[k].second - bounds[k].first);
    }
  } else {
    for (int k = 0; k < dim; ++k) {
      double lo = inputs[0][k];
      double hi = inputs[0][k];
      for (const DesignPoint& x : inputs) {
        lo = std::min(lo, x[k]);
        hi = std::max(hi, x[k]);
      }
      d.offset[k] = lo;
      d.scale[k] = (hi - lo > 1e-12) ? 1.0 / (hi - lo) : 1.0;
    }
  }

  d.points.resize(n, dim);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < dim; ++k) {
      d.points(i, k) = (inputs[i][k] - d.offset[k]) * d.scale[k];
    }
  }

  d.sqdist.resize(n, n);
  for (int i = 0; i < n; ++i) {
    d.sqdist(i, i) = 0.0;
    for (int j = i + 1; j < n; ++j) {
      const double s = (d.points.row(i) - d.points.row(j)).squaredNorm();
      if (s <= 0.0) {
        std::ostringstream os;
        os << "GPModel: duplicate inputs at indices " << i << " and " << j;
        throw std::invalid_argument(os.str());
      }
      d.sqdist(i, j) = s;
      d.sqdist(j, i) = s;
    }
  }

  double mean = 0.0;
  for (double t : targets) mean += t;
  mean /= n;
  double var = 0.0;
  for (double t : targets) var += (t - mean) * (t - mean);
  var /= n;
  d.target_mean = mean;
  d.target_scale = (var > 1e-24) ? std::sqrt(var) : 1.0;

  d.ytilde.resize(n);
  for (int i = 0; i < n; ++i) {
    d.ytilde(i) = (targets[i] - d.target_mean) / d.target_scale;
  }
  return d;
}

struct Factorization {
  Eigen::LLT<Eigen::MatrixXd> chol;
  double jitter = kBaseJitter;
  double log_det = 0.0;
  bool ok = false;
};

// Factors exp(-sqdist / (2 l^2)) + jitter I, escalating jitter on failure.
Factorization factor_correlation(const Eigen::MatrixXd& sqdist, double l) {
  const int n = static_cast<int>(sqdist.rows());
  const Eigen::MatrixXd corr = (-sqdist / (2.0 * l * l)).array().exp();
  Factorization f;
  for (double j = kBaseJitter; j <= kMaxJitter; j *= 2.0) {
    Eigen::MatrixXd m = corr;
    m.diagonal().array() += j;
    f.chol.compute(m);
    if (f.chol.info() == Eigen::Success) {
      f.jitter = j;
      f.log_det = 2.0 * f.chol.matrixLLT().diagonal().array().log().sum();
      f.ok = true;
      return f;
    }
  }
  (void)n;
  return f;
}

// Log marginal likelihood with the signal variance at its conditional
// optimum Q/n (clamped), where Q = ytilde' M^-1 ytilde. Returns -inf when
// the factorization fails even at maximum jitter.
double profiled_lml(const Eigen::MatrixXd& sqdist,
                    const Eigen::VectorXd& ytilde, double l) {
  const Factorization f = factor_correlation(sqdist, l);
  if (!f.ok) return -std::numeric_limits<double>::infinity();
  const int n = static_cast<int>(ytilde.size());
  const double q = ytilde.dot(f.chol.solve(ytilde));
  double sv = q / n;
  if (sv < 1e-12) sv = 1.0;
  sv = std::clamp(sv, kMinSignalVariance, kMaxSignalVariance);
  return -0.5 * q / sv -
         0.5 * (n * std::log(sv) + f.log_det) -
         0.5 * n * std::log(2.0 * std::numbers::pi);
}

// Grid search over log-spaced lengthscales followed by a pattern search
// that also guarantees no +-20% perturbation of the result improves the
// profiled likelihood.
double best_lengthscale(const Eigen::MatrixXd& sqdist,
                        const Eigen::VectorXd& ytilde) {
  const double lo = std::log(kMinLengthscale);
  const double hi = std::log(kMaxLengthscale);
  double best_l = 1.0;
  double best_v = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < kLengthscaleGrid; ++i) {
    const double l = std::exp(lo + (hi - lo) * i / (kLengthscaleGrid - 1));
    const double v = profiled_lml(sqdist, ytilde, l);
    if (v > best_v) {
      best_v = v;
      best_l = l;
    }
  }
  if (!std::isfinite(best_v)) {
    throw std::runtime_error(
        "GPModel: correlation matrix factorization failed at every "
        "lengthscale; increase jitter");
  }

  auto clamped = [&](double l) {
    return std::clamp(l, kMinLengthscale, kMaxLengthscale);
  };
  bool improved = true;
  while (improved) {
    improved = false;
    double factor = std::pow(kMaxLengthscale / kMinLengthscale,
                             1.0 / (kLengthscaleGrid - 1));
    while (factor > 1.0 + 1e-7) {
      const double up = clamped(best_l * factor);
      const double down = clamped(best_l / factor);
      const double vu = profiled_lml(sqdist, ytilde, up);
      const double vd = profiled_lml(sqdist, ytilde, down);
      if (vu > best_v) {
        best_v = vu;
        best_l = up;
      } else if (vd > best_v) {
        best_v = vd;
        best_l = down;
      } else {
        factor = std::sqrt(factor);
      }
    }
    for (double probe : {clamped(best_l * 1.2), clamped(best_l / 1.2)}) {
      const double v = profiled_lml(sqdist, ytilde, probe);
      if (v > best_v) {
        best_v = v;
        best_l = probe;
        improved = true;
      }
    }
  }
  return best_l;
}

}  // namespace

GPModel GPModel::assemble(const std::vector<DesignPoint>& inputs,
                          const std::vector<double>& targets,
                          const Bounds& bounds, double lengthscale,
                          double fixed_signal_variance,
                          bool profile_signal_variance) {
  FitData d = prepare(inputs, targets, bounds);
  const Factorization f = factor_correlation(d.sqdist, lengthscale);
  if (!f.ok) {
    throw std::runtime_error(
        "GPModel: correlation matrix factorization failed; increase jitter");
  }

  GPModel m;
  m.params_.lengthscale = lengthscale;
  m.jitter_ = f.jitter;
  m.offset_ = std::move(d.offset);
  m.scale_ = std::move(d.scale);
  m.target_mean_ = d.target_mean;
  m.target_scale_ = d.target_scale;
  m.points_ = std::move(d.points);
  m.targets_std_ = std::move(d.ytilde);
  m.chol_ = f.chol;
  m.log_det_corr_ = f.log_det;
  m.alpha_ = m.chol_.solve(m.targets_std_);

  if (profile_signal_variance) {
    const double q = m.targets_std_.dot(m.alpha_);
    double sv = q / m.size();
    if (sv < 1e-12) sv = 1.0;
    m.params_.signal_variance =
        std::clamp(sv, kMinSignalVariance, kMaxSignalVariance);
  } else {
    if (!(fixed_signal_variance >= 0.0)) {
      throw std::invalid_argument("GPModel: signal variance must be >= 0");
    }
    m.params_.signal_variance = fixed_signal_variance;
  }
  return m;
}

GPModel GPModel::fit(const std::vector<DesignPoint>& inputs,
                     const std::vector<double>& targets,
                     const Bounds& bounds) {
  validate_data(inputs, targets, bounds);
  if (inputs.empty()) return GPModel{};
  const FitData d = prepare(inputs, targets, bounds);
  const double l = best_lengthscale(d.sqdist, d.ytilde);
  return assemble(inputs, targets, bounds, l, 0.0, true);
}

GPModel GPModel::fit_at_lengthscale(const std::vector<DesignPoint>& inputs,
                                    const std::vector<double>& targets,
                                    double lengthscale, const Bounds& bounds) {
  validate_data(inputs, targets, bounds);
  if (!(lengthscale > 0.0)) {
    throw std::invalid_argument("GPModel: lengthscale must be positive");
  }
  if (inputs.empty()) return GPModel{};
  return assemble(inputs, targets, bounds, lengthscale, 0.0, true);
}

GPModel GPModel::fit_with_params(const std::vector<DesignPoint>& inputs,
                                 const std::vector<double>& targets,
                                 const KernelParams& params,
                                 const Bounds& bounds) {
  validate_data(inputs, targets, bounds);
  if (!(params.lengthscale > 0.0)) {
    throw std::invalid_argument("GPModel: lengthscale must be positive");
  }
  if (inputs.empty()) return GPModel{};
  return assemble(inputs, targets, bounds, params.lengthscale,
                  params.signal_variance, false);
}

Eigen::VectorXd GPModel::normalize(const DesignPoint& x) const {
  if (static_cast<int>(x.size()) != input_dim()) {
    throw std::invalid_argument("GPModel: query dimension mismatch");
  }
  Eigen::VectorXd z(input_dim());
  for (int k = 0; k < input_dim(); ++k) {
    if (!std::isfinite(x[k])) {
      throw std::invalid_argument("GPModel: non-finite query coordinate");
    }
    z(k) = (x[k] - offset_[k]) * scale_[k];
  }
  return z;
}

Eigen::VectorXd GPModel::correlations(const Eigen::VectorXd& z) const {
  const double inv = 1.0 / (2.0 * params_.lengthscale * params_.lengthscale);
  return ((points_.rowwise() - z.transpose()).rowwise().squaredNorm() * -inv)
      .array()
      .exp();
}

double GPModel::posterior_mean(const DesignPoint& x) const {
  if (size() == 0) return 0.0;
  const Eigen::VectorXd k = correlations(normalize(x));
  return target_mean_ + target_scale_ * k.dot(alpha_);
}

double GPModel::posterior_variance(const DesignPoint& x) const {
  const double unit = target_scale_ * target_scale_;
  if (size() == 0) return params_.signal_variance * unit;
  const Eigen::VectorXd k = correlations(normalize(x));
  const double q = k.dot(chol_.solve(k));
  const double var = params_.signal_variance * (1.0 - q);
  return std::max(var, 0.0) * unit;
}

double GPModel::log_marginal_likelihood() const {
  if (size() == 0) {
    throw std::runtime_error("GPModel: no data, marginal likelihood undefined");
  }
  const int n = size();
  const double sv = params_.signal_variance;
  if (sv <= 0.0) {
    throw std::runtime_error(
        "GPModel: zero signal variance, marginal likelihood undefined");
  }
  const double q = targets_std_.dot(alpha_);
  return -0.5 * q / sv - 0.5 * (n * std::log(sv) + log_det_corr_) -
         0.5 * n * std::log(2.0 * std::numbers::pi);
}

}  // namespace prefbo
