#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <optional>

#include "nasbo/search_space.hpp"

namespace nasbo {

inline constexpr std::size_t kInputDim = kStageCount;
using InputPoint = std::array<double, kInputDim>;

/// Matérn-5/2 hyperparameters with one lengthscale per input dimension.
struct KernelParams {
  double signal_var = 1.0;
  std::array<double, kInputDim> lengthscales{1.0, 1.0, 1.0, 1.0, 1.0, 1.0};
  double noise_var = 1e-6;

  friend bool operator==(const KernelParams&, const KernelParams&) = default;
};

struct Interval {
  double lo;
  double hi;
};

struct KernelBounds {
  Interval signal_var{1e-8, 1e2};
  Interval lengthscale{1e-3, 1e3};
  Interval noise_var{1e-8, 1.0};
};

double matern52(const InputPoint& a, const InputPoint& b, const KernelParams& params);

struct FitConfig {
  /// Restart 0 starts from `warm_start` (or a fixed default); the rest from
  /// log-uniform draws inside the bounds.
  int restarts = 8;
  std::uint64_t seed = 0;
  KernelBounds bounds;
  /// When set, the noise variance is held fixed instead of fitted.
  std::optional<double> fixed_noise;
  std::optional<KernelParams> warm_start;
  /// Compass search budget and termination step (natural-log units). Every
  /// restart is searched down to `screen_step`; only the best is then refined
  /// to `min_step`.
  int max_evals_per_restart = 400;
  double screen_step = 1.0;
  double min_step = 1e-2;
};

struct Prediction {
  double mean = 0.0;
  double variance = 0.0;
};

/// Exact GP regression on standardized targets.
class GPModel {
 public:
  /// Standardizes `ys`, maximizes the log marginal likelihood by multi-start
  /// compass search in log space and conditions on the best hyperparameters.
  /// Deterministic for a fixed config. Throws GPFitError when no
  /// hyperparameter setting yields a factorizable kernel matrix.
  static GPModel fit(const Eigen::MatrixXd& xs, const Eigen::VectorXd& ys, const FitConfig& config = {});

  /// Conditions on already-standardized targets with fixed hyperparameters.
  /// Escalates diagonal jitter 1e-8 -> 1e-2 before giving up with GPFitError.
  static GPModel condition(const Eigen::MatrixXd& xs, const Eigen::VectorXd& ys_standardized, const KernelParams& params,
                           double y_mean = 0.0, double y_std = 1.0);

  /// Predictive mean and latent-function variance in original target units.
  Prediction posterior(const InputPoint& x) const;
  /// Row-wise posterior for an m x 6 matrix of inputs.
  void posterior_batch(const Eigen::MatrixXd& xs, Eigen::VectorXd& mean, Eigen::VectorXd& variance) const;

  /// -1/2 y'alpha - sum log diag(L) - n/2 log(2 pi) on standardized targets.
  double log_marginal_likelihood() const;

  const KernelParams& params() const { return params_; }
  const Eigen::MatrixXd& train_x() const { return train_x_; }
  const Eigen::VectorXd& train_y_standardized() const { return train_y_; }
  double y_mean() const { return y_mean_; }
  double y_std() const { return y_std_; }
  Eigen::MatrixXd chol() const { return llt_.matrixL(); }
  const Eigen::VectorXd& alpha() const { return alpha_; }
  /// Jitter that was added on top of noise_var to factor the kernel matrix.
  double jitter() const { return jitter_; }

 private:
  GPModel() = default;

  KernelParams params_;
  Eigen::MatrixXd train_x_;
  Eigen::VectorXd train_y_;
  double y_mean_ = 0.0;
  double y_std_ = 1.0;
  double jitter_ = 0.0;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  Eigen::VectorXd alpha_;
};

/// Dense n x n kernel matrix without noise.
Eigen::MatrixXd gram_matrix(const Eigen::MatrixXd& xs, const KernelParams& params);

}  // namespace nasbo
