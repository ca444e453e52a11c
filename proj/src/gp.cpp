#include "nasbo/gp.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "nasbo/errors.hpp"
#include "nasbo/random.hpp"

namespace nasbo {

namespace {

constexpr double kSqrt5 = 2.2360679774997896964;
constexpr std::array<double, 5> kJitterLadder{0.0, 1e-8, 1e-6, 1e-4, 1e-2};
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// Beyond this scaled distance the kernel is below 1e-35 of the signal
/// variance and is flushed to zero, which keeps subnormals out of the
/// factorization.
constexpr double kCutoff = 40.0;

/// Matérn-5/2 applied elementwise to squared scaled distances.
template <typename Derived>
Eigen::ArrayXXd matern_from_r2(const Eigen::ArrayBase<Derived>& r2, double signal_var) {
  const Eigen::ArrayXXd r = r2.sqrt().min(kCutoff);
  return (r < kCutoff).select(signal_var * (1.0 + kSqrt5 * r + (5.0 / 3.0) * r.square()) * (-kSqrt5 * r).exp(), 0.0);
}

Eigen::ArrayXXd scaled_sq_dist(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const KernelParams& p) {
  Eigen::ArrayXXd r2 = Eigen::ArrayXXd::Zero(a.rows(), b.rows());
  for (std::size_t d = 0; d < kInputDim; ++d) {
    const double w = 1.0 / (p.lengthscales[d] * p.lengthscales[d]);
    const auto col = static_cast<Eigen::Index>(d);
    for (Eigen::Index j = 0; j < b.rows(); ++j) {
      r2.col(j) += w * (a.col(col).array() - b(j, col)).square();
    }
  }
  return r2;
}

struct Factor {
  Eigen::LLT<Eigen::MatrixXd> llt;
  double jitter = 0.0;
  bool ok = false;
};

Factor factor_with_jitter(Eigen::MatrixXd k, double noise_var) {
  Factor f;
  k.diagonal().array() += noise_var;
  for (double jitter : kJitterLadder) {
    if (jitter > 0.0) k.diagonal().array() += jitter - f.jitter;
    f.jitter = jitter;
    f.llt.compute(k);
    if (f.llt.info() == Eigen::Success) {
      f.ok = true;
      return f;
    }
  }
  return f;
}

double lml_from_factor(const Factor& f, const Eigen::VectorXd& y, Eigen::VectorXd* alpha_out = nullptr) {
  Eigen::VectorXd alpha = f.llt.solve(y);
  const auto& l = f.llt.matrixLLT();
  double log_det_half = 0.0;
  for (Eigen::Index i = 0; i < l.rows(); ++i) log_det_half += std::log(l(i, i));
  const double n = static_cast<double>(y.size());
  const double value = -0.5 * y.dot(alpha) - log_det_half - 0.5 * n * std::log(2.0 * std::numbers::pi);
  if (alpha_out) *alpha_out = std::move(alpha);
  return value;
}

/// Log marginal likelihood over a fixed training set, with per-pair squared
/// differences cached across hyperparameter evaluations.
class LikelihoodSurface {
 public:
  LikelihoodSurface(const Eigen::MatrixXd& xs, const Eigen::VectorXd& y) : y_(y), n_(xs.rows()) {
    sq_diff_.resize(static_cast<Eigen::Index>(kInputDim), n_ * (n_ - 1) / 2);
    Eigen::Index p = 0;
    for (Eigen::Index j = 0; j < n_; ++j) {
      for (Eigen::Index i = j + 1; i < n_; ++i, ++p) {
        sq_diff_.col(p) = (xs.row(i) - xs.row(j)).transpose().array().square();
      }
    }
  }

  double operator()(const KernelParams& p) const {
    Eigen::Matrix<double, kInputDim, 1> w;
    for (std::size_t d = 0; d < kInputDim; ++d) w[static_cast<Eigen::Index>(d)] = 1.0 / (p.lengthscales[d] * p.lengthscales[d]);
    const Eigen::ArrayXXd k = matern_from_r2((w.transpose() * sq_diff_).transpose().array(), p.signal_var);

    // Only the lower triangle is read by the factorization.
    Eigen::MatrixXd gram(n_, n_);
    Eigen::Index q = 0;
    for (Eigen::Index j = 0; j < n_; ++j) {
      gram(j, j) = p.signal_var;
      const Eigen::Index len = n_ - j - 1;
      gram.col(j).tail(len) = k.col(0).segment(q, len).matrix();
      q += len;
    }
    const Factor f = factor_with_jitter(std::move(gram), p.noise_var);
    if (!f.ok) return kNegInf;
    const double v = lml_from_factor(f, y_);
    return std::isfinite(v) ? v : kNegInf;
  }

 private:
  Eigen::VectorXd y_;
  Eigen::Index n_;
  Eigen::Matrix<double, kInputDim, Eigen::Dynamic> sq_diff_;
};

/// Packs hyperparameters into natural-log coordinates:
/// [signal, lengthscales..., noise (only when fitted)].
struct LogSpace {
  KernelBounds bounds;
  std::optional<double> fixed_noise;

  std::size_t size() const { return 1 + kInputDim + (fixed_noise ? 0 : 1); }

  Interval bound(std::size_t i) const {
    const Interval b = i == 0 ? bounds.signal_var : i <= kInputDim ? bounds.lengthscale : bounds.noise_var;
    return {std::log(b.lo), std::log(b.hi)};
  }

  std::vector<double> pack(const KernelParams& p) const {
    std::vector<double> t;
    t.push_back(std::log(p.signal_var));
    for (double l : p.lengthscales) t.push_back(std::log(l));
    if (!fixed_noise) t.push_back(std::log(p.noise_var));
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = std::clamp(t[i], bound(i).lo, bound(i).hi);
    return t;
  }

  // exp(log(lo)) can land one ulp outside the bound.
  static double unlog(double t, Interval b) { return std::clamp(std::exp(t), b.lo, b.hi); }

  KernelParams unpack(const std::vector<double>& t) const {
    KernelParams p;
    p.signal_var = unlog(t[0], bounds.signal_var);
    for (std::size_t d = 0; d < kInputDim; ++d) p.lengthscales[d] = unlog(t[1 + d], bounds.lengthscale);
    p.noise_var = fixed_noise ? *fixed_noise : unlog(t[1 + kInputDim], bounds.noise_var);
    return p;
  }
};

struct SearchResult {
  std::vector<double> theta;
  double value = kNegInf;
};

/// Compass search with per-coordinate step adaptation: a successful move
/// doubles that coordinate's step, a failed probe in both directions halves
/// it. Stops once every step is below `min_step` or `budget` runs out.
SearchResult compass_search(const LikelihoodSurface& surface, const LogSpace& space, SearchResult best,
                            double initial_step, double min_step, int& budget) {
  std::vector<double> step(best.theta.size(), initial_step);
  constexpr double kMaxStep = 4.0;

  bool active = true;
  while (active && budget > 0) {
    active = false;
    const std::vector<double> sweep_start = best.theta;
    for (std::size_t i = 0; i < best.theta.size() && budget > 0; ++i) {
      if (step[i] < min_step) continue;
      active = true;
      const Interval b = space.bound(i);
      bool moved = false;
      for (double dir : {1.0, -1.0}) {
        std::vector<double> trial = best.theta;
        trial[i] = std::clamp(trial[i] + dir * step[i], b.lo, b.hi);
        if (trial[i] == best.theta[i]) continue;
        const double v = surface(space.unpack(trial));
        --budget;
        if (v > best.value) {
          best = {std::move(trial), v};
          moved = true;
          break;
        }
      }
      step[i] = moved ? std::min(2.0 * step[i], kMaxStep) : 0.5 * step[i];
    }
    // Pattern move: keep travelling along the sweep's net displacement.
    for (double scale = 1.0; budget > 0 && best.theta != sweep_start; scale *= 2.0) {
      std::vector<double> trial = best.theta;
      for (std::size_t i = 0; i < trial.size(); ++i) {
        const Interval b = space.bound(i);
        trial[i] = std::clamp(trial[i] + scale * (best.theta[i] - sweep_start[i]), b.lo, b.hi);
      }
      const double v = surface(space.unpack(trial));
      --budget;
      if (!(v > best.value)) break;
      best = {std::move(trial), v};
    }
  }
  return best;
}

}  // namespace

double matern52(const InputPoint& a, const InputPoint& b, const KernelParams& params) {
  double r2 = 0.0;
  for (std::size_t d = 0; d < kInputDim; ++d) {
    const double t = (a[d] - b[d]) / params.lengthscales[d];
    r2 += t * t;
  }
  const double r = std::sqrt(r2);
  return params.signal_var * (1.0 + kSqrt5 * r + (5.0 / 3.0) * r2) * std::exp(-kSqrt5 * r);
}

Eigen::MatrixXd gram_matrix(const Eigen::MatrixXd& xs, const KernelParams& params) {
  return matern_from_r2(scaled_sq_dist(xs, xs, params), params.signal_var).matrix();
}

GPModel GPModel::condition(const Eigen::MatrixXd& xs, const Eigen::VectorXd& ys_standardized,
                           const KernelParams& params, double y_mean, double y_std) {
  if (xs.cols() != static_cast<Eigen::Index>(kInputDim)) throw DataError("GP inputs must have 6 columns");
  if (xs.rows() != ys_standardized.size() || xs.rows() == 0) throw DataError("GP needs matching, non-empty data");
  Factor f = factor_with_jitter(gram_matrix(xs, params), params.noise_var);
  if (!f.ok) throw GPFitError("kernel matrix not positive definite after jitter escalation to 1e-2");
  GPModel m;
  m.params_ = params;
  m.train_x_ = xs;
  m.train_y_ = ys_standardized;
  m.y_mean_ = y_mean;
  m.y_std_ = y_std;
  m.jitter_ = f.jitter;
  m.alpha_ = f.llt.solve(ys_standardized);
  m.llt_ = std::move(f.llt);
  return m;
}

GPModel GPModel::fit(const Eigen::MatrixXd& xs, const Eigen::VectorXd& ys, const FitConfig& config) {
  const auto n = ys.size();
  if (n < 2 || xs.rows() != n) throw DataError("GP fit needs at least 2 matching rows");
  if (xs.cols() != static_cast<Eigen::Index>(kInputDim)) throw DataError("GP inputs must have 6 columns");
  if (!ys.allFinite() || !xs.allFinite()) throw DataError("GP training data must be finite");

  const double mean = ys.mean();
  double std = std::sqrt((ys.array() - mean).square().sum() / static_cast<double>(n - 1));
  if (!(std > 1e-12 * std::max(1.0, std::abs(mean)))) std = 1.0;
  const Eigen::VectorXd y = (ys.array() - mean) / std;

  const LikelihoodSurface surface(xs, y);
  const LogSpace space{config.bounds, config.fixed_noise};
  Rng rng(mix_seed(config.seed, 0x6770));

  KernelParams start = config.warm_start.value_or(KernelParams{1.0, {1, 1, 1, 1, 1, 1}, 1e-4});
  const double screen_step = std::max(config.screen_step, config.min_step);
  SearchResult best;
  for (int r = 0; r < std::max(1, config.restarts); ++r) {
    SearchResult init;
    if (r == 0) {
      init.theta = space.pack(start);
    } else {
      init.theta.resize(space.size());
      for (std::size_t i = 0; i < init.theta.size(); ++i) {
        init.theta[i] = rng.uniform(space.bound(i).lo, space.bound(i).hi);
      }
    }
    init.value = surface(space.unpack(init.theta));
    int budget = config.max_evals_per_restart - 1;
    SearchResult found = compass_search(surface, space, std::move(init), 1.0, screen_step, budget);
    if (found.value > best.value) best = std::move(found);
  }
  // Polish the best screened optimum, restarting the steps while it improves.
  int budget = config.max_evals_per_restart;
  for (double s0 = std::min(1.0, 2.0 * screen_step); budget > 0 && std::isfinite(best.value);) {
    const double before = best.value;
    best = compass_search(surface, space, std::move(best), s0, config.min_step, budget);
    if (!(best.value > before + 1e-6)) break;
    s0 = std::max(0.5 * s0, config.min_step);
  }
  if (!std::isfinite(best.value)) {
    throw GPFitError("no hyperparameter setting produced a factorizable kernel matrix");
  }
  return condition(xs, y, space.unpack(best.theta), mean, std);
}

double GPModel::log_marginal_likelihood() const {
  Factor f;
  f.llt = llt_;
  f.ok = true;
  return lml_from_factor(f, train_y_);
}

Prediction GPModel::posterior(const InputPoint& x) const {
  Eigen::MatrixXd row(1, static_cast<Eigen::Index>(kInputDim));
  for (std::size_t d = 0; d < kInputDim; ++d) row(0, static_cast<Eigen::Index>(d)) = x[d];
  Eigen::VectorXd mean, var;
  posterior_batch(row, mean, var);
  return {mean[0], var[0]};
}

void GPModel::posterior_batch(const Eigen::MatrixXd& xs, Eigen::VectorXd& mean, Eigen::VectorXd& variance) const {
  const Eigen::MatrixXd k_star = matern_from_r2(scaled_sq_dist(train_x_, xs, params_), params_.signal_var).matrix();
  mean = (k_star.transpose() * alpha_).array() * y_std_ + y_mean_;
  Eigen::MatrixXd v = k_star;
  llt_.matrixL().solveInPlace(v);
  const double scale = y_std_ * y_std_;
  variance = ((params_.signal_var - v.colwise().squaredNorm().array()).max(0.0) * scale).matrix();
}

}  // namespace nasbo
