#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <string>

namespace nasbo {

/// Opaque description of where feature statistics came from.
struct Provenance {
  std::string feature_extractor;
  std::string prompt_set;
  std::string seed_set;
};

/// Mean and covariance of a feature distribution. The covariance is
/// symmetrized on construction.
class GaussianStats {
 public:
  GaussianStats(Eigen::VectorXd mean, Eigen::MatrixXd cov, std::size_t n_samples);

  const Eigen::VectorXd& mean() const { return mean_; }
  const Eigen::MatrixXd& cov() const { return cov_; }
  std::size_t n_samples() const { return n_samples_; }
  Eigen::Index dim() const { return mean_.size(); }

 private:
  Eigen::VectorXd mean_;
  Eigen::MatrixXd cov_;
  std::size_t n_samples_;
};

/// Single-pass Welford accumulation of mean and unbiased covariance.
class StatsAccumulator {
 public:
  explicit StatsAccumulator(Eigen::Index dim);

  /// Throws DataError on a dimension mismatch or a non-finite coordinate.
  void add(std::span<const double> sample);
  std::size_t count() const { return n_; }
  /// Throws DataError with fewer than two samples.
  GaussianStats finish() const;

 private:
  Eigen::Index dim_;
  std::size_t n_ = 0;
  Eigen::VectorXd mean_;
  Eigen::MatrixXd comoment_;
};

GaussianStats accumulate_stats(std::span<const Eigen::VectorXd> samples);

/// Symmetric PSD square root through an eigendecomposition. Eigenvalues down
/// to -1e-8 (relative to the spectrum scale when it exceeds 1) are treated as
/// roundoff and clamped to zero.
Eigen::MatrixXd matrix_sqrt_psd(const Eigen::MatrixXd& m);

/// ||mu_a - mu_b||^2 + tr(S_a + S_b - 2 (S_a^1/2 S_b S_a^1/2)^1/2).
double frechet_distance(const GaussianStats& a, const GaussianStats& b);

struct TafidResult {
  double value = 0.0;
  Provenance student;
  Provenance teacher;
  /// True when both sides name the same prompt set and seed set.
  bool aligned = false;
};

/// Teacher-aligned FID: the Fréchet distance of student features to the
/// teacher's on the same prompt/seed pairs.
TafidResult tafid(const GaussianStats& student, const GaussianStats& teacher, const Provenance& student_prov = {},
                  const Provenance& teacher_prov = {});

struct StatsFile {
  GaussianStats stats;
  Provenance provenance;
};

/// JSON container: dim, n_samples, mean, cov (row-major), and provenance
/// fields feature_extractor, prompt_set, seed_set.
StatsFile parse_stats_file(std::string_view text, const std::string& source = "<stats>");
StatsFile load_stats_file(const std::string& path);
std::string serialize_stats_file(const StatsFile& file);

}  // namespace nasbo
