#include "nasbo/frechet.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>

#include "nasbo/csv.hpp"
#include "nasbo/errors.hpp"

namespace nasbo {

namespace {

constexpr double kSymmetryTol = 1e-8;
constexpr double kEigenClamp = 1e-8;
constexpr double kDistanceClamp = 1e-6;

double max_abs(const Eigen::MatrixXd& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

void check_symmetric(const Eigen::MatrixXd& m, const char* what) {
  if (m.rows() != m.cols()) throw DataError(std::string(what) + " is not square");
  if (!m.allFinite()) throw DataError(std::string(what) + " has non-finite entries");
  const double asym = max_abs(m - m.transpose());
  if (asym > kSymmetryTol * std::max(1.0, max_abs(m))) {
    throw DataError(std::string(what) + " is not symmetric (max asymmetry " + format_double(asym) + ")");
  }
}

/// Eigenvalues of a symmetric matrix, clamped at zero after the roundoff check.
Eigen::VectorXd clamped_spectrum(const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>& eig) {
  Eigen::VectorXd values = eig.eigenvalues();
  const double scale = std::max(1.0, values.size() ? values.cwiseAbs().maxCoeff() : 0.0);
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (values[i] < -kEigenClamp * scale) {
      throw DataError("matrix is not positive semi-definite (eigenvalue " + format_double(values[i]) + ")");
    }
    values[i] = std::max(values[i], 0.0);
  }
  return values;
}

}  // namespace

GaussianStats::GaussianStats(Eigen::VectorXd mean, Eigen::MatrixXd cov, std::size_t n_samples)
    : mean_(std::move(mean)), cov_(std::move(cov)), n_samples_(n_samples) {
  if (cov_.rows() != mean_.size() || cov_.cols() != mean_.size()) {
    throw DataError("covariance shape does not match mean dimension");
  }
  if (!mean_.allFinite() || !cov_.allFinite()) throw DataError("statistics contain non-finite values");
  check_symmetric(cov_, "covariance");
  cov_ = 0.5 * (cov_ + cov_.transpose()).eval();
}

StatsAccumulator::StatsAccumulator(Eigen::Index dim)
    : dim_(dim), mean_(Eigen::VectorXd::Zero(dim)), comoment_(Eigen::MatrixXd::Zero(dim, dim)) {}

void StatsAccumulator::add(std::span<const double> sample) {
  if (static_cast<Eigen::Index>(sample.size()) != dim_) {
    throw DataError("sample dimension " + std::to_string(sample.size()) + " != " + std::to_string(dim_));
  }
  const Eigen::Map<const Eigen::VectorXd> x(sample.data(), dim_);
  if (!x.allFinite()) throw DataError("sample has non-finite coordinates");
  ++n_;
  const Eigen::VectorXd delta = x - mean_;
  mean_ += delta / static_cast<double>(n_);
  comoment_.noalias() += delta * (x - mean_).transpose();
}

GaussianStats StatsAccumulator::finish() const {
  if (n_ < 2) throw DataError("need at least 2 samples to estimate a covariance");
  Eigen::MatrixXd cov = comoment_ / static_cast<double>(n_ - 1);
  cov = 0.5 * (cov + cov.transpose()).eval();
  return GaussianStats(mean_, std::move(cov), n_);
}

GaussianStats accumulate_stats(std::span<const Eigen::VectorXd> samples) {
  if (samples.empty()) throw DataError("need at least 2 samples to estimate a covariance");
  StatsAccumulator acc(samples.front().size());
  for (const auto& s : samples) acc.add(std::span<const double>(s.data(), static_cast<std::size_t>(s.size())));
  return acc.finish();
}

Eigen::MatrixXd matrix_sqrt_psd(const Eigen::MatrixXd& m) {
  check_symmetric(m, "matrix");
  const Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
  if (eig.info() != Eigen::Success) throw DataError("eigendecomposition failed");
  const Eigen::VectorXd roots = clamped_spectrum(eig).cwiseSqrt();
  const auto& v = eig.eigenvectors();
  Eigen::MatrixXd s = v * roots.asDiagonal() * v.transpose();
  return 0.5 * (s + s.transpose());
}

double frechet_distance(const GaussianStats& a, const GaussianStats& b) {
  if (a.dim() != b.dim()) {
    throw DataError("dimension mismatch: " + std::to_string(a.dim()) + " vs " + std::to_string(b.dim()));
  }
  const double mean_term = (a.mean() - b.mean()).squaredNorm();
  const Eigen::MatrixXd root_a = matrix_sqrt_psd(a.cov());
  Eigen::MatrixXd inner = root_a * b.cov() * root_a;
  inner = 0.5 * (inner + inner.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(inner, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) throw DataError("eigendecomposition failed");
  const double cross = clamped_spectrum(eig).cwiseSqrt().sum();

  const double trace_sum = a.cov().trace() + b.cov().trace();
  const double d = mean_term + trace_sum - 2.0 * cross;
  if (d < -kDistanceClamp * std::max(1.0, trace_sum + mean_term)) {
    throw DataError("Fréchet distance numerically negative (" + format_double(d) + ")");
  }
  return std::max(d, 0.0);
}

TafidResult tafid(const GaussianStats& student, const GaussianStats& teacher, const Provenance& student_prov,
                  const Provenance& teacher_prov) {
  TafidResult r;
  r.value = frechet_distance(student, teacher);
  r.student = student_prov;
  r.teacher = teacher_prov;
  r.aligned = !student_prov.prompt_set.empty() && student_prov.prompt_set == teacher_prov.prompt_set &&
              student_prov.seed_set == teacher_prov.seed_set;
  return r;
}

StatsFile parse_stats_file(std::string_view text, const std::string& source) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(source, 0, e.what());
  }
  try {
    const auto d = j.at("dim").get<Eigen::Index>();
    const auto n = j.at("n_samples").get<std::size_t>();
    const auto mean = j.at("mean").get<std::vector<double>>();
    const auto cov = j.at("cov").get<std::vector<double>>();
    if (d <= 0 || static_cast<Eigen::Index>(mean.size()) != d || static_cast<Eigen::Index>(cov.size()) != d * d) {
      throw ParseError(source, 0, "mean/cov sizes do not match dim");
    }
    Eigen::VectorXd mu = Eigen::Map<const Eigen::VectorXd>(mean.data(), d);
    Eigen::MatrixXd sigma = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        cov.data(), d, d);
    Provenance p;
    p.feature_extractor = j.value("feature_extractor", "");
    p.prompt_set = j.value("prompt_set", "");
    p.seed_set = j.value("seed_set", "");
    return StatsFile{GaussianStats(std::move(mu), std::move(sigma), n), std::move(p)};
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(source, 0, e.what());
  }
}

StatsFile load_stats_file(const std::string& path) { return parse_stats_file(read_text_file(path), path); }

std::string serialize_stats_file(const StatsFile& file) {
  const auto& s = file.stats;
  nlohmann::json j;
  j["dim"] = s.dim();
  j["n_samples"] = s.n_samples();
  j["mean"] = std::vector<double>(s.mean().data(), s.mean().data() + s.dim());
  std::vector<double> cov;
  cov.reserve(static_cast<std::size_t>(s.dim() * s.dim()));
  for (Eigen::Index r = 0; r < s.dim(); ++r)
    for (Eigen::Index c = 0; c < s.dim(); ++c) cov.push_back(s.cov()(r, c));
  j["cov"] = std::move(cov);
  j["feature_extractor"] = file.provenance.feature_extractor;
  j["prompt_set"] = file.provenance.prompt_set;
  j["seed_set"] = file.provenance.seed_set;
  return j.dump() + "\n";
}

}  // namespace nasbo
