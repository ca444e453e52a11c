#include "nasbo/moo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "nasbo/errors.hpp"

namespace nasbo {

bool dominates(const ObjectivePoint& a, const ObjectivePoint& b) {
  return a.f1 <= b.f1 && a.f2 <= b.f2 && (a.f1 < b.f1 || a.f2 < b.f2);
}

std::vector<ObjectivePoint> pareto_front(std::span<const ObjectivePoint> points) {
  if (points.empty()) throw DataError("pareto_front of an empty point set");
  std::vector<ObjectivePoint> sorted(points.begin(), points.end());
  for (const auto& p : sorted) {
    if (!std::isfinite(p.f1) || !std::isfinite(p.f2)) throw DataError("non-finite objective for '" + p.id + "'");
  }
  std::stable_sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const auto& a, const auto& b) { return a.f1 < b.f1 || (a.f1 == b.f1 && a.f2 < b.f2); });

  std::vector<ObjectivePoint> front;
  double best_f2 = std::numeric_limits<double>::infinity();
  for (auto& p : sorted) {
    if (p.f2 < best_f2) {
      best_f2 = p.f2;
      front.push_back(std::move(p));
    }
  }
  return front;
}

ParetoArchive::ParetoArchive(std::vector<ObjectivePoint> members, ObjectivePoint ref)
    : members_(std::move(members)), ref_(std::move(ref)) {
  if (!std::isfinite(ref_.f1) || !std::isfinite(ref_.f2)) throw DataError("reference point must be finite");
  for (std::size_t i = 0; i < members_.size(); ++i) {
    const auto& m = members_[i];
    if (!(m.f1 < ref_.f1 && m.f2 < ref_.f2)) {
      throw DataError("archive member '" + m.id + "' is not strictly below the reference point");
    }
    if (i > 0 && !(members_[i - 1].f1 < m.f1 && members_[i - 1].f2 > m.f2)) {
      throw DataError("archive members are not a sorted non-dominated front");
    }
  }
}

ParetoArchive ParetoArchive::from_points(std::span<const ObjectivePoint> points, ObjectivePoint ref) {
  if (points.empty()) return ParetoArchive({}, std::move(ref));
  return ParetoArchive(pareto_front(points), std::move(ref));
}

double hypervolume_2d(const ParetoArchive& front) {
  const auto& m = front.members();
  const auto& ref = front.ref();
  double area = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    const double right = i + 1 < m.size() ? m[i + 1].f1 : ref.f1;
    area += (right - m[i].f1) * (ref.f2 - m[i].f2);
  }
  return area;
}

namespace {

/// The non-dominated region below the reference point splits into vertical
/// strips [lo_i, hi_i) x (-inf, height_i): strip 0 lies left of the first
/// member at height ref.f2, strip i lies between members i-1 and i at the
/// height of member i-1.
struct Strip {
  double lo;
  double hi;
  double height;
};

std::vector<Strip> strips(const ParetoArchive& front) {
  const auto& m = front.members();
  const auto& ref = front.ref();
  std::vector<Strip> out;
  out.reserve(m.size() + 1);
  double lo = -std::numeric_limits<double>::infinity();
  double height = ref.f2;
  for (const auto& p : m) {
    out.push_back({lo, p.f1, height});
    lo = p.f1;
    height = p.f2;
  }
  out.push_back({lo, ref.f1, height});
  return out;
}

/// E[max(0, c - Y)] for Y ~ N(mu, sigma^2).
double expected_shortfall(double c, double mu, double sigma) {
  if (sigma <= 0.0) return std::max(0.0, c - mu);
  const double t = (c - mu) / sigma;
  const auto n = erf_based_normal(t);
  return (c - mu) * n.cdf + sigma * n.pdf;
}

/// psi(a, b) = sigma * phi((b - mu)/sigma) + (a - mu) * Phi((b - mu)/sigma).
double psi(double a, double b, double mu, double sigma) {
  const auto n = erf_based_normal((b - mu) / sigma);
  return sigma * n.pdf + (a - mu) * n.cdf;
}

/// E[max(0, hi - max(lo, Y))] for Y ~ N(mu, sigma^2): expected width of the
/// strip's part lying to the right of Y.
double expected_width(double lo, double hi, double mu, double sigma) {
  if (sigma <= 0.0) return std::max(0.0, hi - std::max(lo, mu));
  if (!std::isfinite(lo)) return psi(hi, hi, mu, sigma);
  const double below_lo = erf_based_normal((lo - mu) / sigma).cdf;
  return std::max(0.0, psi(hi, hi, mu, sigma) - psi(hi, lo, mu, sigma) + (hi - lo) * below_lo);
}

}  // namespace

double hypervolume_improvement(double y1, double y2, const ParetoArchive& front) {
  double gain = 0.0;
  for (const auto& s : strips(front)) {
    gain += std::max(0.0, s.hi - std::max(s.lo, y1)) * std::max(0.0, s.height - y2);
  }
  return gain;
}

double ehvi_2d(double mu1, double var1, double mu2, double var2, const ParetoArchive& front) {
  if (!(var1 >= 0.0) || !(var2 >= 0.0)) throw DataError("ehvi_2d: negative variance");
  if (!std::isfinite(mu1) || !std::isfinite(mu2)) throw DataError("ehvi_2d: non-finite mean");
  const double s1 = std::sqrt(var1);
  const double s2 = std::sqrt(var2);
  double total = 0.0;
  for (const auto& s : strips(front)) {
    if (s.hi <= s.lo) continue;
    const double depth = expected_shortfall(s.height, mu2, s2);
    if (depth <= 0.0) continue;
    total += expected_width(s.lo, s.hi, mu1, s1) * depth;
  }
  return std::max(total, 0.0);
}

NormalPdfCdf erf_based_normal(double x) {
  constexpr double kInvSqrt2Pi = 0.39894228040143267794;
  return {kInvSqrt2Pi * std::exp(-0.5 * x * x), 0.5 * std::erfc(-x / std::numbers::sqrt2)};
}

}  // namespace nasbo
