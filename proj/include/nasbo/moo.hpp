#pragma once

#include <span>
#include <string>
#include <vector>

namespace nasbo {

/// A point in a bi-objective minimization problem.
struct ObjectivePoint {
  double f1 = 0.0;
  double f2 = 0.0;
  std::string id;
};

/// Weak Pareto dominance for minimization: no worse in both objectives and
/// strictly better in at least one.
bool dominates(const ObjectivePoint& a, const ObjectivePoint& b);

/// Non-dominated subset sorted by f1 ascending. Inputs are pre-sorted by id,
/// so exact duplicates in objective space keep the smallest id and the result
/// does not depend on input order. Throws DataError on empty or non-finite input.
std::vector<ObjectivePoint> pareto_front(std::span<const ObjectivePoint> points);

/// Mutually non-dominated members (f1 ascending, f2 strictly descending) and a
/// reference point strictly worse than every member in both objectives.
class ParetoArchive {
 public:
  /// Throws DataError if `members` is not a valid front for `ref`.
  ParetoArchive(std::vector<ObjectivePoint> members, ObjectivePoint ref);

  /// Front of arbitrary points. Throws DataError if a front member is not
  /// strictly below `ref`.
  static ParetoArchive from_points(std::span<const ObjectivePoint> points, ObjectivePoint ref);

  const std::vector<ObjectivePoint>& members() const { return members_; }
  const ObjectivePoint& ref() const { return ref_; }
  bool empty() const { return members_.empty(); }
  std::size_t size() const { return members_.size(); }

 private:
  std::vector<ObjectivePoint> members_;
  ObjectivePoint ref_;
};

/// Exact area dominated by the archive and bounded by its reference point.
double hypervolume_2d(const ParetoArchive& front);

/// Deterministic hypervolume gain of adding `y` to the archive (0 if dominated
/// or outside the reference box).
double hypervolume_improvement(double y1, double y2, const ParetoArchive& front);

/// Exact expected hypervolume improvement for independent Gaussian objectives
/// N(mu1, var1) x N(mu2, var2). Zero variances give the deterministic gain.
double ehvi_2d(double mu1, double var1, double mu2, double var2, const ParetoArchive& front);

struct NormalPdfCdf {
  double pdf = 0.0;
  double cdf = 0.0;
};

/// Standard normal density and distribution function via erfc.
NormalPdfCdf erf_based_normal(double x);

}  // namespace nasbo
