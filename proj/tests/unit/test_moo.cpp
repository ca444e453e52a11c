#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "nasbo/errors.hpp"
#include "nasbo/moo.hpp"
#include "nasbo/random.hpp"

using namespace nasbo;

namespace {

std::vector<ObjectivePoint> random_points(Rng& rng, std::size_t n, bool grid = false) {
  std::vector<ObjectivePoint> pts;
  for (std::size_t i = 0; i < n; ++i) {
    const double a = grid ? static_cast<double>(rng.below(6)) : rng.uniform();
    const double b = grid ? static_cast<double>(rng.below(6)) : rng.uniform();
    pts.push_back({a, b, "p" + std::to_string(i)});
  }
  return pts;
}

std::set<std::string> ids(const std::vector<ObjectivePoint>& pts) {
  std::set<std::string> out;
  for (const auto& p : pts) out.insert(p.id);
  return out;
}

// Brute-force front: quadratic dominance scan, first of each duplicate
// group by id.
std::set<std::string> front_oracle(const std::vector<ObjectivePoint>& pts) {
  std::set<std::string> out;
  for (const auto& p : pts) {
    bool keep = true;
    for (const auto& q : pts) {
      const bool weakly = q.f1 <= p.f1 && q.f2 <= p.f2 && (q.f1 < p.f1 || q.f2 < p.f2);
      const bool dup_first = q.f1 == p.f1 && q.f2 == p.f2 && q.id < p.id;
      if (weakly || dup_first) keep = false;
    }
    if (keep) out.insert(p.id);
  }
  return out;
}

// Area dominated within the ref box by coordinate compression: each grid cell
// is tested against every point.
double hv_grid_oracle(const std::vector<ObjectivePoint>& pts, const ObjectivePoint& ref) {
  std::vector<double> xs{ref.f1}, ys{ref.f2};
  for (const auto& p : pts) {
    xs.push_back(p.f1);
    ys.push_back(p.f2);
  }
  std::sort(xs.begin(), xs.end());
  std::sort(ys.begin(), ys.end());
  double area = 0;
  for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
    for (std::size_t j = 0; j + 1 < ys.size(); ++j) {
      if (xs[i] >= ref.f1 || ys[j] >= ref.f2) continue;
      for (const auto& p : pts) {
        if (p.f1 <= xs[i] && p.f2 <= ys[j]) {
          area += (xs[i + 1] - xs[i]) * (ys[j + 1] - ys[j]);
          break;
        }
      }
    }
  }
  return area;
}

ParetoArchive archive_of(const std::vector<ObjectivePoint>& pts, ObjectivePoint ref) {
  return ParetoArchive::from_points(pts, ref);
}

// Series for Phi in long double: 1/2 + phi(x) * sum x^(2k+1) / (2k+1)!!.
double phi_series(double xd) {
  const long double x = xd;
  long double term = x, sum = x;
  for (int k = 1; k < 400; ++k) {
    term *= x * x / (2 * k + 1);
    sum += term;
    if (std::fabs(term) < 1e-30L * std::fabs(sum)) break;
  }
  const long double pdf = std::exp(-0.5L * x * x) / std::sqrt(2.0L * std::numbers::pi_v<long double>);
  return static_cast<double>(0.5L + pdf * sum);
}

}  // namespace

TEST_SUITE("moo") {
  TEST_CASE("dominance") {
    CHECK(dominates({10, 27, "NanoSD 2"}, {10, 41, "NanoSD 1"}));
    CHECK_FALSE(dominates({10, 41, "NanoSD 1"}, {10, 27, "NanoSD 2"}));
    const ObjectivePoint a{3, 3, "a"};
    CHECK_FALSE(dominates(a, a));
    CHECK_FALSE(dominates({1, 9, "x"}, {2, 8, "y"}));
    CHECK_FALSE(dominates({2, 8, "y"}, {1, 9, "x"}));
  }

  TEST_CASE("reference-table fronts") {
    // (tafid, latency_ms, params_m) per model.
    const std::vector<std::tuple<std::string, double, double, double>> rows{
        {"TinySD", 13.8, 74, 323},  {"Hand-tuned", 20.6, 53, 276}, {"NanoSD 1", 10, 41, 309},
        {"NanoSD 2", 10, 27, 315},  {"NanoSD 3", 10.5, 24, 306},   {"NanoSD 4", 11.1, 20, 297},
        {"NanoSD 5", 17.3, 12, 170}, {"NanoSD 6", 18.2, 28, 160},  {"NanoSD 7", 22, 27, 130}};
    std::vector<ObjectivePoint> lat, par;
    for (const auto& [id, f, l, p] : rows) {
      lat.push_back({f, l, id});
      par.push_back({f, p, id});
    }
    const auto lf = pareto_front(lat);
    CHECK(ids(lf) == std::set<std::string>{"NanoSD 5", "NanoSD 4", "NanoSD 3", "NanoSD 2"});
    CHECK(lf.front().id == "NanoSD 2");
    CHECK(ids(pareto_front(par)) ==
          std::set<std::string>{"NanoSD 7", "NanoSD 6", "NanoSD 5", "NanoSD 4", "NanoSD 3", "NanoSD 1"});
  }

  TEST_CASE("front edge cases") {
    const std::vector<ObjectivePoint> one{{1, 2, "only"}};
    CHECK(ids(pareto_front(one)) == std::set<std::string>{"only"});
    CHECK_THROWS_AS(pareto_front(std::vector<ObjectivePoint>{}), DataError);
    const std::vector<ObjectivePoint> bad{{1, std::nan(""), "x"}};
    CHECK_THROWS_AS(pareto_front(bad), DataError);
    const std::vector<ObjectivePoint> dup{{1, 1, "b"}, {1, 1, "a"}, {2, 0, "c"}};
    CHECK(ids(pareto_front(dup)) == std::set<std::string>{"a", "c"});
  }

  TEST_CASE("front matches the brute-force scan, is sorted, idempotent and order-free") {
    Rng rng(1);
    for (int trial = 0; trial < 300; ++trial) {
      auto pts = random_points(rng, 1 + rng.below(40), trial % 2 == 0);
      const auto f = pareto_front(pts);
      CHECK(ids(f) == front_oracle(pts));
      for (std::size_t i = 1; i < f.size(); ++i) {
        CHECK(f[i - 1].f1 < f[i].f1);
        CHECK(f[i - 1].f2 > f[i].f2);
      }
      CHECK(ids(pareto_front(f)) == ids(f));
      std::shuffle(pts.begin(), pts.end(), rng.engine());
      CHECK(ids(pareto_front(pts)) == ids(f));
    }
  }

  TEST_CASE("archive invariants are enforced") {
    CHECK_THROWS_AS(ParetoArchive({{0, 0, "a"}}, {0, 1, "ref"}), DataError);
    CHECK_THROWS_AS(ParetoArchive({{0, 1, "a"}, {1, 1, "b"}}, {2, 2, "ref"}), DataError);
    CHECK_THROWS_AS(ParetoArchive({{1, 0, "a"}, {0, 1, "b"}}, {2, 2, "ref"}), DataError);
    CHECK_NOTHROW(ParetoArchive({{0, 1, "a"}, {1, 0, "b"}}, {2, 2, "ref"}));
  }

  TEST_CASE("hypervolume closed forms") {
    CHECK(hypervolume_2d(archive_of({{0, 0, "a"}}, {1, 1, "r"})) == 1.0);
    CHECK(hypervolume_2d(archive_of({{0, 0.5, "a"}, {0.5, 0, "b"}}, {1, 1, "r"})) == doctest::Approx(0.75));
    CHECK(hypervolume_2d(ParetoArchive({}, {1, 1, "r"})) == 0.0);
  }

  TEST_CASE("hypervolume matches the grid oracle") {
    Rng rng(2);
    for (int trial = 0; trial < 200; ++trial) {
      const auto pts = random_points(rng, 1 + rng.below(30), trial % 3 == 0);
      const ObjectivePoint ref{6.5, 6.5, "r"};
      const double got = hypervolume_2d(archive_of(pts, ref));
      CHECK(got == doctest::Approx(hv_grid_oracle(pts, ref)).epsilon(1e-12));
    }
  }

  TEST_CASE("hypervolume grows with non-dominated points only") {
    Rng rng(3);
    const ObjectivePoint ref{1.5, 1.5, "r"};
    for (int trial = 0; trial < 200; ++trial) {
      auto pts = random_points(rng, 1 + rng.below(20));
      const double before = hypervolume_2d(archive_of(pts, ref));
      const auto front = pareto_front(pts);
      const ObjectivePoint q{rng.uniform(), rng.uniform(), "new"};
      bool dominated = false;
      for (const auto& f : front) dominated = dominated || (f.f1 <= q.f1 && f.f2 <= q.f2);
      pts.push_back(q);
      const double after = hypervolume_2d(archive_of(pts, ref));
      if (dominated) {
        CHECK(std::abs(after - before) <= 1e-12);
      } else {
        CHECK(after > before);
      }
      CHECK(hypervolume_improvement(q.f1, q.f2, archive_of(front, ref)) ==
            doctest::Approx(after - before).epsilon(1e-9).scale(1.0));
    }
  }

  TEST_CASE("hypervolume is translation invariant") {
    Rng rng(4);
    for (int trial = 0; trial < 100; ++trial) {
      auto pts = random_points(rng, 1 + rng.below(20));
      const ObjectivePoint ref{1.2, 1.3, "r"};
      const double base = hypervolume_2d(archive_of(pts, ref));
      const double dx = rng.uniform(-3, 3), dy = rng.uniform(-3, 3);
      for (auto& p : pts) {
        p.f1 += dx;
        p.f2 += dy;
      }
      CHECK(std::abs(hypervolume_2d(archive_of(pts, {ref.f1 + dx, ref.f2 + dy, "r"})) - base) <= 1e-12);
    }
  }

  TEST_CASE("normal pdf and cdf") {
    CHECK(erf_based_normal(0).pdf == doctest::Approx(0.3989423).epsilon(1e-7));
    CHECK(erf_based_normal(0).cdf == 0.5);
    CHECK(erf_based_normal(1.96).cdf == doctest::Approx(0.9750021).epsilon(1e-7));
    for (double x = -8; x <= 8; x += 0.01) {
      const auto r = erf_based_normal(x);
      CHECK(std::abs(r.cdf - phi_series(x)) <= 1e-7);
      CHECK(std::abs(r.cdf + erf_based_normal(-x).cdf - 1.0) <= 1e-12);
      CHECK(r.pdf == doctest::Approx(std::exp(-0.5 * x * x) / std::sqrt(2 * std::numbers::pi)).epsilon(1e-15));
    }
  }

  TEST_CASE("point-mass EHVI equals the deterministic improvement") {
    CHECK(ehvi_2d(0, 0, 0, 0, ParetoArchive({}, {1, 1, "r"})) == doctest::Approx(1.0));
    const auto front = archive_of({{0.2, 0.6, "a"}, {0.5, 0.3, "b"}}, {1, 1, "r"});
    CHECK(ehvi_2d(0.7, 0, 0.8, 0, front) == 0.0);

    Rng rng(5);
    for (int trial = 0; trial < 300; ++trial) {
      const auto pts = random_points(rng, rng.below(15));
      const ObjectivePoint ref{1.1, 1.1, "r"};
      const ParetoArchive a = pts.empty() ? ParetoArchive({}, ref) : archive_of(pts, ref);
      const double y1 = rng.uniform(-0.2, 1.3), y2 = rng.uniform(-0.2, 1.3);
      CHECK(std::abs(ehvi_2d(y1, 0, y2, 0, a) - hypervolume_improvement(y1, y2, a)) <= 1e-9);
    }
  }

  TEST_CASE("EHVI is non-negative and fades into dominated territory") {
    Rng rng(6);
    const auto front = archive_of({{0.2, 0.6, "a"}, {0.5, 0.3, "b"}}, {1, 1, "r"});
    for (int i = 0; i < 500; ++i) {
      CHECK(ehvi_2d(rng.uniform(-1, 2), rng.uniform(0, 1), rng.uniform(-1, 2), rng.uniform(0, 1), front) >= 0.0);
    }
    double prev = std::numeric_limits<double>::infinity();
    for (double var : {1e-1, 1e-2, 1e-3, 1e-4, 1e-6}) {
      const double e = ehvi_2d(0.8, var, 0.8, var, front);
      CHECK(e <= prev);
      prev = e;
    }
    CHECK(prev <= 1e-12);
    CHECK_THROWS_AS(ehvi_2d(0, -1, 0, 0, front), DataError);
  }

  TEST_CASE("EHVI matches Monte Carlo within 4 standard errors") {
    Rng rng(7);
    std::normal_distribution<double> n01;
    int agree = 0;
    constexpr int kCases = 30;
    for (int trial = 0; trial < kCases; ++trial) {
      const auto pts = random_points(rng, 1 + rng.below(10));
      const ParetoArchive a = archive_of(pts, {1.2, 1.2, "r"});
      const double m1 = rng.uniform(-0.2, 1.0), m2 = rng.uniform(-0.2, 1.0);
      const double s1 = rng.uniform(0.01, 0.5), s2 = rng.uniform(0.01, 0.5);
      constexpr int kDraws = 20000;
      double sum = 0, sum2 = 0;
      for (int d = 0; d < kDraws; ++d) {
        const double v = hypervolume_improvement(m1 + s1 * n01(rng.engine()), m2 + s2 * n01(rng.engine()), a);
        sum += v;
        sum2 += v * v;
      }
      const double mean = sum / kDraws;
      const double se = std::sqrt(std::max(sum2 / kDraws - mean * mean, 0.0) / kDraws);
      if (std::abs(ehvi_2d(m1, s1 * s1, m2, s2 * s2, a) - mean) <= 4 * se + 1e-12) ++agree;
    }
    CHECK(agree >= kCases - 1);
  }
}
