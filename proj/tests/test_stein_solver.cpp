#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "stein_llt/dist_core.hpp"
#include "stein_llt/numeric.hpp"
#include "stein_llt/stein_solver.hpp"
#include "support/mp.hpp"

using namespace stein_llt;

namespace {
double rel_err(double got, double want) {
  return std::fabs(got - want) / std::max(std::fabs(want), 1e-300);
}
std::int64_t window_top(double lambda, double width) {
  return static_cast<std::int64_t>(std::ceil(lambda + width * std::sqrt(lambda)));
}
}  // namespace

TEST_CASE("g_singleton basics") {
  CHECK(g_singleton(4.0, 3, 0) == 0.0);
  CHECK(g_singleton(4.0, 3, -2) == 0.0);
  for (double lambda : {0.5, 4.0, 37.0}) {
    for (std::int64_t a : {1, 2, 9}) {
      CHECK(rel_err(g_singleton(lambda, a, 1), -poisson_pmf(lambda, a) / lambda) < 1e-14);
    }
  }
  CHECK(rel_err(g_singleton(4.0, 3, 5), oracle::g_singleton(4.0, 3, 5).d()) < 1e-13);
}

TEST_CASE("g_singleton and delta_g against the oracle") {
  double worst_g = 0.0;
  double worst_d = 0.0;
  for (double lambda : {0.7, 4.0, 9.0, 55.5, 400.0}) {
    const std::int64_t top = window_top(lambda, 10.0);
    for (std::int64_t a = 0; a <= top; a += std::max<std::int64_t>(1, top / 9)) {
      for (std::int64_t k = 0; k <= top; k += std::max<std::int64_t>(1, top / 23)) {
        const oracle::Mp gk = oracle::g_singleton(lambda, a, k);
        const oracle::Mp gk1 = oracle::g_singleton(lambda, a, k + 1);
        worst_g = std::max(worst_g, rel_err(g_singleton(lambda, a, k), gk.d()) * (gk.d() != 0.0));
        const double d = (gk1 - gk).d();
        worst_d = std::max(worst_d, rel_err(delta_g(lambda, a, k), d));
      }
    }
  }
  CHECK(rel_err(delta_g(9.0, 12, 7), (oracle::g_singleton(9.0, 12, 8) - oracle::g_singleton(9.0, 12, 7)).d()) < 1e-12);
  MESSAGE("worst relative error g: " << worst_g << ", delta g: " << worst_d);
  CHECK(worst_g < 1e-11);
  CHECK(worst_d < 1e-11);
}

TEST_CASE("delta_g at the boundary rows") {
  for (double lambda : {0.3, 5.0, 80.0}) {
    CHECK(rel_err(delta_g(lambda, 0, 0), -std::expm1(-lambda) / lambda) < 1e-14);
    CHECK(rel_err(std::fabs(delta_g(lambda, 4, 0)), poisson_pmf(lambda, 4) / lambda) < 1e-14);
    for (std::int64_t a = 0; a < 3 * lambda + 10; ++a) CHECK(dominated(std::fabs(delta_g(lambda, a, a)), -std::expm1(-lambda) / lambda));
  }
}

TEST_CASE("g_set") {
  const std::vector<std::int64_t> none;
  for (std::int64_t k = 0; k < 20; ++k) CHECK(g_set(6.0, none, k) == 0.0);
  const std::vector<std::int64_t> one = {4};
  for (std::int64_t k = 0; k < 20; ++k) CHECK(g_set(6.0, one, k) == g_singleton(6.0, 4, k));

  for (double lambda : {3.0, 50.0, 2000.0}) {
    const std::int64_t top = window_top(lambda, 12.0);
    const std::int64_t cut = static_cast<std::int64_t>(lambda);
    for (std::int64_t k = 0; k <= top; k += 1 + top / 50) {
      const double a = g_interval(lambda, 0, cut, k);
      const double b = g_interval(lambda, cut + 1, kUnbounded, k);
      CHECK(std::fabs(a + b) <= 1e-12 * std::max(1.0, std::fabs(a)));
    }
  }
}

TEST_CASE("set paths agree and are linear") {
  std::mt19937_64 rng(4);
  for (double lambda : {5.0, 120.0}) {
    const std::int64_t top = window_top(lambda, 10.0);
    std::vector<std::int64_t> contiguous;
    for (std::int64_t a = 0; a <= top * 2 / 3; ++a) contiguous.push_back(a);
    std::vector<std::int64_t> left, right;
    for (std::int64_t a = 0; a <= top; ++a) (rng() & 1 ? left : right).push_back(a);
    std::vector<std::int64_t> both = left;
    both.insert(both.end(), right.begin(), right.end());
    std::sort(both.begin(), both.end());
    const SteinSolution sol_left(lambda, SteinTarget::set(left));
    for (std::int64_t k = 0; k <= top; ++k) {
      const double by_points = g_set_by_singletons(lambda, contiguous, k);
      const double by_tail = g_interval(lambda, 0, top * 2 / 3, k);
      CHECK(std::fabs(by_points - by_tail) <= 1e-10);
      const double gl = g_set_by_singletons(lambda, left, k);
      const double gr = g_set_by_singletons(lambda, right, k);
      CHECK(std::fabs(g_set_by_singletons(lambda, both, k) - gl - gr) <= 1e-12);
      CHECK(std::fabs(sol_left.g(k) - gl) <= 1e-10);
    }
  }
}

TEST_CASE("residual of the Stein equation") {
  for (double lambda : {0.5, 3.0, 40.0, 900.0, 1e4}) {
    const std::int64_t kmax = window_top(lambda, 12.0);
    for (std::int64_t a : {std::int64_t{0}, std::int64_t{1}, static_cast<std::int64_t>(lambda),
                           static_cast<std::int64_t>(lambda + 3 * std::sqrt(lambda))}) {
      const double scale = std::max(1.0, lambda / lambda);  // sup|g_a| <= 1/lambda
      CHECK(residual_check(lambda, SteinTarget::point(a), kmax) <= 1e-10 * scale);
    }
    const double sup_set = 1.0 / std::sqrt(lambda);
    CHECK(residual_check(lambda, SteinTarget::interval(0, static_cast<std::int64_t>(lambda)), kmax) <=
          1e-10 * std::max(1.0, sup_set * lambda));
    CHECK(residual_check(lambda, SteinTarget::interval(static_cast<std::int64_t>(lambda / 2), kUnbounded), kmax) <=
          1e-10 * std::max(1.0, sup_set * lambda));
  }
  // k = 0 row: lambda g(1) = 1{0 in A} - P(A).
  const double lambda = 2.5;
  CHECK(lambda * g_singleton(lambda, 0, 1) == doctest::Approx(1.0 - poisson_pmf(lambda, 0)).epsilon(1e-14));
}

TEST_CASE("uniform bounds") {
  std::mt19937_64 rng(8);
  for (double lambda : {0.8, 4.0, 16.0, 100.0, 900.0}) {
    const std::int64_t top = window_top(lambda, 10.0);
    for (int rep = 0; rep < 4; ++rep) {
      std::vector<std::int64_t> pts;
      for (std::int64_t a = 0; a <= top; ++a) if (rng() % 3 == 0) pts.push_back(a);
      const SteinSolution sol(lambda, SteinTarget::set(pts));
      double sup_g = 0.0, sup_dg = 0.0;
      for (std::int64_t k = 0; k <= top + 5; ++k) {
        sup_g = std::max(sup_g, std::fabs(sol.g(k)));
        sup_dg = std::max(sup_dg, std::fabs(sol.g(k + 1) - sol.g(k)));
      }
      CHECK(dominated(sup_g, 1.0 / std::sqrt(lambda)));
      CHECK(dominated(sup_dg, -std::expm1(-lambda) / lambda));
    }
    for (std::int64_t a = 0; a <= top; a += 1 + top / 30) {
      for (std::int64_t k = 0; k <= top; ++k) CHECK(dominated(std::fabs(g_singleton(lambda, a, k)), 1.0 / lambda));
    }
  }
}

TEST_CASE("non-uniform bounds dominate delta_g on the grid") {
  long points = 0, failures = 0;
  for (double lambda : {4.0, 16.0, 100.0, 900.0}) {
    const std::int64_t top = static_cast<std::int64_t>(std::floor(lambda + 10 * std::sqrt(lambda)));
    for (std::int64_t a = 0; a <= top; ++a) {
      for (std::int64_t k = 0; k <= top; ++k) {
        const double d = std::fabs(delta_g(lambda, a, k));
        const auto b = nonuniform_delta_bound(lambda, a, k);
        ++points;
        if (!dominated(d, b.case_split) || !dominated(d, b.simplified) || b.case_split > b.simplified * (1 + 1e-12))
          ++failures;
      }
    }
  }
  MESSAGE("grid points checked: " << points);
  CHECK(failures == 0);
  const auto b = nonuniform_delta_bound(9.0, 5, 5);
  CHECK(b.case_split == doctest::Approx(1.0 / 9.0));
  const auto c = nonuniform_delta_bound(9.0, 2, 6);
  CHECK(c.case_split == doctest::Approx(poisson_pmf(9.0, 2) / 3.0 + 3.0 / 81.0));
}

TEST_CASE("delta_g is typically of order lambda^{-3/2}") {
  double worst = 0.0;
  for (double lambda : {16.0, 100.0, 900.0, 1e4}) {
    const double sd = std::sqrt(lambda);
    for (std::int64_t a : {static_cast<std::int64_t>(lambda - sd), static_cast<std::int64_t>(lambda),
                           static_cast<std::int64_t>(lambda + 2 * sd)}) {
      std::vector<double> v;
      for (auto k = static_cast<std::int64_t>(std::ceil(lambda - 2 * sd)); k <= lambda + 2 * sd; ++k) {
        if (k != a) v.push_back(std::fabs(delta_g(lambda, a, k)) * lambda * sd);
      }
      std::nth_element(v.begin(), v.begin() + v.size() / 2, v.end());
      worst = std::max(worst, v[v.size() / 2]);
    }
  }
  MESSAGE("median |delta g| lambda^{3/2}: " << worst);
  CHECK(worst < 3.0);
}

TEST_CASE("translated solutions") {
  for (auto [mu, s2] : {std::pair{5.0, 4.0}, {0.3, 4.0}, {250.7, 100.0}, {-10.0, 36.0}}) {
    const auto tp = make_tp(mu, s2);
    const std::int64_t lo = tp.shift - 3;
    const std::int64_t hi = tp.shift + window_top(tp.lambda, 10.0);
    for (std::int64_t a = 0; a <= hi - tp.shift; a += 1 + (hi - lo) / 20) {
      for (std::int64_t k = lo; k <= hi; ++k) {
        CHECK(f_translated(tp, a, k) == g_singleton(tp.lambda, a, k - tp.shift));
        CHECK(dominated(std::fabs(f_translated(tp, a, k)), 1.0 / tp.lambda));
        CHECK(dominated(std::fabs(f_delta(tp, a, k)), f_delta_bound(tp, a, k)));
      }
    }
  }
}
