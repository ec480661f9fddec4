#include <cmath>
#include <numbers>

#include "doctest.h"
#include "stein_llt/dist_core.hpp"
#include "stein_llt/error.hpp"
#include "stein_llt/numeric.hpp"
#include "support/mp.hpp"

using namespace stein_llt;

namespace {
double rel_err(double got, double want) {
  return std::fabs(got - want) / std::max(std::fabs(want), 1e-300);
}
}  // namespace

TEST_CASE("poisson_log_pmf closed forms") {
  CHECK(poisson_log_pmf(1.0, 0) == -1.0);
  const double want = std::log(256.0 * std::exp(-4.0) / 24.0);
  CHECK(rel_err(poisson_log_pmf(4.0, 4), want) < 1e-14);
  CHECK(rel_err(std::exp(poisson_log_pmf(4.0, 4)), 0.19536681481316454) < 1e-14);
  CHECK_THROWS_AS(poisson_log_pmf(0.0, 1), Error);
  CHECK_THROWS_AS(poisson_log_pmf(std::nan(""), 1), Error);
  CHECK(poisson_log_pmf(3.0, -1) == kNegInf);
}

TEST_CASE("(2e)^{-1/2} constant") {
  CHECK(kInvSqrt2e == doctest::Approx(1.0 / std::sqrt(2.0 * std::numbers::e)).epsilon(1e-16));
}

TEST_CASE("poisson_log_pmf matches the arbitrary-precision oracle on a 1000-point grid") {
  double worst = 0.0;
  int count = 0;
  for (int li = 0; li < 25; ++li) {
    const double lambda = std::pow(10.0, -1.0 + 7.0 * li / 24.0) * (1.0 + 0.137 * (li % 3));
    if (lambda > 1e6) continue;
    for (int ki = 0; ki < 42; ++ki) {
      std::int64_t k;
      if (ki < 14) k = ki;
      else if (ki < 34) k = static_cast<std::int64_t>(std::max(0.0, lambda + (ki - 24) * 2.0 * std::sqrt(lambda)));
      else k = static_cast<std::int64_t>(std::pow(10.0, (ki - 34) * 1.0));
      if (k > 10000000) k = 10000000;
      const double want = oracle::poisson_log_pmf(lambda, k).d();
      const double got = poisson_log_pmf(lambda, k);
      if (want != 0.0) worst = std::max(worst, rel_err(got, want));
      ++count;
    }
  }
  MESSAGE("grid points: " << count << ", worst relative error: " << worst);
  CHECK(count >= 1000);
  CHECK(worst < 1e-12);
}

TEST_CASE("mode value obeys sup_k P(k) sqrt(lambda) <= (2e)^{-1/2}") {
  for (double lambda = 1.0; lambda <= 1e5; lambda *= 1.37) {
    const auto k = static_cast<std::int64_t>(std::floor(lambda));
    CHECK(std::exp(poisson_log_pmf(lambda, k)) * std::sqrt(lambda) <= kInvSqrt2e * (1 + 1e-12));
  }
}

TEST_CASE("tail ratios and cdf against the oracle") {
  for (double lambda : {0.3, 2.5, 17.0, 400.0, 12345.6}) {
    const double sd = std::sqrt(lambda);
    for (double z : {-8.0, -3.0, -1.0, -0.2, 0.0, 0.4, 1.0, 3.0, 9.0, 20.0}) {
      const auto m = static_cast<std::int64_t>(std::max(0.0, std::floor(lambda + z * sd)));
      const oracle::Mp pm = oracle::poisson_pmf(lambda, m);
      const oracle::Mp low = oracle::poisson_lower(lambda, m + 1);
      const oracle::Mp up = oracle::poisson_upper(lambda, m + 1);
      const double want_log = oracle::mp_log(low / pm).d();
      CHECK(std::fabs(log_lower_tail_ratio(lambda, m) - want_log) < 1e-12 * std::max(1.0, std::fabs(want_log)));
      CHECK(rel_err(std::exp(log_upper_tail_ratio(lambda, m)), (up / pm).d()) < 1e-12);
      CHECK(rel_err(poisson_cdf(lambda, m), low.d()) < 1e-12);
      CHECK(rel_err(poisson_sf(lambda, m), up.d()) < 1e-12);
    }
  }
}

TEST_CASE("make_tp") {
  auto tp = make_tp(5.0, 4.0);
  CHECK(tp.shift == 1);
  CHECK(tp.gamma == 0.0);
  CHECK(tp.lambda == 4.0);
  tp = make_tp(3.7, 2.5);
  CHECK(tp.shift == 1);
  CHECK(tp.gamma == doctest::Approx(0.2).epsilon(1e-14));
  CHECK(tp.lambda == doctest::Approx(2.7).epsilon(1e-14));
  tp = make_tp(0.3, 4.0);
  CHECK(tp.shift == -4);
  CHECK(tp.gamma == doctest::Approx(0.3).epsilon(1e-14));
  CHECK(tp.lambda == doctest::Approx(4.3).epsilon(1e-14));
  CHECK_THROWS_AS(make_tp(1.0, 0.0), Error);
  CHECK_THROWS_AS(make_tp(1.0, -2.0), Error);
  // 0.1 + 0.2 - 0.3 is not exactly 0 in binary; the snap keeps gamma at 0.
  tp = make_tp(0.1 + 0.2, 0.3);
  CHECK(tp.shift == 0);
  CHECK(tp.gamma == 0.0);
  CHECK(snapped_floor(2.9999999999999) == 3);
  CHECK(snapped_floor(-1e-13) == 0);
  CHECK(snapped_floor(2.5) == 2);
}

TEST_CASE("tp_pmf") {
  const auto tp = make_tp(5.0, 4.0);
  CHECK(tp_pmf(tp, 1) == doctest::Approx(std::exp(-4.0)).epsilon(1e-15));
  CHECK(tp_pmf(tp, 0) == 0.0);
  const auto lat = tp_to_lattice(tp, 1e-12);
  CHECK(lat.mean() == doctest::Approx(5.0).epsilon(1e-12));
}

TEST_CASE("tp_to_lattice") {
  auto lat = tp_to_lattice(make_tp(5.0, 4.0), 1e-12);
  CHECK(lat.total() <= 1.0 + 1e-15);
  CHECK(lat.total() >= 1.0 - 1e-12 - 1e-15);
  CHECK(lat.tail_tol <= 1e-12);
  CHECK_NOTHROW(lat.validate());
  lat = tp_to_lattice(make_tp(0.0, 1.0), 1e-12);
  CHECK(lat.offset == -1);
  CHECK_THROWS_AS(tp_to_lattice(make_tp(0.0, 1.0), 1e-3), Error);

  const double width = static_cast<double>(lat.size());
  const auto tp = make_tp(0.0, 1.0);
  CHECK(std::fabs(lat.variance() - tp.lambda) <= 10 * 1e-12 * width * width);
}

TEST_CASE("lattice mean and variance across sigma^2 >= 1") {
  for (double s2 : {1.0, 3.3, 10.0, 77.7, 1e3, 1e4, 1e5, 1e6}) {
    for (double mu : {-3.25, 0.0, 12.5, 1e4 + 0.75}) {
      const auto tp = make_tp(mu, s2);
      const auto lat = tp_to_lattice(tp, 1e-12);
      const double sigma = std::sqrt(s2);
      CHECK(std::fabs(lat.mean() - mu) <= 1e-9 * sigma);
      CHECK(lat.variance() >= s2 - 1e-9 * s2);
      CHECK(lat.variance() < s2 + 1.0 + 1e-9 * s2);
    }
  }
}

TEST_CASE("normal_density_at") {
  CHECK(normal_density_at(0.0, 1.0, 0) == doctest::Approx(1.0 / std::sqrt(2 * std::numbers::pi)).epsilon(1e-15));
  for (int n = 1; n < 6; ++n) CHECK(normal_density_at(0.0, 1.0, n) == normal_density_at(0.0, 1.0, -n));
  CHECK(normal_density_at(10.0, 4.0, 10) == doctest::Approx(1.0 / std::sqrt(8 * std::numbers::pi)).epsilon(1e-15));
}

TEST_CASE("normal deviation is O(1/sigma^2)") {
  // Regression fixture for the empirical constant, measured over
  // sigma^2 in {10, ..., 10^6}.
  constexpr double kFixture = 0.1;
  double worst = 0.0;
  for (double s2 = 10.0; s2 <= 1e6; s2 *= 10.0) {
    for (double mu : {s2, s2 + 0.5, 3.0 * s2 + 0.25}) {
      const auto dev = tp_normal_deviation(make_tp(mu, s2));
      CHECK(dev.value >= 0.0);
      CHECK(dev.tails_certified);
      worst = std::max(worst, dev.value * s2);
    }
  }
  MESSAGE("sup deviation * sigma^2 = " << worst);
  CHECK(worst <= kFixture);
}

TEST_CASE("normal deviation is translation invariant") {
  for (double s2 : {9.0, 250.0, 4e4}) {
    const auto a = tp_normal_deviation(make_tp(s2, s2));
    const auto b = tp_normal_deviation(make_tp(s2 + 17.0, s2));
    CHECK(a.value == doctest::Approx(b.value).epsilon(1e-12));
    CHECK(b.argmax - a.argmax == 17);
  }
}
