#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "stein_llt/dist_core.hpp"
#include "stein_llt/error.hpp"
#include "stein_llt/metrics.hpp"
#include "support/mp.hpp"

using namespace stein_llt;

namespace {

LatticePmf random_pmf(std::mt19937_64& rng, std::int64_t offset, std::size_t n) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  LatticePmf p{offset, 1, std::vector<double>(n), 0.0};
  double s = 0.0;
  for (auto& x : p.probs) {
    x = u(rng) < 0.2 ? 0.0 : u(rng);
    s += x;
  }
  if (s == 0.0) p.probs[0] = s = 1.0;
  for (auto& x : p.probs) x /= s;
  return p;
}

LatticePmf binomial_half(int k) {
  LatticePmf p{0, 1, std::vector<double>(k + 1), 0.0};
  for (int j = 0; j <= k; ++j) {
    p.probs[j] = std::exp(std::lgamma(k + 1.0) - std::lgamma(j + 1.0) - std::lgamma(k - j + 1.0) - k * std::log(2.0));
  }
  return p;
}

LatticePmf shifted(LatticePmf p, std::int64_t by) {
  p.offset += by;
  return p;
}

}  // namespace

TEST_CASE("d_tv and d_loc basics") {
  const auto d0 = point_mass(0);
  const auto d1 = point_mass(1);
  CHECK(d_tv(d0, d0).value == 0.0);
  CHECK(d_tv(d0, d1).value == 1.0);
  CHECK(d_loc(d0, d0).value == 0.0);
  CHECK(d_loc(d0, d1).value == 1.0);
  LatticePmf two{0, 2, {0.5, 0.5}, 0.0};
  CHECK_THROWS_AS(d_tv(d0, two), Error);
  CHECK_THROWS_AS(d_loc(d0, two), Error);
}

TEST_CASE("d_tv of Poisson(4) and TP(5,4) against the oracle") {
  const auto pois = tp_to_lattice(make_tp(4.0, 4.0), 1e-15);
  const auto tp = tp_to_lattice(make_tp(5.0, 4.0), 1e-15);
  oracle::Mp s(0.0);
  for (std::int64_t k = 0; k < 80; ++k) {
    const oracle::Mp a = oracle::poisson_pmf(4.0, k);
    const oracle::Mp b = k >= 1 ? oracle::poisson_pmf(4.0, k - 1) : oracle::Mp(0.0);
    s += oracle::mp_abs(a - b);
  }
  const double want = 0.5 * s.d();
  const auto got = d_tv(pois, tp);
  CHECK(std::fabs(got.value - want) <= 1e-14 + got.slack);
  CHECK(got.slack <= 1e-15);
}

TEST_CASE("metric properties on a random corpus") {
  std::mt19937_64 rng(7);
  for (int rep = 0; rep < 200; ++rep) {
    const auto p = random_pmf(rng, static_cast<std::int64_t>(rng() % 7) - 3, 1 + rng() % 12);
    const auto q = random_pmf(rng, static_cast<std::int64_t>(rng() % 7) - 3, 1 + rng() % 12);
    const auto r = random_pmf(rng, static_cast<std::int64_t>(rng() % 7) - 3, 1 + rng() % 12);
    const double pq = d_tv(p, q).value;
    CHECK(pq == doctest::Approx(d_tv(q, p).value).epsilon(1e-14));
    CHECK(pq <= d_tv(p, r).value + d_tv(r, q).value + 1e-12);
    CHECK(d_loc(p, q).value <= pq + 1e-15);
    CHECK(pq <= 1.0 + 1e-15);
    for (int l = 1; l <= 3; ++l) {
      const auto rep_l = smoothness(p, l);
      CHECK(rep_l.value <= std::ldexp(1.0, l) + 1e-12);
    }
    CHECK(smoothness(p, 1).value == doctest::Approx(2.0 * d_tv(p, shifted(p, 1)).value).epsilon(1e-13));
  }
}

TEST_CASE("smoothness of a point mass") {
  CHECK(smoothness(point_mass(0), 1).value == 2.0);
  CHECK(smoothness(point_mass(0), 2).value == 4.0);
  CHECK(smoothness(point_mass(0), 3).value == 8.0);
  CHECK_THROWS_AS(smoothness(point_mass(0), 4), Error);
  CHECK_THROWS_AS(smoothness(point_mass(0), 0), Error);
}

TEST_CASE("smoothness equals the sup over sign functions") {
  std::mt19937_64 rng(11);
  for (int rep = 0; rep < 20; ++rep) {
    const auto p = random_pmf(rng, static_cast<std::int64_t>(rng() % 5) - 2, 3 + rng() % 10);
    for (int l = 1; l <= 3; ++l) {
      const auto s = smoothness(p, l);
      std::vector<double> h(s.extremal_sign_pattern.begin(), s.extremal_sign_pattern.end());
      CHECK(smoothness_functional(p, l, s.first_point, h) == doctest::Approx(s.value).epsilon(1e-13));
      for (int trial = 0; trial < 10000 / 20; ++trial) {
        for (auto& x : h) x = (rng() & 1) ? 1.0 : -1.0;
        CHECK(std::fabs(smoothness_functional(p, l, s.first_point, h)) <= s.value + 1e-12);
      }
    }
  }
}

TEST_CASE("smoothness matches exhaustive enumeration on integer-weight pmfs") {
  // Weights are integers, so E Delta^l h(W) * total is an exact integer for
  // every h in {-1, 1}^m; a Gray-code walk visits all of them.
  std::mt19937_64 rng(3);
  for (int rep = 0; rep < 12; ++rep) {
    const int n = 2 + static_cast<int>(rng() % 7);
    std::vector<std::int64_t> w(n);
    std::int64_t total = 0;
    for (auto& x : w) total += (x = static_cast<std::int64_t>(rng() % 50));
    if (total == 0) total = w[0] = 1;
    LatticePmf p{0, 1, {}, 0.0};
    for (auto x : w) p.probs.push_back(static_cast<double>(x) / static_cast<double>(total));
    for (int l = 1; l <= 3; ++l) {
      const int m = n + l;
      static const int binom[4][4] = {{1, 0, 0, 0}, {1, 1, 0, 0}, {1, 2, 1, 0}, {1, 3, 3, 1}};
      // coef[j] = (-1)^l nabla^l w(j), exact.
      std::vector<std::int64_t> coef(m, 0);
      for (int j = 0; j < m; ++j) {
        for (int i = 0; i <= l; ++i) {
          if (j - i < 0 || j - i >= n) continue;
          coef[j] += ((l - i) % 2 == 0 ? 1 : -1) * binom[l][i] * w[j - i];
        }
      }
      std::int64_t cur = 0;
      for (auto c : coef) cur -= c;  // all h = -1
      std::int64_t best = std::abs(cur);
      std::vector<int> h(m, -1);
      for (std::uint64_t step = 1; step < (1ULL << m); ++step) {
        const int bit = __builtin_ctzll(step);
        cur += 2 * h[bit] * -coef[bit];
        h[bit] = -h[bit];
        best = std::max(best, std::abs(cur));
      }
      CHECK(smoothness(p, l).value ==
            doctest::Approx(static_cast<double>(best) / static_cast<double>(total)).epsilon(1e-14));
    }
  }
}

TEST_CASE("S_2 of Binomial(k, 1/2) is at most 10/k") {
  for (int k = 10; k <= 200; ++k) CHECK(smoothness(binomial_half(k), 2).value <= 10.0 / k);
}

TEST_CASE("S_l of translated Poisson scales like sigma^-l") {
  double c[4] = {0, 0, 0, 0};
  for (double sigma : {10.0, 31.6, 100.0, 316.0, 1000.0}) {
    const auto lat = tp_to_lattice(make_tp(sigma * sigma + 0.3, sigma * sigma), 1e-13);
    for (int l = 1; l <= 3; ++l) c[l] = std::max(c[l], smoothness(lat, l).value * std::pow(sigma, l));
  }
  MESSAGE("C(1)=" << c[1] << " C(2)=" << c[2] << " C(3)=" << c[3]);
  CHECK(c[1] < 1.0);
  CHECK(c[2] < 1.0);
  CHECK(c[3] < 2.0);
}

TEST_CASE("sup_pmf") {
  CHECK(sup_pmf(point_mass(0)).value == 1.0);
  LatticePmf u{0, 1, std::vector<double>(10, 0.1), 0.0};
  CHECK(sup_pmf(u).value == doctest::Approx(0.1));
  for (double s2 : {4.0, 50.0, 1e4}) {
    const auto lat = tp_to_lattice(make_tp(3.0, s2), 1e-12);
    const auto sp = sup_pmf(lat);
    CHECK(sp.value <= 0.42888194248035340 / std::sqrt(s2) + sp.slack);
  }
}

TEST_CASE("abs_central_moment") {
  std::mt19937_64 rng(5);
  const auto p = random_pmf(rng, -2, 9);
  CHECK(abs_central_moment(p, 0, 1.7) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(abs_central_moment(point_mass(5), 2, 5.0) == 0.0);
  LatticePmf bern{0, 1, {0.5, 0.5}, 0.0};
  CHECK(abs_central_moment(bern, 2, 0.5) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(abs_central_moment(bern, 12, 0.5) == doctest::Approx(std::pow(0.5, 12)).epsilon(1e-14));
  // Both code paths agree where they meet.
  const double m7 = abs_central_moment(p, 7, 0.3);
  double direct = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) direct += p.probs[i] * std::pow(std::fabs(p.value_at(i) - 0.3), 7);
  CHECK(m7 == doctest::Approx(direct).epsilon(1e-13));
  double direct9 = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) direct9 += p.probs[i] * std::pow(std::fabs(p.value_at(i) - 0.3), 9);
  CHECK(abs_central_moment(p, 9, 0.3) == doctest::Approx(direct9).epsilon(1e-13));
  CHECK_THROWS_AS(abs_central_moment(p, 17, 0.0), Error);
}

TEST_CASE("tail_profile") {
  const std::vector<double> t = {1.0, 1.5, 2.0, 3.0};
  const std::vector<double> zeros(100, 0.0);
  auto tp = tail_profile(zeros, 2.0, t, 1, 50);
  for (double v : tp.values) CHECK(v == 0.0);
  const std::vector<double> sig(100, 2.0);
  tp = tail_profile(sig, 2.0, t, 1, 50);
  CHECK(tp.values[0] == 1.0);
  CHECK(tp.values[1] == 0.0);

  std::mt19937_64 rng(9);
  std::exponential_distribution<double> ex(1.0);
  std::vector<double> s(20000);
  for (auto& x : s) x = 3.0 * ex(rng);
  tp = tail_profile(s, 3.0, t, 2, 400);
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double want = std::exp(-t[i]) * (t[i] + 1.0);
    CHECK(tp.ci_lo[i] <= want);
    CHECK(want <= tp.ci_hi[i]);
    if (i > 0) CHECK(tp.values[i] <= tp.values[i - 1]);
    CHECK(tp.values[i] <= tp.scaled_mean);
  }
  CHECK_THROWS_AS(tail_profile(std::vector<double>{}, 1.0, t), Error);
}
