// One pass/fail line per acceptance criterion; exit status 0 iff all pass.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "stein_llt/bounds.hpp"
#include "stein_llt/couplings.hpp"
#include "stein_llt/curie_weiss.hpp"
#include "stein_llt/dist_core.hpp"
#include "stein_llt/erdos_renyi.hpp"
#include "stein_llt/hoeffding.hpp"
#include "stein_llt/metrics.hpp"
#include "stein_llt/stein_solver.hpp"
#include "support/mp.hpp"

using namespace stein_llt;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

void note(Outcome& o, const std::string& s) {
  if (!o.detail.empty()) o.detail += "; ";
  o.detail += s;
}

void need(Outcome& o, bool ok, const std::string& what) {
  if (!ok) {
    o.pass = false;
    note(o, "FAILED " + what);
  }
}

std::string num(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

const std::vector<double> kLambdas = {1.0, 4.0, 16.0, 100.0, 900.0, 1e4};

std::vector<std::int64_t> a_grid(double lambda) {
  std::vector<std::int64_t> a = {0, static_cast<std::int64_t>(std::floor(lambda / 2)),
                                 static_cast<std::int64_t>(std::floor(lambda)),
                                 static_cast<std::int64_t>(std::floor(lambda + 3 * std::sqrt(lambda)))};
  std::sort(a.begin(), a.end());
  a.erase(std::unique(a.begin(), a.end()), a.end());
  return a;
}

std::int64_t k_top(double lambda) { return static_cast<std::int64_t>(std::floor(lambda + 12 * std::sqrt(lambda))); }

Outcome criterion1() {
  Outcome o;
  double worst = 0.0;
  for (double lambda : kLambdas) {
    for (auto a : a_grid(lambda)) worst = std::max(worst, residual_check(lambda, SteinTarget::point(a), k_top(lambda)));
  }
  need(o, worst <= 1e-10, "residual <= 1e-10");
  note(o, "max residual " + num(worst));
  return o;
}

Outcome criterion2() {
  Outcome o;
  long points = 0, failures = 0;
  double tightest = INFINITY;
  for (double lambda : kLambdas) {
    for (auto a : a_grid(lambda)) {
      for (std::int64_t k = 0; k <= k_top(lambda); ++k) {
        const double d = std::fabs(delta_g(lambda, a, k));
        const auto b = nonuniform_delta_bound(lambda, a, k);
        ++points;
        if (!dominated(d, b.case_split) || !dominated(d, b.simplified)) ++failures;
        if (d > 0.0) tightest = std::min(tightest, b.case_split / d);
      }
    }
  }
  need(o, failures == 0, "both bounds dominate |delta g|");
  note(o, std::to_string(points) + " points, " + std::to_string(failures) + " violations, min bound/|dg| " +
              num(tightest));
  return o;
}

Outcome criterion3() {
  Outcome o;
  std::mt19937_64 rng(3);
  double worst_g = 0.0, worst_dg = 0.0, worst_ga = 0.0;
  for (double lambda : kLambdas) {
    const std::int64_t top = k_top(lambda);
    const std::size_t fl = static_cast<std::size_t>(std::floor(lambda));
    for (std::size_t size : {std::size_t{1}, std::size_t{10}, fl}) {
      for (int rep = 0; rep < 3; ++rep) {
        std::vector<std::int64_t> all(static_cast<std::size_t>(top) + 1);
        std::iota(all.begin(), all.end(), 0);
        std::shuffle(all.begin(), all.end(), rng);
        std::vector<std::int64_t> pts(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(std::min(size, all.size())));
        const SteinSolution sol(lambda, SteinTarget::set(pts));
        double sup_g = 0.0, sup_dg = 0.0, prev = sol.g(0);
        for (std::int64_t k = 0; k <= top + 1; ++k) {
          const double next = sol.g(k + 1);
          sup_g = std::max(sup_g, std::fabs(prev));
          sup_dg = std::max(sup_dg, std::fabs(next - prev));
          prev = next;
        }
        worst_g = std::max(worst_g, sup_g * std::sqrt(lambda));
        worst_dg = std::max(worst_dg, sup_dg * lambda / -std::expm1(-lambda));
      }
    }
    for (auto a : a_grid(lambda)) {
      for (std::int64_t k = 0; k <= top + 1; ++k) {
        worst_ga = std::max(worst_ga, std::fabs(g_singleton(lambda, a, k)) * lambda);
      }
    }
  }
  need(o, dominated(worst_g, 1.0), "||g_A|| <= lambda^-1/2");
  need(o, dominated(worst_dg, 1.0), "||Delta g_A|| <= (1-e^-lambda)/lambda");
  need(o, dominated(worst_ga, 1.0), "||g_a|| <= 1/lambda");
  note(o, "max ratios to the bounds " + num(worst_g) + ", " + num(worst_dg) + ", " + num(worst_ga));
  return o;
}

Outcome criterion4(const nlohmann::json& fixtures) {
  Outcome o;
  std::vector<double> dev;
  for (double s2 = 1e2; s2 <= 1e6; s2 *= 10.0) dev.push_back(tp_normal_deviation(make_tp(s2 + 0.3, s2)).value * s2);
  const auto [dlo, dhi] = std::minmax_element(dev.begin(), dev.end());
  need(o, *dhi < 3.0 * *dlo, "deviation * sigma^2 within a factor 3");
  const double fix_dev = fixtures.at("normal_deviation_sigma2").get<double>();
  need(o, *dhi <= fix_dev, "deviation * sigma^2 <= published constant");
  note(o, "deviation*sigma^2 in [" + num(*dlo) + ", " + num(*dhi) + "] (fixture " + num(fix_dev) + ")");
  const auto fix_s = fixtures.at("tp_smoothness_sigma_pow").get<std::vector<double>>();
  for (int l = 1; l <= 3; ++l) {
    std::vector<double> v;
    for (double sigma : {10.0, 20.0, 50.0, 100.0, 200.0, 500.0, 1000.0}) {
      const auto lat = tp_to_lattice(make_tp(sigma * sigma + 0.3, sigma * sigma), 1e-13);
      v.push_back(smoothness(lat, l).value * std::pow(sigma, l));
    }
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    need(o, *hi < 3.0 * *lo, "S_" + std::to_string(l) + " sigma^" + std::to_string(l) + " within a factor 3");
    need(o, *hi <= fix_s[l - 1], "S_" + std::to_string(l) + " constant <= published constant");
    note(o, "S_" + std::to_string(l) + "*sigma^" + std::to_string(l) + " in [" + num(*lo) + ", " + num(*hi) +
                "] (fixture " + num(fix_s[l - 1]) + ")");
  }
  return o;
}

// Exhaustive sup over h in {-1, 1}^m of |sum_j h_j c_j| by a Gray-code walk.
long double exhaustive_sup(const std::vector<double>& c) {
  const int m = static_cast<int>(c.size());
  std::vector<int> h(m, -1);
  long double cur = 0.0L;
  for (double x : c) cur -= x;
  long double best = std::fabs(cur);
  for (std::uint64_t step = 1; step < (1ULL << m); ++step) {
    const int bit = __builtin_ctzll(step);
    cur += 2.0L * -h[bit] * c[bit];
    h[bit] = -h[bit];
    best = std::max(best, std::fabs(cur));
  }
  return best;
}

Outcome criterion5() {
  Outcome o;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int exhaustive = 0, attained = 0;
  double worst = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    const std::size_t n = 1 + rng() % 30;
    LatticePmf p{static_cast<std::int64_t>(rng() % 11) - 5, 1, std::vector<double>(n), 0.0};
    double s = 0.0;
    for (auto& x : p.probs) s += (x = u(rng) < 0.15 ? 0.0 : u(rng));
    if (s == 0.0) s = p.probs[0] = 1.0;
    for (auto& x : p.probs) x /= s;
    for (int l = 1; l <= 3; ++l) {
      const auto sm = smoothness(p, l);
      // (-1)^l nabla^l p on the padded support.
      std::vector<double> c(n + static_cast<std::size_t>(l), 0.0);
      static const int binom[4][4] = {{1, 0, 0, 0}, {1, 1, 0, 0}, {1, 2, 1, 0}, {1, 3, 3, 1}};
      for (std::size_t j = 0; j < c.size(); ++j) {
        for (int i = 0; i <= l; ++i) {
          if (j < static_cast<std::size_t>(i) || j - i >= n) continue;
          c[j] += ((l - i) % 2 == 0 ? 1 : -1) * binom[l][i] * p.probs[j - i];
        }
      }
      double ref = 0.0;
      if (n <= 20) {
        ref = static_cast<double>(exhaustive_sup(c));
        ++exhaustive;
      } else {
        std::vector<double> h(sm.extremal_sign_pattern.begin(), sm.extremal_sign_pattern.end());
        ref = std::fabs(smoothness_functional(p, l, sm.first_point, h));
        ++attained;
      }
      worst = std::max(worst, std::fabs(ref - sm.value));
    }
  }
  need(o, worst <= 1e-12, "S_l equals the sup over sign patterns to 1e-12");
  note(o, std::to_string(exhaustive) + " exhaustive, " + std::to_string(attained) + " attainment checks, max gap " +
              num(worst));
  return o;
}

struct CwCase {
  double beta, h;
};
const std::vector<CwCase> kCwCases = {{0.5, 0.0}, {0.5, 0.5}, {1.5, 0.3}};
const std::vector<std::int64_t> kCwGrid = {100, 200, 400, 800, 1600, 3200};

Outcome criterion6() {
  Outcome o;
  for (const auto& c : kCwCases) {
    const auto s = rate_fit(cw_rate_experiment(c.beta, c.h, kCwGrid, CWTarget::Limit));
    std::vector<double> scaled;
    for (std::size_t i = s.records.size() - 4; i < s.records.size(); ++i) {
      scaled.push_back(s.records[i].d_loc.value * static_cast<double>(s.records[i].n));
    }
    const auto [lo, hi] = std::minmax_element(scaled.begin(), scaled.end());
    const std::string tag = "(" + num(c.beta) + "," + num(c.h) + ")";
    need(o, s.loc_fit_n.fitted && s.loc_fit_n.slope >= -1.10 && s.loc_fit_n.slope <= -0.90, tag + " loc slope");
    need(o, s.tv_fit_n.fitted && s.tv_fit_n.slope >= -0.60 && s.tv_fit_n.slope <= -0.40, tag + " tv slope");
    need(o, *hi < 2.0 * *lo, tag + " d_loc*n factor");
    note(o, tag + " loc " + num(s.loc_fit_n.slope) + " tv " + num(s.tv_fit_n.slope) + " d_loc*n max/min " +
                num(*hi / *lo));
  }
  return o;
}

Outcome criterion7() {
  Outcome o;
  double min_tv = INFINITY, min_loc = INFINITY;
  int points = 0;
  for (const auto& c : kCwCases) {
    const auto s = cw_rate_experiment(c.beta, c.h, kCwGrid, CWTarget::MomentMatched);
    for (const auto& r : s.records) {
      ++points;
      need(o, r.d_tv.value <= r.tv_bound + r.d_tv.slack, "tv bound at n=" + std::to_string(r.n));
      need(o, r.d_loc.value <= r.loc_bound + r.d_loc.slack, "loc bound at n=" + std::to_string(r.n));
      min_tv = std::min(min_tv, r.tv_bound / r.d_tv.value);
      min_loc = std::min(min_loc, r.loc_bound / r.d_loc.value);
    }
  }
  note(o, std::to_string(points) + " points, min bound/distance tv " + num(min_tv) + " loc " + num(min_loc));
  return o;
}

std::vector<double> er_brute_force(int n, double p) {
  std::vector<std::pair<int, int>> pairs;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
  }
  const int e = static_cast<int>(pairs.size());
  std::vector<std::vector<long>> count(n + 1, std::vector<long>(e + 1, 0));
  for (unsigned mask = 0; mask < (1u << e); ++mask) {
    std::vector<int> deg(n, 0);
    for (int b = 0; b < e; ++b) {
      if (mask >> b & 1u) {
        ++deg[pairs[b].first];
        ++deg[pairs[b].second];
      }
    }
    int w = 0;
    for (int d : deg) w += d == 0;
    ++count[w][__builtin_popcount(mask)];
  }
  const oracle::Mp pm(p), q = oracle::Mp(1.0) - pm;
  std::vector<double> out(n + 1, 0.0);
  for (int w = 0; w <= n; ++w) {
    oracle::Mp total(0.0);
    for (int m = 0; m <= e; ++m) {
      oracle::Mp a, b;
      mpfr_pow_ui(a.get(), pm.get(), m, MPFR_RNDN);
      mpfr_pow_ui(b.get(), q.get(), e - m, MPFR_RNDN);
      total += oracle::Mp(static_cast<double>(count[w][m])) * a * b;
    }
    out[w] = total.d();
  }
  return out;
}

Outcome criterion8() {
  Outcome o;
  for (double lambda : {1.0, 2.0}) {
    const auto s = rate_fit(er_rate_experiment(lambda, {50, 100, 200, 400, 800}, EstimationConfig{}));
    std::vector<double> scaled;
    double max_err = 0.0;
    bool dominated_all = true;
    for (std::size_t i = 0; i < s.records.size(); ++i) {
      const auto& r = s.records[i];
      max_err = std::max(max_err, r.extras.at("max_entry_error"));
      dominated_all = dominated_all && r.d_tv.value <= r.tv_bound && r.d_loc.value <= r.loc_bound;
      if (i + 4 >= s.records.size()) scaled.push_back(r.d_loc.value * r.sigma * r.sigma / std::sqrt(std::log(r.sigma)));
    }
    const auto [lo, hi] = std::minmax_element(scaled.begin(), scaled.end());
    const std::string tag = "lambda=" + num(lambda);
    need(o, *hi <= 2.5 * *lo, tag + " d_loc sigma^2/sqrt(log sigma) bounded");
    need(o, s.loc_fit_n.fitted && s.loc_fit_n.slope >= -1.20 && s.loc_fit_n.slope <= -0.80, tag + " loc slope");
    need(o, max_err <= 1e-14, tag + " certified entries");
    note(o, tag + " loc slope " + num(s.loc_fit_n.slope) + " ratio max/min " + num(*hi / *lo) +
                " bounds dominate " + (dominated_all ? "yes" : "no"));
  }
  double worst = 0.0;
  bool certified = true;
  for (int n = 1; n <= 6; ++n) {
    for (int i = 1; i <= 9; ++i) {
      const double p = i / 10.0;
      const auto e = exact_isolated_pmf(n, p);
      const auto bf = er_brute_force(n, p);
      for (int k = 0; k <= n; ++k) {
        const double gap = std::fabs(e.pmf.probs[k] - bf[k]);
        worst = std::max(worst, gap);
        certified = certified && gap <= e.entry_error[k] + 1e-17;
      }
    }
  }
  need(o, certified, "inclusion-exclusion equals enumeration within the certified error for n <= 6");
  note(o, "n<=6 max gap to enumeration " + num(worst));
  return o;
}

HoeffdingMcConfig criterion9_config() {
  HoeffdingMcConfig cfg;
  cfg.seed = 1;
  cfg.sample_multiplier = 100.0;
  return cfg;
}

const std::vector<std::int64_t> kHfGrid = {50, 100, 200};

RateSeries criterion9_series() {
  RateFitConfig fit;
  fit.min_records = 3;
  fit.min_spread = 4.0;
  return rate_fit(hoeffding_rate_experiment(MatrixFamily{}, kHfGrid, criterion9_config()), fit);
}

Outcome criterion9() {
  Outcome o;
  const auto s = criterion9_series();
  need(o, s.tv_fit_n.fitted && s.tv_fit_n.slope >= -0.65 && s.tv_fit_n.slope <= -0.35, "tv slope");
  note(o, "tv slope " + num(s.tv_fit_n.slope) + " ci [" + num(s.tv_fit_n.ci_lo) + ", " + num(s.tv_fit_n.ci_hi) + "]");
  // C from least squares of d_loc sigma^2 on sqrt(log sigma) through the
  // origin; the lower confidence limit of every point must sit below C sqrt(log sigma).
  double sxy = 0.0, sxx = 0.0;
  for (const auto& r : s.records) {
    const double x = std::sqrt(std::log(r.sigma)), y = r.d_loc.value * r.sigma * r.sigma;
    sxy += x * y;
    sxx += x * x;
  }
  const double c = sxy / sxx;
  for (const auto& r : s.records) {
    const double lower = (r.d_loc.value - r.d_loc.slack) * r.sigma * r.sigma;
    need(o, lower <= c * std::sqrt(std::log(r.sigma)), "d_loc sigma^2 CI at n=" + std::to_string(r.n));
  }
  note(o, "fitted C " + num(c));
  // Enumeration cross-check at n = 8.
  const auto inst = build_instance(generate_matrix(MatrixFamily{}, 8));
  const auto exact = brute_force_pmf(inst);
  const std::uint64_t draws = 200000;
  const auto emp = hoeffding_empirical_pmf(inst, draws, 8);
  double fe = 0.0, fx = 0.0, ks = 0.0;
  const std::int64_t lo = std::min(exact.offset, emp.offset);
  const std::int64_t hi = std::max(exact.last_value(), emp.last_value());
  for (std::int64_t k = lo; k <= hi; ++k) {
    fe += emp.at(k);
    fx += exact.at(k);
    ks = std::max(ks, std::fabs(fe - fx));
  }
  const double band = std::sqrt(std::log(2.0 / 1e-3) / (2.0 * static_cast<double>(draws)));
  need(o, ks <= band, "n=8 Monte Carlo law within the DKW band of enumeration");
  note(o, "n=8 sup cdf gap " + num(ks) + " (band " + num(band) + ")");
  return o;
}

Outcome criterion10() {
  Outcome o;
  const std::uint64_t n_samples = 1000000;
  auto run = [&](const std::string& name, const CouplingSpec& spec, std::uint64_t seed) {
    const auto rep = verify_identity(spec, n_samples, seed);
    need(o, rep.passed, name + " identity");
    note(o, name + " gap/se " + num(rep.gap_se > 0 ? rep.gap / rep.gap_se : 0.0, 3));
    return rep;
  };
  run("cw", cw_coupling(cw_instance(400, 0.5, 0.5)), 1);
  const std::int64_t n_er = 100;
  const auto er = run("er", er_coupling(n_er, 2.0 / n_er), 2);
  need(o, std::fabs(er.e_gd - er.sigma2) <= 4.0 * er.e_gd_se, "er E[GD] = sigma^2");
  run("hoeffding", hoeffding_coupling(build_instance(generate_matrix(MatrixFamily{}, 50))), 3);

  const int nb = 40;
  auto bit_pair = [nb](Rng& rng) {
    std::int64_t w = 0;
    for (int i = 0; i < nb; ++i) w += rng.bernoulli(0.5);
    const bool old_bit = rng.below(nb) < static_cast<std::uint64_t>(w);
    const bool new_bit = rng.bernoulli(0.5);
    return PairDraw{w, w - old_bit + new_bit, {}};
  };
  run("exchangeable", build_exchangeable_pair(bit_pair, 1.0 / nb, {}, nb / 2.0, nb / 4.0), 4);
  run("one-sided", build_one_sided_pair(bit_pair, 1.0 / nb, {}, nb / 2.0, nb / 4.0), 5);
  run("local", build_local_dependence(
                   [nb](Rng& rng) {
                     std::vector<std::int64_t> x(nb);
                     for (auto& v : x) v = rng.bernoulli(0.5);
                     return x;
                   },
                   std::vector<double>(nb, 0.5),
                   [nb] {
                     std::vector<std::vector<std::size_t>> g(nb);
                     for (std::size_t i = 0; i < g.size(); ++i) g[i] = {i};
                     return g;
                   }(),
                   nb / 4.0),
      6);
  run("size-bias", build_size_bias(
                       [nb](Rng& rng) {
                         std::int64_t w = 0;
                         std::vector<int> x(nb);
                         for (auto& v : x) w += (v = rng.bernoulli(0.3));
                         const auto i = rng.below(nb);
                         return PairDraw{w, w - x[i] + 1, {}};
                       },
                       nb * 0.3, nb * 0.3 * 0.7),
      7);

  // E[GD | rho] from the closed form against the average over (I, J), all
  // permutations, n <= 5; the permutation average must equal sigma^2.
  double worst = 0.0, worst_mean = 0.0;
  for (std::int64_t n = 2; n <= 5; ++n) {
    Rng rng(40 + n);
    IntMatrix m;
    m.n = n;
    for (std::int64_t k = 0; k < n * n; ++k) m.a.push_back(static_cast<std::int64_t>(rng.below(8)) - 3);
    const auto inst = build_instance(m);
    const auto& a = inst.matrix;
    std::vector<std::int32_t> rho(n);
    std::iota(rho.begin(), rho.end(), 0);
    double sum = 0.0;
    int perms = 0;
    do {
      double direct = 0.0;
      for (std::int32_t i = 0; i < n; ++i) {
        for (std::int32_t j = 0; j < n; ++j) {
          const double g = static_cast<double>(n) * static_cast<double>(a(i, rho[j]) - a(i, rho[i]));
          const double d = i == j ? -a(i, rho[i]) : -a(i, rho[i]) - a(j, rho[j]);
          direct += g * d;
        }
      }
      direct /= static_cast<double>(n * n);
      const double analytic = hoeffding_conditional_gd(inst, rho);
      worst = std::max(worst, std::fabs(analytic - direct) / std::max(1.0, std::fabs(direct)));
      sum += analytic;
      ++perms;
    } while (std::next_permutation(rho.begin(), rho.end()));
    worst_mean = std::max(worst_mean, std::fabs(sum / perms - inst.sigma2) / inst.sigma2);
  }
  need(o, worst <= 1e-12 && worst_mean <= 1e-12, "hoeffding enumeration identity");
  note(o, "enumeration rel gaps " + num(worst) + ", " + num(worst_mean));
  return o;
}

Outcome criterion11() {
  Outcome o;
  const std::int64_t n = 200;
  const double p = 2.0 / static_cast<double>(n);
  const std::vector<double> ts = {0.0, 1.0, 2.0, 5.0, 10.0, 20.0, 3.0 * std::sqrt(200.0)};
  for (int d : {0, 1}) {
    const auto rep = degree_count_tail_check(n, p, d, ts, 100000, 11 + d);
    bool below = true;
    for (const auto& r : rep.rows) below = below && r.below;
    need(o, below, "degree-" + std::to_string(d) + " tails");
  }
  note(o, "degree-count tails below the bound at n=200, d in {0, 1}");
  const auto inst = build_instance(generate_matrix(MatrixFamily{}, 100));
  const auto tails = hoeffding_t_tails(inst, {0.0, 0.25, 0.5, 0.75, 1.0, 1.5}, 100000, 11);
  need(o, tails.passed, "T tail profiles monotone with negative log slope");
  note(o, "T log slopes " + num(tails.log_slope[0]) + ", " + num(tails.log_slope[1]) + ", " +
              num(tails.log_slope[2]));
  return o;
}

Outcome criterion12() {
  Outcome o;
  const std::vector<std::string> comments = {"seed: 1", "workers: 1"};
  const auto a = series_to_csv(criterion9_series(), comments);
  const auto b = series_to_csv(criterion9_series(), comments);
  need(o, a == b, "byte-identical CSVs");
  note(o, std::to_string(a.size()) + " bytes, identical " + (a == b ? "yes" : "no"));
  return o;
}

nlohmann::json load_fixtures() {
  std::ifstream in(STEIN_LLT_FIXTURES);
  return nlohmann::json::parse(in);
}

}  // namespace

int main() {
  const auto fixtures = load_fixtures();
  struct Criterion {
    int id;
    double limit_s;  // 0: no runtime limit
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, 10.0, criterion1},
      {2, 30.0, criterion2},
      {3, 0.0, criterion3},
      {4, 0.0, [&] { return criterion4(fixtures); }},
      {5, 0.0, criterion5},
      {6, 120.0, criterion6},
      {7, 0.0, criterion7},
      {8, 300.0, criterion8},
      {9, 600.0, criterion9},
      {10, 0.0, criterion10},
      {11, 0.0, criterion11},
      {12, 0.0, criterion12},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      note(o, std::string("error: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.limit_s > 0.0 && secs > c.limit_s) {
      o.pass = false;
      note(o, "runtime above " + num(c.limit_s) + " s");
    }
    failed += o.pass ? 0 : 1;
    std::printf("criterion %2d: %s  (%.1f s)  %s\n", c.id, o.pass ? "PASS" : "FAIL", secs, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
