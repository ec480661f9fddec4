#include "stein_llt/erdos_renyi.hpp"

#include <mpfr.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "stein_llt/error.hpp"
#include "stein_llt/metrics.hpp"

namespace stein_llt {

namespace {

// RAII wrapper for an mpfr_t.
class Mp {
 public:
  explicit Mp(long prec) { mpfr_init2(v_, prec); mpfr_set_ui(v_, 0, MPFR_RNDN); }
  ~Mp() { mpfr_clear(v_); }
  Mp(const Mp&) = delete;
  Mp& operator=(const Mp&) = delete;
  Mp(Mp&& o) noexcept : v_{} {
    mpfr_init2(v_, mpfr_get_prec(o.v_));
    mpfr_swap(v_, o.v_);
  }
  mpfr_ptr get() { return v_; }
  mpfr_srcptr get() const { return v_; }

 private:
  mpfr_t v_;
};

void check_p(double p) {
  require(std::isfinite(p) && p > 0.0 && p < 1.0, ErrorKind::Domain, "edge probability must lie in (0, 1)");
}

// Calls f(i, j), i < j, for every edge of G(n, p), skipping absent pairs geometrically.
template <class F>
void for_each_edge(std::int64_t n, double p, Rng& rng, F&& f) {
  if (n < 2 || p <= 0.0) return;
  const std::uint64_t total = static_cast<std::uint64_t>(n) * static_cast<std::uint64_t>(n - 1) / 2;
  std::uint64_t pos = 0;       // linear index of the current pair
  std::int64_t i = 0, j = 0;   // row i, column i + 1 + j
  auto advance = [&](std::uint64_t s) {
    if (s >= total - pos) {
      pos = total;
      return false;
    }
    pos += s;
    std::uint64_t off = static_cast<std::uint64_t>(j) + s;
    while (off >= static_cast<std::uint64_t>(n - 1 - i)) {
      off -= static_cast<std::uint64_t>(n - 1 - i);
      ++i;
    }
    j = static_cast<std::int64_t>(off);
    return true;
  };
  if (!advance(rng.geometric(p))) return;
  while (true) {
    f(i, i + 1 + j);
    const std::uint64_t s = rng.geometric(p);
    if (s == UINT64_MAX || !advance(s + 1)) return;
  }
}

struct Graph {
  std::vector<std::int32_t> deg;
  std::vector<std::pair<std::int32_t, std::int32_t>> edges;
};

void draw_graph(std::int64_t n, double p, Rng& rng, Graph& g) {
  g.deg.assign(static_cast<std::size_t>(n), 0);
  g.edges.clear();
  for_each_edge(n, p, rng, [&](std::int64_t a, std::int64_t b) {
    ++g.deg[static_cast<std::size_t>(a)];
    ++g.deg[static_cast<std::size_t>(b)];
    g.edges.emplace_back(static_cast<std::int32_t>(a), static_cast<std::int32_t>(b));
  });
}

double pow_q(double p, double e) { return std::exp(e * std::log1p(-p)); }

}  // namespace

ERInstance er_instance(std::int64_t n, double p) {
  require(n >= 1, ErrorKind::Domain, "n must be positive");
  check_p(p);
  ERInstance inst;
  inst.n = n;
  inst.p = p;
  const double nd = static_cast<double>(n);
  inst.lambda_edge = nd * p;
  const double q1 = pow_q(p, nd - 1.0);
  inst.mu = nd * q1;
  inst.sigma2 = n == 1 ? 0.0 : nd * q1 * (1.0 + (nd * p - 1.0) * pow_q(p, nd - 2.0));
  return inst;
}

double er_mean_degree_count(std::int64_t n, double p, int d) {
  require(n >= 1, ErrorKind::Domain, "n must be positive");
  check_p(p);
  require(d >= 0 && d <= n - 1, ErrorKind::Domain, "degree must lie in [0, n-1]");
  const double nd = static_cast<double>(n);
  const double lc = std::lgamma(nd) - std::lgamma(d + 1.0) - std::lgamma(nd - d);
  return nd * std::exp(lc + d * std::log(p) + (nd - 1.0 - d) * std::log1p(-p));
}

ExactIsolatedPmf exact_isolated_pmf(std::int64_t n, double p, long precision_bits) {
  require(n >= 1 && n <= 800, ErrorKind::Domain, "exact isolated-vertex pmf needs 1 <= n <= 800");
  check_p(p);
  const long need = 64 + 2 * static_cast<long>(n);
  if (precision_bits == 0) precision_bits = need;
  require(precision_bits >= need, ErrorKind::Precision,
          "inclusion-exclusion at n = " + std::to_string(n) + " needs precision_bits >= " +
              std::to_string(need) + "; retry with more bits");
  require(precision_bits <= MPFR_PREC_MAX, ErrorKind::Domain, "precision_bits too large");
  const long prec = precision_bits;

  // q^{m(t)} for t = 0..n; q = 1 - p is rounded at most once.
  Mp q(prec);
  {
    Mp pm(prec);
    mpfr_set_d(pm.get(), p, MPFR_RNDN);
    mpfr_ui_sub(q.get(), 1, pm.get(), MPFR_RNDN);
  }
  std::vector<Mp> qpow;
  qpow.reserve(static_cast<std::size_t>(n) + 1);
  double max_m = 0.0;
  for (std::int64_t t = 0; t <= n; ++t) {
    const unsigned long m = static_cast<unsigned long>(t * (n - t) + t * (t - 1) / 2);
    max_m = std::max(max_m, static_cast<double>(m));
    qpow.emplace_back(prec);
    mpfr_pow_ui(qpow.back().get(), q.get(), m, MPFR_RNDN);
  }
  // Each term carries relative error at most (m + 3) u from q, the power and
  // two products; n + 1 additions add at most u times the absolute sum each.
  const double error_factor = 1.01 * (max_m + 4.0 + static_cast<double>(n) + 2.0);

  ExactIsolatedPmf out;
  out.precision_bits = prec;
  out.pmf.offset = 0;
  out.pmf.step = 1;
  out.pmf.probs.assign(static_cast<std::size_t>(n) + 1, 0.0);
  out.entry_error.assign(static_cast<std::size_t>(n) + 1, 0.0);

  Mp binom_nk(prec), binom(prec), term(prec), sum(prec), abs_sum(prec), err(prec);
  mpfr_set_ui(binom_nk.get(), 1, MPFR_RNDN);
  double tail = 0.0;
  for (std::int64_t k = 0; k <= n; ++k) {
    if (k > 0) {
      mpfr_mul_ui(binom_nk.get(), binom_nk.get(), static_cast<unsigned long>(n - k + 1), MPFR_RNDN);
      mpfr_div_ui(binom_nk.get(), binom_nk.get(), static_cast<unsigned long>(k), MPFR_RNDN);
    }
    mpfr_set_ui(binom.get(), 1, MPFR_RNDN);
    mpfr_set_ui(sum.get(), 0, MPFR_RNDN);
    mpfr_set_ui(abs_sum.get(), 0, MPFR_RNDN);
    for (std::int64_t j = 0; j <= n - k; ++j) {
      if (j > 0) {
        mpfr_mul_ui(binom.get(), binom.get(), static_cast<unsigned long>(n - k - j + 1), MPFR_RNDN);
        mpfr_div_ui(binom.get(), binom.get(), static_cast<unsigned long>(j), MPFR_RNDN);
      }
      mpfr_mul(term.get(), binom.get(), qpow[static_cast<std::size_t>(k + j)].get(), MPFR_RNDN);
      if (j % 2 == 0) {
        mpfr_add(sum.get(), sum.get(), term.get(), MPFR_RNDN);
      } else {
        mpfr_sub(sum.get(), sum.get(), term.get(), MPFR_RNDN);
      }
      mpfr_add(abs_sum.get(), abs_sum.get(), term.get(), MPFR_RNDU);
    }
    mpfr_mul(sum.get(), sum.get(), binom_nk.get(), MPFR_RNDN);
    mpfr_mul(abs_sum.get(), abs_sum.get(), binom_nk.get(), MPFR_RNDU);
    // err = error_factor * 2^-prec * sum |terms|, rounded up.
    mpfr_mul_d(err.get(), abs_sum.get(), error_factor, MPFR_RNDU);
    mpfr_mul_2si(err.get(), err.get(), -prec, MPFR_RNDU);
    const double working = mpfr_get_d(err.get(), MPFR_RNDU);
    double v = mpfr_get_d(sum.get(), MPFR_RNDN);
    // Rounding to double adds at most half an ulp; clamping to 0 only moves toward the exact value.
    double e = working + std::ldexp(std::fabs(v), -53) + std::numeric_limits<double>::denorm_min();
    if (v < 0.0) v = 0.0;
    require(std::isfinite(e) && e <= 1e-14, ErrorKind::Precision,
            "certified error " + std::to_string(e) + " at k = " + std::to_string(k) +
                " exceeds 1e-14; retry with more precision_bits");
    out.pmf.probs[static_cast<std::size_t>(k)] = v;
    out.entry_error[static_cast<std::size_t>(k)] = e;
    out.max_entry_error = std::max(out.max_entry_error, e);
    tail += e;
  }
  out.pmf.tail_tol = tail;
  return out;
}

IsolatedDraw sample_isolated(std::int64_t n, double p, Rng& rng) {
  require(n >= 1, ErrorKind::Domain, "n must be positive");
  require(p >= 0.0 && p <= 1.0, ErrorKind::Domain, "edge probability must lie in [0, 1]");
  std::vector<std::int32_t> deg(static_cast<std::size_t>(n), 0);
  for_each_edge(n, p, rng, [&](std::int64_t a, std::int64_t b) {
    ++deg[static_cast<std::size_t>(a)];
    ++deg[static_cast<std::size_t>(b)];
  });
  IsolatedDraw d;
  for (auto x : deg) {
    d.w += x == 0;
    d.w1 += x == 1;
  }
  return d;
}

CouplingSpec er_coupling(std::int64_t n, double p) {
  require(n >= 1, ErrorKind::Domain, "n must be positive");
  require(p > 0.0 && p < 1.0, ErrorKind::Refused, "edge probability outside (0, 1) makes W constant");
  const auto inst = er_instance(n, p);
  require(inst.sigma2 > 0.0 && inst.mu > 0.0, ErrorKind::Refused, "degenerate isolated-vertex law refused");
  const double mu = inst.mu;
  CouplingSpec spec;
  spec.name = "erdos_renyi size bias";
  spec.mu = mu;
  spec.sigma2 = inst.sigma2;
  spec.exact_e_gd = inst.sigma2;
  spec.sampler = [n, p, mu](Rng& rng) {
    thread_local Graph g;
    thread_local std::vector<std::uint8_t> mark;  // 1: I or N1, 2: N2
    draw_graph(n, p, rng, g);
    const auto i = static_cast<std::int32_t>(rng.below(static_cast<std::uint64_t>(n)));
    ERAux aux;
    for (auto x : g.deg) {
      aux.w += x == 0;
      aux.w1 += x == 1;
    }
    mark.assign(static_cast<std::size_t>(n), 0);
    mark[static_cast<std::size_t>(i)] = 1;
    std::int64_t leaves = 0;
    for (const auto& [a, b] : g.edges) {
      if (a != i && b != i) continue;
      const auto other = a == i ? b : a;
      mark[static_cast<std::size_t>(other)] = 1;
      ++aux.n1;
      leaves += g.deg[static_cast<std::size_t>(other)] == 1;
    }
    for (const auto& [a, b] : g.edges) {
      const auto ma = mark[static_cast<std::size_t>(a)], mb = mark[static_cast<std::size_t>(b)];
      if (ma == 1 && mb == 0) {
        mark[static_cast<std::size_t>(b)] = 2;
        ++aux.n2;
      } else if (mb == 1 && ma == 0) {
        mark[static_cast<std::size_t>(a)] = 2;
        ++aux.n2;
      }
    }
    const std::int64_t ws = aux.w + (aux.n1 > 0 ? 1 : 0) + leaves;
    return make_sample(aux.w, ws, mu, 0.0, aux);
  };
  spec.conditional_gd = [n, mu](const CouplingSample& s) {
    const auto& a = std::any_cast<const ERAux&>(s.aux);
    return mu / static_cast<double>(n) * static_cast<double>(a.w1 + n - a.w);
  };
  // Given every edge touching {I} u N1, W is 1{N1 empty} plus the isolated
  // vertices outside N2 in a fresh G(n - 1 - |N1|, p).
  spec.conditional_resampler = [n, p](const CouplingSample& s, Rng& rng) {
    const auto& a = std::any_cast<const ERAux&>(s.aux);
    const std::int64_t m = n - 1 - a.n1;
    thread_local std::vector<std::uint8_t> touched;
    touched.assign(static_cast<std::size_t>(std::max<std::int64_t>(m, 0)), 0);
    for_each_edge(m, p, rng, [&](std::int64_t u, std::int64_t v) {
      touched[static_cast<std::size_t>(u)] = 1;
      touched[static_cast<std::size_t>(v)] = 1;
    });
    std::int64_t w = a.n1 == 0 ? 1 : 0;
    for (std::int64_t u = a.n2; u < m; ++u) w += touched[static_cast<std::size_t>(u)] == 0;
    return w;
  };
  return spec;
}

double er_t_statistic(const CouplingSample& s, std::int64_t n, double p) {
  const auto& a = std::any_cast<const ERAux&>(s.aux);
  return std::fabs(static_cast<double>(a.w1) - er_mean_degree_count(n, p, 1));
}

TailCheckReport degree_count_tail_check(std::int64_t n, double p, int d, const std::vector<double>& t_grid,
                                        std::uint64_t n_samples, std::uint64_t seed, int workers) {
  require(d == 0 || d == 1, ErrorKind::Domain, "degree-count tail check supports d in {0, 1}");
  require(n >= 2, ErrorKind::Domain, "n must be at least 2");
  check_p(p);
  require(n_samples > 0, ErrorKind::Domain, "n_samples must be positive");
  for (double t : t_grid) require(std::isfinite(t) && t >= 0.0, ErrorKind::Domain, "t must be finite and >= 0");
  TailCheckReport rep;
  rep.d = d;
  rep.mean = er_mean_degree_count(n, p, d);
  rep.n_samples = n_samples;
  const auto sizes = chunk_sizes(n_samples, 4096);
  std::vector<std::vector<double>> dev(sizes.size());
  for_each_chunk(sizes.size(), seed, workers, [&](std::size_t c, Rng& rng) {
    dev[c].reserve(sizes[c]);
    for (std::size_t i = 0; i < sizes[c]; ++i) {
      const auto draw = sample_isolated(n, p, rng);
      dev[c].push_back(std::fabs(static_cast<double>(d == 0 ? draw.w : draw.w1) - rep.mean));
    }
  });
  const double nd = static_cast<double>(n_samples);
  for (double t : t_grid) {
    std::uint64_t count = 0;
    for (const auto& v : dev) count += static_cast<std::uint64_t>(std::count_if(v.begin(), v.end(), [t](double x) { return x > t; }));
    TailCheckRow row;
    row.t = t;
    row.empirical = static_cast<double>(count) / nd;
    row.se = std::sqrt(row.empirical * (1.0 - row.empirical) / nd);
    row.bound = 2.0 * std::exp(-t * t / (4.0 * (static_cast<double>(n) - rep.mean) + 4.0 * t / 3.0));
    row.below = row.empirical <= row.bound;
    row.consistent = row.empirical - 4.0 * row.se <= row.bound;
    rep.passed = rep.passed && row.consistent;
    rep.rows.push_back(row);
  }
  return rep;
}

RateSeries er_rate_experiment(double lambda, const std::vector<std::int64_t>& n_grid,
                              const EstimationConfig& mc) {
  require(std::isfinite(lambda) && lambda > 0.0, ErrorKind::Domain, "lambda must be positive");
  RateSeries series;
  series.label = "erdos_renyi lambda=" + std::to_string(lambda);
  for (std::size_t idx = 0; idx < n_grid.size(); ++idx) {
    const std::int64_t n = n_grid[idx];
    const double p = lambda / static_cast<double>(n);
    require(p < 1.0, ErrorKind::Domain, "lambda/n must be below 1");
    const auto inst = er_instance(n, p);
    const auto exact = exact_isolated_pmf(n, p);
    const auto tp = tp_to_lattice(make_tp(inst.mu, inst.sigma2), 1e-15);
    EstimationConfig cfg = mc;
    cfg.seed = splitmix64(mc.seed + static_cast<std::uint64_t>(n));
    const auto spec = er_coupling(n, p);
    const auto c = estimate_components(
        spec, 1.0, 1, [n, p](const CouplingSample& s) { return er_t_statistic(s, n, p); }, cfg);
    const auto tv_cor = tv_bound_cor_terms(c), loc_cor = loc_bound_cor_terms(c);
    const double sigma = std::sqrt(inst.sigma2);
    RateRecord r;
    r.n = n;
    r.sigma = sigma;
    r.d_tv = d_tv(exact.pmf, tp);
    r.d_loc = d_loc(exact.pmf, tp);
    r.tv_bound = tv_cor.total;
    r.loc_bound = loc_cor.total;
    r.extras = {{"p", p},
                {"mu", inst.mu},
                {"sigma2", inst.sigma2},
                {"tv_bound_se", tv_cor.se},
                {"loc_bound_se", loc_cor.se},
                {"tv_bound_thm1", tv_bound_thm1(c)},
                {"loc_bound_thm1", loc_bound_thm1(c)},
                {"e_psi", c.e_psi.value},
                {"t_mean", c.t_mean.value},
                {"upsilon", c.upsilon.value},
                {"upsilon_se", c.upsilon.se},
                {"upsilon_bias", c.upsilon_bias},
                {"upsilon_plugin", c.upsilon_plugin},
                {"e_gd", c.e_gd.value},
                {"max_entry_error", exact.max_entry_error},
                {"precision_bits", static_cast<double>(exact.precision_bits)},
                {"d_loc_sigma2_over_sqrt_log_sigma", r.d_loc.value * inst.sigma2 / std::sqrt(std::log(sigma))}};
    series.records.push_back(std::move(r));
  }
  std::sort(series.records.begin(), series.records.end(),
            [](const RateRecord& a, const RateRecord& b) { return a.n < b.n; });
  return series;
}

}  // namespace stein_llt
