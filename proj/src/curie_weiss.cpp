#include "stein_llt/curie_weiss.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>

#include "stein_llt/error.hpp"
#include "stein_llt/metrics.hpp"
#include "stein_llt/numeric.hpp"
#include "stein_llt/rng.hpp"

namespace stein_llt {

namespace {

void check_regime(double beta, double h) {
  require(std::isfinite(beta) && std::isfinite(h) && beta >= 0.0 && h >= 0.0, ErrorKind::Domain,
          "Curie-Weiss needs finite beta >= 0 and h >= 0");
  require(h > 0.0 || beta < 1.0, ErrorKind::Domain,
          "Curie-Weiss regime error: h = 0 requires beta < 1 (beta = " + std::to_string(beta) + ")");
}

// Logistic weight exp(x)/(2 cosh x) = 1/(1 + exp(-2x)).
double logistic(double x) { return 1.0 / (1.0 + std::exp(-2.0 * x)); }

std::int64_t parity(std::int64_t n) { return n % 2 == 0 ? 0 : 1; }

}  // namespace

double solve_mh(double beta, double h) {
  check_regime(beta, h);
  if (h == 0.0) return 0.0;
  double lo = 0.0, hi = 1.0;
  // f(m) = m - tanh(beta m + h) is negative at 0 and non-negative at 1.
  for (int i = 0; i < 200 && hi - lo > 0.0; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    if (mid - std::tanh(beta * mid + h) < 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const double m = 0.5 * (lo + hi);
  require(std::fabs(m - std::tanh(beta * m + h)) <= 1e-12, ErrorKind::Precision,
          "fixed point did not converge");
  return m;
}

LatticePmf cw_exact_pmf(std::int64_t n, double beta, double h) {
  check_regime(beta, h);
  require(n >= 1 && n <= 100000, ErrorKind::Domain, "Curie-Weiss pmf needs 1 <= n <= 10^5");
  const double nd = static_cast<double>(n);
  const auto size = static_cast<std::size_t>(n + 1);
  // k spins up, w = 2k - n. Locate the global mode with lgamma, then build
  // log-weights outward from it with the exact one-step ratio so rounding
  // stays relative to the mass near the mode.
  auto rough = [&](std::int64_t k) {
    const double w = static_cast<double>(2 * k - n);
    return std::lgamma(nd + 1.0) - std::lgamma(static_cast<double>(k) + 1.0) -
           std::lgamma(static_cast<double>(n - k) + 1.0) + beta * (w * w - nd) / (2.0 * nd) + h * w;
  };
  std::int64_t mode = 0;
  double best = rough(0);
  for (std::int64_t k = 1; k <= n; ++k) {
    const double v = rough(k);
    if (v > best) {
      best = v;
      mode = k;
    }
  }
  // log pi(k+1) - log pi(k)
  auto step = [&](std::int64_t k) {
    const double w = static_cast<double>(2 * k - n);
    return std::log(static_cast<double>(n - k) / static_cast<double>(k + 1)) + 2.0 * beta * (w + 1.0) / nd +
           2.0 * h;
  };
  std::vector<double> lw(size, 0.0);
  for (std::int64_t k = mode; k < n; ++k) lw[static_cast<std::size_t>(k + 1)] = lw[static_cast<std::size_t>(k)] + step(k);
  for (std::int64_t k = mode; k > 0; --k) lw[static_cast<std::size_t>(k - 1)] = lw[static_cast<std::size_t>(k)] - step(k - 1);
  const double top = *std::max_element(lw.begin(), lw.end());
  CompensatedSum s;
  for (double v : lw) s += std::exp(v - top);
  const double log_z = top + std::log(s.value());
  LatticePmf p{-n, 2, std::vector<double>(size), 0.0};
  for (std::size_t i = 0; i < size; ++i) p.probs[i] = std::exp(lw[i] - log_z);
  return p;
}

CWInstance cw_instance(std::int64_t n, double beta, double h) {
  CWInstance inst;
  inst.n = n;
  inst.beta = beta;
  inst.h = h;
  inst.m_h = solve_mh(beta, h);
  inst.a_coef = (1.0 - beta * (1.0 - inst.m_h * inst.m_h)) / static_cast<double>(n);
  require(inst.a_coef > 0.0, ErrorKind::Domain, "regression coefficient a is not positive");
  inst.exact_pmf = cw_exact_pmf(n, beta, h);
  inst.mu_n = inst.exact_pmf.mean();
  inst.sigma_n2 = inst.exact_pmf.variance();
  return inst;
}

LatticePmf tilde_transform(const LatticePmf& span2, std::int64_t n) {
  require(span2.step == 2, ErrorKind::Domain, "tilde transform needs a span-2 pmf");
  require(((span2.offset % 2) + 2) % 2 == parity(n), ErrorKind::Domain,
          "tilde transform: support parity does not match n");
  LatticePmf out = span2;
  out.step = 1;
  out.offset = (span2.offset + parity(n)) / 2;
  return out;
}

TransitionProbs gibbs_transition_probs(std::int64_t n, double beta, double h, std::int64_t w) {
  require(n >= 1 && w >= -n && w <= n && ((w + n) % 2 == 0), ErrorKind::Domain,
          "w must lie on the lattice {-n, -n+2, ..., n}");
  const double nd = static_cast<double>(n);
  const double wd = static_cast<double>(w);
  TransitionProbs t;
  t.p_up = (nd - wd) / (2.0 * nd) * logistic(beta / nd * (wd + 1.0) + h);
  t.p_down = (nd + wd) / (2.0 * nd) * logistic(-(beta / nd * (wd - 1.0) + h));
  return t;
}

double cw_taylor_constant(double beta, double h, std::int64_t n) {
  const double m = solve_mh(beta, h);
  const double t = beta * m + h;
  const double th = std::tanh(t);
  const double slope = beta * (1.0 - m * m);
  auto ratio = [&](double x) {
    const double d = x - m;
    return std::fabs(std::tanh(beta * x + h) - th - slope * d) / (d * d);
  };
  // Limit at x = m: |beta^2 tanh''(t)/2| = beta^2 m (1 - m^2).
  double c = beta * beta * m * (1.0 - m * m);
  constexpr int kGrid = 200000;
  for (int i = 0; i <= kGrid; ++i) {
    const double x = -1.0 + 2.0 * i / kGrid;
    if (std::fabs(x - m) > 1e-6) c = std::max(c, ratio(x));
  }
  for (std::int64_t w = -n; w <= n; w += 2) {
    const double x = static_cast<double>(w) / static_cast<double>(n);
    if (x != m) c = std::max(c, ratio(x));
  }
  return c;
}

double cw_r_majorant(const CWInstance& inst, double taylor_c, std::int64_t w) {
  const double nd = static_cast<double>(inst.n);
  const double denom = 1.0 - inst.beta * (1.0 - inst.m_h * inst.m_h);
  const double dev = static_cast<double>(w) / nd - inst.m_h;
  return inst.beta / denom + std::fabs(inst.mu_n - nd * inst.m_h) + taylor_c * nd * dev * dev / denom;
}

double cw_exact_remainder(const CWInstance& inst, std::int64_t w) {
  const auto t = gibbs_transition_probs(inst.n, inst.beta, inst.h, w);
  const double par = static_cast<double>(parity(inst.n));
  const double wt = (static_cast<double>(w) + par) / 2.0;
  const double mut = (inst.mu_n + par) / 2.0;
  return -((t.p_up - t.p_down) / inst.a_coef + (wt - mut));
}

CWExact cw_exact_components(const CWInstance& inst) {
  const auto& p = inst.exact_pmf;
  const double a = inst.a_coef;
  const double par = static_cast<double>(parity(inst.n));
  const double mut = (inst.mu_n + par) / 2.0;
  const double s2 = inst.sigma_n2 / 4.0;
  const double s = std::sqrt(s2);
  require(s2 > 0.0, ErrorKind::Domain, "degenerate magnetization law");

  std::vector<TransitionProbs> tr(p.size());
  CompensatedSum ep, drift;
  for (std::size_t i = 0; i < p.size(); ++i) {
    tr[i] = gibbs_transition_probs(inst.n, inst.beta, inst.h, p.value_at(i));
    ep += p.probs[i] * tr[i].p_up;
    drift += p.probs[i] * 2.0 * (tr[i].p_up - tr[i].p_down);
  }
  const double e_up = ep.value();

  CWExact out;
  out.taylor_c = cw_taylor_constant(inst.beta, inst.h, inst.n);
  out.stationarity_residual = std::fabs(drift.value());
  auto& c = out.components;
  c.mu = mut;
  c.sigma = s;
  c.n_samples = 0;
  c.remark1 = true;
  c.k_order = 1;
  CompensatedSum psi, psi_dev, r2, r2m, r_dev, m1, m2;
  double kappa = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const std::int64_t w = p.value_at(i);
    const double pi = p.probs[i];
    const double dev = std::fabs((static_cast<double>(w) + par) / 2.0 - mut);
    const double ps = std::fabs(tr[i].p_up - e_up) / a;
    const double r = -((tr[i].p_up - tr[i].p_down) / a + ((static_cast<double>(w) + par) / 2.0 - mut));
    const double rm = cw_r_majorant(inst, out.taylor_c, w) / 2.0;
    psi += pi * ps;
    psi_dev += pi * ps * dev;
    r2 += pi * r * r;
    r2m += pi * rm * rm;
    r_dev += pi * r * ((static_cast<double>(w) + par) / 2.0 - mut);
    m1 += pi * dev / s;
    m2 += pi * dev * dev / s2;
    c.sup_psi_point.value = std::max(c.sup_psi_point.value, pi * ps);
    c.sup_pmf.value = std::max(c.sup_pmf.value, pi);
    c.sup_weighted_point.value = std::max(c.sup_weighted_point.value, pi * (s + dev));
    kappa = std::max(kappa, ps / (s + dev));
  }
  c.e_psi = {psi.value(), 0.0};
  c.e_psi_absdev = {psi_dev.value(), 0.0};
  c.e_r2 = {r2m.value(), 0.0};
  c.upsilon = {0.0, 0.0};
  c.kappa = kappa;
  c.moments = {{p.total(), 0.0}, {m1.value(), 0.0}, {m2.value(), 0.0}};
  c.e_gd = {e_up / a, 0.0};
  out.e_r2_exact = r2.value();
  out.e_r2_majorant = r2m.value();
  out.identity_residual = std::fabs(e_up / a - s2 - r_dev.value());
  return out;
}

CouplingSpec cw_coupling(const CWInstance& inst) {
  auto cdf = std::make_shared<std::vector<double>>(inst.exact_pmf.size());
  CompensatedSum acc;
  for (std::size_t i = 0; i < cdf->size(); ++i) {
    acc += inst.exact_pmf.probs[i];
    (*cdf)[i] = acc.value();
  }
  const std::int64_t n = inst.n;
  const double beta = inst.beta, h = inst.h;
  const std::int64_t par = parity(n);
  auto sampler = [cdf, n, beta, h, par](Rng& rng) {
    const double u = rng.uniform() * cdf->back();
    auto idx = static_cast<std::int64_t>(std::upper_bound(cdf->begin(), cdf->end(), u) - cdf->begin());
    idx = std::min<std::int64_t>(idx, n);
    const std::int64_t w = 2 * idx - n;
    const auto t = gibbs_transition_probs(n, beta, h, w);
    const double v = rng.uniform();
    const std::int64_t d = v < t.p_up ? 1 : (v < t.p_up + t.p_down ? -1 : 0);
    const std::int64_t wt = (w + par) / 2;
    return PairDraw{wt, wt + d, w};
  };
  const CWInstance copy_inst = [&] {
    CWInstance c = inst;
    c.exact_pmf.probs.clear();
    return c;
  }();
  auto remainder = [copy_inst](const PairDraw& p) {
    return cw_exact_remainder(copy_inst, std::any_cast<std::int64_t>(p.aux));
  };
  auto up = [n, beta, h](const PairDraw& p) {
    return gibbs_transition_probs(n, beta, h, std::any_cast<std::int64_t>(p.aux)).p_up;
  };
  const double par_d = static_cast<double>(par);
  auto spec = build_one_sided_pair(sampler, inst.a_coef, remainder, (inst.mu_n + par_d) / 2.0,
                                   inst.sigma_n2 / 4.0, up);
  spec.name = "Curie-Weiss one-sided Gibbs pair";
  CompensatedSum ep;
  for (std::size_t i = 0; i < inst.exact_pmf.size(); ++i) {
    ep += inst.exact_pmf.probs[i] *
          gibbs_transition_probs(n, beta, h, inst.exact_pmf.value_at(i)).p_up;
  }
  spec.exact_e_gd = ep.value() / inst.a_coef;
  return spec;
}

TPParams cw_limit_tp(std::int64_t n, double beta, double h) {
  const double m = solve_mh(beta, h);
  const double nd = static_cast<double>(n);
  return make_tp(nd * m / 2.0, nd * (1.0 - m * m) / (4.0 * (1.0 - beta + beta * m * m)));
}

RateSeries cw_rate_experiment(double beta, double h, const std::vector<std::int64_t>& n_grid,
                              CWTarget target, int workers) {
  check_regime(beta, h);
  RateSeries series;
  series.label = "curie_weiss beta=" + std::to_string(beta) + " h=" + std::to_string(h);
  series.records.resize(n_grid.size());
  for_each_chunk(n_grid.size(), 0, workers, [&](std::size_t i, Rng&) {
    const std::int64_t n = n_grid[i];
    const auto inst = cw_instance(n, beta, h);
    const auto tilde = tilde_transform(inst.exact_pmf, n);
    const auto ex = cw_exact_components(inst);
    const auto& c = ex.components;
    const auto limit = tp_to_lattice(cw_limit_tp(n, beta, h), 1e-15);
    const auto matched = tp_to_lattice(make_tp(c.mu, c.sigma * c.sigma), 1e-15);
    const auto tv_l = d_tv(tilde, limit), loc_l = d_loc(tilde, limit);
    const auto tv_m = d_tv(tilde, matched), loc_m = d_loc(tilde, matched);
    RateRecord r;
    r.n = n;
    r.sigma = c.sigma;
    r.d_tv = target == CWTarget::Limit ? tv_l : tv_m;
    r.d_loc = target == CWTarget::Limit ? loc_l : loc_m;
    r.tv_bound = tv_bound_thm1(c);
    r.loc_bound = loc_bound_thm1(c);
    r.extras = {{"d_tv_limit", tv_l.value},
                {"d_loc_limit", loc_l.value},
                {"d_tv_matched", tv_m.value},
                {"d_loc_matched", loc_m.value},
                {"tv_bound_cor", tv_bound_cor(c)},
                {"loc_bound_cor", loc_bound_cor(c)},
                {"e_psi", c.e_psi.value},
                {"e_r2_majorant", ex.e_r2_majorant},
                {"e_r2_exact", ex.e_r2_exact},
                {"kappa", c.kappa},
                {"taylor_c", ex.taylor_c},
                {"sup_pmf", c.sup_pmf.value},
                {"moment_1", c.moments[1].value},
                {"moment_2", c.moments[2].value},
                {"s2", smoothness(tilde, 2).value},
                {"m_h", inst.m_h},
                {"mu_n_minus_n_m_h", inst.mu_n - static_cast<double>(n) * inst.m_h}};
    series.records[i] = std::move(r);
  });
  std::sort(series.records.begin(), series.records.end(),
            [](const RateRecord& a, const RateRecord& b) { return a.n < b.n; });
  return series;
}

}  // namespace stein_llt
