#include "stein_llt/couplings.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

#include "stein_llt/dist_core.hpp"
#include "stein_llt/error.hpp"
#include "stein_llt/metrics.hpp"
#include "stein_llt/numeric.hpp"

namespace stein_llt {

namespace {

struct IdentityChunk {
  RunningStats gd, rdev, gap, r, w;
  bool unit = true;
};

bool in_unit_set(std::int64_t d) { return d >= -1 && d <= 1; }

// Per-value sums used for the sup_a terms.
struct Bucket {
  double count = 0.0;
  double psi = 0.0, psi2 = 0.0;
  double t = 0.0, t2 = 0.0;
};

struct OuterChunk {
  std::vector<std::int64_t> w;
  std::vector<double> cgd;
  std::vector<double> t;
  RunningStats gd, r2, t1, t2, gdd1;
  bool unit = true;
};

Estimate from(const RunningStats& s) { return {s.mean, s.se()}; }

}  // namespace

IdentityReport verify_identity(const CouplingSpec& spec, std::uint64_t n_samples, std::uint64_t seed,
                               int workers) {
  require(n_samples >= 10000, ErrorKind::Domain, "verify_identity needs at least 10^4 samples");
  require(static_cast<bool>(spec.sampler), ErrorKind::Domain, "coupling has no sampler");
  const auto sizes = chunk_sizes(n_samples, 8192);
  std::vector<IdentityChunk> chunks(sizes.size());
  for_each_chunk(sizes.size(), seed, workers, [&](std::size_t c, Rng& rng) {
    auto& acc = chunks[c];
    for (std::size_t i = 0; i < sizes[c]; ++i) {
      const CouplingSample s = spec.sampler(rng);
      const double gd = s.g * static_cast<double>(s.d);
      const double rdev = s.r * (static_cast<double>(s.w) - spec.mu);
      acc.gd.add(gd);
      acc.rdev.add(rdev);
      acc.gap.add(gd - spec.sigma2 - rdev);
      acc.r.add(s.r);
      acc.w.add(static_cast<double>(s.w));
      acc.unit = acc.unit && in_unit_set(s.d);
    }
  });
  IdentityChunk all;
  for (const auto& c : chunks) {
    all.gd.merge(c.gd);
    all.rdev.merge(c.rdev);
    all.gap.merge(c.gap);
    all.r.merge(c.r);
    all.w.merge(c.w);
    all.unit = all.unit && c.unit;
  }
  IdentityReport rep;
  rep.n_samples = n_samples;
  rep.sigma2 = spec.sigma2;
  rep.e_gd = all.gd.mean;
  rep.e_gd_se = all.gd.se();
  rep.e_r_dev = all.rdev.mean;
  rep.e_r_dev_se = all.rdev.se();
  rep.gap = all.gap.mean;
  rep.gap_se = all.gap.se();
  rep.e_r = all.r.mean;
  rep.e_r_se = all.r.se();
  rep.e_w = all.w.mean;
  rep.e_w_se = all.w.se();
  rep.d_in_unit_set = all.unit;
  // Exact couplings with degenerate G D have zero SE; allow rounding there.
  const double tol = 1e-9 * std::max(1.0, spec.sigma2);
  const bool gap_ok = std::fabs(rep.gap) <= 4.0 * rep.gap_se + tol;
  const bool r_ok = std::fabs(rep.e_r) <= 4.0 * rep.e_r_se + tol;
  rep.passed = gap_ok && r_ok;
  if (!gap_ok) {
    rep.diagnostic = "coupling invalid: E[GD] - sigma2 - E[R(W-mu)] = " + std::to_string(rep.gap) +
                     " exceeds 4 SE (" + std::to_string(4.0 * rep.gap_se) + ")";
  } else if (!r_ok) {
    rep.diagnostic = "coupling invalid: E[R] = " + std::to_string(rep.e_r) + " exceeds 4 SE (" +
                     std::to_string(4.0 * rep.e_r_se) + ")";
  }
  return rep;
}

CouplingSpec build_one_sided_pair(PairSampler pair_sampler, double a, RExtractor r_extractor,
                                  double mu, double sigma2,
                                  std::function<double(const PairDraw&)> up_probability) {
  require(std::isfinite(a) && a > 0.0, ErrorKind::Domain, "regression coefficient a must be positive");
  CouplingSpec spec;
  spec.name = "one-sided exchangeable pair";
  spec.mu = mu;
  spec.sigma2 = sigma2;
  spec.one_sided = true;
  spec.sampler = [pair_sampler = std::move(pair_sampler), r_extractor = std::move(r_extractor),
                  a](Rng& rng) {
    PairDraw p = pair_sampler(rng);
    const std::int64_t d = p.w_prime - p.w;
    const double g = d > 0 ? static_cast<double>(d) / a : 0.0;
    const double r = r_extractor ? r_extractor(p) : 0.0;
    const std::int64_t w = p.w, wp = p.w_prime;
    return make_sample(w, wp, g, r, std::move(p));
  };
  if (up_probability) {
    spec.conditional_gd = [up = std::move(up_probability), a](const CouplingSample& s) {
      return up(std::any_cast<const PairDraw&>(s.aux)) / a;
    };
  }
  return spec;
}

CouplingSpec build_exchangeable_pair(PairSampler pair_sampler, double a, RExtractor r_extractor,
                                     double mu, double sigma2) {
  require(std::isfinite(a) && a > 0.0, ErrorKind::Domain, "regression coefficient a must be positive");
  CouplingSpec spec;
  spec.name = "exchangeable pair";
  spec.mu = mu;
  spec.sigma2 = sigma2;
  spec.sampler = [pair_sampler = std::move(pair_sampler), r_extractor = std::move(r_extractor),
                  a](Rng& rng) {
    PairDraw p = pair_sampler(rng);
    const double g = static_cast<double>(p.w_prime - p.w) / (2.0 * a);
    const double r = r_extractor ? r_extractor(p) : 0.0;
    const std::int64_t w = p.w, wp = p.w_prime;
    return make_sample(w, wp, g, r, std::move(p));
  };
  return spec;
}

CouplingSpec build_local_dependence(std::function<std::vector<std::int64_t>(Rng&)> summands,
                                    std::vector<double> means,
                                    std::vector<std::vector<std::size_t>> neighborhoods,
                                    double sigma2) {
  const std::size_t n = means.size();
  require(n >= 1, ErrorKind::Domain, "local dependence needs at least one summand");
  require(neighborhoods.size() == n, ErrorKind::Domain, "one neighborhood per summand required");
  for (const auto& nb : neighborhoods) {
    for (auto j : nb) require(j < n, ErrorKind::Domain, "neighborhood index out of range");
  }
  CouplingSpec spec;
  spec.name = "local dependence";
  CompensatedSum mu;
  for (double m : means) mu += m;
  spec.mu = mu.value();
  spec.sigma2 = sigma2;
  spec.exact_e_gd = sigma2;
  spec.sampler = [summands = std::move(summands), means = std::move(means),
                  neighborhoods = std::move(neighborhoods), n](Rng& rng) {
    const std::vector<std::int64_t> x = summands(rng);
    require(x.size() == n, ErrorKind::Domain, "summand sampler returned the wrong length");
    std::int64_t w = 0;
    for (auto v : x) w += v;
    const auto i = static_cast<std::size_t>(rng.below(n));
    std::int64_t removed = 0;
    for (auto j : neighborhoods[i]) removed += x[j];
    const double g = -static_cast<double>(n) * (static_cast<double>(x[i]) - means[i]);
    return make_sample(w, w - removed, g, 0.0, x);
  };
  return spec;
}

CouplingSpec build_size_bias(std::function<PairDraw(Rng&)> sampler_w_ws, double mu, double sigma2) {
  require(std::isfinite(mu) && mu > 0.0, ErrorKind::Domain, "size bias needs a positive mean");
  CouplingSpec spec;
  spec.name = "size bias";
  spec.mu = mu;
  spec.sigma2 = sigma2;
  spec.exact_e_gd = sigma2;
  spec.sampler = [sampler = std::move(sampler_w_ws), mu](Rng& rng) {
    PairDraw p = sampler(rng);
    require(p.w >= 0, ErrorKind::Domain, "size bias needs W >= 0");
    const std::int64_t w = p.w, ws = p.w_prime;
    return make_sample(w, ws, mu, 0.0, std::move(p));
  };
  return spec;
}

double empirical_s2_noise_floor(const std::vector<double>& probs, std::uint64_t n_inner) {
  if (n_inner == 0 || probs.empty()) return 0.0;
  static constexpr double c[3] = {1.0, -2.0, 1.0};
  const auto n = static_cast<std::int64_t>(probs.size());
  CompensatedSum total;
  for (std::int64_t j = 0; j < n + 2; ++j) {
    double m1 = 0.0, m2 = 0.0;
    for (int i = 0; i < 3; ++i) {
      const std::int64_t idx = j - i;
      if (idx < 0 || idx >= n) continue;
      m1 += c[i] * probs[static_cast<std::size_t>(idx)];
      m2 += c[i] * c[i] * probs[static_cast<std::size_t>(idx)];
    }
    const double var = std::max(0.0, m2 - m1 * m1) / static_cast<double>(n_inner);
    total += std::sqrt(2.0 / std::numbers::pi * var);
  }
  return total.value();
}

BoundComponents estimate_components(const CouplingSpec& spec, double kappa, int k_order,
                                    const std::function<double(const CouplingSample&)>& t_extractor,
                                    const EstimationConfig& cfg) {
  require(static_cast<bool>(spec.sampler), ErrorKind::Domain, "coupling has no sampler");
  require(static_cast<bool>(spec.conditional_gd), ErrorKind::Unsupported,
          "estimation needs the coupling's conditional_gd (analytic E[GD | F1])");
  require(spec.sigma2 > 0.0, ErrorKind::Domain, "sigma2 must be positive");
  require(k_order >= 0 && k_order <= 14, ErrorKind::Domain, "k_order must lie in [0, 14]");
  require(cfg.n_outer >= 2, ErrorKind::Domain, "need at least two outer samples");

  const double sigma = std::sqrt(spec.sigma2);
  const auto sizes = chunk_sizes(cfg.n_outer, cfg.chunk_size);
  std::vector<OuterChunk> chunks(sizes.size());
  for_each_chunk(sizes.size(), cfg.seed, cfg.workers, [&](std::size_t c, Rng& rng) {
    auto& acc = chunks[c];
    acc.w.reserve(sizes[c]);
    acc.cgd.reserve(sizes[c]);
    acc.t.reserve(sizes[c]);
    for (std::size_t i = 0; i < sizes[c]; ++i) {
      const CouplingSample s = spec.sampler(rng);
      const double d = static_cast<double>(s.d);
      const double t = t_extractor ? t_extractor(s) : 0.0;
      acc.w.push_back(s.w);
      acc.cgd.push_back(spec.conditional_gd(s));
      acc.t.push_back(t);
      acc.gd.add(s.g * d);
      acc.r2.add(s.r * s.r);
      acc.t1.add(t);
      acc.t2.add(t * t);
      acc.gdd1.add(std::fabs(s.g * d * (d - 1.0)));
      acc.unit = acc.unit && in_unit_set(s.d);
    }
  });

  OuterChunk all;
  for (auto& c : chunks) {
    all.w.insert(all.w.end(), c.w.begin(), c.w.end());
    all.cgd.insert(all.cgd.end(), c.cgd.begin(), c.cgd.end());
    all.t.insert(all.t.end(), c.t.begin(), c.t.end());
    all.gd.merge(c.gd);
    all.r2.merge(c.r2);
    all.t1.merge(c.t1);
    all.t2.merge(c.t2);
    all.gdd1.merge(c.gdd1);
    all.unit = all.unit && c.unit;
  }
  const std::size_t n = all.w.size();
  const double nd = static_cast<double>(n);

  BoundComponents out;
  out.mu = spec.mu;
  out.sigma = sigma;
  out.n_samples = n;
  out.kappa = kappa;
  out.k_order = k_order;
  out.e_gd = from(all.gd);
  out.e_r2 = from(all.r2);
  out.t_mean = from(all.t1);
  out.t_second = from(all.t2);

  double centre = spec.exact_e_gd;
  if (!std::isfinite(centre)) {
    CompensatedSum s;
    for (double v : all.cgd) s += v;
    centre = s.value() / nd;
  }

  RunningStats psi, psi_dev;
  std::vector<RunningStats> mom(static_cast<std::size_t>(k_order) + 2);
  std::map<std::int64_t, Bucket> buckets;
  for (std::size_t i = 0; i < n; ++i) {
    const double p = std::fabs(all.cgd[i] - centre);
    const double dev = std::fabs(static_cast<double>(all.w[i]) - spec.mu);
    psi.add(p);
    psi_dev.add(p * dev);
    double z = 1.0;
    for (auto& m : mom) {
      m.add(z);
      z *= dev / sigma;
    }
    auto& b = buckets[all.w[i]];
    b.count += 1.0;
    b.psi += p;
    b.psi2 += p * p;
    b.t += all.t[i];
    b.t2 += all.t[i] * all.t[i];
  }
  out.e_psi = from(psi);
  out.e_psi_absdev = from(psi_dev);
  for (const auto& m : mom) out.moments.push_back(from(m));

  // For Y = X 1{W = a}: mean = sum/N, SE from the second moment.
  auto indicator_estimate = [nd](double sum, double sum2) {
    const double mean = sum / nd;
    const double var = std::max(0.0, sum2 / nd - mean * mean) * nd / std::max(1.0, nd - 1.0);
    return Estimate{mean, std::sqrt(var / nd)};
  };
  for (const auto& [a, b] : buckets) {
    const auto pe = indicator_estimate(b.psi, b.psi2);
    if (pe.value > out.sup_psi_point.value) out.sup_psi_point = pe;
    const auto te = indicator_estimate(b.t, b.t2);
    if (te.value > out.sup_t_point.value) out.sup_t_point = te;
    const double freq = b.count / nd;
    const double freq_se = std::sqrt(freq * (1.0 - freq) / nd);
    if (freq > out.sup_pmf.value) out.sup_pmf = {freq, freq_se};
    const double dev = std::fabs(static_cast<double>(a) - spec.mu);
    double weight = 0.0;
    double z = sigma;
    for (int j = 0; j <= k_order; ++j) {
      weight += z;
      z *= dev / sigma;
    }
    if (freq * weight > out.sup_weighted_point.value) out.sup_weighted_point = {freq * weight, freq_se * weight};
  }

  const auto tp_lattice = tp_to_lattice(make_tp(spec.mu, spec.sigma2), 1e-12);
  out.upsilon_plugin = all.gdd1.mean * smoothness(tp_lattice, 2).value;

  if (spec.one_sided && all.unit) {
    out.remark1 = true;
    out.upsilon = {0.0, 0.0};
    return out;
  }
  if (all.gdd1.mean == 0.0) {
    out.upsilon = {0.0, 0.0};
    return out;
  }
  require(static_cast<bool>(spec.conditional_resampler), ErrorKind::Unsupported,
          "Upsilon estimation needs the coupling's conditional_resampler (draws from L(W | F2))");
  require(cfg.n_inner >= 2 && cfg.n_upsilon_outer >= 2, ErrorKind::Domain,
          "nested Upsilon estimation needs n_inner >= 2 and at least two outer draws");

  struct Nested {
    double value = 0.0;
    double bias = 0.0;
  };
  std::vector<Nested> nested(cfg.n_upsilon_outer);
  for_each_chunk(cfg.n_upsilon_outer, splitmix64(cfg.seed ^ 0x5e1f0cafeULL), cfg.workers,
                 [&](std::size_t c, Rng& rng) {
                   const CouplingSample s = spec.sampler(rng);
                   const double d = static_cast<double>(s.d);
                   const double weight = std::fabs(s.g * d * (d - 1.0));
                   if (weight == 0.0) return;
                   std::vector<std::int64_t> draws(cfg.n_inner);
                   for (auto& v : draws) v = spec.conditional_resampler(s, rng);
                   const auto [lo, hi] = std::minmax_element(draws.begin(), draws.end());
                   LatticePmf emp{*lo, 1, std::vector<double>(static_cast<std::size_t>(*hi - *lo) + 1, 0.0), 0.0};
                   const double inv = 1.0 / static_cast<double>(cfg.n_inner);
                   for (auto v : draws) emp.probs[static_cast<std::size_t>(v - *lo)] += inv;
                   nested[c].value = weight * smoothness(emp, 2).value;
                   nested[c].bias = weight * empirical_s2_noise_floor(emp.probs, cfg.n_inner);
                 });
  RunningStats ups, bias;
  for (const auto& v : nested) {
    ups.add(v.value);
    bias.add(v.bias);
  }
  out.upsilon = from(ups);
  out.upsilon_bias = bias.mean;
  return out;
}

}  // namespace stein_llt
