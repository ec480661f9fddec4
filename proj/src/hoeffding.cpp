#include "stein_llt/hoeffding.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <numeric>

#include "stein_llt/error.hpp"
#include "stein_llt/numeric.hpp"

namespace stein_llt {

namespace {

void shuffle(std::vector<std::int32_t>& v, Rng& rng) {
  for (std::size_t k = v.size(); k > 1; --k) {
    const auto r = static_cast<std::size_t>(rng.below(k));
    std::swap(v[k - 1], v[r]);
  }
}

void random_permutation(std::int64_t n, Rng& rng, std::vector<std::int32_t>& rho) {
  rho.resize(static_cast<std::size_t>(n));
  std::iota(rho.begin(), rho.end(), 0);
  shuffle(rho, rng);
}

std::int64_t w_of(const IntMatrix& m, const std::vector<std::int32_t>& rho) {
  std::int64_t w = 0;
  for (std::int64_t i = 0; i < m.n; ++i) w += m(i, rho[static_cast<std::size_t>(i)]);
  return w;
}

// Draws W and |T_l - E T_l| in one pass; counts are keyed by W.
struct Batch {
  std::map<std::int64_t, std::uint64_t> counts;
  std::array<RunningStats, 4> abs_t;
};

Batch draw_batch(const HoeffdingInstance& inst, std::uint64_t n_samples, std::uint64_t seed, int workers,
                 bool with_t) {
  const auto sizes = chunk_sizes(n_samples, 4096);
  std::vector<Batch> parts(sizes.size());
  for_each_chunk(sizes.size(), seed, workers, [&](std::size_t c, Rng& rng) {
    std::vector<std::int32_t> rho;
    auto& b = parts[c];
    for (std::size_t k = 0; k < sizes[c]; ++k) {
      random_permutation(inst.matrix.n, rng, rho);
      ++b.counts[w_of(inst.matrix, rho)];
      if (with_t) {
        const auto t = t_components(inst, rho);
        for (int l = 0; l < 4; ++l) b.abs_t[l].add(std::fabs(t[l] - inst.t_means[l]));
      }
    }
  });
  Batch all;
  for (const auto& b : parts) {
    for (const auto& [w, c] : b.counts) all.counts[w] += c;
    for (int l = 0; l < 4; ++l) all.abs_t[l].merge(b.abs_t[l]);
  }
  return all;
}

LatticePmf to_pmf(const std::map<std::int64_t, std::uint64_t>& counts, std::uint64_t n) {
  LatticePmf p;
  if (counts.empty()) return p;
  p.offset = counts.begin()->first;
  p.probs.assign(static_cast<std::size_t>(counts.rbegin()->first - p.offset + 1), 0.0);
  for (const auto& [w, c] : counts) {
    p.probs[static_cast<std::size_t>(w - p.offset)] = static_cast<double>(c) / static_cast<double>(n);
  }
  return p;
}

}  // namespace

IntMatrix make_matrix(const std::vector<std::vector<std::int64_t>>& rows) {
  const auto n = static_cast<std::int64_t>(rows.size());
  require(n >= 1, ErrorKind::Domain, "matrix must be non-empty");
  IntMatrix m;
  m.n = n;
  m.a.reserve(static_cast<std::size_t>(n * n));
  for (const auto& r : rows) {
    require(static_cast<std::int64_t>(r.size()) == n, ErrorKind::Domain, "matrix must be square");
    m.a.insert(m.a.end(), r.begin(), r.end());
  }
  return m;
}

HoeffdingInstance build_instance(const IntMatrix& matrix) {
  const std::int64_t n = matrix.n;
  require(n >= 2, ErrorKind::Domain, "matrix must be at least 2 x 2");
  require(static_cast<std::int64_t>(matrix.a.size()) == n * n, ErrorKind::Domain, "matrix must be square");
  require(n <= 100000, ErrorKind::Domain, "matrix too large");
  for (auto v : matrix.a) require(std::llabs(v) <= (1LL << 20), ErrorKind::Domain, "matrix entries must satisfy |a_ij| <= 2^20");

  // Shift by the integer m minimizing |a_++/n + n m|, preferring the smaller |m| on ties.
  std::int64_t raw_total = 0;
  for (auto v : matrix.a) raw_total += v;
  const double raw_mu = static_cast<double>(raw_total) / static_cast<double>(n);
  const double target = -raw_mu / static_cast<double>(n);
  std::int64_t best = 0;
  double best_abs = std::fabs(raw_mu);
  for (auto m : {static_cast<std::int64_t>(std::floor(target)), static_cast<std::int64_t>(std::ceil(target))}) {
    const double v = std::fabs(raw_mu + static_cast<double>(n * m));
    if (v < best_abs || (v == best_abs && std::llabs(m) < std::llabs(best))) {
      best = m;
      best_abs = v;
    }
  }

  HoeffdingInstance inst;
  inst.shift = best;
  inst.matrix = matrix;
  for (auto& v : inst.matrix.a) v += best;
  const auto& a = inst.matrix;
  inst.row_sums.assign(static_cast<std::size_t>(n), 0);
  inst.col_sums.assign(static_cast<std::size_t>(n), 0);
  for (std::int64_t i = 0; i < n; ++i) {
    for (std::int64_t j = 0; j < n; ++j) {
      inst.row_sums[static_cast<std::size_t>(i)] += a(i, j);
      inst.col_sums[static_cast<std::size_t>(j)] += a(i, j);
      inst.a1_bound = std::max(inst.a1_bound, static_cast<double>(std::llabs(a(i, j))));
    }
  }
  for (auto r : inst.row_sums) inst.total += r;
  const double nd = static_cast<double>(n);
  inst.mu = static_cast<double>(inst.total) / nd;

  // n^2 a_hat is an integer; its square sum is accumulated exactly.
  inst.a_hat.resize(static_cast<std::size_t>(n * n));
  __int128 sq = 0, a2 = 0, r2 = 0, c2 = 0;
  for (std::int64_t i = 0; i < n; ++i) {
    for (std::int64_t j = 0; j < n; ++j) {
      const __int128 h = static_cast<__int128>(n) * n * a(i, j) - static_cast<__int128>(n) * inst.row_sums[i] -
                         static_cast<__int128>(n) * inst.col_sums[j] + inst.total;
      inst.a_hat[static_cast<std::size_t>(i * n + j)] = static_cast<double>(h) / (nd * nd);
      sq += h * h;
      a2 += static_cast<__int128>(a(i, j)) * a(i, j);
    }
    r2 += static_cast<__int128>(inst.row_sums[i]) * inst.row_sums[i];
    c2 += static_cast<__int128>(inst.col_sums[i]) * inst.col_sums[i];
  }
  inst.sigma2 = static_cast<double>(static_cast<long double>(sq) / (static_cast<long double>(nd) * nd * nd * nd * (nd - 1)));
  inst.degenerate = sq == 0;
  inst.t_means = {static_cast<double>(a2) / nd, -static_cast<double>(r2) / (nd * nd),
                  -static_cast<double>(c2) / (nd * nd), inst.sigma2 / nd};
  inst.assumption_report = check_assumptions(inst);
  return inst;
}

AssumptionReport check_assumptions(const HoeffdingInstance& inst, const AssumptionThresholds& th) {
  const std::int64_t n = inst.matrix.n;
  const double nd = static_cast<double>(n);
  AssumptionReport rep;
  rep.a1 = inst.a1_bound;
  rep.alpha0 = rep.a1 > 0.0 ? std::sqrt(inst.sigma2 / nd) / rep.a1 : 0.0;
  rep.a1_ok = rep.alpha0 >= th.alpha0_min;
  const double need = th.alpha2_min * nd * nd;
  std::vector<bool> used(static_cast<std::size_t>(n), false);
  std::map<std::int64_t, std::int64_t> hist;
  for (std::int64_t i1 = 0; i1 < n; ++i1) {
    for (std::int64_t i2 = i1 + 1; i2 < n && !used[static_cast<std::size_t>(i1)]; ++i2) {
      if (used[static_cast<std::size_t>(i2)]) continue;
      // |a_{i1 j1} + a_{i2 j2} - a_{i1 j2} - a_{i2 j1}| = |d_{j1} - d_{j2}| with d_j = a_{i1 j} - a_{i2 j}.
      hist.clear();
      for (std::int64_t j = 0; j < n; ++j) ++hist[inst.matrix(i1, j) - inst.matrix(i2, j)];
      std::int64_t count = 0;
      for (const auto& [v, c] : hist) {
        const auto it = hist.find(v + 1);
        if (it != hist.end()) count += c * it->second;
      }
      if (static_cast<double>(count) > need && count > 0) {
        used[static_cast<std::size_t>(i1)] = used[static_cast<std::size_t>(i2)] = true;
        rep.pairs.emplace_back(i1, i2);
        rep.pair_counts.push_back(count);
      }
    }
  }
  rep.n1 = static_cast<std::int64_t>(rep.pairs.size());
  rep.min_n2 = rep.pair_counts.empty() ? 0 : *std::min_element(rep.pair_counts.begin(), rep.pair_counts.end());
  rep.alpha1 = static_cast<double>(rep.n1) / nd;
  rep.alpha2 = rep.n1 > 0 ? static_cast<double>(rep.min_n2) / (nd * nd) : 0.0;
  rep.a2_ok = rep.alpha1 >= th.alpha1_min && rep.alpha2 >= th.alpha2_min && rep.n1 > 0;
  return rep;
}

LatticePmf brute_force_pmf(const HoeffdingInstance& inst) {
  const std::int64_t n = inst.matrix.n;
  require(n <= 9, ErrorKind::Domain, "brute-force enumeration needs n <= 9");
  std::vector<std::int32_t> rho(static_cast<std::size_t>(n));
  std::iota(rho.begin(), rho.end(), 0);
  std::map<std::int64_t, std::uint64_t> counts;
  std::uint64_t total = 0;
  do {
    ++counts[w_of(inst.matrix, rho)];
    ++total;
  } while (std::next_permutation(rho.begin(), rho.end()));
  return to_pmf(counts, total);
}

std::int64_t sample_w(const HoeffdingInstance& inst, Rng& rng) {
  thread_local std::vector<std::int32_t> rho;
  random_permutation(inst.matrix.n, rng, rho);
  return w_of(inst.matrix, rho);
}

std::array<double, 4> t_components(const HoeffdingInstance& inst, const std::vector<std::int32_t>& rho) {
  const auto& a = inst.matrix;
  const double nd = static_cast<double>(a.n);
  double t1 = 0.0, t2 = 0.0, t3 = 0.0;
  std::int64_t w = 0;
  for (std::int64_t i = 0; i < a.n; ++i) {
    const std::int32_t r = rho[static_cast<std::size_t>(i)];
    const double v = static_cast<double>(a(i, r));
    w += a(i, r);
    t1 += v * v;
    t2 += v * static_cast<double>(inst.row_sums[static_cast<std::size_t>(i)]);
    t3 += v * static_cast<double>(inst.col_sums[static_cast<std::size_t>(r)]);
  }
  const double dev = static_cast<double>(w) - inst.mu;
  return {t1, -t2 / nd, -t3 / nd, dev * dev / nd};
}

double hoeffding_conditional_gd(const HoeffdingInstance& inst, const std::vector<std::int32_t>& rho) {
  const auto t = t_components(inst, rho);
  const double nd = static_cast<double>(inst.matrix.n);
  const double dev = static_cast<double>(w_of(inst.matrix, rho)) - inst.mu;
  return 2.0 * inst.mu * dev / nd + t[0] + t[1] + t[2] + t[3] + inst.mu * inst.mu / nd;
}

CouplingSpec hoeffding_coupling(const HoeffdingInstance& inst) {
  require(!inst.degenerate && inst.sigma2 > 0.0, ErrorKind::Refused, "degenerate matrix (sigma^2 = 0) refused");
  auto shared = std::make_shared<const HoeffdingInstance>(inst);
  CouplingSpec spec;
  spec.name = "hoeffding";
  spec.mu = inst.mu;
  spec.sigma2 = inst.sigma2;
  spec.exact_e_gd = inst.sigma2;
  spec.sampler = [shared](Rng& rng) {
    const auto& in = *shared;
    const auto& a = in.matrix;
    HoeffdingAux aux;
    random_permutation(a.n, rng, aux.rho);
    aux.i = static_cast<std::int32_t>(rng.below(static_cast<std::uint64_t>(a.n)));
    aux.j = static_cast<std::int32_t>(rng.below(static_cast<std::uint64_t>(a.n)));
    aux.w = w_of(a, aux.rho);
    aux.t = t_components(in, aux.rho);
    const auto ri = aux.rho[static_cast<std::size_t>(aux.i)], rj = aux.rho[static_cast<std::size_t>(aux.j)];
    std::int64_t wp = aux.w - a(aux.i, ri);
    if (aux.i != aux.j) wp -= a(aux.j, rj);
    const double g = static_cast<double>(a.n) * static_cast<double>(a(aux.i, rj) - a(aux.i, ri));
    const std::int64_t w = aux.w;
    return make_sample(w, wp, g, 0.0, std::move(aux));
  };
  spec.conditional_gd = [shared](const CouplingSample& s) {
    const auto& in = *shared;
    const auto& aux = std::any_cast<const HoeffdingAux&>(s.aux);
    const double nd = static_cast<double>(in.matrix.n);
    const double dev = static_cast<double>(aux.w) - in.mu;
    return 2.0 * in.mu * dev / nd + aux.t[0] + aux.t[1] + aux.t[2] + aux.t[3] + in.mu * in.mu / nd;
  };
  spec.conditional_resampler = [shared](const CouplingSample& s, Rng& rng) {
    const auto& a = shared->matrix;
    const auto& aux = std::any_cast<const HoeffdingAux&>(s.aux);
    const auto ri = aux.rho[static_cast<std::size_t>(aux.i)], rj = aux.rho[static_cast<std::size_t>(aux.j)];
    thread_local std::vector<std::int32_t> cols;
    cols.clear();
    for (std::int32_t c = 0; c < a.n; ++c) {
      if (c != ri && c != rj) cols.push_back(c);
    }
    shuffle(cols, rng);
    std::int64_t w = a(aux.i, ri) + (aux.i != aux.j ? a(aux.j, rj) : 0);
    std::size_t k = 0;
    for (std::int64_t r = 0; r < a.n; ++r) {
      if (r == aux.i || r == aux.j) continue;
      w += a(r, cols[k++]);
    }
    return w;
  };
  return spec;
}

double hoeffding_t_statistic(const HoeffdingInstance& inst, const CouplingSample& s) {
  const auto& aux = std::any_cast<const HoeffdingAux&>(s.aux);
  double t = 0.0;
  for (int l = 0; l < 4; ++l) t += std::fabs(aux.t[l] - inst.t_means[l]);
  return t;
}

TTailReport hoeffding_t_tails(const HoeffdingInstance& inst, const std::vector<double>& thresholds,
                              std::uint64_t n_samples, std::uint64_t seed, int workers) {
  require(n_samples > 0, ErrorKind::Domain, "n_samples must be positive");
  require(inst.sigma2 > 0.0 && inst.a1_bound > 0.0, ErrorKind::Refused, "degenerate matrix refused");
  const auto sizes = chunk_sizes(n_samples, 4096);
  std::vector<std::array<std::vector<double>, 3>> parts(sizes.size());
  for_each_chunk(sizes.size(), seed, workers, [&](std::size_t c, Rng& rng) {
    std::vector<std::int32_t> rho;
    for (std::size_t k = 0; k < sizes[c]; ++k) {
      random_permutation(inst.matrix.n, rng, rho);
      const auto t = t_components(inst, rho);
      for (int l = 0; l < 3; ++l) parts[c][l].push_back(std::fabs(t[l] - inst.t_means[l]));
    }
  });
  TTailReport rep;
  rep.passed = true;
  const double scale = inst.a1_bound * std::sqrt(inst.sigma2);
  for (int l = 0; l < 3; ++l) {
    std::vector<double> xs;
    xs.reserve(n_samples);
    for (const auto& p : parts) xs.insert(xs.end(), p[l].begin(), p[l].end());
    rep.profiles[l] = tail_profile(xs, scale, thresholds, splitmix64(seed + l), 200);
    std::vector<std::size_t> order(thresholds.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return thresholds[a] < thresholds[b]; });
    bool mono = true;
    RunningStats sx, sy;
    std::vector<std::pair<double, double>> pts;
    for (std::size_t k = 0; k < order.size(); ++k) {
      const double v = rep.profiles[l].values[order[k]];
      if (k > 0 && v > rep.profiles[l].values[order[k - 1]]) mono = false;
      if (v > 0.0) pts.emplace_back(thresholds[order[k]], std::log(v));
    }
    double slope = 0.0;
    if (pts.size() >= 2) {
      double mx = 0.0, my = 0.0;
      for (const auto& [x, y] : pts) {
        mx += x;
        my += y;
      }
      mx /= static_cast<double>(pts.size());
      my /= static_cast<double>(pts.size());
      double sxy = 0.0, sxx = 0.0;
      for (const auto& [x, y] : pts) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
      }
      slope = sxx > 0.0 ? sxy / sxx : 0.0;
    }
    rep.log_slope[l] = slope;
    rep.monotone[l] = mono;
    rep.passed = rep.passed && mono && pts.size() >= 2 && slope < 0.0;
  }
  return rep;
}

IntMatrix generate_matrix(const MatrixFamily& family, std::int64_t n) {
  require(n >= 2, ErrorKind::Domain, "n must be at least 2");
  const bool bern = family.name == "bernoulli";
  require(bern || family.name == "parity_noise", ErrorKind::Domain, "unknown matrix family '" + family.name + "'");
  Rng rng = Rng::substream(family.seed, static_cast<std::uint64_t>(n));
  IntMatrix m;
  m.n = n;
  m.a.resize(static_cast<std::size_t>(n * n));
  for (std::int64_t i = 0; i < n; ++i) {
    for (std::int64_t j = 0; j < n; ++j) {
      m.a[static_cast<std::size_t>(i * n + j)] =
          bern ? (rng.bernoulli(0.5) ? 1 : 0) : (i + j) % 2 + (rng.bernoulli(0.2) ? 1 : 0);
    }
  }
  return m;
}

std::uint64_t hoeffding_min_samples(double sigma2) {
  require(std::isfinite(sigma2) && sigma2 > 0.0, ErrorKind::Domain, "sigma^2 must be positive");
  return static_cast<std::uint64_t>(std::ceil(100.0 * sigma2 * std::sqrt(sigma2)));
}

LatticePmf hoeffding_empirical_pmf(const HoeffdingInstance& inst, std::uint64_t n_samples, std::uint64_t seed,
                                   int workers) {
  require(n_samples > 0, ErrorKind::Domain, "n_samples must be positive");
  return to_pmf(draw_batch(inst, n_samples, seed, workers, false).counts, n_samples);
}

RateSeries hoeffding_rate_experiment(const MatrixFamily& family, const std::vector<std::int64_t>& n_grid,
                                     const HoeffdingMcConfig& cfg) {
  require(cfg.alpha > 0.0 && cfg.alpha < 1.0, ErrorKind::Domain, "alpha must lie in (0, 1)");
  RateSeries series;
  series.label = "hoeffding family=" + family.name + " seed=" + std::to_string(family.seed);
  for (const std::int64_t n : n_grid) {
    const auto inst = build_instance(generate_matrix(family, n));
    const auto rep = check_assumptions(inst, cfg.thresholds);
    require(!inst.degenerate, ErrorKind::Refused, "degenerate matrix at n = " + std::to_string(n));
    require(rep.a1_ok && rep.a2_ok, ErrorKind::Refused,
            "matrix at n = " + std::to_string(n) + " fails A1/A2 (alpha0 " + std::to_string(rep.alpha0) +
                ", alpha1 " + std::to_string(rep.alpha1) + ", alpha2 " + std::to_string(rep.alpha2) + ")");
    const std::uint64_t floor_n = hoeffding_min_samples(inst.sigma2);
    std::uint64_t big_n = cfg.n_samples;
    if (big_n == 0) {
      require(cfg.sample_multiplier >= 100.0, ErrorKind::Refused,
              "sample_multiplier below 100 gives fewer than the required " + std::to_string(floor_n) + " samples");
      big_n = static_cast<std::uint64_t>(std::ceil(cfg.sample_multiplier * inst.sigma2 * std::sqrt(inst.sigma2)));
    }
    require(big_n >= floor_n, ErrorKind::Refused,
            "n = " + std::to_string(n) + " needs at least N = " + std::to_string(floor_n) + " samples");

    const std::uint64_t seed_n = splitmix64(cfg.seed + static_cast<std::uint64_t>(n));
    const auto batch = draw_batch(inst, big_n, seed_n, cfg.workers, true);
    const auto emp = to_pmf(batch.counts, big_n);
    const auto tp = tp_to_lattice(make_tp(inst.mu, inst.sigma2), 1e-15);
    const double nn = static_cast<double>(big_n);
    std::int64_t lo = 0, hi = 0;
    for (std::int64_t j = 0; j < n; ++j) {
      std::int64_t rmin = inst.matrix(0, j), rmax = rmin;
      for (std::int64_t i = 1; i < n; ++i) {
        rmin = std::min(rmin, inst.matrix(i, j));
        rmax = std::max(rmax, inst.matrix(i, j));
      }
      lo += rmin;
      hi += rmax;
    }
    const double k_support = static_cast<double>(hi - lo + 1);
    const double dkw = 2.0 * std::sqrt(std::log(2.0 / cfg.alpha) / (2.0 * nn));
    const double bhc = 0.5 * std::sqrt(2.0 * (k_support * std::log(2.0) + std::log(1.0 / cfg.alpha)) / nn);

    EstimationConfig ec = cfg.components;
    ec.seed = splitmix64(cfg.components.seed + static_cast<std::uint64_t>(n));
    ec.workers = cfg.workers;
    const auto spec = hoeffding_coupling(inst);
    const auto c = estimate_components(
        spec, 2.0 * inst.a1_bound, 1, [&inst](const CouplingSample& s) { return hoeffding_t_statistic(inst, s); }, ec);
    const auto tv_cor = tv_bound_cor_terms(c), loc_cor = loc_bound_cor_terms(c);

    RateRecord r;
    r.n = n;
    r.sigma = std::sqrt(inst.sigma2);
    r.d_tv = d_tv(emp, tp);
    r.d_loc = d_loc(emp, tp);
    r.d_tv.slack += bhc;
    r.d_loc.slack += dkw;
    r.tv_bound = tv_cor.total;
    r.loc_bound = loc_cor.total;
    r.extras = {{"n_samples", nn},
                {"mu", inst.mu},
                {"sigma2", inst.sigma2},
                {"shift", static_cast<double>(inst.shift)},
                {"a1", rep.a1},
                {"alpha0", rep.alpha0},
                {"alpha1", rep.alpha1},
                {"alpha2", rep.alpha2},
                {"dkw_band", dkw},
                {"bhc_half_width", bhc},
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
                {"e_abs_t1", batch.abs_t[0].mean},
                {"e_abs_t2", batch.abs_t[1].mean},
                {"e_abs_t3", batch.abs_t[2].mean},
                {"e_abs_t4", batch.abs_t[3].mean},
                {"d_loc_sigma2", r.d_loc.value * inst.sigma2},
                {"d_loc_sigma2_over_sqrt_log_sigma", r.d_loc.value * inst.sigma2 / std::sqrt(std::log(r.sigma))}};
    series.records.push_back(std::move(r));
  }
  std::sort(series.records.begin(), series.records.end(),
            [](const RateRecord& a, const RateRecord& b) { return a.n < b.n; });
  return series;
}

}  // namespace stein_llt
