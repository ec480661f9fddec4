#include "stein_llt/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "stein_llt/error.hpp"
#include "stein_llt/numeric.hpp"
#include "stein_llt/rng.hpp"

namespace stein_llt {

namespace {

void check_same_span(const LatticePmf& p, const LatticePmf& q) {
  require(!p.probs.empty() && !q.probs.empty(), ErrorKind::Domain, "empty pmf");
  require(p.step == q.step, ErrorKind::Domain,
          "lattice spans differ (" + std::to_string(p.step) + " vs " + std::to_string(q.step) +
              "); rescale to a common span first");
}

template <typename F>
void for_union_support(const LatticePmf& p, const LatticePmf& q, F&& f) {
  const std::int64_t lo = std::min(p.offset, q.offset);
  const std::int64_t hi = std::max(p.last_value(), q.last_value());
  for (std::int64_t x = lo; x <= hi; ++x) f(p.at(x), q.at(x));
}

constexpr int kBinom[4][4] = {{1, 0, 0, 0}, {1, 1, 0, 0}, {1, 2, 1, 0}, {1, 3, 3, 1}};

// (-1)^l nabla^l p(j) on j = offset .. last + l, zero padded, span 1.
std::vector<double> signed_differences(const LatticePmf& p, int order) {
  const auto n = static_cast<std::int64_t>(p.size());
  std::vector<double> out(static_cast<std::size_t>(n + order));
  for (std::int64_t j = 0; j < n + order; ++j) {
    double acc = 0.0;
    for (int i = 0; i <= order; ++i) {
      const std::int64_t idx = j - i;
      if (idx < 0 || idx >= n) continue;
      const double term = kBinom[order][i] * p.probs[static_cast<std::size_t>(idx)];
      acc += ((order - i) % 2 == 0) ? term : -term;
    }
    out[static_cast<std::size_t>(j)] = acc;
  }
  return out;
}

void check_order(int order) {
  require(order >= 1 && order <= 3, ErrorKind::Unsupported,
          "smoothness order " + std::to_string(order) + " is not supported (use 1, 2 or 3)");
}

}  // namespace

MetricValue d_tv(const LatticePmf& p, const LatticePmf& q) {
  check_same_span(p, q);
  CompensatedSum s;
  for_union_support(p, q, [&](double a, double b) { s += std::fabs(a - b); });
  return {0.5 * s.value(), 0.5 * (p.tail_tol + q.tail_tol)};
}

MetricValue d_loc(const LatticePmf& p, const LatticePmf& q) {
  check_same_span(p, q);
  double best = 0.0;
  for_union_support(p, q, [&](double a, double b) { best = std::max(best, std::fabs(a - b)); });
  return {best, std::max(p.tail_tol, q.tail_tol)};
}

SmoothnessReport smoothness(const LatticePmf& p, int order) {
  check_order(order);
  require(p.step == 1, ErrorKind::Domain, "smoothness needs a span-1 lattice");
  require(!p.probs.empty(), ErrorKind::Domain, "empty pmf");
  const auto diffs = signed_differences(p, order);
  SmoothnessReport rep;
  rep.order = order;
  rep.first_point = p.offset;
  rep.extremal_sign_pattern.reserve(diffs.size());
  CompensatedSum s;
  for (double d : diffs) {
    s += std::fabs(d);
    rep.extremal_sign_pattern.push_back(d < 0.0 ? -1 : 1);
  }
  rep.value = s.value();
  rep.slack = std::ldexp(p.tail_tol, order);
  return rep;
}

double smoothness_functional(const LatticePmf& p, int order, std::int64_t first_point,
                             std::span<const double> h) {
  check_order(order);
  require(p.step == 1, ErrorKind::Domain, "smoothness needs a span-1 lattice");
  const auto diffs = signed_differences(p, order);
  CompensatedSum s;
  for (std::size_t i = 0; i < h.size(); ++i) {
    const std::int64_t j = first_point + static_cast<std::int64_t>(i) - p.offset;
    if (j < 0 || j >= static_cast<std::int64_t>(diffs.size())) continue;
    s += h[i] * diffs[static_cast<std::size_t>(j)];
  }
  return s.value();
}

MetricValue sup_pmf(const LatticePmf& p) {
  require(!p.probs.empty(), ErrorKind::Domain, "empty pmf");
  return {*std::max_element(p.probs.begin(), p.probs.end()), p.tail_tol};
}

double abs_central_moment(const LatticePmf& p, int j, double center) {
  require(j >= 0 && j <= 16, ErrorKind::Domain, "moment order must lie in [0, 16]");
  require(std::isfinite(center), ErrorKind::Domain, "moment center must be finite");
  if (j == 0) return p.total();
  if (j < 8) {
    CompensatedSum s;
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double d = std::fabs(static_cast<double>(p.value_at(i)) - center);
      s += p.probs[i] * std::pow(d, j);
    }
    return s.value();
  }
  double acc = kNegInf;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double d = std::fabs(static_cast<double>(p.value_at(i)) - center);
    if (p.probs[i] <= 0.0 || d == 0.0) continue;
    acc = log_add(acc, std::log(p.probs[i]) + j * std::log(d));
  }
  return std::exp(acc);
}

TailProfile tail_profile(std::span<const double> samples, double sigma,
                         std::span<const double> thresholds, std::uint64_t seed, int n_boot) {
  require(!samples.empty(), ErrorKind::Domain, "tail profile needs samples");
  require(std::isfinite(sigma) && sigma > 0.0, ErrorKind::Domain, "sigma must be positive");
  require(n_boot >= 0, ErrorKind::Domain, "bootstrap count must be non-negative");
  for (double t : thresholds) {
    require(std::isfinite(t) && t >= 0.0, ErrorKind::Domain, "thresholds must be finite and >= 0");
  }
  const std::size_t n = samples.size();
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) {
    require(std::isfinite(samples[i]) && samples[i] >= 0.0, ErrorKind::Domain,
            "tail samples must be finite and non-negative");
    x[i] = samples[i] / sigma;
  }

  // Bucket b collects samples with sorted_t[b-1] <= x < sorted_t[b]; eps at
  // sorted threshold b is the sum over buckets > b.
  std::vector<std::size_t> order(thresholds.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return thresholds[a] < thresholds[b]; });
  std::vector<double> sorted_t(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) sorted_t[i] = thresholds[order[i]];
  std::vector<std::size_t> bucket(n);
  for (std::size_t i = 0; i < n; ++i) {
    bucket[i] = static_cast<std::size_t>(
        std::upper_bound(sorted_t.begin(), sorted_t.end(), x[i]) - sorted_t.begin());
  }
  const std::size_t nt = sorted_t.size();
  auto profile_from = [&](const std::vector<double>& bucket_sum) {
    std::vector<double> eps(nt);
    double tail = 0.0;
    for (std::size_t b = nt; b-- > 0;) {
      tail += bucket_sum[b + 1];
      eps[b] = tail / static_cast<double>(n);
    }
    return eps;
  };

  TailProfile out;
  out.thresholds.assign(thresholds.begin(), thresholds.end());
  out.n_boot = n_boot;
  std::vector<double> sums(nt + 1, 0.0);
  CompensatedSum total;
  for (std::size_t i = 0; i < n; ++i) {
    sums[bucket[i]] += x[i];
    total += x[i];
  }
  out.scaled_mean = total.value() / static_cast<double>(n);
  const auto eps = profile_from(sums);
  out.values.resize(nt);
  for (std::size_t i = 0; i < nt; ++i) out.values[order[i]] = eps[i];

  out.ci_lo = out.values;
  out.ci_hi = out.values;
  if (n_boot > 0 && nt > 0) {
    std::vector<std::vector<double>> boots(nt, std::vector<double>(static_cast<std::size_t>(n_boot)));
    Rng rng = Rng::substream(seed, 0x7a11);
    for (int r = 0; r < n_boot; ++r) {
      std::fill(sums.begin(), sums.end(), 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t k = rng.below(n);
        sums[bucket[k]] += x[k];
      }
      const auto e = profile_from(sums);
      for (std::size_t b = 0; b < nt; ++b) boots[b][static_cast<std::size_t>(r)] = e[b];
    }
    for (std::size_t b = 0; b < nt; ++b) {
      auto& v = boots[b];
      std::sort(v.begin(), v.end());
      const auto at = [&](double q) {
        const auto idx = static_cast<std::size_t>(std::floor(q * (v.size() - 1)));
        return v[idx];
      };
      out.ci_lo[order[b]] = at(0.025);
      out.ci_hi[order[b]] = at(0.975);
    }
  }
  return out;
}

}  // namespace stein_llt
