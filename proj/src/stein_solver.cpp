#include "stein_llt/stein_solver.hpp"

#include <algorithm>
#include <cmath>

#include "stein_llt/error.hpp"
#include "stein_llt/numeric.hpp"

namespace stein_llt {

namespace {

void check_lambda(double lambda) {
  require(std::isfinite(lambda) && lambda > 0.0, ErrorKind::Domain,
          "lambda must be finite and positive");
}

double exp_sum(double log_a, double log_b) { return std::exp(log_a) + std::exp(log_b); }

// sum_{i>=1} i lambda^i / (k (k+1) ... (k+i)), k >= lambda.
double upper_difference_series(double lambda, std::int64_t k) {
  const double kd = static_cast<double>(k);
  double r = lambda / (kd * (kd + 1.0));
  CompensatedSum s;
  double prev = 0.0;
  for (std::int64_t i = 1;; ++i) {
    const double t = static_cast<double>(i) * r;
    s += t;
    if ((t < prev && t < 1e-18 * s.value()) || t == 0.0) break;
    prev = t;
    r *= lambda / (kd + static_cast<double>(i) + 1.0);
  }
  return s.value();
}

// sum_{i=1..k} i (k-1)(k-2)...(k-i+1) / lambda^(i-1), k < lambda.
double lower_difference_series(double lambda, std::int64_t k) {
  double q = 1.0;
  CompensatedSum s;
  double prev = 0.0;
  for (std::int64_t i = 1; i <= k; ++i) {
    const double t = static_cast<double>(i) * q;
    s += t;
    if ((t < prev && t < 1e-18 * s.value()) || t == 0.0) break;
    prev = t;
    q *= static_cast<double>(k - i) / lambda;
  }
  return s.value();
}

}  // namespace

SteinTarget SteinTarget::set(std::vector<std::int64_t> pts) {
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  return {std::move(pts), false, 0, 0};
}

bool SteinTarget::contains(std::int64_t k) const {
  if (is_interval) return k >= lo && k <= hi;
  return std::binary_search(points.begin(), points.end(), k);
}

double g_singleton(double lambda, std::int64_t a, std::int64_t k) {
  check_lambda(lambda);
  if (k <= 0 || a < 0) return 0.0;
  const double lp = poisson_log_pmf(lambda, a) - std::log(lambda);
  if (k >= a + 1) return std::exp(lp + log_upper_tail_ratio(lambda, k - 1));
  return -std::exp(lp + log_lower_tail_ratio(lambda, k - 1));
}

double poisson_log_range_mass(double lambda, std::int64_t x, std::int64_t y) {
  check_lambda(lambda);
  x = std::max<std::int64_t>(x, 0);
  if (y < x) return kNegInf;
  if (y != kUnbounded && y - x <= 64) {
    std::vector<double> lp;
    for (std::int64_t j = x; j <= y; ++j) lp.push_back(poisson_log_pmf(lambda, j));
    const double top = *std::max_element(lp.begin(), lp.end());
    CompensatedSum s;
    for (double v : lp) s += std::exp(v - top);
    return top + std::log(s.value());
  }
  const auto log_sf = [&](std::int64_t m) {
    return poisson_log_pmf(lambda, m) + log_upper_tail_ratio(lambda, m);
  };
  const auto log_cdf = [&](std::int64_t m) {
    return m < 0 ? kNegInf : poisson_log_pmf(lambda, m) + log_lower_tail_ratio(lambda, m);
  };
  if (static_cast<double>(x) > lambda) {
    const double a = log_sf(x - 1);
    if (y == kUnbounded) return a;
    return a + std::log1p(-std::exp(log_sf(y) - a));
  }
  if (y != kUnbounded && static_cast<double>(y) < lambda) {
    const double a = log_cdf(y);
    return a + std::log1p(-std::exp(log_cdf(x - 1) - a));
  }
  const double upper = (y == kUnbounded) ? 0.0 : poisson_sf(lambda, y);
  return std::log(std::max(0.0, (1.0 - poisson_cdf(lambda, x - 1)) - upper));
}

double poisson_range_mass(double lambda, std::int64_t x, std::int64_t y) {
  return std::exp(poisson_log_range_mass(lambda, x, y));
}

double poisson_target_mass(double lambda, const SteinTarget& target) {
  if (target.is_interval) return poisson_range_mass(lambda, target.lo, target.hi);
  CompensatedSum s;
  for (auto a : target.points) {
    if (a >= 0) s += poisson_pmf(lambda, a);
  }
  return s.value();
}

SteinSolution::SteinSolution(double lambda, SteinTarget target)
    : lambda_(lambda), target_(std::move(target)) {
  check_lambda(lambda);
  if (target_.is_interval) {
    mass_ = poisson_range_mass(lambda_, target_.lo, target_.hi);
    return;
  }
  auto& pts = target_.points;
  require(std::is_sorted(pts.begin(), pts.end()) &&
              std::adjacent_find(pts.begin(), pts.end()) == pts.end(),
          ErrorKind::Domain, "target points must be sorted and distinct");
  require(pts.size() <= 1000000, ErrorKind::Domain, "target set larger than 10^6 points");
  std::vector<double> lp(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) lp[i] = pts[i] < 0 ? kNegInf : poisson_log_pmf(lambda_, pts[i]);
  log_prefix_.assign(pts.size() + 1, kNegInf);
  log_suffix_.assign(pts.size() + 1, kNegInf);
  for (std::size_t i = 0; i < pts.size(); ++i) log_prefix_[i + 1] = log_add(log_prefix_[i], lp[i]);
  for (std::size_t i = pts.size(); i-- > 0;) log_suffix_[i] = log_add(log_suffix_[i + 1], lp[i]);
  mass_ = std::exp(log_prefix_.back());
}

std::pair<double, double> SteinSolution::split_mass(std::int64_t k) const {
  if (target_.is_interval) {
    const std::int64_t below_hi = std::min(target_.hi, k - 1);
    const std::int64_t above_lo = std::max(target_.lo, k);
    return {poisson_log_range_mass(lambda_, target_.lo, below_hi),
            poisson_log_range_mass(lambda_, above_lo, target_.hi)};
  }
  const auto& pts = target_.points;
  const auto i = static_cast<std::size_t>(std::lower_bound(pts.begin(), pts.end(), k) - pts.begin());
  return {log_prefix_[i], log_suffix_[i]};
}

double SteinSolution::g(std::int64_t k) const {
  if (k <= 0) return 0.0;
  const auto [below, above] = split_mass(k);
  double up = 0.0;
  double down = 0.0;
  if (below > kNegInf) up = std::exp(below + log_upper_tail_ratio(lambda_, k - 1));
  if (above > kNegInf) down = std::exp(above + log_lower_tail_ratio(lambda_, k - 1));
  return (up - down) / lambda_;
}

double g_target(double lambda, const SteinTarget& target, std::int64_t k) {
  return SteinSolution(lambda, target).g(k);
}

double g_set_by_singletons(double lambda, std::span<const std::int64_t> points, std::int64_t k) {
  CompensatedSum s;
  for (auto a : points) s += g_singleton(lambda, a, k);
  return s.value();
}

double g_set(double lambda, std::span<const std::int64_t> points, std::int64_t k) {
  check_lambda(lambda);
  require(points.size() <= 1000000, ErrorKind::Domain, "target set larger than 10^6 points");
  if (points.size() <= 256) return g_set_by_singletons(lambda, points, k);
  return g_target(lambda, SteinTarget::set({points.begin(), points.end()}), k);
}

double g_interval(double lambda, std::int64_t lo, std::int64_t hi, std::int64_t k) {
  return g_target(lambda, SteinTarget::interval(lo, hi), k);
}

double delta_g(double lambda, std::int64_t a, std::int64_t k) {
  check_lambda(lambda);
  if (k < 0 || a < 0) return 0.0;
  const double kd = static_cast<double>(k);
  if (k == 0) {
    if (a == 0) return -std::expm1(-lambda) / lambda;
    return -poisson_pmf(lambda, a) / lambda;
  }
  const double lp = poisson_log_pmf(lambda, a);
  if (k == a) {
    return exp_sum(lp + log_upper_tail_ratio(lambda, a), lp + log_lower_tail_ratio(lambda, a - 1)) /
           lambda;
  }
  if (k > a) {
    if (kd >= lambda) return -std::exp(lp) * upper_difference_series(lambda, k) / lambda;
    return -(std::exp(lp) / kd +
             (lambda - kd) / (lambda * kd) * std::exp(lp + log_upper_tail_ratio(lambda, k)));
  }
  if (kd < lambda) return -std::exp(lp) * lower_difference_series(lambda, k) / (lambda * lambda);
  return -(std::exp(lp) / kd +
           (kd - lambda) / (lambda * kd) * std::exp(lp + log_lower_tail_ratio(lambda, k)));
}

double residual_check(double lambda, const SteinTarget& target, std::int64_t k_max) {
  require(k_max >= 1, ErrorKind::Domain, "k_max must be at least 1");
  const SteinSolution sol(lambda, target);
  const double mass = sol.target_mass();
  double worst = 0.0;
  double g_k = 0.0;
  for (std::int64_t k = 0; k <= k_max; ++k) {
    const double g_next = sol.g(k + 1);
    const double rhs = (target.contains(k) ? 1.0 : 0.0) - mass;
    const double lhs = lambda * (g_next - g_k) - (static_cast<double>(k) - lambda) * g_k;
    worst = std::max(worst, std::fabs(lhs - rhs));
    g_k = g_next;
  }
  return worst;
}

DeltaBound nonuniform_delta_bound(double lambda, std::int64_t a, std::int64_t k) {
  check_lambda(lambda);
  require(k >= 0, ErrorKind::Domain, "bound needs k >= 0");
  const double kd = static_cast<double>(k);
  const double base = kInvSqrt2e / std::pow(lambda, 1.5);
  const double l2 = lambda * lambda;
  DeltaBound b;
  if (k == a) {
    b.case_split = 1.0 / lambda;
  } else if ((k > a && kd >= lambda) || (k < a && kd < lambda)) {
    b.case_split = base;
  } else if (k > a) {
    b.case_split = poisson_pmf(lambda, a) / static_cast<double>(a + 1) + (lambda - kd) / l2;
  } else {
    b.case_split = poisson_pmf(lambda, a) / lambda + (kd - lambda) / l2;
  }
  b.simplified = base + std::fabs(lambda - kd) / l2 + (k == a ? 1.0 / lambda : 0.0);
  return b;
}

double f_translated(const TPParams& tp, std::int64_t a, std::int64_t k) {
  return g_singleton(tp.lambda, a, k - tp.shift);
}

double f_delta(const TPParams& tp, std::int64_t a, std::int64_t k) {
  return delta_g(tp.lambda, a, k - tp.shift);
}

double f_delta_bound(const TPParams& tp, std::int64_t a, std::int64_t k) {
  const double s2 = tp.sigma2;
  const double sigma = std::sqrt(s2);
  return kInvSqrt2e / (sigma * s2) + std::fabs(tp.mu - static_cast<double>(k)) / (s2 * s2) +
         (k == a + tp.shift ? 1.0 / s2 : 0.0);
}

}  // namespace stein_llt
