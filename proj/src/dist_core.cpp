#include "stein_llt/dist_core.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "stein_llt/error.hpp"
#include "stein_llt/numeric.hpp"

namespace stein_llt {

namespace {

// lgamma(k+1) - (k+1/2)log k + k - log sqrt(2 pi), k = 1..15, to 20 digits.
constexpr std::array<double, 16> kStirlingError = {
    0.0,
    0.08106146679532725822,
    0.041340695955409294094,
    0.027677925684998339149,
    0.020790672103765093112,
    0.016644691189821192163,
    0.013876128823070747999,
    0.011896709945891770095,
    0.010411265261972096497,
    0.0092554621827127329177,
    0.0083305634333628712565,
    0.007573675487951840795,
    0.0069428401072095298657,
    0.0064089941880042070684,
    0.0059513701127588477356,
    0.005554733551962801371,
};

double stirling_error(double k) {
  if (k < 16.0) return kStirlingError[static_cast<std::size_t>(k)];
  constexpr double s0 = 1.0 / 12.0;
  constexpr double s1 = 1.0 / 360.0;
  constexpr double s2 = 1.0 / 1260.0;
  constexpr double s3 = 1.0 / 1680.0;
  constexpr double s4 = 1.0 / 1188.0;
  const double k2 = k * k;
  return (s0 - (s1 - (s2 - (s3 - s4 / k2) / k2) / k2) / k2) / k;
}

// Deviance term x log(x/np) + np - x, with a series when x is close to np.
double deviance(double x, double np) {
  if (std::fabs(x - np) < 0.1 * (x + np)) {
    double v = (x - np) / (x + np);
    double s = (x - np) * v;
    double ej = 2.0 * x * v;
    v *= v;
    for (int j = 1; j < 1000; ++j) {
      ej *= v;
      const double s1 = s + ej / (2 * j + 1);
      if (s1 == s) return s1;
      s = s1;
    }
    return s;
  }
  return x * std::log(x / np) + np - x;
}

void check_lambda(double lambda) {
  require(std::isfinite(lambda) && lambda > 0.0, ErrorKind::Domain,
          "poisson mean must be finite and positive");
}

// log sum_{i>=0} m(m-1)...(m-i+1) / lambda^i, valid when m + 1 <= lambda.
double log_lower_series(double lambda, std::int64_t m) {
  CompensatedSum sum(1.0);
  double t = 1.0;
  for (std::int64_t i = 0; i < m; ++i) {
    t *= static_cast<double>(m - i) / lambda;
    sum += t;
    if (t < 1e-18 * sum.value()) break;
  }
  return std::log(sum.value());
}

// log sum_{i>=1} lambda^i / ((m+1)...(m+i)), valid when m + 1 > lambda.
double log_upper_series(double lambda, std::int64_t m) {
  CompensatedSum sum;
  double t = 1.0;
  for (std::int64_t i = 1;; ++i) {
    t *= lambda / static_cast<double>(m + i);
    sum += t;
    if (t < 1e-18 * sum.value() || t == 0.0) break;
  }
  return std::log(sum.value());
}

}  // namespace

double LatticePmf::at(std::int64_t x) const {
  const std::int64_t d = x - offset;
  if (d < 0 || d % step != 0) return 0.0;
  const auto i = static_cast<std::size_t>(d / step);
  return i < probs.size() ? probs[i] : 0.0;
}

double LatticePmf::total() const {
  CompensatedSum s;
  for (double p : probs) s += p;
  return s.value();
}

double LatticePmf::mean() const {
  CompensatedSum s;
  for (std::size_t i = 0; i < probs.size(); ++i) s += probs[i] * static_cast<double>(value_at(i));
  return s.value() / total();
}

double LatticePmf::variance() const {
  const double m = mean();
  CompensatedSum s;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double d = static_cast<double>(value_at(i)) - m;
    s += probs[i] * d * d;
  }
  return s.value() / total();
}

void LatticePmf::validate() const {
  require(step >= 1, ErrorKind::Domain, "lattice step must be positive");
  require(!probs.empty(), ErrorKind::Domain, "pmf has empty support");
  require(std::isfinite(tail_tol) && tail_tol >= 0.0 && tail_tol < 1.0, ErrorKind::Domain,
          "tail_tol must lie in [0, 1)");
  for (double p : probs) {
    require(std::isfinite(p) && p >= 0.0, ErrorKind::Domain,
            "pmf probabilities must be finite and non-negative");
  }
  const double t = total();
  constexpr double kRound = 1e-9;
  require(t <= 1.0 + kRound && t >= 1.0 - tail_tol - kRound, ErrorKind::Domain,
          "pmf mass " + std::to_string(t) + " is outside [1 - tail_tol, 1]");
}

LatticePmf point_mass(std::int64_t x) { return LatticePmf{x, 1, {1.0}, 0.0}; }

std::int64_t snapped_floor(double x) {
  require(std::isfinite(x), ErrorKind::Domain, "floor of a non-finite value");
  const double r = std::round(x);
  if (std::fabs(x - r) < 1e-12) return static_cast<std::int64_t>(r);
  return static_cast<std::int64_t>(std::floor(x));
}

TPParams make_tp(double mu, double sigma2) {
  require(std::isfinite(mu), ErrorKind::Domain, "mu must be finite");
  require(std::isfinite(sigma2) && sigma2 > 0.0, ErrorKind::Domain, "sigma2 must be positive");
  TPParams tp;
  tp.mu = mu;
  tp.sigma2 = sigma2;
  const double x = mu - sigma2;
  tp.shift = snapped_floor(x);
  const double g = x - static_cast<double>(tp.shift);
  tp.gamma = std::fabs(x - std::round(x)) < 1e-12 ? 0.0 : std::clamp(g, 0.0, std::nextafter(1.0, 0.0));
  tp.lambda = sigma2 + tp.gamma;
  return tp;
}

double poisson_log_pmf(double lambda, std::int64_t k) {
  check_lambda(lambda);
  if (k < 0) return kNegInf;
  if (k == 0) return -lambda;
  const double x = static_cast<double>(k);
  return -stirling_error(x) - deviance(x, lambda) -
         0.5 * std::log(2.0 * std::numbers::pi * x);
}

double poisson_pmf(double lambda, std::int64_t k) { return std::exp(poisson_log_pmf(lambda, k)); }

double log_lower_tail_ratio(double lambda, std::int64_t m) {
  check_lambda(lambda);
  require(m >= 0, ErrorKind::Domain, "lower tail ratio needs m >= 0");
  if (static_cast<double>(m) + 1.0 <= lambda) return log_lower_series(lambda, m);
  const double lp = poisson_log_pmf(lambda, m);
  const double upper = std::exp(lp + log_upper_series(lambda, m));
  return std::log1p(-upper) - lp;
}

double log_upper_tail_ratio(double lambda, std::int64_t m) {
  check_lambda(lambda);
  require(m >= 0, ErrorKind::Domain, "upper tail ratio needs m >= 0");
  if (static_cast<double>(m) + 1.0 > lambda) return log_upper_series(lambda, m);
  const double lp = poisson_log_pmf(lambda, m);
  const double lower = std::exp(lp + log_lower_series(lambda, m));
  return std::log1p(-lower) - lp;
}

double poisson_cdf(double lambda, std::int64_t m) {
  check_lambda(lambda);
  if (m < 0) return 0.0;
  const double lp = poisson_log_pmf(lambda, m);
  if (static_cast<double>(m) + 1.0 <= lambda) return std::exp(lp + log_lower_series(lambda, m));
  return -std::expm1(lp + log_upper_series(lambda, m));
}

double poisson_sf(double lambda, std::int64_t m) {
  check_lambda(lambda);
  if (m < 0) return 1.0;
  const double lp = poisson_log_pmf(lambda, m);
  if (static_cast<double>(m) + 1.0 > lambda) return std::exp(lp + log_upper_series(lambda, m));
  return -std::expm1(lp + log_lower_series(lambda, m));
}

double tp_pmf(const TPParams& tp, std::int64_t n) {
  if (n < tp.shift) return 0.0;
  return poisson_pmf(tp.lambda, n - tp.shift);
}

LatticePmf tp_to_lattice(const TPParams& tp, double tail_tol) {
  require(tail_tol > 0.0 && tail_tol <= 1e-6, ErrorKind::Domain, "tail_tol must lie in (0, 1e-6]");
  const double sd = std::sqrt(tp.lambda);
  auto k = static_cast<std::int64_t>(std::ceil(tp.lambda + 12.0 * sd));
  const auto widen = static_cast<std::int64_t>(std::max(1.0, std::ceil(sd)));
  double omitted = poisson_sf(tp.lambda, k);
  while (omitted > tail_tol) {
    k += widen;
    omitted = poisson_sf(tp.lambda, k);
  }
  LatticePmf out;
  out.offset = tp.shift;
  out.step = 1;
  out.probs.resize(static_cast<std::size_t>(k) + 1);
  for (std::int64_t j = 0; j <= k; ++j) out.probs[static_cast<std::size_t>(j)] = poisson_pmf(tp.lambda, j);
  out.tail_tol = omitted;
  return out;
}

double normal_density_at(double mu, double sigma2, std::int64_t n) {
  require(std::isfinite(sigma2) && sigma2 > 0.0, ErrorKind::Domain, "sigma2 must be positive");
  const double d = static_cast<double>(n) - mu;
  return std::exp(-d * d / (2.0 * sigma2)) / std::sqrt(2.0 * std::numbers::pi * sigma2);
}

NormalDeviation tp_normal_deviation(const TPParams& tp) {
  const double sd = std::sqrt(tp.sigma2);
  NormalDeviation out;
  // Below the shift the TP mass is zero, so the gap there is the normal
  // density itself, which peaks at shift - 1 on that side.
  out.window_lo = std::max(tp.shift - 1, static_cast<std::int64_t>(std::floor(tp.mu - 12.0 * sd)));
  out.window_hi = static_cast<std::int64_t>(std::ceil(tp.mu + 12.0 * sd));
  out.argmax = out.window_lo;
  for (std::int64_t n = out.window_lo; n <= out.window_hi; ++n) {
    const double d = std::fabs(tp_pmf(tp, n) - normal_density_at(tp.mu, tp.sigma2, n));
    if (d > out.value) {
      out.value = d;
      out.argmax = n;
    }
  }
  // Past the window both laws are monotone (the window contains both modes),
  // so the gap beyond an endpoint is bounded by the larger endpoint value.
  const auto tp_mode = tp.shift + static_cast<std::int64_t>(std::floor(tp.lambda));
  const bool modes_inside = out.window_lo <= std::min<double>(tp_mode - 1, tp.mu) &&
                            out.window_hi >= std::max<double>(tp_mode, tp.mu);
  const double edge = std::max({tp_pmf(tp, out.window_lo), normal_density_at(tp.mu, tp.sigma2, out.window_lo),
                                tp_pmf(tp, out.window_hi), normal_density_at(tp.mu, tp.sigma2, out.window_hi)});
  out.tails_certified = modes_inside && edge <= out.value;
  return out;
}

}  // namespace stein_llt
