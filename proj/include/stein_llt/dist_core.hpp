#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace stein_llt {

// Finite pmf on the lattice {offset + step*i}. `tail_tol` bounds the mass
// that lies outside the stored support (truncation or certified rounding);
// metric routines carry it as explicit slack.
struct LatticePmf {
  std::int64_t offset = 0;
  std::int64_t step = 1;
  std::vector<double> probs;
  double tail_tol = 0.0;

  std::size_t size() const { return probs.size(); }
  std::int64_t value_at(std::size_t i) const {
    return offset + step * static_cast<std::int64_t>(i);
  }
  std::int64_t last_value() const { return value_at(probs.empty() ? 0 : probs.size() - 1); }
  // Probability of the integer x (0 off the lattice or outside the support).
  double at(std::int64_t x) const;
  double total() const;
  double mean() const;
  double variance() const;
  void validate() const;
};

LatticePmf point_mass(std::int64_t x);

// Translated Poisson TP(mu, sigma2): Z - shift ~ Poisson(lambda).
struct TPParams {
  double mu = 0.0;
  double sigma2 = 1.0;
  std::int64_t shift = 0;
  double gamma = 0.0;
  double lambda = 1.0;
};

TPParams make_tp(double mu, double sigma2);

// Floor with integer snapping: values within 1e-12 of an integer floor to it.
std::int64_t snapped_floor(double x);

// Poisson log-pmf via Loader's saddle-point split (Stirling error + deviance),
// accurate to a few ulps of the result across lambda <= 1e6, k <= 1e7.
double poisson_log_pmf(double lambda, std::int64_t k);
double poisson_pmf(double lambda, std::int64_t k);

// Ratio forms of the Poisson tails, P(X <= m) / P(m) and P(X >= m+1) / P(m),
// returned as logarithms. Each is summed outward from m where its series
// converges, and taken as the complement of the other tail otherwise.
double log_lower_tail_ratio(double lambda, std::int64_t m);
double log_upper_tail_ratio(double lambda, std::int64_t m);

// P(X <= m) and P(X > m) for X ~ Poisson(lambda).
double poisson_cdf(double lambda, std::int64_t m);
double poisson_sf(double lambda, std::int64_t m);

double tp_pmf(const TPParams& tp, std::int64_t n);

// Truncated lattice form of TP on [shift, shift + K] with omitted upper-tail
// mass <= tail_tol (recorded in the result).
LatticePmf tp_to_lattice(const TPParams& tp, double tail_tol);

double normal_density_at(double mu, double sigma2, std::int64_t n);

struct NormalDeviation {
  double value = 0.0;       // sup_n |TP{n} - normal density at n| on the scan window
  std::int64_t argmax = 0;
  std::int64_t window_lo = 0;
  std::int64_t window_hi = 0;
  bool tails_certified = false;  // both laws decay monotonically past the window
};

// Sup-distance between the TP point probabilities and the matching normal
// density on the integers.
NormalDeviation tp_normal_deviation(const TPParams& tp);

}  // namespace stein_llt
