#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "stein_llt/dist_core.hpp"

namespace stein_llt {

// Solutions of the Poisson(lambda) Stein equation
//   lambda g(k+1) - k g(k) = 1{k in A} - P(A),   g(k) = 0 for k <= 0.
// Every evaluation is written as (pmf mass) x (tail ratio) so that no
// factorial-sized product is ever formed.

inline constexpr std::int64_t kUnbounded = std::numeric_limits<std::int64_t>::max();

// Target set: a sorted list of distinct points, or the interval [lo, hi]
// (hi = kUnbounded for a half-line).
struct SteinTarget {
  std::vector<std::int64_t> points;
  bool is_interval = false;
  std::int64_t lo = 0;
  std::int64_t hi = 0;

  static SteinTarget point(std::int64_t a) { return {{a}, false, 0, 0}; }
  static SteinTarget set(std::vector<std::int64_t> pts);
  static SteinTarget interval(std::int64_t lo, std::int64_t hi) { return {{}, true, lo, hi}; }
  bool contains(std::int64_t k) const;
};

double g_singleton(double lambda, std::int64_t a, std::int64_t k);

// Poisson mass of [x, y] (y may be kUnbounded), accurate relative to the
// smaller of the two tails it touches.
double poisson_range_mass(double lambda, std::int64_t x, std::int64_t y);
// Its logarithm; stays finite far in the tails where the mass underflows.
double poisson_log_range_mass(double lambda, std::int64_t x, std::int64_t y);

double poisson_target_mass(double lambda, const SteinTarget& target);

// Solution g_A for a fixed (lambda, A). Point masses of a finite A are
// cached with prefix and suffix sums, so each g(k) costs O(log |A|) plus two
// tail ratios: g(k) = (P(A below k) Ur(k-1) - P(A from k) Lr(k-1)) / lambda.
class SteinSolution {
 public:
  SteinSolution(double lambda, SteinTarget target);

  double lambda() const { return lambda_; }
  const SteinTarget& target() const { return target_; }
  double target_mass() const { return mass_; }
  double g(std::int64_t k) const;

 private:
  // Log mass of A in [0, k-1] and in [k, inf).
  std::pair<double, double> split_mass(std::int64_t k) const;

  double lambda_;
  SteinTarget target_;
  std::vector<double> log_prefix_;  // log of the pmf summed over points[0..i)
  std::vector<double> log_suffix_;  // log of the pmf summed over points[i..)
  double mass_ = 0.0;
};

double g_target(double lambda, const SteinTarget& target, std::int64_t k);
// Sum of singleton solutions; cross-check for small finite sets.
double g_set_by_singletons(double lambda, std::span<const std::int64_t> points, std::int64_t k);
// Singleton sum for |A| <= 256, tail-sum form otherwise.
double g_set(double lambda, std::span<const std::int64_t> points, std::int64_t k);
double g_interval(double lambda, std::int64_t lo, std::int64_t hi, std::int64_t k);

// Delta g_a(k) = g_a(k+1) - g_a(k), from sign-definite series in each case.
double delta_g(double lambda, std::int64_t a, std::int64_t k);

// max_{0 <= k <= k_max} |lambda Delta g(k) - (k - lambda) g(k) - (1{k in A} - P(A))|.
double residual_check(double lambda, const SteinTarget& target, std::int64_t k_max);

struct DeltaBound {
  double case_split = 0.0;
  double simplified = 0.0;
};

DeltaBound nonuniform_delta_bound(double lambda, std::int64_t a, std::int64_t k);

// f_a(k) = g_a(k - s) for the translated Poisson with parameters tp.
double f_translated(const TPParams& tp, std::int64_t a, std::int64_t k);
double f_delta(const TPParams& tp, std::int64_t a, std::int64_t k);
// 1/(sigma^3 sqrt(2e)) + |mu - k|/sigma^4 + 1{k = a + s}/sigma^2.
double f_delta_bound(const TPParams& tp, std::int64_t a, std::int64_t k);

// Relative slack used when comparing a computed quantity against a bound.
inline constexpr double kBoundRelTol = 1e-12;
inline bool dominated(double value, double bound) {
  return value <= bound * (1.0 + kBoundRelTol) + 1e-300;
}

}  // namespace stein_llt
