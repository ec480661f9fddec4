#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "stein_llt/dist_core.hpp"

namespace stein_llt {

// A metric value and the extra amount it may move by once the omitted tail
// mass of the inputs is accounted for.
struct MetricValue {
  double value = 0.0;
  double slack = 0.0;
  double upper() const { return value + slack; }
};

// Both pmfs must share a lattice step; the sums run over every integer in
// the union support.
MetricValue d_tv(const LatticePmf& p, const LatticePmf& q);
MetricValue d_loc(const LatticePmf& p, const LatticePmf& q);

struct SmoothnessReport {
  int order = 1;
  double value = 0.0;
  double slack = 0.0;
  // h(first_point + i) = extremal_sign_pattern[i] attains the sup; h = 0 elsewhere.
  std::int64_t first_point = 0;
  std::vector<int> extremal_sign_pattern;
};

// S_l = sup_{|h| <= 1} |E Delta^l h(W)| = sum_j |nabla^l p(j)|, l in {1, 2, 3}.
SmoothnessReport smoothness(const LatticePmf& p, int order);

// sum_j h(j) (-1)^l nabla^l p(j), i.e. E Delta^l h(W), for h on the padded support.
double smoothness_functional(const LatticePmf& p, int order, std::int64_t first_point,
                             std::span<const double> h);

MetricValue sup_pmf(const LatticePmf& p);

// sum_k p(k) |k - center|^j for 0 <= j <= 16.
double abs_central_moment(const LatticePmf& p, int j, double center);

struct TailProfile {
  std::vector<double> thresholds;
  std::vector<double> values;  // eps(t) = E[(T/sigma) 1{T/sigma >= t}]
  std::vector<double> ci_lo;   // 95% percentile bootstrap band
  std::vector<double> ci_hi;
  double scaled_mean = 0.0;    // E[T/sigma]
  int n_boot = 0;
};

TailProfile tail_profile(std::span<const double> samples, double sigma,
                         std::span<const double> thresholds, std::uint64_t seed = 1,
                         int n_boot = 1000);

}  // namespace stein_llt
