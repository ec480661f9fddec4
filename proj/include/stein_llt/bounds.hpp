#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "stein_llt/couplings.hpp"
#include "stein_llt/metrics.hpp"

namespace stein_llt {

// One addend of a bound. `group` numbers the displayed groups of the formula
// (several addends may share a group); `se` is the propagated Monte Carlo
// standard error, zero for exact components.
struct BoundTerm {
  int group = 0;
  std::string label;
  double value = 0.0;
  double se = 0.0;
};

struct BoundBreakdown {
  std::vector<BoundTerm> terms;
  double total = 0.0;
  double se = 0.0;
  int group_count() const;
};

// d_TV <= E Psi/sigma^2 + 2 sqrt(E R^2)/sigma + 2(Upsilon + 1)/sigma.
BoundBreakdown tv_bound_thm1_terms(const BoundComponents& c);
// d_loc <= E Psi/(sigma^3 sqrt(2e)) + E[Psi |W - mu|]/sigma^4 + sup_a E[Psi 1{W=a}]/sigma^2
//          + sqrt(E R^2)/sigma^2 (2 + 1/sqrt(2e) + sigma sup_a P(W=a)) + 2(Upsilon + 1)/sigma^2.
BoundBreakdown loc_bound_thm1_terms(const BoundComponents& c);
// Under Psi <= sigma kappa sum_{j<=k} (|W - mu|/sigma)^j + T:
// d_TV <= (kappa/sigma) sum_{j<=k} m_j + E T/sigma^2 + 2 sqrt(E R^2)/sigma + 2(Upsilon + 1)/sigma,
// with m_j = E|W - mu|^j/sigma^j.
BoundBreakdown tv_bound_cor_terms(const BoundComponents& c);
// d_loc <= (2 kappa/sigma^2) sum_{j<=k+1} m_j + (kappa/sigma^2) sup_a P(W=a) sum_{j<=k} |a-mu|^j/sigma^(j-1)
//          + 2 sqrt(E T^2)/sigma^3 + sup_a E[T 1{W=a}]/sigma^2
//          + sqrt(E R^2)/sigma^2 (3 + sigma sup_a P(W=a)) + 2(Upsilon + 1)/sigma^2.
BoundBreakdown loc_bound_cor_terms(const BoundComponents& c);

double tv_bound_thm1(const BoundComponents& c);
double loc_bound_thm1(const BoundComponents& c);
double tv_bound_cor(const BoundComponents& c);
double loc_bound_cor(const BoundComponents& c);

struct RateRecord {
  std::int64_t n = 0;
  double sigma = 0.0;
  MetricValue d_tv;
  MetricValue d_loc;
  double tv_bound = 0.0;
  double loc_bound = 0.0;
  // Monte Carlo standard error of the distances; NaN for exact records.
  double mc_se = std::numeric_limits<double>::quiet_NaN();
  // Per-record diagnostics published alongside (sup_pmf, moments, Upsilon, ...).
  std::map<std::string, double> extras;
};

struct SlopeFit {
  bool fitted = false;
  double slope = 0.0;
  double intercept = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  double r_squared = 0.0;
};

struct RateSeries {
  std::string label;
  std::vector<RateRecord> records;
  // ln(distance) against ln(sigma).
  SlopeFit tv_fit, loc_fit;
  // ln(distance) against ln(n).
  SlopeFit tv_fit_n, loc_fit_n;
};

struct RateFitConfig {
  std::size_t min_records = 4;
  double min_spread = 8.0;  // max n / min n
  int n_boot = 1000;
  std::uint64_t seed = 1;
};

// Least-squares fit of y on x with a residual-bootstrap 95% percentile CI.
SlopeFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y, int n_boot,
                    std::uint64_t seed);

// Sorts the records by n and fills all four fits. Refuses a fit when the
// grid is too small or too narrow, or a distance is not positive.
RateSeries rate_fit(RateSeries series, const RateFitConfig& cfg = {});

struct DominationRow {
  std::int64_t n = 0;
  bool tv_ok = true;
  bool loc_ok = true;
  double tv_margin = 0.0;   // bound + slack - (distance - 4 SE)
  double loc_margin = 0.0;
};

struct DominationReport {
  std::vector<DominationRow> rows;
  bool passed = true;
  std::string warning;
  std::vector<std::string> failures;
};

// bound + truncation slack >= distance - 4 mc_se for every record.
DominationReport domination_report(const RateSeries& series);

// Fixed CSV header and column order:
// n,sigma,d_tv,d_tv_slack,d_loc,d_loc_slack,tv_bound,loc_bound,mc_se
// `comments` are emitted first as '#'-prefixed lines.
std::string series_to_csv(const RateSeries& series, const std::vector<std::string>& comments = {});
RateSeries series_from_csv(const std::string& text);
// Full object with fits, per-record diagnostics and the scaled distances
// d_tv sigma, d_loc sigma^2 and d_loc sigma^2/sqrt(log sigma).
std::string series_to_json(const RateSeries& series, const std::vector<std::string>& comments = {});

}  // namespace stein_llt
