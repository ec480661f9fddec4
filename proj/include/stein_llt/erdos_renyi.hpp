#pragma once

#include <cstdint>
#include <vector>

#include "stein_llt/bounds.hpp"
#include "stein_llt/couplings.hpp"
#include "stein_llt/dist_core.hpp"
#include "stein_llt/rng.hpp"

namespace stein_llt {

// Isolated vertices W in G(n, p).
struct ERInstance {
  std::int64_t n = 0;
  double p = 0.0;
  double lambda_edge = 0.0;  // n p
  double mu = 0.0;           // n (1-p)^(n-1)
  double sigma2 = 0.0;       // n (1-p)^(n-1) [1 + (n p - 1)(1-p)^(n-2)]
};

ERInstance er_instance(std::int64_t n, double p);

// E W_d = n C(n-1, d) p^d (1-p)^(n-1-d), the mean number of degree-d vertices.
double er_mean_degree_count(std::int64_t n, double p, int d);

struct ExactIsolatedPmf {
  LatticePmf pmf;                     // tail_tol = sum of the certified entry errors
  std::vector<double> entry_error;    // certified |computed - exact| per entry
  double max_entry_error = 0.0;
  long precision_bits = 0;
};

// P(W = k) = C(n,k) sum_j (-1)^j C(n-k,j) q^{m(k+j)}, q = 1-p,
// m(t) = t(n-t) + t(t-1)/2, summed in MPFR with a running error bound.
// precision_bits = 0 selects 64 + 2n. Fewer than 64 + 2n bits, or a
// certified entry error above 1e-14, raises a precision error.
ExactIsolatedPmf exact_isolated_pmf(std::int64_t n, double p, long precision_bits = 0);

struct IsolatedDraw {
  std::int64_t w = 0;   // isolated vertices
  std::int64_t w1 = 0;  // degree-1 vertices
};

// One G(n, p) draw; edges are visited by geometric skipping over vertex pairs.
IsolatedDraw sample_isolated(std::int64_t n, double p, Rng& rng);

// Conditioning data of one size-bias draw: the chosen vertex's neighbourhood
// sizes, which fix D and the law of W given every edge touching {I} u N1.
struct ERAux {
  std::int64_t w = 0;
  std::int64_t w1 = 0;
  std::int64_t n1 = 0;  // |N1|: neighbours of I
  std::int64_t n2 = 0;  // |N2|: vertices at distance 2 from I
};

// Size-bias coupling: erase every edge at a uniform vertex I. G = mu, R = 0,
// E[GD | graph] = (mu/n)(W1 + n - W). The resampler redraws the edges not
// meeting {I} u N1. Degenerate laws (sigma2 = 0) are refused.
CouplingSpec er_coupling(std::int64_t n, double p);

// T = |W1 - E W1| for the polynomial Psi bound with kappa = 1, k = 1.
double er_t_statistic(const CouplingSample& s, std::int64_t n, double p);

struct TailCheckRow {
  double t = 0.0;
  double empirical = 0.0;
  double se = 0.0;
  double bound = 0.0;
  bool below = true;       // empirical <= bound
  bool consistent = true;  // empirical - 4 se <= bound
};

struct TailCheckReport {
  int d = 0;
  double mean = 0.0;
  std::uint64_t n_samples = 0;
  std::vector<TailCheckRow> rows;
  bool passed = true;
};

// Empirical P(|W_d - E W_d| > t) against 2 exp(-t^2/(4(n - E W_d) + 4t/3)), d in {0, 1}.
TailCheckReport degree_count_tail_check(std::int64_t n, double p, int d, const std::vector<double>& t_grid,
                                        std::uint64_t n_samples, std::uint64_t seed, int workers = 1);

// Exact distances for p = lambda/n against TP(mu, sigma2); bounds from Monte
// Carlo components of er_coupling (polynomial form as tv/loc bound, the
// general form in extras).
RateSeries er_rate_experiment(double lambda, const std::vector<std::int64_t>& n_grid,
                              const EstimationConfig& mc);

}  // namespace stein_llt
