#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "stein_llt/bounds.hpp"
#include "stein_llt/couplings.hpp"
#include "stein_llt/dist_core.hpp"
#include "stein_llt/metrics.hpp"
#include "stein_llt/rng.hpp"

namespace stein_llt {

// Square integer matrix, row-major.
struct IntMatrix {
  std::int64_t n = 0;
  std::vector<std::int64_t> a;
  std::int64_t operator()(std::int64_t i, std::int64_t j) const { return a[static_cast<std::size_t>(i * n + j)]; }
};

IntMatrix make_matrix(const std::vector<std::vector<std::int64_t>>& rows);

struct AssumptionThresholds {
  double alpha0_min = 0.05;
  double alpha1_min = 0.1;
  double alpha2_min = 0.05;  // a pair {i1, i2} is accepted when |J(i1, i2)| > alpha2_min n^2
};

struct AssumptionReport {
  double a1 = 0.0;       // max |a_ij|
  double alpha0 = 0.0;   // sqrt(sigma^2/n)/A1
  double alpha1 = 0.0;   // n1/n
  double alpha2 = 0.0;   // min |J|/n^2 over accepted pairs
  std::int64_t n1 = 0;
  std::int64_t min_n2 = 0;
  std::vector<std::pair<std::int64_t, std::int64_t>> pairs;
  std::vector<std::int64_t> pair_counts;  // |J(i1, i2)| per accepted pair
  bool a1_ok = false;  // alpha0 >= alpha0_min
  bool a2_ok = false;  // alpha1 >= alpha1_min and alpha2 >= alpha2_min
  bool greedy = true;  // alpha1 is a lower bound on the best disjoint pair set
};

// W = sum_i a_{i rho_i} for a uniform permutation rho. `matrix` is the
// shifted matrix a + m with |mu| <= n/2; W of the input is W here minus n m.
struct HoeffdingInstance {
  IntMatrix matrix;
  std::int64_t shift = 0;  // m
  std::vector<double> a_hat;
  std::vector<std::int64_t> row_sums, col_sums;
  std::int64_t total = 0;
  double mu = 0.0;
  double sigma2 = 0.0;
  double a1_bound = 0.0;
  bool degenerate = false;  // sigma2 == 0
  std::array<double, 4> t_means{};  // E T_1..E T_4
  AssumptionReport assumption_report;
};

// Centres the matrix by the integer m minimizing |mu + n m| and derives every
// field; the assumption report uses the default thresholds.
HoeffdingInstance build_instance(const IntMatrix& matrix);

// Greedy scan of pairs (i1, i2) in lexicographic order; |J| is counted over
// all column pairs from the histogram of a_{i1 j} - a_{i2 j}.
AssumptionReport check_assumptions(const HoeffdingInstance& inst, const AssumptionThresholds& th = {});

// Exact law by enumerating all n! permutations, n <= 9.
LatticePmf brute_force_pmf(const HoeffdingInstance& inst);

std::int64_t sample_w(const HoeffdingInstance& inst, Rng& rng);

// T_1 = sum a_{i rho_i}^2, T_2 = -(1/n) sum a_{i rho_i} a_{i+},
// T_3 = -(1/n) sum a_{+rho_j} a_{j rho_j}, T_4 = (W - mu)^2/n.
std::array<double, 4> t_components(const HoeffdingInstance& inst, const std::vector<std::int32_t>& rho);

// E[GD | rho] = 2 mu (W - mu)/n + T_1 + T_2 + T_3 + T_4 + mu^2/n.
double hoeffding_conditional_gd(const HoeffdingInstance& inst, const std::vector<std::int32_t>& rho);

struct HoeffdingAux {
  std::vector<std::int32_t> rho;
  std::int32_t i = 0, j = 0;
  std::int64_t w = 0;
  std::array<double, 4> t{};
};

// W' = W - a_{I rho_I} - a_{J rho_J} (I != J), W' = W - a_{I rho_I} (I = J),
// G = n (a_{I rho_J} - a_{I rho_I}), I, J iid uniform; R = 0. The resampler
// draws W from a uniform permutation with rho_I, rho_J held fixed.
CouplingSpec hoeffding_coupling(const HoeffdingInstance& inst);

// T = sum_l |T_l - E T_l|, used with kappa = 2 A1, k = 1.
double hoeffding_t_statistic(const HoeffdingInstance& inst, const CouplingSample& s);

struct TTailReport {
  std::array<TailProfile, 3> profiles;  // |T_l - E T_l| scaled by A1 sigma, l = 1..3
  std::array<double, 3> log_slope{};    // slope of ln eps(t) on t over the positive values
  std::array<bool, 3> monotone{};
  bool passed = false;  // every profile non-increasing with negative slope
};

TTailReport hoeffding_t_tails(const HoeffdingInstance& inst, const std::vector<double>& thresholds,
                              std::uint64_t n_samples, std::uint64_t seed, int workers = 1);

// Shipped families: "bernoulli" (iid Bernoulli(1/2) entries) and
// "parity_noise" ((i + j) mod 2 plus an independent Bernoulli(1/5) entry).
struct MatrixFamily {
  std::string name = "bernoulli";
  std::uint64_t seed = 1;
};

IntMatrix generate_matrix(const MatrixFamily& family, std::int64_t n);

struct HoeffdingMcConfig {
  EstimationConfig components;
  double sample_multiplier = 100.0;  // N = ceil(multiplier sigma^3) unless n_samples is set
  std::uint64_t n_samples = 0;
  double alpha = 1e-3;               // confidence level of the recorded slacks
  AssumptionThresholds thresholds;
  std::uint64_t seed = 1;
  int workers = 1;
};

// Smallest accepted Monte Carlo sample size, ceil(100 sigma^3).
std::uint64_t hoeffding_min_samples(double sigma2);

// Empirical pmf of N draws against TP(mu, sigma2). d_loc.slack carries the
// simultaneous DKW band 2 sqrt(ln(2/alpha)/(2N)), d_tv.slack the
// Bretagnolle-Huber-Carol half width; bounds are the polynomial forms from
// Monte Carlo components. Matrices failing A1/A2 and N below the floor are refused.
RateSeries hoeffding_rate_experiment(const MatrixFamily& family, const std::vector<std::int64_t>& n_grid,
                                     const HoeffdingMcConfig& cfg);

// Empirical pmf of N draws of W.
LatticePmf hoeffding_empirical_pmf(const HoeffdingInstance& inst, std::uint64_t n_samples, std::uint64_t seed,
                                   int workers = 1);

}  // namespace stein_llt
