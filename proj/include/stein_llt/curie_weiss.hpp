#pragma once

#include <cstdint>
#include <vector>

#include "stein_llt/bounds.hpp"
#include "stein_llt/couplings.hpp"
#include "stein_llt/dist_core.hpp"

namespace stein_llt {

// Magnetization W = sum S_i of the Curie-Weiss Gibbs measure
//   P(S = s) ~ exp((beta/n) sum_{i<j} s_i s_j + h sum_i s_i)
// and its span-1 relabelling W~ = (W + (n mod 2))/2.
struct CWInstance {
  std::int64_t n = 0;
  double beta = 0.0;
  double h = 0.0;
  double m_h = 0.0;
  double a_coef = 0.0;  // (1 - beta(1 - m_h^2))/n
  LatticePmf exact_pmf;  // span 2 on {-n, ..., n}
  double mu_n = 0.0;
  double sigma_n2 = 0.0;
};

// Non-negative root of m = tanh(beta m + h). Accepts beta >= 0, h >= 0 with
// h > 0 or beta < 1; anything else is outside the single-phase regime.
double solve_mh(double beta, double h);

LatticePmf cw_exact_pmf(std::int64_t n, double beta, double h);
CWInstance cw_instance(std::int64_t n, double beta, double h);

// Span-2 pmf of W on the parity class of n to the span-1 pmf of W~.
LatticePmf tilde_transform(const LatticePmf& span2, std::int64_t n);

struct TransitionProbs {
  double p_up = 0.0;    // P(W' = w + 2 | W = w)
  double p_down = 0.0;  // P(W' = w - 2 | W = w)
};

// One step of the single-site heat-bath Gibbs sampler, seen through W.
TransitionProbs gibbs_transition_probs(std::int64_t n, double beta, double h, std::int64_t w);

// Smallest C with |tanh(beta x + h) - tanh(beta m + h) - beta (x - m)(1 - m^2)| <= C (x - m)^2
// on the lattice x = w/n and a fine grid of [-1, 1].
double cw_taylor_constant(double beta, double h, std::int64_t n);

// R'(w) = beta/(1 - beta(1 - m^2)) + |mu_n - n m| + C n (w/n - m)^2/(1 - beta(1 - m^2)).
double cw_r_majorant(const CWInstance& inst, double taylor_c, std::int64_t w);

// The coupling's exact remainder on the W~ scale,
// R = -((p_up - p_down)/a + (w~ - mu~)), a function of W alone.
double cw_exact_remainder(const CWInstance& inst, std::int64_t w);

struct CWExact {
  BoundComponents components;  // on the W~ scale, no Monte Carlo
  double e_r2_exact = 0.0;     // E R^2 of the exact remainder
  double e_r2_majorant = 0.0;  // E (R'/2)^2, used in `components`
  double taylor_c = 0.0;
  double stationarity_residual = 0.0;  // |sum_w pi(w) E[W' - W | w]|
  double identity_residual = 0.0;      // |E GD - sigma~^2 - E R (W~ - mu~)|
};

// Components for the one-sided Gibbs pair on W~, computed as exact sums
// against the pmf: Psi = |p_up(W) - E p_up|/a, Upsilon = 0, kappa from the
// tightest Psi <= kappa (sigma + |W~ - mu~|), T = 0.
CWExact cw_exact_components(const CWInstance& inst);

// Monte Carlo form of the same coupling (W drawn from the exact pmf).
CouplingSpec cw_coupling(const CWInstance& inst);

// TP(n m/2, n (1 - m^2)/(4 (1 - beta + beta m^2))).
TPParams cw_limit_tp(std::int64_t n, double beta, double h);

enum class CWTarget {
  Limit,          // TP with the limiting mean and variance above
  MomentMatched,  // TP(E W~, Var W~), the law the bounds refer to
};

// One exact record per n. Distances are taken against `target`; the bounds
// come from cw_exact_components. Both targets' distances are kept in extras.
RateSeries cw_rate_experiment(double beta, double h, const std::vector<std::int64_t>& n_grid,
                              CWTarget target = CWTarget::Limit, int workers = 1);

}  // namespace stein_llt
