#pragma once

#include <any>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "stein_llt/rng.hpp"

namespace stein_llt {

// One draw of an approximate Stein coupling (W, W', G, R) with D = W' - W.
struct CouplingSample {
  std::int64_t w = 0;
  std::int64_t w_prime = 0;
  double g = 0.0;
  double r = 0.0;
  std::int64_t d = 0;
  std::any aux;  // application conditioning data
};

inline CouplingSample make_sample(std::int64_t w, std::int64_t w_prime, double g, double r,
                                  std::any aux = {}) {
  return CouplingSample{w, w_prime, g, r, w_prime - w, std::move(aux)};
}

struct CouplingSpec {
  std::string name;
  std::function<CouplingSample(Rng&)> sampler;
  // E[GD | F1] as a function of the sample's aux payload.
  std::function<double(const CouplingSample&)> conditional_gd;
  // A fresh W drawn from L(W | F2), F2 read from the sample.
  std::function<std::int64_t(const CouplingSample&, Rng&)> conditional_resampler;
  double mu = 0.0;
  double sigma2 = 0.0;
  // Built as a one-sided exchangeable pair: Upsilon vanishes whenever every
  // observed D lies in {-1, 0, 1}.
  bool one_sided = false;
  // E[GD] when known in closed form (sigma2 for exact couplings); NaN otherwise.
  double exact_e_gd = std::numeric_limits<double>::quiet_NaN();
};

struct IdentityReport {
  std::uint64_t n_samples = 0;
  double sigma2 = 0.0;
  double e_gd = 0.0, e_gd_se = 0.0;
  double e_r_dev = 0.0, e_r_dev_se = 0.0;  // E[R (W - mu)]
  double gap = 0.0, gap_se = 0.0;          // E[GD] - sigma2 - E[R (W - mu)]
  double e_r = 0.0, e_r_se = 0.0;
  double e_w = 0.0, e_w_se = 0.0;
  bool d_in_unit_set = true;
  bool passed = false;
  std::string diagnostic;
};

// Monte Carlo check of E[GD] = sigma2 + E[R(W - mu)] and E[R] = 0 at 4 SE.
IdentityReport verify_identity(const CouplingSpec& spec, std::uint64_t n_samples, std::uint64_t seed,
                               int workers = 1);

struct PairDraw {
  std::int64_t w = 0;
  std::int64_t w_prime = 0;
  std::any aux;
};

using PairSampler = std::function<PairDraw(Rng&)>;
// R of the coupling as a function of the draw.
using RExtractor = std::function<double(const PairDraw&)>;

// G = (W' - W)/a on {W' > W}. `up_probability`, when given, returns
// P(D = 1 | F1) and yields E[GD | F1] = P(D = 1 | F1)/a.
CouplingSpec build_one_sided_pair(PairSampler pair_sampler, double a, RExtractor r_extractor,
                                  double mu, double sigma2,
                                  std::function<double(const PairDraw&)> up_probability = {});

// G = (W' - W)/(2a).
CouplingSpec build_exchangeable_pair(PairSampler pair_sampler, double a, RExtractor r_extractor,
                                     double mu, double sigma2);

// W = sum X_i with X_i independent of (X_j) outside neighborhoods[i]:
// W' = W - sum_{j in A_I} X_j, G = -n (X_I - mu_I), I uniform.
CouplingSpec build_local_dependence(std::function<std::vector<std::int64_t>(Rng&)> summands,
                                    std::vector<double> means,
                                    std::vector<std::vector<std::size_t>> neighborhoods,
                                    double sigma2);

// (W, W^s, mu) for a joint draw of W and its size-biased version.
CouplingSpec build_size_bias(std::function<PairDraw(Rng&)> sampler_w_ws, double mu, double sigma2);

struct Estimate {
  double value = 0.0;
  double se = 0.0;
};

struct BoundComponents {
  double mu = 0.0;
  double sigma = 0.0;
  std::uint64_t n_samples = 0;  // 0 for exactly computed components

  Estimate e_psi;
  Estimate e_psi_absdev;   // E[Psi |W - mu|]
  Estimate sup_psi_point;  // sup_a E[Psi 1{W = a}]
  Estimate e_r2;
  Estimate upsilon;
  double upsilon_bias = 0.0;    // estimated upward bias of the nested estimator
  double upsilon_plugin = 0.0;  // E|GD(D-1)| S_2(TP(mu, sigma^2))
  bool remark1 = false;         // Upsilon pinned to 0

  double kappa = 0.0;
  int k_order = 0;
  Estimate t_mean;
  Estimate t_second;
  Estimate sup_t_point;  // sup_a E[T 1{W = a}]

  Estimate sup_pmf;
  // sup_a P(W = a) sum_{j=0..k} |a - mu|^j / sigma^(j-1)
  Estimate sup_weighted_point;
  std::vector<Estimate> moments;  // E|W - mu|^j / sigma^j, j = 0..k_order+1

  Estimate e_gd;
};

struct EstimationConfig {
  std::uint64_t n_outer = 100000;
  std::uint64_t n_upsilon_outer = 200;  // outer draws fed to the nested Upsilon estimator
  std::uint64_t n_inner = 2000;
  std::uint64_t seed = 1;
  int workers = 1;
  std::size_t chunk_size = 4096;
};

// Monte Carlo estimate of every BoundComponents field. Psi uses the supplied
// conditional_gd; Upsilon the nested conditional_resampler unless the
// one-sided pair stays inside D in {-1, 0, 1}.
BoundComponents estimate_components(const CouplingSpec& spec, double kappa, int k_order,
                                    const std::function<double(const CouplingSample&)>& t_extractor,
                                    const EstimationConfig& cfg);

// Expected l1 norm of the pure sampling noise in the second difference of an
// empirical pmf with n_inner draws; the upward bias of the nested S_2 estimate.
double empirical_s2_noise_floor(const std::vector<double>& probs, std::uint64_t n_inner);

}  // namespace stein_llt
