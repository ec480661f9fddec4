#ifndef STEIN_LLT_H
#define STEIN_LLT_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(__GNUC__)
#define STEIN_LLT_API __attribute__((visibility("default")))
#else
#define STEIN_LLT_API
#endif

typedef enum {
  STEIN_LLT_OK = 0,
  STEIN_LLT_E_DOMAIN = 1,       /* invalid parameters or inputs */
  STEIN_LLT_E_UNSUPPORTED = 2,  /* operation not available for this input */
  STEIN_LLT_E_PRECISION = 3,    /* certified error above tolerance; retry with more bits */
  STEIN_LLT_E_INCOMPLETE = 4,   /* required components missing */
  STEIN_LLT_E_REFUSED = 5,      /* degenerate or under-sampled request */
  STEIN_LLT_E_IO = 6,           /* parse or serialization failure */
  STEIN_LLT_E_ARGUMENT = 7,     /* null pointer or bad enum */
  STEIN_LLT_E_INTERNAL = 8
} stein_llt_status;

/* Message of the last failure on the calling thread ("" if none). */
STEIN_LLT_API const char* stein_llt_last_error(void);
STEIN_LLT_API const char* stein_llt_status_name(stein_llt_status s);
STEIN_LLT_API const char* stein_llt_version(void);

/* Strings returned through char** are owned by the caller. */
STEIN_LLT_API void stein_llt_string_free(char* s);

/* ---- lattice pmf ---- */

typedef struct stein_llt_pmf stein_llt_pmf;

STEIN_LLT_API stein_llt_status stein_llt_pmf_create(int64_t offset, int64_t step, const double* probs, size_t size,
                                                    double tail_tol, stein_llt_pmf** out);
/* {"format": "stein_llt.pmf", "version": 1, "offset", "step", "probs", "tail_tol"};
   format/version may be omitted on input. */
STEIN_LLT_API stein_llt_status stein_llt_pmf_from_json(const char* json, stein_llt_pmf** out);
STEIN_LLT_API stein_llt_status stein_llt_pmf_to_json(const stein_llt_pmf* p, char** out);
STEIN_LLT_API stein_llt_status stein_llt_pmf_info(const stein_llt_pmf* p, int64_t* offset, int64_t* step, size_t* size,
                                                  double* tail_tol);
/* Copies min(size, capacity) probabilities. */
STEIN_LLT_API stein_llt_status stein_llt_pmf_probs(const stein_llt_pmf* p, double* out, size_t capacity);
STEIN_LLT_API stein_llt_status stein_llt_pmf_moments(const stein_llt_pmf* p, double* mean, double* variance);
STEIN_LLT_API void stein_llt_pmf_free(stein_llt_pmf* p);

/* ---- translated Poisson ---- */

typedef struct {
  double mu;
  double sigma2;
  int64_t shift;
  double gamma;
  double lambda;
} stein_llt_tp_params;

STEIN_LLT_API stein_llt_status stein_llt_tp_make(double mu, double sigma2, stein_llt_tp_params* out);
STEIN_LLT_API stein_llt_status stein_llt_tp_pmf_at(const stein_llt_tp_params* tp, int64_t k, double* out);
/* Truncated to a window whose omitted mass is at most tail_tol (0 < tail_tol <= 1e-6). */
STEIN_LLT_API stein_llt_status stein_llt_tp_to_pmf(const stein_llt_tp_params* tp, double tail_tol,
                                                   stein_llt_pmf** out);

/* ---- metrics ---- */

typedef enum {
  STEIN_LLT_METRIC_TV = 0,
  STEIN_LLT_METRIC_LOC = 1,
  STEIN_LLT_METRIC_S1 = 2, /* smoothness of the first pmf; the second is ignored */
  STEIN_LLT_METRIC_S2 = 3
} stein_llt_metric;

STEIN_LLT_API stein_llt_status stein_llt_metric_eval(const stein_llt_pmf* a, const stein_llt_pmf* b,
                                                     stein_llt_metric metric, double* value, double* slack);

/* ---- Stein solutions ---- */

STEIN_LLT_API stein_llt_status stein_llt_g_singleton(double lambda, int64_t a, int64_t k, double* out);
STEIN_LLT_API stein_llt_status stein_llt_g_set(double lambda, const int64_t* points, size_t count, int64_t k,
                                               double* out);
STEIN_LLT_API stein_llt_status stein_llt_delta_g(double lambda, int64_t a, int64_t k, double* out);
STEIN_LLT_API stein_llt_status stein_llt_delta_bound(double lambda, int64_t a, int64_t k, double* case_split,
                                                     double* simplified);
/* Max residual of the Stein equation over 0 <= k <= k_max for the target set. */
STEIN_LLT_API stein_llt_status stein_llt_residual(double lambda, const int64_t* points, size_t count, int64_t k_max,
                                                  double* out);
/* 1 if value <= bound within the library's relative tolerance. */
STEIN_LLT_API int stein_llt_dominated(double value, double bound);

/* ---- rate series ---- */

typedef struct stein_llt_series stein_llt_series;

typedef struct {
  int64_t n;
  double sigma;
  double d_tv;
  double d_tv_slack;
  double d_loc;
  double d_loc_slack;
  double tv_bound;
  double loc_bound;
  double mc_se; /* NaN for exact records */
} stein_llt_record;

typedef struct {
  int fitted;
  double slope;
  double intercept;
  double ci_lo;
  double ci_hi;
  double r_squared;
} stein_llt_fit;

typedef enum {
  STEIN_LLT_FIT_TV_SIGMA = 0,
  STEIN_LLT_FIT_LOC_SIGMA = 1,
  STEIN_LLT_FIT_TV_N = 2,
  STEIN_LLT_FIT_LOC_N = 3
} stein_llt_fit_kind;

STEIN_LLT_API size_t stein_llt_series_size(const stein_llt_series* s);
STEIN_LLT_API stein_llt_status stein_llt_series_record(const stein_llt_series* s, size_t index, stein_llt_record* out);
/* Per-record diagnostic by name; E_DOMAIN if absent. */
STEIN_LLT_API stein_llt_status stein_llt_series_extra(const stein_llt_series* s, size_t index, const char* key,
                                                      double* out);
STEIN_LLT_API stein_llt_status stein_llt_series_fit(stein_llt_series* s, size_t min_records, double min_spread,
                                                    int n_boot, uint64_t seed);
STEIN_LLT_API stein_llt_status stein_llt_series_get_fit(const stein_llt_series* s, stein_llt_fit_kind kind,
                                                        stein_llt_fit* out);
/* comments: newline-separated lines written as "# " headers (may be NULL). */
STEIN_LLT_API stein_llt_status stein_llt_series_to_csv(const stein_llt_series* s, const char* comments, char** out);
STEIN_LLT_API stein_llt_status stein_llt_series_to_json(const stein_llt_series* s, const char* comments, char** out);
STEIN_LLT_API stein_llt_status stein_llt_series_from_csv(const char* text, stein_llt_series** out);
/* passed = 1 when every bound dominates its distance; report is JSON. */
STEIN_LLT_API stein_llt_status stein_llt_series_domination(const stein_llt_series* s, int* passed, char** report);
STEIN_LLT_API void stein_llt_series_free(stein_llt_series* s);

/* ---- Monte Carlo configuration ---- */

typedef struct {
  uint64_t n_outer;
  uint64_t n_upsilon_outer;
  uint64_t n_inner;
  uint64_t seed;
  int workers;
} stein_llt_mc_config;

STEIN_LLT_API void stein_llt_mc_config_default(stein_llt_mc_config* cfg);

/* ---- Curie-Weiss ---- */

typedef enum { STEIN_LLT_CW_LIMIT = 0, STEIN_LLT_CW_MATCHED = 1 } stein_llt_cw_target;

/* Exact pmf of W~ and a JSON report of the exact bound components. */
STEIN_LLT_API stein_llt_status stein_llt_cw_exact(int64_t n, double beta, double h, stein_llt_pmf** pmf,
                                                  char** report);
STEIN_LLT_API stein_llt_status stein_llt_cw_rate(double beta, double h, const int64_t* grid, size_t count,
                                                 stein_llt_cw_target target, int workers, stein_llt_series** out);
/* Exact P(|W - n m| >= t sqrt(n)) for each t, as JSON. */
STEIN_LLT_API stein_llt_status stein_llt_cw_tail(int64_t n, double beta, double h, const double* t, size_t count,
                                                 char** report);

/* ---- Erdos-Renyi isolated vertices ---- */

/* precision_bits = 0 selects 64 + 2n. */
STEIN_LLT_API stein_llt_status stein_llt_er_exact(int64_t n, double p, long precision_bits, stein_llt_pmf** pmf,
                                                  char** report);
STEIN_LLT_API stein_llt_status stein_llt_er_rate(double lambda, const int64_t* grid, size_t count,
                                                 const stein_llt_mc_config* cfg, stein_llt_series** out);
STEIN_LLT_API stein_llt_status stein_llt_er_tail(int64_t n, double p, int d, const double* t, size_t count,
                                                 uint64_t n_samples, uint64_t seed, int workers, int* passed,
                                                 char** report);
/* Monte Carlo check of E[GD] = sigma^2 for the size-bias coupling. */
STEIN_LLT_API stein_llt_status stein_llt_er_identity(int64_t n, double p, uint64_t n_samples, uint64_t seed,
                                                     int workers, int* passed, char** report);

/* ---- Hoeffding permutation statistic ---- */

typedef struct stein_llt_hoeffding stein_llt_hoeffding;

/* Row-major n x n integer matrix. */
STEIN_LLT_API stein_llt_status stein_llt_hoeffding_from_matrix(const int64_t* a, int64_t n, stein_llt_hoeffding** out);
/* family: "bernoulli" or "parity_noise". */
STEIN_LLT_API stein_llt_status stein_llt_hoeffding_from_family(const char* family, uint64_t family_seed, int64_t n,
                                                               stein_llt_hoeffding** out);
/* mu, sigma2, shift, A1, assumption report, E T_l. */
STEIN_LLT_API stein_llt_status stein_llt_hoeffding_info(const stein_llt_hoeffding* h, char** report);
STEIN_LLT_API stein_llt_status stein_llt_hoeffding_brute_force(const stein_llt_hoeffding* h, stein_llt_pmf** out);
STEIN_LLT_API stein_llt_status stein_llt_hoeffding_empirical(const stein_llt_hoeffding* h, uint64_t n_samples,
                                                             uint64_t seed, int workers, stein_llt_pmf** out);
STEIN_LLT_API stein_llt_status stein_llt_hoeffding_identity(const stein_llt_hoeffding* h, uint64_t n_samples,
                                                            uint64_t seed, int workers, int* passed, char** report);
STEIN_LLT_API stein_llt_status stein_llt_hoeffding_tail(const stein_llt_hoeffding* h, const double* t, size_t count,
                                                        uint64_t n_samples, uint64_t seed, int workers, int* passed,
                                                        char** report);
STEIN_LLT_API void stein_llt_hoeffding_free(stein_llt_hoeffding* h);

typedef struct {
  stein_llt_mc_config mc;
  double sample_multiplier; /* N = ceil(multiplier sigma^3), at least 100 */
  uint64_t n_samples;       /* overrides the multiplier when non-zero */
  double alpha;
} stein_llt_hoeffding_config;

STEIN_LLT_API void stein_llt_hoeffding_config_default(stein_llt_hoeffding_config* cfg);
STEIN_LLT_API stein_llt_status stein_llt_hoeffding_rate(const char* family, uint64_t family_seed, const int64_t* grid,
                                                        size_t count, const stein_llt_hoeffding_config* cfg,
                                                        stein_llt_series** out);

#ifdef __cplusplus
}
#endif

#endif
