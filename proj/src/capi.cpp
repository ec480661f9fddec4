#include "stein_llt/stein_llt.h"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <limits>
#include <memory>
#include <new>
#include <string>
#include <vector>

#include "json.hpp"
#include "stein_llt/bounds.hpp"
#include "stein_llt/couplings.hpp"
#include "stein_llt/curie_weiss.hpp"
#include "stein_llt/dist_core.hpp"
#include "stein_llt/erdos_renyi.hpp"
#include "stein_llt/error.hpp"
#include "stein_llt/hoeffding.hpp"
#include "stein_llt/metrics.hpp"
#include "stein_llt/numeric.hpp"
#include "stein_llt/stein_solver.hpp"

using namespace stein_llt;
using json = nlohmann::json;

struct stein_llt_pmf {
  LatticePmf pmf;
};

struct stein_llt_series {
  RateSeries series;
};

struct stein_llt_hoeffding {
  HoeffdingInstance inst;
};

namespace {

constexpr const char* kVersion = "1.0.0";

thread_local std::string last_error;

stein_llt_status status_of(ErrorKind k) {
  switch (k) {
    case ErrorKind::Domain: return STEIN_LLT_E_DOMAIN;
    case ErrorKind::Unsupported: return STEIN_LLT_E_UNSUPPORTED;
    case ErrorKind::Precision: return STEIN_LLT_E_PRECISION;
    case ErrorKind::Incomplete: return STEIN_LLT_E_INCOMPLETE;
    case ErrorKind::Refused: return STEIN_LLT_E_REFUSED;
    case ErrorKind::Io: return STEIN_LLT_E_IO;
  }
  return STEIN_LLT_E_INTERNAL;
}

struct ArgumentError {
  std::string what;
};

void need(bool ok, const char* what) {
  if (!ok) throw ArgumentError{what};
}

template <class F>
stein_llt_status guard(F&& f) {
  last_error.clear();
  try {
    f();
    return STEIN_LLT_OK;
  } catch (const Error& e) {
    last_error = e.what();
    return status_of(e.kind());
  } catch (const ArgumentError& e) {
    last_error = e.what;
    return STEIN_LLT_E_ARGUMENT;
  } catch (const json::exception& e) {
    last_error = e.what();
    return STEIN_LLT_E_IO;
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return STEIN_LLT_E_INTERNAL;
  } catch (const std::exception& e) {
    last_error = e.what();
    return STEIN_LLT_E_INTERNAL;
  } catch (...) {
    last_error = "unknown failure";
    return STEIN_LLT_E_INTERNAL;
  }
}

char* dup(const std::string& s) {
  auto* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

json num(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

json breakdown_json(const BoundBreakdown& b) {
  auto terms = json::array();
  for (const auto& t : b.terms) {
    terms.push_back({{"group", t.group}, {"label", t.label}, {"value", num(t.value)}, {"se", num(t.se)}});
  }
  return {{"total", num(b.total)}, {"se", num(b.se)}, {"terms", terms}};
}

json metric_json(const MetricValue& m) { return {{"value", num(m.value)}, {"slack", num(m.slack)}}; }

json identity_json(const IdentityReport& r) {
  return {{"n_samples", r.n_samples},  {"sigma2", num(r.sigma2)},     {"e_gd", num(r.e_gd)},
          {"e_gd_se", num(r.e_gd_se)}, {"e_r_dev", num(r.e_r_dev)},   {"e_r_dev_se", num(r.e_r_dev_se)},
          {"gap", num(r.gap)},         {"gap_se", num(r.gap_se)},     {"e_r", num(r.e_r)},
          {"e_r_se", num(r.e_r_se)},   {"e_w", num(r.e_w)},           {"e_w_se", num(r.e_w_se)},
          {"d_in_unit_set", r.d_in_unit_set}, {"passed", r.passed}, {"diagnostic", r.diagnostic}};
}

std::vector<std::string> split_lines(const char* text) {
  std::vector<std::string> out;
  if (!text || !*text) return out;
  std::string cur;
  for (const char* c = text; *c; ++c) {
    if (*c == '\n') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += *c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

std::vector<std::int64_t> grid_of(const int64_t* grid, size_t count) {
  need(grid != nullptr && count > 0, "empty n grid");
  return std::vector<std::int64_t>(grid, grid + count);
}

std::vector<double> doubles_of(const double* v, size_t count) {
  need(v != nullptr && count > 0, "empty threshold grid");
  return std::vector<double>(v, v + count);
}

EstimationConfig estimation_of(const stein_llt_mc_config* cfg) {
  EstimationConfig e;
  if (cfg) {
    e.n_outer = cfg->n_outer;
    e.n_upsilon_outer = cfg->n_upsilon_outer;
    e.n_inner = cfg->n_inner;
    e.seed = cfg->seed;
    e.workers = cfg->workers;
  }
  require(e.n_outer > 0 && e.n_inner > 0, ErrorKind::Domain, "sample counts must be positive");
  require(e.workers >= 1, ErrorKind::Domain, "workers must be >= 1");
  return e;
}

TPParams tp_of(const stein_llt_tp_params* p) {
  need(p != nullptr, "null translated Poisson parameters");
  TPParams tp;
  tp.mu = p->mu;
  tp.sigma2 = p->sigma2;
  tp.shift = p->shift;
  tp.gamma = p->gamma;
  tp.lambda = p->lambda;
  require(std::isfinite(tp.lambda) && tp.lambda > 0.0, ErrorKind::Domain, "translated Poisson needs lambda > 0");
  return tp;
}

void check_lambda(double lambda) {
  require(std::isfinite(lambda) && lambda > 0.0, ErrorKind::Domain, "lambda must be positive and finite");
}

json tail_profile_json(const TailProfile& p) {
  auto arr = [](const std::vector<double>& v) {
    auto a = json::array();
    for (double x : v) a.push_back(num(x));
    return a;
  };
  return {{"thresholds", arr(p.thresholds)}, {"values", arr(p.values)}, {"ci_lo", arr(p.ci_lo)},
          {"ci_hi", arr(p.ci_hi)},           {"scaled_mean", num(p.scaled_mean)}, {"n_boot", p.n_boot}};
}

}  // namespace

extern "C" {

const char* stein_llt_last_error(void) { return last_error.c_str(); }

const char* stein_llt_status_name(stein_llt_status s) {
  switch (s) {
    case STEIN_LLT_OK: return "ok";
    case STEIN_LLT_E_DOMAIN: return "domain";
    case STEIN_LLT_E_UNSUPPORTED: return "unsupported";
    case STEIN_LLT_E_PRECISION: return "precision";
    case STEIN_LLT_E_INCOMPLETE: return "incomplete";
    case STEIN_LLT_E_REFUSED: return "refused";
    case STEIN_LLT_E_IO: return "io";
    case STEIN_LLT_E_ARGUMENT: return "argument";
    case STEIN_LLT_E_INTERNAL: return "internal";
  }
  return "unknown";
}

const char* stein_llt_version(void) { return kVersion; }

void stein_llt_string_free(char* s) { std::free(s); }

// ---- pmf ----

stein_llt_status stein_llt_pmf_create(int64_t offset, int64_t step, const double* probs, size_t size,
                                      double tail_tol, stein_llt_pmf** out) {
  return guard([&] {
    need(out != nullptr && (probs != nullptr || size == 0), "null argument");
    LatticePmf p;
    p.offset = offset;
    p.step = step;
    p.probs.assign(probs, probs + size);
    p.tail_tol = tail_tol;
    p.validate();
    *out = new stein_llt_pmf{std::move(p)};
  });
}

stein_llt_status stein_llt_pmf_from_json(const char* text, stein_llt_pmf** out) {
  return guard([&] {
    need(text != nullptr && out != nullptr, "null argument");
    const json j = json::parse(text);
    require(j.is_object(), ErrorKind::Io, "pmf file must hold a JSON object");
    if (j.contains("format")) {
      require(j.at("format") == "stein_llt.pmf", ErrorKind::Io, "unknown pmf format tag");
    }
    if (j.contains("version")) {
      require(j.at("version") == 1, ErrorKind::Io, "unsupported pmf format version");
    }
    LatticePmf p;
    p.offset = j.at("offset").get<std::int64_t>();
    p.step = j.value("step", std::int64_t{1});
    p.probs = j.at("probs").get<std::vector<double>>();
    p.tail_tol = j.value("tail_tol", 0.0);
    p.validate();
    *out = new stein_llt_pmf{std::move(p)};
  });
}

stein_llt_status stein_llt_pmf_to_json(const stein_llt_pmf* p, char** out) {
  return guard([&] {
    need(p != nullptr && out != nullptr, "null argument");
    json j;
    j["format"] = "stein_llt.pmf";
    j["version"] = 1;
    j["offset"] = p->pmf.offset;
    j["step"] = p->pmf.step;
    j["probs"] = p->pmf.probs;
    j["tail_tol"] = p->pmf.tail_tol;
    *out = dup(j.dump());
  });
}

stein_llt_status stein_llt_pmf_info(const stein_llt_pmf* p, int64_t* offset, int64_t* step, size_t* size,
                                    double* tail_tol) {
  return guard([&] {
    need(p != nullptr, "null pmf");
    if (offset) *offset = p->pmf.offset;
    if (step) *step = p->pmf.step;
    if (size) *size = p->pmf.size();
    if (tail_tol) *tail_tol = p->pmf.tail_tol;
  });
}

stein_llt_status stein_llt_pmf_probs(const stein_llt_pmf* p, double* out, size_t capacity) {
  return guard([&] {
    need(p != nullptr && (out != nullptr || capacity == 0), "null argument");
    const size_t k = std::min(capacity, p->pmf.size());
    std::copy(p->pmf.probs.begin(), p->pmf.probs.begin() + static_cast<std::ptrdiff_t>(k), out);
  });
}

stein_llt_status stein_llt_pmf_moments(const stein_llt_pmf* p, double* mean, double* variance) {
  return guard([&] {
    need(p != nullptr, "null pmf");
    if (mean) *mean = p->pmf.mean();
    if (variance) *variance = p->pmf.variance();
  });
}

void stein_llt_pmf_free(stein_llt_pmf* p) { delete p; }

// ---- translated Poisson ----

stein_llt_status stein_llt_tp_make(double mu, double sigma2, stein_llt_tp_params* out) {
  return guard([&] {
    need(out != nullptr, "null output");
    const auto tp = make_tp(mu, sigma2);
    *out = {tp.mu, tp.sigma2, tp.shift, tp.gamma, tp.lambda};
  });
}

stein_llt_status stein_llt_tp_pmf_at(const stein_llt_tp_params* tp, int64_t k, double* out) {
  return guard([&] {
    need(out != nullptr, "null output");
    *out = tp_pmf(tp_of(tp), k);
  });
}

stein_llt_status stein_llt_tp_to_pmf(const stein_llt_tp_params* tp, double tail_tol, stein_llt_pmf** out) {
  return guard([&] {
    need(out != nullptr, "null output");
    require(tail_tol > 0.0 && tail_tol <= 1e-6, ErrorKind::Domain, "tail_tol must lie in (0, 1e-6]");
    *out = new stein_llt_pmf{tp_to_lattice(tp_of(tp), tail_tol)};
  });
}

// ---- metrics ----

stein_llt_status stein_llt_metric_eval(const stein_llt_pmf* a, const stein_llt_pmf* b, stein_llt_metric metric,
                                       double* value, double* slack) {
  return guard([&] {
    need(a != nullptr && value != nullptr, "null argument");
    MetricValue m;
    switch (metric) {
      case STEIN_LLT_METRIC_TV:
        need(b != nullptr, "total variation needs two pmfs");
        m = d_tv(a->pmf, b->pmf);
        break;
      case STEIN_LLT_METRIC_LOC:
        need(b != nullptr, "local distance needs two pmfs");
        m = d_loc(a->pmf, b->pmf);
        break;
      case STEIN_LLT_METRIC_S1:
      case STEIN_LLT_METRIC_S2: {
        const auto r = smoothness(a->pmf, metric == STEIN_LLT_METRIC_S1 ? 1 : 2);
        m = {r.value, r.slack};
        break;
      }
      default:
        need(false, "unknown metric");
    }
    *value = m.value;
    if (slack) *slack = m.slack;
  });
}

// ---- Stein solutions ----

stein_llt_status stein_llt_g_singleton(double lambda, int64_t a, int64_t k, double* out) {
  return guard([&] {
    need(out != nullptr, "null output");
    check_lambda(lambda);
    *out = g_singleton(lambda, a, k);
  });
}

stein_llt_status stein_llt_g_set(double lambda, const int64_t* points, size_t count, int64_t k, double* out) {
  return guard([&] {
    need(out != nullptr && points != nullptr && count > 0, "empty target set");
    check_lambda(lambda);
    std::vector<std::int64_t> pts(points, points + count);
    *out = g_target(lambda, SteinTarget::set(std::move(pts)), k);
  });
}

stein_llt_status stein_llt_delta_g(double lambda, int64_t a, int64_t k, double* out) {
  return guard([&] {
    need(out != nullptr, "null output");
    check_lambda(lambda);
    *out = delta_g(lambda, a, k);
  });
}

stein_llt_status stein_llt_delta_bound(double lambda, int64_t a, int64_t k, double* case_split,
                                       double* simplified) {
  return guard([&] {
    check_lambda(lambda);
    const auto b = nonuniform_delta_bound(lambda, a, k);
    if (case_split) *case_split = b.case_split;
    if (simplified) *simplified = b.simplified;
  });
}

stein_llt_status stein_llt_residual(double lambda, const int64_t* points, size_t count, int64_t k_max,
                                    double* out) {
  return guard([&] {
    need(out != nullptr && points != nullptr && count > 0, "empty target set");
    check_lambda(lambda);
    require(k_max >= 0, ErrorKind::Domain, "k_max must be non-negative");
    std::vector<std::int64_t> pts(points, points + count);
    *out = residual_check(lambda, SteinTarget::set(std::move(pts)), k_max);
  });
}

int stein_llt_dominated(double value, double bound) { return dominated(value, bound) ? 1 : 0; }

// ---- rate series ----

size_t stein_llt_series_size(const stein_llt_series* s) { return s ? s->series.records.size() : 0; }

stein_llt_status stein_llt_series_record(const stein_llt_series* s, size_t index, stein_llt_record* out) {
  return guard([&] {
    need(s != nullptr && out != nullptr, "null argument");
    require(index < s->series.records.size(), ErrorKind::Domain, "record index out of range");
    const auto& r = s->series.records[index];
    *out = {r.n, r.sigma, r.d_tv.value, r.d_tv.slack, r.d_loc.value, r.d_loc.slack, r.tv_bound, r.loc_bound, r.mc_se};
  });
}

stein_llt_status stein_llt_series_extra(const stein_llt_series* s, size_t index, const char* key, double* out) {
  return guard([&] {
    need(s != nullptr && key != nullptr && out != nullptr, "null argument");
    require(index < s->series.records.size(), ErrorKind::Domain, "record index out of range");
    const auto& ex = s->series.records[index].extras;
    const auto it = ex.find(key);
    require(it != ex.end(), ErrorKind::Domain, std::string("no diagnostic named ") + key);
    *out = it->second;
  });
}

stein_llt_status stein_llt_series_fit(stein_llt_series* s, size_t min_records, double min_spread, int n_boot,
                                      uint64_t seed) {
  return guard([&] {
    need(s != nullptr, "null series");
    RateFitConfig cfg;
    cfg.min_records = min_records;
    cfg.min_spread = min_spread;
    cfg.n_boot = n_boot;
    cfg.seed = seed;
    s->series = rate_fit(s->series, cfg);
  });
}

stein_llt_status stein_llt_series_get_fit(const stein_llt_series* s, stein_llt_fit_kind kind, stein_llt_fit* out) {
  return guard([&] {
    need(s != nullptr && out != nullptr, "null argument");
    const SlopeFit* f = nullptr;
    switch (kind) {
      case STEIN_LLT_FIT_TV_SIGMA: f = &s->series.tv_fit; break;
      case STEIN_LLT_FIT_LOC_SIGMA: f = &s->series.loc_fit; break;
      case STEIN_LLT_FIT_TV_N: f = &s->series.tv_fit_n; break;
      case STEIN_LLT_FIT_LOC_N: f = &s->series.loc_fit_n; break;
      default: need(false, "unknown fit kind");
    }
    *out = {f->fitted ? 1 : 0, f->slope, f->intercept, f->ci_lo, f->ci_hi, f->r_squared};
  });
}

stein_llt_status stein_llt_series_to_csv(const stein_llt_series* s, const char* comments, char** out) {
  return guard([&] {
    need(s != nullptr && out != nullptr, "null argument");
    *out = dup(series_to_csv(s->series, split_lines(comments)));
  });
}

stein_llt_status stein_llt_series_to_json(const stein_llt_series* s, const char* comments, char** out) {
  return guard([&] {
    need(s != nullptr && out != nullptr, "null argument");
    *out = dup(series_to_json(s->series, split_lines(comments)));
  });
}

stein_llt_status stein_llt_series_from_csv(const char* text, stein_llt_series** out) {
  return guard([&] {
    need(text != nullptr && out != nullptr, "null argument");
    *out = new stein_llt_series{series_from_csv(text)};
  });
}

stein_llt_status stein_llt_series_domination(const stein_llt_series* s, int* passed, char** report) {
  return guard([&] {
    need(s != nullptr, "null series");
    const auto rep = domination_report(s->series);
    if (passed) *passed = rep.passed ? 1 : 0;
    if (report) {
      auto rows = json::array();
      for (const auto& r : rep.rows) {
        rows.push_back({{"n", r.n},
                        {"tv_ok", r.tv_ok},
                        {"loc_ok", r.loc_ok},
                        {"tv_margin", num(r.tv_margin)},
                        {"loc_margin", num(r.loc_margin)}});
      }
      json j = {{"passed", rep.passed}, {"rows", rows}, {"failures", rep.failures}, {"warning", rep.warning}};
      *report = dup(j.dump());
    }
  });
}

void stein_llt_series_free(stein_llt_series* s) { delete s; }

void stein_llt_mc_config_default(stein_llt_mc_config* cfg) {
  if (!cfg) return;
  const EstimationConfig e;
  *cfg = {e.n_outer, e.n_upsilon_outer, e.n_inner, e.seed, e.workers};
}

// ---- Curie-Weiss ----

stein_llt_status stein_llt_cw_exact(int64_t n, double beta, double h, stein_llt_pmf** pmf, char** report) {
  return guard([&] {
    const auto inst = cw_instance(n, beta, h);
    const auto tilde = tilde_transform(inst.exact_pmf, n);
    if (report) {
      const auto ex = cw_exact_components(inst);
      const auto& c = ex.components;
      const auto matched = tp_to_lattice(make_tp(c.mu, c.sigma * c.sigma), 1e-15);
      const auto limit = tp_to_lattice(cw_limit_tp(n, beta, h), 1e-15);
      json j = {{"n", n},
                {"beta", beta},
                {"h", h},
                {"m_h", num(inst.m_h)},
                {"mu_n", num(inst.mu_n)},
                {"sigma_n2", num(inst.sigma_n2)},
                {"mu_tilde", num(c.mu)},
                {"sigma2_tilde", num(c.sigma * c.sigma)},
                {"kappa", num(c.kappa)},
                {"taylor_c", num(ex.taylor_c)},
                {"e_psi", num(c.e_psi.value)},
                {"e_r2_exact", num(ex.e_r2_exact)},
                {"e_r2_majorant", num(ex.e_r2_majorant)},
                {"stationarity_residual", num(ex.stationarity_residual)},
                {"identity_residual", num(ex.identity_residual)},
                {"d_tv_matched", metric_json(d_tv(tilde, matched))},
                {"d_loc_matched", metric_json(d_loc(tilde, matched))},
                {"d_tv_limit", metric_json(d_tv(tilde, limit))},
                {"d_loc_limit", metric_json(d_loc(tilde, limit))},
                {"tv_bound", breakdown_json(tv_bound_thm1_terms(c))},
                {"loc_bound", breakdown_json(loc_bound_thm1_terms(c))},
                {"tv_bound_poly", breakdown_json(tv_bound_cor_terms(c))},
                {"loc_bound_poly", breakdown_json(loc_bound_cor_terms(c))}};
      *report = dup(j.dump());
    }
    if (pmf) *pmf = new stein_llt_pmf{tilde};
  });
}

stein_llt_status stein_llt_cw_rate(double beta, double h, const int64_t* grid, size_t count,
                                   stein_llt_cw_target target, int workers, stein_llt_series** out) {
  return guard([&] {
    need(out != nullptr, "null output");
    need(target == STEIN_LLT_CW_LIMIT || target == STEIN_LLT_CW_MATCHED, "unknown target");
    require(workers >= 1, ErrorKind::Domain, "workers must be >= 1");
    *out = new stein_llt_series{cw_rate_experiment(
        beta, h, grid_of(grid, count), target == STEIN_LLT_CW_LIMIT ? CWTarget::Limit : CWTarget::MomentMatched,
        workers)};
  });
}

stein_llt_status stein_llt_cw_tail(int64_t n, double beta, double h, const double* t, size_t count, char** report) {
  return guard([&] {
    need(report != nullptr, "null output");
    const auto ts = doubles_of(t, count);
    const auto inst = cw_instance(n, beta, h);
    const double centre = static_cast<double>(n) * inst.m_h, scale = std::sqrt(static_cast<double>(n));
    auto rows = json::array();
    for (double x : ts) {
      require(std::isfinite(x) && x >= 0.0, ErrorKind::Domain, "tail thresholds must be non-negative");
      CompensatedSum mass;
      for (std::size_t i = 0; i < inst.exact_pmf.size(); ++i) {
        const double dev = std::fabs(static_cast<double>(inst.exact_pmf.value_at(i)) - centre) / scale;
        if (dev >= x) mass += inst.exact_pmf.probs[i];
      }
      rows.push_back({{"t", x}, {"mass", num(mass.value())}});
    }
    json j = {{"n", n}, {"beta", beta}, {"h", h}, {"m_h", num(inst.m_h)}, {"rows", rows}};
    *report = dup(j.dump());
  });
}

// ---- Erdos-Renyi ----

stein_llt_status stein_llt_er_exact(int64_t n, double p, long precision_bits, stein_llt_pmf** pmf, char** report) {
  return guard([&] {
    const auto inst = er_instance(n, p);
    auto ex = exact_isolated_pmf(n, p, precision_bits);
    if (report) {
      const auto tp = tp_to_lattice(make_tp(inst.mu, inst.sigma2), 1e-15);
      json j = {{"n", n},
                {"p", p},
                {"mu", num(inst.mu)},
                {"sigma2", num(inst.sigma2)},
                {"precision_bits", ex.precision_bits},
                {"max_entry_error", num(ex.max_entry_error)},
                {"d_tv", metric_json(d_tv(ex.pmf, tp))},
                {"d_loc", metric_json(d_loc(ex.pmf, tp))}};
      *report = dup(j.dump());
    }
    if (pmf) *pmf = new stein_llt_pmf{std::move(ex.pmf)};
  });
}

stein_llt_status stein_llt_er_rate(double lambda, const int64_t* grid, size_t count, const stein_llt_mc_config* cfg,
                                   stein_llt_series** out) {
  return guard([&] {
    need(out != nullptr, "null output");
    *out = new stein_llt_series{er_rate_experiment(lambda, grid_of(grid, count), estimation_of(cfg))};
  });
}

stein_llt_status stein_llt_er_tail(int64_t n, double p, int d, const double* t, size_t count, uint64_t n_samples,
                                   uint64_t seed, int workers, int* passed, char** report) {
  return guard([&] {
    require(n_samples > 0, ErrorKind::Domain, "n_samples must be positive");
    require(workers >= 1, ErrorKind::Domain, "workers must be >= 1");
    const auto rep = degree_count_tail_check(n, p, d, doubles_of(t, count), n_samples, seed, workers);
    if (passed) *passed = rep.passed ? 1 : 0;
    if (report) {
      auto rows = json::array();
      for (const auto& r : rep.rows) {
        rows.push_back({{"t", r.t},
                        {"empirical", num(r.empirical)},
                        {"se", num(r.se)},
                        {"bound", num(r.bound)},
                        {"below", r.below},
                        {"consistent", r.consistent}});
      }
      json j = {{"n", n},     {"p", p},       {"d", rep.d},           {"mean", num(rep.mean)},
                {"n_samples", rep.n_samples}, {"rows", rows}, {"passed", rep.passed}};
      *report = dup(j.dump());
    }
  });
}

stein_llt_status stein_llt_er_identity(int64_t n, double p, uint64_t n_samples, uint64_t seed, int workers,
                                       int* passed, char** report) {
  return guard([&] {
    require(n_samples > 1, ErrorKind::Domain, "n_samples must exceed 1");
    require(workers >= 1, ErrorKind::Domain, "workers must be >= 1");
    const auto rep = verify_identity(er_coupling(n, p), n_samples, seed, workers);
    if (passed) *passed = rep.passed ? 1 : 0;
    if (report) *report = dup(identity_json(rep).dump());
  });
}

// ---- Hoeffding ----

stein_llt_status stein_llt_hoeffding_from_matrix(const int64_t* a, int64_t n, stein_llt_hoeffding** out) {
  return guard([&] {
    need(a != nullptr && out != nullptr, "null argument");
    require(n >= 2 && n <= 100000, ErrorKind::Domain, "matrix order must lie in [2, 1e5]");
    IntMatrix m;
    m.n = n;
    m.a.assign(a, a + n * n);
    *out = new stein_llt_hoeffding{build_instance(m)};
  });
}

stein_llt_status stein_llt_hoeffding_from_family(const char* family, uint64_t family_seed, int64_t n,
                                                 stein_llt_hoeffding** out) {
  return guard([&] {
    need(family != nullptr && out != nullptr, "null argument");
    *out = new stein_llt_hoeffding{build_instance(generate_matrix({family, family_seed}, n))};
  });
}

stein_llt_status stein_llt_hoeffding_info(const stein_llt_hoeffding* h, char** report) {
  return guard([&] {
    need(h != nullptr && report != nullptr, "null argument");
    const auto& in = h->inst;
    const auto& ar = in.assumption_report;
    auto pairs = json::array();
    for (std::size_t i = 0; i < ar.pairs.size(); ++i) {
      pairs.push_back({ar.pairs[i].first, ar.pairs[i].second, ar.pair_counts[i]});
    }
    json j = {{"n", in.matrix.n},
              {"shift", in.shift},
              {"total", in.total},
              {"mu", num(in.mu)},
              {"sigma2", num(in.sigma2)},
              {"a1", num(in.a1_bound)},
              {"degenerate", in.degenerate},
              {"t_means", {num(in.t_means[0]), num(in.t_means[1]), num(in.t_means[2]), num(in.t_means[3])}},
              {"assumptions",
               {{"alpha0", num(ar.alpha0)},
                {"alpha1", num(ar.alpha1)},
                {"alpha2", num(ar.alpha2)},
                {"n1", ar.n1},
                {"min_n2", ar.min_n2},
                {"a1_ok", ar.a1_ok},
                {"a2_ok", ar.a2_ok},
                {"greedy", ar.greedy},
                {"pairs", pairs}}}};
    *report = dup(j.dump());
  });
}

stein_llt_status stein_llt_hoeffding_brute_force(const stein_llt_hoeffding* h, stein_llt_pmf** out) {
  return guard([&] {
    need(h != nullptr && out != nullptr, "null argument");
    *out = new stein_llt_pmf{brute_force_pmf(h->inst)};
  });
}

stein_llt_status stein_llt_hoeffding_empirical(const stein_llt_hoeffding* h, uint64_t n_samples, uint64_t seed,
                                               int workers, stein_llt_pmf** out) {
  return guard([&] {
    need(h != nullptr && out != nullptr, "null argument");
    require(workers >= 1, ErrorKind::Domain, "workers must be >= 1");
    *out = new stein_llt_pmf{hoeffding_empirical_pmf(h->inst, n_samples, seed, workers)};
  });
}

stein_llt_status stein_llt_hoeffding_identity(const stein_llt_hoeffding* h, uint64_t n_samples, uint64_t seed,
                                              int workers, int* passed, char** report) {
  return guard([&] {
    need(h != nullptr, "null instance");
    require(n_samples > 1, ErrorKind::Domain, "n_samples must exceed 1");
    require(workers >= 1, ErrorKind::Domain, "workers must be >= 1");
    const auto rep = verify_identity(hoeffding_coupling(h->inst), n_samples, seed, workers);
    if (passed) *passed = rep.passed ? 1 : 0;
    if (report) *report = dup(identity_json(rep).dump());
  });
}

stein_llt_status stein_llt_hoeffding_tail(const stein_llt_hoeffding* h, const double* t, size_t count,
                                          uint64_t n_samples, uint64_t seed, int workers, int* passed,
                                          char** report) {
  return guard([&] {
    need(h != nullptr, "null instance");
    require(workers >= 1, ErrorKind::Domain, "workers must be >= 1");
    const auto rep = hoeffding_t_tails(h->inst, doubles_of(t, count), n_samples, seed, workers);
    if (passed) *passed = rep.passed ? 1 : 0;
    if (report) {
      auto prof = json::array();
      for (int l = 0; l < 3; ++l) {
        auto p = tail_profile_json(rep.profiles[l]);
        p["component"] = l + 1;
        p["log_slope"] = num(rep.log_slope[l]);
        p["monotone"] = rep.monotone[l];
        prof.push_back(p);
      }
      json j = {{"n", h->inst.matrix.n}, {"n_samples", n_samples}, {"profiles", prof}, {"passed", rep.passed}};
      *report = dup(j.dump());
    }
  });
}

void stein_llt_hoeffding_free(stein_llt_hoeffding* h) { delete h; }

void stein_llt_hoeffding_config_default(stein_llt_hoeffding_config* cfg) {
  if (!cfg) return;
  const HoeffdingMcConfig d;
  stein_llt_mc_config_default(&cfg->mc);
  cfg->mc.seed = d.seed;
  cfg->mc.workers = d.workers;
  cfg->sample_multiplier = d.sample_multiplier;
  cfg->n_samples = d.n_samples;
  cfg->alpha = d.alpha;
}

stein_llt_status stein_llt_hoeffding_rate(const char* family, uint64_t family_seed, const int64_t* grid, size_t count,
                                          const stein_llt_hoeffding_config* cfg, stein_llt_series** out) {
  return guard([&] {
    need(family != nullptr && out != nullptr, "null argument");
    HoeffdingMcConfig c;
    if (cfg) {
      c.components = estimation_of(&cfg->mc);
      c.seed = cfg->mc.seed;
      c.workers = cfg->mc.workers;
      c.sample_multiplier = cfg->sample_multiplier;
      c.n_samples = cfg->n_samples;
      c.alpha = cfg->alpha;
    }
    *out = new stein_llt_series{hoeffding_rate_experiment({family, family_seed}, grid_of(grid, count), c)};
  });
}

}  // extern "C"
