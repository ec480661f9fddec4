#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "stein_llt/stein_llt.h"

using json = nlohmann::json;

namespace {

// ---- failures and exit codes ----

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitCheckFailed = 2;

struct Failure {
  std::string kind;
  std::string message;
};

void check(stein_llt_status s) {
  if (s != STEIN_LLT_OK) throw Failure{stein_llt_status_name(s), stein_llt_last_error()};
}

[[noreturn]] void usage(const std::string& message) { throw Failure{"usage", message}; }

// ---- owning wrappers around C handles ----

template <class T, void (*Free)(T*)>
struct Handle {
  T* p = nullptr;
  Handle() = default;
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  ~Handle() {
    if (p) Free(p);
  }
};

using Pmf = Handle<stein_llt_pmf, stein_llt_pmf_free>;
using Series = Handle<stein_llt_series, stein_llt_series_free>;
using Hoeffding = Handle<stein_llt_hoeffding, stein_llt_hoeffding_free>;

struct CString {
  char* p = nullptr;
  CString() = default;
  CString(const CString&) = delete;
  CString& operator=(const CString&) = delete;
  ~CString() { stein_llt_string_free(p); }
  std::string str() const { return p ? p : ""; }
};

// ---- parsing helpers ----

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) {
    const auto b = cur.find_first_not_of(" \t");
    const auto e = cur.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(cur.substr(b, e - b + 1));
  }
  return out;
}

std::vector<std::int64_t> int_list(const std::string& s, const char* what) {
  std::vector<std::int64_t> out;
  for (const auto& tok : split(s, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stoll(tok, &used));
      if (used != tok.size()) usage(std::string("bad integer in ") + what + ": " + tok);
    } catch (const std::logic_error&) {
      usage(std::string("bad integer in ") + what + ": " + tok);
    }
  }
  if (out.empty()) usage(std::string(what) + " is empty");
  return out;
}

std::vector<double> double_list(const std::string& s, const char* what) {
  std::vector<double> out;
  for (const auto& tok : split(s, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(tok, &used));
      if (used != tok.size()) usage(std::string("bad number in ") + what + ": " + tok);
    } catch (const std::logic_error&) {
      usage(std::string("bad number in ") + what + ": " + tok);
    }
  }
  if (out.empty()) usage(std::string(what) + " is empty");
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Failure{"io", "cannot open " + path};
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

int workers_from_env() {
  const char* v = std::getenv("STEIN_LLT_WORKERS");
  if (!v || !*v) return 1;
  char* end = nullptr;
  const long w = std::strtol(v, &end, 10);
  if (*end != '\0' || w < 1 || w > 1024) usage(std::string("STEIN_LLT_WORKERS must be an integer in [1, 1024]: ") + v);
  return static_cast<int>(w);
}

// ---- run context and output ----

struct Globals {
  std::uint64_t seed = 1;
  int workers = 1;
  std::string out;
  std::string format = "csv";
};

struct Run {
  Globals g;
  std::string command;
  std::string config_hash;

  std::vector<std::string> header() const {
    return {std::string("stein_llt ") + stein_llt_version(), "command: " + command,
            "seed: " + std::to_string(g.seed), "workers: " + std::to_string(g.workers),
            "config_hash: fnv1a64:" + config_hash};
  }
  json meta() const {
    return {{"artifact_version", stein_llt_version()},
            {"command", command},
            {"seed", g.seed},
            {"workers", g.workers},
            {"config_hash", "fnv1a64:" + config_hash}};
  }
  bool csv() const { return g.format == "csv"; }

  std::string comment_block(const std::vector<std::string>& extra = {}) const {
    std::string s;
    for (const auto& line : header()) s += "# " + line + "\n";
    for (const auto& line : extra) s += "# " + line + "\n";
    return s;
  }

  void emit(const std::string& text) const {
    if (g.out.empty()) {
      std::cout << text;
      std::cout.flush();
      return;
    }
    std::ofstream f(g.out, std::ios::binary | std::ios::trunc);
    if (!f) throw Failure{"io", "cannot write " + g.out};
    f << text;
    if (!f) throw Failure{"io", "failed writing " + g.out};
  }

  void emit_json(json j) const {
    j["meta"] = meta();
    emit(j.dump(2) + "\n");
  }
};

std::string join_lines(const std::vector<std::string>& lines) {
  std::string s;
  for (const auto& l : lines) s += l + "\n";
  return s;
}

// Scalar entries of a JSON report as key=value comment lines.
std::vector<std::string> scalar_lines(const json& j) {
  std::vector<std::string> out;
  for (const auto& [k, v] : j.items()) {
    if (v.is_number_float()) {
      out.push_back(k + "=" + fmt(v.get<double>()));
    } else if (v.is_primitive()) {
      out.push_back(k + "=" + v.dump());
    } else if (v.is_object() && v.contains("value") && v.size() <= 2) {
      out.push_back(k + "=" + fmt(v["value"].is_null() ? NAN : v["value"].get<double>()));
    } else if (v.is_object() && v.contains("total")) {
      out.push_back(k + "=" + fmt(v["total"].is_null() ? NAN : v["total"].get<double>()));
    }
  }
  return out;
}

std::string pmf_json_text(const stein_llt_pmf* p) {
  CString s;
  check(stein_llt_pmf_to_json(p, &s.p));
  return s.str();
}

std::string pmf_rows_csv(const stein_llt_pmf* p) {
  std::int64_t offset = 0, step = 1;
  std::size_t size = 0;
  check(stein_llt_pmf_info(p, &offset, &step, &size, nullptr));
  std::vector<double> probs(size);
  check(stein_llt_pmf_probs(p, probs.data(), size));
  std::string s = "k,pmf\n";
  for (std::size_t i = 0; i < size; ++i) {
    s += std::to_string(offset + step * static_cast<std::int64_t>(i)) + "," + fmt(probs[i]) + "\n";
  }
  return s;
}

void write_pmf_file(const std::string& path, const stein_llt_pmf* p) {
  if (path.empty()) return;
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Failure{"io", "cannot write " + path};
  f << pmf_json_text(p) << "\n";
}

// ---- rate series output shared by cw/er/hoeffding ----

struct FitOptions {
  std::size_t min_records = 4;
  double min_spread = 8.0;
  int boot = 1000;
  bool check = false;
};

void add_fit_options(CLI::App* c, FitOptions& f) {
  c->add_option("--min-records", f.min_records, "Fewest records accepted by the slope fit");
  c->add_option("--min-spread", f.min_spread, "Smallest accepted max n / min n for the slope fit");
  c->add_option("--boot", f.boot, "Bootstrap resamples for slope CIs");
  c->add_flag("--check", f.check, "Exit 2 unless every bound dominates its distance");
}

json fit_json(const stein_llt_fit& f) {
  if (!f.fitted) return nullptr;
  return {{"slope", f.slope}, {"intercept", f.intercept}, {"ci_lo", f.ci_lo}, {"ci_hi", f.ci_hi},
          {"r_squared", f.r_squared}};
}

// Fits slopes (a refused fit is reported, not fatal), checks domination and
// writes the series. Returns the exit code.
int finish_series(const Run& run, stein_llt_series* s, const FitOptions& fo) {
  std::vector<std::string> lines = run.header();
  const stein_llt_status fs = stein_llt_series_fit(s, fo.min_records, fo.min_spread, fo.boot, run.g.seed);
  if (fs == STEIN_LLT_OK) {
    const struct {
      stein_llt_fit_kind kind;
      const char* name;
    } kinds[] = {{STEIN_LLT_FIT_TV_N, "tv_slope_n"},
                 {STEIN_LLT_FIT_LOC_N, "loc_slope_n"},
                 {STEIN_LLT_FIT_TV_SIGMA, "tv_slope_sigma"},
                 {STEIN_LLT_FIT_LOC_SIGMA, "loc_slope_sigma"}};
    for (const auto& k : kinds) {
      stein_llt_fit f{};
      check(stein_llt_series_get_fit(s, k.kind, &f));
      if (f.fitted) {
        lines.push_back(std::string(k.name) + "=" + fmt(f.slope) + " ci=[" + fmt(f.ci_lo) + "," + fmt(f.ci_hi) +
                        "] r2=" + fmt(f.r_squared));
      } else {
        lines.push_back(std::string(k.name) + "=unfitted");
      }
    }
  } else {
    lines.push_back(std::string("fit: ") + stein_llt_last_error());
  }
  int passed = 0;
  CString dom;
  check(stein_llt_series_domination(s, &passed, &dom.p));
  lines.push_back(std::string("domination: ") + (passed ? "passed" : "failed"));
  CString text;
  if (run.csv()) {
    check(stein_llt_series_to_csv(s, join_lines(lines).c_str(), &text.p));
    run.emit(text.str());
  } else {
    check(stein_llt_series_to_json(s, join_lines(lines).c_str(), &text.p));
    json j = json::parse(text.str());
    j["domination"] = json::parse(dom.str());
    j["run"] = run.meta();
    run.emit(j.dump(2) + "\n");
  }
  return fo.check && !passed ? kExitCheckFailed : kExitOk;
}

// ---- Monte Carlo options ----

struct McOptions {
  stein_llt_mc_config cfg{};
};

void add_mc_options(CLI::App* c, McOptions& m) {
  stein_llt_mc_config_default(&m.cfg);
  c->add_option("--outer", m.cfg.n_outer, "Outer Monte Carlo draws for the bound components");
  c->add_option("--upsilon-outer", m.cfg.n_upsilon_outer, "Outer draws of the nested smoothness estimator");
  c->add_option("--inner", m.cfg.n_inner, "Inner draws of the nested smoothness estimator");
}

// ---- commands ----

struct TpOptions {
  double mu = 0.0, sigma2 = 1.0;
  std::int64_t n = 0;
  std::string range;
  double tail_tol = 1e-12;
  CLI::Option* n_opt = nullptr;
};

int cmd_tp(const Run& run, const TpOptions& o) {
  stein_llt_tp_params tp{};
  check(stein_llt_tp_make(o.mu, o.sigma2, &tp));
  std::vector<std::int64_t> ks;
  std::vector<double> ps;
  if (o.n_opt->count() > 0 && !o.range.empty()) usage("give either --n or --range");
  if (o.n_opt->count() > 0) {
    ks.push_back(o.n);
  } else if (!o.range.empty()) {
    const auto r = int_list(o.range, "--range");
    if (r.size() != 2 || r[1] < r[0] || r[1] - r[0] > 10000000) usage("--range needs lo,hi with 0 <= hi - lo <= 1e7");
    for (std::int64_t k = r[0]; k <= r[1]; ++k) ks.push_back(k);
  }
  if (ks.empty()) {
    Pmf p;
    check(stein_llt_tp_to_pmf(&tp, o.tail_tol, &p.p));
    std::int64_t offset = 0, step = 1;
    std::size_t size = 0;
    check(stein_llt_pmf_info(p.p, &offset, &step, &size, nullptr));
    ps.resize(size);
    check(stein_llt_pmf_probs(p.p, ps.data(), size));
    for (std::size_t i = 0; i < size; ++i) ks.push_back(offset + step * static_cast<std::int64_t>(i));
  } else {
    for (auto k : ks) {
      double v = 0.0;
      check(stein_llt_tp_pmf_at(&tp, k, &v));
      ps.push_back(v);
    }
  }
  const double mean = static_cast<double>(tp.shift) + tp.lambda, variance = tp.lambda;
  if (run.csv()) {
    std::string s = run.comment_block({"mu=" + fmt(tp.mu) + " sigma2=" + fmt(tp.sigma2) + " shift=" +
                                       std::to_string(tp.shift) + " gamma=" + fmt(tp.gamma) +
                                       " lambda=" + fmt(tp.lambda),
                                       "mean=" + fmt(mean) + " variance=" + fmt(variance)});
    s += "k,pmf\n";
    for (std::size_t i = 0; i < ks.size(); ++i) s += std::to_string(ks[i]) + "," + fmt(ps[i]) + "\n";
    run.emit(s);
  } else {
    run.emit_json({{"params",
                    {{"mu", tp.mu}, {"sigma2", tp.sigma2}, {"shift", tp.shift}, {"gamma", tp.gamma},
                     {"lambda", tp.lambda}}},
                   {"mean", mean},
                   {"variance", variance},
                   {"k", ks},
                   {"pmf", ps}});
  }
  return kExitOk;
}

void load_pmf(const std::string& path, Pmf& p) { check(stein_llt_pmf_from_json(read_file(path).c_str(), &p.p)); }

struct DistanceOptions {
  std::string a, b, metric = "tv";
};

int cmd_distance(const Run& run, const DistanceOptions& o) {
  stein_llt_metric m{};
  if (o.metric == "tv") {
    m = STEIN_LLT_METRIC_TV;
  } else if (o.metric == "loc") {
    m = STEIN_LLT_METRIC_LOC;
  } else if (o.metric == "s1") {
    m = STEIN_LLT_METRIC_S1;
  } else if (o.metric == "s2") {
    m = STEIN_LLT_METRIC_S2;
  } else {
    usage("unknown metric " + o.metric);
  }
  Pmf a, b;
  load_pmf(o.a, a);
  const bool needs_b = m == STEIN_LLT_METRIC_TV || m == STEIN_LLT_METRIC_LOC;
  if (needs_b && o.b.empty()) usage("--b is required for tv and loc");
  if (!o.b.empty()) load_pmf(o.b, b);
  double value = 0.0, slack = 0.0;
  check(stein_llt_metric_eval(a.p, b.p, m, &value, &slack));
  if (run.csv()) {
    run.emit(run.comment_block() + "metric,value,slack\n" + o.metric + "," + fmt(value) + "," + fmt(slack) + "\n");
  } else {
    run.emit_json({{"metric", o.metric}, {"value", value}, {"slack", slack}});
  }
  return kExitOk;
}

struct SteinOptions {
  double lambda = 1.0;
  std::int64_t a = 0;
  std::string set;
  std::string k_range;
  std::int64_t k_max = -1;
  double tol = 1e-10;
  std::vector<CLI::Option*> a_opts;

  bool has_a() const {
    for (auto* o : a_opts) {
      if (o->count() > 0) return true;
    }
    return false;
  }
};

std::vector<std::int64_t> stein_target(const SteinOptions& o) {
  if (o.has_a() == !o.set.empty()) usage("give exactly one of --a and --set");
  if (o.has_a()) return {o.a};
  return int_list(o.set, "--set");
}

std::int64_t default_k_max(double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda) || lambda > 1e12) usage("--lambda must lie in (0, 1e12]");
  return static_cast<std::int64_t>(std::ceil(lambda + 12.0 * std::sqrt(lambda)));
}

double g_of(const SteinOptions& o, const std::vector<std::int64_t>& pts, std::int64_t k) {
  double v = 0.0;
  if (pts.size() == 1) {
    check(stein_llt_g_singleton(o.lambda, pts[0], k, &v));
  } else {
    check(stein_llt_g_set(o.lambda, pts.data(), pts.size(), k, &v));
  }
  return v;
}

int cmd_stein_eval(const Run& run, const SteinOptions& o) {
  const auto pts = stein_target(o);
  std::int64_t lo = 0, hi = default_k_max(o.lambda);
  if (!o.k_range.empty()) {
    const auto r = int_list(o.k_range, "--k");
    if (r.size() != 2 || r[1] < r[0] || r[1] - r[0] > 10000000) usage("--k needs lo,hi with 0 <= hi - lo <= 1e7");
    lo = r[0];
    hi = r[1];
  }
  const bool single = pts.size() == 1;
  std::ostringstream csv;
  json rows = json::array();
  csv << (single ? "k,g,delta_g,bound_case_split,bound_simplified\n" : "k,g,delta_g\n");
  double g_next = g_of(o, pts, lo);
  for (std::int64_t k = lo; k <= hi; ++k) {
    const double g = g_next;
    g_next = g_of(o, pts, k + 1);
    double dg = g_next - g;
    double cs = NAN, simp = NAN;
    if (single) {
      check(stein_llt_delta_g(o.lambda, pts[0], k, &dg));
      check(stein_llt_delta_bound(o.lambda, pts[0], k, &cs, &simp));
      csv << k << ',' << fmt(g) << ',' << fmt(dg) << ',' << fmt(cs) << ',' << fmt(simp) << '\n';
      rows.push_back({{"k", k}, {"g", g}, {"delta_g", dg}, {"bound_case_split", cs}, {"bound_simplified", simp}});
    } else {
      csv << k << ',' << fmt(g) << ',' << fmt(dg) << '\n';
      rows.push_back({{"k", k}, {"g", g}, {"delta_g", dg}});
    }
  }
  if (run.csv()) {
    run.emit(run.comment_block({"lambda=" + fmt(o.lambda)}) + csv.str());
  } else {
    run.emit_json({{"lambda", o.lambda}, {"target", pts}, {"rows", rows}});
  }
  return kExitOk;
}

// Residual of the Stein equation plus the sup-norm and non-uniform
// difference bounds at every k in [0, k_max].
int cmd_stein_check(const Run& run, const SteinOptions& o) {
  const auto pts = stein_target(o);
  const std::int64_t k_max = o.k_max >= 0 ? o.k_max : default_k_max(o.lambda);
  if (k_max > 10000000) usage("--k-max must be at most 1e7");
  double residual = 0.0;
  check(stein_llt_residual(o.lambda, pts.data(), pts.size(), k_max, &residual));
  const bool single = pts.size() == 1;
  const double g_bound = single ? 1.0 / o.lambda : 1.0 / std::sqrt(o.lambda);
  const double dg_bound = -std::expm1(-o.lambda) / o.lambda;
  std::ostringstream csv;
  csv << "k,g,delta_g,g_bound,delta_g_bound,bound_case_split,bound_simplified,ok\n";
  json rows = json::array();
  std::int64_t violations = 0;
  double g_next = g_of(o, pts, 0);
  for (std::int64_t k = 0; k <= k_max; ++k) {
    const double g = g_next;
    g_next = g_of(o, pts, k + 1);
    double dg = g_next - g;
    double cs = NAN, simp = NAN;
    bool ok = stein_llt_dominated(std::fabs(g), g_bound);
    if (single) {
      check(stein_llt_delta_g(o.lambda, pts[0], k, &dg));
      check(stein_llt_delta_bound(o.lambda, pts[0], k, &cs, &simp));
      ok = ok && stein_llt_dominated(std::fabs(dg), cs) && stein_llt_dominated(std::fabs(dg), simp);
    }
    ok = ok && stein_llt_dominated(std::fabs(dg), dg_bound);
    violations += ok ? 0 : 1;
    csv << k << ',' << fmt(g) << ',' << fmt(dg) << ',' << fmt(g_bound) << ',' << fmt(dg_bound) << ',' << fmt(cs)
        << ',' << fmt(simp) << ',' << (ok ? 1 : 0) << '\n';
    rows.push_back({{"k", k},
                    {"g", g},
                    {"delta_g", dg},
                    {"g_bound", g_bound},
                    {"delta_g_bound", dg_bound},
                    {"bound_case_split", single ? json(cs) : json(nullptr)},
                    {"bound_simplified", single ? json(simp) : json(nullptr)},
                    {"ok", ok}});
  }
  const bool passed = residual <= o.tol && violations == 0;
  if (run.csv()) {
    run.emit(run.comment_block({"lambda=" + fmt(o.lambda) + " k_max=" + std::to_string(k_max),
                                "residual=" + fmt(residual) + " tolerance=" + fmt(o.tol),
                                "violations=" + std::to_string(violations),
                                std::string("check: ") + (passed ? "passed" : "failed")}) +
             csv.str());
  } else {
    run.emit_json({{"lambda", o.lambda},
                   {"target", pts},
                   {"k_max", k_max},
                   {"residual", residual},
                   {"tolerance", o.tol},
                   {"violations", violations},
                   {"passed", passed},
                   {"rows", rows}});
  }
  return passed ? kExitOk : kExitCheckFailed;
}

// Writes a report that carries a pmf: scalar lines plus k,pmf rows in CSV,
// the full report and pmf object in JSON.
void emit_pmf_report(const Run& run, const json& report, const stein_llt_pmf* p) {
  if (run.csv()) {
    run.emit(run.comment_block(scalar_lines(report)) + pmf_rows_csv(p));
  } else {
    run.emit_json({{"report", report}, {"pmf", json::parse(pmf_json_text(p))}});
  }
}

struct CwOptions {
  double beta = 0.5, h = 0.0;
  std::int64_t n = 100;
  std::string grid = "100,200,400,800,1600,3200";
  std::string target = "limit";
  std::string t = "0,0.5,1,1.5,2,2.5,3";
  std::string pmf_out;
  FitOptions fit;
};

int cmd_cw_exact(const Run& run, const CwOptions& o) {
  Pmf p;
  CString rep;
  check(stein_llt_cw_exact(o.n, o.beta, o.h, &p.p, &rep.p));
  write_pmf_file(o.pmf_out, p.p);
  emit_pmf_report(run, json::parse(rep.str()), p.p);
  return kExitOk;
}

int cmd_cw_rate(const Run& run, const CwOptions& o) {
  const auto grid = int_list(o.grid, "--grid");
  stein_llt_cw_target target = STEIN_LLT_CW_LIMIT;
  if (o.target == "matched") {
    target = STEIN_LLT_CW_MATCHED;
  } else if (o.target != "limit") {
    usage("--target must be limit or matched");
  }
  Series s;
  check(stein_llt_cw_rate(o.beta, o.h, grid.data(), grid.size(), target, run.g.workers, &s.p));
  return finish_series(run, s.p, o.fit);
}

json rows_table(const json& rows, const std::vector<std::string>& cols, std::string& csv) {
  for (std::size_t i = 0; i < cols.size(); ++i) csv += (i ? "," : "") + cols[i];
  csv += "\n";
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < cols.size(); ++i) {
      const auto& v = r.at(cols[i]);
      std::string cell;
      if (v.is_boolean()) {
        cell = v.get<bool>() ? "1" : "0";
      } else if (v.is_null()) {
        cell = "nan";
      } else if (v.is_number_float()) {
        cell = fmt(v.get<double>());
      } else {
        cell = v.dump();
      }
      csv += (i ? "," : "") + cell;
    }
    csv += "\n";
  }
  return rows;
}

int cmd_cw_tail(const Run& run, const CwOptions& o) {
  const auto ts = double_list(o.t, "--t");
  CString rep;
  check(stein_llt_cw_tail(o.n, o.beta, o.h, ts.data(), ts.size(), &rep.p));
  const json j = json::parse(rep.str());
  if (run.csv()) {
    std::string csv;
    rows_table(j.at("rows"), {"t", "mass"}, csv);
    json scalars = j;
    scalars.erase("rows");
    run.emit(run.comment_block(scalar_lines(scalars)) + csv);
  } else {
    run.emit_json({{"report", j}});
  }
  return kExitOk;
}

struct ErOptions {
  std::int64_t n = 100;
  double p = NAN;
  double lambda = 1.0;
  long bits = 0;
  int d = 0;
  std::string grid = "50,100,200,400,800";
  std::string t = "0,1,2,4,8,16";
  std::uint64_t samples = 20000;
  std::string pmf_out;
  FitOptions fit;
  McOptions mc;
};

double er_p(const ErOptions& o) { return std::isnan(o.p) ? o.lambda / static_cast<double>(o.n) : o.p; }

int cmd_er_exact(const Run& run, const ErOptions& o) {
  Pmf p;
  CString rep;
  check(stein_llt_er_exact(o.n, er_p(o), o.bits, &p.p, &rep.p));
  write_pmf_file(o.pmf_out, p.p);
  emit_pmf_report(run, json::parse(rep.str()), p.p);
  return kExitOk;
}

int cmd_er_rate(const Run& run, const ErOptions& o) {
  const auto grid = int_list(o.grid, "--grid");
  stein_llt_mc_config cfg = o.mc.cfg;
  cfg.seed = run.g.seed;
  cfg.workers = run.g.workers;
  Series s;
  check(stein_llt_er_rate(o.lambda, grid.data(), grid.size(), &cfg, &s.p));
  return finish_series(run, s.p, o.fit);
}

int cmd_er_tail(const Run& run, const ErOptions& o) {
  const auto ts = double_list(o.t, "--t");
  int passed = 0;
  CString rep;
  check(stein_llt_er_tail(o.n, er_p(o), o.d, ts.data(), ts.size(), o.samples, run.g.seed, run.g.workers, &passed,
                          &rep.p));
  const json j = json::parse(rep.str());
  if (run.csv()) {
    std::string csv;
    rows_table(j.at("rows"), {"t", "empirical", "se", "bound", "below", "consistent"}, csv);
    json scalars = j;
    scalars.erase("rows");
    run.emit(run.comment_block(scalar_lines(scalars)) + csv);
  } else {
    run.emit_json({{"report", j}});
  }
  return passed ? kExitOk : kExitCheckFailed;
}

int emit_identity(const Run& run, const std::string& text, int passed) {
  const json j = json::parse(text);
  if (run.csv()) {
    run.emit(run.comment_block() + "key,value\n" + [&] {
      std::string s;
      for (const auto& line : scalar_lines(j)) {
        const auto eq = line.find('=');
        s += line.substr(0, eq) + "," + line.substr(eq + 1) + "\n";
      }
      return s;
    }());
  } else {
    run.emit_json({{"report", j}});
  }
  return passed ? kExitOk : kExitCheckFailed;
}

int cmd_er_identity(const Run& run, const ErOptions& o) {
  int passed = 0;
  CString rep;
  check(stein_llt_er_identity(o.n, er_p(o), o.samples, run.g.seed, run.g.workers, &passed, &rep.p));
  return emit_identity(run, rep.str(), passed);
}

struct HfOptions {
  std::string matrix;
  std::string family = "bernoulli";
  std::uint64_t family_seed = 1;
  std::int64_t n = 8;
  std::string grid = "50,100,200";
  std::string t = "0,0.5,1,1.5,2,2.5,3";
  std::uint64_t samples = 100000;
  double multiplier = 100.0;
  double alpha = 1e-3;
  std::string pmf_out;
  FitOptions fit;
  McOptions mc;
};

// Integer matrix from a CSV file: one row per line, '#' lines skipped.
std::vector<std::int64_t> read_matrix(const std::string& path, std::int64_t& n) {
  std::istringstream in(read_file(path));
  std::string line;
  std::vector<std::int64_t> a;
  n = 0;
  std::int64_t rows = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos || line[0] == '#') continue;
    const auto row = int_list(line, "matrix row");
    if (rows == 0) n = static_cast<std::int64_t>(row.size());
    if (static_cast<std::int64_t>(row.size()) != n) throw Failure{"domain", "matrix rows differ in length"};
    a.insert(a.end(), row.begin(), row.end());
    ++rows;
  }
  if (rows != n || n == 0) throw Failure{"domain", "matrix must be square and non-empty"};
  return a;
}

void make_instance(const HfOptions& o, Hoeffding& h) {
  if (!o.matrix.empty()) {
    std::int64_t n = 0;
    const auto a = read_matrix(o.matrix, n);
    check(stein_llt_hoeffding_from_matrix(a.data(), n, &h.p));
  } else {
    check(stein_llt_hoeffding_from_family(o.family.c_str(), o.family_seed, o.n, &h.p));
  }
}

int cmd_hf_exact(const Run& run, const HfOptions& o) {
  Hoeffding h;
  make_instance(o, h);
  CString info;
  check(stein_llt_hoeffding_info(h.p, &info.p));
  Pmf centred;
  check(stein_llt_hoeffding_brute_force(h.p, &centred.p));
  json report = json::parse(info.str());
  report.erase("assumptions");
  // The library works with the matrix shifted by `shift`; report W of the input matrix.
  const std::int64_t n = report.at("n").get<std::int64_t>(), shift = report.at("shift").get<std::int64_t>();
  std::int64_t offset = 0, step = 1;
  std::size_t size = 0;
  double tail_tol = 0.0;
  check(stein_llt_pmf_info(centred.p, &offset, &step, &size, &tail_tol));
  std::vector<double> probs(size);
  check(stein_llt_pmf_probs(centred.p, probs.data(), size));
  Pmf p;
  check(stein_llt_pmf_create(offset - n * shift, step, probs.data(), size, tail_tol, &p.p));
  report["mu_centred"] = report.at("mu");
  report["mu"] = report.at("mu").get<double>() - static_cast<double>(n * shift);
  report["total"] = report.at("total").get<std::int64_t>() - n * n * shift;
  write_pmf_file(o.pmf_out, p.p);
  emit_pmf_report(run, report, p.p);
  return kExitOk;
}

int cmd_hf_rate(const Run& run, const HfOptions& o) {
  const auto grid = int_list(o.grid, "--grid");
  stein_llt_hoeffding_config cfg{};
  stein_llt_hoeffding_config_default(&cfg);
  cfg.mc = o.mc.cfg;
  cfg.mc.seed = run.g.seed;
  cfg.mc.workers = run.g.workers;
  cfg.sample_multiplier = o.multiplier;
  cfg.n_samples = o.samples;
  cfg.alpha = o.alpha;
  Series s;
  check(stein_llt_hoeffding_rate(o.family.c_str(), o.family_seed, grid.data(), grid.size(), &cfg, &s.p));
  return finish_series(run, s.p, o.fit);
}

int cmd_hf_tail(const Run& run, const HfOptions& o) {
  const auto ts = double_list(o.t, "--t");
  Hoeffding h;
  make_instance(o, h);
  int passed = 0;
  CString rep;
  check(stein_llt_hoeffding_tail(h.p, ts.data(), ts.size(), o.samples, run.g.seed, run.g.workers, &passed, &rep.p));
  const json j = json::parse(rep.str());
  if (run.csv()) {
    std::string csv = "component,t,value,ci_lo,ci_hi\n";
    std::vector<std::string> lines = {"n=" + j.at("n").dump() + " n_samples=" + j.at("n_samples").dump()};
    for (const auto& p : j.at("profiles")) {
      const auto comp = p.at("component").dump();
      lines.push_back("component " + comp + ": log_slope=" +
                      fmt(p.at("log_slope").is_null() ? NAN : p.at("log_slope").get<double>()) +
                      " monotone=" + p.at("monotone").dump());
      for (std::size_t i = 0; i < p.at("thresholds").size(); ++i) {
        auto cell = [&](const char* key) {
          const auto& v = p.at(key).at(i);
          return v.is_null() ? std::string("nan") : fmt(v.get<double>());
        };
        csv += comp + "," + cell("thresholds") + "," + cell("values") + "," + cell("ci_lo") + "," + cell("ci_hi") + "\n";
      }
    }
    lines.push_back(std::string("check: ") + (passed ? "passed" : "failed"));
    run.emit(run.comment_block(lines) + csv);
  } else {
    run.emit_json({{"report", j}});
  }
  return passed ? kExitOk : kExitCheckFailed;
}

int cmd_hf_identity(const Run& run, const HfOptions& o) {
  Hoeffding h;
  make_instance(o, h);
  int passed = 0;
  CString rep;
  check(stein_llt_hoeffding_identity(h.p, o.samples, run.g.seed, run.g.workers, &passed, &rep.p));
  return emit_identity(run, rep.str(), passed);
}

struct RateFitOptions {
  std::string in;
  FitOptions fit;
};

int cmd_rate_fit(const Run& run, const RateFitOptions& o) {
  Series s;
  check(stein_llt_series_from_csv(read_file(o.in).c_str(), &s.p));
  check(stein_llt_series_fit(s.p, o.fit.min_records, o.fit.min_spread, o.fit.boot, run.g.seed));
  json fits;
  const struct {
    stein_llt_fit_kind kind;
    const char* name;
  } kinds[] = {{STEIN_LLT_FIT_TV_SIGMA, "tv_vs_ln_sigma"},
               {STEIN_LLT_FIT_LOC_SIGMA, "loc_vs_ln_sigma"},
               {STEIN_LLT_FIT_TV_N, "tv_vs_ln_n"},
               {STEIN_LLT_FIT_LOC_N, "loc_vs_ln_n"}};
  for (const auto& k : kinds) {
    stein_llt_fit f{};
    check(stein_llt_series_get_fit(s.p, k.kind, &f));
    fits[k.name] = fit_json(f);
  }
  int passed = 0;
  CString dom;
  check(stein_llt_series_domination(s.p, &passed, &dom.p));
  run.emit_json({{"records", stein_llt_series_size(s.p)}, {"fits", fits}, {"domination", json::parse(dom.str())}});
  return o.fit.check && !passed ? kExitCheckFailed : kExitOk;
}

// ---- JSON config files ----

// Flags from a flat JSON object, e.g. {"beta": 0.5, "grid": [100, 200]} ->
// --beta 0.5 --grid 100,200. "command" names the subcommand path.
std::vector<std::string> config_args(const json& cfg, std::vector<std::string>& command) {
  if (!cfg.is_object()) usage("config file must hold a JSON object");
  std::vector<std::string> out;
  for (const auto& [key, v] : cfg.items()) {
    if (key == "command") {
      if (!v.is_string()) usage("config \"command\" must be a string");
      command = split(v.get<std::string>(), ' ');
      continue;
    }
    const std::string flag = "--" + key;
    if (v.is_boolean()) {
      if (v.get<bool>()) out.push_back(flag);
    } else if (v.is_array()) {
      std::string s;
      for (std::size_t i = 0; i < v.size(); ++i) {
        s += (i ? "," : "") + (v[i].is_string() ? v[i].get<std::string>() : v[i].dump());
      }
      out.push_back(flag);
      out.push_back(s);
    } else if (v.is_string()) {
      out.push_back(flag);
      out.push_back(v.get<std::string>());
    } else if (v.is_number()) {
      out.push_back(flag);
      out.push_back(v.dump());
    } else {
      usage("config value for " + key + " must be a scalar or an array");
    }
  }
  return out;
}

// Rewrites argv so that config-file flags follow the subcommand path and
// precede the command-line flags, which therefore win.
std::vector<std::string> expand_config(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  std::string path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      path = args[i + 1];
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i), args.begin() + static_cast<std::ptrdiff_t>(i) + 2);
      break;
    }
    if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i));
      break;
    }
  }
  if (path.empty()) return args;
  json cfg;
  try {
    cfg = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw Failure{"io", "cannot parse config " + path + ": " + e.what()};
  }
  std::vector<std::string> command;
  const auto extra = config_args(cfg, command);
  std::size_t head = 0;
  while (head < args.size() && !args[head].empty() && args[head][0] != '-') ++head;
  std::vector<std::string> out(args.begin(), args.begin() + static_cast<std::ptrdiff_t>(head));
  if (head == 0) out = command;
  out.insert(out.end(), extra.begin(), extra.end());
  out.insert(out.end(), args.begin() + static_cast<std::ptrdiff_t>(head), args.end());
  return out;
}

// Canonical form of every option of the selected command chain, defaults
// included; seed, workers and output paths are reported separately.
std::string config_hash(const CLI::App& app, const std::string& command) {
  json opts = json::object();
  const CLI::App* cur = &app;
  while (cur) {
    for (const CLI::Option* opt : cur->get_options()) {
      const std::string name = opt->get_single_name();
      if (name == "help" || name == "out" || name == "seed" || name == "workers" || name == "pmf-out") continue;
      const auto& res = opt->results();
      opts[name] = opt->count() > 0 ? json(res) : json(opt->get_default_str());
    }
    const auto subs = cur->get_subcommands();
    cur = subs.empty() ? nullptr : subs.front();
  }
  const json canon = {{"command", command}, {"options", opts}};
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(canon.dump())));
  return buf;
}

void print_error(const std::string& kind, const std::string& message, const std::string& command) {
  json e = {{"error", {{"kind", kind}, {"message", message}, {"command", command}}}};
  std::cerr << e.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  std::string command;
  try {
    CLI::App app{"Translated Poisson local limit toolkit: Stein solutions, distances, bounds and rate experiments"};
    app.name("stein-llt");
    app.set_help_flag("--help", "Print this help message and exit");
    app.set_version_flag("--version", std::string(stein_llt_version()));
    app.require_subcommand(1);
    app.fallthrough();
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast)->always_capture_default();

    Globals g;
    g.workers = workers_from_env();
    app.add_option("--seed", g.seed, "Root random seed");
    app.add_option("--workers", g.workers, "Worker threads (default $STEIN_LLT_WORKERS or 1)")
        ->check(CLI::Range(1, 1024));
    app.add_option("--out", g.out, "Output file (default stdout)");
    app.add_option("--format", g.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
    app.add_option("--config", "JSON file of flags, e.g. {\"command\": \"cw rate\", \"beta\": 0.5}");

    TpOptions tp;
    auto* c_tp = app.add_subcommand("tp", "Translated Poisson pmf and moments");
    c_tp->add_option("--mu", tp.mu, "Mean")->required();
    c_tp->add_option("--sigma2", tp.sigma2, "Variance")->required();
    tp.n_opt = c_tp->add_option("--n", tp.n, "Single point");
    c_tp->add_option("--range", tp.range, "Points lo,hi");
    c_tp->add_option("--tail-tol", tp.tail_tol, "Omitted tail mass when printing the whole pmf");

    DistanceOptions dist;
    auto* c_dist = app.add_subcommand("distance", "Distance between two pmf files, or smoothness of one");
    c_dist->add_option("--a", dist.a, "First pmf JSON file")->required();
    c_dist->add_option("--b", dist.b, "Second pmf JSON file");
    c_dist->add_option("--metric", dist.metric, "tv, loc, s1 or s2")
        ->check(CLI::IsMember({"tv", "loc", "s1", "s2"}));

    SteinOptions st;
    auto* c_stein = app.add_subcommand("stein", "Poisson Stein equation solutions");
    c_stein->require_subcommand(1);
    auto* c_stein_eval = c_stein->add_subcommand("eval", "Table of g, delta g and the difference bounds");
    auto* c_stein_check = c_stein->add_subcommand("check", "Residual and bound domination; exit 2 on failure");
    for (auto* c : {c_stein_eval, c_stein_check}) {
      c->add_option("--lambda", st.lambda, "Poisson mean")->required();
      st.a_opts.push_back(c->add_option("--a", st.a, "Singleton target"));
      c->add_option("--set", st.set, "Finite target set a,b,c");
    }
    c_stein_eval->add_option("--k", st.k_range, "Range lo,hi (default 0..lambda+12 sqrt(lambda))");
    c_stein_check->add_option("--k-max", st.k_max, "Largest k checked (default lambda+12 sqrt(lambda))");
    c_stein_check->add_option("--tol", st.tol, "Residual tolerance");

    CwOptions cw;
    auto* c_cw = app.add_subcommand("cw", "Curie-Weiss magnetization");
    c_cw->require_subcommand(1);
    auto* c_cw_exact = c_cw->add_subcommand("exact", "Exact pmf and bound components at one n");
    auto* c_cw_rate = c_cw->add_subcommand("rate", "Exact rate series over an n grid");
    auto* c_cw_tail = c_cw->add_subcommand("tail", "Exact tail masses of the magnetization");
    for (auto* c : {c_cw_exact, c_cw_rate, c_cw_tail}) {
      c->add_option("--beta", cw.beta, "Inverse temperature");
      c->add_option("--h", cw.h, "External field");
    }
    for (auto* c : {c_cw_exact, c_cw_tail}) c->add_option("--n", cw.n, "Number of spins");
    c_cw_exact->add_option("--pmf-out", cw.pmf_out, "Also write the pmf JSON file here");
    c_cw_rate->add_option("--grid", cw.grid, "n grid, comma separated");
    c_cw_rate->add_option("--target", cw.target, "limit or matched translated Poisson");
    add_fit_options(c_cw_rate, cw.fit);
    c_cw_tail->add_option("--t", cw.t, "Thresholds on the sqrt(n) scale");

    ErOptions er;
    auto* c_er = app.add_subcommand("er", "Isolated vertices of G(n, p)");
    c_er->require_subcommand(1);
    auto* c_er_exact = c_er->add_subcommand("exact", "Certified exact pmf at one n");
    auto* c_er_rate = c_er->add_subcommand("rate", "Rate series for p = lambda/n");
    auto* c_er_tail = c_er->add_subcommand("tail", "Degree-count tails against the concentration bound");
    auto* c_er_identity = c_er->add_subcommand("identity", "Monte Carlo check of E[GD] = sigma^2");
    for (auto* c : {c_er_exact, c_er_tail, c_er_identity}) {
      c->add_option("--n", er.n, "Vertices");
      c->add_option("--p", er.p, "Edge probability (default lambda/n)");
    }
    for (auto* c : {c_er_exact, c_er_rate, c_er_tail, c_er_identity}) {
      c->add_option("--lambda", er.lambda, "n p");
    }
    c_er_exact->add_option("--bits", er.bits, "Working precision (0 selects 64 + 2n)");
    c_er_exact->add_option("--pmf-out", er.pmf_out, "Also write the pmf JSON file here");
    c_er_rate->add_option("--grid", er.grid, "n grid, comma separated");
    add_fit_options(c_er_rate, er.fit);
    add_mc_options(c_er_rate, er.mc);
    c_er_tail->add_option("--d", er.d, "Degree, 0 or 1");
    c_er_tail->add_option("--t", er.t, "Deviation thresholds");
    for (auto* c : {c_er_tail, c_er_identity}) c->add_option("--samples", er.samples, "Monte Carlo draws");

    HfOptions hf;
    hf.fit.min_records = 3;
    hf.fit.min_spread = 4.0;
    auto* c_hf = app.add_subcommand("hoeffding", "Hoeffding permutation statistic");
    c_hf->require_subcommand(1);
    auto* c_hf_exact = c_hf->add_subcommand("exact", "Brute-force pmf (n <= 9)");
    auto* c_hf_rate = c_hf->add_subcommand("rate", "Monte Carlo rate series for a matrix family");
    auto* c_hf_tail = c_hf->add_subcommand("tail", "Tail profiles of the T components; exit 2 on failure");
    auto* c_hf_identity = c_hf->add_subcommand("identity", "Monte Carlo check of E[GD] = sigma^2");
    for (auto* c : {c_hf_exact, c_hf_rate, c_hf_tail, c_hf_identity}) {
      c->add_option("--family", hf.family, "bernoulli or parity_noise");
      c->add_option("--family-seed", hf.family_seed, "Seed of the generated matrix");
    }
    for (auto* c : {c_hf_exact, c_hf_tail, c_hf_identity}) {
      c->add_option("--matrix", hf.matrix, "Integer matrix CSV file (overrides --family)");
      c->add_option("--n", hf.n, "Order of the generated matrix");
    }
    c_hf_exact->add_option("--pmf-out", hf.pmf_out, "Also write the pmf JSON file here");
    c_hf_rate->add_option("--grid", hf.grid, "n grid, comma separated");
    c_hf_rate->add_option("--multiplier", hf.multiplier, "Samples per n as a multiple of sigma^3 (>= 100)");
    c_hf_rate->add_option("--alpha", hf.alpha, "Level of the distance confidence bands");
    add_fit_options(c_hf_rate, hf.fit);
    add_mc_options(c_hf_rate, hf.mc);
    for (auto* c : {c_hf_tail, c_hf_identity}) c->add_option("--samples", hf.samples, "Monte Carlo draws");
    std::uint64_t hf_rate_samples = 0;
    c_hf_rate->add_option("--samples", hf_rate_samples, "Fixed sample count (overrides --multiplier)");

    RateFitOptions rf;
    auto* c_rf = app.add_subcommand("rate_fit", "Slopes of a rate series CSV");
    c_rf->add_option("in,--in", rf.in, "Rate series CSV")->required();
    add_fit_options(c_rf, rf.fit);

    const auto args = expand_config(argc, argv);
    std::vector<std::string> rev(args.rbegin(), args.rend());
    try {
      app.parse(rev);
    } catch (const CLI::CallForHelp& e) {
      return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
      return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
      return app.exit(e);
    } catch (const CLI::ParseError& e) {
      for (const auto& a : args) {
        if (a.empty() || a[0] == '-') break;
        command += (command.empty() ? "" : " ") + a;
      }
      print_error("usage", e.what(), command);
      return kExitError;
    }

    for (const CLI::App* cur = &app; !cur->get_subcommands().empty();) {
      cur = cur->get_subcommands().front();
      command += (command.empty() ? "" : " ") + cur->get_name();
    }
    hf.samples = c_hf_rate->parsed() ? hf_rate_samples : hf.samples;
    Run run{g, command, config_hash(app, command)};

    if (c_tp->parsed()) return cmd_tp(run, tp);
    if (c_dist->parsed()) return cmd_distance(run, dist);
    if (c_stein_eval->parsed()) return cmd_stein_eval(run, st);
    if (c_stein_check->parsed()) return cmd_stein_check(run, st);
    if (c_cw_exact->parsed()) return cmd_cw_exact(run, cw);
    if (c_cw_rate->parsed()) return cmd_cw_rate(run, cw);
    if (c_cw_tail->parsed()) return cmd_cw_tail(run, cw);
    if (c_er_exact->parsed()) return cmd_er_exact(run, er);
    if (c_er_rate->parsed()) return cmd_er_rate(run, er);
    if (c_er_tail->parsed()) return cmd_er_tail(run, er);
    if (c_er_identity->parsed()) return cmd_er_identity(run, er);
    if (c_hf_exact->parsed()) return cmd_hf_exact(run, hf);
    if (c_hf_rate->parsed()) return cmd_hf_rate(run, hf);
    if (c_hf_tail->parsed()) return cmd_hf_tail(run, hf);
    if (c_hf_identity->parsed()) return cmd_hf_identity(run, hf);
    if (c_rf->parsed()) return cmd_rate_fit(run, rf);
    print_error("usage", "no command given", command);
    return kExitError;
  } catch (const Failure& f) {
    print_error(f.kind, f.message, command);
    return kExitError;
  } catch (const std::exception& e) {
    print_error("internal", e.what(), command);
    return kExitError;
  }
}
