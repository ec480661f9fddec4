#include "stein_llt/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include "json.hpp"
#include "stein_llt/error.hpp"
#include "stein_llt/numeric.hpp"
#include "stein_llt/rng.hpp"
#include "stein_llt/stein_solver.hpp"

namespace stein_llt {

namespace {

void check_components(const BoundComponents& c) {
  require(std::isfinite(c.sigma) && c.sigma > 0.0, ErrorKind::Domain, "components need sigma > 0");
  for (double v : {c.e_psi.value, c.e_psi_absdev.value, c.sup_psi_point.value, c.e_r2.value,
                   c.upsilon.value, c.kappa, c.t_mean.value, c.t_second.value, c.sup_t_point.value,
                   c.sup_pmf.value, c.sup_weighted_point.value}) {
    require(std::isfinite(v) && v >= 0.0, ErrorKind::Domain, "bound components must be finite and non-negative");
  }
}

// sqrt(x) with its delta-method standard error.
Estimate root(const Estimate& x) {
  const double r = std::sqrt(x.value);
  return {r, r > 0.0 ? x.se / (2.0 * r) : 0.0};
}

BoundBreakdown finish(std::vector<BoundTerm> terms) {
  BoundBreakdown b;
  CompensatedSum total;
  double se = 0.0;
  for (const auto& t : terms) {
    total += t.value;
    se += t.se;  // components are correlated; add linearly
  }
  b.terms = std::move(terms);
  b.total = total.value();
  b.se = se;
  return b;
}

BoundTerm upsilon_term(const BoundComponents& c, double scale) {
  return {0, "2(Upsilon+1)", 2.0 * (c.upsilon.value + 1.0) / scale, 2.0 * c.upsilon.se / scale};
}

void check_moments(const BoundComponents& c, std::size_t needed) {
  require(c.k_order >= 0, ErrorKind::Domain, "k_order must be non-negative");
  require(c.moments.size() >= needed, ErrorKind::Incomplete,
          "components lack the moment of order " + std::to_string(needed - 1) +
              " required by the polynomial Psi bound");
}

}  // namespace

int BoundBreakdown::group_count() const {
  std::set<int> g;
  for (const auto& t : terms) g.insert(t.group);
  return static_cast<int>(g.size());
}

BoundBreakdown tv_bound_thm1_terms(const BoundComponents& c) {
  check_components(c);
  const double s = c.sigma, s2 = s * s;
  const Estimate r = root(c.e_r2);
  auto ups = upsilon_term(c, s);
  ups.group = 3;
  return finish({{1, "E Psi", c.e_psi.value / s2, c.e_psi.se / s2},
                 {2, "2 sqrt(E R^2)", 2.0 * r.value / s, 2.0 * r.se / s},
                 ups});
}

BoundBreakdown loc_bound_thm1_terms(const BoundComponents& c) {
  check_components(c);
  const double s = c.sigma, s2 = s * s, s3 = s2 * s, s4 = s2 * s2;
  const Estimate r = root(c.e_r2);
  const double coef = 2.0 + kInvSqrt2e + s * c.sup_pmf.value;
  auto ups = upsilon_term(c, s2);
  ups.group = 5;
  return finish({{1, "E Psi", kInvSqrt2e * c.e_psi.value / s3, kInvSqrt2e * c.e_psi.se / s3},
                 {2, "E[Psi |W-mu|]", c.e_psi_absdev.value / s4, c.e_psi_absdev.se / s4},
                 {3, "sup_a E[Psi 1{W=a}]", c.sup_psi_point.value / s2, c.sup_psi_point.se / s2},
                 {4, "sqrt(E R^2) R-group", r.value * coef / s2,
                  (r.se * coef + r.value * s * c.sup_pmf.se) / s2},
                 ups});
}

BoundBreakdown tv_bound_cor_terms(const BoundComponents& c) {
  check_components(c);
  check_moments(c, static_cast<std::size_t>(c.k_order) + 1);
  const double s = c.sigma, s2 = s * s;
  double m = 0.0, m_se = 0.0;
  for (int j = 0; j <= c.k_order; ++j) {
    m += c.moments[static_cast<std::size_t>(j)].value;
    m_se += c.moments[static_cast<std::size_t>(j)].se;
  }
  const Estimate r = root(c.e_r2);
  auto ups = upsilon_term(c, s);
  ups.group = 4;
  return finish({{1, "kappa moments", c.kappa * m / s, c.kappa * m_se / s},
                 {2, "E T", c.t_mean.value / s2, c.t_mean.se / s2},
                 {3, "2 sqrt(E R^2)", 2.0 * r.value / s, 2.0 * r.se / s},
                 ups});
}

BoundBreakdown loc_bound_cor_terms(const BoundComponents& c) {
  check_components(c);
  check_moments(c, static_cast<std::size_t>(c.k_order) + 2);
  const double s = c.sigma, s2 = s * s, s3 = s2 * s;
  double m = 0.0, m_se = 0.0;
  for (int j = 0; j <= c.k_order + 1; ++j) {
    m += c.moments[static_cast<std::size_t>(j)].value;
    m_se += c.moments[static_cast<std::size_t>(j)].se;
  }
  const Estimate r = root(c.e_r2);
  const Estimate t = root(c.t_second);
  const double coef = 3.0 + s * c.sup_pmf.value;
  auto ups = upsilon_term(c, s2);
  ups.group = 4;
  return finish({{1, "2 kappa moments", 2.0 * c.kappa * m / s2, 2.0 * c.kappa * m_se / s2},
                 {1, "kappa sup_a weighted P(W=a)", c.kappa * c.sup_weighted_point.value / s2,
                  c.kappa * c.sup_weighted_point.se / s2},
                 {2, "2 sqrt(E T^2)", 2.0 * t.value / s3, 2.0 * t.se / s3},
                 {2, "sup_a E[T 1{W=a}]", c.sup_t_point.value / s2, c.sup_t_point.se / s2},
                 {3, "sqrt(E R^2) R-group", r.value * coef / s2,
                  (r.se * coef + r.value * s * c.sup_pmf.se) / s2},
                 ups});
}

double tv_bound_thm1(const BoundComponents& c) { return tv_bound_thm1_terms(c).total; }
double loc_bound_thm1(const BoundComponents& c) { return loc_bound_thm1_terms(c).total; }
double tv_bound_cor(const BoundComponents& c) { return tv_bound_cor_terms(c).total; }
double loc_bound_cor(const BoundComponents& c) { return loc_bound_cor_terms(c).total; }

SlopeFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y, int n_boot,
                    std::uint64_t seed) {
  require(x.size() == y.size() && x.size() >= 2, ErrorKind::Refused, "fit needs at least two points");
  const auto n = static_cast<double>(x.size());
  auto ols = [&](const std::vector<double>& yy) {
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      mx += x[i];
      my += yy[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      sxx += (x[i] - mx) * (x[i] - mx);
      sxy += (x[i] - mx) * (yy[i] - my);
    }
    require(sxx > 0.0, ErrorKind::Refused, "fit refused: abscissae have no spread");
    const double slope = sxy / sxx;
    return std::pair{slope, my - slope * mx};
  };
  SlopeFit f;
  std::tie(f.slope, f.intercept) = ols(y);
  f.fitted = true;
  std::vector<double> resid(x.size());
  double ss_res = 0.0, ss_tot = 0.0, my = 0.0;
  for (double v : y) my += v;
  my /= n;
  for (std::size_t i = 0; i < x.size(); ++i) {
    resid[i] = y[i] - (f.intercept + f.slope * x[i]);
    ss_res += resid[i] * resid[i];
    ss_tot += (y[i] - my) * (y[i] - my);
  }
  f.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
  f.ci_lo = f.ci_hi = f.slope;
  if (n_boot > 0) {
    Rng rng = Rng::substream(seed, 0xb007);
    std::vector<double> slopes(static_cast<std::size_t>(n_boot));
    std::vector<double> yb(x.size());
    for (auto& s : slopes) {
      for (std::size_t i = 0; i < x.size(); ++i) {
        yb[i] = f.intercept + f.slope * x[i] + resid[rng.below(resid.size())];
      }
      s = ols(yb).first;
    }
    std::sort(slopes.begin(), slopes.end());
    const auto at = [&](double q) {
      return slopes[static_cast<std::size_t>(std::floor(q * static_cast<double>(slopes.size() - 1)))];
    };
    f.ci_lo = std::min(at(0.025), f.slope);
    f.ci_hi = std::max(at(0.975), f.slope);
  }
  return f;
}

RateSeries rate_fit(RateSeries series, const RateFitConfig& cfg) {
  auto& recs = series.records;
  std::sort(recs.begin(), recs.end(), [](const RateRecord& a, const RateRecord& b) { return a.n < b.n; });
  require(recs.size() >= cfg.min_records, ErrorKind::Refused,
          "fit refused: " + std::to_string(recs.size()) + " records, need at least " +
              std::to_string(cfg.min_records));
  require(recs.front().n > 0, ErrorKind::Refused, "fit refused: instance sizes must be positive");
  const double spread = static_cast<double>(recs.back().n) / static_cast<double>(recs.front().n);
  require(spread >= cfg.min_spread, ErrorKind::Refused,
          "fit refused: n spans a factor " + std::to_string(spread) + ", need at least " +
              std::to_string(cfg.min_spread));
  std::vector<double> ls, ln, ytv, yloc;
  for (const auto& r : recs) {
    require(r.sigma > 0.0 && r.d_tv.value > 0.0 && r.d_loc.value > 0.0, ErrorKind::Refused,
            "fit refused: distances and sigma must be positive at n = " + std::to_string(r.n));
    ls.push_back(std::log(r.sigma));
    ln.push_back(std::log(static_cast<double>(r.n)));
    ytv.push_back(std::log(r.d_tv.value));
    yloc.push_back(std::log(r.d_loc.value));
  }
  series.tv_fit = fit_loglog(ls, ytv, cfg.n_boot, cfg.seed);
  series.loc_fit = fit_loglog(ls, yloc, cfg.n_boot, cfg.seed + 1);
  series.tv_fit_n = fit_loglog(ln, ytv, cfg.n_boot, cfg.seed + 2);
  series.loc_fit_n = fit_loglog(ln, yloc, cfg.n_boot, cfg.seed + 3);
  return series;
}

DominationReport domination_report(const RateSeries& series) {
  DominationReport rep;
  if (series.records.empty()) {
    rep.warning = "empty series: domination holds vacuously";
    return rep;
  }
  for (const auto& r : series.records) {
    const double allowance = std::isfinite(r.mc_se) ? 4.0 * r.mc_se : 0.0;
    DominationRow row;
    row.n = r.n;
    const double tv_need = r.d_tv.value - allowance;
    const double loc_need = r.d_loc.value - allowance;
    row.tv_margin = r.tv_bound + r.d_tv.slack - tv_need;
    row.loc_margin = r.loc_bound + r.d_loc.slack - loc_need;
    row.tv_ok = dominated(tv_need, r.tv_bound + r.d_tv.slack);
    row.loc_ok = dominated(loc_need, r.loc_bound + r.d_loc.slack);
    if (!row.tv_ok) {
      rep.failures.push_back("n=" + std::to_string(r.n) + ": tv bound " + std::to_string(r.tv_bound) +
                             " below distance " + std::to_string(r.d_tv.value));
    }
    if (!row.loc_ok) {
      rep.failures.push_back("n=" + std::to_string(r.n) + ": loc bound " + std::to_string(r.loc_bound) +
                             " below distance " + std::to_string(r.d_loc.value));
    }
    rep.passed = rep.passed && row.tv_ok && row.loc_ok;
    rep.rows.push_back(row);
  }
  return rep;
}

namespace {

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

nlohmann::json num(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

nlohmann::json fit_json(const SlopeFit& f) {
  if (!f.fitted) return nullptr;
  return {{"slope", f.slope},       {"intercept", f.intercept}, {"ci_lo", f.ci_lo},
          {"ci_hi", f.ci_hi},       {"r_squared", f.r_squared}};
}

}  // namespace

std::string series_to_csv(const RateSeries& series, const std::vector<std::string>& comments) {
  std::ostringstream out;
  for (const auto& c : comments) out << "# " << c << "\n";
  out << "n,sigma,d_tv,d_tv_slack,d_loc,d_loc_slack,tv_bound,loc_bound,mc_se\n";
  for (const auto& r : series.records) {
    out << r.n << ',' << fmt(r.sigma) << ',' << fmt(r.d_tv.value) << ',' << fmt(r.d_tv.slack) << ','
        << fmt(r.d_loc.value) << ',' << fmt(r.d_loc.slack) << ',' << fmt(r.tv_bound) << ','
        << fmt(r.loc_bound) << ',' << fmt(r.mc_se) << "\n";
  }
  return out.str();
}

RateSeries series_from_csv(const std::string& text) {
  static const std::vector<std::string> kColumns = {"n",     "sigma",       "d_tv",     "d_tv_slack", "d_loc",
                                                    "d_loc_slack", "tv_bound", "loc_bound",  "mc_se"};
  RateSeries series;
  std::istringstream in(text);
  std::string line;
  bool header = false;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!header) {
      require(cells == kColumns, ErrorKind::Domain,
              "CSV header must be n,sigma,d_tv,d_tv_slack,d_loc,d_loc_slack,tv_bound,loc_bound,mc_se");
      header = true;
      continue;
    }
    require(cells.size() == kColumns.size(), ErrorKind::Domain,
            "CSV line " + std::to_string(line_no) + " has " + std::to_string(cells.size()) + " cells");
    std::vector<double> v(cells.size());
    for (std::size_t i = 0; i < cells.size(); ++i) {
      char* end = nullptr;
      v[i] = std::strtod(cells[i].c_str(), &end);
      require(end != cells[i].c_str() && *end == '\0', ErrorKind::Domain,
              "CSV line " + std::to_string(line_no) + ": cannot parse '" + cells[i] + "'");
    }
    RateRecord r;
    r.n = static_cast<std::int64_t>(std::llround(v[0]));
    r.sigma = v[1];
    r.d_tv = {v[2], v[3]};
    r.d_loc = {v[4], v[5]};
    r.tv_bound = v[6];
    r.loc_bound = v[7];
    r.mc_se = v[8];
    series.records.push_back(std::move(r));
  }
  require(header, ErrorKind::Domain, "CSV has no header line");
  return series;
}

std::string series_to_json(const RateSeries& series, const std::vector<std::string>& comments) {
  nlohmann::json j;
  j["format"] = "stein_llt.rate_series";
  j["format_version"] = 1;
  j["label"] = series.label;
  j["meta"] = comments;
  auto recs = nlohmann::json::array();
  for (const auto& r : series.records) {
    nlohmann::json o;
    o["n"] = r.n;
    o["sigma"] = num(r.sigma);
    o["d_tv"] = num(r.d_tv.value);
    o["d_tv_slack"] = num(r.d_tv.slack);
    o["d_loc"] = num(r.d_loc.value);
    o["d_loc_slack"] = num(r.d_loc.slack);
    o["tv_bound"] = num(r.tv_bound);
    o["loc_bound"] = num(r.loc_bound);
    o["mc_se"] = num(r.mc_se);
    o["d_tv_sigma"] = num(r.d_tv.value * r.sigma);
    o["d_loc_sigma2"] = num(r.d_loc.value * r.sigma * r.sigma);
    o["d_loc_sigma2_over_sqrt_log_sigma"] =
        r.sigma > 1.0 ? num(r.d_loc.value * r.sigma * r.sigma / std::sqrt(std::log(r.sigma))) : nullptr;
    nlohmann::json extras = nlohmann::json::object();
    for (const auto& [k, v] : r.extras) extras[k] = num(v);
    o["diagnostics"] = extras;
    recs.push_back(o);
  }
  j["records"] = recs;
  j["fits"] = {{"tv_vs_ln_sigma", fit_json(series.tv_fit)},
               {"loc_vs_ln_sigma", fit_json(series.loc_fit)},
               {"tv_vs_ln_n", fit_json(series.tv_fit_n)},
               {"loc_vs_ln_n", fit_json(series.loc_fit_n)}};
  // The total-variation exponent alpha is read off the fitted slope.
  j["alpha"] = series.tv_fit.fitted ? num(-series.tv_fit.slope) : nullptr;
  return j.dump(2) + "\n";
}

}  // namespace stein_llt
