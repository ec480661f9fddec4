#include <sys/wait.h>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "json.hpp"

namespace {

struct Run {
  int status = -1;
  std::string out;
};

// Runs the CLI with stderr folded into stdout when `merge` is set.
Run cli(const std::string& args, bool merge = false) {
  const std::string cmd = std::string(STEIN_LLT_CLI) + " " + args + (merge ? " 2>&1" : " 2>/dev/null");
  Run r;
  FILE* f = popen(cmd.c_str(), "r");
  REQUIRE(f != nullptr);
  char buf[4096];
  std::size_t got = 0;
  while ((got = fread(buf, 1, sizeof buf, f)) > 0) r.out.append(buf, got);
  const int st = pclose(f);
  r.status = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  return r;
}

std::string without_comments(const std::string& text) {
  std::istringstream in(text);
  std::string line, out;
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] != '#') out += line + "\n";
  }
  return out;
}

std::string tmp_path(const std::string& name) { return std::string(STEIN_LLT_TMP) + "/" + name; }

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path);
  f << text;
}

}  // namespace

TEST_CASE("tp prints the translated Poisson point probability") {
  const auto r = cli("tp --mu 5 --sigma2 4 --n 1");
  CHECK(r.status == 0);
  CHECK(r.out.find("0.018315638888734") != std::string::npos);
  CHECK(r.out.find("# stein_llt 1.0.0") != std::string::npos);
  CHECK(r.out.find("# config_hash: fnv1a64:") != std::string::npos);
}

TEST_CASE("distance of a pmf with itself is zero") {
  const auto pmf = tmp_path("cli_self.json");
  write_file(pmf, R"({"offset": 0, "step": 1, "probs": [0.2, 0.3, 0.5]})");
  const auto r = cli("distance --a " + pmf + " --b " + pmf + " --metric loc");
  CHECK(r.status == 0);
  CHECK(without_comments(r.out) == "metric,value,slack\nloc,0,0\n");
}

TEST_CASE("exit codes and error reports") {
  CHECK(cli("stein check --lambda 16 --a 8").status == 0);
  CHECK(cli("stein check --lambda 16 --a 8 --tol 1e-30").status == 2);
  const auto bad = cli("cw exact --n 100 --beta 1.5 --h 0", true);
  CHECK(bad.status == 1);
  const auto err = nlohmann::json::parse(bad.out);
  CHECK(err["error"]["kind"] == "domain");
  CHECK(err["error"]["command"] == "cw exact");
  CHECK(cli("tp --mu 5").status == 1);
  CHECK(cli("distance --a /nonexistent.json --b /nonexistent.json").status == 1);
}

TEST_CASE("rate output is reproducible and round-trips through rate_fit") {
  const std::string args = "cw rate --beta 0.5 --h 0.5 --grid 100,200,400,800,1600";
  const auto a = cli(args), b = cli(args);
  REQUIRE(a.status == 0);
  CHECK(a.out == b.out);
  CHECK(a.out.find("# domination: passed") != std::string::npos);
  const auto csv = tmp_path("cli_rate.csv");
  write_file(csv, a.out);
  const auto fit = cli("rate_fit --in " + csv);
  REQUIRE(fit.status == 0);
  const auto j = nlohmann::json::parse(fit.out);
  CHECK(j["records"] == 5);
  const double loc = j["fits"]["loc_vs_ln_n"]["slope"];
  CHECK(loc == doctest::Approx(-1.0).epsilon(0.05));
  CHECK(j["meta"]["command"] == "rate_fit");
}

TEST_CASE("config files supply defaults that flags override") {
  const auto cfg = tmp_path("cli_cfg.json");
  write_file(cfg, R"({"command": "tp", "mu": 5, "sigma2": 4, "n": 2})");
  const auto from_file = cli("tp --config " + cfg);
  REQUIRE(from_file.status == 0);
  const auto direct = cli("tp --mu 5 --sigma2 4 --n 2");
  CHECK(without_comments(from_file.out) == without_comments(direct.out));
  const auto overridden = cli("tp --config " + cfg + " --n 1");
  CHECK(overridden.out.find("0.018315638888734") != std::string::npos);
}

TEST_CASE("worker count does not change results") {
  const std::string args = "er identity --n 60 --lambda 2 --samples 20000";
  const auto one = cli(args + " --workers 1"), three = cli(args + " --workers 3");
  REQUIRE(one.status == 0);
  CHECK(without_comments(one.out) == without_comments(three.out));
}
