#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>

#include <json.hpp>

#include "spalu/bench.hpp"
#include "spalu/plot.hpp"
#include "support.hpp"

using namespace spalu;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path fresh_dir(const std::string& name) {
  fs::path d = fs::current_path() / name;
  fs::remove_all(d);
  return d;
}

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string l;
  while (std::getline(ss, l)) out.push_back(l);
  return out;
}

// run the CLI, return exit status and stdout
std::pair<int, std::string> run_cli(const std::string& args) {
  std::string cmd = std::string(SPALU_CLI) + " " + args + " 2>/dev/null";
  FILE* f = popen(cmd.c_str(), "r");
  REQUIRE(f);
  std::string out;
  char buf[4096];
  size_t got;
  while ((got = fread(buf, 1, sizeof buf, f)) > 0) out.append(buf, got);
  int status = pclose(f);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

// lexicographic elimination (n >= 2) of an n x n five-point grid fills the band
long natural_grid_fill(long n) {
  const long N = n * n;
  long nnz = 0;
  for (long j = 0; j + 1 < n; ++j) nnz += j + 2;
  nnz += n;
  for (long k = n; k < N; ++k) nnz += std::min(n, N - 1 - k);
  return nnz - 2 * n * (n - 1);
}

BenchRecord record(long N, double tf, double eps = 1e-10) {
  BenchRecord r;
  r.problem = "helmholtz";
  r.N = N;
  r.eps = eps;
  r.t_nd = tf / 4;
  r.t_f = tf;
  r.t_s = tf / 10;
  return r;
}

}  // namespace

TEST_CASE("csv header") {
  CHECK(std::string(kCsvHeader) == "problem,N,n,eps,t_nd,t_f,t_s,qtilde,res,factor_nnz");
  CHECK(records_csv({}) == std::string(kCsvHeader) + "\n");
  CHECK(records_json({}) == "[]\n");
}

TEST_CASE("config validation") {
  BenchConfig c;
  c.sizes = {4096, 16384};
  CHECK_NOTHROW(c.validate());
  c.sizes = {16384, 4096};
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.sizes = {4096, 4096};
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.sizes = {0};
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.sizes = {4096};
  for (double bad : {0.0, 1.0, -1e-8, 2.0}) {
    c.eps = {1e-8, bad};
    CHECK_THROWS_AS(c.validate(), ConfigError);
  }
  c.eps = {1e-12};
  c.repetitions = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.repetitions = 1;
  c.problem = "poisson";
  CHECK_THROWS_AS(run_bench(c), ConfigError);
}

TEST_CASE("empty ladder writes headers only") {
  BenchConfig c;
  c.out_dir = fresh_dir("bench_empty").string();
  auto records = run_bench(c);
  CHECK(records.empty());
  CHECK(slurp(fs::path(c.out_dir) / "records.csv") == std::string(kCsvHeader) + "\n");
  CHECK(nlohmann::json::parse(slurp(fs::path(c.out_dir) / "records.json")).empty());
  CHECK_FALSE(fs::exists(fs::path(c.out_dir) / "scaling.svg"));
}

TEST_CASE("laplace ladder" * doctest::timeout(300)) {
  BenchConfig c;
  c.sizes = {4096, 16384, 65536, 262144};
  c.repetitions = 1;
  c.out_dir = fresh_dir("bench_ladder").string();
  auto records = run_bench(c);
  REQUIRE(records.size() == 4);
  for (const auto& r : records) {
    INFO("N = " << r.N);
    CHECK(r.error.empty());
    CHECK(r.res < 1e-10);
    CHECK(r.qtilde > 0);
    CHECK(r.qtilde <= 1);
    CHECK(r.t_nd >= 0);
    CHECK(r.t_f >= 0);
    CHECK(r.t_s >= 0);
    CHECK(r.n == std::lround(std::sqrt(double(r.N))));
    CHECK(r.factor_nnz > 0);
    CHECK_FALSE(r.levels.empty());
  }
  auto rows = lines(slurp(fs::path(c.out_dir) / "records.csv"));
  REQUIRE(rows.size() == 5);
  CHECK(rows[0] == kCsvHeader);
  for (size_t i = 1; i < rows.size(); ++i) {
    // the descriptor contains commas and is quoted
    REQUIRE(rows[i][0] == '"');
    std::string rest = rows[i].substr(rows[i].find('"', 1) + 1);
    CHECK(std::count(rest.begin(), rest.end(), ',') == 9);
  }
  auto j = nlohmann::json::parse(slurp(fs::path(c.out_dir) / "records.json"));
  REQUIRE(j.size() == 4);
  CHECK(j[2]["N"] == records[2].N);
  CHECK(j[2]["levels"].size() == records[2].levels.size());
  CHECK(fs::exists(fs::path(c.out_dir) / "scaling.svg"));
  auto part = nlohmann::json::parse(slurp(fs::path(c.out_dir) / "partition.json"));
  CHECK(part.is_object());
}

TEST_CASE("non-timing fields are reproducible") {
  BenchConfig c;
  c.problem = "laplace-aniso:d11=1,d12=1,d21=0,d22=1";
  c.sizes = {2000, 6000};
  c.eps = {1e-6, 1e-10};
  c.repetitions = 1;
  auto a = run_bench(c), b = run_bench(c);
  REQUIRE(a.size() == 4);
  REQUIRE(b.size() == 4);
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].N == b[i].N);
    CHECK(a[i].eps == b[i].eps);
    CHECK(a[i].qtilde == b[i].qtilde);
    CHECK(a[i].res == b[i].res);
    CHECK(a[i].factor_nnz == b[i].factor_nnz);
    REQUIRE(a[i].levels.size() == b[i].levels.size());
    for (size_t l = 0; l < a[i].levels.size(); ++l) {
      CHECK(a[i].levels[l].e_before == b[i].levels[l].e_before);
      CHECK(a[i].levels[l].e_after == b[i].levels[l].e_after);
    }
  }
  // a different sampling seed may change ranks but not the row layout
  c.seed = 99;
  auto d = run_bench(c);
  CHECK(d.size() == 4);
  CHECK(d[0].N == a[0].N);
}

TEST_CASE("a failing row is recorded and the run continues") {
  BenchConfig c;
  c.problem = "helmholtz:domain=polygon";
  c.sizes = {1, 3000};
  c.eps = {1e-8, 1e-10};
  c.repetitions = 1;
  c.out_dir = fresh_dir("bench_error").string();
  std::ostringstream log;
  auto records = run_bench(c, &log);
  REQUIRE(records.size() == 4);
  for (int i : {0, 1}) {
    CHECK_FALSE(records[size_t(i)].error.empty());
    CHECK(records[size_t(i)].error.find("no interior unknowns") != std::string::npos);
  }
  for (int i : {2, 3}) {
    CHECK(records[size_t(i)].error.empty());
    CHECK(records[size_t(i)].res < 1e-6);
  }
  CHECK(log.str().find("error:") != std::string::npos);
  auto rows = lines(slurp(fs::path(c.out_dir) / "records.csv"));
  REQUIRE(rows.size() == 5);
  CHECK(rows[1].find(",nan,nan,nan,nan,nan,") != std::string::npos);
  auto j = nlohmann::json::parse(slurp(fs::path(c.out_dir) / "records.json"));
  CHECK(j[0].contains("error"));
  CHECK_FALSE(j[2].contains("error"));
}

TEST_CASE("loglog slope") {
  std::vector<double> x{1e3, 4e3, 1.6e4, 6.4e4}, y;
  for (double v : x) y.push_back(3 * std::pow(v, 1.5));
  CHECK(loglog_slope(x, y) == doctest::Approx(1.5).epsilon(1e-12));
  testing::Rng rng(5);
  for (int t = 0; t < 50; ++t) {
    double a = rng.uniform(-2, 2), c = rng.uniform(0.1, 10);
    std::vector<double> yy;
    for (double v : x) yy.push_back(c * std::pow(v, a));
    CHECK(loglog_slope(x, yy) == doctest::Approx(a).epsilon(1e-10));
  }
  CHECK_THROWS_AS(loglog_slope({1.0}, {1.0}), DimensionError);
  CHECK_THROWS_AS(loglog_slope({1.0, 2.0}, {1.0}), DimensionError);
}

TEST_CASE("scaling plot") {
  fs::path dir = fresh_dir("bench_plot");
  fs::create_directories(dir);
  std::ostringstream notice;
  CHECK_FALSE(emit_scaling_plot({record(4096, 0.1)}, (dir / "one.svg").string(), notice));
  CHECK_FALSE(fs::exists(dir / "one.svg"));
  CHECK(notice.str().find("skipped") != std::string::npos);

  // different eps values are not a common series
  notice.str("");
  CHECK_FALSE(emit_scaling_plot({record(4096, 0.1, 1e-8), record(8192, 0.2, 1e-10)}, (dir / "mixed.svg").string(),
                                notice));
  CHECK_FALSE(notice.str().empty());

  fs::path two = dir / "two.svg";
  CHECK(emit_scaling_plot({record(4096, 0.1), record(8192, 0.2)}, two.string(), notice));
  std::string svg = slurp(two);
  CHECK(svg.find("<svg") == 0);
  for (const char* label : {"T^Nd", "T^F", "T^S", "O(N)"}) CHECK(svg.find(label) != std::string::npos);
  // the dashed reference ends on the last T^F point
  std::smatch m;
  REQUIRE(std::regex_search(svg, m, std::regex("<line x1=\"[^\"]+\" y1=\"[^\"]+\" x2=\"([^\"]+)\" y2=\"([^\"]+)\"")));
  std::string end = "cx=\"" + m[1].str() + "\" cy=\"" + m[2].str() + "\" r=\"3\" fill=\"#d95f02\"";
  CHECK(svg.find(end) != std::string::npos);
}

TEST_CASE("fill demo") {
  CHECK(parse_fill_order("natural") == FillOrder::natural);
  CHECK(parse_fill_order("mindegree") == FillOrder::mindegree);
  CHECK(parse_fill_order("nested") == FillOrder::nested);
  CHECK_THROWS_AS(parse_fill_order("rcm"), ConfigError);
  CHECK_THROWS_AS(fill_in_demo(FillOrder::natural, 0), ConfigError);

  for (long n : {2L, 4L, 7L, 16L}) CHECK(fill_in_for(grid_graph(int(n), int(n)), FillOrder::natural) ==
                                             natural_grid_fill(n));
  Graph g = grid_graph(16, 16);
  long nested = fill_in_for(g, FillOrder::nested);
  CHECK(nested < natural_grid_fill(16));
  CHECK(fill_in_for(g, FillOrder::mindegree) < natural_grid_fill(16));

  std::string text = fill_in_demo(FillOrder::nested, 16);
  CHECK(text.find("grid 16x16 (256 vertices, 480 edges)") != std::string::npos);
  CHECK(text.find("nested fill: " + std::to_string(nested) + "\n") != std::string::npos);
  CHECK(text.find("natural fill: " + std::to_string(natural_grid_fill(16)) + "\n") != std::string::npos);
}

TEST_CASE("command line") {
  auto [code, out] = run_cli("fill-demo --order nested --grid 16");
  CHECK(code == 0);
  CHECK(out == fill_in_demo(FillOrder::nested, 16));

  fs::path dir = fresh_dir("bench_cli");
  std::tie(code, out) = run_cli("bench --problem helmholtz --sizes 1k,2k --eps 1e-8,1e-10 --reps 1 --out " +
                                dir.string());
  CHECK(code == 0);
  auto rows = lines(out);
  REQUIRE(rows.size() == 5);
  CHECK(rows[0] == kCsvHeader);
  CHECK(slurp(dir / "records.csv") == out);
  for (const char* f : {"records.json", "scaling.svg", "partition.json"}) CHECK(fs::exists(dir / f));

  CHECK(run_cli("bench --problem helmholtz --sizes 2k,1k --out " + dir.string()).first == 1);
  CHECK(run_cli("bench --problem helmholtz --sizes 1k --eps 2 --out " + dir.string()).first == 1);
  CHECK(run_cli("fill-demo --order rcm").first == 1);
  CHECK(run_cli("bench --sizes 1k").first != 0);
}
