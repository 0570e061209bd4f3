#include <chrono>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "spalu/bench.hpp"
#include "spalu/matrix_market.hpp"
#include "spalu/solver.hpp"

using namespace spalu;

namespace {

SamplingStrategy parse_sampling(const std::string& s) {
  if (s == "hybrid") return SamplingStrategy::hybrid;
  if (s == "gaussian") return SamplingStrategy::gaussian;
  if (s == "none") return SamplingStrategy::none;
  throw ConfigError("unknown sampling '" + s + "' (hybrid|gaussian|none)");
}

template <class T>
std::vector<T> parse_list(const std::string& text) {
  std::vector<T> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::istringstream is(item);
    double v;
    if (!(is >> v)) throw ConfigError("bad list entry '" + item + "'");
    std::string rest;
    if (is >> rest) {
      if (rest == "k" || rest == "K") v *= 1024;
      else if (rest == "M" || rest == "m") v *= 1024 * 1024;
      else throw ConfigError("bad list entry '" + item + "'");
    }
    out.push_back(T(v));
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spaLU sparse direct solver"};
  app.require_subcommand(1);

  BenchConfig cfg;
  std::string sizes = "4096,16384,65536,262144,1048576", eps_list = "1e-12", sampling = "hybrid";
  long long seed = 0;
  auto* bench = app.add_subcommand("bench", "run the benchmark ladder");
  bench->add_option("--problem", cfg.problem, "problem descriptor")->required();
  bench->add_option("--sizes", sizes, "comma separated target unknown counts");
  bench->add_option("--eps", eps_list, "comma separated tolerances");
  bench->add_option("--theta", cfg.theta, "separator degree-bias weight");
  bench->add_option("--leaf", cfg.leaf_size, "leaf size");
  bench->add_option("--sampling", sampling, "hybrid|gaussian|none");
  bench->add_option("--oversample", cfg.oversample, "sketch oversampling");
  bench->add_option("--near-radius", cfg.near_radius, "near-field radius in mesh spacings");
  bench->add_option("--min-sparsify", cfg.min_sparsify_size, "smallest segment size that is sparsified");
  bench->add_option("--seed", seed, "sampling seed");
  bench->add_option("--threads", cfg.threads, "threads for interior elimination");
  bench->add_option("--refine", cfg.refine, "iterative refinement steps");
  bench->add_option("--reps", cfg.repetitions, "repetitions per record (median timing)");
  bench->add_option("--out", cfg.out_dir, "output directory")->required();

  std::string mtx, coords, rhs, out_x;
  double eps = 1e-10;
  int refine = 0;
  auto* solve_cmd = app.add_subcommand("solve", "factor and solve an external Matrix Market system");
  solve_cmd->add_option("--matrix", mtx, "matrix (.mtx)")->required();
  solve_cmd->add_option("--coords", coords, "coordinate sidecar, one 'x y' per unknown")->required();
  solve_cmd->add_option("--rhs", rhs, "right-hand side, one value per line");
  solve_cmd->add_option("--eps", eps, "tolerance");
  solve_cmd->add_option("--refine", refine, "iterative refinement steps");
  solve_cmd->add_option("--out", out_x, "solution output")->required();

  std::string order = "nested";
  int grid = 16, leaf = 16;
  auto* fill = app.add_subcommand("fill-demo", "symbolic fill-in of an ordering on a grid graph");
  fill->add_option("--order", order, "natural|mindegree|nested");
  fill->add_option("--grid", grid, "grid side length");
  fill->add_option("--leaf", leaf, "leaf size for the nested order");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*bench) {
      cfg.sizes = parse_list<long>(sizes);
      cfg.eps = parse_list<double>(eps_list);
      cfg.sampling = parse_sampling(sampling);
      cfg.seed = std::uint64_t(seed);
      auto records = run_bench(cfg, &std::cerr);
      std::cout << records_csv(records);
    } else if (*solve_cmd) {
      auto inst = read_matrix_market(mtx, coords, rhs);
      auto t0 = std::chrono::steady_clock::now();
      Graph g = Graph::from_matrix(inst.matrix, inst.coords);
      auto tree = build_dissection(g);
      auto t1 = std::chrono::steady_clock::now();
      FactorOptions opts;
      opts.eps = eps;
      auto F = factorize(inst.matrix, g, tree, opts);
      auto t2 = std::chrono::steady_clock::now();
      auto S = solve(F, inst.matrix, Matrix<double>(inst.rhs), refine);
      auto t3 = std::chrono::steady_clock::now();
      write_values(out_x, S.X.col(0));
      auto sec = [](auto a, auto b) { return std::chrono::duration<double>(b - a).count(); };
      std::cout << "N=" << inst.size() << " t_nd=" << sec(t0, t1) << " t_f=" << sec(t1, t2) << " t_s=" << sec(t2, t3)
                << " qtilde=" << F.stats.qtilde << " res=" << S.reports[0].residual
                << (S.reports[0].absolute ? " (absolute)" : "") << '\n';
    } else if (*fill) {
      std::cout << fill_in_demo(parse_fill_order(order), grid, leaf);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
