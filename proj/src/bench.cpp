#include "spalu/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "spalu/plot.hpp"
#include "spalu/solver.hpp"

namespace spalu {

const char* const kCsvHeader = "problem,N,n,eps,t_nd,t_f,t_s,qtilde,res,factor_nnz";

void BenchConfig::validate() const {
  for (size_t i = 1; i < sizes.size(); ++i)
    if (sizes[i] <= sizes[i - 1]) throw ConfigError("size ladder must be strictly increasing");
  for (long s : sizes)
    if (s < 1) throw ConfigError("sizes must be positive");
  for (double e : eps)
    if (!(e > 0 && e < 1)) throw ConfigError("eps values must lie in (0, 1)");
  if (repetitions < 1) throw ConfigError("repetitions must be >= 1");
  if (leaf_size < 1) throw ConfigError("leaf size must be >= 1");
}

FactorOptions factor_options(const BenchConfig& c, double eps) {
  FactorOptions o;
  o.eps = eps;
  o.sampling = c.sampling;
  o.oversample = c.oversample;
  o.near_radius = c.near_radius;
  o.seed = c.seed;
  o.min_sparsify_size = c.min_sparsify_size;
  o.threads = c.threads;
  return o;
}

namespace {

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

double seconds(std::chrono::steady_clock::time_point a, std::chrono::steady_clock::time_point b) {
  return std::chrono::duration<double>(b - a).count();
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string num(double v) {
  if (!std::isfinite(v)) return "nan";
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

}  // namespace

std::vector<BenchRecord> run_bench(const BenchConfig& config, std::ostream* log) {
  config.validate();
  const ProblemDescriptor pde = parse_descriptor(config.problem);
  std::vector<BenchRecord> records;
  std::string partition;
  for (long target : config.sizes) {
    ProblemInstance inst;
    std::string gen_error;
    try {
      inst = make_problem(pde, target);
    } catch (const std::exception& e) {
      gen_error = e.what();
    }
    for (double eps : config.eps) {
      BenchRecord r;
      r.problem = pde.str();
      r.eps = eps;
      r.N = gen_error.empty() ? long(inst.size()) : target;
      r.n = long(std::lround(std::sqrt(double(r.N))));
      if (!gen_error.empty()) {
        r.error = gen_error;
        if (log) *log << r.problem << " N=" << target << " eps=" << eps << " error: " << r.error << '\n';
        records.push_back(r);
        continue;
      }
      std::vector<double> tnd, tf, ts;
      try {
        for (int rep = 0; rep < config.repetitions; ++rep) {
          auto t0 = std::chrono::steady_clock::now();
          Graph g = Graph::from_matrix(inst.matrix, inst.coords);
          DissectionTree tree = build_dissection(g, {config.leaf_size, config.theta});
          auto t1 = std::chrono::steady_clock::now();
          auto F = factorize(inst.matrix, g, tree, factor_options(config, eps));
          auto t2 = std::chrono::steady_clock::now();
          auto S = solve(F, inst.matrix, Matrix<double>(inst.rhs), config.refine);
          auto t3 = std::chrono::steady_clock::now();
          tnd.push_back(seconds(t0, t1));
          tf.push_back(seconds(t1, t2));
          ts.push_back(seconds(t2, t3));
          r.qtilde = F.stats.qtilde;
          r.factor_nnz = F.stats.factor_nnz;
          r.levels = F.stats.levels;
          r.res = S.reports[0].residual;
          if (partition.empty()) partition = dissection_json(tree);
        }
        r.t_nd = median(tnd);
        r.t_f = median(tf);
        r.t_s = median(ts);
      } catch (const std::exception& e) {
        r.error = e.what();
      }
      if (log) {
        *log << r.problem << " N=" << r.N << " eps=" << eps;
        if (r.error.empty())
          *log << " t_nd=" << num(r.t_nd) << " t_f=" << num(r.t_f) << " t_s=" << num(r.t_s)
               << " qtilde=" << num(r.qtilde) << " res=" << num(r.res) << '\n';
        else
          *log << " error: " << r.error << '\n';
      }
      records.push_back(std::move(r));
    }
  }
  if (!config.out_dir.empty()) {
    namespace fs = std::filesystem;
    fs::create_directories(config.out_dir);
    std::ofstream(fs::path(config.out_dir) / "records.csv") << records_csv(records);
    std::ofstream(fs::path(config.out_dir) / "records.json") << records_json(records);
    if (!partition.empty()) std::ofstream(fs::path(config.out_dir) / "partition.json") << partition;
    std::ostringstream sink;
    emit_scaling_plot(records, (fs::path(config.out_dir) / "scaling.svg").string(), log ? *log : sink);
  }
  return records;
}

std::string records_csv(const std::vector<BenchRecord>& records) {
  std::ostringstream os;
  os << kCsvHeader << '\n';
  for (const auto& r : records) {
    bool ok = r.error.empty();
    os << csv_field(r.problem) << ',' << r.N << ',' << r.n << ',' << num(r.eps) << ','
       << (ok ? num(r.t_nd) : "nan") << ',' << (ok ? num(r.t_f) : "nan") << ',' << (ok ? num(r.t_s) : "nan")
       << ',' << (ok ? num(r.qtilde) : "nan") << ',' << (ok ? num(r.res) : "nan") << ',' << r.factor_nnz << '\n';
  }
  return os.str();
}

std::string records_json(const std::vector<BenchRecord>& records) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : records) {
    nlohmann::json j{{"problem", r.problem}, {"N", r.N},         {"n", r.n},
                     {"eps", r.eps},         {"t_nd", r.t_nd},   {"t_f", r.t_f},
                     {"t_s", r.t_s},         {"qtilde", r.qtilde}, {"res", r.res},
                     {"factor_nnz", r.factor_nnz}};
    auto& lv = j["levels"] = nlohmann::json::array();
    for (const auto& l : r.levels)
      lv.push_back({{"l", l.level},
                    {"num_segments", l.num_segments},
                    {"e_l", l.e_before},
                    {"e_l_prime", l.e_after},
                    {"time_sparsify", l.time_sparsify},
                    {"time_eliminate", l.time_eliminate}});
    if (!r.error.empty()) j["error"] = r.error;
    arr.push_back(std::move(j));
  }
  return arr.dump(2) + "\n";
}

FillOrder parse_fill_order(const std::string& name) {
  if (name == "natural") return FillOrder::natural;
  if (name == "mindegree") return FillOrder::mindegree;
  if (name == "nested") return FillOrder::nested;
  throw ConfigError("unknown order '" + name + "' (natural|mindegree|nested)");
}

long fill_in_for(const Graph& g, FillOrder order, int leaf_size) {
  switch (order) {
    case FillOrder::natural:
      return fill_in_count(g, natural_order(g));
    case FillOrder::mindegree:
      return fill_in_count(g, minimum_degree_order(g));
    case FillOrder::nested:
      return fill_in_count(g, build_dissection(g, {leaf_size, 0.1}).order);
  }
  return 0;
}

std::string fill_in_demo(FillOrder order, int grid, int leaf_size) {
  if (grid < 1) throw ConfigError("grid size must be >= 1");
  Graph g = grid_graph(grid, grid);
  static const char* names[] = {"natural", "mindegree", "nested"};
  std::ostringstream os;
  os << "grid " << grid << "x" << grid << " (" << g.size() << " vertices, " << g.num_edges() << " edges)\n";
  os << names[int(order)] << " fill: " << fill_in_for(g, order, leaf_size) << '\n';
  if (order != FillOrder::natural) os << "natural fill: " << fill_in_for(g, FillOrder::natural) << '\n';
  return os.str();
}

}  // namespace spalu
