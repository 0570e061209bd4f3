#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "spalu/dissection.hpp"
#include "spalu/factor.hpp"
#include "spalu/problem.hpp"

namespace spalu {

struct BenchConfig {
  std::string problem = "laplace-contrast:rho=1";
  std::vector<long> sizes;
  std::vector<double> eps{1e-12};
  double theta = 0.1;
  int leaf_size = 64;
  SamplingStrategy sampling = SamplingStrategy::hybrid;
  Index oversample = 5;
  double near_radius = 2;
  std::uint64_t seed = 0;
  Index min_sparsify_size = FactorOptions{}.min_sparsify_size;
  int threads = 1;
  int refine = 0;
  int repetitions = 3;
  std::string out_dir;  // empty: no files

  /// Throws ConfigError on a non-increasing ladder or eps outside (0, 1).
  void validate() const;
};

struct BenchRecord {
  std::string problem;
  long N = 0;
  long n = 0;  // ~ sqrt(N)
  double eps = 0;
  double t_nd = 0, t_f = 0, t_s = 0;
  double qtilde = 0;
  double res = 0;
  long factor_nnz = 0;
  std::vector<LevelStats> levels;
  std::string error;  // set when a phase failed
};

FactorOptions factor_options(const BenchConfig& c, double eps);

/// One record per (size, eps). Phase errors are stored in the record and the
/// remaining rows still run. Writes records.csv, records.json, scaling.svg and
/// partition.json into out_dir when it is set.
std::vector<BenchRecord> run_bench(const BenchConfig& config, std::ostream* log = nullptr);

extern const char* const kCsvHeader;
std::string records_csv(const std::vector<BenchRecord>& records);
std::string records_json(const std::vector<BenchRecord>& records);

enum class FillOrder { natural, mindegree, nested };

FillOrder parse_fill_order(const std::string& name);
long fill_in_for(const Graph& g, FillOrder order, int leaf_size = 16);

/// Fill counts of the requested ordering (and the natural one for reference)
/// on an n x n grid graph, as printable text.
std::string fill_in_demo(FillOrder order, int grid, int leaf_size = 16);

}  // namespace spalu
