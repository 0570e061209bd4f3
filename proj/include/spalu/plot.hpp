#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "spalu/bench.hpp"

namespace spalu {

/// Least-squares slope of log(y) against log(x).
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

/// Log-log SVG of T^Nd, T^F and T^S against N for the first eps value with at
/// least two records, plus a dashed O(N) line through the first T^F point.
/// Returns false and writes a notice when there is nothing to plot.
bool emit_scaling_plot(const std::vector<BenchRecord>& records, const std::string& path, std::ostream& notice);

}  // namespace spalu
