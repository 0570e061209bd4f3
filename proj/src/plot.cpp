#include "spalu/plot.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

namespace spalu {

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw DimensionError("slope needs two or more points");
  double n = double(x.size()), sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

bool emit_scaling_plot(const std::vector<BenchRecord>& records, const std::string& path, std::ostream& notice) {
  std::vector<const BenchRecord*> pts;
  for (const auto& r : records) {
    if (!r.error.empty() || r.t_f <= 0) continue;
    size_t same = 0;
    for (const auto& s : records)
      if (s.error.empty() && s.eps == r.eps && s.t_f > 0) ++same;
    if (same >= 2) {
      for (const auto& s : records)
        if (s.error.empty() && s.eps == r.eps && s.t_f > 0) pts.push_back(&s);
      break;
    }
  }
  if (pts.size() < 2) {
    notice << "scaling plot skipped: fewer than 2 records with a common eps\n";
    return false;
  }

  const double W = 640, H = 440, L = 70, R = 20, T = 30, B = 50;
  double xmin = 1e300, xmax = 0, ymin = 1e300, ymax = 0;
  for (auto* p : pts) {
    xmin = std::min(xmin, double(p->N));
    xmax = std::max(xmax, double(p->N));
    for (double t : {p->t_nd, p->t_f, p->t_s})
      if (t > 0) {
        ymin = std::min(ymin, t);
        ymax = std::max(ymax, t);
      }
  }
  const double ref0 = pts.front()->t_f / double(pts.front()->N);
  ymin = std::min(ymin, ref0 * xmin);
  ymax = std::max(ymax, ref0 * xmax);
  double lx0 = std::floor(std::log10(xmin)), lx1 = std::ceil(std::log10(xmax));
  double ly0 = std::floor(std::log10(ymin)), ly1 = std::ceil(std::log10(ymax));
  if (lx1 == lx0) lx1 += 1;
  if (ly1 == ly0) ly1 += 1;
  auto px = [&](double x) { return L + (std::log10(x) - lx0) / (lx1 - lx0) * (W - L - R); };
  auto py = [&](double y) { return H - B - (std::log10(y) - ly0) / (ly1 - ly0) * (H - T - B); };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W - L - R << "\" height=\"" << H - T - B
      << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (double e = lx0; e <= lx1; ++e)
    svg << "<text x=\"" << px(std::pow(10, e)) << "\" y=\"" << H - B + 18 << "\" text-anchor=\"middle\">1e"
        << int(e) << "</text>\n";
  for (double e = ly0; e <= ly1; ++e)
    svg << "<text x=\"" << L - 6 << "\" y=\"" << py(std::pow(10, e)) + 4 << "\" text-anchor=\"end\">1e" << int(e)
        << "</text>\n";
  svg << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 10 << "\" text-anchor=\"middle\">N</text>\n";
  svg << "<text x=\"16\" y=\"" << (T + H - B) / 2 << "\" transform=\"rotate(-90 16 " << (T + H - B) / 2
      << ")\" text-anchor=\"middle\">seconds</text>\n";

  struct Curve {
    const char* name;
    const char* color;
    double BenchRecord::*field;
  };
  const Curve curves[] = {{"T^Nd", "#1b9e77", &BenchRecord::t_nd},
                          {"T^F", "#d95f02", &BenchRecord::t_f},
                          {"T^S", "#7570b3", &BenchRecord::t_s}};
  int row = 0;
  for (const auto& c : curves) {
    svg << "<polyline fill=\"none\" stroke=\"" << c.color << "\" stroke-width=\"2\" points=\"";
    for (auto* p : pts)
      if (p->*c.field > 0) svg << px(double(p->N)) << ',' << py(p->*c.field) << ' ';
    svg << "\"/>\n";
    for (auto* p : pts)
      if (p->*c.field > 0)
        svg << "<circle cx=\"" << px(double(p->N)) << "\" cy=\"" << py(p->*c.field) << "\" r=\"3\" fill=\"" << c.color
            << "\"/>\n";
    svg << "<text x=\"" << L + 10 << "\" y=\"" << T + 16 + 16 * row << "\" fill=\"" << c.color << "\">" << c.name
        << "</text>\n";
    ++row;
  }
  svg << "<line x1=\"" << px(xmin) << "\" y1=\"" << py(ref0 * xmin) << "\" x2=\"" << px(xmax) << "\" y2=\""
      << py(ref0 * xmax) << "\" stroke=\"gray\" stroke-dasharray=\"6 4\"/>\n";
  svg << "<text x=\"" << L + 10 << "\" y=\"" << T + 16 + 16 * row << "\" fill=\"gray\">O(N)</text>\n";
  svg << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << T - 10 << "\" text-anchor=\"middle\">"
      << pts.front()->problem << ", eps=" << pts.front()->eps << "</text>\n";
  svg << "</svg>\n";

  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << svg.str();
  return true;
}

}  // namespace spalu
