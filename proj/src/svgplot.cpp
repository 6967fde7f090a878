#include "svgplot.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace correctorlab::svg {

namespace {

constexpr double kWidth = 640, kHeight = 420;
constexpr double kLeft = 70, kRight = 160, kTop = 40, kBottom = 50;
const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Axis {
  bool log = false;
  double lo = 0, hi = 1;
  double map(double v, double a, double b) const {
    const double t = log ? (std::log10(v) - lo) / (hi - lo) : (v - lo) / (hi - lo);
    return a + t * (b - a);
  }
  bool shows(double v) const { return std::isfinite(v) && (!log || v > 0); }
};

Axis fit_axis(const std::vector<double>& vals, bool log) {
  Axis ax;
  ax.log = log;
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (double v : vals)
    if (ax.shows(v)) {
      const double t = log ? std::log10(v) : v;
      lo = std::min(lo, t), hi = std::max(hi, t);
    }
  if (!std::isfinite(lo)) lo = 0, hi = 1;
  if (hi - lo < 1e-12) lo -= 0.5, hi += 0.5;
  const double pad = 0.05 * (hi - lo);
  ax.lo = lo - pad;
  ax.hi = hi + pad;
  return ax;
}

std::string tick_label(double t, bool log) {
  std::ostringstream os;
  os.precision(3);
  os << (log ? std::pow(10.0, t) : t);
  return os.str();
}

}  // namespace

void write(const Plot& plot, const std::filesystem::path& path) {
  std::vector<double> xs, ys;
  for (const auto& s : plot.series) {
    xs.insert(xs.end(), s.x.begin(), s.x.end());
    ys.insert(ys.end(), s.y.begin(), s.y.end());
    ys.insert(ys.end(), s.y_low.begin(), s.y_low.end());
    ys.insert(ys.end(), s.y_high.begin(), s.y_high.end());
  }
  const Axis ax = fit_axis(xs, plot.log_x), ay = fit_axis(ys, plot.log_y);
  const double x0 = kLeft, x1 = kWidth - kRight, y0 = kHeight - kBottom, y1 = kTop;

  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out << "<desc>" << escape(plot.description) << "</desc>\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
      << escape(plot.title) << "</text>\n";
  out << "<rect x=\"" << x0 << "\" y=\"" << y1 << "\" width=\"" << x1 - x0 << "\" height=\""
      << y0 - y1 << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double fx = ax.lo + (ax.hi - ax.lo) * t / 4, fy = ay.lo + (ay.hi - ay.lo) * t / 4;
    const double px = x0 + (x1 - x0) * t / 4, py = y0 + (y1 - y0) * t / 4;
    out << "<text x=\"" << px << "\" y=\"" << y0 + 16 << "\" text-anchor=\"middle\">"
        << tick_label(fx, ax.log) << "</text>\n";
    out << "<text x=\"" << x0 - 6 << "\" y=\"" << py + 4 << "\" text-anchor=\"end\">"
        << tick_label(fy, ay.log) << "</text>\n";
  }
  out << "<text x=\"" << (x0 + x1) / 2 << "\" y=\"" << kHeight - 12 << "\" text-anchor=\"middle\">"
      << escape(plot.x_label) << "</text>\n";
  out << "<text transform=\"translate(16," << (y0 + y1) / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
      << escape(plot.y_label) << "</text>\n";

  for (std::size_t si = 0; si < plot.series.size(); ++si) {
    const auto& s = plot.series[si];
    const char* color = kColors[si % std::size(kColors)];
    std::ostringstream poly;
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (!ax.shows(s.x[i]) || !ay.shows(s.y[i])) continue;
      const double px = ax.map(s.x[i], x0, x1), py = ay.map(s.y[i], y0, y1);
      poly << px << ',' << py << ' ';
      out << "<circle cx=\"" << px << "\" cy=\"" << py << "\" r=\"3\" fill=\"" << color << "\"/>\n";
      if (i < s.y_low.size() && i < s.y_high.size() && ay.shows(s.y_low[i]) && ay.shows(s.y_high[i]))
        out << "<line x1=\"" << px << "\" x2=\"" << px << "\" y1=\"" << ay.map(s.y_low[i], y0, y1)
            << "\" y2=\"" << ay.map(s.y_high[i], y0, y1) << "\" stroke=\"" << color << "\"/>\n";
    }
    if (s.lines)
      out << "<polyline points=\"" << poly.str() << "\" fill=\"none\" stroke=\"" << color << "\"/>\n";
    const double ly = y1 + 14 + 18 * si;
    out << "<rect x=\"" << x1 + 12 << "\" y=\"" << ly - 9 << "\" width=\"10\" height=\"10\" fill=\""
        << color << "\"/>\n";
    out << "<text x=\"" << x1 + 28 << "\" y=\"" << ly << "\">" << escape(s.name) << "</text>\n";
  }
  out << "</svg>\n";
}

}  // namespace correctorlab::svg
