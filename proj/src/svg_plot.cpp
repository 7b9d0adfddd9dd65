#include "hais/svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>
#include <vector>

#include "hais/errors.hpp"

namespace hais {

namespace {

constexpr double kWidth = 860, kHeight = 520;
constexpr double kLeft = 70, kRight = 830, kTop = 50, kBottom = 460;

std::string fmt(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

const char* series_color(Estimator e) {
  switch (e) {
    case Estimator::kHais: return "#1f4fd8";
    case Estimator::kAisHmcReset: return "#1a9e3c";
    case Estimator::kAisMh: return "#d82f1f";
  }
  return "#000000";
}

void draw_marker(std::ostringstream& os, Estimator e, double x, double y) {
  const char* color = series_color(e);
  switch (e) {
    case Estimator::kHais:  // cross
      os << "<path d=\"M" << fmt(x - 4) << " " << fmt(y - 4) << " L" << fmt(x + 4) << " "
         << fmt(y + 4) << " M" << fmt(x - 4) << " " << fmt(y + 4) << " L" << fmt(x + 4) << " "
         << fmt(y - 4) << "\" stroke=\"" << color << "\" stroke-width=\"1.6\" fill=\"none\"/>\n";
      break;
    case Estimator::kAisHmcReset:  // six-point star
      os << "<path d=\"M" << fmt(x) << " " << fmt(y - 5) << " L" << fmt(x) << " " << fmt(y + 5)
         << " M" << fmt(x - 4.3) << " " << fmt(y - 2.5) << " L" << fmt(x + 4.3) << " "
         << fmt(y + 2.5) << " M" << fmt(x - 4.3) << " " << fmt(y + 2.5) << " L" << fmt(x + 4.3)
         << " " << fmt(y - 2.5) << "\" stroke=\"" << color
         << "\" stroke-width=\"1.4\" fill=\"none\"/>\n";
      break;
    case Estimator::kAisMh:  // dot
      os << "<circle cx=\"" << fmt(x) << "\" cy=\"" << fmt(y) << "\" r=\"3.2\" fill=\"" << color
         << "\"/>\n";
      break;
  }
}

}  // namespace

std::string render_sweep_svg(std::span<const SweepRow> rows, const SweepPlotOptions& options) {
  if (rows.empty()) throw ContractViolation("render_sweep_svg: no rows");

  double n_min = rows.front().n_distributions, n_max = n_min;
  double z_min = rows.front().log_z, z_max = z_min;
  for (const auto& r : rows) {
    n_min = std::min(n_min, static_cast<double>(r.n_distributions));
    n_max = std::max(n_max, static_cast<double>(r.n_distributions));
    if (std::isfinite(r.log_z)) {
      z_min = std::min(z_min, r.log_z);
      z_max = std::max(z_max, r.log_z);
    }
  }
  if (options.truth) {
    z_min = std::min(z_min, *options.truth);
    z_max = std::max(z_max, *options.truth);
  }
  if (!(z_max > z_min)) {
    z_min -= 1.0;
    z_max += 1.0;
  }
  const double pad = 0.06 * (z_max - z_min);
  z_min -= pad;
  z_max += pad;
  const double lx_min = std::log10(std::max(1.0, n_min));
  const double lx_max = std::log10(std::max(n_min + 1.0, n_max));

  auto sx = [&](double n) {
    if (lx_max == lx_min) return 0.5 * (kLeft + kRight);
    return kLeft + (std::log10(n) - lx_min) / (lx_max - lx_min) * (kRight - kLeft);
  };
  auto sy = [&](double z) { return kBottom - (z - z_min) / (z_max - z_min) * (kBottom - kTop); };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
     << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n";
  os << "<rect width=\"" << kWidth << "\" height=\"" << kHeight << "\" fill=\"white\"/>\n";
  os << "<text x=\"" << fmt(0.5 * (kLeft + kRight)) << "\" y=\"28\" text-anchor=\"middle\" "
        "font-family=\"sans-serif\" font-size=\"16\">"
     << options.title << "</text>\n";

  // axes
  os << "<line x1=\"" << kLeft << "\" y1=\"" << kBottom << "\" x2=\"" << kRight << "\" y2=\""
     << kBottom << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\"" << kBottom
     << "\" stroke=\"black\"/>\n";

  // x ticks at decades (and the extremes)
  std::vector<double> xticks;
  for (int d = static_cast<int>(std::floor(lx_min)); d <= static_cast<int>(std::ceil(lx_max)); ++d) {
    const double n = std::pow(10.0, d);
    if (n >= n_min * 0.999 && n <= n_max * 1.001) xticks.push_back(n);
  }
  if (xticks.empty()) xticks = {n_min, n_max};
  for (double n : xticks) {
    const double x = sx(n);
    os << "<line x1=\"" << fmt(x) << "\" y1=\"" << kBottom << "\" x2=\"" << fmt(x) << "\" y2=\""
       << kBottom + 6 << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << fmt(x) << "\" y=\"" << kBottom + 22
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" << fmt(n)
       << "</text>\n";
  }
  os << "<text x=\"" << fmt(0.5 * (kLeft + kRight)) << "\" y=\"" << kBottom + 44
     << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">intermediate "
        "distributions N</text>\n";

  // y ticks
  for (int i = 0; i <= 5; ++i) {
    const double z = z_min + (z_max - z_min) * i / 5.0;
    const double y = sy(z);
    os << "<line x1=\"" << kLeft - 6 << "\" y1=\"" << fmt(y) << "\" x2=\"" << kLeft << "\" y2=\""
       << fmt(y) << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << kLeft - 10 << "\" y=\"" << fmt(y + 4)
       << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\">" << fmt(z)
       << "</text>\n";
  }
  os << "<text x=\"18\" y=\"" << fmt(0.5 * (kTop + kBottom))
     << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
        "transform=\"rotate(-90 18 "
     << fmt(0.5 * (kTop + kBottom)) << ")\">log Z estimate</text>\n";

  if (options.truth) {
    const double y = sy(*options.truth);
    os << "<line x1=\"" << kLeft << "\" y1=\"" << fmt(y) << "\" x2=\"" << kRight << "\" y2=\""
       << fmt(y) << "\" stroke=\"#1f4fd8\" stroke-width=\"1.4\" stroke-dasharray=\"7,5\"/>\n";
    os << "<text x=\"" << kRight - 4 << "\" y=\"" << fmt(y - 6)
       << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\" "
          "fill=\"#1f4fd8\">analytic</text>\n";
  }

  std::map<Estimator, bool> seen;
  for (const auto& r : rows) {
    if (!std::isfinite(r.log_z)) continue;
    draw_marker(os, r.estimator, sx(r.n_distributions), sy(r.log_z));
    seen[r.estimator] = true;
  }

  double ly = kTop + 8;
  for (const auto& [est, _] : seen) {
    draw_marker(os, est, kRight - 150, ly);
    os << "<text x=\"" << kRight - 138 << "\" y=\"" << fmt(ly + 4)
       << "\" font-family=\"sans-serif\" font-size=\"12\">" << estimator_name(est) << "</text>\n";
    ly += 20;
  }

  os << "</svg>\n";
  return os.str();
}

}  // namespace hais
