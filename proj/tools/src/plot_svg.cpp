#include "echolab/cli/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>

#include "echolab/errors.hpp"

namespace echolab::cli {

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
                                    "#8c564b", "#e377c2", "#17becf", "#7f7f7f", "#bcbd22"};
constexpr int kMarginLeft = 72, kMarginRight = 180, kMarginTop = 40, kMarginBottom = 52;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string label_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

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

// Tick spacing from {1, 2, 5} x 10^k giving at most ~8 ticks.
double nice_step(double span) {
  if (!(span > 0.0)) return 1.0;
  const double raw = span / 6.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  for (double m : {1.0, 2.0, 5.0, 10.0})
    if (m * mag >= raw) return m * mag;
  return 10.0 * mag;
}

struct Series {
  std::string name;
  LayerKind kind;
  std::vector<std::pair<double, double>> xy;
};

}  // namespace

void render_plot_svg(const std::vector<PlotLayer>& layers, const PlotStyle& style,
                     std::ostream& out) {
  std::vector<Series> series;
  double t_lo = std::numeric_limits<double>::infinity(), t_hi = -t_lo;
  double f_lo = t_lo, f_hi = -t_lo;
  for (const auto& layer : layers) {
    for (const auto& [mode, n] : layer.table.keys()) {
      Series s;
      s.name = (layer.label.empty() ? "" : layer.label + " ") + to_string(mode) +
               " n=" + std::to_string(n);
      s.kind = layer.kind;
      for (const auto& row : layer.table.series(mode, n)) {
        if (!(row.F > 0.0) || !std::isfinite(row.t)) continue;
        s.xy.emplace_back(row.t, row.F);
        t_lo = std::min(t_lo, row.t);
        t_hi = std::max(t_hi, row.t);
        f_lo = std::min(f_lo, row.F);
        f_hi = std::max(f_hi, row.F);
      }
      if (!s.xy.empty()) series.push_back(std::move(s));
    }
  }
  if (series.empty()) throw DomainError("render_plot_svg: nothing to plot");

  const double dx_step = nice_step(t_hi - t_lo);
  const double x0 = std::floor(t_lo / dx_step) * dx_step;
  double x1 = std::ceil(t_hi / dx_step) * dx_step;
  if (x1 <= x0) x1 = x0 + dx_step;
  const double d0 = std::floor(std::log10(f_lo));
  double d1 = std::ceil(std::log10(f_hi));
  if (d1 <= d0) d1 = d0 + 1.0;

  const double W = style.width, H = style.height;
  const double pw = W - kMarginLeft - kMarginRight, ph = H - kMarginTop - kMarginBottom;
  const auto X = [&](double t) { return kMarginLeft + (t - x0) / (x1 - x0) * pw; };
  const auto Y = [&](double F) {
    return kMarginTop + (d1 - std::log10(F)) / (d1 - d0) * ph;
  };

  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << style.width
      << "\" height=\"" << style.height << "\" viewBox=\"0 0 " << style.width << ' '
      << style.height << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!style.title.empty())
    out << "<text x=\"" << num(kMarginLeft + pw / 2) << "\" y=\"24\" text-anchor=\"middle\""
        << " font-size=\"14\">" << escape(style.title) << "</text>\n";

  out << "<g stroke=\"#dddddd\" stroke-width=\"1\">\n";
  for (double d = d0; d <= d1 + 1e-9; d += 1.0)
    out << "<line x1=\"" << num(kMarginLeft) << "\" y1=\"" << num(Y(std::pow(10.0, d)))
        << "\" x2=\"" << num(kMarginLeft + pw) << "\" y2=\"" << num(Y(std::pow(10.0, d)))
        << "\"/>\n";
  out << "</g>\n";
  out << "<rect x=\"" << num(kMarginLeft) << "\" y=\"" << num(kMarginTop) << "\" width=\""
      << num(pw) << "\" height=\"" << num(ph) << "\" fill=\"none\" stroke=\"black\"/>\n";

  out << "<g text-anchor=\"middle\">\n";
  const long nx = std::lround((x1 - x0) / dx_step);
  for (long k = 0; k <= nx; ++k) {
    const double t = x0 + double(k) * dx_step;
    out << "<text x=\"" << num(X(t)) << "\" y=\"" << num(kMarginTop + ph + 18) << "\">"
        << label_number(t) << "</text>\n";
  }
  out << "<text x=\"" << num(kMarginLeft + pw / 2) << "\" y=\"" << num(H - 12)
      << "\">t</text>\n</g>\n";
  out << "<g text-anchor=\"end\">\n";
  for (double d = d0; d <= d1 + 1e-9; d += 1.0)
    out << "<text x=\"" << num(kMarginLeft - 6) << "\" y=\"" << num(Y(std::pow(10.0, d)) + 4)
        << "\">1e" << label_number(d) << "</text>\n";
  out << "</g>\n";
  out << "<text x=\"16\" y=\"" << num(kMarginTop + ph / 2) << "\" transform=\"rotate(-90 16 "
      << num(kMarginTop + ph / 2) << ")\" text-anchor=\"middle\">F</text>\n";

  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* color = kPalette[k % std::size(kPalette)];
    if (s.kind == LayerKind::curves) {
      out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
      for (std::size_t i = 0; i < s.xy.size(); ++i)
        out << (i ? " " : "") << num(X(s.xy[i].first)) << ',' << num(Y(s.xy[i].second));
      out << "\"/>\n";
    } else {
      out << "<g fill=\"" << color << "\">\n";
      for (const auto& [t, F] : s.xy)
        out << "<circle cx=\"" << num(X(t)) << "\" cy=\"" << num(Y(F)) << "\" r=\"2.5\"/>\n";
      out << "</g>\n";
    }
    const double ly = kMarginTop + 10 + 18.0 * double(k);
    const double lx = kMarginLeft + pw + 12;
    if (s.kind == LayerKind::curves)
      out << "<line x1=\"" << num(lx) << "\" y1=\"" << num(ly) << "\" x2=\"" << num(lx + 18)
          << "\" y2=\"" << num(ly) << "\" stroke=\"" << color << "\" stroke-width=\"1.5\"/>\n";
    else
      out << "<circle cx=\"" << num(lx + 9) << "\" cy=\"" << num(ly) << "\" r=\"2.5\" fill=\""
          << color << "\"/>\n";
    out << "<text x=\"" << num(lx + 24) << "\" y=\"" << num(ly + 4) << "\">" << escape(s.name)
        << "</text>\n";
  }
  out << "</svg>\n";
}

void render_plot_svg(const std::vector<PlotLayer>& layers, const PlotStyle& style,
                     const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DomainError("cannot write " + path.string());
  render_plot_svg(layers, style, out);
  if (!out) throw DomainError("write failed: " + path.string());
}

}  // namespace echolab::cli
