#pragma once

// Log-linear SVG plots of echo tables: F on a log axis against t.

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "echolab/echo_table.hpp"

namespace echolab::cli {

enum class LayerKind { points, curves };

struct PlotLayer {
  EchoTable table;
  LayerKind kind = LayerKind::points;
  /// Legend prefix, e.g. "saddle" or "fit".
  std::string label;
};

struct PlotStyle {
  std::string title;
  int width = 720;
  int height = 480;
};

/// One legend entry per (layer, mode, n). Rows with F <= 0 are skipped.
/// Output depends only on the inputs. Throws DomainError when no layer has
/// a plottable row.
void render_plot_svg(const std::vector<PlotLayer>& layers, const PlotStyle& style,
                     std::ostream& out);
void render_plot_svg(const std::vector<PlotLayer>& layers, const PlotStyle& style,
                     const std::filesystem::path& path);

}  // namespace echolab::cli
