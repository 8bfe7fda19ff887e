#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace fimsindy {

/// Numbers printed into SVG text and attributes use 6 significant digits.
std::string svg_number(double v);

struct HeatmapOptions {
    std::string title;
    std::string x_label = "x";
    std::string y_label = "y";
    double x_min = 0.0, x_max = 1.0, y_min = 0.0, y_max = 1.0;
    bool log_scale = false;
    int cell_px = 20;
};

/// Heatmap of values(row, col), row 0 drawn at the bottom (y_min). Non-finite
/// cells are drawn grey; with log_scale, nonpositive cells too.
std::string heatmap_svg(const Eigen::MatrixXd& values, const HeatmapOptions& opts);

struct Series {
    std::string label;
    std::vector<double> x, y;
    bool markers = false;  // draw points instead of a line
};

struct LinePlotOptions {
    std::string title;
    std::string x_label = "t";
    std::string y_label;
    bool log_y = false;
    int width = 640, height = 240;
};

struct Panel {
    LinePlotOptions opts;
    std::vector<Series> series;
};

/// Vertically stacked line plots sharing one document.
std::string line_plot_svg(const std::vector<Panel>& panels);

/// RGB of the fixed 9-stop ramp at u in [0, 1].
std::string colormap_hex(double u);

}  // namespace fimsindy
