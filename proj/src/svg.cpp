#include "fimsindy/svg.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace fimsindy {

namespace {

// viridis samples at 0, 1/8, ..., 1
constexpr std::array<std::array<int, 3>, 9> kStops{{{68, 1, 84},
                                                    {71, 44, 122},
                                                    {59, 81, 139},
                                                    {44, 113, 142},
                                                    {33, 144, 141},
                                                    {39, 173, 129},
                                                    {92, 200, 99},
                                                    {170, 220, 50},
                                                    {253, 231, 37}}};

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

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

}  // namespace

std::string svg_number(double v) {
    if (!std::isfinite(v)) return v > 0 ? "inf" : (v < 0 ? "-inf" : "nan");
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

std::string colormap_hex(double u) {
    if (!(u >= 0.0)) u = 0.0;
    if (u > 1.0) u = 1.0;
    const double s = u * 8.0;
    const int i = std::min(7, static_cast<int>(s));
    const double f = s - i;
    char buf[8];
    int rgb[3];
    for (int k = 0; k < 3; ++k)
        rgb[k] = static_cast<int>(std::lround(kStops[i][k] + f * (kStops[i + 1][k] - kStops[i][k])));
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", rgb[0], rgb[1], rgb[2]);
    return buf;
}

std::string heatmap_svg(const Eigen::MatrixXd& values, const HeatmapOptions& opts) {
    const int rows = static_cast<int>(values.rows()), cols = static_cast<int>(values.cols());
    auto tr = [&](double v) { return opts.log_scale ? (v > 0.0 ? std::log10(v) : std::nan("")) : v; };
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) {
            const double v = tr(values(r, c));
            if (!std::isfinite(v)) continue;
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    if (!(lo <= hi)) lo = hi = 0.0;

    const int px = opts.cell_px, left = 60, top = 30, bar = 20;
    const int w = left + cols * px + 30 + bar + 70, h = top + rows * px + 50;
    std::ostringstream s;
    s << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    s << "<text x=\"" << left << "\" y=\"18\" font-size=\"13\">" << escape(opts.title) << "</text>\n";
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) {
            const double v = tr(values(r, c));
            const std::string fill = std::isfinite(v) ? colormap_hex(hi > lo ? (v - lo) / (hi - lo) : 0.5) : "#bbbbbb";
            s << "<rect x=\"" << left + c * px << "\" y=\"" << top + (rows - 1 - r) * px << "\" width=\"" << px
              << "\" height=\"" << px << "\" fill=\"" << fill << "\"><title>" << svg_number(values(r, c))
              << "</title></rect>\n";
        }
    const int y_axis = top + rows * px;
    s << "<text x=\"" << left << "\" y=\"" << y_axis + 15 << "\">" << svg_number(opts.x_min) << "</text>\n";
    s << "<text x=\"" << left + cols * px << "\" y=\"" << y_axis + 15 << "\" text-anchor=\"end\">"
      << svg_number(opts.x_max) << "</text>\n";
    s << "<text x=\"" << left + cols * px / 2 << "\" y=\"" << y_axis + 35 << "\" text-anchor=\"middle\">"
      << escape(opts.x_label) << "</text>\n";
    s << "<text x=\"" << left - 5 << "\" y=\"" << y_axis << "\" text-anchor=\"end\">" << svg_number(opts.y_min)
      << "</text>\n";
    s << "<text x=\"" << left - 5 << "\" y=\"" << top + 10 << "\" text-anchor=\"end\">" << svg_number(opts.y_max)
      << "</text>\n";
    s << "<text x=\"15\" y=\"" << top + rows * px / 2 << "\" transform=\"rotate(-90 15 " << top + rows * px / 2
      << ")\" text-anchor=\"middle\">" << escape(opts.y_label) << "</text>\n";

    const int bx = left + cols * px + 30, steps = 50;
    const double bh = static_cast<double>(rows * px) / steps;
    for (int k = 0; k < steps; ++k) {
        const double u = (k + 0.5) / steps;
        s << "<rect x=\"" << bx << "\" y=\"" << svg_number(top + rows * px - (k + 1) * bh) << "\" width=\"" << bar
          << "\" height=\"" << svg_number(bh + 0.5) << "\" fill=\"" << colormap_hex(u) << "\"/>\n";
    }
    const std::string prefix = opts.log_scale ? "1e" : "";
    s << "<text x=\"" << bx + bar + 4 << "\" y=\"" << top + rows * px << "\">" << prefix << svg_number(lo)
      << "</text>\n";
    s << "<text x=\"" << bx + bar + 4 << "\" y=\"" << top + 10 << "\">" << prefix << svg_number(hi) << "</text>\n";
    s << "</svg>\n";
    return s.str();
}

std::string line_plot_svg(const std::vector<Panel>& panels) {
    const int left = 70, right = 20, top_pad = 30, bottom_pad = 40;
    int width = 0, total_h = 0;
    for (const auto& p : panels) {
        width = std::max(width, p.opts.width);
        total_h += p.opts.height;
    }
    std::ostringstream s;
    s << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << total_h
      << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    int y0 = 0;
    for (const auto& p : panels) {
        const int pw = p.opts.width - left - right, ph = p.opts.height - top_pad - bottom_pad;
        auto ty = [&](double v) { return p.opts.log_y ? (v > 0.0 ? std::log10(v) : std::nan("")) : v; };
        double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin, ymin = xmin, ymax = -xmin;
        for (const auto& se : p.series)
            for (std::size_t i = 0; i < se.x.size() && i < se.y.size(); ++i) {
                const double yv = ty(se.y[i]);
                if (!std::isfinite(se.x[i]) || !std::isfinite(yv)) continue;
                xmin = std::min(xmin, se.x[i]);
                xmax = std::max(xmax, se.x[i]);
                ymin = std::min(ymin, yv);
                ymax = std::max(ymax, yv);
            }
        if (!(xmin <= xmax)) xmin = 0.0, xmax = 1.0;
        if (!(ymin <= ymax)) ymin = 0.0, ymax = 1.0;
        if (xmax == xmin) xmin -= 0.5, xmax += 0.5;
        if (ymax == ymin) ymin -= 0.5, ymax += 0.5;
        const int ox = left, oy = y0 + top_pad;
        auto px = [&](double x) { return ox + (x - xmin) / (xmax - xmin) * pw; };
        auto py = [&](double y) { return oy + ph - (y - ymin) / (ymax - ymin) * ph; };

        s << "<g>\n<text x=\"" << ox << "\" y=\"" << y0 + 18 << "\" font-size=\"13\">" << escape(p.opts.title)
          << "</text>\n";
        s << "<rect x=\"" << ox << "\" y=\"" << oy << "\" width=\"" << pw << "\" height=\"" << ph
          << "\" fill=\"none\" stroke=\"black\"/>\n";
        const std::string yp = p.opts.log_y ? "1e" : "";
        s << "<text x=\"" << ox - 4 << "\" y=\"" << oy + ph << "\" text-anchor=\"end\">" << yp << svg_number(ymin)
          << "</text>\n";
        s << "<text x=\"" << ox - 4 << "\" y=\"" << oy + 10 << "\" text-anchor=\"end\">" << yp << svg_number(ymax)
          << "</text>\n";
        s << "<text x=\"" << ox << "\" y=\"" << oy + ph + 14 << "\">" << svg_number(xmin) << "</text>\n";
        s << "<text x=\"" << ox + pw << "\" y=\"" << oy + ph + 14 << "\" text-anchor=\"end\">" << svg_number(xmax)
          << "</text>\n";
        s << "<text x=\"" << ox + pw / 2 << "\" y=\"" << oy + ph + 30 << "\" text-anchor=\"middle\">"
          << escape(p.opts.x_label) << "</text>\n";
        s << "<text x=\"14\" y=\"" << oy + ph / 2 << "\" transform=\"rotate(-90 14 " << oy + ph / 2
          << ")\" text-anchor=\"middle\">" << escape(p.opts.y_label) << "</text>\n";
        for (std::size_t k = 0; k < p.series.size(); ++k) {
            const auto& se = p.series[k];
            const char* color = kPalette[k % 6];
            std::ostringstream pts;
            std::size_t n_pts = 0;
            for (std::size_t i = 0; i < se.x.size() && i < se.y.size(); ++i) {
                const double yv = ty(se.y[i]);
                if (!std::isfinite(se.x[i]) || !std::isfinite(yv)) continue;
                pts << svg_number(px(se.x[i])) << ',' << svg_number(py(yv)) << ' ';
                ++n_pts;
            }
            if (n_pts == 1 || se.markers) {
                // a single point would be an invisible polyline
                std::istringstream all(pts.str());
                std::string xy;
                while (all >> xy) {
                    const auto comma = xy.find(',');
                    s << "<circle cx=\"" << xy.substr(0, comma) << "\" cy=\"" << xy.substr(comma + 1)
                      << "\" r=\"" << (se.markers ? 2 : 3) << "\" fill=\"" << color << "\"/>\n";
                }
            } else if (n_pts > 1) {
                s << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.2\" points=\"" << pts.str()
                  << "\"/>\n";
            }
            s << "<text x=\"" << ox + pw - 4 << "\" y=\"" << oy + 14 + 13 * static_cast<int>(k)
              << "\" text-anchor=\"end\" fill=\"" << color << "\">" << escape(se.label) << "</text>\n";
        }
        s << "</g>\n";
        y0 += p.opts.height;
    }
    s << "</svg>\n";
    return s.str();
}

}  // namespace fimsindy
