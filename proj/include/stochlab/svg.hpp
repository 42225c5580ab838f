#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "stochlab/csv.hpp"

namespace stochlab {

/// Static line-plot rendering: one panel per selected column versus the time
/// column, laid out in rows of up to three panels. Output bytes are a pure
/// function of the input table and panel list.
inline std::string render_svg(const CsvTable& table, const std::vector<std::string>& panels,
                              const std::string& x_column = "t") {
    if (table.rows.size() < 2) throw std::invalid_argument("svg: need at least two rows to plot");
    if (panels.empty()) throw std::invalid_argument("svg: no panels selected");
    const std::size_t xi = table.column(x_column);

    const int panel_w = 340, panel_h = 240;
    const int margin_l = 52, margin_r = 12, margin_t = 28, margin_b = 34;
    const int per_row = std::min<std::size_t>(3, panels.size());
    const int n_rows = static_cast<int>((panels.size() + per_row - 1) / per_row);
    const int width = per_row * panel_w;
    const int height = n_rows * panel_h;

    auto fmt = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.6g", v);
        return std::string(buf);
    };

    std::string out;
    out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width) +
           "\" height=\"" + std::to_string(height) + "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

    for (std::size_t p = 0; p < panels.size(); ++p) {
        const std::size_t ci = table.column(panels[p]);
        const int ox = static_cast<int>(p % per_row) * panel_w;
        const int oy = static_cast<int>(p / per_row) * panel_h;
        const double x0 = ox + margin_l, y0 = oy + margin_t;
        const double plot_w = panel_w - margin_l - margin_r;
        const double plot_h = panel_h - margin_t - margin_b;

        double tmin = table.rows.front()[xi], tmax = tmin;
        double vmin = table.rows.front()[ci], vmax = vmin;
        for (const auto& row : table.rows) {
            tmin = std::min(tmin, row[xi]);
            tmax = std::max(tmax, row[xi]);
            vmin = std::min(vmin, row[ci]);
            vmax = std::max(vmax, row[ci]);
        }
        if (tmax == tmin) tmax = tmin + 1.0;
        if (vmax == vmin) {
            vmax += 0.5;
            vmin -= 0.5;
        }

        out += "<text x=\"" + fmt(x0 + plot_w / 2) + "\" y=\"" + fmt(oy + 18) +
               "\" text-anchor=\"middle\">" + panels[p] + "</text>\n";
        out += "<rect x=\"" + fmt(x0) + "\" y=\"" + fmt(y0) + "\" width=\"" + fmt(plot_w) +
               "\" height=\"" + fmt(plot_h) + "\" fill=\"none\" stroke=\"black\"/>\n";

        out += "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1\" points=\"";
        for (std::size_t r = 0; r < table.rows.size(); ++r) {
            const double px = x0 + (table.rows[r][xi] - tmin) / (tmax - tmin) * plot_w;
            const double py = y0 + plot_h - (table.rows[r][ci] - vmin) / (vmax - vmin) * plot_h;
            if (r) out += ' ';
            out += fmt(px) + "," + fmt(py);
        }
        out += "\"/>\n";

        out += "<text x=\"" + fmt(x0 - 4) + "\" y=\"" + fmt(y0 + 10) +
               "\" text-anchor=\"end\">" + fmt(vmax) + "</text>\n";
        out += "<text x=\"" + fmt(x0 - 4) + "\" y=\"" + fmt(y0 + plot_h) +
               "\" text-anchor=\"end\">" + fmt(vmin) + "</text>\n";
        out += "<text x=\"" + fmt(x0) + "\" y=\"" + fmt(y0 + plot_h + 16) +
               "\" text-anchor=\"middle\">" + fmt(tmin) + "</text>\n";
        out += "<text x=\"" + fmt(x0 + plot_w) + "\" y=\"" + fmt(y0 + plot_h + 16) +
               "\" text-anchor=\"middle\">" + fmt(tmax) + "</text>\n";
        out += "<text x=\"" + fmt(x0 + plot_w / 2) + "\" y=\"" + fmt(y0 + plot_h + 28) +
               "\" text-anchor=\"middle\">" + x_column + "</text>\n";
    }
    out += "</svg>\n";
    return out;
}

inline void write_svg(const std::string& path, const CsvTable& table,
                      const std::vector<std::string>& panels, const std::string& x_column = "t") {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("svg: cannot open '" + path + "' for writing");
    f << render_svg(table, panels, x_column);
    if (!f) throw std::runtime_error("svg: write to '" + path + "' failed");
}

}  // namespace stochlab
