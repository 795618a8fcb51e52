#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "cocluster/csv.hpp"
#include "cocluster/evaluation.hpp"

namespace cocluster {

/// Static SVG line chart of mean RandIndex vs K for one domain, one line per
/// method.
inline void write_report_svg(const std::filesystem::path& path, const EvalReport& report,
                             const std::string& domain) {
  // method -> k -> (sum, count)
  std::map<std::string, std::map<int, std::pair<double, int>>> series;
  int k_min = 0, k_max = 0;
  bool any = false;
  for (const auto& r : report.rows) {
    if (r.domain != domain) continue;
    auto& cell = series[r.method][r.k];
    cell.first += r.rand_index;
    cell.second += 1;
    if (!any) {
      k_min = k_max = r.k;
      any = true;
    } else {
      k_min = std::min(k_min, r.k);
      k_max = std::max(k_max, r.k);
    }
  }

  const double width = 640, height = 420;
  const double left = 60, right = 20, top = 40, bottom = 50;
  const double plot_w = width - left - right;
  const double plot_h = height - top - bottom;
  auto x_of = [&](double k) {
    if (k_max == k_min) return left + plot_w / 2;
    return left + plot_w * (k - k_min) / (k_max - k_min);
  };
  auto y_of = [&](double ri) { return top + plot_h * (1.0 - ri); };

  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                  "#ff7f0e", "#8c564b"};

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\""
      << " font-size=\"16\">RandIndex vs K (" << domain << " domain)</text>\n";

  // Axes and gridlines.
  for (int i = 0; i <= 5; ++i) {
    const double ri = i / 5.0;
    const double y = y_of(ri);
    out << "<line x1=\"" << left << "\" y1=\"" << y << "\" x2=\"" << left + plot_w << "\" y2=\""
        << y << "\" stroke=\"#dddddd\"/>\n";
    out << "<text x=\"" << left - 8 << "\" y=\"" << y + 4
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
        << format_double(ri) << "</text>\n";
  }
  if (any) {
    for (int k = k_min; k <= k_max; ++k) {
      const double x = x_of(k);
      out << "<text x=\"" << x << "\" y=\"" << top + plot_h + 18
          << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << k
          << "</text>\n";
    }
  }
  out << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\""
      << top + plot_h << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << left << "\" y1=\"" << top + plot_h << "\" x2=\"" << left + plot_w
      << "\" y2=\"" << top + plot_h << "\" stroke=\"black\"/>\n";
  out << "<text x=\"" << left + plot_w / 2 << "\" y=\"" << height - 12
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">K</text>\n";

  int color = 0;
  double legend_y = top + 8;
  for (const auto& [method, cells] : series) {
    const char* stroke = palette[color % 6];
    out << "<polyline fill=\"none\" stroke=\"" << stroke << "\" stroke-width=\"2\" points=\"";
    for (const auto& [k, cell] : cells) {
      out << x_of(k) << ',' << y_of(cell.first / cell.second) << ' ';
    }
    out << "\"/>\n";
    out << "<line x1=\"" << left + plot_w - 150 << "\" y1=\"" << legend_y << "\" x2=\""
        << left + plot_w - 130 << "\" y2=\"" << legend_y << "\" stroke=\"" << stroke
        << "\" stroke-width=\"2\"/>\n";
    out << "<text x=\"" << left + plot_w - 124 << "\" y=\"" << legend_y + 4
        << "\" font-family=\"sans-serif\" font-size=\"11\">" << method << "</text>\n";
    legend_y += 16;
    ++color;
  }
  out << "</svg>\n";
}

}  // namespace cocluster
