#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "lensless/errors.hpp"
#include "lensless/experiment.hpp"

namespace lensless {

// Accuracy-vs-training-size curves, one polyline per task, repeat-averaged.
// Pure SVG 1.1 with inline styling only, so the file has no external
// references and renders anywhere.
inline void plot_results(const std::vector<ResultRow>& rows, const std::filesystem::path& path) {
  if (rows.empty()) fail(ErrorKind::Domain, "no result rows to plot");

  auto means = mean_accuracies(rows);
  std::map<std::string, std::vector<std::pair<size_t, double>>> curves;
  size_t x_min = SIZE_MAX, x_max = 0;
  for (const auto& [key, mean] : means) {
    curves[key.first].emplace_back(key.second, mean);
    x_min = std::min(x_min, key.second);
    x_max = std::max(x_max, key.second);
  }
  for (auto& [task, curve] : curves) std::sort(curve.begin(), curve.end());
  if (x_max == x_min) x_max = x_min + 1;  // degenerate single-size plot

  const double width = 640, height = 480;
  const double ml = 70, mr = 20, mt = 20, mb = 55;  // margins
  const double pw = width - ml - mr, ph = height - mt - mb;
  auto sx = [&](double n) { return ml + (n - double(x_min)) / double(x_max - x_min) * pw; };
  auto sy = [&](double acc) { return mt + (1.0 - acc) * ph; };
  const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

  std::ostringstream svg;
  char buf[256];
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"480\" "
         "viewBox=\"0 0 640 480\">\n";
  svg << "<rect x=\"0\" y=\"0\" width=\"640\" height=\"480\" fill=\"white\"/>\n";

  // Axes and gridlines.
  for (int i = 0; i <= 10; ++i) {
    double acc = i / 10.0;
    std::snprintf(buf, sizeof(buf),
                  "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"#dddddd\" "
                  "stroke-width=\"1\"/>\n",
                  ml, sy(acc), width - mr, sy(acc));
    svg << buf;
    std::snprintf(buf, sizeof(buf),
                  "<text x=\"%.1f\" y=\"%.1f\" font-family=\"sans-serif\" font-size=\"12\" "
                  "text-anchor=\"end\">%.1f</text>\n",
                  ml - 8, sy(acc) + 4, acc);
    svg << buf;
  }
  std::vector<size_t> xticks;
  for (const auto& [key, mean] : means) xticks.push_back(key.second);
  std::sort(xticks.begin(), xticks.end());
  xticks.erase(std::unique(xticks.begin(), xticks.end()), xticks.end());
  for (size_t n : xticks) {
    std::snprintf(buf, sizeof(buf),
                  "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"#999999\" "
                  "stroke-width=\"1\"/>\n",
                  sx(double(n)), mt + ph, sx(double(n)), mt + ph + 5);
    svg << buf;
    std::snprintf(buf, sizeof(buf),
                  "<text x=\"%.1f\" y=\"%.1f\" font-family=\"sans-serif\" font-size=\"12\" "
                  "text-anchor=\"middle\">%zu</text>\n",
                  sx(double(n)), mt + ph + 20, n);
    svg << buf;
  }
  std::snprintf(buf, sizeof(buf),
                "<rect x=\"%.1f\" y=\"%.1f\" width=\"%.1f\" height=\"%.1f\" fill=\"none\" "
                "stroke=\"black\" stroke-width=\"1\"/>\n",
                ml, mt, pw, ph);
  svg << buf;
  std::snprintf(buf, sizeof(buf),
                "<text x=\"%.1f\" y=\"%.1f\" font-family=\"sans-serif\" font-size=\"14\" "
                "text-anchor=\"middle\">Number of training images</text>\n",
                ml + pw / 2, height - 12);
  svg << buf;
  std::snprintf(buf, sizeof(buf),
                "<text x=\"16\" y=\"%.1f\" font-family=\"sans-serif\" font-size=\"14\" "
                "text-anchor=\"middle\" transform=\"rotate(-90 16 %.1f)\">Classification "
                "accuracy</text>\n",
                mt + ph / 2, mt + ph / 2);
  svg << buf;

  // Curves and legend.
  int color_idx = 0;
  double legend_y = mt + 16;
  for (const auto& [task, curve] : curves) {
    const char* color = palette[color_idx % 6];
    std::ostringstream pts;
    for (const auto& [n, acc] : curve) {
      std::snprintf(buf, sizeof(buf), "%.2f,%.2f ", sx(double(n)), sy(acc));
      pts << buf;
    }
    svg << "<polyline fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"2\" points=\"" << pts.str() << "\"/>\n";
    for (const auto& [n, acc] : curve) {
      std::snprintf(buf, sizeof(buf),
                    "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"3.5\" fill=\"%s\"/>\n", sx(double(n)),
                    sy(acc), color);
      svg << buf;
    }
    std::snprintf(buf, sizeof(buf),
                  "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"%s\" "
                  "stroke-width=\"2\"/>\n",
                  ml + 12, legend_y, ml + 40, legend_y, color);
    svg << buf;
    std::snprintf(buf, sizeof(buf),
                  "<text x=\"%.1f\" y=\"%.1f\" font-family=\"sans-serif\" "
                  "font-size=\"13\">digits %s</text>\n",
                  ml + 48, legend_y + 4, task.c_str());
    svg << buf;
    legend_y += 18;
    ++color_idx;
  }
  svg << "</svg>\n";

  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::Io, "cannot open for writing: " + path.string());
  out << svg.str();
  if (!out) fail(ErrorKind::Io, "write failed: " + path.string());
}

}  // namespace lensless
