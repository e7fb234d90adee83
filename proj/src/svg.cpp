// Copyright 2026 The surfent Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "surfent/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace surfent {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 360.0;
constexpr double kMarginLeft = 56.0;
constexpr double kMarginRight = 16.0;
constexpr double kMarginTop = 36.0;
constexpr double kMarginBottom = 44.0;

// Fixed %.6g keeps coordinates short and renders the same bytes for the
// same data on every run.
std::string fmt(double x) {
  if (!std::isfinite(x)) throw std::invalid_argument("svg: non-finite value");
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", x);
  return buf;
}

std::string escape_text(const std::string& text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    switch (c) {
      case '&':
        out += "&amp;";
        break;
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      default:
        out += c;
    }
  }
  return out;
}

void open_canvas(std::ostringstream& svg, const std::string& title) {
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(kWidth)
      << "\" height=\"" << fmt(kHeight) << "\" viewBox=\"0 0 " << fmt(kWidth)
      << " " << fmt(kHeight) << "\">\n";
  svg << "  <rect width=\"" << fmt(kWidth) << "\" height=\"" << fmt(kHeight)
      << "\" fill=\"white\"/>\n";
  svg << "  <text x=\"" << fmt(kWidth / 2.0)
      << "\" y=\"22\" font-family=\"sans-serif\" font-size=\"15\" "
         "text-anchor=\"middle\">"
      << escape_text(title) << "</text>\n";
}

void axis_label(std::ostringstream& svg, double x, double y,
                const std::string& text, const char* anchor) {
  svg << "  <text x=\"" << fmt(x) << "\" y=\"" << fmt(y)
      << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\""
      << anchor << "\">" << escape_text(text) << "</text>\n";
}

}  // namespace

std::string render_histogram_svg(const std::vector<double>& mass,
                                 double bucket_width,
                                 const std::string& title) {
  if (bucket_width <= 0.0) {
    throw std::invalid_argument("bucket width must be positive");
  }
  double peak = 0.0;
  for (double m : mass) {
    if (m < 0.0) throw std::invalid_argument("svg: negative histogram mass");
    peak = std::max(peak, m);
  }
  if (peak <= 0.0) peak = 1.0;

  const std::size_t buckets = std::max<std::size_t>(mass.size(), 1);
  const double plot_w = kWidth - kMarginLeft - kMarginRight;
  const double plot_h = kHeight - kMarginTop - kMarginBottom;
  const double bar_w = plot_w / static_cast<double>(buckets);
  const double base_y = kMarginTop + plot_h;

  std::ostringstream svg;
  open_canvas(svg, title);
  svg << "  <line x1=\"" << fmt(kMarginLeft) << "\" y1=\"" << fmt(base_y)
      << "\" x2=\"" << fmt(kMarginLeft + plot_w) << "\" y2=\"" << fmt(base_y)
      << "\" stroke=\"black\"/>\n";
  svg << "  <line x1=\"" << fmt(kMarginLeft) << "\" y1=\"" << fmt(kMarginTop)
      << "\" x2=\"" << fmt(kMarginLeft) << "\" y2=\"" << fmt(base_y)
      << "\" stroke=\"black\"/>\n";
  for (std::size_t i = 0; i < mass.size(); ++i) {
    const double h = mass[i] / peak * plot_h;
    svg << "  <rect x=\"" << fmt(kMarginLeft + bar_w * i + 1.0) << "\" y=\""
        << fmt(base_y - h) << "\" width=\"" << fmt(std::max(bar_w - 2.0, 1.0))
        << "\" height=\"" << fmt(h) << "\" fill=\"#4878a8\"/>\n";
    axis_label(svg, kMarginLeft + bar_w * (i + 0.5), base_y + 16.0,
               fmt(bucket_width * static_cast<double>(i)), "middle");
  }
  axis_label(svg, kMarginLeft - 6.0, kMarginTop + 4.0, fmt(peak), "end");
  axis_label(svg, kMarginLeft - 6.0, base_y + 4.0, "0", "end");
  axis_label(svg, kMarginLeft + plot_w / 2.0, kHeight - 8.0,
             "bucket lower edge (bits)", "middle");
  svg << "</svg>\n";
  return svg.str();
}

std::string render_delta_svg(const std::vector<double>& delta,
                             double bucket_width, const std::string& title) {
  if (bucket_width <= 0.0) {
    throw std::invalid_argument("bucket width must be positive");
  }
  double peak = 0.0;
  for (double d : delta) peak = std::max(peak, std::fabs(d));
  if (peak <= 0.0) peak = 1.0;

  const std::size_t buckets = std::max<std::size_t>(delta.size(), 1);
  const double plot_w = kWidth - kMarginLeft - kMarginRight;
  const double plot_h = kHeight - kMarginTop - kMarginBottom;
  const double bar_w = plot_w / static_cast<double>(buckets);
  const double axis_y = kMarginTop + plot_h / 2.0;
  const double scale = (plot_h / 2.0) / peak;

  std::ostringstream svg;
  open_canvas(svg, title);
  svg << "  <line x1=\"" << fmt(kMarginLeft) << "\" y1=\"" << fmt(axis_y)
      << "\" x2=\"" << fmt(kMarginLeft + plot_w) << "\" y2=\"" << fmt(axis_y)
      << "\" stroke=\"black\"/>\n";
  for (std::size_t i = 0; i < delta.size(); ++i) {
    const double h = std::fabs(delta[i]) * scale;
    const double y = delta[i] >= 0.0 ? axis_y - h : axis_y;
    const char* fill = delta[i] >= 0.0 ? "#4878a8" : "#b04848";
    svg << "  <rect x=\"" << fmt(kMarginLeft + bar_w * i + 1.0) << "\" y=\""
        << fmt(y) << "\" width=\"" << fmt(std::max(bar_w - 2.0, 1.0))
        << "\" height=\"" << fmt(h) << "\" fill=\"" << fill << "\"/>\n";
    axis_label(svg, kMarginLeft + bar_w * (i + 0.5),
               kMarginTop + plot_h + 16.0,
               fmt(bucket_width * static_cast<double>(i)), "middle");
  }
  axis_label(svg, kMarginLeft - 6.0, kMarginTop + 4.0, "+" + fmt(peak), "end");
  axis_label(svg, kMarginLeft - 6.0, kMarginTop + plot_h + 4.0,
             "-" + fmt(peak), "end");
  axis_label(svg, kMarginLeft + plot_w / 2.0, kHeight - 8.0,
             "bucket lower edge (bits)", "middle");
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace surfent
