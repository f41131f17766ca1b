#include "arbfree/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "arbfree/errors.hpp"

namespace arbfree {

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                    "#9467bd", "#8c564b", "#e377c2", "#17becf"};
constexpr double kLeft = 70, kRight = 150, kTop = 40, kBottom = 50;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Frame {
  double x0, x1, y0, y1;
  const PlotOptions& opt;

  double px(double x) const {
    const double w = opt.width - kLeft - kRight;
    return kLeft + (x1 > x0 ? (x - x0) / (x1 - x0) : 0.5) * w;
  }
  double py(double y) const {
    const double h = opt.height - kTop - kBottom;
    const double v = opt.log_y ? std::log10(y) : y;
    return opt.height - kBottom - (y1 > y0 ? (v - y0) / (y1 - y0) : 0.5) * h;
  }
};

std::string header(const PlotOptions& opt) {
  std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(opt.width) +
                  "\" height=\"" + std::to_string(opt.height) + "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s += "<text x=\"" + num(opt.width / 2.0) + "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" +
       escape(opt.title) + "</text>\n";
  return s;
}

std::string axes(const Frame& f, bool numeric_x) {
  const PlotOptions& opt = f.opt;
  const double bx = opt.height - kBottom;
  const double rx = opt.width - kRight;
  std::string s = "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(bx) + "\" x2=\"" + num(rx) + "\" y2=\"" +
                  num(bx) + "\" stroke=\"black\"/>\n";
  s += "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(kTop) + "\" x2=\"" + num(kLeft) + "\" y2=\"" + num(bx) +
       "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double v = f.y0 + (f.y1 - f.y0) * i / 4.0;
    const double y = opt.height - kBottom - (opt.height - kTop - kBottom) * i / 4.0;
    s += "<text x=\"" + num(kLeft - 5) + "\" y=\"" + num(y + 4) + "\" text-anchor=\"end\">" +
         tick(opt.log_y ? std::pow(10.0, v) : v) + "</text>\n";
    if (numeric_x) {
      const double xv = f.x0 + (f.x1 - f.x0) * i / 4.0;
      s += "<text x=\"" + num(f.px(xv)) + "\" y=\"" + num(bx + 15) + "\" text-anchor=\"middle\">" + tick(xv) +
           "</text>\n";
    }
  }
  s += "<text x=\"" + num((kLeft + rx) / 2) + "\" y=\"" + num(opt.height - 12.0) + "\" text-anchor=\"middle\">" +
       escape(opt.x_label) + "</text>\n";
  s += "<text transform=\"translate(16," + num((kTop + bx) / 2) + ") rotate(-90)\" text-anchor=\"middle\">" +
       escape(opt.y_label) + "</text>\n";
  return s;
}

void expand(double& lo, double& hi) {
  if (!(lo < hi)) {
    lo -= 0.5;
    hi += 0.5;
  }
}

}  // namespace

std::string svg_line_plot(const std::vector<Series>& series, const PlotOptions& opt) {
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i]) || (opt.log_y && s.y[i] <= 0.0)) continue;
      const double v = opt.log_y ? std::log10(s.y[i]) : s.y[i];
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, v);
      y1 = std::max(y1, v);
    }
  }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  expand(x0, x1);
  expand(y0, y1);
  const Frame f{x0, x1, y0, y1, opt};
  std::string svg = header(opt) + axes(f, true);
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* color = kPalette[k % std::size(kPalette)];
    std::string pts;
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i]) || (opt.log_y && s.y[i] <= 0.0)) continue;
      pts += num(f.px(s.x[i])) + ',' + num(f.py(s.y[i])) + ' ';
    }
    svg += "<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"1.5\" points=\"" + pts +
           "\"/>\n";
    const double ly = kTop + 16.0 * k;
    svg += "<line x1=\"" + num(opt.width - kRight + 10) + "\" y1=\"" + num(ly) + "\" x2=\"" +
           num(opt.width - kRight + 30) + "\" y2=\"" + num(ly) + "\" stroke=\"" + color + "\" stroke-width=\"2\"/>\n";
    svg += "<text x=\"" + num(opt.width - kRight + 35) + "\" y=\"" + num(ly + 4) + "\">" + escape(s.label) +
           "</text>\n";
  }
  return svg + "</svg>\n";
}

namespace {

double quantile(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto i = static_cast<std::size_t>(pos);
  const double frac = pos - static_cast<double>(i);
  return i + 1 < sorted.size() ? sorted[i] * (1 - frac) + sorted[i + 1] * frac : sorted[i];
}

}  // namespace

std::string svg_box_plot(const std::vector<BoxGroup>& groups, const PlotOptions& opt) {
  double y0 = std::numeric_limits<double>::infinity(), y1 = -y0;
  std::vector<std::vector<double>> sorted;
  for (const auto& g : groups) {
    std::vector<double> v;
    for (double x : g.values)
      if (std::isfinite(x) && (!opt.log_y || x > 0.0)) v.push_back(x);
    std::sort(v.begin(), v.end());
    for (double x : v) {
      const double t = opt.log_y ? std::log10(x) : x;
      y0 = std::min(y0, t);
      y1 = std::max(y1, t);
    }
    sorted.push_back(std::move(v));
  }
  if (!std::isfinite(y0)) y0 = 0, y1 = 1;
  expand(y0, y1);
  const double n = static_cast<double>(std::max<std::size_t>(groups.size(), 1));
  const Frame f{0.0, n, y0, y1, opt};
  std::string svg = header(opt) + axes(f, false);
  for (std::size_t k = 0; k < groups.size(); ++k) {
    const double cx = f.px(k + 0.5);
    const double half = (f.px(1.0) - f.px(0.0)) * 0.25;
    svg += "<text x=\"" + num(cx) + "\" y=\"" + num(opt.height - kBottom + 15) + "\" text-anchor=\"middle\">" +
           escape(groups[k].label) + "</text>\n";
    const auto& v = sorted[k];
    if (v.empty()) continue;
    const char* color = kPalette[k % std::size(kPalette)];
    const double lo = f.py(v.front()), hi = f.py(v.back());
    const double q1 = f.py(quantile(v, 0.25)), q3 = f.py(quantile(v, 0.75)), med = f.py(quantile(v, 0.5));
    svg += "<line x1=\"" + num(cx) + "\" y1=\"" + num(lo) + "\" x2=\"" + num(cx) + "\" y2=\"" + num(hi) +
           "\" stroke=\"black\"/>\n";
    svg += "<rect x=\"" + num(cx - half) + "\" y=\"" + num(q3) + "\" width=\"" + num(2 * half) + "\" height=\"" +
           num(std::max(q1 - q3, 0.5)) + "\" fill=\"" + color + "\" fill-opacity=\"0.5\" stroke=\"black\"/>\n";
    svg += "<line x1=\"" + num(cx - half) + "\" y1=\"" + num(med) + "\" x2=\"" + num(cx + half) + "\" y2=\"" +
           num(med) + "\" stroke=\"black\" stroke-width=\"2\"/>\n";
  }
  return svg + "</svg>\n";
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << text;
  if (!out) throw IoError("failed writing '" + path + "'");
}

}  // namespace arbfree
