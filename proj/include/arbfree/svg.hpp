#pragma once

#include <string>
#include <vector>

namespace arbfree {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

struct PlotOptions {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_y = false;  ///< non-positive values are dropped
  int width = 640;
  int height = 400;
};

/// Polyline chart with a legend.
std::string svg_line_plot(const std::vector<Series>& series, const PlotOptions& opt);

struct BoxGroup {
  std::string label;
  std::vector<double> values;
};

/// Box plot (quartiles, whiskers at min/max) per group.
std::string svg_box_plot(const std::vector<BoxGroup>& groups, const PlotOptions& opt);

/// Writes `text` to `path`; throws IoError.
void write_text_file(const std::string& path, const std::string& text);

}  // namespace arbfree
