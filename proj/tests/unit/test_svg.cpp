#include <string>

#include "arbfree/svg.hpp"
#include "doctest.h"

using namespace arbfree;

namespace {

std::size_t count(const std::string& s, const std::string& what) {
  std::size_t n = 0;
  for (auto p = s.find(what); p != std::string::npos; p = s.find(what, p + 1)) ++n;
  return n;
}

}  // namespace

TEST_CASE("line plot") {
  PlotOptions opt;
  opt.title = "loss <history>";
  opt.log_y = true;
  const std::string svg = svg_line_plot({{"a", {0, 1, 2}, {1e-3, 1e-4, 0.0}}, {"b", {0, 1}, {1, 2}}}, opt);
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("</svg>") != std::string::npos);
  CHECK(count(svg, "<polyline") == 2);
  CHECK(svg.find("&lt;history&gt;") != std::string::npos);
  CHECK(svg.find("nan") == std::string::npos);
  CHECK(svg_line_plot({}, PlotOptions{}).find("</svg>") != std::string::npos);
}

TEST_CASE("box plot") {
  const std::string svg = svg_box_plot({{"mlp", {1, 2, 3, 4}}, {"dcnn", {0.5}}, {"empty", {}}}, PlotOptions{});
  CHECK(count(svg, "<rect x=") == 2);
  CHECK(svg.find(">empty<") != std::string::npos);
}
