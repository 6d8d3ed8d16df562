#ifndef SSS_SVG_HPP
#define SSS_SVG_HPP

// Minimal static SVG charts for experiment summaries.

#include <string>
#include <vector>

#include "sss/harness.hpp"

namespace sss::svg {

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

struct Box {
  std::string label;
  Stats stats;
};

struct Panel {
  std::string title;
  std::string y_label;
  std::vector<Box> boxes;
  bool log_y = false;
};

std::string line_chart(const std::string& title, const std::string& x_label,
                       const std::string& y_label, const std::vector<Series>& series,
                       bool log_y = false);

/// Box-and-whisker panels laid out left to right in one document.
std::string box_panels(const std::vector<Panel>& panels);

}  // namespace sss::svg

#endif  // SSS_SVG_HPP
