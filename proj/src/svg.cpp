#include "sss/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace sss::svg {

namespace {

constexpr double kWidth = 480;
constexpr double kHeight = 320;
constexpr double kLeft = 64, kRight = 16, kTop = 32, kBottom = 48;

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string label_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += ch;
    }
  }
  return out;
}

// Maps data values onto a pixel range, optionally in log10.
struct Axis {
  double lo, hi, px_lo, px_hi;
  bool log;

  double operator()(double v) const {
    const double a = log ? std::log10(std::max(lo, 1e-300)) : lo;
    const double b = log ? std::log10(std::max(hi, 1e-300)) : hi;
    double t = log ? std::log10(std::max(v, std::numeric_limits<double>::min())) : v;
    const double span = b - a;
    t = span > 0 ? (t - a) / span : 0.5;
    return px_lo + std::clamp(t, 0.0, 1.0) * (px_hi - px_lo);
  }
};

void pad_range(double& lo, double& hi, bool log) {
  if (log) {
    lo = std::max(lo, 1e-300);
    hi = std::max(hi, lo);
    if (hi == lo) {
      lo /= 10;
      hi *= 10;
    }
    return;
  }
  if (hi == lo) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double pad = 0.05 * (hi - lo);
  lo -= pad;
  hi += pad;
}

std::string frame(double ox, const std::string& title, const std::string& x_label,
                  const std::string& y_label, const Axis& y) {
  std::string s;
  const double x0 = ox + kLeft, x1 = ox + kWidth - kRight, y0 = kHeight - kBottom, y1 = kTop;
  s += "<rect x=\"" + num(x0) + "\" y=\"" + num(y1) + "\" width=\"" + num(x1 - x0) + "\" height=\"" +
       num(y0 - y1) + "\" fill=\"none\" stroke=\"#444\"/>\n";
  s += "<text x=\"" + num(ox + kWidth / 2) + "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" +
       escape(title) + "</text>\n";
  s += "<text x=\"" + num(ox + kWidth / 2) + "\" y=\"" + num(kHeight - 8) +
       "\" text-anchor=\"middle\" font-size=\"12\">" + escape(x_label) + "</text>\n";
  s += "<text transform=\"translate(" + num(ox + 14) + "," + num(kHeight / 2) +
       ") rotate(-90)\" text-anchor=\"middle\" font-size=\"12\">" + escape(y_label) + "</text>\n";
  for (int i = 0; i <= 4; ++i) {
    const double t = i / 4.0;
    const double v = y.log ? std::pow(10.0, std::log10(y.lo) + t * (std::log10(y.hi) - std::log10(y.lo)))
                           : y.lo + t * (y.hi - y.lo);
    const double py = y(v);
    s += "<text x=\"" + num(x0 - 4) + "\" y=\"" + num(py + 4) +
         "\" text-anchor=\"end\" font-size=\"10\">" + label_num(v) + "</text>\n";
  }
  return s;
}

std::string open_svg(double width) {
  return "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
         num(width) + "\" height=\"" + num(kHeight) + "\" viewBox=\"0 0 " + num(width) + " " +
         num(kHeight) + "\" font-family=\"sans-serif\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
}

}  // namespace

std::string line_chart(const std::string& title, const std::string& x_label,
                       const std::string& y_label, const std::vector<Series>& series, bool log_y) {
  double xlo = std::numeric_limits<double>::infinity(), xhi = -xlo, ylo = xlo, yhi = -xlo;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i]) || (log_y && s.y[i] <= 0)) continue;
      xlo = std::min(xlo, s.x[i]);
      xhi = std::max(xhi, s.x[i]);
      ylo = std::min(ylo, s.y[i]);
      yhi = std::max(yhi, s.y[i]);
    }
  }
  if (!std::isfinite(xlo)) {
    xlo = 0;
    xhi = 1;
    ylo = log_y ? 1e-3 : 0;
    yhi = 1;
  }
  pad_range(ylo, yhi, log_y);
  if (xhi == xlo) xhi = xlo + 1;

  const Axis xa{xlo, xhi, kLeft, kWidth - kRight, false};
  const Axis ya{ylo, yhi, kHeight - kBottom, kTop, log_y};
  std::string out = open_svg(kWidth) + frame(0, title, x_label, y_label, ya);
  out += "<text x=\"" + num(kLeft) + "\" y=\"" + num(kHeight - kBottom + 14) + "\" font-size=\"10\">" +
         label_num(xlo) + "</text>\n";
  out += "<text x=\"" + num(kWidth - kRight) + "\" y=\"" + num(kHeight - kBottom + 14) +
         "\" text-anchor=\"end\" font-size=\"10\">" + label_num(xhi) + "</text>\n";
  for (std::size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    const char* color = kPalette[si % std::size(kPalette)];
    std::string pts;
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i]) || (log_y && s.y[i] <= 0)) continue;
      pts += num(xa(s.x[i])) + "," + num(ya(s.y[i])) + " ";
    }
    out += "<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"1.2\" points=\"" +
           pts + "\"/>\n";
    out += "<text x=\"" + num(kWidth - kRight - 4) + "\" y=\"" + num(kTop + 14 + 14.0 * static_cast<double>(si)) +
           "\" text-anchor=\"end\" font-size=\"11\" fill=\"" + color + "\">" + escape(s.name) + "</text>\n";
  }
  return out + "</svg>\n";
}

std::string box_panels(const std::vector<Panel>& panels) {
  const double width = kWidth * static_cast<double>(std::max<std::size_t>(panels.size(), 1));
  std::string out = open_svg(width);
  for (std::size_t p = 0; p < panels.size(); ++p) {
    const Panel& panel = panels[p];
    const double ox = kWidth * static_cast<double>(p);
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& b : panel.boxes) {
      for (double v : {b.stats.min, b.stats.max}) {
        if (!std::isfinite(v) || (panel.log_y && v <= 0)) continue;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    }
    if (!std::isfinite(lo)) {
      lo = panel.log_y ? 1e-3 : 0;
      hi = 1;
    }
    pad_range(lo, hi, panel.log_y);
    const Axis ya{lo, hi, kHeight - kBottom, kTop, panel.log_y};
    out += frame(ox, panel.title, "", panel.y_label, ya);

    const double slot = (kWidth - kLeft - kRight) / static_cast<double>(std::max<std::size_t>(panel.boxes.size(), 1));
    for (std::size_t i = 0; i < panel.boxes.size(); ++i) {
      const Box& b = panel.boxes[i];
      const double cx = ox + kLeft + slot * (static_cast<double>(i) + 0.5);
      const double half = std::min(14.0, slot * 0.3);
      const char* color = kPalette[i % std::size(kPalette)];
      out += "<line x1=\"" + num(cx) + "\" y1=\"" + num(ya(b.stats.min)) + "\" x2=\"" + num(cx) + "\" y2=\"" +
             num(ya(b.stats.max)) + "\" stroke=\"#444\"/>\n";
      out += "<rect x=\"" + num(cx - half) + "\" y=\"" + num(ya(b.stats.q3)) + "\" width=\"" + num(2 * half) +
             "\" height=\"" + num(std::max(0.5, ya(b.stats.q1) - ya(b.stats.q3))) + "\" fill=\"" + color +
             "\" fill-opacity=\"0.35\" stroke=\"" + color + "\"/>\n";
      out += "<line x1=\"" + num(cx - half) + "\" y1=\"" + num(ya(b.stats.median)) + "\" x2=\"" +
             num(cx + half) + "\" y2=\"" + num(ya(b.stats.median)) + "\" stroke=\"#000\" stroke-width=\"2\"/>\n";
      out += "<text x=\"" + num(cx) + "\" y=\"" + num(kHeight - kBottom + 14) +
             "\" text-anchor=\"middle\" font-size=\"10\">" + escape(b.label) + "</text>\n";
    }
  }
  return out + "</svg>\n";
}

}  // namespace sss::svg
