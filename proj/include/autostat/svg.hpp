#pragma once

// Minimal deterministic SVG plotting: scatter, line, and confidence-band
// elements on linear axes with automatically chosen tick marks.  All
// coordinates are written with fixed precision so a given plot renders to
// identical bytes on every run.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>
#include <vector>

namespace autostat {

class SvgPlot {
 public:
  SvgPlot(std::string title, std::string x_label, std::string y_label)
      : title_(std::move(title)),
        x_label_(std::move(x_label)),
        y_label_(std::move(y_label)) {}

  void add_band(const std::vector<double>& xs, const std::vector<double>& lo,
                const std::vector<double>& hi) {
    bands_.push_back({xs, lo, hi});
  }
  void add_line(const std::vector<double>& xs, const std::vector<double>& ys,
                const char* color = "#1c4587") {
    lines_.push_back({xs, ys, color});
  }
  void add_scatter(const std::vector<double>& xs,
                   const std::vector<double>& ys,
                   const char* color = "#222222") {
    scatters_.push_back({xs, ys, color});
  }

  std::string render() const {
    Extent ex = extent();
    std::string out;
    out.reserve(1 << 16);
    header(out);
    axes(out, ex);
    for (const auto& b : bands_) band(out, ex, b);
    for (const auto& l : lines_) line(out, ex, l);
    for (const auto& s : scatters_) scatter(out, ex, s);
    labels(out);
    out += "</svg>\n";
    return out;
  }

 private:
  struct Band {
    std::vector<double> xs, lo, hi;
  };
  struct Line {
    std::vector<double> xs, ys;
    const char* color;
  };

  static constexpr int kWidth = 720, kHeight = 360;
  static constexpr double kLeft = 64, kRight = 16, kTop = 32, kBottom = 44;

  struct Extent {
    double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  };

  Extent extent() const {
    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0;
    double y0 = x0, y1 = -x0;
    auto take = [&](double x, double y) {
      if (!std::isfinite(x) || !std::isfinite(y)) return;
      x0 = std::min(x0, x);
      x1 = std::max(x1, x);
      y0 = std::min(y0, y);
      y1 = std::max(y1, y);
    };
    for (const auto& b : bands_)
      for (size_t i = 0; i < b.xs.size(); ++i) {
        take(b.xs[i], b.lo[i]);
        take(b.xs[i], b.hi[i]);
      }
    for (const auto& l : lines_)
      for (size_t i = 0; i < l.xs.size(); ++i) take(l.xs[i], l.ys[i]);
    for (const auto& s : scatters_)
      for (size_t i = 0; i < s.xs.size(); ++i) take(s.xs[i], s.ys[i]);
    Extent e;
    if (!(x0 < x1)) {
      x0 -= 0.5;
      x1 += 0.5;
    }
    if (!(y0 < y1)) {
      y0 -= 0.5;
      y1 += 0.5;
    }
    double xp = 0.03 * (x1 - x0), yp = 0.06 * (y1 - y0);
    e.x0 = x0 - xp;
    e.x1 = x1 + xp;
    e.y0 = y0 - yp;
    e.y1 = y1 + yp;
    return e;
  }

  static double map_x(const Extent& e, double x) {
    return kLeft + (x - e.x0) / (e.x1 - e.x0) * (kWidth - kLeft - kRight);
  }
  static double map_y(const Extent& e, double y) {
    return kHeight - kBottom -
           (y - e.y0) / (e.y1 - e.y0) * (kHeight - kTop - kBottom);
  }

  static std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
  }
  static std::string fmt_tick(double v) {
    if (std::abs(v) < 1e-12) v = 0.0;  // avoid "-0"
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
  }

  // Round tick spacing to a 1/2/5 x 10^k "nice" number.
  static std::vector<double> ticks(double lo, double hi) {
    double raw = (hi - lo) / 5.0;
    double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double m : {1.0, 2.0, 5.0, 10.0})
      if (raw <= m * mag) {
        step = m * mag;
        break;
      }
    std::vector<double> out;
    for (double t = std::ceil(lo / step) * step; t <= hi + 1e-9 * step;
         t += step)
      out.push_back(t);
    return out;
  }

  void header(std::string& out) const {
    out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"";
    out += std::to_string(kWidth) + "\" height=\"" + std::to_string(kHeight);
    out += "\" viewBox=\"0 0 " + std::to_string(kWidth) + " " +
           std::to_string(kHeight) + "\">\n";
    out += "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";
  }

  void axes(std::string& out, const Extent& e) const {
    for (double t : ticks(e.x0, e.x1)) {
      std::string x = fmt(map_x(e, t));
      out += "<line x1=\"" + x + "\" y1=\"" + fmt(kTop) + "\" x2=\"" + x +
             "\" y2=\"" + fmt(kHeight - kBottom) +
             "\" stroke=\"#e0e0e0\" stroke-width=\"1\"/>\n";
      out += "<text x=\"" + x + "\" y=\"" + fmt(kHeight - kBottom + 16) +
             "\" font-family=\"sans-serif\" font-size=\"11\" "
             "text-anchor=\"middle\">" +
             fmt_tick(t) + "</text>\n";
    }
    for (double t : ticks(e.y0, e.y1)) {
      std::string y = fmt(map_y(e, t));
      out += "<line x1=\"" + fmt(kLeft) + "\" y1=\"" + y + "\" x2=\"" +
             fmt(kWidth - kRight) + "\" y2=\"" + y +
             "\" stroke=\"#e0e0e0\" stroke-width=\"1\"/>\n";
      out += "<text x=\"" + fmt(kLeft - 6) + "\" y=\"" + fmt(map_y(e, t) + 4) +
             "\" font-family=\"sans-serif\" font-size=\"11\" "
             "text-anchor=\"end\">" +
             fmt_tick(t) + "</text>\n";
    }
    out += "<rect x=\"" + fmt(kLeft) + "\" y=\"" + fmt(kTop) + "\" width=\"" +
           fmt(kWidth - kLeft - kRight) + "\" height=\"" +
           fmt(kHeight - kTop - kBottom) +
           "\" fill=\"none\" stroke=\"#808080\" stroke-width=\"1\"/>\n";
  }

  void band(std::string& out, const Extent& e, const Band& b) const {
    if (b.xs.empty()) return;
    std::string d = "M";
    for (size_t i = 0; i < b.xs.size(); ++i)
      d += " " + fmt(map_x(e, b.xs[i])) + "," + fmt(map_y(e, b.hi[i]));
    for (size_t i = b.xs.size(); i-- > 0;)
      d += " " + fmt(map_x(e, b.xs[i])) + "," + fmt(map_y(e, b.lo[i]));
    out += "<path d=\"" + d + " Z\" fill=\"#cfe2f3\" fill-opacity=\"0.8\"/>\n";
  }

  void line(std::string& out, const Extent& e, const Line& l) const {
    if (l.xs.empty()) return;
    out += "<polyline points=\"";
    for (size_t i = 0; i < l.xs.size(); ++i) {
      if (i) out += " ";
      out += fmt(map_x(e, l.xs[i])) + "," + fmt(map_y(e, l.ys[i]));
    }
    out += "\" fill=\"none\" stroke=\"";
    out += l.color;
    out += "\" stroke-width=\"1.5\"/>\n";
  }

  void scatter(std::string& out, const Extent& e, const Line& s) const {
    for (size_t i = 0; i < s.xs.size(); ++i) {
      out += "<circle cx=\"" + fmt(map_x(e, s.xs[i])) + "\" cy=\"" +
             fmt(map_y(e, s.ys[i])) + "\" r=\"1.8\" fill=\"";
      out += s.color;
      out += "\"/>\n";
    }
  }

  void labels(std::string& out) const {
    out += "<text x=\"" + fmt(kWidth / 2.0) + "\" y=\"" + fmt(kTop - 12) +
           "\" font-family=\"sans-serif\" font-size=\"14\" "
           "text-anchor=\"middle\">" +
           escape(title_) + "</text>\n";
    out += "<text x=\"" + fmt(kWidth / 2.0) + "\" y=\"" + fmt(kHeight - 8) +
           "\" font-family=\"sans-serif\" font-size=\"12\" "
           "text-anchor=\"middle\">" +
           escape(x_label_) + "</text>\n";
    out += "<text x=\"14\" y=\"" + fmt(kHeight / 2.0) +
           "\" font-family=\"sans-serif\" font-size=\"12\" "
           "text-anchor=\"middle\" transform=\"rotate(-90 14 " +
           fmt(kHeight / 2.0) + ")\">" +
           escape(y_label_) + "</text>\n";
  }

  static std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
      if (c == '&') out += "&amp;";
      else if (c == '<') out += "&lt;";
      else if (c == '>') out += "&gt;";
      else out += c;
    }
    return out;
  }

  std::string title_, x_label_, y_label_;
  std::vector<Band> bands_;
  std::vector<Line> lines_, scatters_;
};

}  // namespace autostat
