#include "svg.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>

namespace lgpr::tool {

namespace {

constexpr std::array<const char*, 8> kPalette = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                                 "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};

const char* colour(std::size_t i) { return kPalette[i % kPalette.size()]; }

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
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

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();

  void add(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void finish() {
    if (!(lo <= hi)) lo = 0.0, hi = 1.0;
    if (hi - lo < 1e-12) lo -= 0.5, hi += 0.5;
    const double pad = 0.04 * (hi - lo);
    lo -= pad;
    hi += pad;
  }
};

// Axis-aligned plotting area in pixels.
struct Panel {
  double left, top, width, height;
  Range x, y;

  double px(double v) const { return left + (v - x.lo) / (x.hi - x.lo) * width; }
  double py(double v) const { return top + height - (v - y.lo) / (y.hi - y.lo) * height; }

  std::string frame() const {
    std::string s = "<rect x=\"" + num(left) + "\" y=\"" + num(top) + "\" width=\"" + num(width) +
                    "\" height=\"" + num(height) + "\" fill=\"none\" stroke=\"#444\"/>\n";
    // min and max tick labels are enough to read the scale
    s += "<text x=\"" + num(left) + "\" y=\"" + num(top + height + 14) + "\" font-size=\"10\">" +
         num(x.lo) + "</text>\n";
    s += "<text x=\"" + num(left + width) + "\" y=\"" + num(top + height + 14) +
         "\" font-size=\"10\" text-anchor=\"end\">" + num(x.hi) + "</text>\n";
    s += "<text x=\"" + num(left - 4) + "\" y=\"" + num(top + height) +
         "\" font-size=\"10\" text-anchor=\"end\">" + num(y.lo) + "</text>\n";
    s += "<text x=\"" + num(left - 4) + "\" y=\"" + num(top + 10) +
         "\" font-size=\"10\" text-anchor=\"end\">" + num(y.hi) + "</text>\n";
    return s;
  }

  std::string polyline(const std::vector<double>& xs, const std::vector<double>& ys,
                       const char* stroke, double w = 1.5) const {
    std::string pts;
    for (std::size_t i = 0; i < xs.size() && i < ys.size(); ++i) {
      if (!std::isfinite(ys[i])) continue;
      pts += num(px(xs[i])) + "," + num(py(ys[i])) + " ";
    }
    return "<polyline fill=\"none\" stroke=\"" + std::string(stroke) + "\" stroke-width=\"" +
           num(w) + "\" points=\"" + pts + "\"/>\n";
  }
};

std::string header(double w, double h, const std::string& title) {
  return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(w) + "\" height=\"" + num(h) +
         "\" viewBox=\"0 0 " + num(w) + " " + num(h) + "\">\n" +
         "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n" +
         "<text x=\"" + num(w / 2) + "\" y=\"18\" font-size=\"13\" text-anchor=\"middle\">" +
         escape(title) + "</text>\n";
}

}  // namespace

std::string render_mixture(const MixtureFigure& fig) {
  const bool has_grid = !fig.grid.empty() && !fig.mean.empty();
  const double W = 720, H = has_grid ? 520 : 400;
  Panel top{60, 30, W - 80, has_grid ? 340.0 : 330.0, {}, {}};
  for (double v : fig.train_x) top.x.add(v);
  for (double v : fig.grid) top.x.add(v);
  for (double v : fig.train_y) top.y.add(v);
  for (std::size_t l = 0; l < fig.mean.size(); ++l) {
    for (std::size_t i = 0; i < fig.mean[l].size(); ++i) {
      const double sd = l < fig.sd.size() ? fig.sd[l][i] : 0.0;
      top.y.add(fig.mean[l][i] - 2 * sd);
      top.y.add(fig.mean[l][i] + 2 * sd);
    }
  }
  top.x.finish();
  top.y.finish();

  std::string s = header(W, H, fig.title);
  s += top.frame();
  for (std::size_t l = 0; has_grid && l < fig.mean.size(); ++l) {
    if (l >= fig.sd.size()) break;
    std::string pts;
    for (std::size_t i = 0; i < fig.grid.size(); ++i) {
      pts += num(top.px(fig.grid[i])) + "," + num(top.py(fig.mean[l][i] + 2 * fig.sd[l][i])) + " ";
    }
    for (std::size_t i = fig.grid.size(); i-- > 0;) {
      pts += num(top.px(fig.grid[i])) + "," + num(top.py(fig.mean[l][i] - 2 * fig.sd[l][i])) + " ";
    }
    s += "<polygon fill=\"" + std::string(colour(l)) + "\" fill-opacity=\"0.15\" stroke=\"none\" points=\"" +
         pts + "\"/>\n";
  }
  for (std::size_t i = 0; i < fig.train_x.size() && i < fig.train_y.size(); ++i) {
    const std::size_t c = i < fig.train_component.size() ? static_cast<std::size_t>(fig.train_component[i]) : 0;
    s += "<circle cx=\"" + num(top.px(fig.train_x[i])) + "\" cy=\"" + num(top.py(fig.train_y[i])) +
         "\" r=\"2\" fill=\"" + colour(c) + "\" fill-opacity=\"0.7\"/>\n";
  }
  for (std::size_t l = 0; has_grid && l < fig.mean.size(); ++l) {
    s += top.polyline(fig.grid, fig.mean[l], colour(l));
  }

  if (has_grid && !fig.prob.empty()) {
    Panel strip{60, top.top + top.height + 40, W - 80, 90, top.x, {}};
    strip.y.lo = 0.0;
    strip.y.hi = 1.0;
    s += strip.frame();
    for (std::size_t l = 0; l < fig.prob.size(); ++l) s += strip.polyline(fig.grid, fig.prob[l], colour(l));
    s += "<text x=\"" + num(strip.left + 4) + "\" y=\"" + num(strip.top + 12) +
         "\" font-size=\"10\">component probability</text>\n";
  }
  s += "</svg>\n";
  return s;
}

std::string render_lines(const std::string& title, const std::string& x_label,
                         const std::string& y_label, const std::vector<LineSeries>& series) {
  const double W = 720, H = 420;
  Panel p{70, 30, W - 200, H - 80, {}, {}};
  for (const auto& ser : series) {
    for (double v : ser.x) p.x.add(v);
    for (double v : ser.y) p.y.add(v);
  }
  p.x.finish();
  p.y.finish();
  std::string s = header(W, H, title);
  s += p.frame();
  for (std::size_t k = 0; k < series.size(); ++k) {
    s += p.polyline(series[k].x, series[k].y, colour(k), 1.2);
    s += "<text x=\"" + num(p.left + p.width + 10) + "\" y=\"" + num(p.top + 14 + 16.0 * static_cast<double>(k)) +
         "\" font-size=\"11\" fill=\"" + colour(k) + "\">" + escape(series[k].label) + "</text>\n";
  }
  s += "<text x=\"" + num(p.left + p.width / 2) + "\" y=\"" + num(H - 12) +
       "\" font-size=\"11\" text-anchor=\"middle\">" + escape(x_label) + "</text>\n";
  s += "<text x=\"14\" y=\"" + num(p.top + p.height / 2) + "\" font-size=\"11\" transform=\"rotate(-90 14 " +
       num(p.top + p.height / 2) + ")\" text-anchor=\"middle\">" + escape(y_label) + "</text>\n";
  s += "</svg>\n";
  return s;
}

std::string render_map(const std::string& title, std::size_t nx, std::size_t ny, double x0,
                       double x1, double y0, double y1, const std::vector<double>& values) {
  const double W = 560, H = 560;
  Panel p{60, 30, W - 90, H - 70, {}, {}};
  p.x.lo = x0;
  p.x.hi = x1;
  p.y.lo = y0;
  p.y.hi = y1;
  if (p.x.hi - p.x.lo < 1e-12) p.x.hi = p.x.lo + 1.0;
  if (p.y.hi - p.y.lo < 1e-12) p.y.hi = p.y.lo + 1.0;
  Range v;
  for (double z : values) v.add(z);
  if (!(v.lo <= v.hi)) v.lo = 0.0, v.hi = 1.0;
  const double span = std::max(v.hi - v.lo, 1e-12);
  const double cw = p.width / static_cast<double>(std::max<std::size_t>(nx, 1));
  const double ch = p.height / static_cast<double>(std::max<std::size_t>(ny, 1));
  std::string s = header(W, H, title);
  for (std::size_t j = 0; j < ny; ++j) {
    for (std::size_t i = 0; i < nx; ++i) {
      const std::size_t k = j * nx + i;
      if (k >= values.size() || !std::isfinite(values[k])) continue;
      // blue to yellow
      const double t = (values[k] - v.lo) / span;
      const int r = static_cast<int>(40 + 215 * t), g = static_cast<int>(60 + 170 * t),
                b = static_cast<int>(160 - 120 * t);
      char fill[16];
      std::snprintf(fill, sizeof fill, "#%02x%02x%02x", r, g, b);
      s += "<rect x=\"" + num(p.left + cw * static_cast<double>(i)) + "\" y=\"" +
           num(p.top + p.height - ch * static_cast<double>(j + 1)) + "\" width=\"" + num(cw + 0.3) +
           "\" height=\"" + num(ch + 0.3) + "\" fill=\"" + fill + "\"/>\n";
    }
  }
  s += p.frame();
  s += "</svg>\n";
  return s;
}

}  // namespace lgpr::tool
