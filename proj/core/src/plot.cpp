#include "esqpt/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <stdexcept>

namespace esqpt {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 440.0;
constexpr double kLeft = 80.0;
constexpr double kRight = 150.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 60.0;

const char* const kPalette[] = {"#1f3b73", "#c2185b", "#2e7d32", "#ef6c00",
                                "#6a1b9a", "#00838f", "#5d4037", "#9e9d24"};

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", x);
  return buf;
}

std::string label(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", x);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
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
    if (!std::isfinite(lo)) lo = 0.0, hi = 1.0;
    if (hi - lo < 1e-300) {
      const double pad = std::max(1e-12, std::abs(lo) * 0.05 + 0.5 * (lo == 0.0));
      lo -= pad;
      hi += pad;
    }
  }
};

std::vector<double> ticks(const Range& r) {
  const double span = r.hi - r.lo;
  const double raw = span / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    step = m * mag;
    if (step >= raw) break;
  }
  std::vector<double> out;
  for (double t = std::ceil(r.lo / step) * step; t <= r.hi + 1e-9 * step; t += step) {
    out.push_back(std::abs(t) < 1e-12 * step ? 0.0 : t);
  }
  return out;
}

std::string axis_title(const ResultTable& t, const std::string& name) {
  return name + " [" + t.columns()[t.column(name)].unit + "]";
}

void require(const ResultTable& t, const std::string& name) {
  if (!t.has_column(name)) throw std::invalid_argument("plot: missing column '" + name + "'");
}

struct Frame {
  Range xr, yr;
  double px(double x) const { return kLeft + (x - xr.lo) / (xr.hi - xr.lo) * (kWidth - kLeft - kRight); }
  double py(double y) const { return kHeight - kBottom - (y - yr.lo) / (yr.hi - yr.lo) * (kHeight - kTop - kBottom); }
};

void axes(std::string& out, const Frame& f, const std::string& xlabel, const std::string& ylabel,
          const std::string& title) {
  const double x0 = kLeft;
  const double x1 = kWidth - kRight;
  const double y0 = kHeight - kBottom;
  const double y1 = kTop;
  out += "<rect x=\"" + fmt(x0) + "\" y=\"" + fmt(y1) + "\" width=\"" + fmt(x1 - x0) + "\" height=\"" +
         fmt(y0 - y1) + "\" fill=\"none\" stroke=\"#000\"/>\n";
  for (double t : ticks(f.xr)) {
    const double x = f.px(t);
    out += "<line x1=\"" + fmt(x) + "\" y1=\"" + fmt(y0) + "\" x2=\"" + fmt(x) + "\" y2=\"" + fmt(y0 + 5) +
           "\" stroke=\"#000\"/>\n";
    out += "<text x=\"" + fmt(x) + "\" y=\"" + fmt(y0 + 18) + "\" text-anchor=\"middle\">" + label(t) +
           "</text>\n";
  }
  for (double t : ticks(f.yr)) {
    const double y = f.py(t);
    out += "<line x1=\"" + fmt(x0 - 5) + "\" y1=\"" + fmt(y) + "\" x2=\"" + fmt(x0) + "\" y2=\"" + fmt(y) +
           "\" stroke=\"#000\"/>\n";
    out += "<text x=\"" + fmt(x0 - 8) + "\" y=\"" + fmt(y + 4) + "\" text-anchor=\"end\">" + label(t) +
           "</text>\n";
  }
  out += "<text x=\"" + fmt(0.5 * (x0 + x1)) + "\" y=\"" + fmt(kHeight - 18) +
         "\" text-anchor=\"middle\">" + escape(xlabel) + "</text>\n";
  out += "<text transform=\"translate(20," + fmt(0.5 * (y0 + y1)) +
         ") rotate(-90)\" text-anchor=\"middle\">" + escape(ylabel) + "</text>\n";
  if (!title.empty()) {
    out += "<text x=\"" + fmt(0.5 * (x0 + x1)) + "\" y=\"24\" text-anchor=\"middle\">" + escape(title) +
           "</text>\n";
  }
}

// Two-stop ramp from white to dark blue.
std::string shade(double u) {
  u = std::clamp(u, 0.0, 1.0);
  const int r = static_cast<int>(std::lround(255 + u * (0x1f - 255)));
  const int g = static_cast<int>(std::lround(255 + u * (0x3b - 255)));
  const int b = static_cast<int>(std::lround(255 + u * (0x73 - 255)));
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
  return buf;
}

std::string heatmap(const ResultTable& t, const PlotSpec& spec) {
  if (spec.y.size() != 1 || spec.z.empty()) throw std::invalid_argument("plot: heatmap needs one y and a z column");
  require(t, spec.x);
  require(t, spec.y[0]);
  require(t, spec.z);
  const auto xs = t.values(spec.x);
  const auto ys = t.values(spec.y[0]);
  const auto zs = t.values(spec.z);
  std::vector<double> ux(xs), uy(ys);
  std::sort(ux.begin(), ux.end());
  ux.erase(std::unique(ux.begin(), ux.end()), ux.end());
  std::sort(uy.begin(), uy.end());
  uy.erase(std::unique(uy.begin(), uy.end()), uy.end());
  Range zr;
  for (double z : zs) zr.add(z);
  zr.finish();

  // Cell edges halfway between neighbouring grid values.
  auto edges = [](const std::vector<double>& u) {
    std::vector<double> e(u.size() + 1);
    if (u.size() == 1) {
      e[0] = u[0] - 0.5;
      e[1] = u[0] + 0.5;
      return e;
    }
    for (std::size_t i = 1; i < u.size(); ++i) e[i] = 0.5 * (u[i - 1] + u[i]);
    e.front() = u.front() - (e[1] - u.front());
    e.back() = u.back() + (u.back() - e[u.size() - 1]);
    return e;
  };
  Frame f;
  std::vector<double> ex, ey;
  if (!ux.empty()) {
    ex = edges(ux);
    ey = edges(uy);
    f.xr = {ex.front(), ex.back()};
    f.yr = {ey.front(), ey.back()};
  }
  f.xr.finish();
  f.yr.finish();

  std::string out;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    const auto i = static_cast<std::size_t>(std::lower_bound(ux.begin(), ux.end(), xs[k]) - ux.begin());
    const auto j = static_cast<std::size_t>(std::lower_bound(uy.begin(), uy.end(), ys[k]) - uy.begin());
    const double x0 = f.px(ex[i]), x1 = f.px(ex[i + 1]);
    const double y0 = f.py(ey[j + 1]), y1 = f.py(ey[j]);
    const std::string fill = std::isfinite(zs[k]) ? shade((zs[k] - zr.lo) / (zr.hi - zr.lo)) : "#cccccc";
    out += "<rect x=\"" + fmt(x0) + "\" y=\"" + fmt(y0) + "\" width=\"" + fmt(x1 - x0) + "\" height=\"" +
           fmt(y1 - y0) + "\" fill=\"" + fill + "\"/>\n";
  }
  axes(out, f, axis_title(t, spec.x), axis_title(t, spec.y[0]), spec.title);
  // Colour bar.
  const double bx = kWidth - kRight + 30;
  const double bh = kHeight - kTop - kBottom;
  for (int s = 0; s < 50; ++s) {
    const double u = (s + 0.5) / 50.0;
    out += "<rect x=\"" + fmt(bx) + "\" y=\"" + fmt(kTop + bh * (1.0 - (s + 1) / 50.0)) +
           "\" width=\"16\" height=\"" + fmt(bh / 50.0 + 0.3) + "\" fill=\"" + shade(u) + "\"/>\n";
  }
  out += "<text x=\"" + fmt(bx + 20) + "\" y=\"" + fmt(kTop + 8) + "\">" + label(zr.hi) + "</text>\n";
  out += "<text x=\"" + fmt(bx + 20) + "\" y=\"" + fmt(kTop + bh) + "\">" + label(zr.lo) + "</text>\n";
  out += "<text x=\"" + fmt(bx) + "\" y=\"" + fmt(kTop - 8) + "\">" + escape(axis_title(t, spec.z)) + "</text>\n";
  return out;
}

std::string series_plot(const ResultTable& t, const PlotSpec& spec) {
  if (spec.y.empty()) throw std::invalid_argument("plot: no y columns");
  require(t, spec.x);
  for (const auto& y : spec.y) require(t, y);
  if (spec.group) require(t, *spec.group);

  struct Series {
    std::string name;
    std::vector<std::pair<double, double>> pts;
  };
  std::vector<Series> series;
  const auto xs = t.values(spec.x);
  for (const auto& y : spec.y) {
    const auto ys = t.values(y);
    if (spec.group) {
      const auto gs = t.values(*spec.group);
      std::map<double, std::size_t> slot;
      for (std::size_t k = 0; k < xs.size(); ++k) {
        auto [it, fresh] = slot.emplace(gs[k], series.size());
        if (fresh) series.push_back({y + " (" + *spec.group + "=" + label(gs[k]) + ")", {}});
        series[it->second].pts.emplace_back(xs[k], ys[k]);
      }
    } else {
      Series s{y, {}};
      for (std::size_t k = 0; k < xs.size(); ++k) s.pts.emplace_back(xs[k], ys[k]);
      series.push_back(std::move(s));
    }
  }
  Frame f;
  for (const auto& s : series) {
    for (const auto& [x, y] : s.pts) {
      if (std::isfinite(x) && std::isfinite(y)) {
        f.xr.add(x);
        f.yr.add(y);
      }
    }
  }
  f.xr.finish();
  f.yr.finish();

  std::string out;
  for (std::size_t si = 0; si < series.size(); ++si) {
    const char* colour = kPalette[si % std::size(kPalette)];
    const auto& pts = series[si].pts;
    if (spec.kind == PlotKind::line) {
      std::string d;
      bool pen_down = false;
      for (const auto& [x, y] : pts) {
        if (!std::isfinite(x) || !std::isfinite(y)) {
          pen_down = false;
          continue;
        }
        d += (pen_down ? " L" : (d.empty() ? "M" : " M")) + fmt(f.px(x)) + "," + fmt(f.py(y));
        pen_down = true;
      }
      if (!d.empty()) {
        out += "<path d=\"" + d + "\" fill=\"none\" stroke=\"" + colour + "\" stroke-width=\"1.5\"/>\n";
      }
    } else {
      for (const auto& [x, y] : pts) {
        if (!std::isfinite(x) || !std::isfinite(y)) continue;
        out += "<circle cx=\"" + fmt(f.px(x)) + "\" cy=\"" + fmt(f.py(y)) + "\" r=\"1.6\" fill=\"" + colour +
               "\"/>\n";
      }
    }
    const double ly = kTop + 14.0 * static_cast<double>(si) + 6;
    out += "<rect x=\"" + fmt(kWidth - kRight + 10) + "\" y=\"" + fmt(ly - 8) + "\" width=\"10\" height=\"10\" fill=\"" +
           colour + "\"/>\n";
    out += "<text x=\"" + fmt(kWidth - kRight + 24) + "\" y=\"" + fmt(ly) + "\" font-size=\"10\">" +
           escape(series[si].name) + "</text>\n";
  }
  const std::string ylabel =
      spec.y.size() == 1 ? axis_title(t, spec.y[0]) : "[" + t.columns()[t.column(spec.y[0])].unit + "]";
  axes(out, f, axis_title(t, spec.x), ylabel, spec.title);
  return out;
}

}  // namespace

std::string render_svg(const ResultTable& table, const PlotSpec& spec) {
  std::string body = spec.kind == PlotKind::heatmap ? heatmap(table, spec) : series_plot(table, spec);
  return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(kWidth) + "\" height=\"" + fmt(kHeight) +
         "\" font-family=\"sans-serif\" font-size=\"12\">\n<rect width=\"100%\" height=\"100%\" fill=\"#fff\"/>\n" +
         body + "</svg>\n";
}

void write_svg(const ResultTable& table, const PlotSpec& spec, const std::filesystem::path& path) {
  atomic_write(path, render_svg(table, spec));
}

}  // namespace esqpt
