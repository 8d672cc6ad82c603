#include "ftlab/svg.hpp"

#include <algorithm>
#include <cmath>

#include "ftlab/error.hpp"
#include "ftlab/io.hpp"

namespace ftlab {

namespace {

constexpr double kWidth = 640.0, kHeight = 420.0;
constexpr double kMarginL = 70.0, kMarginR = 20.0, kMarginT = 20.0, kMarginB = 60.0;

std::string num(double v) {
  // two decimals is plenty for pixel coordinates and keeps files small
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

struct Scale {
  double lo, hi, px0, px1;
  double operator()(double v) const {
    if (hi == lo) return (px0 + px1) / 2.0;
    return px0 + (v - lo) / (hi - lo) * (px1 - px0);
  }
};

double quantile(std::vector<double> sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

std::string header() {
  return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kWidth) + "\" height=\"" + num(kHeight) +
         "\" viewBox=\"0 0 " + num(kWidth) + " " + num(kHeight) + "\">\n"
         "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
}

std::string text(double x, double y, const std::string& s, const char* anchor = "middle") {
  return "<text x=\"" + num(x) + "\" y=\"" + num(y) + "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"" +
         anchor + "\">" + s + "</text>\n";
}

std::string line(double x1, double y1, double x2, double y2, const char* stroke = "#333") {
  return "<line x1=\"" + num(x1) + "\" y1=\"" + num(y1) + "\" x2=\"" + num(x2) + "\" y2=\"" + num(y2) +
         "\" stroke=\"" + stroke + "\" stroke-width=\"1\"/>\n";
}

}  // namespace

std::string svg_boxplot(const std::vector<std::pair<std::string, std::vector<double>>>& groups) {
  require(!groups.empty(), "svg_boxplot: no groups");
  double lo = groups[0].second.empty() ? 0.0 : groups[0].second[0], hi = lo;
  for (const auto& [name, vals] : groups) {
    require(!vals.empty(), "svg_boxplot: empty group '" + name + "'");
    for (double v : vals) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  const double pad = (hi - lo) * 0.08 + 1e-9;
  const Scale y{lo - pad, hi + pad, kHeight - kMarginB, kMarginT};

  std::string out = header();
  out += line(kMarginL, kMarginT, kMarginL, kHeight - kMarginB);
  out += line(kMarginL, kHeight - kMarginB, kWidth - kMarginR, kHeight - kMarginB);
  for (int tick = 0; tick <= 4; ++tick) {
    const double v = (lo - pad) + (hi - lo + 2 * pad) * tick / 4.0;
    out += line(kMarginL - 4, y(v), kMarginL, y(v));
    out += text(kMarginL - 8, y(v) + 4, fmt_double(std::round(v * 1000.0) / 1000.0), "end");
  }

  const double span = (kWidth - kMarginL - kMarginR) / static_cast<double>(groups.size());
  for (std::size_t g = 0; g < groups.size(); ++g) {
    std::vector<double> vals = groups[g].second;
    std::sort(vals.begin(), vals.end());
    const double q1 = quantile(vals, 0.25), q2 = quantile(vals, 0.5), q3 = quantile(vals, 0.75);
    const double iqr = q3 - q1;
    double wlo = vals.front(), whi = vals.back();
    for (double v : vals) {
      if (v >= q1 - 1.5 * iqr) {
        wlo = v;
        break;
      }
    }
    for (auto it = vals.rbegin(); it != vals.rend(); ++it) {
      if (*it <= q3 + 1.5 * iqr) {
        whi = *it;
        break;
      }
    }
    const double cx = kMarginL + span * (static_cast<double>(g) + 0.5);
    const double bw = std::min(60.0, span * 0.5);
    out += line(cx, y(wlo), cx, y(q1));
    out += line(cx, y(q3), cx, y(whi));
    out += line(cx - bw / 4, y(wlo), cx + bw / 4, y(wlo));
    out += line(cx - bw / 4, y(whi), cx + bw / 4, y(whi));
    out += "<rect x=\"" + num(cx - bw / 2) + "\" y=\"" + num(y(q3)) + "\" width=\"" + num(bw) + "\" height=\"" +
           num(y(q1) - y(q3)) + "\" fill=\"#9ecae1\" stroke=\"#333\"/>\n";
    out += line(cx - bw / 2, y(q2), cx + bw / 2, y(q2), "#08306b");
    for (double v : groups[g].second)
      if (v < q1 - 1.5 * iqr || v > q3 + 1.5 * iqr)
        out += "<circle cx=\"" + num(cx) + "\" cy=\"" + num(y(v)) + "\" r=\"2.5\" fill=\"#333\"/>\n";
    out += text(cx, kHeight - kMarginB + 16, groups[g].first);
  }
  out += "</svg>\n";
  return out;
}

std::string svg_line_chart(const std::vector<double>& xs, const std::vector<double>& ys, const std::string& x_label,
                           const std::string& y_label) {
  require(xs.size() == ys.size() && xs.size() >= 2, "svg_line_chart: need >= 2 points");
  double xlo = xs[0], xhi = xs[0], ylo = ys[0], yhi = ys[0];
  for (double v : xs) {
    xlo = std::min(xlo, v);
    xhi = std::max(xhi, v);
  }
  for (double v : ys) {
    ylo = std::min(ylo, v);
    yhi = std::max(yhi, v);
  }
  const double ypad = (yhi - ylo) * 0.08 + 1e-9;
  const Scale sx{xlo, xhi, kMarginL, kWidth - kMarginR};
  const Scale sy{ylo - ypad, yhi + ypad, kHeight - kMarginB, kMarginT};

  std::string out = header();
  out += line(kMarginL, kMarginT, kMarginL, kHeight - kMarginB);
  out += line(kMarginL, kHeight - kMarginB, kWidth - kMarginR, kHeight - kMarginB);
  std::string pts;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    pts += num(sx(xs[i])) + "," + num(sy(ys[i]));
    if (i + 1 < xs.size()) pts += " ";
  }
  out += "<polyline points=\"" + pts + "\" fill=\"none\" stroke=\"#d62728\" stroke-width=\"1.5\"/>\n";
  for (std::size_t i = 0; i < xs.size(); ++i)
    out += "<circle cx=\"" + num(sx(xs[i])) + "\" cy=\"" + num(sy(ys[i])) + "\" r=\"3\" fill=\"#d62728\"/>\n";
  for (int tick = 0; tick <= 4; ++tick) {
    const double v = (ylo - ypad) + (yhi - ylo + 2 * ypad) * tick / 4.0;
    out += line(kMarginL - 4, sy(v), kMarginL, sy(v));
    out += text(kMarginL - 8, sy(v) + 4, fmt_double(std::round(v * 100.0) / 100.0), "end");
  }
  out += text((kMarginL + kWidth - kMarginR) / 2, kHeight - 16, x_label);
  out += text(16, kMarginT + 8, y_label, "start");
  out += "</svg>\n";
  return out;
}

std::string svg_contour(const std::vector<double>& a_values, const std::vector<double>& b_values,
                        const std::vector<double>& grid, int levels) {
  const std::size_t na = a_values.size(), nb = b_values.size();
  require(na >= 2 && nb >= 2 && grid.size() == na * nb, "svg_contour: bad grid");
  double lo = grid[0], hi = grid[0];
  for (double v : grid) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (hi == lo) hi = lo + 1.0;
  const Scale sx{a_values.front(), a_values.back(), kMarginL, kWidth - kMarginR};
  const Scale sy{b_values.front(), b_values.back(), kHeight - kMarginB, kMarginT};

  std::string out = header();
  auto at = [&](std::size_t i, std::size_t j) { return grid[i * nb + j]; };
  for (int l = 1; l <= levels; ++l) {
    const double level = lo + (hi - lo) * static_cast<double>(l) / static_cast<double>(levels + 1);
    std::string segs;
    for (std::size_t i = 0; i + 1 < na; ++i) {
      for (std::size_t j = 0; j + 1 < nb; ++j) {
        // marching squares on cell (i, j): corners 00, 10, 11, 01
        const double v00 = at(i, j), v10 = at(i + 1, j), v11 = at(i + 1, j + 1), v01 = at(i, j + 1);
        auto cross = [&](double va, double vb) { return (level - va) / (vb - va); };
        std::vector<std::pair<double, double>> pts;
        if ((v00 < level) != (v10 < level)) {
          const double t = cross(v00, v10);
          pts.emplace_back(a_values[i] + t * (a_values[i + 1] - a_values[i]), b_values[j]);
        }
        if ((v10 < level) != (v11 < level)) {
          const double t = cross(v10, v11);
          pts.emplace_back(a_values[i + 1], b_values[j] + t * (b_values[j + 1] - b_values[j]));
        }
        if ((v01 < level) != (v11 < level)) {
          const double t = cross(v01, v11);
          pts.emplace_back(a_values[i] + t * (a_values[i + 1] - a_values[i]), b_values[j + 1]);
        }
        if ((v00 < level) != (v01 < level)) {
          const double t = cross(v00, v01);
          pts.emplace_back(a_values[i], b_values[j] + t * (b_values[j + 1] - b_values[j]));
        }
        if (pts.size() >= 2)
          segs += "M" + num(sx(pts[0].first)) + " " + num(sy(pts[0].second)) + "L" + num(sx(pts[1].first)) + " " +
                  num(sy(pts[1].second));
      }
    }
    if (!segs.empty()) {
      const int shade = 40 + l * 180 / (levels + 1);
      char color[16];
      std::snprintf(color, sizeof(color), "#%02x%02x%02x", shade / 2, shade / 2, shade);
      out += "<path d=\"" + segs + "\" fill=\"none\" stroke=\"" + color + "\" stroke-width=\"1\"/>\n";
    }
  }
  out += line(kMarginL, kMarginT, kMarginL, kHeight - kMarginB);
  out += line(kMarginL, kHeight - kMarginB, kWidth - kMarginR, kHeight - kMarginB);
  out += text((kMarginL + kWidth - kMarginR) / 2, kHeight - 16, "a");
  out += text(16, kMarginT + 8, "b", "start");
  out += "</svg>\n";
  return out;
}

}  // namespace ftlab
