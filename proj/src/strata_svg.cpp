#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <string>
#include <vector>

#include "dsplit/errors.hpp"
#include "dsplit/experiment.hpp"

namespace dsplit {

namespace {

constexpr double pi = std::numbers::pi;
constexpr double side = 600.0, margin = 30.0, legend_w = 170.0;
constexpr int arc_samples = 720;
const char* const palette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

double px(double x) { return margin + side * x; }
double py(double y) { return margin + side * (1.0 - y); }  // y up

// torus copies of a shape with bounding box [lo, hi] that meet the unit square
std::vector<std::array<double, 2>> shifts_for(double xlo, double xhi, double ylo, double yhi) {
  std::vector<std::array<double, 2>> out;
  for (int dx = -1; dx <= 1; ++dx)
    for (int dy = -1; dy <= 1; ++dy)
      if (xhi + dx >= 0.0 && xlo + dx <= 1.0 && yhi + dy >= 0.0 && ylo + dy <= 1.0) out.push_back({double(dx), double(dy)});
  return out;
}

bool hit_in_L(const TorusTranslation& f, const RegionK& K, int m, double x, double y, int j) {
  ReturnData r = return_data(f, K, TorusPoint::torus(x, y), m, 1e-9);
  return std::binary_search(r.L_set.begin(), r.L_set.end(), j);
}

}  // namespace

std::string strata_svg(const Stratification& s, const RegionK& K, const TorusTranslation& f, SvgSummary* summary) {
  if (s.grid.dim != 2 || K.dim() != 2 || f.dim != 2) throw precondition_error("render_strata_svg needs d = 2");
  const int m = s.m;
  const double r = K.radius();
  const TorusPoint c0 = K.center();
  SvgSummary sum;
  std::string out;
  out += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(side + 2 * margin + legend_w) + "\" height=\"" +
         fmt(side + 2 * margin) + "\">\n";
  out += "<defs><clipPath id=\"torus\"><rect x=\"" + fmt(margin) + "\" y=\"" + fmt(margin) + "\" width=\"" +
         fmt(side) + "\" height=\"" + fmt(side) + "\"/></clipPath></defs>\n";
  out += "<rect x=\"" + fmt(margin) + "\" y=\"" + fmt(margin) + "\" width=\"" + fmt(side) + "\" height=\"" + fmt(side) +
         "\" fill=\"white\" stroke=\"black\"/>\n";

  // circle i is f^i(dK); points on it hit dK at time -i
  struct Layer {
    int i;
    double cx, cy;
    const char* color;
  };
  std::vector<Layer> layers;
  for (int i = -(m - 2); i <= m - 1; ++i) {
    TorusPoint ci = iterate(f, c0, i);
    layers.push_back({i, ci[0], ci[1], palette[layers.size() % std::size(palette)]});
  }
  sum.layers = static_cast<int>(layers.size());

  out += "<g clip-path=\"url(#torus)\" fill=\"none\">\n";
  for (const auto& L : layers) {
    out += "<g class=\"layer\" id=\"layer_" + std::to_string(L.i) + "\" stroke=\"" + L.color + "\" stroke-width=\"1\">\n";
    for (auto sh : shifts_for(L.cx - r, L.cx + r, L.cy - r, L.cy + r))
      out += "<circle cx=\"" + fmt(px(L.cx + sh[0])) + "\" cy=\"" + fmt(py(L.cy + sh[1])) + "\" r=\"" + fmt(side * r) +
             "\"/>\n";
    out += "</g>\n";
  }

  // X_1: sample each circle, keep the samples whose own hit belongs to L
  out += "<g class=\"x1\" stroke=\"black\" stroke-width=\"4\" stroke-linecap=\"round\">\n";
  for (const auto& L : layers) {
    std::vector<bool> keep(arc_samples);
    for (int k = 0; k < arc_samples; ++k) {
      double a = 2.0 * pi * k / arc_samples;
      keep[k] = hit_in_L(f, K, m, L.cx + r * std::cos(a), L.cy + r * std::sin(a), -L.i);
    }
    // runs of kept samples, started just after a gap so wrapped runs stay whole
    int start = 0;
    while (start < arc_samples && keep[start]) ++start;
    if (start == arc_samples) start = 0;
    for (int k = 0; k < arc_samples;) {
      int idx = (start + k) % arc_samples;
      if (!keep[idx]) {
        ++k;
        continue;
      }
      std::vector<double> angles;
      while (k < arc_samples && keep[(start + k) % arc_samples]) {
        angles.push_back(2.0 * pi * (start + k) / arc_samples);
        ++k;
      }
      if (angles.size() < 2) continue;
      double xlo = 2, xhi = -2, ylo = 2, yhi = -2;
      for (double a : angles) {
        xlo = std::min(xlo, L.cx + r * std::cos(a)), xhi = std::max(xhi, L.cx + r * std::cos(a));
        ylo = std::min(ylo, L.cy + r * std::sin(a)), yhi = std::max(yhi, L.cy + r * std::sin(a));
      }
      for (auto sh : shifts_for(xlo, xhi, ylo, yhi)) {
        out += "<polyline class=\"x1_arc\" layer=\"" + std::to_string(L.i) + "\" points=\"";
        for (std::size_t q = 0; q < angles.size(); ++q) {
          if (q) out += ' ';
          out += fmt(px(L.cx + r * std::cos(angles[q]) + sh[0])) + "," + fmt(py(L.cy + r * std::sin(angles[q]) + sh[1]));
        }
        out += "\"/>\n";
      }
      ++sum.x1_polylines;
    }
  }
  out += "</g>\n";

  // X_2: circle-circle crossings where both hits belong to L
  std::vector<std::array<double, 2>> dots;
  for (std::size_t a = 0; a < layers.size(); ++a)
    for (std::size_t b = a + 1; b < layers.size(); ++b) {
      for (int dx = -2; dx <= 2; ++dx)
        for (int dy = -2; dy <= 2; ++dy) {
          double ex = layers[b].cx + dx - layers[a].cx, ey = layers[b].cy + dy - layers[a].cy;
          double d = std::hypot(ex, ey);
          if (d == 0.0 || d > 2.0 * r) continue;
          double h = std::sqrt(std::max(0.0, r * r - 0.25 * d * d));
          double mx = layers[a].cx + 0.5 * ex, my = layers[a].cy + 0.5 * ey;
          for (double sg : {1.0, -1.0}) {
            double x = wrap_unit(mx - sg * h * ey / d), y = wrap_unit(my + sg * h * ex / d);
            if (hit_in_L(f, K, m, x, y, -layers[a].i) && hit_in_L(f, K, m, x, y, -layers[b].i)) dots.push_back({x, y});
          }
        }
    }
  std::sort(dots.begin(), dots.end());
  sum.x2_dots = dots.size();
  if (!dots.empty()) {
    out += "<g class=\"x2\" fill=\"black\">\n";
    for (const auto& p : dots)
      out += "<circle class=\"x2_dot\" cx=\"" + fmt(px(p[0])) + "\" cy=\"" + fmt(py(p[1])) + "\" r=\"5\"/>\n";
    out += "</g>\n";
  }
  out += "</g>\n";

  // legend
  double lx = side + 2 * margin, ly = margin + 10;
  out += "<g class=\"legend\" font-family=\"sans-serif\" font-size=\"13\">\n";
  for (const auto& L : layers) {
    out += "<line x1=\"" + fmt(lx) + "\" y1=\"" + fmt(ly) + "\" x2=\"" + fmt(lx + 24) + "\" y2=\"" + fmt(ly) +
           "\" stroke=\"" + L.color + "\" stroke-width=\"2\"/>";
    out += "<text x=\"" + fmt(lx + 30) + "\" y=\"" + fmt(ly + 4) + "\">f^" + std::to_string(L.i) + "(∂K)</text>\n";
    ly += 20;
  }
  out += "<line x1=\"" + fmt(lx) + "\" y1=\"" + fmt(ly) + "\" x2=\"" + fmt(lx + 24) + "\" y2=\"" + fmt(ly) +
         "\" stroke=\"black\" stroke-width=\"4\"/><text x=\"" + fmt(lx + 30) + "\" y=\"" + fmt(ly + 4) +
         "\">X₁</text>\n";
  ly += 20;
  if (!dots.empty())
    out += "<circle cx=\"" + fmt(lx + 12) + "\" cy=\"" + fmt(ly) + "\" r=\"5\" fill=\"black\"/><text x=\"" +
           fmt(lx + 30) + "\" y=\"" + fmt(ly + 4) + "\">X₂</text>\n";
  out += "</g>\n</svg>\n";
  if (summary) *summary = sum;
  return out;
}

SvgSummary render_strata_svg(const Stratification& s, const RegionK& K, const TorusTranslation& f,
                             const std::string& path) {
  SvgSummary sum;
  write_file(path, strata_svg(s, K, f, &sum));
  return sum;
}

}  // namespace dsplit
