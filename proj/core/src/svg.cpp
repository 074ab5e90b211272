#include "lipreach/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

namespace lipreach {

namespace {

constexpr double kCanvasW = 640.0;
constexpr double kCanvasH = 480.0;
constexpr double kPad = 40.0;

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                "#ff7f0e", "#8c564b", "#17becf", "#bcbd22"};
constexpr int kPaletteSize = 8;

struct Point {
  double x = 0.0;
  double y = 0.0;
};

struct Extent {
  double lo_x = std::numeric_limits<double>::infinity();
  double hi_x = -std::numeric_limits<double>::infinity();
  double lo_y = std::numeric_limits<double>::infinity();
  double hi_y = -std::numeric_limits<double>::infinity();

  void grow(const Point& p) {
    lo_x = std::min(lo_x, p.x);
    hi_x = std::max(hi_x, p.x);
    lo_y = std::min(lo_y, p.y);
    hi_y = std::max(hi_y, p.y);
  }

  void pad() {
    if (!(lo_x <= hi_x)) {
      lo_x = -1.0;
      hi_x = 1.0;
    }
    if (!(lo_y <= hi_y)) {
      lo_y = -1.0;
      hi_y = 1.0;
    }
    double mx = 0.05 * (hi_x - lo_x);
    double my = 0.05 * (hi_y - lo_y);
    if (mx == 0.0) mx = 0.5;
    if (my == 0.0) my = 0.5;
    lo_x -= mx;
    hi_x += mx;
    lo_y -= my;
    hi_y += my;
  }

  Point to_canvas(const Point& p) const {
    const double sx = (kCanvasW - 2.0 * kPad) / (hi_x - lo_x);
    const double sy = (kCanvasH - 2.0 * kPad) / (hi_y - lo_y);
    return {kPad + (p.x - lo_x) * sx, kCanvasH - kPad - (p.y - lo_y) * sy};
  }
};

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

double cross(const Point& o, const Point& a, const Point& b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

// Andrew's monotone chain; returns CCW hull without the repeated first point.
std::vector<Point> convex_hull(std::vector<Point> pts) {
  std::sort(pts.begin(), pts.end(), [](const Point& a, const Point& b) {
    return a.x < b.x || (a.x == b.x && a.y < b.y);
  });
  pts.erase(std::unique(pts.begin(), pts.end(),
                        [](const Point& a, const Point& b) { return a.x == b.x && a.y == b.y; }),
            pts.end());
  const std::size_t n = pts.size();
  if (n <= 2) return pts;
  std::vector<Point> hull(2 * n);
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0.0) --k;
    hull[k++] = pts[i];
  }
  const std::size_t lower_size = k + 1;
  for (std::size_t i = n - 1; i-- > 0;) {
    while (k >= lower_size && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0.0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  return hull;
}

std::vector<Point> projected_vertices(const RotatedRectangle& set, int axis_x, int axis_y) {
  const Eigen::Index n = set.dim();
  if (n > 20) throw std::invalid_argument("vertex projection supports at most 20 dimensions");
  const Eigen::VectorXd& lo = set.bounds.lower();
  const Eigen::VectorXd& hi = set.bounds.upper();
  // Only the two projected rows of the rotation matter.
  const Eigen::RowVectorXd row_x = set.rotation.row(axis_x);
  const Eigen::RowVectorXd row_y = set.rotation.row(axis_y);
  std::vector<Point> pts;
  pts.reserve(static_cast<std::size_t>(1) << n);
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
    double px = 0.0;
    double py = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double v = (mask >> i) & 1 ? hi[i] : lo[i];
      px += row_x[i] * v;
      py += row_y[i] * v;
    }
    pts.push_back({px, py});
  }
  return pts;
}

std::string polygon_element(const std::vector<Point>& hull, const Extent& ext,
                            const std::string& stroke, const std::string& fill) {
  std::string out = "  <polygon points=\"";
  for (std::size_t i = 0; i < hull.size(); ++i) {
    const Point c = ext.to_canvas(hull[i]);
    if (i) out += ' ';
    out += fmt(c.x) + "," + fmt(c.y);
  }
  out += "\" fill=\"" + fill + "\" stroke=\"" + stroke + "\" stroke-width=\"1.2\"/>\n";
  return out;
}

std::string svg_open() {
  return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(kCanvasW) + "\" height=\"" +
         fmt(kCanvasH) + "\" viewBox=\"0 0 " + fmt(kCanvasW) + " " + fmt(kCanvasH) +
         "\">\n  <rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";
}

std::string axis_labels(int axis_x, int axis_y) {
  std::string out;
  out += "  <text x=\"" + fmt(kCanvasW / 2.0) + "\" y=\"" + fmt(kCanvasH - 10.0) +
         "\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">x" +
         std::to_string(axis_x) + "</text>\n";
  out += "  <text x=\"14\" y=\"" + fmt(kCanvasH / 2.0) +
         "\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 14 " +
         fmt(kCanvasH / 2.0) + ")\">x" + std::to_string(axis_y) + "</text>\n";
  return out;
}

}  // namespace

std::string render_reach_svg(const std::vector<RotatedRectangle>& sets,
                             const std::vector<std::vector<Eigen::VectorXd>>& trajectories,
                             int axis_x, int axis_y) {
  if (sets.empty()) throw std::invalid_argument("render_reach_svg requires at least one set");
  const Eigen::Index n = sets.front().dim();
  if (axis_x < 0 || axis_y < 0 || axis_x >= n || axis_y >= n || axis_x == axis_y) {
    throw std::invalid_argument("projection axes must be distinct and in range");
  }

  std::vector<std::vector<Point>> hulls;
  hulls.reserve(sets.size());
  Extent ext;
  for (const RotatedRectangle& set : sets) {
    std::vector<Point> hull = convex_hull(projected_vertices(set, axis_x, axis_y));
    for (const Point& p : hull) ext.grow(p);
    hulls.push_back(std::move(hull));
  }
  for (const auto& traj : trajectories) {
    for (const Eigen::VectorXd& x : traj) {
      ext.grow({x[axis_x], x[axis_y]});
    }
  }
  ext.pad();

  std::string out = svg_open();
  for (std::size_t t = 0; t < hulls.size(); ++t) {
    out += polygon_element(hulls[t], ext, kPalette[t % kPaletteSize], "none");
  }
  for (const auto& traj : trajectories) {
    for (const Eigen::VectorXd& x : traj) {
      const Point c = ext.to_canvas({x[axis_x], x[axis_y]});
      out += "  <circle cx=\"" + fmt(c.x) + "\" cy=\"" + fmt(c.y) +
             "\" r=\"1.5\" fill=\"#555555\" fill-opacity=\"0.6\"/>\n";
    }
  }
  // Legend: one swatch per step.
  for (std::size_t t = 0; t < hulls.size(); ++t) {
    const double y = 18.0 + 16.0 * static_cast<double>(t);
    out += "  <rect x=\"" + fmt(kCanvasW - 110.0) + "\" y=\"" + fmt(y - 9.0) +
           "\" width=\"12\" height=\"12\" fill=\"none\" stroke=\"" +
           kPalette[t % kPaletteSize] + "\" stroke-width=\"1.5\"/>\n";
    out += "  <text x=\"" + fmt(kCanvasW - 92.0) + "\" y=\"" + fmt(y + 1.0) +
           "\" font-family=\"sans-serif\" font-size=\"12\">step " + std::to_string(t) +
           "</text>\n";
  }
  out += axis_labels(axis_x, axis_y);
  out += "</svg>\n";
  return out;
}

std::string render_partition_svg(const std::vector<SnapshotRect>& partition, int axis_x,
                                 int axis_y) {
  if (partition.empty()) throw std::invalid_argument("render_partition_svg requires rectangles");
  const Eigen::Index n = partition.front().rect.dim();
  if (axis_x < 0 || axis_y < 0 || axis_x >= n || axis_y >= n || axis_x == axis_y) {
    throw std::invalid_argument("projection axes must be distinct and in range");
  }

  Extent ext;
  for (const SnapshotRect& snap : partition) {
    ext.grow({snap.rect.lower()[axis_x], snap.rect.lower()[axis_y]});
    ext.grow({snap.rect.upper()[axis_x], snap.rect.upper()[axis_y]});
  }
  ext.pad();

  std::string out = svg_open();
  for (const SnapshotRect& snap : partition) {
    const double lx = snap.rect.lower()[axis_x];
    const double ly = snap.rect.lower()[axis_y];
    const double ux = snap.rect.upper()[axis_x];
    const double uy = snap.rect.upper()[axis_y];
    const std::vector<Point> box = {{lx, ly}, {ux, ly}, {ux, uy}, {lx, uy}};
    out += polygon_element(box, ext, "#333333", snap.pruned ? "#d9d9d9" : "none");
  }
  out += axis_labels(axis_x, axis_y);
  out += "</svg>\n";
  return out;
}

}  // namespace lipreach
