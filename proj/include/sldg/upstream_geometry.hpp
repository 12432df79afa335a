#pragma once

// Upstream cells and their decomposition by the Eulerian grid.
//
// An upstream cell is the quadrilateral (straight or quadratic-sided)
// spanned by the traced images of an Eulerian cell's skeleton nodes. It is
// kept in unwrapped coordinates and cut by the periodic extension of the
// grid lines. Each boundary piece (outer segment) is owned by the grid cell
// containing it; grid-aligned cuts (inner segments) are emitted once per
// orientation, so every sub-region is bounded by a closed chain of
// segments owned by that sub-region's cell.
//
// Ownership is decided by the floor convention: a point on a vertical
// (horizontal) grid line belongs to the cell on its right (above). This is
// equivalent to shifting every grid line by an infinitesimal amount to the
// left (down), which makes grid-aligned configurations (identity trace,
// whole-cell shifts) regular: the extra sub-regions have zero area.

#include <algorithm>
#include <array>
#include <cmath>
#include <ostream>
#include <vector>

#include "sldg/characteristics.hpp"
#include "sldg/errors.hpp"

namespace sldg {

enum class CellShape { straight, quadratic };

/// Parametric side c(s) = a + b s + c s^2, s in [0, 1].
struct Curve {
  Point p0, p1;  // exact endpoints
  Point b, c;

  static Curve line(Point p0, Point p1) { return {p0, p1, p1 - p0, {0.0, 0.0}}; }

  /// Quadratic through p0, pm, p1 at s = 0, 1/2, 1. Written with the
  /// differences so that collinear or grid-aligned data stay exact.
  static Curve quadratic(Point p0, Point pm, Point p1) {
    const Point d1 = pm - p0, d2 = p1 - p0;
    return {p0, p1, 4.0 * d1 - d2, 2.0 * d2 - 4.0 * d1};
  }

  Point at(double s) const {
    if (s == 0.0) return p0;
    if (s == 1.0) return p1;
    return {p0.x + s * (b.x + s * c.x), p0.y + s * (b.y + s * c.y)};
  }
  Point derivative(double s) const { return {b.x + 2.0 * s * c.x, b.y + 2.0 * s * c.y}; }
  bool curved() const { return c.x != 0.0 || c.y != 0.0; }
};

/// Image of one Eulerian cell. Vertices counterclockwise from the image of
/// the bottom-left corner; side k joins vertex k to vertex k+1 through
/// midpoint k (bottom, right, top, left).
struct UpstreamCell {
  int cell = 0;
  CellShape shape = CellShape::straight;
  std::array<Point, 4> vertex{};
  std::array<Point, 4> midpoint{};
  Point center{};  // image of the cell center (used only by the test-function fit)
  bool has_midpoints = false;

  Curve side(int k) const {
    const Point& p0 = vertex[k];
    const Point& p1 = vertex[(k + 1) % 4];
    return shape == CellShape::quadratic ? Curve::quadratic(p0, midpoint[k], p1) : Curve::line(p0, p1);
  }
};

namespace detail {

// Relative distance under which traced coordinates snap onto grid lines.
inline constexpr double kSnap = 1e-12;

inline double snap(double v, double origin, double h) {
  const double k = std::round((v - origin) / h);
  const double line = origin + k * h;
  return std::abs(v - line) < kSnap * h ? line : v;
}

inline Point snap(const Mesh& m, Point p) {
  return {snap(p.x, m.domain().x_min, m.dx()), snap(p.y, m.domain().y_min, m.dy())};
}

inline double cross(Point a, Point b) { return a.x * b.y - a.y * b.x; }

// Proper intersection of segments [a,b] and [c,d].
inline bool segments_cross(Point a, Point b, Point c, Point d) {
  const double d1 = cross(b - a, c - a), d2 = cross(b - a, d - a);
  const double d3 = cross(d - c, a - c), d4 = cross(d - c, b - c);
  return ((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0));
}

// Integral of (x - x0) y'(s) over [s0, s1]; exact for quadratic curves.
inline double moment(const Curve& cv, double s0, double s1, double x0) {
  static const GaussRule g = gauss_legendre(2);
  double sum = 0.0;
  const double len = s1 - s0;
  for (int i = 0; i < 2; ++i) {
    const double s = s0 + len * (g.nodes[i] + 0.5);
    sum += g.weights[i] * (cv.at(s).x - x0) * cv.derivative(s).y;
  }
  return sum * len;
}

}  // namespace detail

/// Signed area by the boundary integral of x dy.
inline double area(const UpstreamCell& uc) {
  double a = 0.0;
  for (int k = 0; k < 4; ++k) a += detail::moment(uc.side(k), 0.0, 1.0, uc.vertex[0].x);
  return a;
}

/// Assembles the upstream cell of Eulerian cell j from traced nodes.
/// Nodes beyond the last row/column are the periodic images of the first.
/// Coordinates within 1e-12 cell widths of a grid line are snapped onto it.
inline UpstreamCell build_upstream(const Mesh& m, int j, const TracePointSet& t, CellShape shape) {
  const CellId c = m.cell(j);
  const double w = m.domain().width(), h = m.domain().height();
  auto node = [&](const std::vector<Point>& v, int ix, int iy) {
    const int wx = ix % m.nx(), wy = iy % m.ny();
    Point p = v[static_cast<std::size_t>(wy) * m.nx() + wx];
    if (ix >= m.nx()) p.x += w;
    if (iy >= m.ny()) p.y += h;
    return detail::snap(m, p);
  };
  UpstreamCell uc;
  uc.cell = j;
  uc.shape = shape;
  uc.vertex = {node(t.vertex, c.ix, c.iy), node(t.vertex, c.ix + 1, c.iy), node(t.vertex, c.ix + 1, c.iy + 1),
               node(t.vertex, c.ix, c.iy + 1)};
  if (t.has_midpoints()) {
    uc.has_midpoints = true;
    uc.midpoint = {node(t.bottom, c.ix, c.iy), node(t.left, c.ix + 1, c.iy), node(t.bottom, c.ix, c.iy + 1),
                   node(t.left, c.ix, c.iy)};
    uc.center = node(t.center, c.ix, c.iy);
  } else if (shape == CellShape::quadratic) {
    throw std::invalid_argument("quadratic upstream cells need traced edge midpoints");
  }

  const auto& v = uc.vertex;
  if (detail::segments_cross(v[0], v[1], v[2], v[3]) || detail::segments_cross(v[1], v[2], v[3], v[0]))
    throw DegenerateUpstreamCell(j, "self-intersecting quadrilateral");
  if (!(area(uc) > 0.0)) throw DegenerateUpstreamCell(j, "non-positive orientation");
  return uc;
}

/// Piece of a side curve (outer) or of a grid line (inner), traversed from
/// s0 to s1 and integrated with the polynomial of `owner`.
struct Segment {
  enum class Kind { outer, inner };
  Kind kind = Kind::outer;
  UnwrappedCell owner{};
  Curve curve{};
  double s0 = 0.0;
  double s1 = 1.0;

  Point start() const { return curve.at(s0); }
  Point end() const { return curve.at(s1); }
  bool horizontal() const { return curve.b.y == 0.0 && curve.c.y == 0.0; }
};

struct SubRegion {
  UnwrappedCell owner{};
  double area = 0.0;
};

struct SegmentSet {
  std::vector<Segment> outer;
  std::vector<Segment> inner;
  std::vector<SubRegion> covered;  // owners with nonzero sub-area

  void clear() {
    outer.clear();
    inner.clear();
    covered.clear();
  }
};

namespace detail {

// Roots in (0,1) of c s^2 + b s + a0 = 0.
inline void roots_in_unit(double c, double b, double a0, std::vector<double>& out) {
  auto keep = [&](double s) {
    if (s > kSnap && s < 1.0 - kSnap) out.push_back(s);
  };
  if (c == 0.0) {
    if (b != 0.0) keep(-a0 / b);
    return;
  }
  const double disc = b * b - 4.0 * c * a0;
  if (disc < 0.0) return;
  const double q = -0.5 * (b + std::copysign(std::sqrt(disc), b));
  if (q != 0.0) keep(a0 / q);
  keep(q / c);
}

// Range of one coordinate of the curve over [0,1].
inline std::array<double, 2> coordinate_range(double a, double b, double c) {
  double lo = std::min(a, a + b + c), hi = std::max(a, a + b + c);
  if (c != 0.0) {
    const double s = -b / (2.0 * c);
    if (s > 0.0 && s < 1.0) {
      const double v = a + s * (b + s * c);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  return {lo, hi};
}

struct Crossing {
  long line;
  double coord;
  int delta;
};

struct Piece {
  Curve curve;
  double s0, s1;
  UnwrappedCell cell;
};

}  // namespace detail

/// Cuts an upstream cell by the grid. Throws ClipFailure when the boundary
/// does not describe a simple counterclockwise region.
inline void clip(const UpstreamCell& uc, const Mesh& m, SegmentSet& out) {
  using detail::Crossing;
  using detail::Piece;
  out.clear();
  const double tol_x = detail::kSnap * m.dx(), tol_y = detail::kSnap * m.dy();

  // 1. Split the sides at every grid line and classify the pieces.
  std::vector<Piece> pieces;
  std::vector<double> cuts;
  for (int k = 0; k < 4; ++k) {
    const Curve cv = uc.side(k);
    // Interior roots only; near-coincident roots (tangency) are merged.
    cuts.clear();
    const auto xr = detail::coordinate_range(cv.p0.x, cv.b.x, cv.c.x);
    for (long i = m.column_of(xr[0]); i <= m.column_of(xr[1]) + 1; ++i)
      detail::roots_in_unit(cv.c.x, cv.b.x, cv.p0.x - m.grid_x(i), cuts);
    const auto yr = detail::coordinate_range(cv.p0.y, cv.b.y, cv.c.y);
    for (long i = m.row_of(yr[0]); i <= m.row_of(yr[1]) + 1; ++i)
      detail::roots_in_unit(cv.c.y, cv.b.y, cv.p0.y - m.grid_y(i), cuts);
    std::sort(cuts.begin(), cuts.end());
    cuts.push_back(1.0);
    double prev = 0.0;
    for (double s : cuts) {
      if (s - prev <= detail::kSnap && s != 1.0) continue;
      pieces.push_back({cv, prev, s, m.unwrapped_cell(cv.at(0.5 * (prev + s)))});
      prev = s;
    }
  }

  // 2. Crossings of the boundary with grid lines from class transitions.
  std::vector<Crossing> vert, horiz;
  for (std::size_t i = 0; i < pieces.size(); ++i) {
    const Piece& p = pieces[i];
    const Piece& q = pieces[(i + 1) % pieces.size()];
    const Point j = q.curve.at(q.s0);
    const long dc = q.cell.ix - p.cell.ix, dr = q.cell.iy - p.cell.iy;
    if (std::abs(dc) > 1 || std::abs(dr) > 1) throw ClipFailure(uc.cell, "boundary skips a grid line");
    if (dc == 1) vert.push_back({q.cell.ix, j.y, +1});
    if (dc == -1) vert.push_back({p.cell.ix, j.y, -1});
    if (dr == 1) horiz.push_back({q.cell.iy, j.x, -1});
    if (dr == -1) horiz.push_back({p.cell.iy, j.x, +1});
  }

  for (const Piece& p : pieces) out.outer.push_back({Segment::Kind::outer, p.cell, p.curve, p.s0, p.s1});

  // 3. Interior intervals along each crossed line by winding number.
  auto sweep = [&](std::vector<Crossing>& cs, double tol, auto&& emit) {
    std::sort(cs.begin(), cs.end(), [](const Crossing& a, const Crossing& b) {
      return a.line != b.line ? a.line < b.line : a.coord < b.coord;
    });
    std::size_t i = 0;
    while (i < cs.size()) {
      const long line = cs[i].line;
      int w = 0;
      double open = 0.0;
      while (i < cs.size() && cs[i].line == line) {
        // Group crossings that coincide up to rounding.
        const double c0 = cs[i].coord;
        int d = 0;
        while (i < cs.size() && cs[i].line == line && cs[i].coord - c0 <= tol) d += cs[i++].delta;
        const int nw = w + d;
        if (nw < 0 || nw > 1) throw ClipFailure(uc.cell, "winding number outside {0,1}");
        if (w == 0 && nw == 1) open = c0;
        if (w == 1 && nw == 0) emit(line, open, c0);
        w = nw;
      }
      if (w != 0) throw ClipFailure(uc.cell, "unbalanced crossings");
    }
  };

  sweep(vert, tol_y, [&](long i, double ya, double yb) {
    const double x = m.grid_x(i);
    double lo = ya;
    while (yb - lo > tol_y) {
      const long r = m.row_of(lo);
      const double hi = std::min(yb, m.grid_y(r + 1));
      if (hi - lo > tol_y) {
        out.inner.push_back({Segment::Kind::inner, {i - 1, r}, Curve::line({x, lo}, {x, hi}), 0.0, 1.0});
        out.inner.push_back({Segment::Kind::inner, {i, r}, Curve::line({x, hi}, {x, lo}), 0.0, 1.0});
      }
      lo = hi;
    }
  });
  sweep(horiz, tol_x, [&](long j, double xa, double xb) {
    const double y = m.grid_y(j);
    double lo = xa;
    while (xb - lo > tol_x) {
      const long c = m.column_of(lo);
      const double hi = std::min(xb, m.grid_x(c + 1));
      if (hi - lo > tol_x) {
        out.inner.push_back({Segment::Kind::inner, {c, j}, Curve::line({lo, y}, {hi, y}), 0.0, 1.0});
        out.inner.push_back({Segment::Kind::inner, {c, j - 1}, Curve::line({hi, y}, {lo, y}), 0.0, 1.0});
      }
      lo = hi;
    }
  });

  // 4. Sub-region areas from the closed chains.
  std::vector<SubRegion> regions;
  auto add = [&](const Segment& s) {
    auto it = std::find_if(regions.begin(), regions.end(), [&](const SubRegion& r) {
      return r.owner.ix == s.owner.ix && r.owner.iy == s.owner.iy;
    });
    if (it == regions.end()) {
      regions.push_back({s.owner, 0.0});
      it = regions.end() - 1;
    }
    it->area += detail::moment(s.curve, s.s0, s.s1, m.grid_x(s.owner.ix));
  };
  for (const Segment& s : out.outer) add(s);
  for (const Segment& s : out.inner) add(s);
  const double tiny = 1e-12 * m.cell_area();
  for (const SubRegion& r : regions) {
    if (r.area < -tiny) throw ClipFailure(uc.cell, "negative sub-region area");
    if (r.area > tiny) out.covered.push_back(r);
  }
}

inline SegmentSet clip(const UpstreamCell& uc, const Mesh& m) {
  SegmentSet s;
  clip(uc, m, s);
  return s;
}

/// max_j |area(A_j*) - area(A_j)| / area(A_j).
inline double area_deviation(const std::vector<UpstreamCell>& cells, const Mesh& m) {
  double theta = 0.0;
  for (const UpstreamCell& uc : cells) theta = std::max(theta, std::abs(area(uc) - m.cell_area()) / m.cell_area());
  return theta;
}

/// Text dump: one line per segment, "kind owner_ix owner_iy x0 y0 x1 y1".
inline void write_segments(std::ostream& os, const SegmentSet& s) {
  auto line = [&](const char* kind, const Segment& g) {
    const Point a = g.start(), b = g.end();
    os << kind << ' ' << g.owner.ix << ' ' << g.owner.iy << ' ' << a.x << ' ' << a.y << ' ' << b.x << ' ' << b.y << '\n';
  };
  for (const Segment& g : s.outer) line("outer", g);
  for (const Segment& g : s.inner) line("inner", g);
}

}  // namespace sldg
