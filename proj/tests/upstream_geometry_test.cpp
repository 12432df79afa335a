#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "sldg/upstream_geometry.hpp"

namespace {

using namespace sldg;
constexpr double kPi = std::numbers::pi;
const Domain kSquare{0.0, 2 * kPi, 0.0, 2 * kPi};

UpstreamCell make_cell(std::array<Point, 4> v, CellShape shape = CellShape::straight) {
  UpstreamCell uc;
  uc.shape = shape;
  uc.vertex = v;
  for (int k = 0; k < 4; ++k) uc.midpoint[k] = 0.5 * (v[k] + v[(k + 1) % 4]);
  uc.has_midpoints = true;
  return uc;
}

UpstreamCell rectangle(double x0, double y0, double w, double h) {
  return make_cell({Point{x0, y0}, Point{x0 + w, y0}, Point{x0 + w, y0 + h}, Point{x0, y0 + h}});
}

double covered_area(const SegmentSet& s) {
  double a = 0.0;
  for (const SubRegion& r : s.covered) a += r.area;
  return a;
}

// Dense polyline area with Richardson extrapolation (chord error ~ N^-2).
double polyline_area(const UpstreamCell& uc, int n) {
  auto poly = [&](int m) {
    double a = 0.0;
    for (int k = 0; k < 4; ++k) {
      const Curve c = uc.side(k);
      for (int i = 0; i < m; ++i) a += detail::cross(c.at(double(i) / m), c.at(double(i + 1) / m));
    }
    return 0.5 * a;
  };
  return (4.0 * poly(2 * n) - poly(n)) / 3.0;
}

// Random simple quadrilateral near a (scaled, translated) grid cell.
UpstreamCell random_cell(std::mt19937& gen, const Mesh& m, CellShape shape) {
  std::uniform_real_distribution<double> u(-1.0, 1.0), sc(0.3, 3.0), sh(-6.0, 6.0);
  const double sx = sc(gen) * m.dx(), sy = sc(gen) * m.dy();
  const Point o{kPi + sh(gen) * m.dx(), kPi + sh(gen) * m.dy()};
  std::array<Point, 4> v = {o, o + Point{sx, 0}, o + Point{sx, sy}, o + Point{0, sy}};
  for (Point& p : v) p = p + Point{0.2 * sx * u(gen), 0.2 * sy * u(gen)};
  UpstreamCell uc = make_cell(v, shape);
  if (shape == CellShape::quadratic)
    for (Point& p : uc.midpoint) p = p + Point{0.12 * sx * u(gen), 0.12 * sy * u(gen)};
  return uc;
}

TEST(Curve, QuadraticHitsItsNodes) {
  const Curve c = Curve::quadratic({0.1, 0.2}, {0.7, 1.3}, {1.9, 0.4});
  EXPECT_EQ(c.at(0.0), (Point{0.1, 0.2}));
  EXPECT_EQ(c.at(1.0), (Point{1.9, 0.4}));
  EXPECT_NEAR(c.at(0.5).x, 0.7, 1e-15);
  EXPECT_NEAR(c.at(0.5).y, 1.3, 1e-15);
}

TEST(Curve, CollinearMidpointDegeneratesExactly) {
  const Curve c = Curve::quadratic({1.0, 2.0}, {1.0, 2.5}, {1.0, 3.0});
  EXPECT_FALSE(c.curved());
  EXPECT_EQ(c.at(0.3).x, 1.0);
}

TEST(Area, UnitSquareAndTranslatedRectangle) {
  EXPECT_NEAR(area(rectangle(0, 0, 1, 1)), 1.0, 1e-15);
  const Mesh m(kSquare, 20, 20);
  EXPECT_NEAR(area(rectangle(3.3, -1.7, m.dx(), m.dy())), m.cell_area(), 1e-15);
}

TEST(Area, BulgedSideAgreesWithPolylineOracle) {
  UpstreamCell uc = rectangle(0, 0, 1, 1);
  uc.shape = CellShape::quadratic;
  uc.midpoint[1] = {1.3, 0.45};
  uc.midpoint[2] = {0.55, 1.1};
  EXPECT_NEAR(area(uc), polyline_area(uc, 10000), 1e-10);
  EXPECT_GT(area(uc), 1.0);
}

TEST(BuildUpstream, IdentityTraceGivesEulerianCells) {
  const Mesh m(kSquare, 6, 5);
  const TracePointSet t = identity_trace(m, true);
  for (int j = 0; j < m.num_cells(); ++j) {
    const UpstreamCell uc = build_upstream(m, j, t, CellShape::quadratic);
    const CellId c = m.cell(j);
    EXPECT_EQ(uc.vertex[0], m.vertex(c.ix, c.iy));
    EXPECT_NEAR(uc.vertex[2].x, m.grid_x(c.ix + 1), 1e-14);
    EXPECT_NEAR(uc.vertex[2].y, m.grid_y(c.iy + 1), 1e-14);
    EXPECT_NEAR(area(uc), m.cell_area(), 1e-14);
  }
}

TEST(BuildUpstream, SnapsNearGridCoordinates) {
  const Mesh m(kSquare, 8, 8);
  const TracePointSet t = map_nodes(m, false, [&](const SkeletonNode&, Point p) {
    return Point{p.x - m.dx() + 1e-15, p.y + 3e-16};
  });
  const UpstreamCell uc = build_upstream(m, m.index({3, 2}), t, CellShape::straight);
  EXPECT_EQ(uc.vertex[0].x, m.grid_x(2));
  EXPECT_EQ(uc.vertex[0].y, m.grid_y(2));
}

TEST(BuildUpstream, RejectsInvertedAndSelfIntersecting) {
  const Mesh m(kSquare, 4, 4);
  // Mirror every node: clockwise cells.
  const TracePointSet flip = map_nodes(m, false, [](const SkeletonNode&, Point p) { return Point{-p.x, p.y}; });
  EXPECT_THROW(build_upstream(m, 5, flip, CellShape::straight), DegenerateUpstreamCell);
  // Swap two vertices of cell (1,1): bow-tie.
  TracePointSet bow = identity_trace(m, false);
  std::swap(bow.vertex[1 * 4 + 2], bow.vertex[2 * 4 + 2]);
  try {
    build_upstream(m, m.index({1, 1}), bow, CellShape::straight);
    FAIL();
  } catch (const DegenerateUpstreamCell& e) {
    EXPECT_EQ(e.cell(), m.index({1, 1}));
  }
  EXPECT_THROW(build_upstream(m, 0, identity_trace(m, false), CellShape::quadratic), std::invalid_argument);
}

TEST(Clip, CellInsideOneGridCell) {
  const Mesh m(kSquare, 10, 10);
  const SegmentSet s = clip(rectangle(m.grid_x(3) + 0.1 * m.dx(), m.grid_y(4) + 0.2 * m.dy(), 0.5 * m.dx(), 0.6 * m.dy()), m);
  EXPECT_EQ(s.outer.size(), 4u);
  EXPECT_EQ(s.inner.size(), 0u);
  ASSERT_EQ(s.covered.size(), 1u);
  EXPECT_EQ(s.covered[0].owner.ix, 3);
  EXPECT_EQ(s.covered[0].owner.iy, 4);
  EXPECT_NEAR(s.covered[0].area, 0.3 * m.cell_area(), 1e-15);
}

TEST(Clip, HalfCellShift) {
  const Mesh m(kSquare, 10, 10);
  const SegmentSet s = clip(rectangle(m.grid_x(2) + 0.5 * m.dx(), m.grid_y(5), m.dx(), m.dy()), m);
  EXPECT_EQ(s.outer.size(), 6u);
  ASSERT_EQ(s.covered.size(), 2u);
  for (const SubRegion& r : s.covered) EXPECT_NEAR(r.area, 0.5 * m.cell_area(), 1e-14);
  int vertical = 0;
  for (const Segment& g : s.inner)
    if (!g.horizontal()) {
      ++vertical;
      EXPECT_EQ(g.start().x, m.grid_x(3));
    }
  EXPECT_EQ(vertical, 2);
}

TEST(Clip, IdentityCellCoversOnlyItself) {
  const Mesh m(kSquare, 10, 10);
  const SegmentSet s = clip(rectangle(m.grid_x(7), m.grid_y(1), m.dx(), m.dy()), m);
  ASSERT_EQ(s.covered.size(), 1u);
  EXPECT_EQ(s.covered[0].owner.ix, 7);
  EXPECT_EQ(s.covered[0].owner.iy, 1);
  EXPECT_NEAR(s.covered[0].area, m.cell_area(), 1e-15);
}

TEST(Clip, ClosureAndPairingOnRandomCells) {
  const Mesh m(kSquare, 16, 16);
  std::mt19937 gen(2024);
  for (CellShape shape : {CellShape::straight, CellShape::quadratic}) {
    for (int trial = 0; trial < 300; ++trial) {
      const UpstreamCell uc = random_cell(gen, m, shape);
      const double a = area(uc);
      if (!(a > 0)) continue;
      const SegmentSet s = clip(uc, m);
      EXPECT_NEAR(covered_area(s), a, 1e-10 * a);
      ASSERT_EQ(s.inner.size() % 2, 0u);
      for (std::size_t i = 0; i < s.inner.size(); i += 2) {
        const Segment &p = s.inner[i], &q = s.inner[i + 1];
        EXPECT_EQ(p.start(), q.end());
        EXPECT_EQ(p.end(), q.start());
        EXPECT_EQ(std::abs(p.owner.ix - q.owner.ix) + std::abs(p.owner.iy - q.owner.iy), 1);
      }
    }
  }
}

TEST(Clip, CollinearQuadraticMatchesStraight) {
  const Mesh m(kSquare, 12, 12);
  UpstreamCell a = make_cell({Point{1.0, 1.1}, Point{1.9, 0.95}, Point{2.1, 1.8}, Point{0.9, 1.7}});
  UpstreamCell b = a;
  b.shape = CellShape::quadratic;
  const SegmentSet sa = clip(a, m), sb = clip(b, m);
  ASSERT_EQ(sa.outer.size(), sb.outer.size());
  ASSERT_EQ(sa.covered.size(), sb.covered.size());
  for (std::size_t i = 0; i < sa.covered.size(); ++i) EXPECT_NEAR(sa.covered[i].area, sb.covered[i].area, 1e-14);
}

TEST(Clip, SelfOverlappingCurvedCellFails) {
  const Mesh m(kSquare, 10, 10);
  UpstreamCell uc = rectangle(m.grid_x(2) + 0.1, m.grid_y(2) + 0.1, 2 * m.dx(), 2 * m.dy());
  uc.shape = CellShape::quadratic;
  uc.midpoint[2].y -= 6 * m.dy();  // top side dives far below the bottom side
  EXPECT_THROW(clip(uc, m), ClipFailure);
}

TEST(Clip, DebugDumpListsEverySegment) {
  const Mesh m(kSquare, 10, 10);
  const SegmentSet s = clip(rectangle(m.grid_x(2) + 0.5 * m.dx(), m.grid_y(5) + 0.5 * m.dy(), m.dx(), m.dy()), m);
  std::ostringstream os;
  write_segments(os, s);
  std::size_t lines = 0;
  for (char c : os.str()) lines += c == '\n';
  EXPECT_EQ(lines, s.outer.size() + s.inner.size());
  EXPECT_EQ(os.str().rfind("outer ", 0), 0u);
}

TEST(AreaDeviation, IdentityTranslationAndStretch) {
  const Mesh m(kSquare, 6, 6);
  std::vector<UpstreamCell> cells;
  const TracePointSet id = identity_trace(m, false);
  for (int j = 0; j < m.num_cells(); ++j) cells.push_back(build_upstream(m, j, id, CellShape::straight));
  EXPECT_LT(area_deviation(cells, m), 1e-14);

  const TracePointSet tr = map_nodes(m, false, [](const SkeletonNode&, Point p) { return p + Point{0.37, -1.1}; });
  cells.clear();
  for (int j = 0; j < m.num_cells(); ++j) cells.push_back(build_upstream(m, j, tr, CellShape::straight));
  EXPECT_LT(area_deviation(cells, m), 1e-12);

  cells[4] = rectangle(0.0, 0.0, 1.02 * m.dx(), m.dy());
  EXPECT_NEAR(area_deviation(cells, m), 0.02, 1e-12);
}

}  // namespace
