#pragma once

// Uniform periodic Cartesian mesh.
//
// Geometry is done in "unwrapped" coordinates: a point may lie outside the
// domain, in which case it belongs to a periodic image of a mesh cell. Grid
// line positions are always computed as x_min + i*dx (for any integer i) so
// that every routine agrees on where a line is, and the owner of a point is
// decided by the floor convention: a point on a grid line belongs to the
// cell on its right (resp. above).

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace sldg {

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
  friend Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
  friend Point operator*(double s, Point a) { return {s * a.x, s * a.y}; }
  friend bool operator==(const Point&, const Point&) = default;
};

struct Domain {
  double x_min = 0.0;
  double x_max = 1.0;
  double y_min = 0.0;
  double y_max = 1.0;

  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
  double area() const { return width() * height(); }
};

struct CellId {
  int ix = 0;
  int iy = 0;
  friend bool operator==(const CellId&, const CellId&) = default;
};

/// Cell index that may refer to a periodic image (any integer pair).
struct UnwrappedCell {
  long ix = 0;
  long iy = 0;
  friend bool operator==(const UnwrappedCell&, const UnwrappedCell&) = default;
};

class Mesh {
public:
  Mesh(Domain domain, int nx, int ny) : domain_(domain), nx_(nx), ny_(ny) {
    if (nx < 2 || ny < 2)
      throw std::invalid_argument("mesh needs at least 2 cells per direction, got " +
                                  std::to_string(nx) + "x" + std::to_string(ny));
    if (!(domain.x_max > domain.x_min) || !(domain.y_max > domain.y_min))
      throw std::invalid_argument("empty domain");
    dx_ = domain.width() / nx;
    dy_ = domain.height() / ny;
  }

  const Domain& domain() const { return domain_; }
  int nx() const { return nx_; }
  int ny() const { return ny_; }
  int num_cells() const { return nx_ * ny_; }
  double dx() const { return dx_; }
  double dy() const { return dy_; }
  double cell_area() const { return dx_ * dy_; }

  int index(CellId c) const { return c.iy * nx_ + c.ix; }
  CellId cell(int j) const { return {j % nx_, j / nx_}; }

  /// Position of the i-th vertical grid line (any integer i).
  double grid_x(long i) const { return domain_.x_min + static_cast<double>(i) * dx_; }
  double grid_y(long j) const { return domain_.y_min + static_cast<double>(j) * dy_; }

  Point cell_center(CellId c) const {
    return {grid_x(c.ix) + 0.5 * dx_, grid_y(c.iy) + 0.5 * dy_};
  }
  Point cell_center(UnwrappedCell c) const {
    return {grid_x(c.ix) + 0.5 * dx_, grid_y(c.iy) + 0.5 * dy_};
  }
  Point vertex(long ix, long iy) const { return {grid_x(ix), grid_y(iy)}; }

  /// Floor index of x among the vertical grid lines, consistent with grid_x:
  /// grid_x(i) <= x < grid_x(i+1).
  long column_of(double x) const { return floor_index(x, domain_.x_min, dx_, [&](long i) { return grid_x(i); }); }
  long row_of(double y) const { return floor_index(y, domain_.y_min, dy_, [&](long j) { return grid_y(j); }); }

  UnwrappedCell unwrapped_cell(Point p) const { return {column_of(p.x), row_of(p.y)}; }

  CellId wrap(UnwrappedCell c) const {
    return {static_cast<int>(pmod(c.ix, nx_)), static_cast<int>(pmod(c.iy, ny_))};
  }
  CellId wrap_cell(long ix, long iy) const { return wrap(UnwrappedCell{ix, iy}); }

  Point wrap_point(Point p) const {
    const long sx = floor_div(column_of(p.x), nx_);
    const long sy = floor_div(row_of(p.y), ny_);
    Point q{p.x - static_cast<double>(sx) * domain_.width(), p.y - static_cast<double>(sy) * domain_.height()};
    // Guard the half-open range against rounding of the shift.
    if (q.x >= domain_.x_max) q.x = domain_.x_min;
    if (q.x < domain_.x_min) q.x = domain_.x_min;
    if (q.y >= domain_.y_max) q.y = domain_.y_min;
    if (q.y < domain_.y_min) q.y = domain_.y_min;
    return q;
  }

  CellId locate_cell(Point p) const { return wrap(unwrapped_cell(p)); }

  /// Map p into the local coordinates of a (possibly unwrapped) cell:
  /// the cell becomes [-1/2, 1/2]^2.
  Point to_local(UnwrappedCell c, Point p) const {
    const Point ctr = cell_center(c);
    return {(p.x - ctr.x) / dx_, (p.y - ctr.y) / dy_};
  }

private:
  static long pmod(long a, long n) {
    long r = a % n;
    return r < 0 ? r + n : r;
  }
  static long floor_div(long a, long n) { return (a - pmod(a, n)) / n; }

  template <class Line>
  static long floor_index(double v, double origin, double h, Line line) {
    long i = static_cast<long>(std::floor((v - origin) / h));
    while (v < line(i)) --i;
    while (v >= line(i + 1)) ++i;
    return i;
  }

  Domain domain_;
  int nx_;
  int ny_;
  double dx_ = 0.0;
  double dy_ = 0.0;
};

inline Mesh build_mesh(Domain domain, int nx, int ny) { return Mesh(domain, nx, ny); }

}  // namespace sldg
