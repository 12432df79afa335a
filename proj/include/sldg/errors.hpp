#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace sldg {

/// Raised when a traced upstream cell is self-intersecting, inverted, or
/// otherwise unusable for the remap. Carries the linear id of the
/// Eulerian cell whose upstream image failed.
class DegenerateUpstreamCell : public std::runtime_error {
public:
  DegenerateUpstreamCell(int cell, const std::string& what)
      : std::runtime_error("degenerate upstream cell " + std::to_string(cell) + ": " + what),
        cell_(cell) {}
  int cell() const noexcept { return cell_; }

private:
  int cell_;
};

/// Raised when the grid-line clipping of an upstream cell cannot produce a
/// consistent set of sub-regions (winding outside {0,1}, negative sub-area).
class ClipFailure : public std::runtime_error {
public:
  ClipFailure(int cell, const std::string& what)
      : std::runtime_error("clip failure in cell " + std::to_string(cell) + ": " + what),
        cell_(cell) {}
  int cell() const noexcept { return cell_; }

private:
  int cell_;
};

class SolverError : public std::runtime_error {
public:
  SolverError(const std::string& what, std::vector<double> residuals)
      : std::runtime_error(what), residuals_(std::move(residuals)) {}
  const std::vector<double>& residual_history() const noexcept { return residuals_; }

private:
  std::vector<double> residuals_;
};

/// The adaptive controller shrank the CFL number below its floor.
class RunawayDistortion : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

}  // namespace sldg
