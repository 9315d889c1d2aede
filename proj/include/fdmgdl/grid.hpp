#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "fdmgdl/types.hpp"

namespace fdmgdl {

using MultiIndex = std::array<int, 3>;

struct GridSpec {
  double a = 0.0;
  double b = 1.0;
  int m = 1;
  int d = 2;

  double h() const { return (b - a) / (m + 1); }
  void validate() const;
};

struct CellLocation {
  MultiIndex cell_index{0, 0, 0};  // closure-lattice index of the lower corner
  std::array<double, 3> local_coords{0.0, 0.0, 0.0};
};

/// Tensor-product lattice over (a,b)^d with m interior nodes per axis.
///
/// Interior multi-indices run over 1..m, closure indices over 0..m+1. Both
/// orderings are row-major with the last axis fastest.
class Grid {
 public:
  explicit Grid(const GridSpec& spec);

  const GridSpec& spec() const { return spec_; }
  int dim() const { return spec_.d; }
  int m() const { return spec_.m; }
  double h() const { return h_; }

  std::size_t interior_count() const { return interior_count_; }
  const std::vector<Point>& interior_points() const { return interior_points_; }
  const std::vector<Point>& boundary_points() const { return boundary_points_; }

  std::size_t flat_index(const MultiIndex& j) const;
  MultiIndex multi_index(std::size_t flat) const;

  // Closure lattice: (m+2)^d nodes including the boundary.
  int closure_n() const { return spec_.m + 2; }
  std::size_t closure_count() const { return closure_count_; }
  std::size_t closure_flat(const MultiIndex& j) const;
  MultiIndex closure_multi(std::size_t flat) const;
  bool on_boundary(const MultiIndex& j) const;
  Point node(const MultiIndex& j) const;
  double coord(int j) const { return spec_.a + j * h_; }

  // Interior flat index of a closure node, or -1 on the boundary.
  long interior_of_closure(std::size_t closure_flat) const;

  CellLocation locate_cell(const Point& p) const;

 private:
  GridSpec spec_;
  double h_;
  std::size_t closure_count_;
  std::size_t interior_count_;
  std::vector<Point> interior_points_;
  std::vector<Point> boundary_points_;
};

Grid build_grid(const GridSpec& spec);

// Interior points of the test lattice used for TeRSE, m_test^d nodes.
std::vector<Point> test_lattice(double a, double b, int m_test, int d);

}  // namespace fdmgdl
