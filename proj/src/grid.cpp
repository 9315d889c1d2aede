#include "fdmgdl/grid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace fdmgdl {

void GridSpec::validate() const {
  if (!(b > a)) throw std::invalid_argument("grid: require b > a");
  if (m < 1) throw std::invalid_argument("grid: require m >= 1");
  if (d < 1 || d > 3) throw std::invalid_argument("grid: dimension must be 1, 2 or 3");
}

Grid::Grid(const GridSpec& spec) : spec_(spec) {
  spec_.validate();
  h_ = spec_.h();
  const int n = closure_n();
  closure_count_ = 1;
  for (int i = 0; i < spec_.d; ++i) closure_count_ *= static_cast<std::size_t>(n);

  std::size_t interior = 1;
  for (int i = 0; i < spec_.d; ++i) interior *= static_cast<std::size_t>(spec_.m);
  interior_count_ = interior;
  interior_points_.reserve(interior);
  for (std::size_t k = 0; k < interior; ++k) interior_points_.push_back(node(multi_index(k)));

  boundary_points_.reserve(closure_count_ - interior);
  for (std::size_t k = 0; k < closure_count_; ++k) {
    const MultiIndex j = closure_multi(k);
    if (on_boundary(j)) boundary_points_.push_back(node(j));
  }
}

std::size_t Grid::flat_index(const MultiIndex& j) const {
  std::size_t flat = 0;
  for (int i = 0; i < spec_.d; ++i) {
    if (j[i] < 1 || j[i] > spec_.m)
      throw std::out_of_range("flat_index: component " + std::to_string(i) + " = " +
                              std::to_string(j[i]) + " outside 1.." + std::to_string(spec_.m));
    flat = flat * spec_.m + static_cast<std::size_t>(j[i] - 1);
  }
  return flat;
}

MultiIndex Grid::multi_index(std::size_t flat) const {
  if (flat >= interior_count_)
    throw std::out_of_range("multi_index: flat index out of range");
  MultiIndex j{0, 0, 0};
  for (int i = spec_.d - 1; i >= 0; --i) {
    j[i] = static_cast<int>(flat % spec_.m) + 1;
    flat /= spec_.m;
  }
  return j;
}

std::size_t Grid::closure_flat(const MultiIndex& j) const {
  const int n = closure_n();
  std::size_t flat = 0;
  for (int i = 0; i < spec_.d; ++i) {
    if (j[i] < 0 || j[i] >= n) throw std::out_of_range("closure_flat: index off the lattice");
    flat = flat * n + static_cast<std::size_t>(j[i]);
  }
  return flat;
}

MultiIndex Grid::closure_multi(std::size_t flat) const {
  const int n = closure_n();
  MultiIndex j{0, 0, 0};
  for (int i = spec_.d - 1; i >= 0; --i) {
    j[i] = static_cast<int>(flat % n);
    flat /= n;
  }
  return j;
}

bool Grid::on_boundary(const MultiIndex& j) const {
  for (int i = 0; i < spec_.d; ++i)
    if (j[i] == 0 || j[i] == spec_.m + 1) return true;
  return false;
}

Point Grid::node(const MultiIndex& j) const {
  Point p{0.0, 0.0, 0.0};
  for (int i = 0; i < spec_.d; ++i) p[i] = coord(j[i]);
  return p;
}

long Grid::interior_of_closure(std::size_t cflat) const {
  const MultiIndex j = closure_multi(cflat);
  if (on_boundary(j)) return -1;
  return static_cast<long>(flat_index(j));
}

CellLocation Grid::locate_cell(const Point& p) const {
  const double tol = 1e-12 * (spec_.b - spec_.a);
  CellLocation loc;
  for (int i = 0; i < spec_.d; ++i) {
    if (p[i] < spec_.a - tol || p[i] > spec_.b + tol)
      throw std::out_of_range("locate_cell: point outside the closed domain");
    double s = (p[i] - spec_.a) / h_;
    if (std::abs(s - std::round(s)) < 1e-12 * (spec_.m + 1)) s = std::round(s);
    int j = static_cast<int>(std::floor(s));
    j = std::clamp(j, 0, spec_.m);
    loc.cell_index[i] = j;
    loc.local_coords[i] = std::clamp((p[i] - coord(j)) / h_, 0.0, 1.0);
  }
  return loc;
}

Grid build_grid(const GridSpec& spec) { return Grid(spec); }

std::vector<Point> test_lattice(double a, double b, int m_test, int d) {
  const Grid g(GridSpec{a, b, m_test, d});
  return g.interior_points();
}

}  // namespace fdmgdl
