#include "fdmgdl/simplex.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace fdmgdl {

std::optional<Vector> find_feasible_point(const Matrix& A, const Vector& b, double tol) {
  const long rows = A.rows(), cols = A.cols();
  if (b.size() != rows) throw std::invalid_argument("find_feasible_point: size mismatch");

  // Tableau [A | I | b] with one artificial per row; the last row holds the
  // reduced costs of the artificial sum.
  const long width = cols + rows + 1;
  Matrix T = Matrix::Zero(rows + 1, width);
  for (long i = 0; i < rows; ++i) {
    const double s = b(i) < 0.0 ? -1.0 : 1.0;
    T.row(i).head(cols) = s * A.row(i);
    T(i, cols + i) = 1.0;
    T(i, width - 1) = s * b(i);
  }
  for (long i = 0; i < rows; ++i) T.row(rows) -= T.row(i);
  for (long i = 0; i < rows; ++i) T(rows, cols + i) = 0.0;

  std::vector<long> basis(static_cast<std::size_t>(rows));
  for (long i = 0; i < rows; ++i) basis[static_cast<std::size_t>(i)] = cols + i;

  const double scale = std::max(1.0, T.cwiseAbs().maxCoeff());
  const double eps = tol * scale;
  const long max_pivots = 50 * (rows + cols) + 100;
  for (long it = 0; it < max_pivots; ++it) {
    long enter = -1;
    for (long j = 0; j < cols + rows; ++j)
      if (T(rows, j) < -eps) {
        enter = j;
        break;
      }
    if (enter < 0) break;
    long leave = -1;
    double best = std::numeric_limits<double>::infinity();
    for (long i = 0; i < rows; ++i) {
      if (T(i, enter) <= eps) continue;
      const double ratio = T(i, width - 1) / T(i, enter);
      if (ratio < best - eps ||
          (std::abs(ratio - best) <= eps && basis[static_cast<std::size_t>(i)] <
                                                basis[static_cast<std::size_t>(leave)])) {
        best = ratio;
        leave = i;
      }
    }
    if (leave < 0) break;  // unbounded direction cannot occur in phase 1
    T.row(leave) /= T(leave, enter);
    for (long i = 0; i <= rows; ++i)
      if (i != leave && T(i, enter) != 0.0) T.row(i) -= T(i, enter) * T.row(leave);
    basis[static_cast<std::size_t>(leave)] = enter;
  }

  if (-T(rows, width - 1) > eps * std::max<long>(1, rows)) return std::nullopt;
  Vector x = Vector::Zero(cols);
  for (long i = 0; i < rows; ++i) {
    const long j = basis[static_cast<std::size_t>(i)];
    if (j < cols) x(j) = std::max(0.0, T(i, width - 1));
  }
  return x;
}

}  // namespace fdmgdl
