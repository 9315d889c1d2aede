#pragma once

#include <optional>

#include "fdmgdl/types.hpp"

namespace fdmgdl {

/// Phase-1 simplex with Bland's rule: a point x >= 0 with A x = b, or nothing
/// when the system is infeasible.
std::optional<Vector> find_feasible_point(const Matrix& A, const Vector& b, double tol = 1e-10);

}  // namespace fdmgdl
