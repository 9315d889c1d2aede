#pragma once

#include "fdmgdl/types.hpp"

namespace fdmgdl {

struct NnlsResult {
  Vector x;
  double residual_sq = 0.0;  // ||A x - b||^2
  int iterations = 0;
  bool converged = false;
};

/// Lawson-Hanson active-set solver for min ||A x - b|| subject to x >= 0.
NnlsResult nnls(const Matrix& A, const Vector& b, int max_iterations = -1, double tol = -1.0);

}  // namespace fdmgdl
