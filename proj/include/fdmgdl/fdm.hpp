#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "fdmgdl/helmholtz_fd.hpp"

namespace fdmgdl {

// Second-order system; boundary neighbours are moved to the right-hand side.
FdSystem assemble(const ProblemSpec& spec, const Grid& grid);

// Triplets "row,col,re,im" followed by "rhs,k,re,im" lines.
void dump_system(const FdSystem& sys, std::ostream& os);

inline constexpr long kDirectSolveLimit = 4096;

struct FdmSolution {
  InteriorField values;
  double relative_residual = 0.0;  // ||A u - rhs|| / ||rhs||
  int iterations = 0;
  bool converged = false;
  std::string solver;  // "direct" or "bicgstab"
};

FdmSolution solve_sparse(const FdSystem& sys);

enum class InterpolationKind { Multilinear, TensorQuadratic };

std::string to_string(InterpolationKind k);

// Lagrange basis on the reference nodes {0, 1/2, 1}.
double quadratic_basis(int k, double xi);

// Interpolates a closure-node field at p in the closed domain.
Complex interpolate(const NodeField& closure, const Grid& grid, const Point& p, InterpolationKind kind);

struct FdmReport {
  FdmSolution solution;
  double tr_rse = 0.0;
  double te_rse_multilinear = 0.0;
  double te_rse_quadratic = 0.0;
};

FdmReport fdm_reference_run(const ProblemSpec& spec, const Grid& grid, const std::vector<Point>& test_points);

}  // namespace fdmgdl
