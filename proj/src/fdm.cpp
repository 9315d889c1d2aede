#include "fdmgdl/fdm.hpp"

#include <Eigen/Dense>
#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseLU>
#include <ostream>
#include <stdexcept>

#include "fdmgdl/metrics.hpp"

namespace fdmgdl {

FdSystem assemble(const ProblemSpec& spec, const Grid& grid) {
  return assemble_system(spec, grid, StencilOrder::Second);
}

void dump_system(const FdSystem& sys, std::ostream& os) {
  os.precision(17);
  for (int k = 0; k < sys.A.outerSize(); ++k)
    for (Eigen::SparseMatrix<Complex, Eigen::RowMajor>::InnerIterator it(sys.A, k); it; ++it)
      os << it.row() << ',' << it.col() << ',' << it.value().real() << ',' << it.value().imag() << '\n';
  for (long k = 0; k < sys.rhs.size(); ++k)
    os << "rhs," << k << ',' << sys.rhs[k].real() << ',' << sys.rhs[k].imag() << '\n';
}

FdmSolution solve_sparse(const FdSystem& sys) {
  const long n = sys.size();
  if (n == 0) throw std::invalid_argument("solve_sparse: empty system");
  FdmSolution out;
  using Sparse = Eigen::SparseMatrix<Complex>;
  const Sparse A(sys.A);
  if (n <= kDirectSolveLimit) {
    Eigen::SparseLU<Sparse> lu;
    lu.compute(A);
    if (lu.info() != Eigen::Success) throw std::runtime_error("solve_sparse: factorization failed");
    out.values = lu.solve(sys.rhs);
    out.solver = "direct";
    out.iterations = 1;
  } else {
    Eigen::BiCGSTAB<Sparse, Eigen::IdentityPreconditioner> it;
    it.setTolerance(1e-10);
    it.setMaxIterations(static_cast<Eigen::Index>(10 * n));
    it.compute(A);
    out.values = it.solve(sys.rhs);
    out.solver = "bicgstab";
    out.iterations = static_cast<int>(it.iterations());
  }
  const double bn = sys.rhs.norm();
  out.relative_residual = (sys.A * out.values - sys.rhs).norm() / (bn > 0.0 ? bn : 1.0);
  out.converged = out.values.allFinite() && out.relative_residual <= 1e-10;
  return out;
}

std::string to_string(InterpolationKind k) {
  return k == InterpolationKind::Multilinear ? "multilinear" : "tensor-quadratic";
}

double quadratic_basis(int k, double t) {
  switch (k) {
    case 0: return 2.0 * (t - 0.5) * (t - 1.0);
    case 1: return -4.0 * t * (t - 1.0);
    case 2: return 2.0 * t * (t - 0.5);
  }
  throw std::invalid_argument("quadratic_basis: index must be 0, 1 or 2");
}

Complex interpolate(const NodeField& closure, const Grid& grid, const Point& p, InterpolationKind kind) {
  if (closure.size() != static_cast<long>(grid.closure_count()))
    throw std::invalid_argument("interpolate: field does not cover the closure lattice");
  const int d = grid.dim();
  const GridSpec& gs = grid.spec();
  const double slack = 1e-12 * (gs.b - gs.a);
  for (int i = 0; i < d; ++i)
    if (p[i] < gs.a - slack || p[i] > gs.b + slack) throw std::invalid_argument("interpolate: point outside the domain");
  const CellLocation c = grid.locate_cell(p);

  if (kind == InterpolationKind::Multilinear) {
    Complex acc(0.0, 0.0);
    for (int corner = 0; corner < (1 << d); ++corner) {
      MultiIndex j{0, 0, 0};
      double w = 1.0;
      for (int i = 0; i < d; ++i) {
        const int a = (corner >> (d - 1 - i)) & 1;
        j[i] = c.cell_index[i] + a;
        w *= a ? c.local_coords[i] : 1.0 - c.local_coords[i];
      }
      if (w != 0.0) acc += w * closure[static_cast<long>(grid.closure_flat(j))];
    }
    return acc;
  }

  const int top = grid.closure_n() - 1;
  if (top < 2) throw std::invalid_argument("interpolate: lattice too small for quadratic patches");
  std::array<int, 3> start{0, 0, 0};
  std::array<std::array<double, 3>, 3> basis{};
  for (int i = 0; i < d; ++i) {
    int s = c.cell_index[i] - (c.cell_index[i] % 2);
    if (s + 2 > top) s = top - 2;
    start[i] = s;
    const double t = (c.cell_index[i] + c.local_coords[i] - s) / 2.0;
    for (int k = 0; k < 3; ++k) basis[i][k] = quadratic_basis(k, t);
  }
  int total = 1;
  for (int i = 0; i < d; ++i) total *= 3;
  Complex acc(0.0, 0.0);
  for (int q = 0; q < total; ++q) {
    MultiIndex j{0, 0, 0};
    double w = 1.0;
    int rest = q;
    for (int i = d - 1; i >= 0; --i) {
      const int k = rest % 3;
      rest /= 3;
      j[i] = start[i] + k;
      w *= basis[i][k];
    }
    if (w != 0.0) acc += w * closure[static_cast<long>(grid.closure_flat(j))];
  }
  return acc;
}

FdmReport fdm_reference_run(const ProblemSpec& spec, const Grid& grid, const std::vector<Point>& test_points) {
  if (!spec.exact) throw std::invalid_argument("fdm_reference_run: problem has no exact solution");
  FdmReport rep;
  const FdSystem sys = assemble(spec, grid);
  rep.solution = solve_sparse(sys);
  CVector exact_nodes(sys.size());
  for (long k = 0; k < sys.size(); ++k) exact_nodes[k] = (*spec.exact)(grid.interior_points()[static_cast<std::size_t>(k)]);
  rep.tr_rse = rse(rep.solution.values, exact_nodes);

  const NodeField closure = lift(rep.solution.values, spec, grid);
  const long nt = static_cast<long>(test_points.size());
  CVector exact_test(nt), lin(nt), quad(nt);
  for (long k = 0; k < nt; ++k) {
    const Point& p = test_points[static_cast<std::size_t>(k)];
    exact_test[k] = (*spec.exact)(p);
    lin[k] = interpolate(closure, grid, p, InterpolationKind::Multilinear);
    quad[k] = interpolate(closure, grid, p, InterpolationKind::TensorQuadratic);
  }
  if (nt > 0) {
    rep.te_rse_multilinear = rse(lin, exact_test);
    rep.te_rse_quadratic = rse(quad, exact_test);
  }
  return rep;
}

}  // namespace fdmgdl
