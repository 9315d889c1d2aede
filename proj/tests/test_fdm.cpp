#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "fdmgdl/fdm.hpp"
#include "fdmgdl/metrics.hpp"
#include "fdmgdl/presets.hpp"

using namespace fdmgdl;

namespace {

ProblemSpec laplace_1d(int m) {
  ProblemSpec s;
  s.grid = GridSpec{0.0, 1.0, m, 1};
  s.kappa = [](const Point&) { return 0.0; };
  s.source = [](const Point&) { return Complex(0.0, 0.0); };
  s.boundary = [](const Point& x) { return Complex(x[0], 0.0); };
  s.exact = [](const Point& x) { return Complex(x[0], 0.0); };
  return s;
}

NodeField sample(const Grid& g, const std::function<double(const Point&)>& u) {
  NodeField v(static_cast<long>(g.closure_count()));
  for (std::size_t k = 0; k < g.closure_count(); ++k) v[static_cast<long>(k)] = u(g.node(g.closure_multi(k)));
  return v;
}

}  // namespace

TEST_SUITE("fdm") {

TEST_CASE("1D Laplace with linear data") {
  const ProblemSpec spec = laplace_1d(3);
  const Grid grid(spec.grid);
  const FdmSolution sol = solve_sparse(assemble(spec, grid));
  REQUIRE(sol.converged);
  CHECK(sol.values[0].real() == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(sol.values[1].real() == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(sol.values[2].real() == doctest::Approx(0.75).epsilon(1e-14));
  CHECK(sol.solver == "direct");
}

TEST_CASE("diagonal entries") {
  for (int d = 1; d <= 3; ++d) {
    ProblemSpec spec = make_sine_problem(2, 7.0, 4);
    spec.grid.d = d;
    const Grid grid(spec.grid);
    const FdSystem sys = assemble(spec, grid);
    const double h = grid.h();
    for (long k = 0; k < sys.size(); ++k)
      CHECK(sys.A.coeff(k, k).real() == doctest::Approx(-2.0 * d / (h * h) + 49.0).epsilon(1e-14));
  }
}

TEST_CASE("constant solution") {
  const double c = 1.7, kappa = 3.0;
  ProblemSpec spec;
  spec.grid = GridSpec{0.0, 1.0, 6, 2};
  spec.kappa = [=](const Point&) { return kappa; };
  spec.source = [=](const Point&) { return Complex(kappa * kappa * c, 0.0); };
  spec.boundary = [=](const Point&) { return Complex(c, 0.0); };
  const Grid grid(spec.grid);
  const FdSystem sys = assemble(spec, grid);
  const InteriorField u = InteriorField::Constant(sys.size(), Complex(c, 0.0));
  CHECK((sys.A * u - sys.rhs).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("identity system returns the right-hand side") {
  FdSystem sys;
  sys.A.resize(5, 5);
  sys.A.setIdentity();
  sys.rhs.resize(5);
  for (long k = 0; k < 5; ++k) sys.rhs[k] = Complex(k + 1.0, -0.5 * k);
  const FdmSolution sol = solve_sparse(sys);
  CHECK((sol.values - sys.rhs).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("solver contract on direct and iterative paths") {
  const ProblemSpec small = make_sine_problem(2, 10.0, 30);
  const FdmSolution a = solve_sparse(assemble(small, Grid(small.grid)));
  CHECK(a.solver == "direct");
  CHECK(a.relative_residual <= 1e-10);
  CHECK(a.converged);

  const ProblemSpec large = make_sine_problem(2, 2.0, 66);  // 4356 unknowns
  const FdmSolution b = solve_sparse(assemble(large, Grid(large.grid)));
  CHECK(b.solver == "bicgstab");
  CHECK(b.converged == (b.relative_residual <= 1e-10));
  CHECK(b.converged);
}

TEST_CASE("system dump") {
  const ProblemSpec spec = laplace_1d(2);
  const Grid grid(spec.grid);
  std::ostringstream os;
  dump_system(assemble(spec, grid), os);
  const std::string s = os.str();
  CHECK(s.find("0,0,") == 0);
  CHECK(s.find("rhs,1,") != std::string::npos);
}

TEST_CASE("quadratic basis") {
  CHECK(quadratic_basis(0, 0.0) == 1.0);
  CHECK(quadratic_basis(1, 0.5) == 1.0);
  CHECK(quadratic_basis(2, 1.0) == 1.0);
  CHECK(quadratic_basis(0, 0.5) == 0.0);
  CHECK(quadratic_basis(2, 0.0) == 0.0);
  const double t = 0.3;
  CHECK(quadratic_basis(0, t) + quadratic_basis(1, t) + quadratic_basis(2, t) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK_THROWS_AS(quadratic_basis(3, t), std::invalid_argument);
}

TEST_CASE("interpolation reproduces nodes") {
  const Grid grid(GridSpec{0.0, 1.0, 5, 2});
  const NodeField v = sample(grid, [](const Point& x) { return std::sin(3.0 * x[0]) + x[1] * x[1]; });
  for (std::size_t q = 0; q < grid.closure_count(); ++q) {
    const Point p = grid.node(grid.closure_multi(q));
    for (auto kind : {InterpolationKind::Multilinear, InterpolationKind::TensorQuadratic})
      CHECK(std::abs(interpolate(v, grid, p, kind) - v[static_cast<long>(q)]) < 1e-14);
  }
}

TEST_CASE("bilinear at a cell centre is the corner mean") {
  const Grid grid(GridSpec{0.0, 1.0, 3, 2});
  NodeField v(static_cast<long>(grid.closure_count()));
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (long k = 0; k < v.size(); ++k) v[k] = Complex(u(rng), 0.0);
  const double h = grid.h();
  const Complex got = interpolate(v, grid, {1.5 * h, 2.5 * h, 0.0}, InterpolationKind::Multilinear);
  const Complex mean = 0.25 * (v[static_cast<long>(grid.closure_flat({1, 2, 0}))] +
                               v[static_cast<long>(grid.closure_flat({2, 2, 0}))] +
                               v[static_cast<long>(grid.closure_flat({1, 3, 0}))] +
                               v[static_cast<long>(grid.closure_flat({2, 3, 0}))]);
  CHECK(std::abs(got - mean) < 1e-15);
}

TEST_CASE("interpolation exactness classes") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  SUBCASE("multilinear in 2D") {
    const Grid grid(GridSpec{0.0, 1.0, 7, 2});
    auto f = [](const Point& x) { return 3.0 + 2.0 * x[0] - x[1] + 5.0 * x[0] * x[1]; };
    const NodeField v = sample(grid, f);
    double worst = 0.0;
    for (int t = 0; t < 100; ++t) {
      const Point p{u(rng), u(rng), 0.0};
      worst = std::max(worst, std::abs(interpolate(v, grid, p, InterpolationKind::Multilinear).real() - f(p)));
    }
    CHECK(worst <= 1e-12);
  }
  SUBCASE("multilinear in 3D") {
    const Grid grid(GridSpec{-1.0, 2.0, 4, 3});
    auto f = [](const Point& x) { return 1.0 + x[0] - 2.0 * x[2] + x[0] * x[1] * x[2] - 0.5 * x[1] * x[2]; };
    const NodeField v = sample(grid, f);
    double worst = 0.0;
    for (int t = 0; t < 100; ++t) {
      const Point p{-1.0 + 3.0 * u(rng), -1.0 + 3.0 * u(rng), -1.0 + 3.0 * u(rng)};
      worst = std::max(worst, std::abs(interpolate(v, grid, p, InterpolationKind::Multilinear).real() - f(p)));
    }
    CHECK(worst <= 1e-12);
  }
  SUBCASE("tensor quadratic") {
    for (int m : {1, 4, 7}) {
      const Grid grid(GridSpec{0.0, 1.0, m, 2});
      auto f = [](const Point& x) { return x[0] * x[0] * x[1] * x[1]; };
      const NodeField v = sample(grid, f);
      double worst = 0.0;
      for (int t = 0; t < 100; ++t) {
        const Point p{u(rng), u(rng), 0.0};
        worst = std::max(worst, std::abs(interpolate(v, grid, p, InterpolationKind::TensorQuadratic).real() - f(p)));
      }
      CHECK(worst <= 1e-10);
    }
  }
  SUBCASE("partition of unity") {
    const Grid grid(GridSpec{0.0, 1.0, 6, 3});
    const NodeField one = NodeField::Constant(static_cast<long>(grid.closure_count()), Complex(1.0, 0.0));
    for (int t = 0; t < 100; ++t) {
      const Point p{u(rng), u(rng), u(rng)};
      CHECK(interpolate(one, grid, p, InterpolationKind::Multilinear).real() == doctest::Approx(1.0).epsilon(1e-14));
      CHECK(interpolate(one, grid, p, InterpolationKind::TensorQuadratic).real() ==
            doctest::Approx(1.0).epsilon(1e-13));
    }
  }
}

TEST_CASE("interpolation rejects points outside the domain") {
  const Grid grid(GridSpec{0.0, 1.0, 3, 2});
  const NodeField v = NodeField::Zero(static_cast<long>(grid.closure_count()));
  CHECK_THROWS_AS(interpolate(v, grid, {1.2, 0.5, 0.0}, InterpolationKind::Multilinear), std::invalid_argument);
  CHECK_THROWS_AS(interpolate(NodeField::Zero(3), grid, {0.5, 0.5, 0.0}, InterpolationKind::Multilinear),
                  std::invalid_argument);
}

TEST_CASE("reference run") {
  SUBCASE("linear exact solution") {
    const ProblemSpec spec = laplace_1d(9);
    const Grid grid(spec.grid);
    const FdmReport rep = fdm_reference_run(spec, grid, test_lattice(0.0, 1.0, 7, 1));
    CHECK(rep.tr_rse < 1e-28);
    CHECK(rep.te_rse_multilinear < 1e-28);
    CHECK(rep.te_rse_quadratic < 1e-28);
  }
  SUBCASE("second-order convergence for the 2D sine") {
    const ProblemSpec a = make_sine_problem(2, 10.0, 20), b = make_sine_problem(2, 10.0, 41);
    const FdmReport ra = fdm_reference_run(a, Grid(a.grid), {});
    const FdmReport rb = fdm_reference_run(b, Grid(b.grid), {});
    // RSE is a squared error, so its square root carries the h^2 rate.
    const double ratio = std::sqrt(ra.tr_rse / rb.tr_rse);
    CHECK(ratio >= 3.2);
    CHECK(ratio <= 4.8);
  }
  SUBCASE("requires an exact solution") {
    ProblemSpec spec = laplace_1d(3);
    spec.exact.reset();
    CHECK_THROWS_AS(fdm_reference_run(spec, Grid(spec.grid), {}), std::invalid_argument);
  }
}

TEST_CASE("defect of the assembled system is second order") {
  auto defect = [](int m) {
    const ProblemSpec spec = make_plane_wave_problem(2, 8.0, 0.6, 0.0, m);
    const Grid grid(spec.grid);
    const FdSystem sys = assemble(spec, grid);
    InteriorField u(sys.size());
    for (long k = 0; k < u.size(); ++k) u[k] = (*spec.exact)(grid.interior_points()[static_cast<std::size_t>(k)]);
    return seminorm(InteriorField(sys.A * u - sys.rhs));
  };
  const double ratio = defect(20) / defect(41);
  CHECK(ratio >= 3.2);
  CHECK(ratio <= 4.8);
}

TEST_CASE("rse endpoints") {
  Vector y(3);
  y << 1.0, -2.0, 0.5;
  CHECK(rse(y, y) == 0.0);
  CHECK(rse(Vector::Zero(3), y) == 1.0);
  CHECK(rse(Vector(2.0 * y), y) == 1.0);
  CHECK_THROWS_AS(rse(y, Vector::Zero(3)), std::invalid_argument);
  CHECK_THROWS_AS(rse(Vector::Zero(2), y), std::invalid_argument);
}

}
