#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "fdmgdl/fdm.hpp"
#include "fdmgdl/pml.hpp"

using namespace fdmgdl;

namespace {

// Trapezoid rule for the cosine transform of the Ricker time signal on [-1, 1].
double ricker_quadrature(double f, double f0, long points = 1000000) {
  const double pi = std::numbers::pi;
  const double dt = 2.0 / static_cast<double>(points - 1);
  double sum = 0.0, comp = 0.0;
  for (long i = 0; i < points; ++i) {
    const double t = -1.0 + static_cast<double>(i) * dt;
    const double a = pi * f0 * t;
    double g = (1.0 - 2.0 * a * a) * std::exp(-a * a) * std::cos(2.0 * pi * f * t);
    if (i == 0 || i == points - 1) g *= 0.5;
    const double y = g - comp;
    const double s = sum + y;
    comp = (s - sum) - y;
    sum = s;
  }
  return sum * dt;
}

PmlConfig small_config() {
  PmlConfig cfg;
  cfg.thickness = 100.0;
  cfg.collar_nodes = 10;
  return cfg;
}

}  // namespace

TEST_SUITE("pml") {

TEST_CASE("damping profile") {
  const PmlConfig cfg;
  CHECK(sigma_profile(1000.0, cfg, 0.0, 2000.0) == 0.0);
  CHECK(sigma_profile(0.0, cfg, 0.0, 2000.0) == 0.0);
  const double edge = 2.0 * std::numbers::pi * 1.79 * 25.0;
  CHECK(sigma_profile(-200.0, cfg, 0.0, 2000.0) == doctest::Approx(edge).epsilon(1e-14));
  CHECK(sigma_profile(2200.0, cfg, 0.0, 2000.0) == doctest::Approx(281.18).epsilon(1e-4));
  CHECK(sigma_profile(-100.0, cfg, 0.0, 2000.0) == doctest::Approx(0.25 * edge).epsilon(1e-14));
}

TEST_CASE("stretching coefficients") {
  const double w = 2.0 * std::numbers::pi * 25.0;
  const Stretching off = stretching_coeffs(0.0, 0.0, w);
  CHECK(off.A == Complex(1.0, 0.0));
  CHECK(off.B == Complex(1.0, 0.0));
  CHECK(off.C == Complex(1.0, 0.0));

  const Stretching one = stretching_coeffs(w, 0.0, w);
  CHECK(std::abs(one.A - 1.0 / Complex(1.0, 1.0)) < 1e-15);
  CHECK(std::abs(one.B - Complex(1.0, 1.0)) < 1e-15);
  CHECK(std::abs(one.C - Complex(1.0, 1.0)) < 1e-15);

  const Stretching corner = stretching_coeffs(100.0, 100.0, w);
  const Complex e(1.0, 100.0 / w);
  CHECK(corner.A == Complex(1.0, 0.0));
  CHECK(corner.B == Complex(1.0, 0.0));
  CHECK(std::abs(corner.C - e * e) < 1e-15);
  CHECK_THROWS_AS(stretching_coeffs(1.0, 0.0, 0.0), std::invalid_argument);
}

TEST_CASE("Ricker spectrum") {
  const double f0 = 25.0;
  CHECK(ricker_spectrum(0.0, f0) == 0.0);
  const double at_f0 = ricker_spectrum(f0, f0);
  CHECK(std::abs(at_f0 - ricker_quadrature(f0, f0)) <= 1e-8 * std::abs(at_f0));
  for (int k : {1, 7, 13, 20}) {
    const double f = k * f0 / 5.0;
    CHECK(std::abs(ricker_spectrum(f, f0) - ricker_quadrature(f, f0)) <= 1e-8 * ricker_spectrum(f, f0));
  }
  const double peak = ricker_spectrum(f0, f0);  // the maximum sits at f = f0
  CHECK(ricker_spectrum(0.99 * f0, f0) < peak);
  CHECK(ricker_spectrum(1.01 * f0, f0) < peak);
  CHECK(ricker_spectrum(20.0 * f0, f0) < 1e-12 * peak);
  CHECK(std::abs(ricker_quadrature(20.0 * f0, f0)) < 1e-12 * peak);
  CHECK_THROWS_AS(ricker_spectrum(1.0, 0.0), std::invalid_argument);
}

TEST_CASE("velocity model") {
  const VelocityModel vel;
  CHECK(vel.top_interface(1000.0) == doctest::Approx(1000.0));
  CHECK(vel.top_interface(1400.0) == doctest::Approx(600.0));
  CHECK(vel.top_interface(100.0) == doctest::Approx(600.0));
  CHECK(vel.bottom_interface(1000.0) == doctest::Approx(1600.0));
  CHECK(vel.velocity(1000.0, 900.0) == 1500.0);
  CHECK(vel.velocity(1000.0, 1100.0) == 2000.0);
  CHECK(vel.velocity(1000.0, 1700.0) == 2500.0);
  CHECK(vel.velocity(100.0, 700.0) == 2000.0);
  CHECK(vel.velocity(-150.0, -150.0) == 1500.0);
  CHECK(vel.velocity(2150.0, 2150.0) == 2500.0);

  std::istringstream csv("x,y,v\n0,0,1500\n2000,0,1600\n0,2000,1700\n2000,2000,1800\n");
  const VelocityModel r = load_velocity_csv(csv);
  CHECK(r.lo == 0.0);
  CHECK(r.hi == 2000.0);
  CHECK(r.velocity(1900.0, 1800.0) == 1800.0);
  CHECK(r.velocity(100.0, 1200.0) == 1700.0);
  std::istringstream bad("x,y,v\n0,0,1500\n1,oops\n");
  CHECK_THROWS_AS(load_velocity_csv(bad), std::invalid_argument);

  VelocityModel neg;
  neg.velocities[1] = -1.0;
  CHECK_THROWS_AS(neg.validate(), std::invalid_argument);
}

TEST_CASE("padded lattice") {
  const GridSpec g = pml_grid(VelocityModel{}, PmlConfig{});
  CHECK(g.a == -200.0);
  CHECK(g.b == 2200.0);
  CHECK(g.m == 239);
  CHECK(g.h() == doctest::Approx(10.0).epsilon(1e-14));
  PmlConfig odd;
  odd.thickness = 300.0;
  odd.collar_nodes = 7;
  CHECK_THROWS_AS(pml_grid(VelocityModel{}, odd), std::invalid_argument);
}

TEST_CASE("PML off reduces to the real assembly") {
  const VelocityModel vel = VelocityModel::homogeneous(1800.0, 0.0, 400.0);
  PmlConfig cfg = small_config();
  cfg.enabled = false;
  const Grid grid(pml_grid(vel, cfg));
  const FdSystem pml = assemble_pml_system(vel, cfg, grid, SourceSpec{0.0, 0.0, false});

  ProblemSpec spec;
  spec.grid = grid.spec();
  const double kappa = cfg.omega() / 1800.0;
  spec.kappa = [=](const Point&) { return kappa; };
  spec.source = [](const Point&) { return Complex(0.0, 0.0); };
  spec.boundary = [](const Point&) { return Complex(0.0, 0.0); };
  const FdSystem ref = assemble(spec, grid);

  const Eigen::MatrixXcd diff = Eigen::MatrixXcd(pml.A) - Eigen::MatrixXcd(ref.A);
  CHECK(diff.cwiseAbs().maxCoeff() <= 1e-14);
  CHECK(pml.rhs.cwiseAbs().maxCoeff() == 0.0);
  CHECK(pml.channels == 2);
}

TEST_CASE("coefficients are exactly one outside the collar") {
  const VelocityModel vel = VelocityModel::homogeneous(2000.0, 0.0, 400.0);
  const PmlConfig cfg = small_config();
  const Grid grid(pml_grid(vel, cfg));
  const FdSystem sys = assemble_pml_system(vel, cfg, grid, SourceSpec{200.0, 200.0, false});
  const double h = grid.h(), k2 = std::pow(cfg.omega() / 2000.0, 2);
  // Nodes whose stencil stays in the physical square see the plain operator.
  for (long k = 0; k < sys.size(); ++k) {
    const Point p = grid.interior_points()[static_cast<std::size_t>(k)];
    if (p[0] < h || p[0] > 400.0 - h || p[1] < h || p[1] > 400.0 - h) continue;
    CHECK(sys.A.coeff(k, k) == Complex(k2 - 4.0 / (h * h), 0.0));
  }
}

TEST_CASE("discrete point source") {
  const VelocityModel vel = VelocityModel::homogeneous(2000.0, 0.0, 400.0);
  const PmlConfig cfg = small_config();
  const Grid grid(pml_grid(vel, cfg));
  const FdSystem sys = assemble_pml_system(vel, cfg, grid, SourceSpec{203.0, 148.0, true});
  const long src = static_cast<long>(grid.flat_index({30, 25, 0}));
  const double h = grid.h();
  CHECK(sys.rhs[src] == Complex(-ricker_spectrum(25.0, 25.0) / (h * h), 0.0));
  CHECK(sys.rhs.cwiseAbs().sum() == doctest::Approx(std::abs(sys.rhs[src])).epsilon(1e-15));
  CHECK_THROWS_AS(assemble_pml_system(vel, cfg, grid, SourceSpec{500.0, 100.0, true}), std::invalid_argument);
}

TEST_CASE("default benchmark solve and collar absorption") {
  const VelocityModel homo = VelocityModel::homogeneous(2000.0);
  const PmlConfig cfg;
  const Grid grid(pml_grid(homo, cfg));
  const FdSystem sys = assemble_pml_system(homo, cfg, grid, SourceSpec{});
  const NodeField u = solve_pml(sys, grid);
  CHECK(u.allFinite());
  InteriorField ui(sys.size());
  for (long k = 0; k < sys.size(); ++k)
    ui[k] = u[static_cast<long>(grid.closure_flat(grid.multi_index(static_cast<std::size_t>(k))))];
  CHECK((sys.A * ui - sys.rhs).norm() / sys.rhs.norm() <= 1e-8);

  // Rows of constant depth into the top and bottom collars, columns into the sides.
  const int entry_lo = 20, entry_hi = 220, deep = 15;  // 0.75 of the 20-node collar
  auto row_max = [&](int axis, int idx) {
    double best = 0.0;
    for (int i = 0; i < grid.closure_n(); ++i) {
      MultiIndex j{0, 0, 0};
      j[axis] = idx;
      j[1 - axis] = i;
      best = std::max(best, std::abs(u[static_cast<long>(grid.closure_flat(j))]));
    }
    return best;
  };
  for (int axis = 0; axis < 2; ++axis) {
    CAPTURE(axis);
    CHECK(row_max(axis, entry_lo) >= 10.0 * row_max(axis, entry_lo - deep));
    CHECK(row_max(axis, entry_hi) >= 10.0 * row_max(axis, entry_hi + deep));
  }
}

TEST_CASE("training on the complex field") {
  SUBCASE("zero model is exact without a source") {
    const VelocityModel vel = VelocityModel::homogeneous(2000.0, 0.0, 200.0);
    PmlConfig cfg;
    cfg.thickness = 50.0;
    cfg.collar_nodes = 5;
    cfg.enabled = false;
    const Grid grid(pml_grid(vel, cfg));
    const FdSystem sys = assemble_pml_system(vel, cfg, grid, SourceSpec{100.0, 100.0, false});
    const FdObjective obj(sys);
    CHECK(obj.loss(Matrix::Zero(2, sys.size()), sys.rhs) == 0.0);
  }
  SUBCASE("grades reduce the residual") {
    const VelocityModel vel;
    PmlConfig cfg;
    cfg.thickness = 400.0;
    cfg.collar_nodes = 4;
    const Grid grid(pml_grid(vel, cfg));
    AdaptiveConfig ad;
    ad.width = 16;
    ad.structure = {2, 1};
    ad.schedules = {{1e-2, 1e-3, 30}};
    ad.first_layer_scale = 4.0;
    int observed = 0;
    const PmlRun run = pml_mgdl_train(vel, cfg, grid, SourceSpec{}, ad,
                                      [&](const MgdlModel&, const GradeRecord&) { ++observed; });
    REQUIRE_FALSE(run.run.aborted);
    CHECK(observed == 2);
    CHECK(run.run.model.channels() == 2);
    const double zero_loss = run.system.rhs.squaredNorm() / static_cast<double>(run.system.size());
    CHECK(run.run.grade_losses.back() < zero_loss);

    const NodeField full = model_field(run.run.model, grid);
    const NodeField first = model_field(run.run.model, grid, 1);
    const NodeField none = model_field(run.run.model, grid, 0);
    CHECK(none.cwiseAbs().maxCoeff() == 0.0);
    CHECK(full[0] == Complex(0.0, 0.0));
    CHECK((full - first).cwiseAbs().maxCoeff() > 0.0);
  }
}

}
