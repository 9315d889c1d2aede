#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Dense>

#include "fdmgdl/helmholtz_fd.hpp"
#include "fdmgdl/presets.hpp"
#include "test_support.hpp"

using namespace fdmgdl;

namespace {

ProblemSpec constant_problem(int d, int m, double kappa, Complex f, Complex g) {
  ProblemSpec s;
  s.grid = GridSpec{0.0, 1.0, m, d};
  s.kappa = [kappa](const Point&) { return kappa; };
  s.source = [f](const Point&) { return f; };
  s.boundary = [g](const Point&) { return g; };
  return s;
}

NodeField sample(const Grid& g, const std::function<Complex(const Point&)>& u) {
  NodeField v(static_cast<long>(g.closure_count()));
  for (std::size_t k = 0; k < g.closure_count(); ++k) v[static_cast<long>(k)] = u(g.node(g.closure_multi(k)));
  return v;
}

ModelEval net_model(const Mlp& net, const GridSpec& gs) {
  return [&net, gs](const Point& x) {
    Vector in(gs.d);
    for (int i = 0; i < gs.d; ++i) in(i) = (x[i] - gs.a) / (gs.b - gs.a);
    const Vector y = net.forward_point(in);
    return y.size() == 2 ? Complex(y(0), y(1)) : Complex(y(0), 0.0);
  };
}

void randomize(Mlp& net, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-scale, scale);
  for (double& p : net.params()) p = u(rng);
}

}  // namespace

TEST_SUITE("helmholtz_fd") {

TEST_CASE("boundary lift") {
  const ProblemSpec spec = constant_problem(2, 3, 1.0, 0.0, 0.0);
  const Grid grid(spec.grid);
  const ModelEval model = [](const Point&) { return Complex(5.0, 0.0); };
  CHECK(lifted_eval(model, spec, grid, {0.0, 0.5, 0.0}) == Complex(0.0, 0.0));
  CHECK(lifted_eval([](const Point&) { return Complex(0.0, 0.0); }, spec, grid, {0.5, 0.5, 0.0}) ==
        Complex(0.0, 0.0));
  ProblemSpec g7 = constant_problem(2, 3, 1.0, 0.0, 7.0);
  CHECK(lifted_eval(model, g7, grid, {1.0, 1.0, 0.0}) == Complex(7.0, 0.0));
  CHECK(lifted_eval(model, g7, grid, {0.25, 0.75, 0.0}) == Complex(5.0, 0.0));
  CHECK_THROWS_AS(lifted_eval(model, g7, grid, {0.3, 0.5, 0.0}), std::invalid_argument);
}

TEST_CASE("constants are annihilated by the differences") {
  for (StencilOrder order : {StencilOrder::Second, StencilOrder::Fourth})
    for (int d = 1; d <= 3; ++d) {
      const ProblemSpec spec = constant_problem(d, 5, 3.0, 0.0, 0.0);
      const Grid grid(spec.grid);
      const NodeField v = NodeField::Constant(static_cast<long>(grid.closure_count()), Complex(2.5, 0.0));
      const InteriorField Av = apply_discrete_operator(v, spec, grid, order);
      CHECK((Av.array() - Complex(9.0 * 2.5, 0.0)).abs().maxCoeff() < 1e-9);
    }
}

TEST_CASE("1D sine is an eigenvector of the three-point operator") {
  const double kappa = 4.0;
  const ProblemSpec spec = constant_problem(1, 9, kappa, 0.0, 0.0);
  const Grid grid(spec.grid);
  const double h = grid.h();
  const NodeField v = sample(grid, [](const Point& x) { return Complex(std::sin(std::numbers::pi * x[0]), 0.0); });
  const InteriorField Av = apply_discrete_operator(v, spec, grid, StencilOrder::Second);
  const double lam = kappa * kappa - 4.0 * std::pow(std::sin(std::numbers::pi * h / 2.0), 2) / (h * h);
  for (std::size_t k = 0; k < grid.interior_count(); ++k)
    CHECK(Av[static_cast<long>(k)].real() ==
          doctest::Approx(lam * std::sin(std::numbers::pi * grid.interior_points()[k][0])).epsilon(1e-12));
}

TEST_CASE("five-point stencil is exact on quartics away from the boundary") {
  const ProblemSpec spec = constant_problem(1, 15, 0.0, 0.0, 0.0);
  const Grid grid(spec.grid);
  const NodeField v = sample(grid, [](const Point& x) { return Complex(std::pow(x[0], 4), 0.0); });
  const InteriorField Av = apply_discrete_operator(v, spec, grid, StencilOrder::Fourth);
  for (int j = 2; j <= grid.m() - 1; ++j) {
    const double x = grid.coord(j);
    CHECK(Av[j - 1].real() == doctest::Approx(12.0 * x * x).epsilon(1e-9));
  }
  // Nodes next to the boundary use the three-point fallback.
  const double x1 = grid.coord(1), h = grid.h();
  CHECK(Av[0].real() == doctest::Approx(12.0 * x1 * x1 + 2.0 * h * h).epsilon(1e-9));
}

TEST_CASE("five-point defect shrinks sixteenfold when h halves") {
  auto defect = [](int m) {
    const ProblemSpec spec = constant_problem(1, m, 0.0, 0.0, 0.0);
    const Grid grid(spec.grid);
    const NodeField v = sample(grid, [](const Point& x) { return Complex(std::sin(3.0 * x[0] + 0.4), 0.0); });
    const InteriorField Av = apply_discrete_operator(v, spec, grid, StencilOrder::Fourth);
    double s = 0.0;
    int count = 0;
    for (int j = 2; j <= m - 1; ++j) {
      const double x = grid.coord(j);
      const double e = Av[j - 1].real() + 9.0 * std::sin(3.0 * x + 0.4);
      s += e * e;
      ++count;
    }
    return std::sqrt(s / count);
  };
  const double ratio = defect(19) / defect(39);
  CHECK(ratio > 14.0);
  CHECK(ratio < 18.0);
}

TEST_CASE("fourth order needs m >= 3") {
  const ProblemSpec spec = constant_problem(1, 2, 1.0, 0.0, 0.0);
  const Grid grid(spec.grid);
  CHECK_THROWS_AS(apply_discrete_operator(NodeField::Zero(4), spec, grid, StencilOrder::Fourth),
                  std::invalid_argument);
  CHECK_THROWS_AS(assemble_system(spec, grid, StencilOrder::Fourth), std::invalid_argument);
}

TEST_CASE("operator is linear") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (StencilOrder order : {StencilOrder::Second, StencilOrder::Fourth}) {
    ProblemSpec spec = constant_problem(2, 6, 0.0, 0.0, 0.0);
    spec.kappa = [](const Point& x) { return 3.0 + x[0] * x[1]; };
    const Grid grid(spec.grid);
    const long n = static_cast<long>(grid.closure_count());
    NodeField a(n), b(n);
    for (long i = 0; i < n; ++i) {
      a[i] = Complex(u(rng), u(rng));
      b[i] = Complex(u(rng), u(rng));
    }
    const Complex al(0.7, -0.2), be(-1.3, 0.5);
    const InteriorField lhs = apply_discrete_operator(al * a + be * b, spec, grid, order);
    const InteriorField rhs = al * apply_discrete_operator(a, spec, grid, order) +
                              be * apply_discrete_operator(b, spec, grid, order);
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-12 * rhs.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("assembled system matches the matrix-free operator") {
  for (StencilOrder order : {StencilOrder::Second, StencilOrder::Fourth})
    for (int d = 1; d <= 3; ++d) {
      ProblemSpec spec = make_plane_wave_problem(d == 1 ? 2 : d, 7.0, 0.3, 0.2, 5);
      spec.grid.d = d;
      spec.kappa = [](const Point& x) { return 2.0 + x[0]; };
      spec.source = [](const Point& x) { return Complex(x[0], -x[0]); };
      const Grid grid(spec.grid);
      const FdSystem sys = assemble_system(spec, grid, order);
      InteriorField y(static_cast<long>(grid.interior_count()));
      for (long k = 0; k < y.size(); ++k) y[k] = Complex(std::cos(0.3 * k), std::sin(0.7 * k));
      const InteriorField direct = apply_discrete_operator(lift(y, spec, grid), spec, grid, order);
      InteriorField f(y.size());
      for (long k = 0; k < y.size(); ++k) f[k] = spec.source(grid.interior_points()[static_cast<std::size_t>(k)]);
      const InteriorField r_direct = f - direct;
      const InteriorField r_sys = sys.rhs - sys.A * y;
      CHECK((r_direct - r_sys).cwiseAbs().maxCoeff() < 1e-9 * r_direct.cwiseAbs().maxCoeff());
    }
}

TEST_CASE("residual examples") {
  SUBCASE("exact discrete solution") {
    const ProblemSpec spec = make_sine_problem(2, 5.0, 6);
    const Grid grid(spec.grid);
    const FdSystem sys = assemble_system(spec, grid, StencilOrder::Second);
    const Eigen::MatrixXcd dense(sys.A);
    const InteriorField sol = dense.partialPivLu().solve(sys.rhs);
    const ModelEval model = [&](const Point& x) {
      const auto c = grid.locate_cell(x);
      return sol[static_cast<long>(grid.flat_index(c.cell_index))];
    };
    CHECK(residual(model, spec, grid, StencilOrder::Second).cwiseAbs().maxCoeff() < 1e-10);
  }
  SUBCASE("zero everything") {
    const ProblemSpec spec = constant_problem(2, 4, 3.0, 0.0, 0.0);
    const Grid grid(spec.grid);
    CHECK(residual([](const Point&) { return Complex(0.0, 0.0); }, spec, grid, StencilOrder::Second)
              .cwiseAbs()
              .maxCoeff() == 0.0);
  }
  SUBCASE("zero model sees only the boundary terms") {
    const ProblemSpec spec = make_sine_problem(2, 10.0, 9);
    const Grid grid(spec.grid);
    const InteriorField r =
        residual([](const Point&) { return Complex(0.0, 0.0); }, spec, grid, StencilOrder::Second);
    const double h = grid.h();
    const double w = 10.0 / std::sqrt(2.0);
    auto u = [&](int i, int j) { return std::sin(w * i * h) * std::sin(w * j * h); };
    for (int i = 1; i <= 9; ++i)
      for (int j = 1; j <= 9; ++j) {
        double expect = 0.0;
        if (i == 1) expect -= u(0, j) / (h * h);
        if (i == 9) expect -= u(10, j) / (h * h);
        if (j == 1) expect -= u(i, 0) / (h * h);
        if (j == 9) expect -= u(i, 10) / (h * h);
        const long k = static_cast<long>(grid.flat_index({i, j, 0}));
        CHECK(r[k].real() == doctest::Approx(expect).epsilon(1e-12).scale(1.0));
      }
  }
}

TEST_CASE("loss and seminorm") {
  const ProblemSpec spec = constant_problem(2, 3, 1.0, 2.0, 0.0);
  const Grid grid(spec.grid);
  const ModelEval zero = [](const Point&) { return Complex(0.0, 0.0); };
  CHECK(loss(zero, spec, grid, StencilOrder::Second) == doctest::Approx(4.0));
  const ProblemSpec z = constant_problem(2, 3, 1.0, 0.0, 0.0);
  CHECK(loss(zero, z, grid, StencilOrder::Second) == 0.0);

  CHECK(seminorm(Vector(Vector::Ones(5))) == 1.0);
  CHECK(seminorm(Vector(Vector::Zero(5))) == 0.0);
  Vector v(2);
  v << 3.0, 4.0;
  CHECK(seminorm(v) == doctest::Approx(std::sqrt(12.5)));
  CHECK_THROWS_AS(seminorm(Vector()), std::invalid_argument);

  Mlp net = xavier_init({2, 6, 1}, {ActivationKind::Sine}, 4);
  const ProblemSpec s = make_sine_problem(2, 6.0, 5);
  const Grid g(s.grid);
  const ModelEval model = net_model(net, s.grid);
  const double L = loss(model, s, g, StencilOrder::Second);
  const double sn = seminorm(residual(model, s, g, StencilOrder::Second));
  CHECK(std::abs(L - sn * sn) <= 1e-15 * L);
}

TEST_CASE("second-order consistency of the discrete operator") {
  auto defect = [](int m) {
    const ProblemSpec spec = make_sine_problem(2, 10.0, m);
    const Grid grid(spec.grid);
    const NodeField u = sample(grid, *spec.exact);
    const InteriorField Au = apply_discrete_operator(u, spec, grid, StencilOrder::Second);
    return seminorm(InteriorField(Au));
  };
  const double ratio = defect(20) / defect(41);
  CHECK(ratio >= 3.2);
  CHECK(ratio <= 4.8);
}

TEST_CASE("loss gradient examples") {
  SUBCASE("zero residual gives a zero gradient") {
    const ProblemSpec spec = constant_problem(2, 4, 2.0, 0.0, 0.0);
    const Grid grid(spec.grid);
    const Mlp net({2, 5, 1}, {ActivationKind::Sine});
    for (double v : loss_gradient(net, spec, grid, StencilOrder::Second)) CHECK(v == 0.0);
  }
  SUBCASE("single interior node") {
    const double kappa = 1.7;
    ProblemSpec spec = constant_problem(1, 1, kappa, 0.3, 0.0);
    spec.boundary = [](const Point& x) { return Complex(x[0] < 0.5 ? 0.2 : -0.4, 0.0); };
    const Grid grid(spec.grid);
    Mlp net = xavier_init({1, 3, 1}, {ActivationKind::Sine}, 9);
    randomize(net, 10);
    const auto grad = loss_gradient(net, spec, grid, StencilOrder::Second);
    const double h = grid.h();
    Matrix x(1, 1);
    x(0, 0) = 0.5;
    ForwardCache cache;
    const double y = net.forward(x, &cache)(0, 0);
    std::vector<double> dy(net.param_count(), 0.0);
    net.backward(cache, Matrix::Ones(1, 1), dy);
    const double E = 0.3 - ((0.2 - 2.0 * y - 0.4) / (h * h) + kappa * kappa * y);
    for (std::size_t i = 0; i < dy.size(); ++i)
      CHECK(grad[i] == doctest::Approx(-2.0 * E * (kappa * kappa - 2.0 / (h * h)) * dy[i]).epsilon(1e-12));
  }
  SUBCASE("finite differences on a [2,8,1] net") {
    const ProblemSpec spec = make_sine_problem(2, 5.0, 4);
    const Grid grid(spec.grid);
    Mlp net = xavier_init({2, 8, 1}, {ActivationKind::Sine}, 12);
    randomize(net, 13);
    const auto grad = loss_gradient(net, spec, grid, StencilOrder::Second);
    const ModelEval model = net_model(net, spec.grid);
    const auto fd = central_differences(net.params(), [&] { return loss(model, spec, grid, StencilOrder::Second); });
    CHECK(relative_max_error(grad, fd) <= 1e-5);
  }
}

TEST_CASE("loss gradient matches finite differences on 20 random instances") {
  std::mt19937_64 rng(99);
  double worst = 0.0;
  for (int t = 0; t < 20; ++t) {
    const int d = 1 + static_cast<int>(rng() % 3);
    const int m = 3 + static_cast<int>(rng() % 3);
    const bool complex = rng() % 2 == 0;
    const StencilOrder order = rng() % 2 == 0 ? StencilOrder::Second : StencilOrder::Fourth;
    ProblemSpec spec = complex ? make_plane_wave_problem(2, 4.0, 0.5, 0.0, m) : make_sine_problem(2, 4.0, m);
    spec.grid.d = d;
    spec.kappa = [](const Point& x) { return 2.0 + x[0]; };
    const Grid grid(spec.grid);
    const int width = 3 + static_cast<int>(rng() % 4);
    const ActivationKind act = rng() % 2 == 0 ? ActivationKind::Sine : ActivationKind::Relu;
    Mlp net = xavier_init({d, width, width, spec.channels}, {ActivationKind::Sine, act}, rng());
    randomize(net, rng(), 0.8);
    const auto grad = loss_gradient(net, spec, grid, order);
    const ModelEval model = net_model(net, spec.grid);
    const auto fd = central_differences(net.params(), [&] { return loss(model, spec, grid, order); });
    worst = std::max(worst, relative_max_error(grad, fd));
  }
  CHECK(worst <= 1e-5);
}

TEST_CASE("output-layer polish") {
  SUBCASE("zero target keeps the loss at zero") {
    const ProblemSpec spec = make_sine_problem(2, 5.0, 5);
    const Grid grid(spec.grid);
    const FdSystem sys = assemble_system(spec, grid, StencilOrder::Second);
    const FdObjective obj(sys);
    Mlp net = xavier_init({2, 6, 1}, {ActivationKind::Sine}, 2);
    const Matrix x = normalized_inputs(grid.interior_points(), spec.grid);
    const InteriorField zero = InteriorField::Zero(sys.size());
    const auto res = polish_output_layer(net, net.feature(x), obj, zero);
    CHECK(res.loss_after == 0.0);
    CHECK(res.loss_zero == 0.0);
  }
  SUBCASE("one feature on one node") {
    const double kappa = 2.0;
    const ProblemSpec spec = constant_problem(1, 1, kappa, 3.0, 0.0);
    const Grid grid(spec.grid);
    const FdSystem sys = assemble_system(spec, grid, StencilOrder::Second);
    const FdObjective obj(sys);
    Mlp net({1, 1, 1}, {ActivationKind::Sine});
    net.weight(0)(0, 0) = 1.0;
    const Matrix x = Matrix::Constant(1, 1, 0.5);
    const Matrix H = net.feature(x);
    const auto res = polish_output_layer(net, H, obj, sys.rhs);
    const double a = kappa * kappa - 2.0 / (grid.h() * grid.h());
    // Any (w, b) with a (w sin(0.5) + b) = 3 is optimal, so the loss vanishes.
    CHECK(res.loss_after < 1e-24);
    CHECK(a * (net.weight(1)(0, 0) * std::sin(0.5) + net.bias(1)(0)) == doctest::Approx(3.0));
  }
  SUBCASE("random instances never increase the loss") {
    std::mt19937_64 rng(5);
    for (int t = 0; t < 10; ++t) {
      const bool complex = t % 2 == 1;
      const ProblemSpec spec = complex ? make_plane_wave_problem(2, 6.0, 0.4, 0.0, 7) : make_sine_problem(2, 6.0, 7);
      const Grid grid(spec.grid);
      const FdSystem sys = assemble_system(spec, grid, StencilOrder::Second);
      const FdObjective obj(sys);
      Mlp net = xavier_init({2, 10, spec.channels}, {ActivationKind::Relu}, rng());
      randomize(net, rng());
      const Matrix x = normalized_inputs(grid.interior_points(), spec.grid);
      const Matrix H = net.feature(x);
      const auto res = polish_output_layer(net, H, obj, sys.rhs);
      CHECK(res.loss_after <= res.loss_zero + 1e-10);
      CHECK(res.loss_after <= res.loss_before + 1e-10);
      CHECK(obj.loss(net.output_from_features(H), sys.rhs) == doctest::Approx(res.loss_after));
    }
  }
}

}
