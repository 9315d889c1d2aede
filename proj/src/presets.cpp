#include "fdmgdl/presets.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace fdmgdl {

std::string to_string(ProblemKind k) {
  switch (k) {
    case ProblemKind::Sine: return "sine";
    case ProblemKind::PlaneWave: return "wave";
    case ProblemKind::Pml: return "pml";
  }
  return "unknown";
}

ProblemKind problem_kind_from_string(const std::string& s) {
  if (s == "sine" || s == "sin") return ProblemKind::Sine;
  if (s == "wave" || s == "plane-wave" || s == "planewave") return ProblemKind::PlaneWave;
  if (s == "pml") return ProblemKind::Pml;
  throw std::invalid_argument("unknown problem kind '" + s + "'");
}

ProblemSpec make_sine_problem(int d, double kappa, int m) {
  if (d != 2 && d != 3) throw std::invalid_argument("sine problem: dimension must be 2 or 3");
  const double w = kappa / std::sqrt(static_cast<double>(d));
  auto u = [d, w](const Point& x) {
    double v = 1.0;
    for (int i = 0; i < d; ++i) v *= std::sin(w * x[i]);
    return Complex(v, 0.0);
  };
  ProblemSpec s;
  s.name = std::to_string(d) + "d-sine";
  s.grid = GridSpec{0.0, 1.0, m, d};
  s.kappa = [kappa](const Point&) { return kappa; };
  s.source = [](const Point&) { return Complex(0.0, 0.0); };
  s.boundary = u;
  s.exact = u;
  s.channels = 1;
  return s;
}

std::array<double, 3> plane_wave_vector(int d, double kappa, double theta, double phi) {
  if (d == 2) return {kappa * std::cos(theta), kappa * std::sin(theta), 0.0};
  return {kappa * std::cos(phi) * std::cos(theta), kappa * std::cos(phi) * std::sin(theta),
          kappa * std::sin(phi)};
}

ProblemSpec make_plane_wave_problem(int d, double kappa, double theta, double phi, int m) {
  if (d != 2 && d != 3) throw std::invalid_argument("plane wave: dimension must be 2 or 3");
  const auto k = plane_wave_vector(d, kappa, theta, phi);
  auto u = [d, k](const Point& x) {
    double ph = 0.0;
    for (int i = 0; i < d; ++i) ph += k[i] * x[i];
    return std::polar(1.0, ph);
  };
  ProblemSpec s;
  s.name = std::to_string(d) + "d-wave";
  s.grid = GridSpec{0.0, 1.0, m, d};
  s.kappa = [kappa](const Point&) { return kappa; };
  s.source = [](const Point&) { return Complex(0.0, 0.0); };
  s.boundary = u;
  s.exact = u;
  s.channels = 2;
  return s;
}

ProblemSpec make_problem(const ProblemParams& p) {
  switch (p.kind) {
    case ProblemKind::Sine: return make_sine_problem(p.d, p.kappa, p.m);
    case ProblemKind::PlaneWave: return make_plane_wave_problem(p.d, p.kappa, p.theta, p.phi, p.m);
    case ProblemKind::Pml: break;
  }
  throw std::invalid_argument("make_problem: the PML benchmark is built by the pml module");
}

Complex exact_eval(const ProblemParams& p, const Point& x) {
  const ProblemSpec s = make_problem(ProblemParams{p.kind, p.d, p.kappa, p.theta, p.phi, 1, 1});
  return (*s.exact)(x);
}

}  // namespace fdmgdl

namespace fdmgdl {

namespace {

struct Row {
  std::vector<double> t_max, t_min;
  std::vector<int> epochs;
};

AdaptiveConfig adaptive_from(const Row& r) {
  AdaptiveConfig c;
  for (std::size_t i = 0; i < r.epochs.size(); ++i) c.schedules.push_back({r.t_max[i], r.t_min[i], r.epochs[i]});
  c.max_grades = static_cast<int>(r.epochs.size());
  c.grade_tol = 1e-10;
  c.width = 256;
  return c;
}

SgdlArchitecture sgdl(int depth, double t_max, double t_min, int epochs) {
  // depth counts hidden layers: two sine layers, the rest ReLU.
  return SgdlArchitecture{256, 2, depth - 2, GradeSchedule{t_max, t_min, epochs}};
}

std::string kstr(double k) { return std::to_string(static_cast<int>(k)); }

// Desk-scale copy: smaller wavenumber, about twelve points per wavelength, width 64.
HyperPreset desk_variant(const HyperPreset& p, double divisor) {
  HyperPreset d = p;
  d.name = p.name + "-desk";
  d.desk = true;
  d.problem.kappa = p.problem.kappa / divisor;
  d.problem.m = std::max(8, static_cast<int>(std::ceil(12.0 * d.problem.kappa / (2.0 * std::numbers::pi))));
  d.problem.test_m = std::max(4, d.problem.m / 2);
  d.mgdl.width = 64;
  for (auto& s : d.mgdl.schedules) s.epochs = std::max(50, s.epochs / 10);
  if (d.sgdl) {
    d.sgdl->width = 64;
    d.sgdl->schedule.epochs = std::max(50, d.sgdl->schedule.epochs / 10);
  }
  d.description = "desk-scale variant of " + p.name;
  return d;
}

std::vector<HyperPreset> build_registry() {
  std::vector<HyperPreset> out;
  const double pi = std::numbers::pi;
  auto add = [&](HyperPreset p, double desk_divisor) {
    out.push_back(p);
    out.push_back(desk_variant(p, desk_divisor));
  };

  // 2D sine and 2D plane wave: m and the test lattice grow with kappa.
  const std::array<double, 4> k2{50, 100, 150, 200};
  const std::array<int, 4> m2{300, 500, 700, 700}, mt2{150, 250, 350, 350};
  const std::array<Row, 4> sin2{{
      {{1e-1, 1e-2, 1e-3, 1e-3, 1e-3, 1e-3}, {1e-2, 1e-3, 1e-4, 1e-3, 1e-3, 1e-3}, {400, 3000, 3000, 2500, 2500, 1000}},
      {{1e-1, 1e-1, 1e-2, 1e-2}, {1e-1, 1e-2, 1e-3, 1e-3}, {500, 2000, 2000, 2000}},
      {{1e-1, 1e-1, 1e-2, 1e-3, 1e-2}, {1e-2, 1e-1, 1e-3, 1e-3, 1e-3}, {500, 1500, 2000, 2000, 2000}},
      {{1e-1, 1e-1, 1e-3, 1e-2}, {1e-1, 1e-2, 1e-3, 1e-3}, {500, 2000, 2000, 2000}},
  }};
  const std::array<SgdlArchitecture, 4> sin2_sgdl{sgdl(7, 1e-3, 1e-4, 15000), sgdl(5, 1e-2, 1e-2, 8000),
                                                  sgdl(6, 1e-2, 1e-4, 10000), sgdl(5, 1e-2, 1e-4, 8000)};
  const std::array<Row, 4> wave2{{
      {{1e-1, 1e-3, 1e-1}, {1e-1, 1e-4, 1e-3}, {500, 2000, 2000}},
      {{1e-1, 1e-2, 1e-3, 1e-3}, {1e-2, 1e-3, 1e-4, 1e-4}, {500, 2000, 2000, 2000}},
      {{1e-1, 1e-2, 1e-3}, {1e-2, 1e-3, 1e-3}, {500, 1000, 1000}},
      {{1e-1, 1e-1, 1e-3, 1e-2}, {1e-2, 1e-2, 1e-4, 1e-2}, {500, 1000, 1000, 1000}},
  }};
  const std::array<SgdlArchitecture, 4> wave2_sgdl{sgdl(4, 1e-1, 1e-4, 6000), sgdl(5, 1e-1, 1e-2, 8000),
                                                   sgdl(4, 1e-1, 1e-4, 5000), sgdl(5, 1e-1, 1e-2, 5000)};
  for (std::size_t i = 0; i < 4; ++i) {
    HyperPreset p;
    p.name = "2dsin-k" + kstr(k2[i]) + "-mgdl1";
    p.description = "2D sine product, adaptive grades";
    p.problem = ProblemParams{ProblemKind::Sine, 2, k2[i], 0.0, 0.0, m2[i], mt2[i]};
    p.mgdl = adaptive_from(sin2[i]);
    p.sgdl = sin2_sgdl[i];
    add(p, 5.0);

    HyperPreset w;
    w.name = "2dwave-k" + kstr(k2[i]);
    w.description = "2D plane wave at theta = pi/4";
    w.problem = ProblemParams{ProblemKind::PlaneWave, 2, k2[i], pi / 4.0, 0.0, m2[i], mt2[i]};
    w.mgdl = adaptive_from(wave2[i]);
    w.sgdl = wave2_sgdl[i];
    add(w, 5.0);
  }

  // Depth ablations at kappa = 50.
  {
    HyperPreset p;
    p.name = "2dsin-k50-mgdl2";
    p.description = "2D sine, three grades with 2, 2 and 3 trainable hidden layers";
    p.problem = ProblemParams{ProblemKind::Sine, 2, 50.0, 0.0, 0.0, 300, 150};
    p.mgdl = adaptive_from({{1e-1, 1e-2, 1e-3}, {1e-2, 1e-2, 1e-3}, {2000, 2000, 2000}});
    p.mgdl.structure = {2, 2, 3};
    add(p, 5.0);
    p.name = "2dsin-k50-mgdl3";
    p.description = "2D sine, three grades with 3, 2 and 2 trainable hidden layers";
    p.mgdl = adaptive_from({{1e-1, 1e-3, 1e-3}, {1e-4, 1e-3, 1e-3}, {2000, 2000, 2000}});
    p.mgdl.structure = {3, 2, 2};
    add(p, 5.0);
  }

  // 3D sine and plane wave on m = 60.
  const std::array<double, 4> k3{20, 30, 40, 50};
  const std::array<Row, 4> sin3{{
      {{1e-1, 1e-2, 1e-3, 1e-3, 1e-3}, {1e-1, 1e-3, 1e-4, 1e-3, 1e-3}, {500, 2000, 2000, 2000, 2000}},
      {{1e-1, 1e-2, 1e-3}, {1e-1, 1e-4, 1e-4}, {500, 2500, 3000}},
      {{1e-1, 1e-1, 1e-3, 1e-3, 1e-3, 1e-3, 1e-3},
       {1e-1, 1e-1, 1e-3, 1e-3, 1e-3, 1e-3, 1e-3},
       {500, 2000, 2000, 2000, 2000, 2000, 2000}},
      {{1e-1, 1e-2, 1e-3, 1e-3}, {1e-1, 1e-3, 1e-4, 1e-4}, {500, 2000, 2000, 2000}},
  }};
  const std::array<SgdlArchitecture, 4> sin3_sgdl{sgdl(6, 1e-3, 1e-3, 10000), sgdl(4, 1e-1, 1e-2, 8000),
                                                  sgdl(8, 1e-2, 1e-3, 15000), sgdl(5, 1e-2, 1e-2, 8000)};
  for (std::size_t i = 0; i < 4; ++i) {
    HyperPreset p;
    p.name = "3dsin-k" + kstr(k3[i]);
    p.description = "3D sine product, adaptive grades";
    p.problem = ProblemParams{ProblemKind::Sine, 3, k3[i], 0.0, 0.0, 60, 30};
    p.mgdl = adaptive_from(sin3[i]);
    p.sgdl = sin3_sgdl[i];
    add(p, 2.0);
  }
  const std::array<Row, 2> wave3{{
      {{1e-1, 1e-1, 1e-3, 1e-3}, {1e-2, 1e-1, 1e-3, 1e-3}, {500, 1000, 1000, 1000}},
      {{1e-1, 1e-1, 1e-2, 1e-3}, {1e-4, 1e-1, 1e-3, 1e-4}, {500, 1000, 1000, 1000}},
  }};
  const std::array<SgdlArchitecture, 2> wave3_sgdl{sgdl(5, 1e-1, 1e-3, 5000), sgdl(5, 1e-1, 1e-2, 5000)};
  for (std::size_t i = 0; i < 2; ++i) {
    HyperPreset p;
    p.name = "3dwave-k" + kstr(k3[i]);
    p.description = "3D plane wave at phi = pi/3, theta = pi/8";
    p.problem = ProblemParams{ProblemKind::PlaneWave, 3, k3[i], pi / 8.0, pi / 3.0, 60, 30};
    p.mgdl = adaptive_from(wave3[i]);
    p.sgdl = wave3_sgdl[i];
    add(p, 2.0);
  }

  // Concave three-layer model with a PML collar.
  {
    HyperPreset p;
    p.name = "concave-pml";
    p.description = "three-layer concave velocity model, 25 Hz point source, PML collar";
    p.problem = ProblemParams{ProblemKind::Pml, 2, 0.0, 0.0, 0.0, 239, 0};
    p.method = "pml-mgdl";
    p.mgdl = adaptive_from({{1e-2, 1e-3, 1e-3}, {1e-3, 1e-4, 1e-4}, {500, 1000, 1000}});
    p.sgdl = sgdl(5, 1e-3, 1e-4, 2500);
    out.push_back(p);
  }

  // Settings used by the acceptance checks.
  {
    HyperPreset p;
    p.name = "2dsin-k10-desk4";
    p.description = "2D sine kappa = 10 on m = 40, four polished grades";
    p.desk = true;
    p.problem = ProblemParams{ProblemKind::Sine, 2, 10.0, 0.0, 0.0, 40, 20};
    p.mgdl = adaptive_from({{1e-2, 1e-3, 1e-3}, {1e-3, 1e-4, 1e-4}, {200, 150, 150}});
    p.mgdl.max_grades = 4;
    p.mgdl.structure = {2, 1, 1, 1};
    p.mgdl.width = 32;
    p.sgdl = SgdlArchitecture{32, 2, 3, GradeSchedule{1e-2, 1e-4, 650}};
    out.push_back(p);
  }
  {
    HyperPreset p;
    p.name = "2dsin-k20-compare";
    p.description = "2D sine kappa = 20 on m = 80, two grades against one network of equal depth and epochs";
    p.desk = true;
    p.method = "compare";
    p.problem = ProblemParams{ProblemKind::Sine, 2, 20.0, 0.0, 0.0, 80, 40};
    p.mgdl = adaptive_from({{1e-3, 1e-3}, {1e-4, 1e-4}, {300, 100}});
    p.mgdl.structure = {2, 1};
    p.mgdl.first_layer_scale = 30.0;
    p.sgdl = SgdlArchitecture{256, 2, 1, GradeSchedule{1e-3, 1e-4, 400}};
    out.push_back(p);
  }
  return out;
}

}  // namespace

const std::vector<HyperPreset>& preset_registry() {
  static const std::vector<HyperPreset> reg = build_registry();
  return reg;
}

const HyperPreset& load_preset(const std::string& name) {
  for (const auto& p : preset_registry())
    if (p.name == name) return p;
  throw std::invalid_argument("unknown preset '" + name + "'");
}

std::vector<std::string> preset_names() {
  std::vector<std::string> out;
  for (const auto& p : preset_registry()) out.push_back(p.name);
  return out;
}

}  // namespace fdmgdl
