#include "fdmgdl/pml.hpp"

#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <istream>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace fdmgdl {

void VelocityModel::validate() const {
  if (!(hi > lo)) throw std::invalid_argument("velocity model: empty domain");
  if (!raster_v.empty()) {
    if (raster_x.size() != raster_v.size() || raster_y.size() != raster_v.size())
      throw std::invalid_argument("velocity raster: column lengths differ");
    for (double v : raster_v)
      if (!(v > 0.0)) throw std::invalid_argument("velocity raster: velocities must be positive");
    return;
  }
  for (double v : velocities)
    if (!(v > 0.0)) throw std::invalid_argument("velocity model: velocities must be positive");
  if (!(layer_thickness > 0.0)) throw std::invalid_argument("velocity model: interfaces must not cross");
  if (!(dip_half_width > 0.0)) throw std::invalid_argument("velocity model: dip width must be positive");
}

double VelocityModel::top_interface(double x) const {
  const double s = (x - dip_center) / dip_half_width;
  if (std::abs(s) >= 1.0) return top_depth;
  const double bump = shape == InterfaceShape::Parabolic ? 1.0 - s * s : 1.0 - std::abs(s);
  return top_depth + dip * bump;
}

double VelocityModel::bottom_interface(double x) const { return top_interface(x) + layer_thickness; }

double VelocityModel::velocity(double x, double y) const {
  x = std::clamp(x, lo, hi);
  y = std::clamp(y, lo, hi);
  if (!raster_v.empty()) {
    std::size_t best = 0;
    double bd = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < raster_v.size(); ++k) {
      const double dx = raster_x[k] - x, dy = raster_y[k] - y;
      const double d2 = dx * dx + dy * dy;
      if (d2 < bd) {
        bd = d2;
        best = k;
      }
    }
    return raster_v[best];
  }
  if (y < top_interface(x)) return velocities[0];
  if (y < bottom_interface(x)) return velocities[1];
  return velocities[2];
}

VelocityModel VelocityModel::homogeneous(double v, double lo, double hi) {
  VelocityModel m;
  m.lo = lo;
  m.hi = hi;
  m.velocities = {v, v, v};
  return m;
}

VelocityModel load_velocity_csv(std::istream& is) {
  VelocityModel m;
  std::string line;
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ss(line);
    double x, y, v;
    if (!(ss >> x >> y >> v)) {
      if (m.raster_v.empty()) continue;  // header
      throw std::invalid_argument("velocity csv: malformed row '" + line + "'");
    }
    m.raster_x.push_back(x);
    m.raster_y.push_back(y);
    m.raster_v.push_back(v);
    lo = std::min({lo, x, y});
    hi = std::max({hi, x, y});
  }
  if (m.raster_v.empty()) throw std::invalid_argument("velocity csv: no rows");
  m.lo = lo;
  m.hi = hi;
  m.validate();
  return m;
}

void PmlConfig::validate() const {
  if (!(thickness > 0.0)) throw std::invalid_argument("pml: thickness must be positive");
  if (collar_nodes < 1) throw std::invalid_argument("pml: collar needs at least one node");
  if (!(frequency > 0.0)) throw std::invalid_argument("pml: frequency must be positive");
  if (!(f0 > 0.0)) throw std::invalid_argument("pml: dominant frequency must be positive");
}

double PmlConfig::omega() const { return 2.0 * std::numbers::pi * frequency; }

GridSpec pml_grid(const VelocityModel& vel, const PmlConfig& cfg) {
  vel.validate();
  cfg.validate();
  const double h = cfg.spacing();
  const double cells = (vel.hi - vel.lo) / h;
  const long nc = std::lround(cells);
  if (std::abs(cells - static_cast<double>(nc)) > 1e-9 * cells)
    throw std::invalid_argument("pml grid: domain width is not a multiple of the node spacing");
  GridSpec g;
  g.a = vel.lo - cfg.thickness;
  g.b = vel.hi + cfg.thickness;
  g.m = static_cast<int>(nc + 2 * cfg.collar_nodes - 1);
  g.d = 2;
  return g;
}

double sigma_profile(double pos, const PmlConfig& cfg, double lo, double hi) {
  double l = 0.0;
  if (pos < lo) l = lo - pos;
  if (pos > hi) l = pos - hi;
  if (l == 0.0) return 0.0;
  const double r = l / cfg.thickness;
  return 2.0 * std::numbers::pi * cfg.a0 * cfg.f0 * r * r;
}

Stretching stretching_coeffs(double sigma_x, double sigma_y, double omega) {
  if (omega == 0.0) throw std::invalid_argument("stretching_coeffs: omega must be nonzero");
  const Complex ex(1.0, sigma_x / omega), ey(1.0, sigma_y / omega);
  if (sigma_x == sigma_y) return {Complex(1.0, 0.0), Complex(1.0, 0.0), ex * ey};
  return {ey / ex, ex / ey, ex * ey};
}

double ricker_spectrum(double f, double f0) {
  if (!(f0 > 0.0)) throw std::invalid_argument("ricker_spectrum: f0 must be positive");
  const double r = f / f0;
  return 2.0 * r * r / (std::sqrt(std::numbers::pi) * f0) * std::exp(-r * r);
}

FdSystem assemble_pml_system(const VelocityModel& vel, const PmlConfig& cfg, const Grid& grid,
                             const SourceSpec& src) {
  if (grid.dim() != 2) throw std::invalid_argument("assemble_pml_system: the benchmark is two-dimensional");
  vel.validate();
  cfg.validate();
  const double h = grid.h();
  const double ih2 = 1.0 / (h * h);
  const double omega = cfg.omega();
  const int n1 = grid.closure_n();

  // Coefficients on the closure lattice.
  std::vector<Complex> A(grid.closure_count()), B(grid.closure_count()), C(grid.closure_count());
  std::vector<double> k2(grid.closure_count());
  for (std::size_t q = 0; q < grid.closure_count(); ++q) {
    const MultiIndex j = grid.closure_multi(q);
    const double x = grid.coord(j[0]), y = grid.coord(j[1]);
    const double sx = cfg.enabled ? sigma_profile(x, cfg, vel.lo, vel.hi) : 0.0;
    const double sy = cfg.enabled ? sigma_profile(y, cfg, vel.lo, vel.hi) : 0.0;
    const Stretching s = stretching_coeffs(sx, sy, omega);
    A[q] = s.A;
    B[q] = s.B;
    C[q] = s.C;
    const double kappa = omega / vel.velocity(x, y);
    k2[q] = kappa * kappa;
  }

  const long n = static_cast<long>(grid.interior_count());
  std::vector<Eigen::Triplet<Complex>> trip;
  trip.reserve(static_cast<std::size_t>(5 * n));
  for (long k = 0; k < n; ++k) {
    const MultiIndex j = grid.multi_index(static_cast<std::size_t>(k));
    const std::size_t q = grid.closure_flat(j);
    Complex diag = C[q] * k2[q];
    for (int axis = 0; axis < 2; ++axis) {
      const std::vector<Complex>& coef = axis == 0 ? A : B;
      for (int dir : {-1, 1}) {
        MultiIndex nb = j;
        nb[axis] += dir;
        const std::size_t qn = grid.closure_flat(nb);
        const Complex half = 0.5 * (coef[q] + coef[qn]) * ih2;
        diag -= half;
        if (nb[axis] >= 1 && nb[axis] <= n1 - 2)
          trip.emplace_back(k, static_cast<long>(grid.flat_index(nb)), half);
      }
    }
    trip.emplace_back(k, k, diag);
  }
  FdSystem sys;
  sys.A.resize(n, n);
  sys.A.setFromTriplets(trip.begin(), trip.end());
  sys.A.makeCompressed();
  sys.rhs = InteriorField::Zero(n);
  sys.channels = 2;

  if (src.active) {
    if (src.x < vel.lo || src.x > vel.hi || src.y < vel.lo || src.y > vel.hi)
      throw std::invalid_argument("assemble_pml_system: source outside the domain");
    MultiIndex j{0, 0, 0};
    j[0] = static_cast<int>(std::lround((src.x - grid.spec().a) / h));
    j[1] = static_cast<int>(std::lround((src.y - grid.spec().a) / h));
    sys.rhs[static_cast<long>(grid.flat_index(j))] = -ricker_spectrum(cfg.frequency, cfg.f0) * ih2;
  }
  return sys;
}

NodeField solve_pml(const FdSystem& sys, const Grid& grid) {
  using Sparse = Eigen::SparseMatrix<Complex>;
  Eigen::SparseLU<Sparse> lu;
  lu.compute(Sparse(sys.A));
  if (lu.info() != Eigen::Success) throw std::runtime_error("solve_pml: factorization failed");
  const InteriorField u = lu.solve(sys.rhs);
  NodeField out = NodeField::Zero(static_cast<long>(grid.closure_count()));
  for (long k = 0; k < u.size(); ++k)
    out[static_cast<long>(grid.closure_flat(grid.multi_index(static_cast<std::size_t>(k))))] = u[k];
  return out;
}

PmlRun pml_mgdl_train(const VelocityModel& vel, const PmlConfig& cfg, const Grid& grid, const SourceSpec& src,
                      const AdaptiveConfig& adaptive, const GradeObserver& observer) {
  PmlRun out;
  out.system = assemble_pml_system(vel, cfg, grid, src);
  const Matrix inputs = normalized_inputs(grid.interior_points(), grid.spec());
  out.run = run_mgdl(out.system, inputs, adaptive, observer);
  return out;
}

NodeField model_field(const MgdlModel& model, const Grid& grid, int grades) {
  const Matrix inputs = normalized_inputs(grid.interior_points(), grid.spec());
  Matrix y;
  if (grades < 0 || grades >= model.grade_count()) {
    y = model.evaluate(inputs);
  } else {
    const std::vector<Matrix> parts = model.grade_outputs(inputs);
    y = Matrix::Zero(model.channels(), inputs.cols());
    for (int g = 0; g < grades; ++g) y += parts[static_cast<std::size_t>(g)];
  }
  const InteriorField u = outputs_to_field(y);
  NodeField out = NodeField::Zero(static_cast<long>(grid.closure_count()));
  for (long k = 0; k < u.size(); ++k)
    out[static_cast<long>(grid.closure_flat(grid.multi_index(static_cast<std::size_t>(k))))] = u[k];
  return out;
}

}  // namespace fdmgdl
