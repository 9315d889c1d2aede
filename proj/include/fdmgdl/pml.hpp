#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "fdmgdl/grid.hpp"
#include "fdmgdl/helmholtz_fd.hpp"
#include "fdmgdl/mgdl.hpp"

namespace fdmgdl {

enum class InterfaceShape { Parabolic, PiecewiseLinear };

/// Three constant-velocity layers over [lo, hi]^2, depth y growing downward.
/// Both interfaces dip by `dip` metres over [dip_center - half_width, dip_center + half_width].
struct VelocityModel {
  double lo = 0.0;
  double hi = 2000.0;
  std::array<double, 3> velocities{1500.0, 2000.0, 2500.0};
  double top_depth = 600.0;
  double layer_thickness = 600.0;  // middle layer, measured vertically
  double dip = 400.0;
  double dip_center = 1000.0;
  double dip_half_width = 400.0;
  InterfaceShape shape = InterfaceShape::Parabolic;

  // Optional raster (x, y, v) with nearest-node lookup; overrides the layers.
  std::vector<double> raster_x, raster_y, raster_v;

  void validate() const;
  double top_interface(double x) const;
  double bottom_interface(double x) const;
  // Coordinates outside [lo, hi] are clamped onto the square.
  double velocity(double x, double y) const;

  static VelocityModel homogeneous(double v, double lo = 0.0, double hi = 2000.0);
};

// Reads "x,y,v" rows (an optional header line is skipped) into a raster model.
VelocityModel load_velocity_csv(std::istream& is);

struct PmlConfig {
  double thickness = 200.0;  // L_PML in metres
  int collar_nodes = 20;
  double a0 = 1.79;
  double f0 = 25.0;
  double frequency = 25.0;
  bool enabled = true;

  void validate() const;
  double omega() const;
  double spacing() const { return thickness / collar_nodes; }
};

struct SourceSpec {
  double x = 1000.0;
  double y = 800.0;
  bool active = true;
};

// Lattice over the square padded by the collar; the outer edge is Dirichlet.
GridSpec pml_grid(const VelocityModel& vel, const PmlConfig& cfg);

double sigma_profile(double pos, const PmlConfig& cfg, double lo, double hi);

struct Stretching {
  Complex A, B, C;
};

Stretching stretching_coeffs(double sigma_x, double sigma_y, double omega);

// Fourier transform of (1 - 2 pi^2 f0^2 t^2) exp(-pi^2 f0^2 t^2).
double ricker_spectrum(double f, double f0);

FdSystem assemble_pml_system(const VelocityModel& vel, const PmlConfig& cfg, const Grid& grid,
                             const SourceSpec& src);

// Direct sparse solve of the PML system, returned on the closure lattice.
NodeField solve_pml(const FdSystem& sys, const Grid& grid);

struct PmlRun {
  FdSystem system;
  MgdlRun run;
};

PmlRun pml_mgdl_train(const VelocityModel& vel, const PmlConfig& cfg, const Grid& grid, const SourceSpec& src,
                      const AdaptiveConfig& adaptive, const GradeObserver& observer = {});

// Two-channel model evaluated on the closure lattice, zero on the outer edge.
NodeField model_field(const MgdlModel& model, const Grid& grid, int grades = -1);

}  // namespace fdmgdl
