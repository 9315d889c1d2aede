#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fdmgdl/helmholtz_fd.hpp"
#include "fdmgdl/mgdl.hpp"

namespace fdmgdl {

enum class ProblemKind { Sine, PlaneWave, Pml };

std::string to_string(ProblemKind k);
ProblemKind problem_kind_from_string(const std::string& s);

/// Analytic test problem: sine product or plane wave in 2D/3D.
struct ProblemParams {
  ProblemKind kind = ProblemKind::Sine;
  int d = 2;
  double kappa = 10.0;
  double theta = 0.0;  // plane-wave azimuth
  double phi = 0.0;    // plane-wave elevation (3D)
  int m = 40;
  int test_m = 20;
};

// u = prod_i sin(kappa x_i / sqrt(d)), f = 0, g = trace of u.
ProblemSpec make_sine_problem(int d, double kappa, int m);
// u = exp(i k.x) with |k| = kappa.
ProblemSpec make_plane_wave_problem(int d, double kappa, double theta, double phi, int m);
ProblemSpec make_problem(const ProblemParams& p);

std::array<double, 3> plane_wave_vector(int d, double kappa, double theta, double phi);
Complex exact_eval(const ProblemParams& p, const Point& x);

struct SgdlArchitecture {
  int width = 256;
  int sine_layers = 2;
  int relu_layers = 5;
  GradeSchedule schedule;
};

struct HyperPreset {
  std::string name;
  std::string description;
  ProblemParams problem;
  std::string method = "mgdl";  // mgdl, sgdl, fdm, pml-mgdl
  AdaptiveConfig mgdl;
  std::optional<SgdlArchitecture> sgdl;
  bool desk = false;
};

const std::vector<HyperPreset>& preset_registry();
const HyperPreset& load_preset(const std::string& name);
std::vector<std::string> preset_names();

}  // namespace fdmgdl
