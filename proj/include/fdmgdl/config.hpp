#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "fdmgdl/convex_cert.hpp"
#include "fdmgdl/helmholtz_fd.hpp"
#include "fdmgdl/mgdl.hpp"
#include "fdmgdl/pml.hpp"
#include "fdmgdl/presets.hpp"

namespace fdmgdl {

struct CertifyConfig {
  int n = 4;
  int p = 2;
  int width = -1;  // negative: use m*
  int restarts = 20;
  int epochs = 3000;
  double t_max = 1e-2;
  double t_min = 1e-4;
  double kappa = 1.0;  // operator is the 1D three-point Helmholtz matrix on n nodes
};

/// One experiment. Built from an optional preset, then field-by-field keys.
struct ExperimentConfig {
  std::string method = "mgdl";  // mgdl, sgdl, compare, fdm, pml-mgdl, certify
  std::string preset;
  ProblemParams problem;
  AdaptiveConfig mgdl;
  SgdlArchitecture sgdl;
  StencilOrder order = StencilOrder::Second;
  std::uint64_t seed = 0;
  std::string out_dir = "out";
  bool deterministic = false;
  PmlConfig pml;
  VelocityModel velocity;
  std::string velocity_csv;
  SourceSpec source;
  CertifyConfig certify;
  std::map<std::string, std::string> entries;  // every key that was set, for the report echo

  void validate() const;
};

// Flat "key = value" lines; '#' starts a comment. Unknown keys are errors.
// A non-empty `method` replaces the method key before validation.
ExperimentConfig parse_config(std::istream& is, const std::string& method = "");
ExperimentConfig load_config(const std::string& path, const std::string& method = "");
void apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& value);
ExperimentConfig config_from_preset(const std::string& name);

}  // namespace fdmgdl
