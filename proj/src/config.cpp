#include "fdmgdl/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace fdmgdl {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double x = 0.0;
  try {
    x = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size()) throw std::invalid_argument("config: '" + key + "' expects a number, got '" + v + "'");
  return x;
}

long to_long(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  long x = 0;
  try {
    x = std::stol(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size()) throw std::invalid_argument("config: '" + key + "' expects an integer, got '" + v + "'");
  return x;
}

int to_int(const std::string& key, const std::string& v) { return static_cast<int>(to_long(key, v)); }

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw std::invalid_argument("config: '" + key + "' expects a boolean, got '" + v + "'");
}

std::vector<int> to_int_list(const std::string& key, const std::string& v) {
  std::vector<int> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(to_int(key, item));
  }
  return out;
}

GradeSchedule& grade_slot(ExperimentConfig& cfg, int grade) {
  if (grade < 1 || grade > 64) throw std::invalid_argument("config: grade index out of range");
  while (static_cast<int>(cfg.mgdl.schedules.size()) < grade)
    cfg.mgdl.schedules.push_back(cfg.mgdl.schedules.empty() ? GradeSchedule{} : cfg.mgdl.schedules.back());
  return cfg.mgdl.schedules[static_cast<std::size_t>(grade - 1)];
}

}  // namespace

ExperimentConfig config_from_preset(const std::string& name) {
  const HyperPreset& p = load_preset(name);
  ExperimentConfig cfg;
  cfg.preset = name;
  cfg.method = p.method;
  cfg.problem = p.problem;
  cfg.mgdl = p.mgdl;
  if (p.sgdl) cfg.sgdl = *p.sgdl;
  cfg.entries["preset"] = name;
  return cfg;
}

void apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  const std::string& v = value;
  if (key == "preset") {
    const auto keep = cfg.entries;
    cfg = config_from_preset(v);
    for (const auto& [k, val] : keep)
      if (k != "preset") apply_setting(cfg, k, val);
    return;
  }
  if (key == "method") {
    static const std::vector<std::string> ok{"mgdl", "sgdl", "compare", "fdm", "pml-mgdl", "certify"};
    if (std::find(ok.begin(), ok.end(), v) == ok.end()) throw std::invalid_argument("config: unknown method '" + v + "'");
    cfg.method = v;
  } else if (key == "seed") {
    cfg.seed = static_cast<std::uint64_t>(to_long(key, v));
  } else if (key == "out") {
    cfg.out_dir = v;
  } else if (key == "deterministic") {
    cfg.deterministic = to_bool(key, v);
  } else if (key == "order") {
    if (v == "second" || v == "2") cfg.order = StencilOrder::Second;
    else if (v == "fourth" || v == "4") cfg.order = StencilOrder::Fourth;
    else throw std::invalid_argument("config: order must be second or fourth");
  } else if (key == "problem.kind") {
    cfg.problem.kind = problem_kind_from_string(v);
  } else if (key == "problem.d") {
    cfg.problem.d = to_int(key, v);
  } else if (key == "problem.kappa") {
    cfg.problem.kappa = to_double(key, v);
  } else if (key == "problem.theta") {
    cfg.problem.theta = to_double(key, v);
  } else if (key == "problem.phi") {
    cfg.problem.phi = to_double(key, v);
  } else if (key == "problem.m") {
    cfg.problem.m = to_int(key, v);
  } else if (key == "problem.test_m") {
    cfg.problem.test_m = to_int(key, v);
  } else if (key == "mgdl.width") {
    cfg.mgdl.width = to_int(key, v);
  } else if (key == "mgdl.max_grades") {
    cfg.mgdl.max_grades = to_int(key, v);
  } else if (key == "mgdl.grade_tol") {
    cfg.mgdl.grade_tol = to_double(key, v);
  } else if (key == "mgdl.first_layer_scale") {
    cfg.mgdl.first_layer_scale = to_double(key, v);
  } else if (key == "mgdl.structure") {
    cfg.mgdl.structure = to_int_list(key, v);
  } else if (key == "mgdl.polish") {
    cfg.mgdl.polish = to_bool(key, v);
  } else if (key == "mgdl.epoch_loss_tol") {
    cfg.mgdl.epoch_loss_tol = to_double(key, v);
  } else if (key.rfind("grade", 0) == 0 && key.find('.') != std::string::npos) {
    const std::string idx = key.substr(5, key.find('.') - 5);
    const std::string field = key.substr(key.find('.') + 1);
    GradeSchedule& g = grade_slot(cfg, to_int(key, idx));
    if (field == "t_max") g.t_max = to_double(key, v);
    else if (field == "t_min") g.t_min = to_double(key, v);
    else if (field == "epochs") g.epochs = to_int(key, v);
    else throw std::invalid_argument("config: unknown key '" + key + "'");
  } else if (key == "sgdl.width") {
    cfg.sgdl.width = to_int(key, v);
  } else if (key == "sgdl.sine_layers") {
    cfg.sgdl.sine_layers = to_int(key, v);
  } else if (key == "sgdl.relu_layers") {
    cfg.sgdl.relu_layers = to_int(key, v);
  } else if (key == "sgdl.t_max") {
    cfg.sgdl.schedule.t_max = to_double(key, v);
  } else if (key == "sgdl.t_min") {
    cfg.sgdl.schedule.t_min = to_double(key, v);
  } else if (key == "sgdl.epochs") {
    cfg.sgdl.schedule.epochs = to_int(key, v);
  } else if (key == "pml.thickness") {
    cfg.pml.thickness = to_double(key, v);
  } else if (key == "pml.collar_nodes") {
    cfg.pml.collar_nodes = to_int(key, v);
  } else if (key == "pml.a0") {
    cfg.pml.a0 = to_double(key, v);
  } else if (key == "pml.f0") {
    cfg.pml.f0 = to_double(key, v);
  } else if (key == "pml.frequency") {
    cfg.pml.frequency = to_double(key, v);
  } else if (key == "pml.enabled") {
    cfg.pml.enabled = to_bool(key, v);
  } else if (key == "velocity.csv") {
    cfg.velocity_csv = v;
  } else if (key == "velocity.lo") {
    cfg.velocity.lo = to_double(key, v);
  } else if (key == "velocity.hi") {
    cfg.velocity.hi = to_double(key, v);
  } else if (key == "velocity.v1" || key == "velocity.v2" || key == "velocity.v3") {
    cfg.velocity.velocities[static_cast<std::size_t>(key.back() - '1')] = to_double(key, v);
  } else if (key == "velocity.top_depth") {
    cfg.velocity.top_depth = to_double(key, v);
  } else if (key == "velocity.layer_thickness") {
    cfg.velocity.layer_thickness = to_double(key, v);
  } else if (key == "velocity.dip") {
    cfg.velocity.dip = to_double(key, v);
  } else if (key == "velocity.dip_center") {
    cfg.velocity.dip_center = to_double(key, v);
  } else if (key == "velocity.dip_half_width") {
    cfg.velocity.dip_half_width = to_double(key, v);
  } else if (key == "velocity.shape") {
    if (v == "parabolic") cfg.velocity.shape = InterfaceShape::Parabolic;
    else if (v == "linear") cfg.velocity.shape = InterfaceShape::PiecewiseLinear;
    else throw std::invalid_argument("config: velocity.shape must be parabolic or linear");
  } else if (key == "source.x") {
    cfg.source.x = to_double(key, v);
  } else if (key == "source.y") {
    cfg.source.y = to_double(key, v);
  } else if (key == "source.active") {
    cfg.source.active = to_bool(key, v);
  } else if (key == "certify.n") {
    cfg.certify.n = to_int(key, v);
  } else if (key == "certify.p") {
    cfg.certify.p = to_int(key, v);
  } else if (key == "certify.width") {
    cfg.certify.width = to_int(key, v);
  } else if (key == "certify.restarts") {
    cfg.certify.restarts = to_int(key, v);
  } else if (key == "certify.epochs") {
    cfg.certify.epochs = to_int(key, v);
  } else if (key == "certify.t_max") {
    cfg.certify.t_max = to_double(key, v);
  } else if (key == "certify.t_min") {
    cfg.certify.t_min = to_double(key, v);
  } else if (key == "certify.kappa") {
    cfg.certify.kappa = to_double(key, v);
  } else {
    throw std::invalid_argument("config: unknown key '" + key + "'");
  }
  cfg.entries[key] = v;
}

ExperimentConfig parse_config(std::istream& is, const std::string& method) {
  std::vector<std::pair<std::string, std::string>> kv;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key = value");
    kv.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  ExperimentConfig cfg;
  // The preset is the base layer wherever it appears.
  for (const auto& [k, v] : kv)
    if (k == "preset") cfg = config_from_preset(v);
  for (const auto& [k, v] : kv)
    if (k != "preset") apply_setting(cfg, k, v);
  if (!method.empty()) apply_setting(cfg, "method", method);
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::string& path, const std::string& method) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file '" + path + "'");
  return parse_config(in, method);
}

void ExperimentConfig::validate() const {
  if (method == "mgdl" || method == "compare" || method == "pml-mgdl") mgdl.validate();
  if (method == "sgdl" || method == "compare") {
    if (sgdl.width <= 0 || sgdl.sine_layers < 0 || sgdl.relu_layers < 0 || sgdl.sine_layers + sgdl.relu_layers < 1)
      throw std::invalid_argument("config: sgdl architecture needs a positive width and at least one layer");
    LrSchedule{sgdl.schedule.t_max, sgdl.schedule.t_min, sgdl.schedule.epochs}.validate();
  }
  if (method != "pml-mgdl" && method != "certify") {
    if (problem.kind == ProblemKind::Pml) throw std::invalid_argument("config: the PML problem needs method pml-mgdl");
    if (problem.m < 1) throw std::invalid_argument("config: problem.m must be positive");
    if (problem.test_m < 1) throw std::invalid_argument("config: problem.test_m must be positive");
  }
  if (method == "certify") {
    if (certify.n < 1 || certify.n > kMaxCertifierRows || certify.p < 1 || certify.p > kMaxCertifierCols)
      throw std::invalid_argument("config: certify.n must be in 1..12 and certify.p in 1..4");
    if (certify.restarts < 0) throw std::invalid_argument("config: certify.restarts must be non-negative");
  }
  if (method == "pml-mgdl") pml.validate();
}

}  // namespace fdmgdl
