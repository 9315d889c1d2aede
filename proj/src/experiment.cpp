#include "fdmgdl/experiment.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <stdexcept>

#include "fdmgdl/fdm.hpp"
#include "fdmgdl/pml.hpp"

namespace fdmgdl {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Evaluation {
  Matrix train_inputs, test_inputs;
  CVector train_exact, test_exact;
  std::vector<Point> test_points;
};

Evaluation prepare_evaluation(const ProblemSpec& spec, const Grid& grid, int test_m) {
  Evaluation ev;
  ev.train_inputs = normalized_inputs(grid.interior_points(), spec.grid);
  ev.test_points = test_lattice(spec.grid.a, spec.grid.b, test_m, spec.grid.d);
  ev.test_inputs = normalized_inputs(ev.test_points, spec.grid);
  ev.train_exact.resize(static_cast<long>(grid.interior_count()));
  for (long k = 0; k < ev.train_exact.size(); ++k)
    ev.train_exact[k] = (*spec.exact)(grid.interior_points()[static_cast<std::size_t>(k)]);
  ev.test_exact.resize(static_cast<long>(ev.test_points.size()));
  for (long k = 0; k < ev.test_exact.size(); ++k) ev.test_exact[k] = (*spec.exact)(ev.test_points[static_cast<std::size_t>(k)]);
  return ev;
}

void append_curve(RunReport& rep, int grade, const LossCurve& c) {
  for (int k = 0; k < c.epochs(); ++k)
    rep.loss.push_back({grade, k, c.loss[static_cast<std::size_t>(k)], c.lr[static_cast<std::size_t>(k)],
                        c.elapsed[static_cast<std::size_t>(k)]});
}

std::vector<FieldRow> rows_at(const std::vector<Point>& pts, const CVector& v) {
  std::vector<FieldRow> out(pts.size());
  for (std::size_t k = 0; k < pts.size(); ++k) out[k] = {pts[k], v[static_cast<long>(k)]};
  return out;
}

std::vector<FieldRow> closure_rows(const Grid& grid, const NodeField& v) {
  std::vector<FieldRow> out(grid.closure_count());
  for (std::size_t q = 0; q < grid.closure_count(); ++q) out[q] = {grid.node(grid.closure_multi(q)), v[static_cast<long>(q)]};
  return out;
}

void run_mgdl_method(const ExperimentConfig& cfg, RunReport& rep) {
  const ProblemSpec spec = make_problem(cfg.problem);
  const Grid grid(spec.grid);
  const FdSystem sys = assemble_system(spec, grid, cfg.order);
  const Evaluation ev = prepare_evaluation(spec, grid, cfg.problem.test_m);
  AdaptiveConfig ac = cfg.mgdl;
  ac.seed = cfg.seed;
  double ac_time = 0.0;
  const auto observer = [&](const MgdlModel& model, const GradeRecord& r) {
    ac_time += r.wall_seconds;
    GradeSummary g;
    g.grade = r.grade;
    g.depth = r.net.depth();
    g.epochs = r.curve.epochs();
    g.adam_loss = r.adam_loss;
    g.final_loss = r.final_loss;
    g.wall_seconds = r.wall_seconds;
    g.ac_time = ac_time;
    g.polish_choice = r.polished ? to_string(r.polish.choice) : "none";
    g.tr_rse = rse(outputs_to_field(model.evaluate(ev.train_inputs)), ev.train_exact);
    g.te_rse = rse(outputs_to_field(model.evaluate(ev.test_inputs)), ev.test_exact);
    rep.grades.push_back(g);
  };
  const MgdlRun run = run_mgdl(sys, ev.train_inputs, ac, observer);
  for (const auto& g : run.model.grades()) append_curve(rep, g.grade, g.curve);
  rep.aborted = run.aborted;
  rep.error = run.error;
  if (run.model.grade_count() == 0) return;

  MethodSummary m;
  m.method = "mgdl";
  for (const auto& g : run.model.grades()) m.epochs += g.curve.epochs();
  m.final_loss = run.grade_losses.back();
  m.wall_seconds = run.ac_times.back();
  m.tr_rse = rep.grades.back().tr_rse;
  m.te_rse = rep.grades.back().te_rse;
  m.equivalent_depth = run.model.equivalent_depth();
  rep.methods.push_back(m);

  const InteriorField y = outputs_to_field(run.model.evaluate(ev.train_inputs));
  rep.field = rows_at(grid.interior_points(), y);
  const FdObjective obj(sys);
  rep.residual = rows_at(grid.interior_points(), InteriorField(sys.rhs - sys.A * y));
  rep.zero_residual_seminorm = seminorm(sys.rhs);
  rep.final_residual_seminorm = seminorm(InteriorField(sys.rhs - sys.A * y));
}

void run_sgdl_method(const ExperimentConfig& cfg, RunReport& rep, int grade_label) {
  const ProblemSpec spec = make_problem(cfg.problem);
  const Grid grid(spec.grid);
  const FdSystem sys = assemble_system(spec, grid, cfg.order);
  const Evaluation ev = prepare_evaluation(spec, grid, cfg.problem.test_m);
  SingleNetConfig sc;
  sc.width = cfg.sgdl.width;
  sc.hidden.assign(static_cast<std::size_t>(cfg.sgdl.sine_layers), ActivationKind::Sine);
  sc.hidden.insert(sc.hidden.end(), static_cast<std::size_t>(cfg.sgdl.relu_layers), ActivationKind::Relu);
  sc.schedule = cfg.sgdl.schedule;
  sc.first_layer_scale = cfg.mgdl.first_layer_scale;
  sc.epoch_loss_tol = cfg.mgdl.epoch_loss_tol;
  sc.seed = cfg.seed;
  const auto t0 = Clock::now();
  const SingleNetRun run = run_single_network(sys, ev.train_inputs, sc);
  const double wall = seconds_since(t0);
  append_curve(rep, grade_label, run.curve);
  if (run.aborted) {
    rep.aborted = true;
    rep.error = "sgdl: " + run.error;
    return;
  }
  MethodSummary m;
  m.method = "sgdl";
  m.epochs = run.curve.epochs();
  m.final_loss = run.final_loss;
  m.wall_seconds = wall;
  m.equivalent_depth = run.net.depth();
  const InteriorField y = outputs_to_field(run.net.forward(ev.train_inputs));
  m.tr_rse = rse(y, ev.train_exact);
  m.te_rse = rse(outputs_to_field(run.net.forward(ev.test_inputs)), ev.test_exact);
  rep.methods.push_back(m);
  if (rep.field.empty()) {
    rep.field = rows_at(grid.interior_points(), y);
    rep.residual = rows_at(grid.interior_points(), InteriorField(sys.rhs - sys.A * y));
    rep.zero_residual_seminorm = seminorm(sys.rhs);
    rep.final_residual_seminorm = seminorm(InteriorField(sys.rhs - sys.A * y));
  }
}

void run_fdm_method(const ExperimentConfig& cfg, RunReport& rep) {
  const ProblemSpec spec = make_problem(cfg.problem);
  const Grid grid(spec.grid);
  const auto pts = test_lattice(spec.grid.a, spec.grid.b, cfg.problem.test_m, spec.grid.d);
  const FdmReport fr = fdm_reference_run(spec, grid, pts);
  FdmSummary s;
  s.solver = fr.solution.solver;
  s.relative_residual = fr.solution.relative_residual;
  s.converged = fr.solution.converged;
  s.tr_rse = fr.tr_rse;
  s.te_rse_bilinear = fr.te_rse_multilinear;
  s.te_rse_biquadratic = fr.te_rse_quadratic;
  rep.fdm = s;
  rep.field = rows_at(grid.interior_points(), fr.solution.values);
  if (!fr.solution.converged) {
    rep.aborted = true;
    char buf[128];
    std::snprintf(buf, sizeof buf, "linear solve did not converge: relative residual %.3e", fr.solution.relative_residual);
    rep.error = buf;
  }
}

void run_pml_method(const ExperimentConfig& cfg, RunReport& rep) {
  VelocityModel vel = cfg.velocity;
  if (!cfg.velocity_csv.empty()) {
    std::ifstream in(cfg.velocity_csv);
    if (!in) throw std::invalid_argument("cannot open velocity file '" + cfg.velocity_csv + "'");
    vel = load_velocity_csv(in);
  }
  const Grid grid(pml_grid(vel, cfg.pml));
  AdaptiveConfig ac = cfg.mgdl;
  ac.seed = cfg.seed;
  double ac_time = 0.0;
  const auto observer = [&](const MgdlModel& model, const GradeRecord& r) {
    ac_time += r.wall_seconds;
    GradeSummary g;
    g.grade = r.grade;
    g.depth = r.net.depth();
    g.epochs = r.curve.epochs();
    g.adam_loss = r.adam_loss;
    g.final_loss = r.final_loss;
    g.wall_seconds = r.wall_seconds;
    g.ac_time = ac_time;
    g.polish_choice = r.polished ? to_string(r.polish.choice) : "none";
    rep.grades.push_back(g);
    rep.grade_fields.push_back(closure_rows(grid, model_field(model, grid)));
  };
  const PmlRun pr = pml_mgdl_train(vel, cfg.pml, grid, cfg.source, ac, observer);
  for (const auto& g : pr.run.model.grades()) append_curve(rep, g.grade, g.curve);
  rep.aborted = pr.run.aborted;
  rep.error = pr.run.error;
  rep.zero_residual_seminorm = seminorm(pr.system.rhs);
  if (pr.run.model.grade_count() == 0) return;
  const NodeField u = model_field(pr.run.model, grid);
  rep.field = closure_rows(grid, u);
  const Matrix inputs = normalized_inputs(grid.interior_points(), grid.spec());
  const InteriorField y = outputs_to_field(pr.run.model.evaluate(inputs));
  const InteriorField r = pr.system.rhs - pr.system.A * y;
  rep.residual = rows_at(grid.interior_points(), r);
  rep.final_residual_seminorm = seminorm(r);
  MethodSummary m;
  m.method = "pml-mgdl";
  for (const auto& g : pr.run.model.grades()) m.epochs += g.curve.epochs();
  m.final_loss = pr.run.grade_losses.back();
  m.wall_seconds = pr.run.ac_times.back();
  m.equivalent_depth = pr.run.model.equivalent_depth();
  rep.methods.push_back(m);
}

void run_certify_method(const ExperimentConfig& cfg, RunReport& rep) {
  const CertifyConfig& c = cfg.certify;
  std::mt19937_64 rng(derive_seed(cfg.seed, 0xCE));
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  TrainingSlice s;
  s.X.resize(c.n, c.p);
  s.e.resize(c.n);
  for (long j = 0; j < c.p; ++j)
    for (long i = 0; i < c.n; ++i) s.X(i, j) = u(rng);
  for (long i = 0; i < c.n; ++i) s.e(i) = u(rng);
  const double h = 1.0 / (c.n + 1);
  s.A = Matrix::Zero(c.n, c.n);
  for (long i = 0; i < c.n; ++i) {
    s.A(i, i) = -2.0 / (h * h) + c.kappa * c.kappa;
    if (i > 0) s.A(i, i - 1) = 1.0 / (h * h);
    if (i + 1 < c.n) s.A(i, i + 1) = 1.0 / (h * h);
  }
  NonconvexOptions opts;
  opts.restarts = c.restarts;
  opts.schedule = LrSchedule{c.t_max, c.t_min, c.epochs};
  opts.seed = cfg.seed;
  rep.certificate = certify(s, c.width, opts);
}

}  // namespace

RunReport run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  RunReport rep;
  rep.config = cfg.entries;
  rep.config["method"] = cfg.method;
  rep.config["seed"] = std::to_string(cfg.seed);
  rep.method = cfg.method;
  rep.dim = cfg.problem.d;
  const auto t0 = Clock::now();
  try {
    if (cfg.method == "mgdl") {
      run_mgdl_method(cfg, rep);
    } else if (cfg.method == "sgdl") {
      run_sgdl_method(cfg, rep, 1);
    } else if (cfg.method == "compare") {
      run_mgdl_method(cfg, rep);
      run_sgdl_method(cfg, rep, 0);
    } else if (cfg.method == "fdm") {
      run_fdm_method(cfg, rep);
    } else if (cfg.method == "pml-mgdl") {
      rep.dim = 2;
      run_pml_method(cfg, rep);
    } else if (cfg.method == "certify") {
      run_certify_method(cfg, rep);
    } else {
      throw std::invalid_argument("unknown method '" + cfg.method + "'");
    }
  } catch (const std::exception& e) {
    rep.aborted = true;
    rep.error = e.what();
  }
  rep.total_seconds = seconds_since(t0);
  return rep;
}

nlohmann::json report_to_json(const RunReport& r, bool deterministic) {
  using nlohmann::json;
  json j;
  j["config"] = r.config;
  j["method"] = r.method;
  j["dim"] = r.dim;
  j["aborted"] = r.aborted;
  j["error"] = r.error;
  j["total_seconds"] = r.total_seconds;
  j["deterministic"] = deterministic;
  json grades = json::array();
  for (const auto& g : r.grades)
    grades.push_back({{"grade", g.grade},
                      {"depth", g.depth},
                      {"epochs", g.epochs},
                      {"adam_loss", g.adam_loss},
                      {"final_loss", g.final_loss},
                      {"wall_seconds", g.wall_seconds},
                      {"ac_time", g.ac_time},
                      {"tr_rse", g.tr_rse},
                      {"te_rse", g.te_rse},
                      {"polish", g.polish_choice}});
  j["grades"] = grades;
  json methods = json::array();
  for (const auto& m : r.methods)
    methods.push_back({{"method", m.method},
                       {"epochs", m.epochs},
                       {"final_loss", m.final_loss},
                       {"wall_seconds", m.wall_seconds},
                       {"tr_rse", m.tr_rse},
                       {"te_rse", m.te_rse},
                       {"equivalent_depth", m.equivalent_depth}});
  j["methods"] = methods;
  if (r.fdm)
    j["fdm"] = {{"solver", r.fdm->solver},
                {"relative_residual", r.fdm->relative_residual},
                {"converged", r.fdm->converged},
                {"tr_rse", r.fdm->tr_rse},
                {"te_rse_bilinear", r.fdm->te_rse_bilinear},
                {"te_rse_biquadratic", r.fdm->te_rse_biquadratic}};
  if (r.certificate) {
    const DualityReport& c = *r.certificate;
    j["certificate"] = {{"instance_hash", c.instance_hash},
                        {"p_nc", c.p_nc},
                        {"p_c", c.p_c},
                        {"m_star", c.m_star},
                        {"width", c.width},
                        {"gap", c.gap},
                        {"width_sufficient", c.width_sufficient},
                        {"reconstruction_ok", c.reconstruction_ok},
                        {"reconstruction_objective", c.reconstruction_objective},
                        {"lower_bound_holds", c.lower_bound_holds},
                        {"pattern_count", c.pattern_count},
                        {"v_norms", c.v_norms},
                        {"u_norms", c.u_norms},
                        {"diagnostic", c.diagnostic}};
  }
  j["zero_residual_seminorm"] = r.zero_residual_seminorm;
  j["final_residual_seminorm"] = r.final_residual_seminorm;
  json files = json::array();
  if (!r.loss.empty()) files.push_back("loss.csv");
  if (!r.field.empty()) files.push_back("field.csv");
  if (!r.residual.empty()) files.push_back("residual.csv");
  j["files"] = files;
  return j;
}

RunReport report_from_json(const nlohmann::json& j) {
  RunReport r;
  r.config = j.at("config").get<std::map<std::string, std::string>>();
  r.method = j.at("method").get<std::string>();
  r.dim = j.at("dim").get<int>();
  r.aborted = j.at("aborted").get<bool>();
  r.error = j.at("error").get<std::string>();
  r.total_seconds = j.at("total_seconds").get<double>();
  for (const auto& g : j.at("grades"))
    r.grades.push_back({g.at("grade").get<int>(), g.at("depth").get<int>(), g.at("epochs").get<int>(),
                        g.at("adam_loss").get<double>(), g.at("final_loss").get<double>(),
                        g.at("wall_seconds").get<double>(), g.at("ac_time").get<double>(),
                        g.at("tr_rse").get<double>(), g.at("te_rse").get<double>(), g.at("polish").get<std::string>()});
  for (const auto& m : j.at("methods"))
    r.methods.push_back({m.at("method").get<std::string>(), m.at("epochs").get<int>(),
                         m.at("final_loss").get<double>(), m.at("wall_seconds").get<double>(),
                         m.at("tr_rse").get<double>(), m.at("te_rse").get<double>(),
                         m.at("equivalent_depth").get<int>()});
  if (j.contains("fdm")) {
    const auto& f = j.at("fdm");
    r.fdm = FdmSummary{f.at("solver").get<std::string>(), f.at("relative_residual").get<double>(),
                       f.at("converged").get<bool>(), f.at("tr_rse").get<double>(),
                       f.at("te_rse_bilinear").get<double>(), f.at("te_rse_biquadratic").get<double>()};
  }
  if (j.contains("certificate")) {
    const auto& c = j.at("certificate");
    DualityReport d;
    d.instance_hash = c.at("instance_hash").get<std::string>();
    d.p_nc = c.at("p_nc").get<double>();
    d.p_c = c.at("p_c").get<double>();
    d.m_star = c.at("m_star").get<int>();
    d.width = c.at("width").get<int>();
    d.gap = c.at("gap").get<double>();
    d.width_sufficient = c.at("width_sufficient").get<bool>();
    d.reconstruction_ok = c.at("reconstruction_ok").get<bool>();
    d.reconstruction_objective = c.at("reconstruction_objective").get<double>();
    d.lower_bound_holds = c.at("lower_bound_holds").get<bool>();
    d.pattern_count = c.at("pattern_count").get<std::size_t>();
    d.v_norms = c.at("v_norms").get<std::vector<double>>();
    d.u_norms = c.at("u_norms").get<std::vector<double>>();
    d.diagnostic = c.at("diagnostic").get<std::string>();
    r.certificate = d;
  }
  r.zero_residual_seminorm = j.at("zero_residual_seminorm").get<double>();
  r.final_residual_seminorm = j.at("final_residual_seminorm").get<double>();
  return r;
}

namespace {

void write_field(const std::string& path, const std::vector<FieldRow>& rows, int dim) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw std::runtime_error("cannot write '" + path + "'");
  std::fputs(dim == 3 ? "x,y,z,re,im\n" : "x,y,re,im\n", f);
  for (const auto& r : rows) {
    if (dim == 3)
      std::fprintf(f, "%.17g,%.17g,%.17g,%.17g,%.17g\n", r.x[0], r.x[1], r.x[2], r.value.real(), r.value.imag());
    else
      std::fprintf(f, "%.17g,%.17g,%.17g,%.17g\n", r.x[0], r.x[1], r.value.real(), r.value.imag());
  }
  std::fclose(f);
}

}  // namespace

void write_outputs(const RunReport& report, const std::string& dir, bool deterministic) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw std::runtime_error("cannot create output directory '" + dir + "'");
  {
    std::ofstream out(fs::path(dir) / "report.json");
    if (!out) throw std::runtime_error("cannot write report.json in '" + dir + "'");
    out << report_to_json(report, deterministic).dump(2) << '\n';
  }
  if (!report.loss.empty()) {
    const std::string path = (fs::path(dir) / "loss.csv").string();
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw std::runtime_error("cannot write '" + path + "'");
    std::fputs("grade,epoch,loss,lr,elapsed_seconds\n", f);
    for (const auto& r : report.loss) {
      if (deterministic)
        std::fprintf(f, "%d,%d,%.17g,%.17g,\n", r.grade, r.epoch, r.loss, r.lr);
      else
        std::fprintf(f, "%d,%d,%.17g,%.17g,%.3f\n", r.grade, r.epoch, r.loss, r.lr, r.elapsed);
    }
    std::fclose(f);
  }
  const int dim = report.method == "pml-mgdl" ? 2 : report.dim;
  if (!report.field.empty()) write_field((fs::path(dir) / "field.csv").string(), report.field, dim);
  if (!report.residual.empty()) write_field((fs::path(dir) / "residual.csv").string(), report.residual, dim);
  for (std::size_t g = 0; g < report.grade_fields.size(); ++g)
    write_field((fs::path(dir) / ("field_grade" + std::to_string(g + 1) + ".csv")).string(), report.grade_fields[g], 2);
}

}  // namespace fdmgdl
