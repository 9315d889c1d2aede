#include "fdmgdl/mgdl.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

namespace fdmgdl {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

void AdaptiveConfig::validate() const {
  if (!(grade_tol > 0.0)) throw std::invalid_argument("AdaptiveConfig: grade_tol must be positive");
  if (max_grades < 1) throw std::invalid_argument("AdaptiveConfig: max_grades must be at least 1");
  if (width <= 0) throw std::invalid_argument("AdaptiveConfig: width must be positive");
  if (schedules.empty()) throw std::invalid_argument("AdaptiveConfig: at least one grade schedule is required");
  for (const auto& s : schedules) LrSchedule{s.t_max, s.t_min, s.epochs}.validate();
  for (int h : structure)
    if (h < 1) throw std::invalid_argument("AdaptiveConfig: every grade needs a hidden layer");
}

const GradeSchedule& AdaptiveConfig::schedule_for(int grade) const {
  const std::size_t i = static_cast<std::size_t>(grade - 1);
  return i < schedules.size() ? schedules[i] : schedules.back();
}

int AdaptiveConfig::hidden_layers_for(int grade) const {
  if (!structure.empty()) return structure[static_cast<std::size_t>(grade - 1)];
  return grade == 1 ? 2 : 1;
}

int MgdlModel::equivalent_depth() const {
  int total = 0;
  for (const auto& g : grades_) total += g.net.depth();
  return grades_.empty() ? 0 : total - grade_count() + 1;
}

int MgdlModel::next_input_dim() const {
  return grades_.empty() ? input_dim_ : grades_.back().net.feature_dim();
}

Mlp MgdlModel::new_grade(int width, ActivationKind activation, int hidden_layers, std::uint64_t seed,
                         double first_layer_scale) const {
  if (width <= 0) throw std::invalid_argument("new_grade: width must be positive");
  if (hidden_layers < 1) throw std::invalid_argument("new_grade: need at least one hidden layer");
  std::vector<int> widths{next_input_dim()};
  for (int i = 0; i < hidden_layers; ++i) widths.push_back(width);
  widths.push_back(channels_);
  const std::vector<ActivationKind> acts(static_cast<std::size_t>(hidden_layers), activation);
  return xavier_init(widths, acts, seed, first_layer_scale);
}

void MgdlModel::append(GradeRecord rec) {
  if (rec.net.input_dim() != next_input_dim() || rec.net.output_dim() != channels_)
    throw std::invalid_argument("MgdlModel::append: grade shape does not fit the model");
  grades_.push_back(std::move(rec));
}

Matrix MgdlModel::evaluate(const Matrix& inputs, const Mlp* trainable) const {
  if (inputs.rows() != input_dim_) throw std::invalid_argument("MgdlModel::evaluate: dimension mismatch");
  Matrix total = Matrix::Zero(channels_, inputs.cols());
  Matrix h = inputs;
  for (const auto& g : grades_) {
    Matrix f = g.net.feature(h);
    total += g.net.output_from_features(f);
    h = std::move(f);
  }
  if (trainable) total += trainable->forward(h);
  return total;
}

Matrix MgdlModel::features(const Matrix& inputs) const {
  Matrix h = inputs;
  for (const auto& g : grades_) h = g.net.feature(h);
  return h;
}

std::vector<Matrix> MgdlModel::grade_outputs(const Matrix& inputs) const {
  std::vector<Matrix> outs;
  Matrix h = inputs;
  for (const auto& g : grades_) {
    Matrix f = g.net.feature(h);
    outs.push_back(g.net.output_from_features(f));
    h = std::move(f);
  }
  return outs;
}

MgdlRun run_mgdl(const FdSystem& sys, const Matrix& inputs, const AdaptiveConfig& cfg,
                 const GradeObserver& observer) {
  cfg.validate();
  if (inputs.cols() != sys.size()) throw std::invalid_argument("run_mgdl: one input column per interior node");
  MgdlRun run;
  run.model = MgdlModel(static_cast<int>(inputs.rows()), sys.channels);
  const FdObjective obj(sys);
  InteriorField target = sys.rhs;
  Matrix H = inputs;
  double prev = std::numeric_limits<double>::infinity();
  double ac = 0.0;
  const int last = cfg.structure.empty() ? cfg.max_grades : static_cast<int>(cfg.structure.size());

  for (int l = 1; l <= last; ++l) {
    const auto start = std::chrono::steady_clock::now();
    const GradeSchedule& gs = cfg.schedule_for(l);
    const ActivationKind act = l == 1 ? ActivationKind::Sine : ActivationKind::Relu;
    GradeRecord rec;
    rec.grade = l;
    rec.net = run.model.new_grade(cfg.width, act, cfg.hidden_layers_for(l), derive_seed(cfg.seed, l),
                                  l == 1 ? cfg.first_layer_scale : 1.0);
    Mlp& net = rec.net;
    TrainingWorkspace ws;
    try {
      rec.curve = train(
          net.params(),
          [&](std::span<const double>, std::span<double> grad) {
            return network_loss_and_grad(net, H, obj, target, grad, &ws);
          },
          LrSchedule{gs.t_max, gs.t_min, gs.epochs}, StoppingRule{-1, cfg.epoch_loss_tol});
    } catch (const TrainingDiverged& e) {
      run.aborted = true;
      run.error = "grade " + std::to_string(l) + ": " + e.what();
      return run;
    }
    const Matrix features = net.feature(H);
    rec.adam_loss = obj.loss(net.output_from_features(features), target);
    rec.final_loss = rec.adam_loss;
    if (cfg.polish) {
      rec.polish = polish_output_layer(net, features, obj, target);
      rec.polished = true;
      rec.final_loss = rec.polish.loss_after;
    } else if (!std::isfinite(rec.adam_loss)) {
      run.aborted = true;
      run.error = "grade " + std::to_string(l) + ": non-finite loss after training";
      return run;
    }
    target -= obj.apply(net.output_from_features(features));
    rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    ac += rec.wall_seconds;

    const double L = rec.final_loss;
    run.grade_losses.push_back(L);
    run.ac_times.push_back(ac);
    H = features;
    run.model.append(std::move(rec));
    if (observer) observer(run.model, run.model.grades().back());

    if (cfg.structure.empty() && !(std::abs(L - prev) > cfg.grade_tol)) break;
    prev = L;
  }
  return run;
}

MgdlRun run_adaptive(const ProblemSpec& spec, const AdaptiveConfig& cfg, StencilOrder order,
                     const GradeObserver& observer) {
  const Grid grid(spec.grid);
  const FdSystem sys = assemble_system(spec, grid, order);
  return run_mgdl(sys, normalized_inputs(grid.interior_points(), spec.grid), cfg, observer);
}

InteriorField grade_residual(const MgdlModel& model, const ProblemSpec& spec, const Grid& grid,
                             StencilOrder order) {
  const Matrix x = normalized_inputs(grid.interior_points(), spec.grid);
  const InteriorField y = outputs_to_field(model.evaluate(x));
  const InteriorField Av = apply_discrete_operator(lift(y, spec, grid), spec, grid, order);
  InteriorField r(Av.size());
  for (long k = 0; k < r.size(); ++k) r[k] = spec.source(grid.interior_points()[static_cast<std::size_t>(k)]) - Av[k];
  return r;
}

SingleNetRun run_single_network(const FdSystem& sys, const Matrix& inputs, const SingleNetConfig& cfg) {
  if (cfg.hidden.empty()) throw std::invalid_argument("run_single_network: no hidden layers");
  std::vector<int> widths{static_cast<int>(inputs.rows())};
  for (std::size_t i = 0; i < cfg.hidden.size(); ++i) widths.push_back(cfg.width);
  widths.push_back(sys.channels);
  SingleNetRun run;
  run.net = xavier_init(widths, cfg.hidden, derive_seed(cfg.seed, 0), cfg.first_layer_scale);
  const FdObjective obj(sys);
  Mlp& net = run.net;
  TrainingWorkspace ws;
  try {
    run.curve = train(
        net.params(),
        [&](std::span<const double>, std::span<double> grad) {
          return network_loss_and_grad(net, inputs, obj, sys.rhs, grad, &ws);
        },
        LrSchedule{cfg.schedule.t_max, cfg.schedule.t_min, cfg.schedule.epochs},
        StoppingRule{-1, cfg.epoch_loss_tol});
  } catch (const TrainingDiverged& e) {
    run.aborted = true;
    run.error = e.what();
    return run;
  }
  run.final_loss = obj.loss(net.forward(inputs), sys.rhs);
  return run;
}

}  // namespace fdmgdl
