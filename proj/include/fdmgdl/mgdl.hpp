#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "fdmgdl/helmholtz_fd.hpp"
#include "fdmgdl/net.hpp"
#include "fdmgdl/optim.hpp"

namespace fdmgdl {

struct GradeSchedule {
  double t_max = 1e-3;
  double t_min = 1e-3;
  int epochs = 0;
};

struct AdaptiveConfig {
  double grade_tol = 1e-10;  // stop when consecutive grade losses differ by at most this
  int max_grades = 10;
  std::vector<GradeSchedule> schedules;  // grade l uses entry l-1; the last entry repeats
  int width = 256;
  // Hidden layers per grade. Empty: two sine layers for grade 1 and one ReLU
  // layer afterwards, with the adaptive stopping rule. Non-empty: exactly
  // structure.size() grades.
  std::vector<int> structure;
  double first_layer_scale = 1.0;
  double epoch_loss_tol = 0.0;
  bool polish = true;
  std::uint64_t seed = 0;

  void validate() const;
  const GradeSchedule& schedule_for(int grade) const;  // 1-based
  int hidden_layers_for(int grade) const;
};

struct GradeRecord {
  Mlp net;  // hidden layers form the frozen feature map, the last layer is g_l*
  int grade = 0;
  LossCurve curve;
  double adam_loss = 0.0;   // loss after the Adam phase
  double final_loss = 0.0;  // grade loss after polish
  double wall_seconds = 0.0;
  PolishResult polish;
  bool polished = false;
};

/// Cumulative model: sum of grade corrections, each acting on the frozen
/// features of the grade before it.
class MgdlModel {
 public:
  MgdlModel() = default;
  MgdlModel(int input_dim, int channels) : input_dim_(input_dim), channels_(channels) {}

  int input_dim() const { return input_dim_; }
  int channels() const { return channels_; }
  int grade_count() const { return static_cast<int>(grades_.size()); }
  const std::vector<GradeRecord>& grades() const { return grades_; }
  int equivalent_depth() const;

  // Input width of the next grade.
  int next_input_dim() const;
  Mlp new_grade(int width, ActivationKind activation, int hidden_layers, std::uint64_t seed,
                double first_layer_scale = 1.0) const;
  void append(GradeRecord rec);

  // Sum of frozen corrections, plus the trainable grade's output when given.
  Matrix evaluate(const Matrix& inputs, const Mlp* trainable = nullptr) const;
  // Frozen features h_L of the last grade (the inputs when no grade exists).
  Matrix features(const Matrix& inputs) const;
  // Output of each grade separately.
  std::vector<Matrix> grade_outputs(const Matrix& inputs) const;

 private:
  int input_dim_ = 0;
  int channels_ = 1;
  std::vector<GradeRecord> grades_;
};

struct MgdlRun {
  MgdlModel model;
  std::vector<double> grade_losses;  // L_l*
  std::vector<double> ac_times;      // prefix sums of grade wall times
  bool aborted = false;
  std::string error;
};

// Called after every completed grade.
using GradeObserver = std::function<void(const MgdlModel&, const GradeRecord&)>;

/// Grade loop on an assembled system. Inputs are normalized node coordinates.
MgdlRun run_mgdl(const FdSystem& sys, const Matrix& inputs, const AdaptiveConfig& cfg,
                 const GradeObserver& observer = {});

MgdlRun run_adaptive(const ProblemSpec& spec, const AdaptiveConfig& cfg,
                     StencilOrder order = StencilOrder::Second, const GradeObserver& observer = {});

// Residual f - A_h s_L* of the frozen cumulative model on the training grid.
InteriorField grade_residual(const MgdlModel& model, const ProblemSpec& spec, const Grid& grid,
                             StencilOrder order = StencilOrder::Second);

struct SingleNetConfig {
  int width = 256;
  std::vector<ActivationKind> hidden;  // e.g. sine x2 followed by ReLU x5
  GradeSchedule schedule;
  double first_layer_scale = 1.0;
  double epoch_loss_tol = 0.0;
  std::uint64_t seed = 0;
};

struct SingleNetRun {
  Mlp net;
  LossCurve curve;
  double final_loss = 0.0;
  bool aborted = false;
  std::string error;
};

/// One deep network trained end to end with Adam.
SingleNetRun run_single_network(const FdSystem& sys, const Matrix& inputs, const SingleNetConfig& cfg);

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace fdmgdl
