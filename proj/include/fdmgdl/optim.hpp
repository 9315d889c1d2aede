#pragma once

#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fdmgdl/types.hpp"

namespace fdmgdl {

struct LrSchedule {
  double t_max = 1e-3;
  double t_min = 1e-3;
  int epochs = 0;  // K

  void validate() const;
  double gamma() const;
};

double lr_at(const LrSchedule& s, int k);

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class AdamState {
 public:
  AdamState() = default;
  explicit AdamState(std::size_t n, AdamConfig cfg = {});

  void step(std::span<double> params, std::span<const double> grads, double lr);
  long steps() const { return t_; }
  const Vector& first_moment() const { return m_; }
  const Vector& second_moment() const { return v_; }

 private:
  AdamConfig cfg_;
  Vector m_, v_;
  long t_ = 0;
  double beta1_pow_ = 1.0;
  double beta2_pow_ = 1.0;
};

struct StoppingRule {
  int max_epochs = -1;  // negative: use the schedule's K
  double loss_delta_tol = 0.0;
};

class TrainingDiverged : public std::runtime_error {
 public:
  TrainingDiverged(int epoch, const std::string& what)
      : std::runtime_error(what), epoch_(epoch) {}
  int epoch() const { return epoch_; }

 private:
  int epoch_;
};

struct LossCurve {
  std::vector<double> loss;     // loss at the start of each epoch
  std::vector<double> lr;       // rate used for the step of that epoch
  std::vector<double> elapsed;  // seconds since training began, at epoch end
  double wall_seconds = 0.0;
  int epochs() const { return static_cast<int>(loss.size()); }
};

// Returns the loss at params and writes its gradient into grad.
using LossAndGrad = std::function<double(std::span<const double> params, std::span<double> grad)>;

/// Full-batch Adam with exponential rate decay. Epoch k evaluates the loss,
/// checks the plateau rule against epoch k-1, then steps with lr_at(k).
LossCurve train(std::span<double> params, const LossAndGrad& loss_and_grad,
                const LrSchedule& schedule, const StoppingRule& stop, const AdamConfig& adam = {});

}  // namespace fdmgdl
