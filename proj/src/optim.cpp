#include "fdmgdl/optim.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace fdmgdl {

void LrSchedule::validate() const {
  if (!(t_max > 0.0) || !(t_min > 0.0)) throw std::invalid_argument("LrSchedule: rates must be positive");
  if (t_min > t_max) throw std::invalid_argument("LrSchedule: t_min must not exceed t_max");
  if (epochs < 0) throw std::invalid_argument("LrSchedule: negative epoch budget");
}

double LrSchedule::gamma() const {
  if (epochs == 0) return 0.0;
  return std::log(t_max / t_min) / epochs;
}

double lr_at(const LrSchedule& s, int k) {
  s.validate();
  if (k < 0 || k > s.epochs)
    throw std::out_of_range("lr_at: epoch " + std::to_string(k) + " outside 0.." +
                            std::to_string(s.epochs));
  if (k == s.epochs) return s.t_min;
  return s.t_max * std::exp(-s.gamma() * k);
}

AdamState::AdamState(std::size_t n, AdamConfig cfg)
    : cfg_(cfg), m_(Vector::Zero(static_cast<long>(n))), v_(Vector::Zero(static_cast<long>(n))) {}

void AdamState::step(std::span<double> params, std::span<const double> grads, double lr) {
  const long n = m_.size();
  if (static_cast<long>(params.size()) != n || static_cast<long>(grads.size()) != n)
    throw std::invalid_argument("adam_step: parameter/gradient size mismatch");
  for (long i = 0; i < n; ++i)
    if (!std::isfinite(grads[i]))
      throw std::domain_error("adam_step: non-finite gradient at parameter " + std::to_string(i));
  ++t_;
  beta1_pow_ *= cfg_.beta1;
  beta2_pow_ *= cfg_.beta2;
  const double c1 = 1.0 - beta1_pow_;
  const double c2 = 1.0 - beta2_pow_;
  const double b1 = cfg_.beta1, b2 = cfg_.beta2;
  double* m = m_.data();
  double* v = v_.data();
  for (long i = 0; i < n; ++i) {
    const double g = grads[i];
    m[i] = b1 * m[i] + (1.0 - b1) * g;
    v[i] = b2 * v[i] + (1.0 - b2) * g * g;
    const double mhat = m[i] / c1;
    const double vhat = v[i] / c2;
    params[i] -= lr * mhat / (std::sqrt(vhat) + cfg_.eps);
  }
}

LossCurve train(std::span<double> params, const LossAndGrad& loss_and_grad,
                const LrSchedule& schedule, const StoppingRule& stop, const AdamConfig& adam) {
  schedule.validate();
  LossCurve curve;
  const auto start = std::chrono::steady_clock::now();
  const int K = stop.max_epochs < 0 ? schedule.epochs : std::min(stop.max_epochs, schedule.epochs);
  AdamState state(params.size(), adam);
  std::vector<double> grad(params.size());
  for (int k = 0; k < K; ++k) {
    std::fill(grad.begin(), grad.end(), 0.0);
    const double loss = loss_and_grad(params, grad);
    if (!std::isfinite(loss))
      throw TrainingDiverged(k, "training diverged: non-finite loss at epoch " + std::to_string(k));
    const double lr = lr_at(schedule, k);
    const bool plateau = k > 0 && std::abs(loss - curve.loss.back()) < stop.loss_delta_tol;
    curve.loss.push_back(loss);
    curve.lr.push_back(lr);
    if (!plateau) {
      try {
        state.step(params, grad, lr);
      } catch (const std::domain_error& e) {
        throw TrainingDiverged(k, std::string(e.what()) + " at epoch " + std::to_string(k));
      }
    }
    curve.elapsed.push_back(
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
    if (plateau) break;
  }
  curve.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return curve;
}

}  // namespace fdmgdl
