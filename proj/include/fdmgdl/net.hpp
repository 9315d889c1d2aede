#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "fdmgdl/types.hpp"

namespace fdmgdl {

enum class ActivationKind { Sine, Relu, Identity };

std::string to_string(ActivationKind a);
ActivationKind activation_from_string(const std::string& s);

// Pre-activations and activations of one batch, kept for backward.
struct ForwardCache {
  std::vector<Matrix> z;  // z[l]: pre-activation of hidden layer l
  std::vector<Matrix> a;  // a[l]: activation of hidden layer l
  std::vector<Matrix> dz; // dz[l]: activation derivative at z[l]
  const Matrix* input = nullptr;
  long points = 0;
  // Scratch reused by backward across calls.
  mutable Matrix delta, next, wt, dw;
};

/// Dense feed-forward network with an affine output layer.
///
/// Parameters live in one flat buffer, layer by layer: W (column-major,
/// d_j x d_{j-1}) followed by b (d_j).
class Mlp {
 public:
  Mlp() = default;
  Mlp(std::vector<int> widths, std::vector<ActivationKind> hidden);

  int depth() const { return static_cast<int>(widths_.size()) - 1; }
  int input_dim() const { return widths_.front(); }
  int output_dim() const { return widths_.back(); }
  int feature_dim() const { return widths_[widths_.size() - 2]; }
  const std::vector<int>& widths() const { return widths_; }
  const std::vector<ActivationKind>& activations() const { return hidden_; }

  std::size_t param_count() const { return params_.size(); }
  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }

  Eigen::Map<Matrix> weight(int layer);
  Eigen::Map<const Matrix> weight(int layer) const;
  Eigen::Map<Vector> bias(int layer);
  Eigen::Map<const Vector> bias(int layer) const;
  std::size_t weight_offset(int layer) const { return offsets_[layer]; }

  // Batch evaluation; columns of x are points. Output is (d_D x n).
  Matrix forward(const Matrix& x, ForwardCache* cache = nullptr) const;
  Vector forward_point(const Vector& x) const;

  // Output of the last hidden layer for each column of x.
  Matrix feature(const Matrix& x) const;

  // Output layer applied to given features.
  Matrix output_from_features(const Matrix& features) const;

  // Adds d<cotangent, forward(x)>/dtheta, summed over the batch, into grad.
  void backward(const ForwardCache& cache, const Matrix& cotangent, std::span<double> grad) const;

  std::uint64_t checksum() const;

  void save(std::ostream& os) const;
  static Mlp load(std::istream& is);

 private:
  std::vector<int> widths_;
  std::vector<ActivationKind> hidden_;
  std::vector<double> params_;
  std::vector<std::size_t> offsets_;
};

// Uniform +-sqrt(6/(fan_in+fan_out)) weights times the per-layer scale, zero biases.
Mlp xavier_init(const std::vector<int>& widths, const std::vector<ActivationKind>& hidden,
                std::uint64_t seed, double first_layer_scale = 1.0);

}  // namespace fdmgdl
