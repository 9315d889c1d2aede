#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/SparseCore>

#include "fdmgdl/grid.hpp"
#include "fdmgdl/net.hpp"
#include "fdmgdl/types.hpp"

namespace fdmgdl {

enum class StencilOrder { Second, Fourth };

/// Dirichlet problem (Delta + kappa^2) u = f in (a,b)^d, u = g on the boundary.
struct ProblemSpec {
  std::string name;
  GridSpec grid;
  RealFn kappa;
  ComplexFn source;
  ComplexFn boundary;
  std::optional<ComplexFn> exact;
  int channels = 1;  // 1: real valued, 2: complex valued (real and imaginary outputs)

  void validate() const;
};

// Values on all (m+2)^d closure nodes, closure row-major order.
using NodeField = CVector;
// Values on the m^d interior nodes, interior row-major order.
using InteriorField = CVector;

using ModelEval = std::function<Complex(const Point&)>;

/// Sparse linear system over interior nodes: residual(y) = rhs - A y.
struct FdSystem {
  Eigen::SparseMatrix<Complex, Eigen::RowMajor> A;
  InteriorField rhs;
  int channels = 1;
  long size() const { return rhs.size(); }
};

Complex lifted_eval(const ModelEval& model, const ProblemSpec& spec, const Grid& grid, const Point& x);

// Closure field with interior values from `interior` and boundary values from g.
NodeField lift(const InteriorField& interior, const ProblemSpec& spec, const Grid& grid);

InteriorField apply_discrete_operator(const NodeField& v, const ProblemSpec& spec, const Grid& grid,
                                      StencilOrder order);

InteriorField residual(const ModelEval& model, const ProblemSpec& spec, const Grid& grid,
                       StencilOrder order);
double loss(const ModelEval& model, const ProblemSpec& spec, const Grid& grid, StencilOrder order);

double seminorm(const InteriorField& v);
double seminorm(const Vector& v);

FdSystem assemble_system(const ProblemSpec& spec, const Grid& grid, StencilOrder order);

// Interior coordinates mapped to [0,1]^d, one column per node.
Matrix normalized_inputs(const std::vector<Point>& points, const GridSpec& g);

// Network outputs (channels x n) as interior values.
InteriorField outputs_to_field(const Matrix& y);
Matrix field_to_outputs(const InteriorField& v, int channels);

/// Mean squared residual magnitude of a target minus A y and its cotangent.
class FdObjective {
 public:
  explicit FdObjective(const FdSystem& sys);

  const FdSystem& system() const { return *sys_; }
  long size() const { return sys_->size(); }

  InteriorField residual(const Matrix& y, const InteriorField& target) const;
  double loss(const Matrix& y, const InteriorField& target) const;
  // dL/dy for L = mean |r|^2, r = target - A y.
  Matrix cotangent(const InteriorField& r) const;
  InteriorField apply(const Matrix& y) const;
  const Eigen::SparseMatrix<Complex, Eigen::RowMajor>& adjoint() const { return AH_; }

 private:
  const FdSystem* sys_;
  Eigen::SparseMatrix<Complex, Eigen::RowMajor> AH_;
};

// Buffers kept alive across training epochs.
struct TrainingWorkspace {
  ForwardCache cache;
  Matrix y, cot;
  InteriorField field, r, w;
};

// Loss and gradient of a network whose outputs at `inputs` are interior values.
double network_loss_and_grad(const Mlp& net, const Matrix& inputs, const FdObjective& obj,
                             const InteriorField& target, std::span<double> grad,
                             TrainingWorkspace* ws = nullptr);

std::vector<double> loss_gradient(const Mlp& net, const ProblemSpec& spec, const Grid& grid,
                                  StencilOrder order);

struct PolishResult {
  enum class Choice { LeastSquares, Current, Zero };
  Choice choice = Choice::Current;
  double loss_before = 0.0;  // with the incoming output layer
  double loss_zero = 0.0;    // with a zero output layer
  double loss_after = 0.0;
  bool solve_failed = false;
};

std::string to_string(PolishResult::Choice c);

/// Least-squares refit of the output layer on frozen features.
PolishResult polish_output_layer(Mlp& net, const Matrix& features, const FdObjective& obj,
                                 const InteriorField& target, double ridge = 1e-12);

}  // namespace fdmgdl
