#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fdmgdl/helmholtz_fd.hpp"
#include "fdmgdl/optim.hpp"
#include "fdmgdl/types.hpp"

namespace fdmgdl {

/// One grade's regression data at certifier scale: objective ||e - A sum_j (X w_j)_+ alpha_j||^2.
struct TrainingSlice {
  Matrix X;  // n x p, rows are features of the nodes
  Vector e;  // n, target residual
  Matrix A;  // n x n, discrete operator

  void validate() const;
  int n() const { return static_cast<int>(X.rows()); }
  int p() const { return static_cast<int>(X.cols()); }
};

// Slice from frozen features (p x n, one column per node) and a real system.
TrainingSlice make_slice(const Matrix& features, const InteriorField& target, const FdSystem& sys);

struct PatternSet {
  std::vector<Eigen::VectorXi> patterns;  // D_i as 0/1 vectors
  std::vector<Vector> witnesses;          // 1[X w_i >= 0] = D_i
  std::size_t size() const { return patterns.size(); }
};

inline constexpr int kMaxCertifierRows = 12;
inline constexpr int kMaxCertifierCols = 4;

PatternSet enumerate_patterns(const Matrix& X, double margin = 1e-9);

// Number of sign patterns 2 sum_{j<p} C(n-1, j) reachable with nonzero w.
long pattern_bound(int n, int p);

enum class ConvexMethod { ConeRays, PenaltyHomotopy };

struct ConvexSolution {
  std::vector<Vector> v, u;  // per pattern, in R^p
  double objective = 0.0;    // P_c
  double feasibility_violation = 0.0;
  double stationarity = 0.0;  // projected gradient norm, penalty method only
  bool converged = false;
  std::string diagnostic;
};

ConvexSolution solve_convex_program(const TrainingSlice& slice, const PatternSet& patterns,
                                    ConvexMethod method = ConvexMethod::ConeRays);

double convex_objective(const TrainingSlice& slice, const PatternSet& patterns, const ConvexSolution& sol);

/// Bias-free two-layer ReLU network t -> sum_j (t.w_j)_+ alpha_j.
struct TwoLayerRelu {
  Matrix W;      // p x width, column j is w_j
  Vector alpha;  // width
  int width() const { return static_cast<int>(alpha.size()); }
};

int m_star(const ConvexSolution& sol, double zero_tol = 0.0);

TwoLayerRelu reconstruct_weights(const ConvexSolution& sol, int width);

double nonconvex_objective(const TrainingSlice& slice, const TwoLayerRelu& net);
// Objective and its gradient with respect to (W, alpha), W column-major first.
double nonconvex_loss_and_grad(const TrainingSlice& slice, const TwoLayerRelu& net, std::span<double> grad);

struct NonconvexOptions {
  int restarts = 20;
  LrSchedule schedule{1e-2, 1e-4, 3000};
  std::uint64_t seed = 0;
  std::vector<TwoLayerRelu> extra_starts;  // trained in addition to the random restarts
};

struct NonconvexResult {
  double best = 0.0;  // P_nc
  TwoLayerRelu best_net;
  std::vector<double> restart_values;
  int discarded = 0;
};

NonconvexResult solve_nonconvex_multistart(const TrainingSlice& slice, int width, const NonconvexOptions& opts);

struct DualityReport {
  std::string instance_hash;
  double p_nc = 0.0;
  double p_c = 0.0;
  int m_star = 0;
  int width = 0;
  double gap = 0.0;
  bool width_sufficient = true;
  bool reconstruction_ok = false;
  double reconstruction_objective = 0.0;
  bool lower_bound_holds = true;
  std::size_t pattern_count = 0;
  std::vector<double> v_norms, u_norms;
  std::string diagnostic;
};

// A negative width certifies at exactly m*.
DualityReport certify(const TrainingSlice& slice, int width, const NonconvexOptions& opts = {});

std::string slice_hash(const TrainingSlice& slice);

}  // namespace fdmgdl
