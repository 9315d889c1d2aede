#include "fdmgdl/nnls.hpp"

#include <Eigen/Dense>
#include <limits>
#include <stdexcept>
#include <vector>

namespace fdmgdl {

namespace {

Vector solve_passive(const Matrix& A, const Vector& b, const std::vector<long>& passive) {
  Matrix Ap(A.rows(), static_cast<long>(passive.size()));
  for (std::size_t k = 0; k < passive.size(); ++k) Ap.col(static_cast<long>(k)) = A.col(passive[k]);
  return Ap.colPivHouseholderQr().solve(b);
}

}  // namespace

NnlsResult nnls(const Matrix& A, const Vector& b, int max_iterations, double tol) {
  if (A.rows() != b.size()) throw std::invalid_argument("nnls: size mismatch");
  const long n = A.cols();
  if (max_iterations < 0) max_iterations = static_cast<int>(3 * n + 50);
  if (tol < 0.0) tol = 1e-12 * std::max(1.0, A.cwiseAbs().maxCoeff()) * std::max(1.0, b.cwiseAbs().maxCoeff()) *
                       static_cast<double>(std::max<long>(A.rows(), 1));

  NnlsResult res;
  res.x = Vector::Zero(n);
  std::vector<bool> in_passive(static_cast<std::size_t>(n), false);
  Vector w = A.transpose() * (b - A * res.x);

  int outer = 0;
  for (; outer < max_iterations; ++outer) {
    long t = -1;
    double best = tol;
    for (long j = 0; j < n; ++j)
      if (!in_passive[static_cast<std::size_t>(j)] && w(j) > best) {
        best = w(j);
        t = j;
      }
    if (t < 0) {
      res.converged = true;
      break;
    }
    in_passive[static_cast<std::size_t>(t)] = true;

    for (int inner = 0; inner < 3 * n + 10; ++inner) {
      std::vector<long> passive;
      for (long j = 0; j < n; ++j)
        if (in_passive[static_cast<std::size_t>(j)]) passive.push_back(j);
      const Vector z = solve_passive(A, b, passive);
      bool all_positive = true;
      for (Eigen::Index k = 0; k < z.size(); ++k)
        if (z(k) <= 0.0) all_positive = false;
      if (all_positive) {
        res.x.setZero();
        for (std::size_t k = 0; k < passive.size(); ++k) res.x(passive[k]) = z(static_cast<long>(k));
        break;
      }
      double alpha = std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < passive.size(); ++k) {
        const double zk = z(static_cast<long>(k));
        if (zk <= 0.0) {
          const double xk = res.x(passive[k]);
          alpha = std::min(alpha, xk / (xk - zk));
        }
      }
      for (std::size_t k = 0; k < passive.size(); ++k) {
        const long j = passive[k];
        res.x(j) += alpha * (z(static_cast<long>(k)) - res.x(j));
        if (res.x(j) <= tol) {
          res.x(j) = 0.0;
          in_passive[static_cast<std::size_t>(j)] = false;
        }
      }
    }
    w = A.transpose() * (b - A * res.x);
  }
  res.iterations = outer;
  res.residual_sq = (A * res.x - b).squaredNorm();
  return res;
}

}  // namespace fdmgdl
