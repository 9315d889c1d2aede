#pragma once

#include <stdexcept>

#include "fdmgdl/types.hpp"

namespace fdmgdl {

/// Relative squared error sum |p - t|^2 / sum |t|^2.
template <typename Derived1, typename Derived2>
double rse(const Eigen::MatrixBase<Derived1>& predictions, const Eigen::MatrixBase<Derived2>& targets) {
  if (predictions.size() != targets.size()) throw std::invalid_argument("rse: length mismatch");
  const double den = targets.squaredNorm();
  if (!(den > 0.0)) throw std::invalid_argument("rse: targets are all zero");
  return (predictions - targets).squaredNorm() / den;
}

}  // namespace fdmgdl
