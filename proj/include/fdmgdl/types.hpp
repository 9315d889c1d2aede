#pragma once

#include <array>
#include <complex>
#include <functional>

#include <Eigen/Core>

namespace fdmgdl {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using CVector = Eigen::VectorXcd;

// Coordinates beyond the active dimension are zero.
using Point = std::array<double, 3>;

using RealFn = std::function<double(const Point&)>;
using ComplexFn = std::function<Complex(const Point&)>;

}  // namespace fdmgdl
