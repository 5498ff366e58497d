#pragma once

#include <complex>

#include <Eigen/Dense>

namespace atvmc {

using Real = double;
using Complex = std::complex<double>;

using VectorXr = Eigen::VectorXd;
using VectorXc = Eigen::VectorXcd;
using MatrixXc = Eigen::MatrixXcd;

inline constexpr Complex kImaginaryUnit{0.0, 1.0};

}  // namespace atvmc
