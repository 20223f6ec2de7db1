#pragma once

#include <Eigen/Dense>
#include <complex>

namespace bdirs {

using Complex = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using RVec = Eigen::VectorXd;

inline constexpr double kSpeedOfLight = 299792458.0;  // m/s

}  // namespace bdirs
