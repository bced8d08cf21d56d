// geom.hpp — shared scalar/vector aliases and physical constants
#pragma once

#include <Eigen/Dense>
#include <complex>

namespace mimoscatter {

using cplx = std::complex<double>;
using Vec3 = Eigen::Vector3d;
using CVec3 = Eigen::Vector3cd;
using Mat3 = Eigen::Matrix3d;
using CMat3 = Eigen::Matrix3cd;
using Eigen::MatrixXcd;
using Eigen::VectorXcd;

inline constexpr cplx J{0.0, 1.0};

namespace constants {
inline constexpr double c0 = 2.99792458e8;           // m/s
inline constexpr double mu0 = 4.0e-7 * 3.14159265358979323846;  // H/m
inline constexpr double pi = 3.14159265358979323846;
inline constexpr double eps0 = 1.0 / (mu0 * c0 * c0);  // F/m
}  // namespace constants

}  // namespace mimoscatter
