#pragma once

#include "spillfree/types.hpp"

namespace spillfree {

/// Continuous state-space model linearized about the hanging equilibrium.
/// Output y = [x - l*th, y + l*ph, z, dx - l*dth, dy + l*dph, dz] with the
/// constant -l of the z output carried in output_offset (no feedthrough).
struct ContinuousModel {
    Eigen::Matrix<double, 10, 10> A;
    Eigen::Matrix<double, 10, 3> B;
    Eigen::Matrix<double, 6, 10> C;
    Vec6 output_offset;
};

/// Exact zero-order-hold discretization of ContinuousModel.
struct DiscreteModel {
    Eigen::Matrix<double, 10, 10> A;
    Eigen::Matrix<double, 10, 3> B;
    Eigen::Matrix<double, 6, 10> C;
    Vec6 output_offset;
    double Ts = 0.0;
};

ContinuousModel build_continuous(const PendulumParams& params);

/// Matrix exponential by scaling-and-squaring with a truncated Taylor series.
Eigen::MatrixXd matrix_exponential(const Eigen::MatrixXd& M);

/// ZOH discretization via the augmented exponential exp([[A, B], [0, 0]] * Ts).
DiscreteModel discretize_zoh(const ContinuousModel& cm, double Ts);

}  // namespace spillfree
