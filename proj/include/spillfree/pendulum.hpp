#pragma once

#include "spillfree/types.hpp"

#include <utility>

namespace spillfree {

/// Position of the suspended mass in the world frame,
/// x_m = [x_p - l sin(th), y_p + l cos(th) sin(ph), z_p - l cos(th) cos(ph)].
Vec3 mass_position(const PendulumState& state, const PendulumParams& params);

/// Tilt accelerations (dd_theta, dd_phi) from the nonlinear equations of motion.
/// Throws on the |cos(theta)| <= 1e-9 parametrization singularity.
std::pair<double, double> nonlinear_accel(const PendulumState& state, const PivotInput& input,
                                          const PendulumParams& params);

/// Mass position, velocity and acceleration via the analytic time derivatives,
/// with tilt accelerations supplied by nonlinear_accel.
MassKinematics mass_kinematics(const PendulumState& state, const PivotInput& input,
                               const PendulumParams& params);

/// One classical RK4 step of the 10-dim state with the input held constant.
PendulumState step_rk4(const PendulumState& state, const PivotInput& input, double dt,
                       const PendulumParams& params);

/// Kinetic and potential energy (K, U) of the point mass.
std::pair<double, double> total_energy(const PendulumState& state, const PendulumParams& params);

/// Rotation taking container axes to world axes: R_z(yaw) * R_y(theta) * R_x(phi).
/// The container z-axis stays aligned with the mass-to-pivot rod direction
/// whenever one of the tilt angles is zero (superposed planar pendulums).
Eigen::Matrix3d container_rotation(double theta, double phi, double yaw = 0.0);

/// Worst-case slosh metrics over a trajectory. Requires mass accelerations at
/// every node. Throws if the total external force vanishes at some node.
SloshMetrics slosh_metrics(const Trajectory& traj, const PendulumParams& params);

/// Point-mass validity: rod length for a requested approximation error p, l = h / sqrt(6 p).
double rod_length_for_validity(double p, double h);

/// Inverse relation: approximation error p = h^2 / (6 l^2).
double validity_error(double l, double h);

}  // namespace spillfree
