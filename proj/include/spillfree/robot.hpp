#pragma once

#include "spillfree/dual_quaternion.hpp"
#include "spillfree/types.hpp"

#include <optional>
#include <string>
#include <vector>

namespace spillfree {

inline constexpr double kLimitUnbounded = 1e30;

struct JointLimits {
    double q_min = -kLimitUnbounded, q_max = kLimitUnbounded;
    double dq = kLimitUnbounded;    // velocity [rad/s]
    double ddq = kLimitUnbounded;   // acceleration [rad/s^2]
    double dddq = kLimitUnbounded;  // jerk [rad/s^3]
    double tau = kLimitUnbounded;   // torque [Nm]
};

/// Modified (Craig) DH parameters of one joint:
/// T = RotX(alpha) * TransX(a) * RotZ(theta + theta_offset) * TransZ(d).
struct DhParams {
    double a = 0.0;
    double d = 0.0;
    double alpha = 0.0;
    double theta_offset = 0.0;
};

struct Joint {
    DhParams dh;
    JointLimits limits;
};

/// Per-link inertial parameters in the link frame, inertia about the COM
/// stored as [Ixx, Ixy, Ixz, Iyy, Iyz, Izz].
struct LinkInertia {
    double mass = 0.0;
    Vec3 com = Vec3::Zero();
    Eigen::Matrix<double, 6, 1> inertia = Eigen::Matrix<double, 6, 1>::Zero();

    Eigen::Matrix3d inertia_matrix() const;
};

struct RobotModel {
    std::string name;
    std::vector<Joint> joints;
    std::vector<LinkInertia> inertia;  // empty if dynamics unavailable
    UnitDualQuaternion tool;           // fixed flange-to-tool transform

    int dof() const { return static_cast<int>(joints.size()); }
    bool has_dynamics() const { return inertia.size() == joints.size(); }
};

RobotModel load_robot_model(const std::string& path);

/// Path of the bundled 7-DoF model data file.
std::string bundled_robot_path();

/// Mass pose from a pendulum state: translation at the mass position,
/// orientation R_z(yaw) * R_y(theta) * R_x(phi) keeping the container
/// z-axis along the rod.
UnitDualQuaternion pose_from_state(const PendulumState& state, const PendulumParams& params,
                                   double yaw = 0.0);

UnitDualQuaternion forward_kinematics(const Eigen::VectorXd& q, const RobotModel& model);

/// World-frame geometric Jacobian, 6 x n, angular rows over linear rows.
Eigen::MatrixXd geometric_jacobian(const Eigen::VectorXd& q, const RobotModel& model);

struct JointTrajectory {
    double Ts = 0.0;
    Eigen::MatrixXd q;     // (N+1) x n
    Eigen::MatrixXd dq;    // (N+1) x n
    Eigen::MatrixXd ddq;   // (N+1) x n
    Eigen::MatrixXd dddq;  // (N+1) x n
    Eigen::MatrixXd tau;   // (N+1) x n or empty
    Eigen::VectorXd tracking_error_lin;  // per node [m]
    Eigen::VectorXd tracking_error_ang;  // per node [rad]

    int node_count() const { return static_cast<int>(q.rows()); }
};

struct IkOptions {
    double kp = 10.0;            // pose-error feedback gain [1/s]
    double lambda = 1e-4;        // pseudo-inverse damping
    double manip_threshold = 1e-5;
    double max_pose_error = 0.05;  // divergence guard [m]
};

/// Differential inverse kinematics over a pose sequence: damped pseudo-inverse
/// joint velocities, Euler-integrated configurations, finite-difference
/// accelerations and jerks.
JointTrajectory differential_ik(const std::vector<UnitDualQuaternion>& poses,
                                const Eigen::VectorXd& q0, const RobotModel& model, double Ts,
                                const IkOptions& opts = {});

/// Iterative IK for a single pose, used to seed differential_ik.
/// Returns nullopt if it does not converge from the given seed.
std::optional<Eigen::VectorXd> solve_ik_pose(const UnitDualQuaternion& target,
                                             const Eigen::VectorXd& q_seed,
                                             const RobotModel& model, int max_iters = 500,
                                             double tol = 1e-10);

struct LimitEntry {
    std::string quantity;  // "q", "dq", "ddq", "dddq", "tau"
    int joint = 0;
    double max_value = 0.0;
    double limit = 0.0;
    double margin = 0.0;            // limit - max_value
    int first_violation_node = -1;  // -1 when within limits
};

struct LimitsReport {
    std::vector<LimitEntry> entries;
    double max_task_velocity = 0.0;      // [m/s], from FK positions
    double max_task_acceleration = 0.0;  // [m/s^2]

    bool has_violations() const {
        for (const auto& e : entries)
            if (e.first_violation_node >= 0) return true;
        return false;
    }
};

LimitsReport limits_report(const JointTrajectory& jt, const RobotModel& model);

/// Recursive Newton-Euler inverse dynamics with gravity, per trajectory node.
/// Throws "dynamics unavailable" if the model carries no inertial parameters.
Eigen::MatrixXd joint_torques(const JointTrajectory& jt, const RobotModel& model);

}  // namespace spillfree
