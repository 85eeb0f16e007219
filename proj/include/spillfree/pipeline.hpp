#pragma once

#include "spillfree/pendulum.hpp"
#include "spillfree/qp_builder.hpp"
#include "spillfree/qp_solver.hpp"
#include "spillfree/robot.hpp"

#include <string>
#include <vector>

namespace spillfree {

/// Pipeline configuration, loadable from JSON. Exactly one of rod_length or
/// (object_height, ratio) defines the pendulum geometry.
struct Config {
    double gravity = 9.81;
    double mass = 1.0;
    double rod_length = 0.0;     // set directly ...
    double object_height = 0.0;  // ... or via object_height * ratio
    double ratio = 0.0;
    double Ts = 0.033;
    double horizon = 3.0;  // demo horizon [s]
    double yaw = 0.0;

    double max_pivot_velocity = 1.7;   // [m/s], per axis
    double max_tilt = 0.3;             // [rad]
    double max_tilt_rate = kInf;       // [rad/s]
    double max_input = 13.0;           // pivot acceleration [m/s^2]
    double max_jerk = 65.0;            // pivot jerk [m/s^3]

    bool pin_start = true;
    bool pin_end = true;
    bool rest_to_rest = true;

    SolverSettings solver;
    IkOptions ik;
    std::string robot_path;  // empty -> bundled model

    PendulumParams pendulum() const;
    void validate() const;
};

Config load_config(const std::string& path);
Config default_config();

/// A desired mass trajectory: uniform time grid, positions and velocities.
struct DesiredTrajectory {
    double Ts = 0.0;
    Eigen::MatrixXd position;  // (N+1) x 3
    Eigen::MatrixXd velocity;  // (N+1) x 3

    Eigen::MatrixXd to_outputs() const;  // (N+1) x 6 [position, velocity]
};

/// CSV I/O. Numbers are serialized with 17 significant digits so round trips
/// are byte-exact.
DesiredTrajectory read_desired_csv(const std::string& path, double Ts);
void write_desired_csv(const DesiredTrajectory& d, const std::string& path);

void write_trajectory_csv(const Trajectory& traj, const std::string& path);
Trajectory read_trajectory_csv(const std::string& path);

/// One nonlinear-rollout record per node.
struct RolloutNode {
    double t = 0.0;
    PendulumState state;
    MassKinematics mass;       // acceleration from grid finite differences
    Vec3 container_force = Vec3::Zero();
};
using Rollout = std::vector<RolloutNode>;

void write_rollout_csv(const Rollout& rollout, double Ts, const std::string& path);
Rollout read_rollout_csv(const std::string& path, double& Ts);

struct PipelineMetrics {
    SloshMetrics slosh;
    double max_pivot_velocity = 0.0;
    double max_pivot_acceleration = 0.0;
    double max_pivot_jerk = 0.0;
    double max_mass_velocity = 0.0;
    double max_mass_acceleration = 0.0;
    double max_mass_jerk = 0.0;
};

struct OptimizeResult {
    Trajectory trajectory;
    Solution solution;
};

/// Optimize a feasible trajectory tracking the desired one.
OptimizeResult run_optimize(const Config& config, const DesiredTrajectory& desired);

/// Replay the optimized inputs through the nonlinear simulator from the
/// optimized initial state, at substeps of at most 1 ms.
Rollout run_simulate(const Config& config, const Trajectory& traj, double substep = 1e-3);

PipelineMetrics run_metrics(const Config& config, const Rollout& rollout);

struct IkResult {
    JointTrajectory joints;
    LimitsReport limits;
};

/// Map the workspace trajectory to joint space. If q0 is empty it is computed
/// by iterative IK from the model's mid-range configuration.
IkResult run_ik(const Config& config, const Trajectory& traj, const RobotModel& model,
                Eigen::VectorXd q0 = {});

/// Step scenario: the desired mass position steps 0.3 m in x,
/// rest-to-rest, rod length = ratio * 0.1 m.
DesiredTrajectory demo_step_desired(const Config& config);
Config demo_step_config(double ratio);

/// Square-path scenario in the x-y plane for the IK demo.
DesiredTrajectory demo_square_desired(const Config& config);
Config demo_square_config();

void write_solve_report_json(const Solution& sol, const std::string& path);
void write_metrics_json(const PipelineMetrics& m, const std::string& path);
void write_joint_csv(const JointTrajectory& jt, const std::string& path);
void write_limits_json(const LimitsReport& r, const JointTrajectory& jt, const std::string& path);

/// Mass poses of every trajectory node.
std::vector<UnitDualQuaternion> trajectory_poses(const Config& config, const Trajectory& traj);

}  // namespace spillfree
