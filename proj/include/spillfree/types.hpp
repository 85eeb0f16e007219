#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <vector>

namespace spillfree {

using Vec3 = Eigen::Vector3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Vec10 = Eigen::Matrix<double, 10, 1>;

inline constexpr int kStateDim = 10;
inline constexpr int kInputDim = 3;
inline constexpr int kOutputDim = 6;

/// Physical parameters of the virtual pendulum.
struct PendulumParams {
    double rod_length = 0.6;     // l [m]
    double gravity = 9.81;       // g [m/s^2]
    double mass = 1.0;           // m [kg]
    double object_height = 0.0;  // h [m], optional, used for validity checks

    void validate() const {
        if (!(rod_length > 0.0)) throw std::invalid_argument("rod_length must be > 0");
        if (!(gravity > 0.0)) throw std::invalid_argument("gravity must be > 0");
        if (!(mass > 0.0)) throw std::invalid_argument("mass must be > 0");
        if (object_height < 0.0) throw std::invalid_argument("object_height must be >= 0");
    }
};

/// Pendulum state, ordered [x_p, y_p, z_p, theta, phi, dx_p, dy_p, dz_p, dtheta, dphi].
struct PendulumState {
    Vec3 pivot = Vec3::Zero();       // [m]
    double theta = 0.0;              // tilt about y-axis [rad]
    double phi = 0.0;                // tilt about x-axis [rad]
    Vec3 pivot_rate = Vec3::Zero();  // [m/s]
    double theta_rate = 0.0;         // [rad/s]
    double phi_rate = 0.0;           // [rad/s]

    Vec10 to_vector() const {
        Vec10 v;
        v << pivot, theta, phi, pivot_rate, theta_rate, phi_rate;
        return v;
    }

    static PendulumState from_vector(const Vec10& v) {
        PendulumState s;
        s.pivot = v.segment<3>(0);
        s.theta = v(3);
        s.phi = v(4);
        s.pivot_rate = v.segment<3>(5);
        s.theta_rate = v(8);
        s.phi_rate = v(9);
        return s;
    }

    bool finite() const { return to_vector().allFinite(); }
};

/// Pivot acceleration command u = [u1 u2 u3] = [ddx_p ddy_p ddz_p].
using PivotInput = Vec3;

/// Mass position/velocity/acceleration in the world frame.
struct MassKinematics {
    Vec3 position = Vec3::Zero();
    Vec3 velocity = Vec3::Zero();
    Vec3 acceleration = Vec3::Zero();
};

/// Worst-case slosh-free condition violations over a trajectory.
struct SloshMetrics {
    double force_alignment_error = 0.0;  // max |f_lateral| / |f_total|, container frame
    double kinematic_error = 0.0;        // max per-plane |(a_z + g) tan(tilt) - a_lat| [m/s^2]
    double max_tilt = 0.0;               // max(|theta|, |phi|) [rad]
};

/// Time-indexed trajectory of pendulum states, inputs and derived mass kinematics.
struct Trajectory {
    double Ts = 0.0;
    std::vector<PendulumState> states;  // size N+1
    std::vector<PivotInput> inputs;     // size N
    std::vector<MassKinematics> mass;   // size N+1 (may be filled lazily)

    std::size_t node_count() const { return states.size(); }
    double time_at(std::size_t k) const { return static_cast<double>(k) * Ts; }
};

}  // namespace spillfree
