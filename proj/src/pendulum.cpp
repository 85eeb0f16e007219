#include "spillfree/pendulum.hpp"

#include <cmath>
#include <stdexcept>

namespace spillfree {

Vec3 mass_position(const PendulumState& state, const PendulumParams& params) {
    if (!state.finite()) throw std::invalid_argument("invalid state");
    const double l = params.rod_length;
    const double st = std::sin(state.theta), ct = std::cos(state.theta);
    const double sp = std::sin(state.phi), cp = std::cos(state.phi);
    return {state.pivot.x() - l * st,
            state.pivot.y() + l * ct * sp,
            state.pivot.z() - l * ct * cp};
}

std::pair<double, double> nonlinear_accel(const PendulumState& state, const PivotInput& input,
                                          const PendulumParams& params) {
    if (!state.finite() || !input.allFinite()) throw std::invalid_argument("invalid state");
    const double l = params.rod_length, g = params.gravity;
    const double st = std::sin(state.theta), ct = std::cos(state.theta);
    const double sp = std::sin(state.phi), cp = std::cos(state.phi);
    if (std::abs(ct) <= 1e-9) throw std::domain_error("parametrization singularity");
    const double dth = state.theta_rate, dph = state.phi_rate;
    const double u1 = input(0), u2 = input(1), u3 = input(2);

    const double ddth =
        (-st * (g + u3) * cp + u1 * ct + u2 * sp * st - l * ct * st * dph * dph) / l;
    const double ddph = (-sp * (g + u3) - u2 * cp + 2.0 * l * dph * dth * st) / (l * ct);
    return {ddth, ddph};
}

MassKinematics mass_kinematics(const PendulumState& state, const PivotInput& input,
                               const PendulumParams& params) {
    const auto [ddth, ddph] = nonlinear_accel(state, input, params);
    const double l = params.rod_length;
    const double st = std::sin(state.theta), ct = std::cos(state.theta);
    const double sp = std::sin(state.phi), cp = std::cos(state.phi);
    const double dth = state.theta_rate, dph = state.phi_rate;

    MassKinematics mk;
    mk.position = mass_position(state, params);
    mk.velocity = state.pivot_rate +
                  l * Vec3(-ct * dth,
                           -st * dth * sp + ct * cp * dph,
                           st * dth * cp + ct * sp * dph);
    mk.acceleration =
        input + l * Vec3(-(ct * ddth - st * dth * dth),
                         -ct * dth * dth * sp - st * ddth * sp - 2.0 * st * dth * cp * dph -
                             ct * sp * dph * dph + ct * cp * ddph,
                         ct * dth * dth * cp + st * ddth * cp - 2.0 * st * dth * sp * dph +
                             ct * cp * dph * dph + ct * sp * ddph);
    return mk;
}

namespace {

Vec10 state_derivative(const PendulumState& s, const PivotInput& u, const PendulumParams& p) {
    const auto [ddth, ddph] = nonlinear_accel(s, u, p);
    Vec10 d;
    d << s.pivot_rate, s.theta_rate, s.phi_rate, u, ddth, ddph;
    return d;
}

}  // namespace

PendulumState step_rk4(const PendulumState& state, const PivotInput& input, double dt,
                       const PendulumParams& params) {
    if (!(dt > 0.0)) throw std::invalid_argument("dt must be > 0");
    const Vec10 x0 = state.to_vector();
    const Vec10 k1 = state_derivative(state, input, params);
    const Vec10 k2 = state_derivative(PendulumState::from_vector(x0 + 0.5 * dt * k1), input, params);
    const Vec10 k3 = state_derivative(PendulumState::from_vector(x0 + 0.5 * dt * k2), input, params);
    const Vec10 k4 = state_derivative(PendulumState::from_vector(x0 + dt * k3), input, params);
    return PendulumState::from_vector(x0 + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
}

std::pair<double, double> total_energy(const PendulumState& state, const PendulumParams& params) {
    if (!state.finite()) throw std::invalid_argument("invalid state");
    const double l = params.rod_length;
    const double st = std::sin(state.theta), ct = std::cos(state.theta);
    const double sp = std::sin(state.phi), cp = std::cos(state.phi);
    const double dth = state.theta_rate, dph = state.phi_rate;
    const Vec3 v = state.pivot_rate + l * Vec3(-ct * dth,
                                               -st * dth * sp + ct * cp * dph,
                                               st * dth * cp + ct * sp * dph);
    const double K = 0.5 * params.mass * v.squaredNorm();
    const double U = params.mass * params.gravity * mass_position(state, params).z();
    return {K, U};
}

Eigen::Matrix3d container_rotation(double theta, double phi, double yaw) {
    return (Eigen::AngleAxisd(yaw, Vec3::UnitZ()) * Eigen::AngleAxisd(theta, Vec3::UnitY()) *
            Eigen::AngleAxisd(phi, Vec3::UnitX()))
        .toRotationMatrix();
}

SloshMetrics slosh_metrics(const Trajectory& traj, const PendulumParams& params) {
    if (traj.mass.size() != traj.states.size())
        throw std::invalid_argument("trajectory lacks mass kinematics");
    const double g = params.gravity;
    SloshMetrics m;
    for (std::size_t k = 0; k < traj.states.size(); ++k) {
        const PendulumState& s = traj.states[k];
        const Vec3& a = traj.mass[k].acceleration;

        const Vec3 f = params.mass * (a + Vec3(0.0, 0.0, g));
        if (f.norm() < 1e-12) throw std::domain_error("free-fall node, alignment undefined");
        const Vec3 f_c = container_rotation(s.theta, s.phi).transpose() * f;
        m.force_alignment_error =
            std::max(m.force_alignment_error, f_c.head<2>().norm() / f_c.norm());

        // Per-plane kinematic residual of (a_z + g) tan(tilt) = a_lat.
        const double res_x = std::abs((a.z() + g) * std::tan(s.theta) - a.x());
        const double res_y = std::abs((a.z() + g) * std::tan(s.phi) + a.y());
        m.kinematic_error = std::max({m.kinematic_error, res_x, res_y});

        m.max_tilt = std::max({m.max_tilt, std::abs(s.theta), std::abs(s.phi)});
    }
    return m;
}

double rod_length_for_validity(double p, double h) {
    if (!(p > 0.0) || !(h > 0.0)) throw std::invalid_argument("p and h must be > 0");
    return h / std::sqrt(6.0 * p);
}

double validity_error(double l, double h) {
    if (!(l > 0.0) || !(h > 0.0)) throw std::invalid_argument("l and h must be > 0");
    return h * h / (6.0 * l * l);
}

}  // namespace spillfree
