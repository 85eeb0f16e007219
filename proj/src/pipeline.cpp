#include "spillfree/pipeline.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace spillfree {

using nlohmann::json;

namespace {

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) out.push_back(field);
    return out;
}

double parse_double(const std::string& s, const std::string& path, int lineno) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        return v;
    } catch (const std::exception&) {
        throw std::runtime_error(path + ":" + std::to_string(lineno) + ": bad number '" + s + "'");
    }
}

// Quintic smooth step on [0, 1], zero velocity and acceleration at both ends.
double smoothstep5(double s) {
    s = std::clamp(s, 0.0, 1.0);
    return s * s * s * (10.0 + s * (-15.0 + 6.0 * s));
}

Eigen::MatrixXd central_differences(const Eigen::MatrixXd& v, double Ts) {
    const Eigen::Index n = v.rows();
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, v.cols());
    if (n < 2) return d;
    if (n == 2) {
        d.row(0) = (v.row(1) - v.row(0)) / Ts;
        d.row(1) = d.row(0);
        return d;
    }
    // Second-order one-sided stencils at the ends match the interior accuracy.
    d.row(0) = (-3.0 * v.row(0) + 4.0 * v.row(1) - v.row(2)) / (2.0 * Ts);
    d.row(n - 1) = (3.0 * v.row(n - 1) - 4.0 * v.row(n - 2) + v.row(n - 3)) / (2.0 * Ts);
    for (Eigen::Index k = 1; k + 1 < n; ++k) d.row(k) = (v.row(k + 1) - v.row(k - 1)) / (2.0 * Ts);
    return d;
}

}  // namespace

PendulumParams Config::pendulum() const {
    validate();
    PendulumParams p;
    p.gravity = gravity;
    p.mass = mass;
    p.rod_length = rod_length > 0.0 ? rod_length : object_height * ratio;
    p.object_height = object_height;
    return p;
}

void Config::validate() const {
    const bool direct = rod_length > 0.0;
    const bool derived = object_height > 0.0 && ratio > 0.0;
    if (direct == derived)
        throw std::invalid_argument(
            "exactly one of rod_length or (object_height, ratio) must be set");
    if (!(Ts > 0.0)) throw std::invalid_argument("Ts must be > 0");
    if (!(horizon > Ts)) throw std::invalid_argument("horizon must exceed Ts");
}

Config default_config() {
    Config c;
    c.rod_length = 0.6;
    return c;
}

Config load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw std::runtime_error(path + ": " + e.what());
    }

    Config c;
    c.gravity = j.value("gravity", c.gravity);
    c.mass = j.value("mass", c.mass);
    c.rod_length = j.value("rod_length", 0.0);
    c.object_height = j.value("object_height", 0.0);
    c.ratio = j.value("ratio", 0.0);
    c.Ts = j.value("Ts", c.Ts);
    c.horizon = j.value("horizon", c.horizon);
    c.yaw = j.value("yaw", c.yaw);
    if (j.contains("bounds")) {
        const auto& b = j["bounds"];
        c.max_pivot_velocity = b.value("pivot_velocity", c.max_pivot_velocity);
        c.max_tilt = b.value("tilt", c.max_tilt);
        c.max_tilt_rate = b.value("tilt_rate", c.max_tilt_rate);
        c.max_input = b.value("input", c.max_input);
        c.max_jerk = b.value("jerk", c.max_jerk);
    }
    if (j.contains("pins")) {
        const auto& p = j["pins"];
        c.pin_start = p.value("start", c.pin_start);
        c.pin_end = p.value("end", c.pin_end);
        c.rest_to_rest = p.value("rest_to_rest", c.rest_to_rest);
    }
    if (j.contains("solver")) {
        const auto& s = j["solver"];
        c.solver.rho = s.value("rho", c.solver.rho);
        c.solver.sigma = s.value("sigma", c.solver.sigma);
        c.solver.alpha = s.value("alpha", c.solver.alpha);
        c.solver.eps_abs = s.value("eps_abs", c.solver.eps_abs);
        c.solver.eps_rel = s.value("eps_rel", c.solver.eps_rel);
        c.solver.max_iter = s.value("max_iter", c.solver.max_iter);
        c.solver.polish = s.value("polish", c.solver.polish);
    }
    if (j.contains("ik")) {
        const auto& i = j["ik"];
        c.ik.kp = i.value("kp", c.ik.kp);
        c.ik.lambda = i.value("lambda", c.ik.lambda);
    }
    c.robot_path = j.value("robot", std::string());
    c.validate();
    return c;
}

Eigen::MatrixXd DesiredTrajectory::to_outputs() const {
    Eigen::MatrixXd Yd(position.rows(), 6);
    Yd.leftCols<3>() = position;
    Yd.rightCols<3>() = velocity;
    return Yd;
}

DesiredTrajectory read_desired_csv(const std::string& path, double Ts) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open desired trajectory: " + path);
    std::string line;
    int lineno = 0;
    if (!std::getline(in, line)) throw std::runtime_error(path + ": empty file");
    ++lineno;
    const auto header = split_csv_line(line);
    const bool has_velocity = header.size() >= 7;
    if (header.size() != 4 && header.size() != 7)
        throw std::runtime_error(path + ":1: expected header t,x,y,z[,vx,vy,vz]");

    std::vector<double> ts;
    std::vector<Eigen::Matrix<double, 1, 3>> pos, vel;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto f = split_csv_line(line);
        if (f.size() != header.size())
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": wrong column count");
        ts.push_back(parse_double(f[0], path, lineno));
        pos.push_back({parse_double(f[1], path, lineno), parse_double(f[2], path, lineno),
                       parse_double(f[3], path, lineno)});
        if (has_velocity)
            vel.push_back({parse_double(f[4], path, lineno), parse_double(f[5], path, lineno),
                           parse_double(f[6], path, lineno)});
    }
    if (ts.size() < 2) throw std::runtime_error(path + ": need at least two rows");
    const double dt = ts[1] - ts[0];
    if (!(dt > 0.0)) throw std::runtime_error(path + ": time must be strictly increasing");
    for (std::size_t i = 1; i < ts.size(); ++i) {
        if (!(ts[i] > ts[i - 1]))
            throw std::runtime_error(path + ": time must be strictly increasing");
        if (std::abs((ts[i] - ts[i - 1]) - dt) > 1e-9)
            throw std::runtime_error(path + ": non-uniform time spacing");
    }

    DesiredTrajectory d;
    d.Ts = Ts;
    if (std::abs(dt - Ts) <= 1e-12) {
        d.position.resize(static_cast<Eigen::Index>(pos.size()), 3);
        for (std::size_t i = 0; i < pos.size(); ++i) d.position.row(static_cast<Eigen::Index>(i)) = pos[i];
        if (has_velocity) {
            d.velocity.resize(static_cast<Eigen::Index>(vel.size()), 3);
            for (std::size_t i = 0; i < vel.size(); ++i)
                d.velocity.row(static_cast<Eigen::Index>(i)) = vel[i];
        }
    } else {
        // Linear resampling onto the Ts grid over the same duration.
        const double duration = ts.back() - ts.front();
        const int n = static_cast<int>(std::floor(duration / Ts + 1e-9));
        d.position.resize(n + 1, 3);
        for (int k = 0; k <= n; ++k) {
            const double t = static_cast<double>(k) * Ts;
            const double idx = t / dt;
            const int i0 = std::min(static_cast<int>(std::floor(idx)),
                                    static_cast<int>(ts.size()) - 2);
            const double w = idx - i0;
            d.position.row(k) = (1.0 - w) * pos[static_cast<std::size_t>(i0)] +
                                w * pos[static_cast<std::size_t>(i0) + 1];
        }
    }
    if (d.velocity.rows() != d.position.rows())
        d.velocity = central_differences(d.position, Ts);
    return d;
}

void write_desired_csv(const DesiredTrajectory& d, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write: " + path);
    out << "t,x,y,z,vx,vy,vz\n";
    for (Eigen::Index k = 0; k < d.position.rows(); ++k) {
        out << fmt17(static_cast<double>(k) * d.Ts);
        for (int j = 0; j < 3; ++j) out << ',' << fmt17(d.position(k, j));
        for (int j = 0; j < 3; ++j) out << ',' << fmt17(d.velocity(k, j));
        out << '\n';
    }
}

void write_trajectory_csv(const Trajectory& traj, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write: " + path);
    out << "t,x_p,y_p,z_p,theta,phi,dx_p,dy_p,dz_p,dtheta,dphi,u1,u2,u3\n";
    for (std::size_t k = 0; k < traj.states.size(); ++k) {
        out << fmt17(traj.time_at(k));
        const Vec10 x = traj.states[k].to_vector();
        for (int j = 0; j < 10; ++j) out << ',' << fmt17(x(j));
        const Vec3 u = k < traj.inputs.size() ? traj.inputs[k] : Vec3::Zero();
        for (int j = 0; j < 3; ++j) out << ',' << fmt17(u(j));
        out << '\n';
    }
}

Trajectory read_trajectory_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open trajectory: " + path);
    std::string line;
    int lineno = 1;
    if (!std::getline(in, line) || split_csv_line(line).size() != 14)
        throw std::runtime_error(path + ":1: expected trajectory header with 14 columns");
    Trajectory traj;
    std::vector<double> times;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto f = split_csv_line(line);
        if (f.size() != 14)
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": wrong column count");
        times.push_back(parse_double(f[0], path, lineno));
        Vec10 x;
        for (int j = 0; j < 10; ++j) x(j) = parse_double(f[1 + j], path, lineno);
        traj.states.push_back(PendulumState::from_vector(x));
        Vec3 u;
        for (int j = 0; j < 3; ++j) u(j) = parse_double(f[11 + j], path, lineno);
        traj.inputs.push_back(u);
    }
    if (times.size() < 2) throw std::runtime_error(path + ": need at least two rows");
    traj.Ts = times[1] - times[0];
    traj.inputs.pop_back();  // last row carries a zero placeholder input
    return traj;
}

OptimizeResult run_optimize(const Config& config, const DesiredTrajectory& desired) {
    const PendulumParams params = config.pendulum();
    const ContinuousModel cm = build_continuous(params);
    const DiscreteModel dm = discretize_zoh(cm, config.Ts);

    TrajectorySpec spec;
    spec.Yd = desired.to_outputs();
    spec.Ts = config.Ts;
    spec.lb_state << -kInf, -kInf, -kInf, -config.max_tilt, -config.max_tilt,
        -config.max_pivot_velocity, -config.max_pivot_velocity, -config.max_pivot_velocity,
        -config.max_tilt_rate, -config.max_tilt_rate;
    spec.ub_state = -spec.lb_state;
    spec.lb_input = Vec3::Constant(-config.max_input);
    spec.ub_input = Vec3::Constant(config.max_input);
    spec.lb_jerk = Vec3::Constant(-config.max_jerk);
    spec.ub_jerk = Vec3::Constant(config.max_jerk);
    spec.pin_start = config.pin_start;
    spec.pin_end = config.pin_end;
    spec.rest_to_rest = config.rest_to_rest;

    const QPProblem problem = assemble(dm, spec);
    OptimizeResult res;
    res.solution = solve(problem, config.solver);

    if (res.solution.status == SolveStatus::Optimal ||
        res.solution.status == SolveStatus::MaxIter) {
        const DecisionLayout layout(spec.horizon());
        res.trajectory.Ts = config.Ts;
        for (int k = 0; k <= layout.N; ++k)
            res.trajectory.states.push_back(
                PendulumState::from_vector(res.solution.chi.segment<10>(layout.state_index(k))));
        for (int k = 0; k < layout.N; ++k)
            res.trajectory.inputs.push_back(res.solution.chi.segment<3>(layout.input_index(k)));
    }
    return res;
}

Rollout run_simulate(const Config& config, const Trajectory& traj, double substep) {
    const PendulumParams params = config.pendulum();
    if (traj.states.empty() || traj.inputs.size() + 1 != traj.states.size())
        throw std::invalid_argument("trajectory must hold N+1 states and N inputs");

    Rollout rollout;
    PendulumState state = traj.states.front();
    const int nsub = std::max(1, static_cast<int>(std::ceil(traj.Ts / substep)));
    const double dt = traj.Ts / nsub;

    const std::size_t n_nodes = traj.states.size();
    Eigen::MatrixXd vel(n_nodes, 3), pos(n_nodes, 3);
    std::vector<PendulumState> rolled(n_nodes);
    for (std::size_t k = 0; k < n_nodes; ++k) {
        rolled[k] = state;
        const Vec3 u = k < traj.inputs.size() ? traj.inputs[k] : Vec3::Zero();
        const MassKinematics mk = mass_kinematics(state, u, params);
        pos.row(static_cast<Eigen::Index>(k)) = mk.position.transpose();
        vel.row(static_cast<Eigen::Index>(k)) = mk.velocity.transpose();
        if (k < traj.inputs.size())
            for (int s = 0; s < nsub; ++s) state = step_rk4(state, traj.inputs[k], dt, params);
    }

    // Node accelerations from grid finite differences of the mass velocity,
    // matching how a sampled execution would be evaluated.
    const Eigen::MatrixXd acc = central_differences(vel, traj.Ts);
    for (std::size_t k = 0; k < n_nodes; ++k) {
        RolloutNode node;
        node.t = traj.time_at(k);
        node.state = rolled[k];
        node.mass.position = pos.row(static_cast<Eigen::Index>(k)).transpose();
        node.mass.velocity = vel.row(static_cast<Eigen::Index>(k)).transpose();
        node.mass.acceleration = acc.row(static_cast<Eigen::Index>(k)).transpose();
        const Vec3 f = params.mass * (node.mass.acceleration + Vec3(0, 0, params.gravity));
        node.container_force =
            container_rotation(node.state.theta, node.state.phi, config.yaw).transpose() * f;
        rollout.push_back(node);
    }
    return rollout;
}

void write_rollout_csv(const Rollout& rollout, double Ts, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write: " + path);
    out << "t,x_p,y_p,z_p,theta,phi,dx_p,dy_p,dz_p,dtheta,dphi,"
           "x_m,y_m,z_m,vx_m,vy_m,vz_m,ax_m,ay_m,az_m,fx_c,fy_c,fz_c\n";
    (void)Ts;
    for (const auto& node : rollout) {
        out << fmt17(node.t);
        const Vec10 x = node.state.to_vector();
        for (int j = 0; j < 10; ++j) out << ',' << fmt17(x(j));
        for (int j = 0; j < 3; ++j) out << ',' << fmt17(node.mass.position(j));
        for (int j = 0; j < 3; ++j) out << ',' << fmt17(node.mass.velocity(j));
        for (int j = 0; j < 3; ++j) out << ',' << fmt17(node.mass.acceleration(j));
        for (int j = 0; j < 3; ++j) out << ',' << fmt17(node.container_force(j));
        out << '\n';
    }
}

Rollout read_rollout_csv(const std::string& path, double& Ts) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open rollout: " + path);
    std::string line;
    int lineno = 1;
    if (!std::getline(in, line) || split_csv_line(line).size() != 23)
        throw std::runtime_error(path + ":1: expected rollout header with 23 columns");
    Rollout rollout;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto f = split_csv_line(line);
        if (f.size() != 23)
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": wrong column count");
        RolloutNode node;
        node.t = parse_double(f[0], path, lineno);
        Vec10 x;
        for (int j = 0; j < 10; ++j) x(j) = parse_double(f[1 + j], path, lineno);
        node.state = PendulumState::from_vector(x);
        for (int j = 0; j < 3; ++j) node.mass.position(j) = parse_double(f[11 + j], path, lineno);
        for (int j = 0; j < 3; ++j) node.mass.velocity(j) = parse_double(f[14 + j], path, lineno);
        for (int j = 0; j < 3; ++j)
            node.mass.acceleration(j) = parse_double(f[17 + j], path, lineno);
        for (int j = 0; j < 3; ++j)
            node.container_force(j) = parse_double(f[20 + j], path, lineno);
        rollout.push_back(node);
    }
    if (rollout.size() < 2) throw std::runtime_error(path + ": need at least two rows");
    Ts = rollout[1].t - rollout[0].t;
    return rollout;
}

PipelineMetrics run_metrics(const Config& config, const Rollout& rollout) {
    const PendulumParams params = config.pendulum();
    Trajectory traj;
    traj.Ts = rollout.size() > 1 ? rollout[1].t - rollout[0].t : 1.0;
    const Eigen::Index n = static_cast<Eigen::Index>(rollout.size());
    Eigen::MatrixXd pivot_vel(n, 3), mass_vel(n, 3), mass_acc(n, 3);
    for (Eigen::Index k = 0; k < n; ++k) {
        traj.states.push_back(rollout[static_cast<std::size_t>(k)].state);
        traj.mass.push_back(rollout[static_cast<std::size_t>(k)].mass);
        pivot_vel.row(k) = rollout[static_cast<std::size_t>(k)].state.pivot_rate.transpose();
        mass_vel.row(k) = rollout[static_cast<std::size_t>(k)].mass.velocity.transpose();
        mass_acc.row(k) = rollout[static_cast<std::size_t>(k)].mass.acceleration.transpose();
    }

    PipelineMetrics m;
    m.slosh = slosh_metrics(traj, params);
    const Eigen::MatrixXd pivot_acc = central_differences(pivot_vel, traj.Ts);
    const Eigen::MatrixXd pivot_jerk = central_differences(pivot_acc, traj.Ts);
    const Eigen::MatrixXd mass_jerk = central_differences(mass_acc, traj.Ts);
    m.max_pivot_velocity = pivot_vel.rowwise().norm().maxCoeff();
    m.max_pivot_acceleration = pivot_acc.rowwise().norm().maxCoeff();
    m.max_pivot_jerk = pivot_jerk.rowwise().norm().maxCoeff();
    m.max_mass_velocity = mass_vel.rowwise().norm().maxCoeff();
    m.max_mass_acceleration = mass_acc.rowwise().norm().maxCoeff();
    m.max_mass_jerk = mass_jerk.rowwise().norm().maxCoeff();
    return m;
}

std::vector<UnitDualQuaternion> trajectory_poses(const Config& config, const Trajectory& traj) {
    const PendulumParams params = config.pendulum();
    std::vector<UnitDualQuaternion> poses;
    poses.reserve(traj.states.size());
    for (const auto& s : traj.states) poses.push_back(pose_from_state(s, params, config.yaw));
    return poses;
}

IkResult run_ik(const Config& config, const Trajectory& traj, const RobotModel& model,
                Eigen::VectorXd q0) {
    const auto poses = trajectory_poses(config, traj);
    if (q0.size() == 0) {
        // Deterministic seed sweep from a few canonical configurations.
        std::vector<Eigen::VectorXd> seeds;
        Eigen::VectorXd mid(model.dof());
        for (int i = 0; i < model.dof(); ++i)
            mid(i) = 0.5 * (std::max(model.joints[i].limits.q_min, -3.0) +
                            std::min(model.joints[i].limits.q_max, 3.0));
        seeds.push_back(mid);
        if (model.dof() == 7) {
            Eigen::VectorXd ready(7);
            ready << 0.0, -0.3, 0.0, -2.2, 0.0, 2.0, 0.785;
            seeds.insert(seeds.begin(), ready);
        }
        for (const auto& seed : seeds) {
            if (auto q = solve_ik_pose(poses.front(), seed, model)) {
                q0 = *q;
                break;
            }
        }
        if (q0.size() == 0)
            throw std::runtime_error("could not compute an initial joint configuration");
    }

    IkResult res;
    res.joints = differential_ik(poses, q0, model, traj.Ts, config.ik);
    if (model.has_dynamics()) res.joints.tau = joint_torques(res.joints, model);
    res.limits = limits_report(res.joints, model);
    return res;
}

Config demo_step_config(double r) {
    Config c;
    c.object_height = 0.1;
    c.ratio = r;
    c.Ts = 0.033;
    c.horizon = 3.0;
    // A tight jerk bound keeps the pivot acceleration smooth; the tracking
    // cost alone does not penalize acceleration dither that tilt compensation
    // hides from the carried mass.
    c.max_jerk = 6.0;
    return c;
}

DesiredTrajectory demo_step_desired(const Config& config) {
    const int n = static_cast<int>(std::round(config.horizon / config.Ts));
    DesiredTrajectory d;
    d.Ts = config.Ts;
    d.position = Eigen::MatrixXd::Zero(n + 1, 3);
    const double ramp = 1.8;  // step ramp duration [s]
    for (int k = 0; k <= n; ++k) {
        const double t = static_cast<double>(k) * config.Ts;
        d.position(k, 0) = 0.3 * smoothstep5(t / ramp);
    }
    d.velocity = central_differences(d.position, config.Ts);
    return d;
}

Config demo_square_config() {
    Config c;
    c.rod_length = 0.6;
    c.Ts = 0.033;
    c.horizon = 6.0;
    return c;
}

DesiredTrajectory demo_square_desired(const Config& config) {
    // Square in the x-y plane of the robot base frame, one smooth side at a time.
    const Vec3 corners[4] = {{0.35, -0.1, 0.35}, {0.55, -0.1, 0.35},
                             {0.55, 0.1, 0.35}, {0.35, 0.1, 0.35}};
    const double side_time = config.horizon / 4.0;
    const int n = static_cast<int>(std::round(config.horizon / config.Ts));
    DesiredTrajectory d;
    d.Ts = config.Ts;
    d.position.resize(n + 1, 3);
    for (int k = 0; k <= n; ++k) {
        const double t = static_cast<double>(k) * config.Ts;
        int side = std::min(static_cast<int>(t / side_time), 3);
        const double s = smoothstep5((t - side * side_time) / side_time);
        const Vec3 p = corners[side] + s * (corners[(side + 1) % 4] - corners[side]);
        d.position.row(k) = p.transpose();
    }
    d.velocity = central_differences(d.position, config.Ts);
    return d;
}

void write_solve_report_json(const Solution& sol, const std::string& path) {
    json j;
    j["status"] = to_string(sol.status);
    j["iterations"] = sol.iterations;
    j["objective"] = sol.objective;
    j["primal_residual"] = sol.primal_residual;
    j["dual_residual"] = sol.dual_residual;
    j["polished"] = sol.polished;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write: " + path);
    out << j.dump(2) << '\n';
}

void write_metrics_json(const PipelineMetrics& m, const std::string& path) {
    json j;
    j["force_alignment_error"] = m.slosh.force_alignment_error;
    j["kinematic_error"] = m.slosh.kinematic_error;
    j["max_tilt"] = m.slosh.max_tilt;
    j["max_pivot_velocity"] = m.max_pivot_velocity;
    j["max_pivot_acceleration"] = m.max_pivot_acceleration;
    j["max_pivot_jerk"] = m.max_pivot_jerk;
    j["max_mass_velocity"] = m.max_mass_velocity;
    j["max_mass_acceleration"] = m.max_mass_acceleration;
    j["max_mass_jerk"] = m.max_mass_jerk;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write: " + path);
    out << j.dump(2) << '\n';
}

void write_joint_csv(const JointTrajectory& jt, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write: " + path);
    const int n = static_cast<int>(jt.q.cols());
    const bool has_tau = jt.tau.rows() == jt.q.rows();
    out << 't';
    for (const char* prefix : {"q", "dq", "ddq"})
        for (int j = 1; j <= n; ++j) out << ',' << prefix << j;
    if (has_tau)
        for (int j = 1; j <= n; ++j) out << ",tau" << j;
    out << '\n';
    for (int k = 0; k < jt.node_count(); ++k) {
        out << fmt17(static_cast<double>(k) * jt.Ts);
        for (int j = 0; j < n; ++j) out << ',' << fmt17(jt.q(k, j));
        for (int j = 0; j < n; ++j) out << ',' << fmt17(jt.dq(k, j));
        for (int j = 0; j < n; ++j) out << ',' << fmt17(jt.ddq(k, j));
        if (has_tau)
            for (int j = 0; j < n; ++j) out << ',' << fmt17(jt.tau(k, j));
        out << '\n';
    }
}

void write_limits_json(const LimitsReport& r, const JointTrajectory& jt, const std::string& path) {
    json j;
    j["max_task_velocity"] = r.max_task_velocity;
    j["max_task_acceleration"] = r.max_task_acceleration;
    j["max_tracking_error_lin"] =
        jt.tracking_error_lin.size() ? jt.tracking_error_lin.maxCoeff() : 0.0;
    j["max_tracking_error_ang"] =
        jt.tracking_error_ang.size() ? jt.tracking_error_ang.maxCoeff() : 0.0;
    json entries = json::array();
    for (const auto& e : r.entries) {
        json je;
        je["quantity"] = e.quantity;
        je["joint"] = e.joint + 1;
        je["max_value"] = e.max_value;
        je["limit"] = e.limit;
        je["margin"] = e.margin;
        if (e.first_violation_node >= 0) je["first_violation_node"] = e.first_violation_node;
        entries.push_back(je);
    }
    j["entries"] = entries;
    j["violations"] = r.has_violations();
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write: " + path);
    out << j.dump(2) << '\n';
}

}  // namespace spillfree
