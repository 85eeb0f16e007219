#include "spillfree/robot.hpp"

#include "spillfree/pendulum.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <stdexcept>

namespace spillfree {

using nlohmann::json;

Eigen::Matrix3d LinkInertia::inertia_matrix() const {
    Eigen::Matrix3d I;
    I << inertia(0), inertia(1), inertia(2),
         inertia(1), inertia(3), inertia(4),
         inertia(2), inertia(4), inertia(5);
    return I;
}

namespace {

Eigen::Isometry3d dh_transform(const DhParams& dh, double theta) {
    Eigen::Isometry3d T = Eigen::Isometry3d::Identity();
    T.linear() = Eigen::AngleAxisd(dh.alpha, Vec3::UnitX()).toRotationMatrix();
    T.translation() = Vec3(dh.a, 0.0, 0.0);
    Eigen::Isometry3d Tz = Eigen::Isometry3d::Identity();
    Tz.linear() = Eigen::AngleAxisd(theta + dh.theta_offset, Vec3::UnitZ()).toRotationMatrix();
    Tz.translation() = Vec3(0.0, 0.0, dh.d);
    return T * Tz;
}

Eigen::Isometry3d tool_transform(const RobotModel& model) {
    Eigen::Isometry3d T = Eigen::Isometry3d::Identity();
    T.linear() = model.tool.rotation_matrix();
    T.translation() = model.tool.translation();
    return T;
}

}  // namespace

RobotModel load_robot_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open robot model: " + path);
    json j;
    in >> j;

    RobotModel m;
    m.name = j.value("name", "robot");
    if (!j.contains("joints") || !j["joints"].is_array() || j["joints"].empty())
        throw std::runtime_error("robot model: missing joints array");
    for (const auto& jj : j["joints"]) {
        Joint joint;
        if (jj.value("type", "revolute") != std::string("revolute"))
            throw std::runtime_error("robot model: only revolute joints supported");
        const auto& dh = jj.at("dh");
        joint.dh.a = dh.value("a", 0.0);
        joint.dh.d = dh.value("d", 0.0);
        joint.dh.alpha = dh.value("alpha", 0.0);
        joint.dh.theta_offset = dh.value("theta_offset", 0.0);
        if (jj.contains("limits")) {
            const auto& lim = jj["limits"];
            joint.limits.q_min = lim.value("q_min", -kLimitUnbounded);
            joint.limits.q_max = lim.value("q_max", kLimitUnbounded);
            joint.limits.dq = lim.value("dq", kLimitUnbounded);
            joint.limits.ddq = lim.value("ddq", kLimitUnbounded);
            joint.limits.dddq = lim.value("dddq", kLimitUnbounded);
            joint.limits.tau = lim.value("tau", kLimitUnbounded);
        }
        m.joints.push_back(joint);
    }
    if (j.contains("inertia")) {
        for (const auto& ji : j["inertia"]) {
            LinkInertia li;
            li.mass = ji.at("mass").get<double>();
            const auto com = ji.at("com");
            li.com = Vec3(com[0], com[1], com[2]);
            const auto in6 = ji.at("inertia");
            for (int k = 0; k < 6; ++k) li.inertia(k) = in6[k].get<double>();
            m.inertia.push_back(li);
        }
        if (m.inertia.size() != m.joints.size())
            throw std::runtime_error("robot model: inertia count must match joint count");
    }
    if (j.contains("tool")) {
        const auto& jt = j["tool"];
        Vec3 t = Vec3::Zero();
        if (jt.contains("translation")) {
            const auto& tt = jt["translation"];
            t = Vec3(tt[0], tt[1], tt[2]);
        }
        Eigen::Matrix3d R = Eigen::Matrix3d::Identity();
        if (jt.contains("rpy")) {
            const auto& r = jt["rpy"];
            R = (Eigen::AngleAxisd(r[2].get<double>(), Vec3::UnitZ()) *
                 Eigen::AngleAxisd(r[1].get<double>(), Vec3::UnitY()) *
                 Eigen::AngleAxisd(r[0].get<double>(), Vec3::UnitX()))
                    .toRotationMatrix();
        }
        m.tool = UnitDualQuaternion::from_transform(R, t);
    }
    return m;
}

std::string bundled_robot_path() { return std::string(SPILLFREE_DATA_DIR) + "/panda.json"; }

UnitDualQuaternion pose_from_state(const PendulumState& state, const PendulumParams& params,
                                   double yaw) {
    return UnitDualQuaternion::from_transform(
        container_rotation(state.theta, state.phi, yaw), mass_position(state, params));
}

UnitDualQuaternion forward_kinematics(const Eigen::VectorXd& q, const RobotModel& model) {
    if (q.size() != model.dof()) throw std::invalid_argument("joint vector size mismatch");
    UnitDualQuaternion pose;
    for (int i = 0; i < model.dof(); ++i) {
        const Eigen::Isometry3d T = dh_transform(model.joints[i].dh, q(i));
        pose = pose * UnitDualQuaternion::from_transform(T.linear(), T.translation());
    }
    pose = pose * model.tool;
    return pose.normalized();
}

Eigen::MatrixXd geometric_jacobian(const Eigen::VectorXd& q, const RobotModel& model) {
    if (q.size() != model.dof()) throw std::invalid_argument("joint vector size mismatch");
    const int n = model.dof();

    std::vector<Vec3> axes(n), origins(n);
    Eigen::Isometry3d T = Eigen::Isometry3d::Identity();
    for (int i = 0; i < n; ++i) {
        T = T * dh_transform(model.joints[i].dh, q(i));
        axes[i] = T.linear().col(2);  // joint i rotates about its own z
        origins[i] = T.translation();
    }
    const Vec3 p_ee = (T * tool_transform(model)).translation();

    Eigen::MatrixXd J(6, n);
    for (int i = 0; i < n; ++i) {
        J.col(i).head<3>() = axes[i];
        J.col(i).tail<3>() = axes[i].cross(p_ee - origins[i]);
    }
    return J;
}

namespace {

// Finite differences along the node grid, central inside, one-sided at the ends.
Eigen::MatrixXd finite_difference(const Eigen::MatrixXd& v, double Ts) {
    const Eigen::Index n = v.rows();
    Eigen::MatrixXd d(n, v.cols());
    if (n == 1) {
        d.setZero();
        return d;
    }
    d.row(0) = (v.row(1) - v.row(0)) / Ts;
    d.row(n - 1) = (v.row(n - 1) - v.row(n - 2)) / Ts;
    for (Eigen::Index k = 1; k + 1 < n; ++k) d.row(k) = (v.row(k + 1) - v.row(k - 1)) / (2.0 * Ts);
    return d;
}

Eigen::VectorXd damped_pinv_solve(const Eigen::MatrixXd& J, const Vec6& twist, double lambda) {
    const Eigen::MatrixXd JJt =
        J * J.transpose() + lambda * lambda * Eigen::MatrixXd::Identity(6, 6);
    return J.transpose() * JJt.ldlt().solve(twist);
}

Vec6 pose_error(const UnitDualQuaternion& desired, const UnitDualQuaternion& actual) {
    Vec6 err;
    err.head<3>() = quaternion_log(desired.orientation() * actual.orientation().conjugate());
    err.tail<3>() = desired.translation() - actual.translation();
    return err;
}

}  // namespace

JointTrajectory differential_ik(const std::vector<UnitDualQuaternion>& poses,
                                const Eigen::VectorXd& q0, const RobotModel& model, double Ts,
                                const IkOptions& opts) {
    if (poses.empty()) throw std::invalid_argument("empty pose sequence");
    if (!(Ts > 0.0)) throw std::invalid_argument("Ts must be > 0");
    const int n = model.dof();
    const int nodes = static_cast<int>(poses.size());

    {
        const Vec6 e0 = pose_error(poses.front(), forward_kinematics(q0, model));
        if (e0.tail<3>().norm() > 1e-3)
            throw std::invalid_argument("q0 does not match the first pose (err " +
                                        std::to_string(e0.tail<3>().norm()) + " m)");
    }

    JointTrajectory jt;
    jt.Ts = Ts;
    jt.q.resize(nodes, n);
    jt.dq.resize(nodes, n);
    jt.tracking_error_lin.resize(nodes);
    jt.tracking_error_ang.resize(nodes);

    Eigen::VectorXd q = q0;
    for (int k = 0; k < nodes; ++k) {
        const UnitDualQuaternion fk = forward_kinematics(q, model);
        const Vec6 err = pose_error(poses[k], fk);
        jt.tracking_error_ang(k) = err.head<3>().norm();
        jt.tracking_error_lin(k) = err.tail<3>().norm();
        if (jt.tracking_error_lin(k) > opts.max_pose_error)
            throw std::runtime_error("differential IK diverged at node " + std::to_string(k));

        Vec6 twist = opts.kp * err;
        if (k + 1 < nodes) {
            twist.head<3>() += quaternion_log(poses[k + 1].orientation() *
                                              poses[k].orientation().conjugate()) /
                               Ts;
            twist.tail<3>() += (poses[k + 1].translation() - poses[k].translation()) / Ts;
        }

        const Eigen::MatrixXd J = geometric_jacobian(q, model);
        // Gram determinant over the smaller dimension so arms with fewer than
        // six joints are not flagged as permanently singular.
        const Eigen::MatrixXd gram = J.cols() < J.rows()
                                         ? Eigen::MatrixXd(J.transpose() * J)
                                         : Eigen::MatrixXd(J * J.transpose());
        const double manip = std::sqrt(std::max(gram.determinant(), 0.0));
        if (manip < opts.manip_threshold)
            throw std::runtime_error("manipulator singularity at node " + std::to_string(k));
        double lambda = opts.lambda;
        if (manip < 1e-3) lambda += 1e-2 * (1.0 - manip / 1e-3);  // inflate near singularities

        const Eigen::VectorXd dq = damped_pinv_solve(J, twist, lambda);
        jt.q.row(k) = q.transpose();
        jt.dq.row(k) = dq.transpose();
        if (k + 1 < nodes) q += Ts * dq;
    }

    jt.ddq = finite_difference(jt.dq, Ts);
    jt.dddq = finite_difference(jt.ddq, Ts);
    return jt;
}

std::optional<Eigen::VectorXd> solve_ik_pose(const UnitDualQuaternion& target,
                                             const Eigen::VectorXd& q_seed,
                                             const RobotModel& model, int max_iters, double tol) {
    Eigen::VectorXd q = q_seed;
    for (int it = 0; it < max_iters; ++it) {
        const Vec6 err = pose_error(target, forward_kinematics(q, model));
        if (err.squaredNorm() < tol * tol) return q;
        const Eigen::MatrixXd J = geometric_jacobian(q, model);
        q += damped_pinv_solve(J, err, 1e-3) * 0.8;
    }
    const Vec6 err = pose_error(target, forward_kinematics(q, model));
    if (err.squaredNorm() < tol * tol) return q;
    return std::nullopt;
}

LimitsReport limits_report(const JointTrajectory& jt, const RobotModel& model) {
    const int n = model.dof();
    const int nodes = jt.node_count();
    LimitsReport report;

    auto scan = [&](const Eigen::MatrixXd& data, const char* quantity,
                    auto limit_of, auto violates) {
        if (data.rows() != nodes || data.cols() != n) return;
        for (int j = 0; j < n; ++j) {
            LimitEntry e;
            e.quantity = quantity;
            e.joint = j;
            e.limit = limit_of(model.joints[j].limits);
            double worst = 0.0;
            for (int k = 0; k < nodes; ++k) {
                worst = std::max(worst, std::abs(data(k, j)));
                if (e.first_violation_node < 0 && violates(data(k, j), model.joints[j].limits))
                    e.first_violation_node = k;
            }
            e.max_value = worst;
            e.margin = e.limit - worst;
            report.entries.push_back(e);
        }
    };

    // Positions are two-sided, the rest are symmetric magnitude limits.
    for (int j = 0; j < n; ++j) {
        LimitEntry e;
        e.quantity = "q";
        e.joint = j;
        const auto& lim = model.joints[j].limits;
        double worst_violation = -kLimitUnbounded;
        double max_abs = 0.0;
        for (int k = 0; k < jt.node_count(); ++k) {
            const double v = jt.q(k, j);
            max_abs = std::max(max_abs, std::abs(v));
            const double excess = std::max(v - lim.q_max, lim.q_min - v);
            worst_violation = std::max(worst_violation, excess);
            if (e.first_violation_node < 0 && excess > 0.0) e.first_violation_node = k;
        }
        e.max_value = max_abs;
        e.limit = lim.q_max;
        e.margin = -worst_violation;
        report.entries.push_back(e);
    }
    scan(jt.dq, "dq", [](const JointLimits& l) { return l.dq; },
         [](double v, const JointLimits& l) { return std::abs(v) > l.dq; });
    scan(jt.ddq, "ddq", [](const JointLimits& l) { return l.ddq; },
         [](double v, const JointLimits& l) { return std::abs(v) > l.ddq; });
    scan(jt.dddq, "dddq", [](const JointLimits& l) { return l.dddq; },
         [](double v, const JointLimits& l) { return std::abs(v) > l.dddq; });
    scan(jt.tau, "tau", [](const JointLimits& l) { return l.tau; },
         [](double v, const JointLimits& l) { return std::abs(v) > l.tau; });

    // Task-space envelope from FK positions.
    if (nodes >= 2) {
        Eigen::MatrixXd pos(nodes, 3);
        for (int k = 0; k < nodes; ++k)
            pos.row(k) = forward_kinematics(jt.q.row(k).transpose(), model).translation().transpose();
        const Eigen::MatrixXd vel = finite_difference(pos, jt.Ts);
        const Eigen::MatrixXd acc = finite_difference(vel, jt.Ts);
        report.max_task_velocity = vel.rowwise().norm().maxCoeff();
        report.max_task_acceleration = acc.rowwise().norm().maxCoeff();
    }
    return report;
}

Eigen::MatrixXd joint_torques(const JointTrajectory& jt, const RobotModel& model) {
    if (!model.has_dynamics()) throw std::runtime_error("dynamics unavailable");
    const int n = model.dof();
    const int nodes = jt.node_count();
    Eigen::MatrixXd tau(nodes, n);

    for (int node = 0; node < nodes; ++node) {
        // Outward recursion (Craig, modified DH), gravity as base acceleration.
        std::vector<Eigen::Matrix3d> R(n);   // {}^{i-1}_i R
        std::vector<Vec3> P(n);              // origin of frame i in frame i-1
        std::vector<Vec3> w(n), dw(n), dv(n), F(n), N(n), Pc(n);
        Vec3 w_prev = Vec3::Zero();
        Vec3 dw_prev = Vec3::Zero();
        Vec3 dv_prev = Vec3(0.0, 0.0, 9.81);

        for (int i = 0; i < n; ++i) {
            const auto& dh = model.joints[i].dh;
            const Eigen::Isometry3d T = dh_transform(dh, jt.q(node, i));
            R[i] = T.linear();
            P[i] = T.translation();
            const Eigen::Matrix3d Rt = R[i].transpose();
            const double qd = jt.dq(node, i);
            const double qdd = jt.ddq(node, i);

            w[i] = Rt * w_prev + qd * Vec3::UnitZ();
            dw[i] = Rt * dw_prev + (Rt * w_prev).cross(qd * Vec3::UnitZ()) + qdd * Vec3::UnitZ();
            dv[i] = Rt * (dw_prev.cross(P[i]) + w_prev.cross(w_prev.cross(P[i])) + dv_prev);

            const auto& li = model.inertia[i];
            Pc[i] = li.com;
            const Vec3 dvc = dw[i].cross(Pc[i]) + w[i].cross(w[i].cross(Pc[i])) + dv[i];
            F[i] = li.mass * dvc;
            N[i] = li.inertia_matrix() * dw[i] + w[i].cross(li.inertia_matrix() * w[i]);

            w_prev = w[i];
            dw_prev = dw[i];
            dv_prev = dv[i];
        }

        Vec3 f_next = Vec3::Zero();
        Vec3 n_next = Vec3::Zero();
        for (int i = n - 1; i >= 0; --i) {
            Vec3 f, nn;
            if (i + 1 < n) {
                f = R[i + 1] * f_next + F[i];
                nn = N[i] + R[i + 1] * n_next + Pc[i].cross(F[i]) +
                     P[i + 1].cross(R[i + 1] * f_next);
            } else {
                f = F[i];
                nn = N[i] + Pc[i].cross(F[i]);
            }
            tau(node, i) = nn.z();
            f_next = f;
            n_next = nn;
        }
    }
    return tau;
}

}  // namespace spillfree
