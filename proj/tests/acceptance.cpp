// End-to-end acceptance checks. Each criterion prints a single PASS/FAIL
// line; the exit code is the number of failed criteria.

#include "spillfree/pipeline.hpp"

#include "support/dense_qp.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <filesystem>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace spillfree;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(int criterion, bool pass, const std::string& detail) {
    std::printf("criterion %d: %s%s%s\n", criterion, pass ? "PASS" : "FAIL",
                detail.empty() ? "" : " — ", detail.c_str());
    if (!pass) ++g_failures;
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3g", v);
    return buf;
}

struct StepRun {
    OptimizeResult opt;
    Rollout rollout;
    PipelineMetrics metrics;
    Config config;
};

StepRun run_step(double ratio) {
    StepRun r;
    r.config = demo_step_config(ratio);
    const DesiredTrajectory desired = demo_step_desired(r.config);
    r.opt = run_optimize(r.config, desired);
    if (r.opt.solution.status == SolveStatus::Optimal) {
        r.rollout = run_simulate(r.config, r.opt.trajectory);
        r.metrics = run_metrics(r.config, r.rollout);
    }
    return r;
}

// Planar trajectory integrated from the nonlinear equations of motion;
// axis 0 excites x (theta plane), axis 1 excites y (phi plane).
Trajectory planar_eom_trajectory(int axis, const PendulumParams& pp) {
    Trajectory traj;
    traj.Ts = 1e-3;
    PendulumState s;
    const int steps = 3000;
    for (int k = 0; k < steps; ++k) {
        const double t = k * traj.Ts;
        Vec3 u = Vec3::Zero();
        u(axis) = 2.0 * std::sin(2.0 * M_PI * t);
        u(2) = 0.5 * std::sin(1.3 * t);
        traj.states.push_back(s);
        traj.inputs.push_back(u);
        traj.mass.push_back(mass_kinematics(s, u, pp));
        s = step_rk4(s, u, traj.Ts, pp);
    }
    traj.states.push_back(s);
    traj.mass.push_back(mass_kinematics(s, traj.inputs.back(), pp));
    return traj;
}

QPProblem random_instance(unsigned seed, DiscreteModel* dm_out = nullptr,
                          TrajectorySpec* spec_out = nullptr, QPProblem* raw_out = nullptr) {
    std::mt19937 rng(seed);
    std::uniform_int_distribution<int> n_dist(6, 10);
    std::uniform_real_distribution<double> l_dist(0.3, 0.9), a_dist(0.01, 0.06);
    std::normal_distribution<double> target(0.0, 0.02);

    const int N = n_dist(rng);
    PendulumParams pp;
    pp.rod_length = l_dist(rng);
    const double Ts = std::max(0.02, a_dist(rng));
    const DiscreteModel dm = discretize_zoh(build_continuous(pp), Ts);
    if (dm_out) *dm_out = dm;

    TrajectorySpec spec;
    spec.Ts = Ts;
    spec.Yd = Eigen::MatrixXd::Zero(N + 1, 6);
    double x = 0.0;
    for (int k = 0; k <= N; ++k) {
        spec.Yd(k, 0) = x;
        spec.Yd(k, 1) = 0.5 * x;
        spec.Yd(k, 2) = -pp.rod_length;
        if (k > 0 && k < N) x += std::abs(target(rng));
    }
    spec.Yd(N, 0) = spec.Yd(N - 1, 0);
    // Pinned start, free end: u = 0 is always feasible, while the tight
    // input and jerk boxes leave some inequality rows active at the optimum.
    spec.pin_start = true;
    spec.pin_end = false;
    spec.rest_to_rest = false;
    spec.ub_state.segment<2>(3).setConstant(0.8);
    spec.lb_state.segment<2>(3).setConstant(-0.8);
    spec.ub_state.segment<3>(5).setConstant(10.0);
    spec.lb_state.segment<3>(5).setConstant(-10.0);
    spec.ub_input.setConstant(3.0);
    spec.lb_input.setConstant(-3.0);
    spec.ub_jerk.setConstant(100.0);
    spec.lb_jerk.setConstant(-100.0);

    QPProblem p = assemble(dm, spec);
    if (spec_out) *spec_out = spec;
    if (raw_out) *raw_out = p;
    const DecisionLayout layout(N);
    SparseMat reg(layout.total(), layout.total());
    std::vector<Eigen::Triplet<double>> trip;
    for (int k = 0; k < N; ++k)
        for (int j = 0; j < 3; ++j)
            trip.emplace_back(layout.input_index(k) + j, layout.input_index(k) + j, 1e-2);
    reg.setFromTriplets(trip.begin(), trip.end());
    p.H = p.H + reg;
    return p;
}

double max_jerk_of(const Trajectory& traj) {
    double worst = 0.0;
    for (std::size_t k = 0; k + 1 < traj.inputs.size(); ++k)
        worst = std::max(worst,
                         ((traj.inputs[k + 1] - traj.inputs[k]) / traj.Ts).cwiseAbs().maxCoeff());
    return worst;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

int main() {
    const fs::path tmp = fs::temp_directory_path() / "spillfree-acceptance";
    fs::create_directories(tmp);

    // --- Criterion 1: step-scenario sweep improves with the rod ratio. -----
    const auto t0 = std::chrono::steady_clock::now();
    const StepRun r3 = run_step(3.0), r6 = run_step(6.0), r9 = run_step(9.0);
    const double sweep_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    {
        bool pass = r3.opt.solution.status == SolveStatus::Optimal &&
                    r6.opt.solution.status == SolveStatus::Optimal &&
                    r9.opt.solution.status == SolveStatus::Optimal;
        std::string detail;
        if (pass) {
            const double f3 = r3.metrics.slosh.force_alignment_error;
            const double f6 = r6.metrics.slosh.force_alignment_error;
            const double f9 = r9.metrics.slosh.force_alignment_error;
            const double k3 = r3.metrics.slosh.kinematic_error;
            const double k6 = r6.metrics.slosh.kinematic_error;
            const double k9 = r9.metrics.slosh.kinematic_error;
            pass = f3 > f6 && f6 > f9 && k3 > k6 && k6 > k9 && k3 <= 1e-2 && f3 <= 5e-2 &&
                   sweep_seconds < 30.0;
            detail = "force " + fmt(f3) + "/" + fmt(f6) + "/" + fmt(f9) + ", kinematic " +
                     fmt(k3) + "/" + fmt(k6) + "/" + fmt(k9) + ", " + fmt(sweep_seconds) + " s";
        } else {
            detail = "a step solve did not reach Optimal";
        }
        report(1, pass, detail);
    }

    // --- Criterion 2: nonlinear trajectories satisfy the slosh-free ---------
    // kinematic condition in each excitation plane.
    {
        PendulumParams pp;
        pp.rod_length = 0.6;
        double worst_ratio = 0.0;
        for (int axis : {0, 1}) {
            const Trajectory traj = planar_eom_trajectory(axis, pp);
            double max_acc = 0.0;
            for (const auto& m : traj.mass) max_acc = std::max(max_acc, m.acceleration.norm());
            const SloshMetrics sm = slosh_metrics(traj, pp);
            worst_ratio = std::max(worst_ratio, sm.kinematic_error / max_acc);
        }
        report(2, worst_ratio < 1e-9, "residual / max accel = " + fmt(worst_ratio));
    }

    // --- Criterion 3: energy conservation of the free pendulum. -------------
    {
        PendulumParams pp;
        pp.rod_length = 0.6;
        PendulumState s;
        s.theta = 0.3;
        const auto [k0, u0] = total_energy(s, pp);
        for (int i = 0; i < 10000; ++i) s = step_rk4(s, Vec3::Zero(), 1e-3, pp);
        const auto [k1, u1] = total_energy(s, pp);
        const double drift = std::abs((k1 + u1) - (k0 + u0)) / std::abs(k0 + u0);
        report(3, drift < 1e-6, "relative drift " + fmt(drift));
    }

    // --- Criterion 4: exact discretization matches the closed forms. --------
    {
        double worst = 0.0;
        for (const double l : {0.3, 0.6, 0.9}) {
            for (const double Ts : {1e-3, 0.033, 0.1}) {
                PendulumParams pp;
                pp.rod_length = l;
                const DiscreteModel dm = discretize_zoh(build_continuous(pp), Ts);
                const double w = std::sqrt(pp.gravity / l);
                const double c = std::cos(w * Ts), sn = std::sin(w * Ts);
                for (int axis = 0; axis < 3; ++axis) {
                    worst = std::max({worst, std::abs(dm.A(axis, axis) - 1.0),
                                      std::abs(dm.A(axis, 5 + axis) - Ts),
                                      std::abs(dm.B(axis, axis) - 0.5 * Ts * Ts),
                                      std::abs(dm.B(5 + axis, axis) - Ts)});
                }
                worst = std::max({worst, std::abs(dm.A(3, 3) - c),
                                  std::abs(dm.A(3, 8) - sn / w), std::abs(dm.A(8, 3) + w * sn),
                                  std::abs(dm.B(3, 0) - (1.0 - c) / (l * w * w)),
                                  std::abs(dm.B(8, 0) - sn / (l * w)),
                                  std::abs(dm.B(4, 1) + (1.0 - c) / (l * w * w)),
                                  std::abs(dm.B(9, 1) + sn / (l * w))});
            }
        }
        report(4, worst < 1e-10, "max deviation " + fmt(worst));
    }

    // --- Criterion 5: solver agrees with an independent dense solver on -----
    // random structured instances, and dropping the constant cost term
    // cannot move the minimizer.
    {
        double worst_diff = 0.0, worst_eq = 0.0, worst_const = 0.0;
        bool solved = true;
        for (unsigned seed = 1; seed <= 50 && solved; ++seed) {
            DiscreteModel dm;
            TrajectorySpec spec;
            QPProblem raw;
            const QPProblem p = random_instance(seed, &dm, &spec, &raw);
            const Solution sol = solve(p);
            if (sol.status != SolveStatus::Optimal) {
                solved = false;
                break;
            }
            worst_eq = std::max(worst_eq, (p.A_eq * sol.chi - p.b_eq).cwiseAbs().maxCoeff());
            const testing::DenseQpResult oracle = testing::solve_dense_qp(p);
            if (!oracle.converged) {
                solved = false;
                break;
            }
            worst_diff = std::max(worst_diff, (sol.chi - oracle.x).cwiseAbs().maxCoeff());

            // The assembled quadratic cost equals the tracking objective up
            // to a chi-independent constant, so dropping that constant
            // cannot move the minimizer.
            const int N = spec.horizon();
            const DecisionLayout layout(N);
            std::mt19937 rng(seed * 7u + 1u);
            std::normal_distribution<double> nd(0.0, 1.0);
            double c_ref = 0.0;
            for (int trial = 0; trial < 5; ++trial) {
                Eigen::VectorXd chi(raw.g.size());
                for (Eigen::Index i = 0; i < chi.size(); ++i) chi(i) = nd(rng);
                double tracking = 0.0;
                for (int k = 0; k <= N; ++k) {
                    const Vec10 xk = chi.segment<10>(layout.state_index(k));
                    const Vec6 ytil = spec.Yd.row(k).transpose() - dm.output_offset;
                    tracking += 0.5 * (dm.C * xk - ytil).squaredNorm();
                }
                const double quad = 0.5 * chi.dot(raw.H * chi) - raw.g.dot(chi);
                const double diff = tracking - quad;
                if (trial == 0) c_ref = diff;
                worst_const = std::max(worst_const,
                                       std::abs(diff - c_ref) / std::max(1.0, std::abs(c_ref)));
            }
        }
        const bool pass = solved && worst_diff <= 1e-6 && worst_eq <= 1e-8 && worst_const <= 1e-8;
        report(5, pass,
               solved ? ("max |chi - oracle| " + fmt(worst_diff) + ", eq residual " +
                         fmt(worst_eq))
                      : "a solve or oracle run failed");
    }

    // --- Criterion 6: boundary pins and rest-to-rest inputs. ----------------
    {
        const Trajectory& traj = r6.opt.trajectory;
        const DesiredTrajectory desired = demo_step_desired(r6.config);
        bool pass = r6.opt.solution.status == SolveStatus::Optimal && traj.states.size() >= 2;
        double worst = 0.0;
        if (pass) {
            const PendulumParams pp = r6.config.pendulum();
            const auto& first = traj.states.front();
            const auto& last = traj.states.back();
            worst = std::max({(mass_position(first, pp) -
                               Vec3(desired.position.row(0).transpose()))
                                  .cwiseAbs()
                                  .maxCoeff(),
                              (mass_position(last, pp) -
                               Vec3(desired.position.bottomRows<1>().transpose()))
                                  .cwiseAbs()
                                  .maxCoeff(),
                              std::abs(first.theta), std::abs(first.phi),
                              std::abs(first.theta_rate), std::abs(first.phi_rate),
                              std::abs(last.theta), std::abs(last.phi),
                              std::abs(last.theta_rate), std::abs(last.phi_rate),
                              first.pivot_rate.cwiseAbs().maxCoeff(),
                              last.pivot_rate.cwiseAbs().maxCoeff(),
                              traj.inputs.front().cwiseAbs().maxCoeff(),
                              traj.inputs.back().cwiseAbs().maxCoeff()});
            pass = worst <= 1e-8;
        }
        report(6, pass, "worst boundary deviation " + fmt(worst));
    }

    // --- Criterion 7: jerk bound holds on every optimal solve. --------------
    {
        bool pass = true;
        double worst = 0.0;
        for (const StepRun* r : {&r3, &r6, &r9}) {
            if (r->opt.solution.status != SolveStatus::Optimal) {
                pass = false;
                continue;
            }
            const double mj = max_jerk_of(r->opt.trajectory);
            worst = std::max(worst, mj - r->config.max_jerk);
            pass = pass && mj <= r->config.max_jerk + 1e-8;
        }
        report(7, pass, "worst bound excess " + fmt(worst));
    }

    // --- Criterion 8: nonlinear replay stays close to the planned motion. ---
    {
        bool pass = r6.opt.solution.status == SolveStatus::Optimal &&
                    r6.rollout.size() == r6.opt.trajectory.states.size();
        double tilt = 0.0, div = 0.0;
        if (pass) {
            const PendulumParams pp = r6.config.pendulum();
            for (std::size_t k = 0; k < r6.rollout.size(); ++k) {
                tilt = std::max({tilt, std::abs(r6.rollout[k].state.theta),
                                 std::abs(r6.rollout[k].state.phi)});
                div = std::max(div, (mass_position(r6.opt.trajectory.states[k], pp) -
                                     r6.rollout[k].mass.position)
                                        .norm());
            }
            pass = tilt < 0.15 && div < 5e-3;
        }
        report(8, pass, "max tilt " + fmt(tilt) + " rad, mass divergence " + fmt(div) + " m");
    }

    // --- Criterion 9: square-path joint trajectory round trips through FK, --
    // and the point-mass validity error at rod ratio 3 is 1.85 %.
    {
        bool pass = true;
        double worst_lin = 0.0, worst_ang = 0.0;
        std::string detail;
        try {
            const Config cfg = demo_square_config();
            const DesiredTrajectory desired = demo_square_desired(cfg);
            const OptimizeResult opt = run_optimize(cfg, desired);
            pass = opt.solution.status == SolveStatus::Optimal;
            if (pass) {
                const RobotModel model = load_robot_model(bundled_robot_path());
                const IkResult ik = run_ik(cfg, opt.trajectory, model);
                const std::vector<UnitDualQuaternion> targets =
                    trajectory_poses(cfg, opt.trajectory);
                for (int k = 0; k < ik.joints.node_count(); ++k) {
                    const UnitDualQuaternion fk =
                        forward_kinematics(ik.joints.q.row(k).transpose(), model);
                    worst_lin = std::max(
                        worst_lin,
                        (fk.translation() - targets[static_cast<std::size_t>(k)].translation())
                            .norm());
                    worst_ang = std::max(
                        worst_ang,
                        quaternion_log(fk.orientation() *
                                       targets[static_cast<std::size_t>(k)]
                                           .orientation()
                                           .conjugate())
                            .norm());
                }
                pass = worst_lin <= 1e-3 && worst_ang <= 1e-3;
            }
            const double p_validity = validity_error(3.0 * 0.1, 0.1);
            pass = pass && std::abs(p_validity - 1.0 / 54.0) < 1e-15 &&
                   std::abs(100.0 * p_validity - 1.85) < 0.005;
            detail = "FK error " + fmt(worst_lin) + " m / " + fmt(worst_ang) + " rad, p(r=3) " +
                     fmt(100.0 * p_validity) + " %";
        } catch (const std::exception& e) {
            pass = false;
            detail = e.what();
        }
        report(9, pass, detail);
    }

    // --- Criterion 10: the whole pipeline is byte-for-byte deterministic. ---
    {
        auto run_once = [&](const std::string& tag) {
            const StepRun r = run_step(6.0);
            const fs::path tp = tmp / (tag + "_traj.csv");
            const fs::path rp = tmp / (tag + "_roll.csv");
            write_trajectory_csv(r.opt.trajectory, tp.string());
            write_rollout_csv(r.rollout, r.config.Ts, rp.string());
            return slurp(tp) + "\n---\n" + slurp(rp);
        };
        const std::string a = run_once("a"), b = run_once("b");
        report(10, !a.empty() && a == b, "");
    }

    return g_failures;
}
