#include "spillfree/pipeline.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <future>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace spillfree;

namespace {

enum ExitCode { kOk = 0, kViolations = 1, kInfeasible = 2, kIoError = 3, kNumerical = 4 };

int log_level() {
    const char* env = std::getenv("SPILLFREE_LOG");
    if (!env) return 1;
    const std::string v(env);
    if (v == "quiet") return 0;
    if (v == "debug") return 2;
    return 1;
}

void info(const std::string& msg) {
    if (log_level() >= 1) std::cerr << msg << '\n';
}

Config config_from(const std::string& config_path) {
    return config_path.empty() ? default_config() : load_config(config_path);
}

int run_optimize_cmd(const std::string& config_path, const std::string& desired_path,
                     const std::string& out_dir) {
    const Config config = config_from(config_path);
    const DesiredTrajectory desired = read_desired_csv(desired_path, config.Ts);
    const OptimizeResult res = run_optimize(config, desired);
    fs::create_directories(out_dir);
    write_solve_report_json(res.solution, out_dir + "/solve_report.json");
    if (res.solution.status == SolveStatus::PrimalInfeasible ||
        res.solution.status == SolveStatus::DualInfeasible) {
        info("problem infeasible (" + std::string(to_string(res.solution.status)) + ")");
        return kInfeasible;
    }
    if (res.solution.status != SolveStatus::Optimal) {
        info("solver did not converge within the iteration limit");
        return kNumerical;
    }
    write_trajectory_csv(res.trajectory, out_dir + "/trajectory.csv");
    info("wrote " + out_dir + "/trajectory.csv (" + std::to_string(res.solution.iterations) +
         " iterations)");
    return kOk;
}

int run_simulate_cmd(const std::string& config_path, const std::string& traj_path,
                     const std::string& out_dir) {
    const Config config = config_from(config_path);
    const Trajectory traj = read_trajectory_csv(traj_path);
    const Rollout rollout = run_simulate(config, traj);
    fs::create_directories(out_dir);
    write_rollout_csv(rollout, traj.Ts, out_dir + "/rollout.csv");
    info("wrote " + out_dir + "/rollout.csv");
    return kOk;
}

int run_metrics_cmd(const std::string& config_path, const std::string& rollout_path,
                    const std::string& out_dir) {
    const Config config = config_from(config_path);
    double ts = 0.0;
    const Rollout rollout = read_rollout_csv(rollout_path, ts);
    const PipelineMetrics m = run_metrics(config, rollout);
    fs::create_directories(out_dir);
    write_metrics_json(m, out_dir + "/metrics.json");
    std::cout << "force_alignment_error " << m.slosh.force_alignment_error << '\n'
              << "kinematic_error " << m.slosh.kinematic_error << '\n'
              << "max_tilt " << m.slosh.max_tilt << '\n';
    return kOk;
}

int run_ik_cmd(const std::string& config_path, const std::string& traj_path,
               const std::string& robot_path, const std::string& q0_str,
               const std::string& out_dir, bool strict) {
    Config config = config_from(config_path);
    if (!robot_path.empty()) config.robot_path = robot_path;
    const RobotModel model =
        load_robot_model(config.robot_path.empty() ? bundled_robot_path() : config.robot_path);
    const Trajectory traj = read_trajectory_csv(traj_path);

    Eigen::VectorXd q0;
    if (!q0_str.empty()) {
        std::vector<double> vals;
        std::stringstream ss(q0_str);
        std::string tok;
        while (std::getline(ss, tok, ',')) vals.push_back(std::stod(tok));
        q0 = Eigen::Map<Eigen::VectorXd>(vals.data(), static_cast<Eigen::Index>(vals.size()));
    } else {
        info("no --q0 given, computing the initial configuration by iterative IK");
    }

    const IkResult res = run_ik(config, traj, model, q0);
    fs::create_directories(out_dir);
    write_joint_csv(res.joints, out_dir + "/joints.csv");
    write_limits_json(res.limits, res.joints, out_dir + "/limits.json");
    info("wrote " + out_dir + "/joints.csv");
    if (res.limits.has_violations()) {
        info("joint limit violations detected");
        if (strict) return kViolations;
    }
    return kOk;
}

std::vector<double> parse_sweep(const std::string& sweep) {
    // KEY=V1,V2,... ; only r is recognized.
    std::vector<double> values;
    const auto eq = sweep.find('=');
    if (eq == std::string::npos || sweep.substr(0, eq) != "r")
        throw std::runtime_error("unsupported sweep key, expected r=V1,V2,...");
    std::stringstream ss(sweep.substr(eq + 1));
    std::string tok;
    while (std::getline(ss, tok, ',')) values.push_back(std::stod(tok));
    if (values.empty()) throw std::runtime_error("empty sweep");
    return values;
}

void write_step_scenario(double r, const std::string& out_dir) {
    const Config config = demo_step_config(r);
    const DesiredTrajectory desired = demo_step_desired(config);
    const std::string tag = "r" + std::to_string(static_cast<int>(std::lround(r)));
    fs::create_directories(out_dir);
    write_desired_csv(desired, out_dir + "/desired_step_" + tag + ".csv");
    std::ofstream cfg(out_dir + "/config_step_" + tag + ".json");
    cfg << "{\n  \"object_height\": 0.1,\n  \"ratio\": " << r
        << ",\n  \"Ts\": 0.033,\n  \"horizon\": 3.0,\n  \"bounds\": {\"jerk\": "
        << config.max_jerk << "}\n}\n";
}

int run_demo_step(const std::string& sweep, const std::string& out_dir, bool run_pipeline) {
    const std::vector<double> rs = sweep.empty() ? std::vector<double>{3.0, 6.0, 9.0}
                                                 : parse_sweep(sweep);
    for (double r : rs) write_step_scenario(r, out_dir);
    info("wrote step scenarios to " + out_dir);
    if (!run_pipeline) return kOk;

    // Each worker owns its solver workspace; scenarios are independent.
    std::vector<std::future<int>> workers;
    for (double r : rs) {
        workers.push_back(std::async(std::launch::async, [r, &out_dir]() -> int {
            const Config config = demo_step_config(r);
            const DesiredTrajectory desired = demo_step_desired(config);
            const OptimizeResult res = run_optimize(config, desired);
            if (res.solution.status != SolveStatus::Optimal) return kNumerical;
            const std::string tag = "r" + std::to_string(static_cast<int>(std::lround(r)));
            write_trajectory_csv(res.trajectory, out_dir + "/trajectory_" + tag + ".csv");
            const Rollout rollout = run_simulate(config, res.trajectory);
            write_rollout_csv(rollout, config.Ts, out_dir + "/rollout_" + tag + ".csv");
            write_metrics_json(run_metrics(config, rollout), out_dir + "/metrics_" + tag + ".json");
            return kOk;
        }));
    }
    int code = kOk;
    for (auto& w : workers) code = std::max(code, w.get());
    return code;
}

int run_demo_square(const std::string& out_dir) {
    const Config config = demo_square_config();
    const DesiredTrajectory desired = demo_square_desired(config);
    fs::create_directories(out_dir);
    write_desired_csv(desired, out_dir + "/desired_square.csv");
    std::ofstream cfg(out_dir + "/config_square.json");
    cfg << "{\n  \"rod_length\": 0.6,\n  \"Ts\": 0.033,\n  \"horizon\": 6.0\n}\n";
    info("wrote square scenario to " + out_dir);
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"slosh-free trajectory generation toolkit"};
    app.require_subcommand(1);

    std::string config_path, out_dir = ".", desired_path, traj_path, rollout_path;
    std::string robot_path, q0_str, sweep;
    bool strict = false, run_pipeline = false;

    auto* optimize = app.add_subcommand("optimize", "optimize a trajectory against a desired one");
    optimize->add_option("desired", desired_path, "desired trajectory CSV")->required();
    optimize->add_option("--config", config_path, "config JSON");
    optimize->add_option("--out", out_dir, "output directory");

    auto* simulate = app.add_subcommand("simulate", "nonlinear rollout of an optimized trajectory");
    simulate->add_option("trajectory", traj_path, "trajectory CSV")->required();
    simulate->add_option("--config", config_path, "config JSON");
    simulate->add_option("--out", out_dir, "output directory");

    auto* metrics = app.add_subcommand("metrics", "slosh metrics of a rollout");
    metrics->add_option("rollout", rollout_path, "rollout CSV")->required();
    metrics->add_option("--config", config_path, "config JSON");
    metrics->add_option("--out", out_dir, "output directory");

    auto* ik = app.add_subcommand("ik", "joint-space trajectory via differential IK");
    ik->add_option("trajectory", traj_path, "trajectory CSV")->required();
    ik->add_option("--config", config_path, "config JSON");
    ik->add_option("--robot", robot_path, "robot model JSON");
    ik->add_option("--q0", q0_str, "initial joint configuration, comma separated");
    ik->add_option("--out", out_dir, "output directory");
    ik->add_flag("--strict", strict, "nonzero exit on limit violations");

    auto* demo_step = app.add_subcommand("demo-step", "generate the 0.3 m step scenario");
    demo_step->add_option("--sweep", sweep, "r=V1,V2,... ratios (default r=3,6,9)");
    demo_step->add_option("--out", out_dir, "output directory");
    demo_step->add_flag("--run", run_pipeline, "also run optimize/simulate/metrics per scenario");

    auto* demo_square = app.add_subcommand("demo-square", "generate the square-path scenario");
    demo_square->add_option("--out", out_dir, "output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (optimize->parsed()) return run_optimize_cmd(config_path, desired_path, out_dir);
        if (simulate->parsed()) return run_simulate_cmd(config_path, traj_path, out_dir);
        if (metrics->parsed()) return run_metrics_cmd(config_path, rollout_path, out_dir);
        if (ik->parsed())
            return run_ik_cmd(config_path, traj_path, robot_path, q0_str, out_dir, strict);
        if (demo_step->parsed()) return run_demo_step(sweep, out_dir, run_pipeline);
        if (demo_square->parsed()) return run_demo_square(out_dir);
    } catch (const std::runtime_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kIoError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kNumerical;
    }
    return kOk;
}
