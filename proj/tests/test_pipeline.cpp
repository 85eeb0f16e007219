#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "spillfree/pipeline.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace spillfree;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
    static const fs::path dir = [] {
        fs::path d = fs::temp_directory_path() / "spillfree-tests";
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

std::string write_file(const std::string& name, const std::string& content) {
    const fs::path p = temp_dir() / name;
    std::ofstream out(p);
    out << content;
    return p.string();
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

DesiredTrajectory rest_desired(int nodes, double Ts, const Vec3& at) {
    DesiredTrajectory d;
    d.Ts = Ts;
    d.position = at.transpose().replicate(nodes, 1);
    d.velocity = Eigen::MatrixXd::Zero(nodes, 3);
    return d;
}

}  // namespace

TEST_CASE("config validation enforces exactly one geometry specification") {
    Config c = default_config();
    CHECK_NOTHROW(c.validate());
    CHECK(c.pendulum().rod_length > 0.0);

    Config both = c;
    both.object_height = 0.1;
    both.ratio = 6.0;
    CHECK_THROWS_AS(both.validate(), std::invalid_argument);

    Config neither = c;
    neither.rod_length = 0.0;
    CHECK_THROWS_AS(neither.validate(), std::invalid_argument);

    Config height_only = c;
    height_only.rod_length = 0.0;
    height_only.object_height = 0.1;
    height_only.ratio = 6.0;
    CHECK_NOTHROW(height_only.validate());
    CHECK(height_only.pendulum().rod_length == doctest::Approx(0.6).epsilon(1e-15));

    Config bad_ts = c;
    bad_ts.Ts = 0.0;
    CHECK_THROWS_AS(bad_ts.validate(), std::invalid_argument);
}

TEST_CASE("config JSON loading") {
    const std::string path = write_file("config.json", R"({
        "rod_length": 0.5,
        "Ts": 0.02,
        "bounds": {"tilt": 0.25, "jerk": 40.0},
        "pins": {"rest_to_rest": false},
        "solver": {"max_iter": 12345}
    })");
    const Config c = load_config(path);
    CHECK(c.rod_length == 0.5);
    CHECK(c.Ts == 0.02);
    CHECK(c.max_tilt == 0.25);
    CHECK(c.max_jerk == 40.0);
    CHECK(!c.rest_to_rest);
    CHECK(c.solver.max_iter == 12345);

    CHECK_THROWS(load_config((temp_dir() / "missing.json").string()));
    const std::string bad = write_file("bad.json", "{ not json");
    CHECK_THROWS(load_config(bad));
    const std::string invalid = write_file("invalid.json", R"({"rod_length": -1.0})");
    CHECK_THROWS(load_config(invalid));
}

TEST_CASE("desired-trajectory CSV round trip is byte exact") {
    DesiredTrajectory d;
    d.Ts = 0.033;
    d.position.resize(4, 3);
    d.position << 0, 0, 0, 0.1, -0.2, 0.3, 1.0 / 3.0, 2.0 / 7.0, -1e-17, 0.5, 0.5, 0.5;
    d.velocity = Eigen::MatrixXd::Random(4, 3);

    const std::string path = (temp_dir() / "desired.csv").string();
    write_desired_csv(d, path);
    const DesiredTrajectory back = read_desired_csv(path, d.Ts);
    for (int k = 0; k < 4; ++k)
        for (int j = 0; j < 3; ++j) {
            CHECK(back.position(k, j) == d.position(k, j));
            CHECK(back.velocity(k, j) == d.velocity(k, j));
        }

    // Writing again from the parsed data reproduces the file byte for byte.
    const std::string path2 = (temp_dir() / "desired2.csv").string();
    write_desired_csv(back, path2);
    CHECK(read_file(path) == read_file(path2));
}

TEST_CASE("desired CSV without velocities gets central-difference velocities") {
    // x = t^2 on a uniform grid: central differences are exact at the
    // interior, second-order one-sided at the ends.
    std::ostringstream csv;
    csv << "t,x,y,z\n";
    const double Ts = 0.1;
    for (int k = 0; k < 6; ++k)
        csv << k * Ts << "," << (k * Ts) * (k * Ts) << ",0,0\n";
    const std::string path = write_file("nov.csv", csv.str());
    const DesiredTrajectory d = read_desired_csv(path, Ts);
    for (int k = 0; k < 6; ++k)
        CHECK(d.velocity(k, 0) == doctest::Approx(2.0 * k * Ts).epsilon(1e-10));
}

TEST_CASE("desired CSV resampling and parse errors") {
    std::ostringstream csv;
    csv << "t,x,y,z,vx,vy,vz\n";
    for (int k = 0; k <= 10; ++k)
        csv << 0.01 * k << "," << 0.1 * k << ",0,0,10,0,0\n";
    const std::string path = write_file("resample.csv", csv.str());
    // Resampling a linear ramp to a coarser grid stays on the ramp.
    const DesiredTrajectory d = read_desired_csv(path, 0.025);
    CHECK(d.Ts == 0.025);
    for (int k = 0; k < d.position.rows(); ++k)
        CHECK(d.position(k, 0) == doctest::Approx(0.25 * k).epsilon(1e-12));

    const std::string bad_header = write_file("badh.csv", "time,x,y,z\n0,0,0,0\n");
    CHECK_THROWS(read_desired_csv(bad_header, 0.033));
    const std::string bad_cell = write_file("badc.csv", "t,x,y,z\n0,0,0,0\n0.033,oops,0,0\n");
    CHECK_THROWS_WITH_AS(read_desired_csv(bad_cell, 0.033),
                         doctest::Contains(":3:"), std::runtime_error);
    const std::string nonuniform =
        write_file("nonuni.csv", "t,x,y,z\n0,0,0,0\n0.03,0,0,0\n0.08,0,0,0\n");
    CHECK_THROWS(read_desired_csv(nonuniform, 0.033));
}

TEST_CASE("trajectory CSV round trip is byte exact") {
    Config c = default_config();
    c.Ts = 0.033;
    const DesiredTrajectory desired = rest_desired(31, c.Ts, Vec3(0.0, 0.0, -c.rod_length));
    const OptimizeResult res = run_optimize(c, desired);
    REQUIRE(res.solution.status == SolveStatus::Optimal);

    const std::string path = (temp_dir() / "traj.csv").string();
    write_trajectory_csv(res.trajectory, path);
    const Trajectory back = read_trajectory_csv(path);
    CHECK(back.Ts == res.trajectory.Ts);
    REQUIRE(back.states.size() == res.trajectory.states.size());
    REQUIRE(back.inputs.size() == res.trajectory.inputs.size());
    for (std::size_t k = 0; k < back.states.size(); ++k)
        CHECK((back.states[k].to_vector() - res.trajectory.states[k].to_vector())
                  .cwiseAbs()
                  .maxCoeff() == 0.0);
    for (std::size_t k = 0; k < back.inputs.size(); ++k)
        CHECK((back.inputs[k] - res.trajectory.inputs[k]).cwiseAbs().maxCoeff() == 0.0);

    const std::string path2 = (temp_dir() / "traj2.csv").string();
    write_trajectory_csv(back, path2);
    CHECK(read_file(path) == read_file(path2));
}

TEST_CASE("optimizing a rest target returns the static equilibrium") {
    Config c = default_config();
    const DesiredTrajectory desired = rest_desired(31, c.Ts, Vec3(0.0, 0.0, -c.rod_length));
    const OptimizeResult res = run_optimize(c, desired);
    REQUIRE(res.solution.status == SolveStatus::Optimal);
    for (const auto& s : res.trajectory.states)
        CHECK(s.to_vector().cwiseAbs().maxCoeff() < 1e-6);
    for (const auto& u : res.trajectory.inputs) CHECK(u.cwiseAbs().maxCoeff() < 1e-6);

    const Rollout rollout = run_simulate(c, res.trajectory);
    const PipelineMetrics m = run_metrics(c, rollout);
    CHECK(m.slosh.max_tilt < 1e-6);
    CHECK(m.max_mass_velocity < 1e-6);
}

TEST_CASE("pins that contradict the dynamics report primal infeasibility") {
    Config c = default_config();
    c.rest_to_rest = true;
    // Two nodes, one meter apart: with u_0 pinned to zero the single dynamics
    // step cannot move the pivot, so the endpoint pins are contradictory.
    DesiredTrajectory d;
    d.Ts = c.Ts;
    d.position.resize(2, 3);
    d.position << 0, 0, -c.rod_length, 1.0, 0, -c.rod_length;
    d.velocity = Eigen::MatrixXd::Zero(2, 3);
    const OptimizeResult res = run_optimize(c, d);
    CHECK(res.solution.status == SolveStatus::PrimalInfeasible);
}

TEST_CASE("full pipeline run is deterministic byte for byte") {
    const Config c = demo_step_config(6.0);
    const DesiredTrajectory desired = demo_step_desired(c);

    auto run_once = [&](const std::string& tag) {
        const OptimizeResult res = run_optimize(c, desired);
        REQUIRE(res.solution.status == SolveStatus::Optimal);
        const Rollout rollout = run_simulate(c, res.trajectory);
        const std::string tpath = (temp_dir() / (tag + "_traj.csv")).string();
        const std::string rpath = (temp_dir() / (tag + "_rollout.csv")).string();
        write_trajectory_csv(res.trajectory, tpath);
        write_rollout_csv(rollout, c.Ts, rpath);
        return read_file(tpath) + "\n---\n" + read_file(rpath);
    };
    CHECK(run_once("a") == run_once("b"));
}

TEST_CASE("rollout CSV round trip") {
    const Config c = demo_step_config(6.0);
    const DesiredTrajectory desired = demo_step_desired(c);
    const OptimizeResult res = run_optimize(c, desired);
    REQUIRE(res.solution.status == SolveStatus::Optimal);
    const Rollout rollout = run_simulate(c, res.trajectory);

    const std::string path = (temp_dir() / "rollout.csv").string();
    write_rollout_csv(rollout, c.Ts, path);
    double Ts_back = 0.0;
    const Rollout back = read_rollout_csv(path, Ts_back);
    CHECK(Ts_back == c.Ts);
    REQUIRE(back.size() == rollout.size());
    for (std::size_t k = 0; k < rollout.size(); k += 7) {
        CHECK(back[k].t == rollout[k].t);
        CHECK((back[k].state.to_vector() - rollout[k].state.to_vector()).norm() == 0.0);
        CHECK((back[k].mass.acceleration - rollout[k].mass.acceleration).norm() == 0.0);
    }

    // Metrics computed on the parsed rollout match the originals exactly.
    const PipelineMetrics m1 = run_metrics(c, rollout);
    const PipelineMetrics m2 = run_metrics(c, back);
    CHECK(m1.slosh.kinematic_error == m2.slosh.kinematic_error);
    CHECK(m1.slosh.force_alignment_error == m2.slosh.force_alignment_error);
}

#ifdef SPILLFREE_CLI_PATH
TEST_CASE("command-line interface exit codes") {
    const std::string cli = SPILLFREE_CLI_PATH;
    REQUIRE(fs::exists(cli));
    const fs::path out = temp_dir() / "cli-out";
    fs::create_directories(out);

    auto run = [&](const std::string& args) {
        const int raw = std::system((cli + " " + args + " >/dev/null 2>&1").c_str());
        return WEXITSTATUS(raw);
    };

    CHECK(run("--help") == 0);
    CHECK(run("no-such-command") != 0);

    std::ostringstream csv;
    csv << "t,x,y,z\n";
    for (int k = 0; k <= 30; ++k) csv << 0.033 * k << ",0,0,-0.6\n";
    const std::string desired = write_file("cli_rest.csv", csv.str());

    // Missing input file -> I/O error.
    CHECK(run("optimize /nonexistent/d.csv --out " + out.string()) == 3);
    // Unparsable config -> I/O error.
    const std::string bad = write_file("cli_bad.json", "{");
    CHECK(run("optimize " + desired + " --config " + bad + " --out " + out.string()) == 3);

    // A feasible end-to-end run exits 0 and writes its outputs.
    CHECK(run("optimize " + desired + " --out " + out.string()) == 0);
    CHECK(fs::exists(out / "trajectory.csv"));
    CHECK(fs::exists(out / "solve_report.json"));

    // Contradictory pins -> infeasible exit code.
    const std::string jump =
        write_file("cli_jump.csv", "t,x,y,z\n0,0,0,-0.6\n0.033,1,0,-0.6\n");
    CHECK(run("optimize " + jump + " --out " + out.string()) == 2);
}
#endif
