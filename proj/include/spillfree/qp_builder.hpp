#pragma once

#include "spillfree/linear_model.hpp"
#include "spillfree/types.hpp"

#include <Eigen/Sparse>

#include <iosfwd>
#include <limits>
#include <vector>

namespace spillfree {

using SparseMat = Eigen::SparseMatrix<double>;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Index map for the stacked decision vector chi = [x_0 .. x_N, u_0 .. u_{N-1}].
struct DecisionLayout {
    int N = 0;

    explicit DecisionLayout(int n) : N(n) {}
    int total() const { return kStateDim * (N + 1) + kInputDim * N; }
    int state_index(int k) const { return kStateDim * k; }
    int input_index(int k) const { return kStateDim * (N + 1) + kInputDim * k; }
};

/// A mid-trajectory position pin: the mass must pass through Y_d row `node`.
struct WaypointPin {
    int node = 0;
};

/// Targets, bounds and boundary conditions for one optimization problem.
struct TrajectorySpec {
    Eigen::MatrixXd Yd;  // (N+1) x 6 rows of [position, velocity] targets
    double Ts = 0.033;

    Vec10 lb_state = Vec10::Constant(-kInf);
    Vec10 ub_state = Vec10::Constant(kInf);
    Vec3 lb_input = Vec3::Constant(-kInf);
    Vec3 ub_input = Vec3::Constant(kInf);
    Vec3 lb_jerk = Vec3::Constant(-kInf);
    Vec3 ub_jerk = Vec3::Constant(kInf);

    bool pin_start = true;
    bool pin_end = true;
    bool rest_to_rest = true;  // additionally pin tilt/tilt-rate and first/last input
    std::vector<WaypointPin> waypoints;

    int horizon() const { return static_cast<int>(Yd.rows()) - 1; }
    void validate() const;
};

/// Sparse QP in standard form: min 1/2 chi' H chi - g' chi
/// s.t. A_eq chi = b_eq, lb_in <= A_in chi <= ub_in.
struct QPProblem {
    SparseMat H;
    Eigen::VectorXd g;
    SparseMat A_eq;
    Eigen::VectorXd b_eq;
    SparseMat A_in;
    Eigen::VectorXd lb_in;
    Eigen::VectorXd ub_in;
};

/// Cost blocks: H = blockdiag(C'C per state, 0 for inputs), g stacks C' y_dk
/// with the z target pre-shifted by the output offset.
void build_cost(const DiscreteModel& model, const TrajectorySpec& spec, SparseMat& H,
                Eigen::VectorXd& g);

/// 10N equality rows: A x_k + B u_k - x_{k+1} = 0.
void build_dynamics_constraints(const DiscreteModel& model, const DecisionLayout& layout,
                                std::vector<Eigen::Triplet<double>>& rows,
                                std::vector<double>& rhs, int& row_base);

/// Boundary equalities at pinned nodes, plus the rest-to-rest augmentation.
void build_boundary_constraints(const DiscreteModel& model, const TrajectorySpec& spec,
                                const DecisionLayout& layout,
                                std::vector<Eigen::Triplet<double>>& rows,
                                std::vector<double>& rhs, int& row_base);

/// Identity-row box bounds over the whole decision vector.
void build_box_constraints(const TrajectorySpec& spec, const DecisionLayout& layout,
                           std::vector<Eigen::Triplet<double>>& rows,
                           std::vector<double>& lb, std::vector<double>& ub, int& row_base);

/// 3(N-1) two-sided finite-difference jerk rows, lb <= (u_{k+1} - u_k)/Ts <= ub.
void build_jerk_constraints(const TrajectorySpec& spec, const DecisionLayout& layout,
                            std::vector<Eigen::Triplet<double>>& rows,
                            std::vector<double>& lb, std::vector<double>& ub, int& row_base);

/// Stack everything into one problem. Row order: dynamics, boundary, box, jerk.
QPProblem assemble(const DiscreteModel& model, const TrajectorySpec& spec);

/// Self-describing text export/import of a problem, for external cross-checking.
void dump_problem(const QPProblem& p, std::ostream& os);
QPProblem load_problem(std::istream& is);

}  // namespace spillfree
