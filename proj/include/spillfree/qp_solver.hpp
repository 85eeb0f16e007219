#pragma once

#include "spillfree/qp_builder.hpp"

#include <utility>

namespace spillfree {

struct SolverSettings {
    double rho = 0.1;       // ADMM penalty, adapted during the solve
    double sigma = 1e-6;    // primal regularization
    double alpha = 1.6;     // relaxation, must be in (0, 2)
    double eps_abs = 1e-8;
    double eps_rel = 1e-8;
    int max_iter = 20000;
    bool polish = true;
    bool scaling = true;    // Ruiz equilibration
    int scaling_iters = 10;

    void validate() const;
};

enum class SolveStatus { Optimal, MaxIter, PrimalInfeasible, DualInfeasible };

struct Solution {
    Eigen::VectorXd chi;
    Eigen::VectorXd y_eq;  // multipliers of the equality rows
    Eigen::VectorXd y_in;  // multipliers of the inequality rows
    SolveStatus status = SolveStatus::MaxIter;
    int iterations = 0;
    double primal_residual = 0.0;
    double dual_residual = 0.0;
    double objective = 0.0;
    bool polished = false;
};

/// Solve min 1/2 chi' H chi - g' chi subject to the stacked constraints.
Solution solve(const QPProblem& problem, const SolverSettings& settings = {});

/// Recompute (primal, dual) infinity-norm KKT residuals from scratch.
std::pair<double, double> kkt_residuals(const QPProblem& problem, const Solution& solution);

const char* to_string(SolveStatus s);

}  // namespace spillfree
