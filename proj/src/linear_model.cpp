#include "spillfree/linear_model.hpp"

#include <cmath>
#include <stdexcept>

namespace spillfree {

ContinuousModel build_continuous(const PendulumParams& params) {
    params.validate();
    const double l = params.rod_length, g = params.gravity;

    ContinuousModel cm;
    cm.A.setZero();
    cm.B.setZero();
    cm.C.setZero();
    cm.output_offset.setZero();

    // Rows 0-4: positions/angles integrate their rates.
    for (int i = 0; i < 5; ++i) cm.A(i, i + 5) = 1.0;
    // Rows 5-7: pivot double integrator driven by u.
    for (int i = 0; i < 3; ++i) cm.B(5 + i, i) = 1.0;
    // l*ddth = -g*th + u1 ; l*ddph = -g*ph - u2.
    cm.A(8, 3) = -g / l;
    cm.B(8, 0) = 1.0 / l;
    cm.A(9, 4) = -g / l;
    cm.B(9, 1) = -1.0 / l;

    cm.C(0, 0) = 1.0;
    cm.C(0, 3) = -l;
    cm.C(1, 1) = 1.0;
    cm.C(1, 4) = l;
    cm.C(2, 2) = 1.0;
    cm.C(3, 5) = 1.0;
    cm.C(3, 8) = -l;
    cm.C(4, 6) = 1.0;
    cm.C(4, 9) = l;
    cm.C(5, 7) = 1.0;
    cm.output_offset(2) = -l;
    return cm;
}

Eigen::MatrixXd matrix_exponential(const Eigen::MatrixXd& M) {
    if (M.rows() != M.cols()) throw std::invalid_argument("matrix must be square");
    if (!M.allFinite()) throw std::invalid_argument("non-finite input");
    const Eigen::Index n = M.rows();

    // Scale so ||M/2^s|| <= 0.5, sum the Taylor series, square back up.
    const double norm = M.cwiseAbs().rowwise().sum().maxCoeff();
    int s = 0;
    if (norm > 0.5) s = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
    const Eigen::MatrixXd A = M / std::ldexp(1.0, s);

    Eigen::MatrixXd result = Eigen::MatrixXd::Identity(n, n);
    Eigen::MatrixXd term = Eigen::MatrixXd::Identity(n, n);
    for (int k = 1; k <= 24; ++k) {
        term = (term * A) / static_cast<double>(k);
        result += term;
        if (term.cwiseAbs().maxCoeff() < 1e-18) break;
    }
    for (int i = 0; i < s; ++i) result = result * result;
    return result;
}

DiscreteModel discretize_zoh(const ContinuousModel& cm, double Ts) {
    if (!(Ts > 0.0)) throw std::invalid_argument("Ts must be > 0");
    Eigen::MatrixXd aug = Eigen::MatrixXd::Zero(13, 13);
    aug.topLeftCorner<10, 10>() = cm.A;
    aug.topRightCorner<10, 3>() = cm.B;
    const Eigen::MatrixXd e = matrix_exponential(aug * Ts);

    DiscreteModel dm;
    dm.A = e.topLeftCorner<10, 10>();
    dm.B = e.topRightCorner<10, 3>();
    dm.C = cm.C;
    dm.output_offset = cm.output_offset;
    dm.Ts = Ts;
    return dm;
}

}  // namespace spillfree
