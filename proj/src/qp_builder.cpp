#include "spillfree/qp_builder.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace spillfree {

void TrajectorySpec::validate() const {
    if (Yd.rows() < 2 || Yd.cols() != kOutputDim)
        throw std::invalid_argument("Yd must be (N+1) x 6 with N >= 1");
    if (!(Ts > 0.0)) throw std::invalid_argument("Ts must be > 0");
    auto check = [](const auto& lb, const auto& ub, const char* what) {
        for (int i = 0; i < lb.size(); ++i)
            if (lb(i) > ub(i)) throw std::invalid_argument(std::string(what) + ": lb > ub");
    };
    check(lb_state, ub_state, "state bounds");
    check(lb_input, ub_input, "input bounds");
    check(lb_jerk, ub_jerk, "jerk bounds");
    for (const auto& w : waypoints)
        if (w.node < 0 || w.node > horizon()) throw std::invalid_argument("waypoint node out of range");
}

namespace {

// Desired output row k shifted into the linear output space (z target minus offset).
Vec6 shifted_target(const DiscreteModel& model, const TrajectorySpec& spec, int k) {
    return Vec6(spec.Yd.row(k).transpose()) - model.output_offset;
}

}  // namespace

void build_cost(const DiscreteModel& model, const TrajectorySpec& spec, SparseMat& H,
                Eigen::VectorXd& g) {
    spec.validate();
    const DecisionLayout layout(spec.horizon());
    const Eigen::Matrix<double, 10, 10> CtC = model.C.transpose() * model.C;

    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(36 * (layout.N + 1)));
    g = Eigen::VectorXd::Zero(layout.total());
    for (int k = 0; k <= layout.N; ++k) {
        const int base = layout.state_index(k);
        for (int i = 0; i < kStateDim; ++i)
            for (int j = 0; j < kStateDim; ++j)
                if (CtC(i, j) != 0.0) trip.emplace_back(base + i, base + j, CtC(i, j));
        g.segment<kStateDim>(base) = model.C.transpose() * shifted_target(model, spec, k);
    }
    H.resize(layout.total(), layout.total());
    H.setFromTriplets(trip.begin(), trip.end());
}

void build_dynamics_constraints(const DiscreteModel& model, const DecisionLayout& layout,
                                std::vector<Eigen::Triplet<double>>& rows,
                                std::vector<double>& rhs, int& row_base) {
    if (layout.N < 1) throw std::invalid_argument("need N >= 1");
    for (int k = 0; k < layout.N; ++k) {
        const int r0 = row_base;
        const int xk = layout.state_index(k);
        const int xk1 = layout.state_index(k + 1);
        const int uk = layout.input_index(k);
        for (int i = 0; i < kStateDim; ++i) {
            for (int j = 0; j < kStateDim; ++j)
                if (model.A(i, j) != 0.0) rows.emplace_back(r0 + i, xk + j, model.A(i, j));
            for (int j = 0; j < kInputDim; ++j)
                if (model.B(i, j) != 0.0) rows.emplace_back(r0 + i, uk + j, model.B(i, j));
            rows.emplace_back(r0 + i, xk1 + i, -1.0);
            rhs.push_back(0.0);
        }
        row_base += kStateDim;
    }
}

void build_boundary_constraints(const DiscreteModel& model, const TrajectorySpec& spec,
                                const DecisionLayout& layout,
                                std::vector<Eigen::Triplet<double>>& rows,
                                std::vector<double>& rhs, int& row_base) {
    auto pin_node = [&](int k) {
        // C x_k = diag(I3, 0) y_dk: exact mass position, zero mass velocity.
        const Vec6 yd = shifted_target(model, spec, k);
        const int xk = layout.state_index(k);
        for (int i = 0; i < kOutputDim; ++i) {
            for (int j = 0; j < kStateDim; ++j)
                if (model.C(i, j) != 0.0) rows.emplace_back(row_base, xk + j, model.C(i, j));
            rhs.push_back(i < 3 ? yd(i) : 0.0);
            ++row_base;
        }
        if (spec.rest_to_rest) {
            // theta = phi = dtheta = dphi = 0 at the pinned state.
            for (int idx : {3, 4, 8, 9}) {
                rows.emplace_back(row_base, xk + idx, 1.0);
                rhs.push_back(0.0);
                ++row_base;
            }
        }
    };
    auto pin_input = [&](int k) {
        const int uk = layout.input_index(k);
        for (int j = 0; j < kInputDim; ++j) {
            rows.emplace_back(row_base, uk + j, 1.0);
            rhs.push_back(0.0);
            ++row_base;
        }
    };

    if (spec.pin_start) {
        pin_node(0);
        if (spec.rest_to_rest) pin_input(0);
    }
    if (spec.pin_end) {
        pin_node(layout.N);
        if (spec.rest_to_rest) pin_input(layout.N - 1);
    }
    for (const auto& w : spec.waypoints) {
        // Position-only pin: the trajectory passes through the target point.
        const Vec6 yd = shifted_target(model, spec, w.node);
        const int xk = layout.state_index(w.node);
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < kStateDim; ++j)
                if (model.C(i, j) != 0.0) rows.emplace_back(row_base, xk + j, model.C(i, j));
            rhs.push_back(yd(i));
            ++row_base;
        }
    }
}

void build_box_constraints(const TrajectorySpec& spec, const DecisionLayout& layout,
                           std::vector<Eigen::Triplet<double>>& rows,
                           std::vector<double>& lb, std::vector<double>& ub, int& row_base) {
    for (int k = 0; k <= layout.N; ++k) {
        const int xk = layout.state_index(k);
        for (int i = 0; i < kStateDim; ++i) {
            rows.emplace_back(row_base, xk + i, 1.0);
            lb.push_back(spec.lb_state(i));
            ub.push_back(spec.ub_state(i));
            ++row_base;
        }
    }
    for (int k = 0; k < layout.N; ++k) {
        const int uk = layout.input_index(k);
        for (int i = 0; i < kInputDim; ++i) {
            rows.emplace_back(row_base, uk + i, 1.0);
            lb.push_back(spec.lb_input(i));
            ub.push_back(spec.ub_input(i));
            ++row_base;
        }
    }
}

void build_jerk_constraints(const TrajectorySpec& spec, const DecisionLayout& layout,
                            std::vector<Eigen::Triplet<double>>& rows,
                            std::vector<double>& lb, std::vector<double>& ub, int& row_base) {
    if (layout.N < 2) return;
    const double inv_ts = 1.0 / spec.Ts;
    for (int k = 0; k + 1 < layout.N; ++k) {
        const int uk = layout.input_index(k);
        const int uk1 = layout.input_index(k + 1);
        for (int i = 0; i < kInputDim; ++i) {
            rows.emplace_back(row_base, uk1 + i, inv_ts);
            rows.emplace_back(row_base, uk + i, -inv_ts);
            lb.push_back(spec.lb_jerk(i));
            ub.push_back(spec.ub_jerk(i));
            ++row_base;
        }
    }
}

QPProblem assemble(const DiscreteModel& model, const TrajectorySpec& spec) {
    spec.validate();
    const DecisionLayout layout(spec.horizon());

    QPProblem p;
    build_cost(model, spec, p.H, p.g);

    std::vector<Eigen::Triplet<double>> eq_rows;
    std::vector<double> eq_rhs;
    int eq_base = 0;
    build_dynamics_constraints(model, layout, eq_rows, eq_rhs, eq_base);
    build_boundary_constraints(model, spec, layout, eq_rows, eq_rhs, eq_base);
    p.A_eq.resize(eq_base, layout.total());
    p.A_eq.setFromTriplets(eq_rows.begin(), eq_rows.end());
    p.b_eq = Eigen::Map<const Eigen::VectorXd>(eq_rhs.data(), static_cast<Eigen::Index>(eq_rhs.size()));

    std::vector<Eigen::Triplet<double>> in_rows;
    std::vector<double> lb, ub;
    int in_base = 0;
    build_box_constraints(spec, layout, in_rows, lb, ub, in_base);
    build_jerk_constraints(spec, layout, in_rows, lb, ub, in_base);
    p.A_in.resize(in_base, layout.total());
    p.A_in.setFromTriplets(in_rows.begin(), in_rows.end());
    p.lb_in = Eigen::Map<const Eigen::VectorXd>(lb.data(), static_cast<Eigen::Index>(lb.size()));
    p.ub_in = Eigen::Map<const Eigen::VectorXd>(ub.data(), static_cast<Eigen::Index>(ub.size()));
    return p;
}

namespace {

void dump_sparse(const SparseMat& m, const char* name, std::ostream& os) {
    os << name << ' ' << m.rows() << ' ' << m.cols() << ' ' << m.nonZeros() << '\n';
    for (int k = 0; k < m.outerSize(); ++k)
        for (SparseMat::InnerIterator it(m, k); it; ++it)
            os << it.row() << ' ' << it.col() << ' ' << it.value() << '\n';
}

void dump_vector(const Eigen::VectorXd& v, const char* name, std::ostream& os) {
    os << name << ' ' << v.size() << '\n';
    for (Eigen::Index i = 0; i < v.size(); ++i) os << v(i) << '\n';
}

SparseMat read_sparse(std::istream& is, const std::string& expect) {
    std::string name;
    Eigen::Index rows, cols, nnz;
    if (!(is >> name >> rows >> cols >> nnz) || name != expect)
        throw std::runtime_error("qp dump: expected matrix " + expect);
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(nnz));
    for (Eigen::Index i = 0; i < nnz; ++i) {
        Eigen::Index r, c;
        double v;
        if (!(is >> r >> c >> v)) throw std::runtime_error("qp dump: truncated matrix " + expect);
        trip.emplace_back(static_cast<int>(r), static_cast<int>(c), v);
    }
    SparseMat m(rows, cols);
    m.setFromTriplets(trip.begin(), trip.end());
    return m;
}

Eigen::VectorXd read_vector(std::istream& is, const std::string& expect) {
    std::string name;
    Eigen::Index n;
    if (!(is >> name >> n) || name != expect)
        throw std::runtime_error("qp dump: expected vector " + expect);
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        // Token-based parse so +-inf bounds round-trip through the dump.
        std::string tok;
        if (!(is >> tok)) throw std::runtime_error("qp dump: truncated vector " + expect);
        v(i) = std::stod(tok);
    }
    return v;
}

}  // namespace

void dump_problem(const QPProblem& p, std::ostream& os) {
    os.precision(17);
    os << "spillfree-qp 1\n";
    dump_sparse(p.H, "H", os);
    dump_vector(p.g, "g", os);
    dump_sparse(p.A_eq, "A_eq", os);
    dump_vector(p.b_eq, "b_eq", os);
    dump_sparse(p.A_in, "A_in", os);
    dump_vector(p.lb_in, "lb_in", os);
    dump_vector(p.ub_in, "ub_in", os);
}

QPProblem load_problem(std::istream& is) {
    std::string magic;
    int version = 0;
    if (!(is >> magic >> version) || magic != "spillfree-qp" || version != 1)
        throw std::runtime_error("qp dump: bad header");
    QPProblem p;
    p.H = read_sparse(is, "H");
    p.g = read_vector(is, "g");
    p.A_eq = read_sparse(is, "A_eq");
    p.b_eq = read_vector(is, "b_eq");
    p.A_in = read_sparse(is, "A_in");
    p.lb_in = read_vector(is, "lb_in");
    p.ub_in = read_vector(is, "ub_in");
    return p;
}

}  // namespace spillfree
