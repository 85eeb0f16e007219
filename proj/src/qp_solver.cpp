#include "spillfree/qp_solver.hpp"

#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <cstdio>
#include <cstdlib>

namespace spillfree {

void SolverSettings::validate() const {
    if (!(rho > 0.0) || !(sigma > 0.0) || !(eps_abs > 0.0) || !(eps_rel >= 0.0))
        throw std::invalid_argument("solver settings must be positive");
    if (!(alpha > 0.0 && alpha < 2.0)) throw std::invalid_argument("alpha must be in (0,2)");
    if (max_iter < 1) throw std::invalid_argument("max_iter must be >= 1");
}

const char* to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::Optimal: return "optimal";
        case SolveStatus::MaxIter: return "max_iter";
        case SolveStatus::PrimalInfeasible: return "primal_infeasible";
        case SolveStatus::DualInfeasible: return "dual_infeasible";
    }
    return "unknown";
}

namespace {

using Ldlt = Eigen::SimplicialLDLT<SparseMat, Eigen::Lower, Eigen::AMDOrdering<int>>;

constexpr double kRhoEqFactor = 1e3;
constexpr double kRhoMin = 1e-6;
constexpr double kRhoMax = 1e6;
constexpr double kInfeasTol = 1e-10;
constexpr int kCheckInterval = 25;

struct Workspace {
    int n = 0, m = 0, m_eq = 0;
    SparseMat P;          // scaled
    Eigen::VectorXd q;    // scaled
    SparseMat A;          // scaled, stacked [A_eq; A_in]
    Eigen::VectorXd l, u; // scaled bounds

    Eigen::VectorXd d;    // variable scaling D diag
    Eigen::VectorXd e;    // constraint scaling E diag
    double c = 1.0;       // cost scaling

    Eigen::VectorXd rho_vec, rho_inv;
    Ldlt kkt;

    Eigen::VectorXd x, z, y;

    void factor(double sigma) {
        std::vector<Eigen::Triplet<double>> trip;
        trip.reserve(static_cast<std::size_t>(P.nonZeros() + A.nonZeros() + n + m));
        for (int k = 0; k < P.outerSize(); ++k)
            for (SparseMat::InnerIterator it(P, k); it; ++it)
                if (it.row() >= it.col()) trip.emplace_back(it.row(), it.col(), it.value());
        for (int i = 0; i < n; ++i) trip.emplace_back(i, i, sigma);
        for (int k = 0; k < A.outerSize(); ++k)
            for (SparseMat::InnerIterator it(A, k); it; ++it)
                trip.emplace_back(n + it.row(), it.col(), it.value());
        for (int i = 0; i < m; ++i) trip.emplace_back(n + i, n + i, -rho_inv(i));
        SparseMat K(n + m, n + m);
        K.setFromTriplets(trip.begin(), trip.end());
        // The sigma/rho shifts make the KKT matrix quasi-definite, so the
        // no-pivot LDLT factorization exists for any symmetric permutation.
        kkt.compute(K);
        if (kkt.info() != Eigen::Success) throw std::runtime_error("KKT factorization failed");
    }

    void set_rho(double rho) {
        for (int i = 0; i < m; ++i) {
            const bool eq = (i < m_eq);
            rho_vec(i) = std::clamp(eq ? kRhoEqFactor * rho : rho, kRhoMin, kRhoMax);
            rho_inv(i) = 1.0 / rho_vec(i);
        }
    }
};

double inf_norm(const Eigen::VectorXd& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

// Ruiz equilibration of [P A'; A 0] plus cost normalization, as in OSQP.
void ruiz_equilibrate(Workspace& w, int iters) {
    const int n = w.n, m = w.m;
    w.d.setOnes(n);
    w.e.setOnes(m);
    w.c = 1.0;
    Eigen::VectorXd dd(n), de(m);
    for (int it = 0; it < iters; ++it) {
        dd.setZero();
        de.setZero();
        for (int k = 0; k < w.P.outerSize(); ++k)
            for (SparseMat::InnerIterator i(w.P, k); i; ++i)
                dd(i.col()) = std::max(dd(i.col()), std::abs(i.value()));
        for (int k = 0; k < w.A.outerSize(); ++k)
            for (SparseMat::InnerIterator i(w.A, k); i; ++i) {
                dd(i.col()) = std::max(dd(i.col()), std::abs(i.value()));
                de(i.row()) = std::max(de(i.row()), std::abs(i.value()));
            }
        for (int i = 0; i < n; ++i) dd(i) = (dd(i) < 1e-12) ? 1.0 : 1.0 / std::sqrt(dd(i));
        for (int i = 0; i < m; ++i) de(i) = (de(i) < 1e-12) ? 1.0 : 1.0 / std::sqrt(de(i));

        w.P = dd.asDiagonal() * w.P * dd.asDiagonal();
        w.A = de.asDiagonal() * w.A * dd.asDiagonal();
        w.q = dd.cwiseProduct(w.q);
        w.l = de.cwiseProduct(w.l);
        w.u = de.cwiseProduct(w.u);
        w.d = w.d.cwiseProduct(dd);
        w.e = w.e.cwiseProduct(de);

        // Cost scaling: mean column norm of P and norm of q.
        double p_norm = 0.0;
        Eigen::VectorXd col(n);
        col.setZero();
        for (int k = 0; k < w.P.outerSize(); ++k)
            for (SparseMat::InnerIterator i(w.P, k); i; ++i)
                col(i.col()) = std::max(col(i.col()), std::abs(i.value()));
        p_norm = n ? col.mean() : 0.0;
        double gamma = std::max(p_norm, inf_norm(w.q));
        gamma = (gamma < 1e-12) ? 1.0 : 1.0 / gamma;
        w.P *= gamma;
        w.q *= gamma;
        w.c *= gamma;
    }
}

struct Residuals {
    double prim = 0.0, dual = 0.0;
    double eps_prim = 0.0, eps_dual = 0.0;
};

Residuals compute_residuals(const Workspace& w, const SolverSettings& st) {
    // Unscaled quantities: x_u = D x, z_u = E^-1 z, y_u = E y / c.
    const Eigen::VectorXd ax = w.A * w.x;
    const Eigen::VectorXd px = w.P * w.x;
    const Eigen::VectorXd aty = w.A.transpose() * w.y;

    Residuals r;
    if (w.m) {
        const Eigen::VectorXd einv = w.e.cwiseInverse();
        r.prim = inf_norm(einv.cwiseProduct(ax - w.z));
        r.eps_prim = st.eps_abs + st.eps_rel * std::max(inf_norm(einv.cwiseProduct(ax)),
                                                        inf_norm(einv.cwiseProduct(w.z)));
    }
    const Eigen::VectorXd dinv = w.d.cwiseInverse();
    r.dual = inf_norm(dinv.cwiseProduct(px + w.q + aty)) / w.c;
    r.eps_dual = st.eps_abs + st.eps_rel / w.c *
                                  std::max({inf_norm(dinv.cwiseProduct(px)),
                                            inf_norm(dinv.cwiseProduct(aty)),
                                            inf_norm(dinv.cwiseProduct(w.q))});
    return r;
}

bool primal_infeasible(const Workspace& w, const Eigen::VectorXd& dy_scaled) {
    if (!w.m) return false;
    const Eigen::VectorXd dy = w.e.cwiseProduct(dy_scaled) / w.c;  // unscaled
    const double norm = inf_norm(dy);
    if (norm < kInfeasTol) return false;
    const Eigen::VectorXd atdy =
        w.d.cwiseInverse().cwiseProduct(w.A.transpose() * dy_scaled) / w.c;
    if (inf_norm(atdy) > kInfeasTol * norm) return false;
    double support = 0.0;
    const Eigen::VectorXd einv = w.e.cwiseInverse();
    for (int i = 0; i < w.m; ++i) {
        const double lu = einv(i) * w.u(i), ll = einv(i) * w.l(i);
        if (dy(i) > 0.0) {
            if (!std::isfinite(lu)) return false;
            support += lu * dy(i);
        } else if (dy(i) < 0.0) {
            if (!std::isfinite(ll)) return false;
            support += ll * dy(i);
        }
    }
    return support < -kInfeasTol * norm;
}

bool dual_infeasible(const Workspace& w, const Eigen::VectorXd& dx_scaled) {
    const Eigen::VectorXd dx = w.d.cwiseProduct(dx_scaled);  // unscaled
    const double norm = inf_norm(dx);
    if (norm < kInfeasTol) return false;
    const Eigen::VectorXd pdx = w.d.cwiseInverse().cwiseProduct(w.P * dx_scaled) / w.c;
    if (inf_norm(pdx) > kInfeasTol * norm) return false;
    const double qdx = w.d.cwiseInverse().cwiseProduct(w.q).dot(dx) / w.c;
    if (qdx > -kInfeasTol * norm) return false;
    if (w.m) {
        const Eigen::VectorXd adx = w.e.cwiseInverse().cwiseProduct(w.A * dx_scaled);
        const Eigen::VectorXd einv = w.e.cwiseInverse();
        for (int i = 0; i < w.m; ++i) {
            if (std::isfinite(einv(i) * w.u(i)) && adx(i) > kInfeasTol * norm) return false;
            if (std::isfinite(einv(i) * w.l(i)) && adx(i) < -kInfeasTol * norm) return false;
        }
    }
    return true;
}

// Data for the refinement phase, held in unscaled (original problem) space so
// the attainable KKT accuracy is not amplified by the equilibration factors.
struct PolishData {
    int n = 0, m = 0, m_eq = 0;
    SparseMat P, A, At;
    Eigen::VectorXd q, l, u;
};

// Finish the ADMM iterate with a primal-dual interior-point solve of the
// original problem. ADMM converges slowly once the iterate is near the
// solution of these tracking problems (the cost has flat directions and long
// arcs of simultaneously active rows, which also make active-set
// identification degenerate), while a path-following method reaches machine
// accuracy in a few tens of Newton steps and cannot cycle. The finisher works
// on the unscaled data and its result is adopted only if the true KKT
// residuals pass the solver tolerances.
bool polish(Workspace& w, const SolverSettings& st) {
    PolishData pd;
    pd.n = w.n;
    pd.m = w.m;
    pd.m_eq = w.m_eq;
    const Eigen::VectorXd dinv = w.d.cwiseInverse();
    const Eigen::VectorXd einv = w.e.cwiseInverse();
    pd.P = SparseMat((dinv.asDiagonal() * w.P * dinv.asDiagonal()) / w.c);
    pd.q = dinv.cwiseProduct(w.q) / w.c;
    pd.A = SparseMat(einv.asDiagonal() * w.A * dinv.asDiagonal());
    pd.At = pd.A.transpose();
    pd.l = einv.cwiseProduct(w.l);
    pd.u = einv.cwiseProduct(w.u);
    const int n = pd.n;
    const bool debug = std::getenv("SPILLFREE_POLISH_DEBUG") != nullptr;

    // One-sided rows c'x + s = d built from the finite bounds of the
    // inequality block; the leading m_eq rows stay equalities.
    std::vector<int> side_row;   // original row index
    std::vector<double> side_sign, side_d;
    for (int i = pd.m_eq; i < pd.m; ++i) {
        if (std::isfinite(pd.u(i))) {
            side_row.push_back(i);
            side_sign.push_back(1.0);
            side_d.push_back(pd.u(i));
        }
        if (std::isfinite(pd.l(i))) {
            side_row.push_back(i);
            side_sign.push_back(-1.0);
            side_d.push_back(-pd.l(i));
        }
    }
    const int mi = static_cast<int>(side_row.size());
    const int me = pd.m_eq;

    // Start from the ADMM iterate with strictly interior slacks and neutral
    // multipliers; stale multipliers from a stalled iterate slow the path
    // following far more than a cold dual start does.
    Eigen::VectorXd x = w.d.cwiseProduct(w.x);
    Eigen::VectorXd y = Eigen::VectorXd::Zero(me);
    Eigen::VectorXd ax_rows = pd.A * x;
    Eigen::VectorXd s(mi), zi(mi);
    for (int j = 0; j < mi; ++j) {
        const double cx = side_sign[j] * ax_rows(side_row[j]);
        s(j) = std::max(side_d[j] - cx, 1.0);
        zi(j) = 1.0;
    }

    constexpr double kReg = 1e-9;     // quasi-definite KKT regularization
    constexpr int kMaxIpIter = 120;
    const double tol = std::max(0.1 * st.eps_abs, 1e-12);

    // Constant part of the KKT triplets: lower triangle of P + primal
    // regularization, equality rows, one-sided rows. The slack diagonal is
    // appended fresh each iteration.
    const auto build_base = [&](double reg) {
        std::vector<Eigen::Triplet<double>> base;
        for (int k = 0; k < pd.P.outerSize(); ++k)
            for (SparseMat::InnerIterator it(pd.P, k); it; ++it)
                if (it.row() >= it.col()) base.emplace_back(it.row(), it.col(), it.value());
        for (int i = 0; i < n; ++i) base.emplace_back(i, i, reg);
        for (int j = 0; j < me; ++j) {
            for (SparseMat::InnerIterator it(pd.At, j); it; ++it)
                base.emplace_back(n + j, static_cast<int>(it.row()), it.value());
            base.emplace_back(n + j, n + j, -reg);
        }
        for (int j = 0; j < mi; ++j) {
            for (SparseMat::InnerIterator it(pd.At, side_row[j]); it; ++it)
                base.emplace_back(n + me + j, static_cast<int>(it.row()),
                                  side_sign[j] * it.value());
        }
        return base;
    };
    double kkt_reg = kReg;
    std::vector<Eigen::Triplet<double>> base = build_base(kkt_reg);

    const auto cx_of = [&](const Eigen::VectorXd& xv, Eigen::VectorXd& out) {
        const Eigen::VectorXd rows = pd.A * xv;
        out.resize(mi);
        for (int j = 0; j < mi; ++j) out(j) = side_sign[j] * rows(side_row[j]);
    };

    bool converged = false;
    // Near the numerical floor the error oscillates; keep the best iterate
    // seen and let the final residual check decide whether it qualifies.
    double best_err = std::numeric_limits<double>::infinity();
    Eigen::VectorXd x_best = x, y_best = y, z_best = zi;
    for (int it = 1; it <= kMaxIpIter; ++it) {
        // Residuals of the one-sided KKT system.
        Eigen::VectorXd ct_z = Eigen::VectorXd::Zero(n);
        for (int j = 0; j < mi; ++j) {
            for (SparseMat::InnerIterator itr(pd.At, side_row[j]); itr; ++itr)
                ct_z(itr.row()) += side_sign[j] * itr.value() * zi(j);
        }
        Eigen::VectorXd cx;
        cx_of(x, cx);
        const Eigen::VectorXd px = pd.P.selfadjointView<Eigen::Lower>() * x;
        Eigen::VectorXd r_dual = px + pd.q + ct_z;
        for (int j = 0; j < me; ++j) {
            for (SparseMat::InnerIterator itr(pd.At, j); itr; ++itr)
                r_dual(itr.row()) += itr.value() * y(j);
        }
        ax_rows = pd.A * x;
        const Eigen::VectorXd r_eq = ax_rows.head(me) - pd.l.head(me);
        Eigen::VectorXd r_in(mi);
        for (int j = 0; j < mi; ++j) r_in(j) = cx(j) + s(j) - side_d[j];
        const double mu = mi ? s.dot(zi) / mi : 0.0;
        const double err = std::max({inf_norm(r_dual), me ? inf_norm(r_eq) : 0.0,
                                     mi ? inf_norm(r_in) : 0.0, mu});
        if (debug && (it <= 3 || it % 10 == 0))
            std::fprintf(stderr, "  ip %3d: err %.3e mu %.3e\n", it, err, mu);
        if (err < best_err) {
            best_err = err;
            x_best = x;
            y_best = y;
            z_best = zi;
        }
        if (err < tol) {
            converged = true;
            break;
        }

        // Quasi-definite KKT with the slack block kept explicit:
        //   [P+dI   Aeq'      C'   ] [dx ]   [-r_dual             ]
        //   [Aeq    -dI       0    ] [dy ] = [-r_eq               ]
        //   [C      0      -S/Z    ] [dz ]   [-r_in - (t - sz)/z  ]
        // where t is the complementarity target of the current solve.
        // The slack diagonal is clamped so the matrix stays numerically
        // quasi-definite when complementarity pairs approach the boundary; if
        // the no-pivot factorization still breaks down, retry with a larger
        // clamp. The refinement rounds in solve_step absorb the perturbation.
        SparseMat K(n + me + mi, n + me + mi);
        Ldlt ldlt;
        bool factored = false;
        // A zero pivot (exact cancellation in the flat directions of P) is
        // cured by stronger symmetric regularization; the escalated value
        // sticks for later iterations and the refinement rounds in solve_step
        // absorb the perturbation.
        for (; kkt_reg <= 1e-4 && !factored; ) {
            std::vector<Eigen::Triplet<double>> trip = base;
            for (int j = 0; j < mi; ++j)
                trip.emplace_back(n + me + j, n + me + j,
                                  -std::clamp(s(j) / zi(j), 1e-12, 1e12));
            K.setFromTriplets(trip.begin(), trip.end());
            ldlt.compute(K);
            if (ldlt.info() == Eigen::Success) {
                factored = true;
            } else {
                kkt_reg *= 100.0;
                if (kkt_reg <= 1e-4) base = build_base(kkt_reg);
            }
        }
        if (!factored) {
            if (debug) std::fprintf(stderr, "  ip %3d: factorization failed\n", it);
            break;
        }

        const auto solve_step = [&](const Eigen::VectorXd& t, Eigen::VectorXd& dx,
                                    Eigen::VectorXd& dy, Eigen::VectorXd& ds,
                                    Eigen::VectorXd& dz) -> bool {
            Eigen::VectorXd rhs(n + me + mi);
            rhs.head(n) = -r_dual;
            rhs.segment(n, me) = -r_eq;
            for (int j = 0; j < mi; ++j)
                rhs(n + me + j) = -r_in(j) - (t(j) - s(j) * zi(j)) / zi(j);
            Eigen::VectorXd delta = ldlt.solve(rhs);
            for (int round = 0; round < 3; ++round) {
                const Eigen::VectorXd resid =
                    rhs - K.selfadjointView<Eigen::Lower>() * delta;
                delta += ldlt.solve(resid);
            }
            if (!delta.allFinite()) return false;
            dx = delta.head(n);
            dy = delta.segment(n, me);
            dz = delta.tail(mi);
            Eigen::VectorXd cdx;
            cx_of(dx, cdx);
            ds = -r_in - cdx;
            return true;
        };

        const auto step_lengths = [&](const Eigen::VectorXd& ds, const Eigen::VectorXd& dz,
                                      double frac) {
            double ap = 1.0, ad = 1.0;
            for (int j = 0; j < mi; ++j) {
                if (ds(j) < 0.0) ap = std::min(ap, -frac * s(j) / ds(j));
                if (dz(j) < 0.0) ad = std::min(ad, -frac * zi(j) / dz(j));
            }
            return std::make_pair(ap, ad);
        };

        // Mehrotra predictor-corrector: the affine step sets the centering
        // weight, the corrector compensates the second-order complementarity
        // error. Both reuse the factorization above.
        Eigen::VectorXd dx, dy, ds, dz;
        if (!solve_step(Eigen::VectorXd::Zero(mi), dx, dy, ds, dz)) {
            if (debug) std::fprintf(stderr, "  ip %3d: affine step not finite\n", it);
            break;
        }
        double sigma = 0.1;
        Eigen::VectorXd t = Eigen::VectorXd::Zero(mi);
        if (mi) {
            const auto [ap_aff, ad_aff] = step_lengths(ds, dz, 1.0);
            double mu_aff = 0.0;
            for (int j = 0; j < mi; ++j)
                mu_aff += (s(j) + ap_aff * ds(j)) * (zi(j) + ad_aff * dz(j));
            mu_aff /= mi;
            const double r = mu > 0.0 ? mu_aff / mu : 0.0;
            sigma = std::clamp(r * r * r, 1e-8, 0.9);
            for (int j = 0; j < mi; ++j) t(j) = sigma * mu - ds(j) * dz(j);
            if (!solve_step(t, dx, dy, ds, dz)) {
                if (debug) std::fprintf(stderr, "  ip %3d: corrector step not finite\n", it);
                break;
            }
        }
        const auto [ap, ad] = step_lengths(ds, dz, 0.995);
        x += ap * dx;
        s += ap * ds;
        y += ad * dy;
        zi += ad * dz;
    }
    if (!converged) {
        if (debug)
            std::fprintf(stderr, "  polish: interior point floored at err %.3e\n", best_err);
        x = x_best;
        y = y_best;
        zi = z_best;
    }

    // Fold the one-sided multipliers back onto the two-sided rows and check
    // the candidate against the true problem, all in unscaled space.
    Eigen::VectorXd y_all = Eigen::VectorXd::Zero(pd.m);
    y_all.head(me) = y;
    for (int j = 0; j < mi; ++j) y_all(side_row[j]) += side_sign[j] * zi(j);

    const Eigen::VectorXd ax = pd.A * x;
    const Eigen::VectorXd zu_f = ax.cwiseMax(pd.l).cwiseMin(pd.u);
    const double r_prim = pd.m ? inf_norm(ax - zu_f) : 0.0;
    const double eps_prim = st.eps_abs + st.eps_rel * std::max(inf_norm(ax), inf_norm(zu_f));
    const Eigen::VectorXd px = pd.P.selfadjointView<Eigen::Lower>() * x;
    const double r_dual = inf_norm(px + pd.q + pd.At * y_all);
    const double eps_dual =
        st.eps_abs + st.eps_rel * std::max({inf_norm(px), inf_norm(pd.At * y_all),
                                            inf_norm(pd.q)});
    if (debug)
        std::fprintf(stderr, "  polish: res=(%g,%g) eps=(%g,%g)\n", r_prim, r_dual, eps_prim,
                     eps_dual);
    if (r_prim <= eps_prim && r_dual <= eps_dual) {
        // Write the candidate back in scaled coordinates.
        w.x = x.cwiseQuotient(w.d);
        w.y = w.c * y_all.cwiseProduct(einv);
        w.z = w.e.cwiseProduct(zu_f);
        return true;
    }
    return false;
}

}  // namespace

Solution solve(const QPProblem& problem, const SolverSettings& settings) {
    settings.validate();
    const int n = static_cast<int>(problem.H.rows());
    const int m_eq = static_cast<int>(problem.A_eq.rows());
    const int m_in = static_cast<int>(problem.A_in.rows());
    const int m = m_eq + m_in;
    if (problem.H.cols() != n || problem.g.size() != n ||
        (m_eq && problem.A_eq.cols() != n) || (m_in && problem.A_in.cols() != n) ||
        problem.b_eq.size() != m_eq || problem.lb_in.size() != m_in ||
        problem.ub_in.size() != m_in)
        throw std::invalid_argument("inconsistent problem dimensions");

    Workspace w;
    w.n = n;
    w.m = m;
    w.m_eq = m_eq;
    w.P = problem.H;
    w.q = -problem.g;  // internal form: min 1/2 x'Px + q'x
    {
        std::vector<Eigen::Triplet<double>> trip;
        for (int k = 0; k < problem.A_eq.outerSize(); ++k)
            for (SparseMat::InnerIterator it(problem.A_eq, k); it; ++it)
                trip.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
        for (int k = 0; k < problem.A_in.outerSize(); ++k)
            for (SparseMat::InnerIterator it(problem.A_in, k); it; ++it)
                trip.emplace_back(m_eq + static_cast<int>(it.row()), static_cast<int>(it.col()),
                                  it.value());
        w.A.resize(m, n);
        w.A.setFromTriplets(trip.begin(), trip.end());
    }
    w.l.resize(m);
    w.u.resize(m);
    w.l.head(m_eq) = problem.b_eq;
    w.u.head(m_eq) = problem.b_eq;
    w.l.tail(m_in) = problem.lb_in;
    w.u.tail(m_in) = problem.ub_in;

    w.d.setOnes(n);
    w.e.setOnes(m);
    if (settings.scaling) ruiz_equilibrate(w, settings.scaling_iters);

    w.rho_vec.resize(m);
    w.rho_inv.resize(m);
    double rho = settings.rho;
    w.set_rho(rho);
    w.factor(settings.sigma);

    w.x = Eigen::VectorXd::Zero(n);
    w.z = Eigen::VectorXd::Zero(m);
    w.y = Eigen::VectorXd::Zero(m);

    Solution sol;
    Eigen::VectorXd rhs(n + m), xz_tilde(n + m), x_prev(n), y_prev(m);

    const double polish_trigger = std::max(settings.eps_abs, 1e-3);
    double last_polish_level = std::numeric_limits<double>::infinity();
    double best_level = std::numeric_limits<double>::infinity();
    int best_level_iter = 0;
    int last_polish_iter = 0;
    int iter = 0;
    SolveStatus status = SolveStatus::MaxIter;
    Residuals res;

    for (iter = 1; iter <= settings.max_iter; ++iter) {
        x_prev = w.x;
        y_prev = w.y;

        rhs.head(n) = settings.sigma * w.x - w.q;
        rhs.tail(m) = w.z - w.rho_inv.cwiseProduct(w.y);
        xz_tilde = w.kkt.solve(rhs);

        const auto x_tilde = xz_tilde.head(n);
        Eigen::VectorXd z_tilde =
            w.z + w.rho_inv.cwiseProduct(xz_tilde.tail(m) - w.y);

        w.x = settings.alpha * x_tilde + (1.0 - settings.alpha) * w.x;
        const Eigen::VectorXd z_relax =
            settings.alpha * z_tilde + (1.0 - settings.alpha) * w.z;
        w.z = (z_relax + w.rho_inv.cwiseProduct(w.y)).cwiseMax(w.l).cwiseMin(w.u);
        w.y += w.rho_vec.cwiseProduct(z_relax - w.z);

        if (iter % kCheckInterval == 0 || iter == settings.max_iter) {
            res = compute_residuals(w, settings);
            const bool prim_ok = res.prim <= res.eps_prim;
            const bool dual_ok = res.dual <= res.eps_dual;
            const double level = std::max(res.prim, res.dual);
            // The finisher is attempted once the iterate is near, or when the
            // residuals have stopped making headway (the finisher tolerates a
            // rough warm start); a failed attempt is repeated only after the
            // iterate improves substantially, since each attempt runs a full
            // interior-point solve.
            const bool near = res.prim <= polish_trigger && res.dual <= polish_trigger;
            if (level < best_level) {
                best_level = level;
                best_level_iter = iter;
            }
            const bool stalled = iter - best_level_iter >= 2000 &&
                                 !primal_infeasible(w, w.y - y_prev) &&
                                 !dual_infeasible(w, w.x - x_prev);
            const bool retry_ok = level < 0.5 * last_polish_level ||
                                  (stalled && iter - last_polish_iter >= 4000);
            if ((prim_ok && dual_ok) || (settings.polish && (near || stalled) && retry_ok)) {
                if (settings.polish && polish(w, settings)) {
                    sol.polished = true;
                    res = compute_residuals(w, settings);
                } else if (settings.polish) {
                    last_polish_level = level;
                    last_polish_iter = iter;
                }
                if (res.prim <= res.eps_prim && res.dual <= res.eps_dual) {
                    status = SolveStatus::Optimal;
                    break;
                }
                if (prim_ok && dual_ok) {
                    status = SolveStatus::Optimal;  // converged, polish declined
                    break;
                }
            }
            if (primal_infeasible(w, w.y - y_prev)) {
                status = SolveStatus::PrimalInfeasible;
                break;
            }
            if (dual_infeasible(w, w.x - x_prev)) {
                status = SolveStatus::DualInfeasible;
                break;
            }
            // Adaptive penalty; refactor only on a substantial change.
            if (res.prim > 0.0 && res.dual > 0.0 && res.eps_prim > 0.0) {
                const double ratio = std::sqrt((res.prim / std::max(res.eps_prim, 1e-30)) /
                                               std::max(res.dual / std::max(res.eps_dual, 1e-30),
                                                        1e-30));
                const double new_rho = std::clamp(rho * ratio, kRhoMin, kRhoMax);
                if (new_rho > 5.0 * rho || new_rho < rho / 5.0) {
                    rho = new_rho;
                    w.set_rho(rho);
                    w.factor(settings.sigma);
                }
            }
        }
    }

    // Unscale.
    sol.chi = w.d.cwiseProduct(w.x);
    const Eigen::VectorXd y_unscaled = w.e.cwiseProduct(w.y) / w.c;
    sol.y_eq = y_unscaled.head(m_eq);
    sol.y_in = y_unscaled.tail(m_in);
    sol.status = status;
    sol.iterations = std::min(iter, settings.max_iter);
    sol.primal_residual = res.prim;
    sol.dual_residual = res.dual;
    sol.objective = 0.5 * sol.chi.dot(problem.H.selfadjointView<Eigen::Lower>() * sol.chi) -
                    problem.g.dot(sol.chi);
    return sol;
}

std::pair<double, double> kkt_residuals(const QPProblem& problem, const Solution& solution) {
    const Eigen::VectorXd& x = solution.chi;
    double prim = 0.0;
    if (problem.A_eq.rows())
        prim = inf_norm(problem.A_eq * x - problem.b_eq);
    if (problem.A_in.rows()) {
        const Eigen::VectorXd ax = problem.A_in * x;
        for (Eigen::Index i = 0; i < ax.size(); ++i) {
            prim = std::max(prim, ax(i) - problem.ub_in(i));
            prim = std::max(prim, problem.lb_in(i) - ax(i));
        }
    }
    Eigen::VectorXd stat = problem.H.selfadjointView<Eigen::Lower>() * x - problem.g;
    if (problem.A_eq.rows()) stat += problem.A_eq.transpose() * solution.y_eq;
    if (problem.A_in.rows()) stat += problem.A_in.transpose() * solution.y_in;
    return {std::max(prim, 0.0), inf_norm(stat)};
}

}  // namespace spillfree
