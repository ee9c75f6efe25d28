#include "wecmpc/proj_fl_cmo.hpp"

#include "wecmpc/errors.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include <cmath>
#include <sstream>

namespace wecmpc {
namespace {

double stacked_norm(const Vector& a, const Vector& b) {
    return std::sqrt(a.squaredNorm() + b.squaredNorm());
}

}  // namespace

Matrix orthonormal_complement(const Matrix& ceq) {
    const Index rows = ceq.rows();
    const Index cols = ceq.cols();
    if (rows > cols) {
        throw RankError("orthonormal_complement: more constraints than variables");
    }
    Eigen::ColPivHouseholderQR<Matrix> qr(ceq.transpose());
    qr.setThreshold(1e-12);
    if (qr.rank() < rows) {
        throw RankError("orthonormal_complement: equality matrix has rank " +
                        std::to_string(qr.rank()) + " < " + std::to_string(rows));
    }
    const Matrix q = qr.householderQ();
    return q.rightCols(cols - rows).transpose();
}

SolverGains design_gains(const CondensedProblem& problem, const GainDesignOptions& options) {
    if (!(options.step_safety > 0.0 && options.step_safety < 1.0)) {
        throw InvalidParameterError("design_gains: step safety factor must lie in (0, 1)");
    }
    if (problem.convexity_margin() < -1e-10) {
        throw ConvexityError("design_gains: problem is not convex in the inputs",
                             problem.lambda_min_sym);
    }
    const Index N = problem.horizon();
    const Index nx = 3 * N;  // primal variables
    const Index nc = 2 * N;  // equality rows
    const Matrix& H = problem.H;
    const Matrix& C = problem.Ceq;

    SolverGains gains;
    gains.N = N;
    gains.n = problem.states();
    gains.lb = problem.lb;
    gains.ub = problem.ub;

    gains.Cperp = orthonormal_complement(C);
    gains.gram.compute(C * C.transpose());
    if (gains.gram.info() != Eigen::Success) {
        throw RankError("design_gains: Ceq Ceq^T is not positive definite");
    }
    // C^T (C C^T)^-1, which is also the pseudoinverse of C.
    const Matrix W = gains.gram.solve(C).transpose();

    const Matrix& Cp = gains.Cperp;
    const Matrix Hn = Cp * H * Cp.transpose();
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (Hn + Hn.transpose()), Eigen::EigenvaluesOnly);
    gains.zero_dynamics_spectrum = es.eigenvalues();

    const SpectralNormEstimate s_est = spectral_norm(Hn, options.power);
    const double s = s_est.value;
    if (!(s > 0.0)) {
        throw DesignError("design_gains: zero dynamics vanish (||Cperp H Cperp^T|| = 0)");
    }
    gains.zero_dynamics_norm = s;
    gains.kp = 2.0 * s;
    gains.ki = s * s;

    // Transformed dynamics in (eta, gamma, z) = (Cperp xi, C xi, z):
    //   M = [[Hn, Cperp H C^+, 0], [0, kp I, ki I], [0, -I, 0]]
    //   T = blockdiag([Cperp; C]^-1, I),  [Cperp; C]^-1 = [Cperp^T, C^+].
    const Matrix HnC = Cp * H * W;
    Matrix basis(nx, nx);  // [Cperp; C]
    basis << Cp, C;
    Matrix basis_inv(nx, nx);  // [Cperp^T, C^+]
    basis_inv << Cp.transpose(), W;
    const double kp = gains.kp;
    const double ki = gains.ki;

    auto apply_m = [&](const Vector& y) -> Vector {
        Vector out(nx + nc);
        const auto eta = y.segment(0, N);
        const auto gam = y.segment(N, nc);
        const auto zz = y.segment(nx, nc);
        out.segment(0, N) = Hn * eta + HnC * gam;
        out.segment(N, nc) = kp * gam + ki * zz;
        out.segment(nx, nc) = -gam;
        return out;
    };
    auto apply_mt = [&](const Vector& y) -> Vector {
        Vector out(nx + nc);
        const auto a = y.segment(0, N);
        const auto b = y.segment(N, nc);
        const auto c = y.segment(nx, nc);
        out.segment(0, N) = Hn.transpose() * a;
        out.segment(N, nc) = HnC.transpose() * a + kp * b - c;
        out.segment(nx, nc) = ki * b;
        return out;
    };
    // T^-1 = blockdiag(basis, I), T = blockdiag(basis_inv, I).
    auto apply_tinv = [&](const Vector& y, bool transpose) -> Vector {
        Vector out(nx + nc);
        out.head(nx) = transpose ? Vector(basis.transpose() * y.head(nx)) : Vector(basis * y.head(nx));
        out.tail(nc) = y.tail(nc);
        return out;
    };
    auto apply_t = [&](const Vector& y, bool transpose) -> Vector {
        Vector out(nx + nc);
        out.head(nx) =
            transpose ? Vector(basis_inv.transpose() * y.head(nx)) : Vector(basis_inv * y.head(nx));
        out.tail(nc) = y.tail(nc);
        return out;
    };
    auto tmt = [&](const Vector& y) -> Vector { return apply_t(apply_m(apply_tinv(y, false)), false); };
    auto tmt_t = [&](const Vector& y) -> Vector {
        return apply_tinv(apply_mt(apply_t(y, true)), true);
    };

    const SpectralNormEstimate tmt_norm = spectral_norm(tmt, tmt_t, nx + nc, options.power);
    gains.transformed_norm = tmt_norm.value;
    gains.tau = options.step_safety / tmt_norm.value;
    const double tau = gains.tau;

    gains.G1 = Matrix::Identity(nx, nx) - tau * H + tau * W * (C * H) - (tau * kp) * (W * C);
    gains.G2 = -(tau * ki) * W;
    gains.G3 = -kp * W;
    gains.G4 = tau * C;
    gains.g = -tau * problem.f + tau * W * (C * problem.f);
    gains.Dtil = tau * problem.Dmat;

    // Linear part of the step, [[G1, G2], [G4, I]], and its transpose.
    auto apply_l = [&](const Vector& y) -> Vector {
        Vector out(nx + nc);
        out.head(nx) = gains.G1 * y.head(nx) + gains.G2 * y.tail(nc);
        out.tail(nc) = gains.G4 * y.head(nx) + y.tail(nc);
        return out;
    };
    auto apply_lt = [&](const Vector& y) -> Vector {
        Vector out(nx + nc);
        out.head(nx) = gains.G1.transpose() * y.head(nx) + gains.G4.transpose() * y.tail(nc);
        out.tail(nc) = gains.G2.transpose() * y.head(nx) + y.tail(nc);
        return out;
    };
    gains.rho_bound = spectral_norm(apply_l, apply_lt, nx + nc, options.power).value;

    auto apply_i_tmt = [&](const Vector& y) -> Vector { return y - tau * tmt(y); };
    auto apply_i_tmt_t = [&](const Vector& y) -> Vector { return y - tau * tmt_t(y); };
    gains.rho_transformed = spectral_norm(apply_i_tmt, apply_i_tmt_t, nx + nc, options.power).value;

    // I - tau M is block upper triangular: its eigenvalues are 1 - tau mu for
    // mu in spec(Hn), and 1 - tau s (double) from the PI block.
    double rate = std::abs(1.0 - tau * s);
    for (Index i = 0; i < gains.zero_dynamics_spectrum.size(); ++i) {
        rate = std::max(rate, std::abs(1.0 - tau * gains.zero_dynamics_spectrum[i]));
    }
    gains.asymptotic_rate = rate;

    if (!(rate < 1.0)) {
        std::ostringstream msg;
        msg << "design_gains: linear part of the iteration is not Schur stable"
            << " (spectral radius " << rate << ", ||T M T^-1|| = " << gains.transformed_norm
            << ", lambda_min(Cperp H Cperp^T) = " << gains.zero_dynamics_spectrum.minCoeff()
            << ", ||[[G1,G2],[G4,I]]|| = " << gains.rho_bound << ")";
        throw DesignError(msg.str());
    }
    return gains;
}

SolverState initial_state(const SolverGains& gains) {
    return SolverState{project_box(Vector::Zero(3 * gains.N), gains.lb, gains.ub),
                       Vector::Zero(2 * gains.N)};
}

Vector scaled_offset(const SolverGains& gains, const Vector& x_k, const Vector& W_k,
                     FlopCounter* counter) {
    if (x_k.size() != gains.n || W_k.size() != gains.N) {
        throw InvalidParameterError("scaled_offset: dimension mismatch");
    }
    Vector out = gains.Dtil.leftCols(gains.n) * x_k + gains.Dtil.rightCols(gains.N) * W_k;
    if (counter) {
        counter->add(static_cast<std::uint64_t>(gains.Dtil.rows() * gains.Dtil.cols()));
    }
    return out;
}

SolverState step(const SolverGains& gains, const SolverState& state, const Vector& d_til,
                 FlopCounter* counter) {
    const Index N = gains.N;
    if (state.xi.size() != 3 * N || state.z.size() != 2 * N || d_til.size() != 2 * N) {
        throw InvalidParameterError("step: dimension mismatch");
    }
    if (!state.xi.allFinite() || !state.z.allFinite() || !d_til.allFinite()) {
        throw NumericError("step: non-finite solver state or offset");
    }

    SolverState next;
    Vector pre = gains.G1 * state.xi;
    pre.noalias() += gains.G2 * state.z;
    pre.noalias() += gains.G3 * d_til;
    pre += gains.g;
    next.xi = project_box(pre, gains.lb, gains.ub);

    // G4 = tau [[-Cup, I, 0], [-Cuv, 0, I]]: only the input block is dense.
    next.z = state.z + d_til;
    next.z.noalias() += gains.G4.leftCols(N) * state.xi.head(N);
    next.z += gains.tau * state.xi.tail(2 * N);

    if (counter) {
        const auto n2 = static_cast<std::uint64_t>(N) * static_cast<std::uint64_t>(N);
        counter->add(9 * n2 + 6 * n2 + 6 * n2 + 2 * n2 + 2 * static_cast<std::uint64_t>(N));
    }
    return next;
}

Vector recover_multipliers(const CondensedProblem& problem, const SolverGains& gains,
                           const Vector& xi, const Vector& z, const Vector& d) {
    const Matrix& C = problem.Ceq;
    const Vector grad = problem.H * xi + problem.f;
    const Vector rhs = -(C * grad) + gains.kp * (C * xi + d) + gains.ki * z;
    return gains.gram.solve(rhs);
}

KktReport kkt_report(const CondensedProblem& problem, const SolverGains& gains, const Vector& xi,
                     const Vector& z, const Vector& d) {
    KktReport rep;
    rep.multipliers = recover_multipliers(problem, gains, xi, z, d);
    const Vector grad = problem.H * xi + problem.f + problem.Ceq.transpose() * rep.multipliers;
    rep.stationarity_residual = (xi - project_box(xi - grad, problem.lb, problem.ub)).norm();
    rep.primal_residual = (problem.Ceq * xi + d).norm();
    return rep;
}

double fixed_point_residual(const SolverGains& gains, const SolverState& state,
                            const Vector& d_til) {
    const SolverState next = step(gains, state, d_til);
    return stacked_norm(next.xi - state.xi, next.z - state.z);
}

ConvergenceResult solve_to_convergence(const SolverGains& gains, const CondensedProblem& problem,
                                       const Vector& x_k, const Vector& W_k,
                                       const SolverState& init, double tol, int max_iter) {
    if (!(tol > 0.0)) {
        throw InvalidParameterError("solve_to_convergence: tolerance must be > 0");
    }
    const Vector d = compute_offset(problem, x_k, W_k);
    const Vector d_til = gains.tau * d;

    ConvergenceResult res;
    res.state = init;
    for (int it = 1; it <= max_iter; ++it) {
        SolverState next = step(gains, res.state, d_til);
        res.last_increment = stacked_norm(next.xi - res.state.xi, next.z - res.state.z);
        res.state = std::move(next);
        res.iterations = it;
        if (res.last_increment <= tol) {
            res.converged = true;
            break;
        }
    }
    res.kkt = kkt_report(problem, gains, res.state.xi, res.state.z, d);
    return res;
}

}  // namespace wecmpc
