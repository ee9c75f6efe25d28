#include "support/instances.hpp"

#include "wecmpc/errors.hpp"
#include "wecmpc/proj_fl_cmo.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <gtest/gtest.h>

#include <random>

using namespace wecmpc;
using namespace wecmpc::testing;

namespace {

Matrix linear_part(const SolverGains& g) {
    const Index nx = g.G1.rows();
    const Index nc = g.G4.rows();
    Matrix L(nx + nc, nx + nc);
    L << g.G1, g.G2, g.G4, Matrix::Identity(nc, nc);
    return L;
}

double stacked_distance(const SolverState& a, const SolverState& b) {
    return std::sqrt((a.xi - b.xi).squaredNorm() + (a.z - b.z).squaredNorm());
}

// Synthetic problem with a chosen Hessian and a random full-rank Ceq.
CondensedProblem synthetic_problem(std::mt19937_64& rng, Index N, const Matrix& H) {
    CondensedProblem pb;
    pb.ops.N = N;
    pb.ops.n = 1;
    pb.H = H;
    pb.f = Vector::Zero(3 * N);
    pb.Ceq = Matrix::Zero(2 * N, 3 * N);
    for (Index i = 0; i < 2 * N; ++i) {
        pb.Ceq.row(i) = uniform_vector(rng, 3 * N, -1, 1).transpose();
    }
    pb.Dmat = Matrix::Zero(2 * N, 1 + N);
    pb.lb = Vector::Constant(3 * N, -1e6);
    pb.ub = Vector::Constant(3 * N, 1e6);
    pb.r = 1.0;
    pb.lambda_min_sym = 0.0;
    return pb;
}

}  // namespace

TEST(OrthonormalComplement, CoordinatePattern) {
    Matrix C(2, 3);
    C << 0, 1, 0, 0, 0, 1;
    const Matrix P = orthonormal_complement(C);
    ASSERT_EQ(P.rows(), 1);
    EXPECT_NEAR(std::abs(P(0, 0)), 1.0, 1e-15);
    EXPECT_NEAR(P(0, 1), 0.0, 1e-15);
    EXPECT_NEAR(P(0, 2), 0.0, 1e-15);
}

TEST(OrthonormalComplement, RandomResiduals) {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 10; ++trial) {
        const Index N = 2 + trial;
        Matrix C(2 * N, 3 * N);
        for (Index i = 0; i < C.rows(); ++i) {
            C.row(i) = uniform_vector(rng, 3 * N, -1, 1).transpose();
        }
        const Matrix P = orthonormal_complement(C);
        EXPECT_LE((P * C.transpose()).norm(), 1e-12);
        EXPECT_LE((P * P.transpose() - Matrix::Identity(N, N)).norm(), 1e-12);
        Matrix stacked(3 * N, 3 * N);
        stacked << P, C;
        EXPECT_TRUE(Eigen::FullPivLU<Matrix>(stacked).isInvertible());
    }
}

TEST(OrthonormalComplement, SpansLiftedInputDirections) {
    std::mt19937_64 rng(12);
    const Instance inst = random_instance(rng, 7);
    const auto& ops = inst.problem.ops;
    const Matrix P = orthonormal_complement(inst.problem.Ceq);
    for (Index j = 0; j < 7; ++j) {
        Vector dir(21);
        dir << Vector::Unit(7, j), ops.Cup.col(j), ops.Cuv.col(j);
        const Vector residual = dir - P.transpose() * (P * dir);
        EXPECT_LE(residual.norm(), 1e-10);
    }
}

TEST(OrthonormalComplement, RankDeficiency) {
    Matrix C(2, 3);
    C << 1, 2, 3, 2, 4, 6;
    EXPECT_THROW(orthonormal_complement(C), RankError);
    EXPECT_THROW(orthonormal_complement(Matrix::Ones(4, 3)), RankError);
}

TEST(DesignGains, EigenvaluePlacement) {
    std::mt19937_64 rng(13);
    const Instance inst = random_instance(rng, 5);
    const SolverGains g = design_gains(inst.problem);
    EXPECT_DOUBLE_EQ(g.kp, 2.0 * g.zero_dynamics_norm);
    EXPECT_DOUBLE_EQ(g.ki, g.zero_dynamics_norm * g.zero_dynamics_norm);
    EXPECT_GT(g.kp, 0.0);
    EXPECT_GT(g.ki, 0.0);
    Matrix pi(2, 2);
    pi << g.kp, g.ki, -1.0, 0.0;
    const Eigen::VectorXcd ev = pi.eigenvalues();
    for (Index i = 0; i < 2; ++i) {
        EXPECT_NEAR(ev[i].real(), g.zero_dynamics_norm, 1e-6);
        EXPECT_NEAR(ev[i].imag(), 0.0, 1e-6);
    }
    const Matrix Hn = g.Cperp * inst.problem.H * g.Cperp.transpose();
    EXPECT_NEAR(g.zero_dynamics_norm, Eigen::JacobiSVD<Matrix>(Hn).singularValues()[0], 1e-9);
}

TEST(DesignGains, IdentityHessianGivesUnitGains) {
    std::mt19937_64 rng(14);
    const CondensedProblem pb = synthetic_problem(rng, 4, Matrix::Identity(12, 12));
    const SolverGains g = design_gains(pb);
    EXPECT_NEAR(g.kp, 2.0, 1e-9);
    EXPECT_NEAR(g.ki, 1.0, 1e-9);
}

TEST(DesignGains, GainIdentityRebuild) {
    std::mt19937_64 rng(15);
    for (Index N : {3, 5, 10}) {
        const Instance inst = random_instance(rng, N);
        const CondensedProblem& pb = inst.problem;
        const SolverGains g = design_gains(pb);
        const Matrix& C = pb.Ceq;
        const Matrix W = C.transpose() * (C * C.transpose()).inverse();
        const Matrix I = Matrix::Identity(3 * N, 3 * N);
        const double t = g.tau;
        EXPECT_LE((g.G1 - (I - t * pb.H + t * W * C * (pb.H - g.kp * I))).norm(), 1e-12 * (1 + g.G1.norm()));
        EXPECT_LE((g.G2 - (-t * g.ki * W)).norm(), 1e-12 * (1 + g.G2.norm()));
        EXPECT_LE((g.G3 - (-g.kp * W)).norm(), 1e-12 * (1 + g.G3.norm()));
        EXPECT_LE((g.G4 - t * C).norm(), 1e-12 * (1 + g.G4.norm()));
        EXPECT_LE((g.g - (-t * pb.f + t * W * C * pb.f)).norm(), 1e-12);
        EXPECT_LE((g.Dtil - t * pb.Dmat).norm(), 1e-12 * (1 + g.Dtil.norm()));
    }
}

TEST(DesignGains, LinearPartIsTheTransformedMap) {
    std::mt19937_64 rng(16);
    const Instance inst = random_instance(rng, 6);
    const CondensedProblem& pb = inst.problem;
    const SolverGains g = design_gains(pb);
    const Index N = 6;
    const Matrix& C = pb.Ceq;
    const Matrix Cdag = C.transpose() * (C * C.transpose()).inverse();
    Matrix M = Matrix::Zero(5 * N, 5 * N);
    M.block(0, 0, N, N) = g.Cperp * pb.H * g.Cperp.transpose();
    M.block(0, N, N, 2 * N) = g.Cperp * pb.H * Cdag;
    M.block(N, N, 2 * N, 2 * N) = g.kp * Matrix::Identity(2 * N, 2 * N);
    M.block(N, 3 * N, 2 * N, 2 * N) = g.ki * Matrix::Identity(2 * N, 2 * N);
    M.block(3 * N, N, 2 * N, 2 * N) = -Matrix::Identity(2 * N, 2 * N);
    Matrix T = Matrix::Identity(5 * N, 5 * N);
    T.block(0, 0, 3 * N, N) = g.Cperp.transpose();
    T.block(0, N, 3 * N, 2 * N) = Cdag;
    const Matrix TMTi = T * M * T.inverse();
    const Matrix L = linear_part(g);
    EXPECT_LE((L - (Matrix::Identity(5 * N, 5 * N) - g.tau * TMTi)).norm(), 1e-10);

    const Eigen::JacobiSVD<Matrix> svd_tm(TMTi);
    EXPECT_NEAR(g.transformed_norm, svd_tm.singularValues()[0], 1e-8 * svd_tm.singularValues()[0]);
    EXPECT_NEAR(g.tau, 0.99 / svd_tm.singularValues()[0], 1e-8 * g.tau);
}

TEST(DesignGains, CertifiedNormsMatchDenseComputation) {
    std::mt19937_64 rng(17);
    for (Index N : {3, 5, 10}) {
        const Instance inst = random_instance(rng, N);
        const SolverGains g = design_gains(inst.problem);
        const Matrix L = linear_part(g);
        const double sigma = Eigen::JacobiSVD<Matrix>(L).singularValues()[0];
        EXPECT_NEAR(g.rho_bound, sigma, 1e-8);
        EXPECT_NEAR(g.rho_transformed, sigma, 1e-8);
        const double radius = L.eigenvalues().cwiseAbs().maxCoeff();
        EXPECT_NEAR(g.asymptotic_rate, radius, 1e-6);
        EXPECT_LT(g.asymptotic_rate, 1.0);
    }
}

TEST(DesignGains, RejectsBadSafetyFactorAndNonConvexProblem) {
    std::mt19937_64 rng(18);
    Instance inst = random_instance(rng, 4);
    GainDesignOptions o;
    o.step_safety = 1.0;
    EXPECT_THROW(design_gains(inst.problem, o), InvalidParameterError);
    inst.problem.r = -inst.problem.lambda_min_sym - 1.0;
    EXPECT_THROW(design_gains(inst.problem), ConvexityError);
}

TEST(Step, FixedPointAtOracleOptimum) {
    std::mt19937_64 rng(19);
    for (int trial = 0; trial < 10; ++trial) {
        const Index N = 3 + trial % 3;
        const Instance inst = random_instance(rng, N);
        const CondensedProblem& pb = inst.problem;
        const SolverGains g = design_gains(pb);
        const QpSolution sol = solve_qp(eliminate_to_reduced(pb, inst.x, inst.W));
        ASSERT_EQ(sol.status, QpStatus::solved);
        const Vector d = compute_offset(pb, inst.x, inst.W);
        const Vector xi = project_box(lift_inputs(pb, inst.x, inst.W, sol.u_opt), pb.lb, pb.ub);
        const SolverState s = equilibrium_state(pb, g, xi, equality_multipliers(sol), d);
        const SolverState next = step(g, s, g.tau * d);
        EXPECT_LE(stacked_distance(next, s), 1e-10 * (1.0 + s.z.norm())) << "trial " << trial;
    }
}

TEST(Step, LooseBoundsConvergeToEqualityConstrainedMinimizer) {
    std::mt19937_64 rng(20);
    InstanceOptions o;
    o.loose = true;
    for (Index N : {3, 5, 10}) {
        const Instance inst = random_instance(rng, N, o);
        const CondensedProblem& pb = inst.problem;
        const SolverGains g = design_gains(pb);
        const Vector ref = equality_constrained_minimizer(pb, compute_offset(pb, inst.x, inst.W));
        const ConvergenceResult res =
            solve_to_convergence(g, pb, inst.x, inst.W, initial_state(g), 1e-13, 200000);
        ASSERT_TRUE(res.converged);
        EXPECT_LE((res.state.xi - ref).norm(), 1e-8 * (1 + ref.norm())) << "N = " << N;
    }
}

TEST(Step, ProjectionActivityPutsInputsOnTheBound) {
    std::mt19937_64 rng(21);
    InstanceOptions o;
    o.loose = true;
    const Index N = 5;
    Instance inst = random_instance(rng, N, o);
    const Vector free_opt =
        equality_constrained_minimizer(inst.problem, compute_offset(inst.problem, inst.x, inst.W));
    const double cap = 0.5 * free_opt.head(N).maxCoeff();
    ASSERT_GT(cap, 0.0);
    Bounds b = inst.problem.bounds;
    b.u_upper = cap;
    const CondensedProblem pb = build_condensed(inst.problem.ops, b, inst.problem.r);
    const SolverGains g = design_gains(pb);
    const ConvergenceResult res = solve_to_convergence(g, pb, inst.x, inst.W, initial_state(g), 1e-13, 400000);
    ASSERT_TRUE(res.converged);
    const QpSolution sol = solve_qp(eliminate_to_reduced(pb, inst.x, inst.W));
    int on_bound = 0;
    for (Index i = 0; i < N; ++i) {
        if (sol.u_opt[i] >= cap - 1e-9) {
            EXPECT_EQ(res.state.xi[i], cap);
            ++on_bound;
        }
    }
    EXPECT_GT(on_bound, 0);
    EXPECT_LE((res.state.xi.head(N) - sol.u_opt).norm(), 1e-6);
}

TEST(Step, StaysInsideTheBoxExactly) {
    std::mt19937_64 rng(22);
    const Instance inst = random_instance(rng, 6);
    const SolverGains g = design_gains(inst.problem);
    for (int trial = 0; trial < 50; ++trial) {
        SolverState s{uniform_vector(rng, 18, -20, 20), uniform_vector(rng, 12, -50, 50)};
        s.xi = project_box(s.xi, g.lb, g.ub);
        const SolverState next = step(g, s, uniform_vector(rng, 12, -1, 1));
        EXPECT_TRUE((next.xi.array() >= g.lb.array()).all());
        EXPECT_TRUE((next.xi.array() <= g.ub.array()).all());
    }
}

TEST(Step, ErrorsOnBadInput) {
    std::mt19937_64 rng(23);
    const Instance inst = random_instance(rng, 3);
    const SolverGains g = design_gains(inst.problem);
    SolverState s = initial_state(g);
    Vector d = Vector::Zero(6);
    d[2] = std::nan("");
    EXPECT_THROW(step(g, s, d), NumericError);
    EXPECT_THROW(step(g, s, Vector::Zero(5)), InvalidParameterError);
    s.z[0] = std::numeric_limits<double>::infinity();
    EXPECT_THROW(step(g, s, Vector::Zero(6)), NumericError);
}

TEST(Step, MultiplicationCounter) {
    std::mt19937_64 rng(24);
    const Index N = 7;
    const Instance inst = random_instance(rng, N);
    const SolverGains g = design_gains(inst.problem);
    FlopCounter c;
    const Vector dt = scaled_offset(g, inst.x, inst.W, &c);
    EXPECT_EQ(c.multiplications, static_cast<std::uint64_t>(2 * N * (inst.x.size() + N)));
    c = FlopCounter{};
    (void)step(g, initial_state(g), dt, &c);
    EXPECT_EQ(c.multiplications, static_cast<std::uint64_t>(23 * N * N + 2 * N));
}

TEST(Multipliers, ZeroAtTheOrigin) {
    std::mt19937_64 rng(25);
    const Instance inst = random_instance(rng, 4);
    const SolverGains g = design_gains(inst.problem);
    const Vector lam = recover_multipliers(inst.problem, g, Vector::Zero(12), Vector::Zero(8), Vector::Zero(8));
    EXPECT_EQ(lam.norm(), 0.0);
}

TEST(Multipliers, MatchOracleDualsWhenOutputsInactive) {
    std::mt19937_64 rng(26);
    InstanceOptions o;
    o.loose = true;
    for (Index N : {3, 5, 8}) {
        const Instance inst = random_instance(rng, N, o);
        const CondensedProblem& pb = inst.problem;
        const SolverGains g = design_gains(pb);
        const ConvergenceResult res = solve_to_convergence(g, pb, inst.x, inst.W, initial_state(g), 1e-13, 200000);
        ASSERT_TRUE(res.converged);
        const QpSolution sol = solve_qp(eliminate_to_reduced(pb, inst.x, inst.W));
        const Vector lam_ref = equality_multipliers(sol);
        EXPECT_LE((res.kkt.multipliers - lam_ref).norm(), 1e-6 * (1 + lam_ref.norm()));
    }
}

TEST(Kkt, ResidualsAtOptimumAndAtInfeasiblePoints) {
    std::mt19937_64 rng(27);
    const Instance inst = random_instance(rng, 5);
    const CondensedProblem& pb = inst.problem;
    const SolverGains g = design_gains(pb);
    const Vector d = compute_offset(pb, inst.x, inst.W);
    const QpSolution sol = solve_qp(eliminate_to_reduced(pb, inst.x, inst.W));
    const Vector xi = project_box(lift_inputs(pb, inst.x, inst.W, sol.u_opt), pb.lb, pb.ub);
    const SolverState s = equilibrium_state(pb, g, xi, equality_multipliers(sol), d);
    const KktReport at_opt = kkt_report(pb, g, s.xi, s.z, d);
    EXPECT_LE(at_opt.stationarity_residual, 1e-6);
    EXPECT_LE(at_opt.primal_residual, 1e-6);

    for (int trial = 0; trial < 5; ++trial) {
        const Vector bad = uniform_vector(rng, 15, -1, 1);
        const KktReport rep = kkt_report(pb, g, bad, Vector::Zero(10), d);
        EXPECT_DOUBLE_EQ(rep.primal_residual, (pb.Ceq * bad + d).norm());
        EXPECT_GT(rep.primal_residual, 0.0);
        EXPECT_GE(rep.stationarity_residual, 0.0);
    }
}

TEST(SolveToConvergence, EarlyExitAndNonConvergenceReport) {
    std::mt19937_64 rng(28);
    const Instance inst = random_instance(rng, 4);
    const SolverGains g = design_gains(inst.problem);
    const SolverState init = initial_state(g);
    const ConvergenceResult loose = solve_to_convergence(g, inst.problem, inst.x, inst.W, init, 1e6, 100);
    EXPECT_TRUE(loose.converged);
    EXPECT_EQ(loose.iterations, 1);

    const ConvergenceResult capped = solve_to_convergence(g, inst.problem, inst.x, inst.W, init, 1e-14, 3);
    EXPECT_FALSE(capped.converged);
    EXPECT_EQ(capped.iterations, 3);
    EXPECT_GT(capped.last_increment, 1e-14);
    EXPECT_THROW(solve_to_convergence(g, inst.problem, inst.x, inst.W, init, 0.0, 3), InvalidParameterError);
}

TEST(SolveToConvergence, MatchesQpOracle) {
    std::mt19937_64 rng(29);
    for (int trial = 0; trial < 9; ++trial) {
        const Index N = std::array<Index, 3>{3, 5, 10}[static_cast<std::size_t>(trial % 3)];
        const Instance inst = random_instance(rng, N);
        const SolverGains g = design_gains(inst.problem);
        const ConvergenceResult res =
            solve_to_convergence(g, inst.problem, inst.x, inst.W, initial_state(g), 1e-13, 500000);
        ASSERT_TRUE(res.converged) << "trial " << trial;
        const QpSolution sol = solve_qp(eliminate_to_reduced(inst.problem, inst.x, inst.W));
        EXPECT_LE((res.state.xi.head(N) - sol.u_opt).cwiseAbs().maxCoeff(), 1e-6) << "trial " << trial;
    }
}
