#include "support/instances.hpp"

#include "wecmpc/errors.hpp"
#include "wecmpc/qp_oracle.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace wecmpc;
using namespace wecmpc::testing;

namespace {

ReducedQp box_only(Index N, double lo, double hi) {
    ReducedQp qp;
    qp.Hr = Matrix::Identity(N, N);
    qp.fr = Vector::Zero(N);
    qp.Gineq = Matrix::Zero(0, N);
    qp.hineq = Vector::Zero(0);
    qp.u_lower = Vector::Constant(N, lo);
    qp.u_upper = Vector::Constant(N, hi);
    return qp;
}

bool feasible(const ReducedQp& qp, const Vector& u) {
    return (u.array() >= qp.u_lower.array()).all() && (u.array() <= qp.u_upper.array()).all() &&
           ((qp.Gineq * u - qp.hineq).array() <= 0.0).all();
}

}  // namespace

TEST(SolveQp, ClippedUnconstrainedOptimum) {
    ReducedQp qp = box_only(4, -100.0, 0.5);
    qp.fr = -Vector::Ones(4);
    const QpSolution sol = solve_qp(qp);
    ASSERT_EQ(sol.status, QpStatus::solved);
    EXPECT_LE((sol.u_opt - Vector::Constant(4, 0.5)).norm(), 1e-12);
    EXPECT_NEAR(sol.cost, 4 * (0.125 - 0.5), 1e-12);
    EXPECT_TRUE((sol.bound_duals.array() > 0.0).all());
}

TEST(SolveQp, ZeroWithLooseBounds) {
    const QpSolution sol = solve_qp(box_only(3, -10.0, 10.0));
    ASSERT_EQ(sol.status, QpStatus::solved);
    EXPECT_LE(sol.u_opt.norm(), 1e-12);
}

TEST(SolveQp, MatchesActiveSetEnumeration) {
    std::mt19937_64 rng(41);
    for (int trial = 0; trial < 10; ++trial) {
        const Index N = 2 + trial % 4;
        InstanceOptions o;
        o.bound_scale = 0.5;
        const Instance inst = random_instance(rng, N, o);
        const ReducedQp qp = eliminate_to_reduced(inst.problem, inst.x, inst.W);
        const QpSolution sol = solve_qp(qp);
        ASSERT_EQ(sol.status, QpStatus::solved);
        const EnumerationResult ref = enumerate_active_sets(qp);
        ASSERT_TRUE(ref.found);
        EXPECT_LE((sol.u_opt - ref.u).cwiseAbs().maxCoeff(), 1e-8) << "trial " << trial;
        EXPECT_LE(sol.primal_residual, 1e-9);
        EXPECT_LE(sol.dual_residual, 1e-9);
    }
}

TEST(SolveQp, InputsRespectSimpleBoundsExactly) {
    std::mt19937_64 rng(44);
    int on_bound = 0;
    for (int trial = 0; trial < 40; ++trial) {
        InstanceOptions o;
        o.bound_scale = 0.3;
        const Instance inst = random_instance(rng, 4 + trial % 8, o);
        const ReducedQp qp = eliminate_to_reduced(inst.problem, inst.x, inst.W);
        const QpSolution sol = solve_qp(qp);
        ASSERT_EQ(sol.status, QpStatus::solved);
        for (Index i = 0; i < sol.u_opt.size(); ++i) {
            EXPECT_LE(sol.u_opt[i], qp.u_upper[i]);
            EXPECT_GE(sol.u_opt[i], qp.u_lower[i]);
            on_bound += sol.u_opt[i] == qp.u_upper[i] || sol.u_opt[i] == qp.u_lower[i];
        }
    }
    EXPECT_GT(on_bound, 0);
}

TEST(SolveQp, FeasiblePerturbationsNeverImprove) {
    std::mt19937_64 rng(42);
    for (int trial = 0; trial < 5; ++trial) {
        const Instance inst = random_instance(rng, 6);
        const ReducedQp qp = eliminate_to_reduced(inst.problem, inst.x, inst.W);
        const QpSolution sol = solve_qp(qp);
        ASSERT_EQ(sol.status, QpStatus::solved);
        const double base = qp.objective(sol.u_opt);
        int tested = 0;
        for (int k = 0; k < 2000 && tested < 200; ++k) {
            Vector dir = uniform_vector(rng, 6, -1, 1);
            dir.normalize();
            const Vector u = sol.u_opt + 1e-4 * dir;
            if (!feasible(qp, u)) {
                continue;
            }
            ++tested;
            EXPECT_GE(qp.objective(u), base - 1e-9);
        }
        EXPECT_GT(tested, 0);
    }
}

TEST(SolveQp, DetectsPrimalInfeasibility) {
    ReducedQp qp = box_only(2, -1.0, 1.0);
    qp.Gineq = Matrix(1, 2);
    qp.Gineq << -1.0, -1.0;  // u1 + u2 >= 5
    qp.hineq = Vector::Constant(1, -5.0);
    const QpSolution sol = solve_qp(qp);
    ASSERT_EQ(sol.status, QpStatus::primal_infeasible);
    ASSERT_EQ(sol.infeasibility_certificate.size(), 3);
    Matrix A(3, 2);
    A << Matrix::Identity(2, 2), qp.Gineq;
    EXPECT_LE((A.transpose() * sol.infeasibility_certificate).norm(), 1e-5);
}

TEST(SolveQp, IterationCapIsReported) {
    std::mt19937_64 rng(43);
    const Instance inst = random_instance(rng, 8);
    QpOptions o;
    o.max_iter = 3;
    o.polish = false;
    const QpSolution sol = solve_qp(eliminate_to_reduced(inst.problem, inst.x, inst.W), o);
    EXPECT_EQ(sol.status, QpStatus::max_iterations);
    EXPECT_EQ(sol.iterations, 3);
}

TEST(SolveQp, Deterministic) {
    std::mt19937_64 rng(44);
    const Instance inst = random_instance(rng, 9);
    const ReducedQp qp = eliminate_to_reduced(inst.problem, inst.x, inst.W);
    const QpSolution a = solve_qp(qp);
    const QpSolution b = solve_qp(qp);
    EXPECT_EQ(a.iterations, b.iterations);
    for (Index i = 0; i < 9; ++i) {
        EXPECT_EQ(a.u_opt[i], b.u_opt[i]);
    }
}

TEST(SolveQp, RejectsInconsistentInput) {
    ReducedQp qp = box_only(3, -1, 1);
    qp.fr = Vector::Zero(2);
    EXPECT_THROW(solve_qp(qp), InvalidParameterError);
    qp = box_only(3, -1, 1);
    qp.fr[1] = std::nan("");
    EXPECT_THROW(solve_qp(qp), NumericError);
    QpOptions o;
    o.tol = 0.0;
    EXPECT_THROW(solve_qp(box_only(2, -1, 1), o), InvalidParameterError);
}

TEST(IpmCost, DelayFormula) {
    IpmCostModel m;
    m.n_i = 10;
    m.OP = 1e11;
    EXPECT_NEAR(ipm_delay(m, 100), 5e-4, 1e-18);
    IpmCostModel unit;
    unit.n_i = 1;
    unit.OP = 5;
    EXPECT_DOUBLE_EQ(ipm_delay(unit, 1), 1.0);
    EXPECT_NEAR(ipm_delay(m, 40) / ipm_delay(m, 20), 8.0, 1e-12);
    EXPECT_THROW(ipm_delay(m, 0), InvalidParameterError);
}

TEST(IpmCost, MinimumPeriodFormula) {
    IpmCostModel m;
    m.n_i = 10;
    m.T_p = 2;
    m.OP = 1e11;
    EXPECT_NEAR(ipm_min_period(m), std::pow(4e-8, 0.25), 1e-15);
    EXPECT_NEAR(ipm_min_period(m), 0.0141421356, 1e-9);
    IpmCostModel fast = m;
    fast.OP *= 16;
    EXPECT_NEAR(ipm_min_period(fast), 0.5 * ipm_min_period(m), 1e-15);
    IpmCostModel unit;
    unit.n_i = 1.0 / 50.0;
    unit.T_p = 1;
    unit.OP = 1;
    EXPECT_NEAR(ipm_min_period(unit), 1.0, 1e-15);
    // T = 10 * delay at N = T_p / T.
    const double T = ipm_min_period(m);
    const double n = m.T_p / T;
    EXPECT_NEAR(10 * m.n_i * 5 * n * n * n / m.OP, T, 1e-12);
    m.OP = -1;
    EXPECT_THROW(ipm_min_period(m), InvalidParameterError);
}

TEST(EqualityMultipliers, LayoutAndSigns) {
    QpSolution s;
    s.u_opt = Vector::Constant(2, 3.0);
    s.ineq_duals = Vector::Zero(8);
    s.ineq_duals[0] = 1.0;  // p_1 at upper
    s.ineq_duals[3] = 2.0;  // p_2 at lower
    s.ineq_duals[6] = 0.5;  // v_1 at lower
    const Vector lam = equality_multipliers(s);
    ASSERT_EQ(lam.size(), 4);
    EXPECT_DOUBLE_EQ(lam[0], -1.0);
    EXPECT_DOUBLE_EQ(lam[1], 2.0);
    EXPECT_DOUBLE_EQ(lam[2], -3.0 + 0.5);
    EXPECT_DOUBLE_EQ(lam[3], -3.0);
}
