#include "wecmpc/condensation.hpp"

#include "wecmpc/errors.hpp"

#include <cmath>
#include <sstream>
#include <string>

namespace wecmpc {
namespace {

void check_preview(const CondensedProblem& problem, const Vector& x_k, const Vector& W_k) {
    if (x_k.size() != problem.states() || W_k.size() != problem.horizon()) {
        throw InvalidParameterError("condensed problem: expected x_k of size " +
                                    std::to_string(problem.states()) + " and W_k of size " +
                                    std::to_string(problem.horizon()));
    }
}

}  // namespace

PredictionOperators build_prediction(const DiscretePlant& plant, Index N) {
    const Index n = plant.states();
    if (N < 1) {
        throw InvalidParameterError("build_prediction: horizon must be >= 1");
    }
    if (N > kMaxHorizon || N * n > kMaxLiftedStates) {
        throw SizeLimitError("build_prediction: horizon " + std::to_string(N) + " with " +
                             std::to_string(n) + " states exceeds the size cap");
    }

    PredictionOperators ops;
    ops.N = N;
    ops.n = n;
    ops.Acal.resize(n * N, n);
    ops.Bcal = Matrix::Zero(n * N, N);

    Matrix power = Matrix::Identity(n, n);
    for (Index i = 0; i < N; ++i) {
        ops.Acal.middleRows(i * n, n) = power;
        power = plant.A * power;
    }
    // Column j holds the response to a unit input at step j: zero up to block
    // j, then B, AB, A^2 B, ...
    Vector impulse = plant.B;
    for (Index k = 1; k < N; ++k) {
        for (Index j = 0; j + k < N; ++j) {
            ops.Bcal.block((j + k) * n, j, n, 1) = impulse;
        }
        impulse = plant.A * impulse;
    }

    ops.Cxp.resize(N, n);
    ops.Cxv.resize(N, n);
    ops.Cup.resize(N, N);
    ops.Cuv.resize(N, N);
    for (Index i = 0; i < N; ++i) {
        ops.Cxp.row(i) = plant.Cp * ops.Acal.middleRows(i * n, n);
        ops.Cxv.row(i) = plant.Cv * ops.Acal.middleRows(i * n, n);
        ops.Cup.row(i) = plant.Cp * ops.Bcal.middleRows(i * n, n);
        ops.Cuv.row(i) = plant.Cv * ops.Bcal.middleRows(i * n, n);
    }
    return ops;
}

void Bounds::validate() const {
    const double vals[] = {u_lower, u_upper, p_lower, p_upper, v_lower, v_upper};
    for (double x : vals) {
        if (std::isnan(x)) {
            throw InvalidParameterError("bounds: NaN entry");
        }
    }
    if (!(u_lower < u_upper) || !(p_lower < p_upper) || !(v_lower < v_upper)) {
        throw InvalidParameterError("bounds: every lower bound must be below its upper bound");
    }
}

CondensedProblem build_condensed(PredictionOperators ops, const Bounds& bounds, double r,
                                 bool auto_raise_r) {
    bounds.validate();
    if (!(r >= 0.0) || !std::isfinite(r)) {
        throw InvalidParameterError("build_condensed: control weight must be finite and >= 0");
    }
    const Index N = ops.N;
    const Index n = ops.n;

    CondensedProblem pb;
    pb.r_requested = r;
    pb.lambda_min_sym = min_symmetric_eigenvalue(ops.Cuv + ops.Cuv.transpose());
    if (auto_raise_r) {
        r = std::max(r, 1.05 * std::max(0.0, -pb.lambda_min_sym));
    }
    if (!(r > 0.0) || r + pb.lambda_min_sym < -1e-10) {
        std::ostringstream msg;
        msg << "build_condensed: reduced Hessian r I + Cuv + Cuv^T is not positive semidefinite"
            << " (r = " << r << ", lambda_min(Cuv + Cuv^T) = " << pb.lambda_min_sym << ")";
        throw ConvexityError(msg.str(), pb.lambda_min_sym);
    }
    pb.r = r;
    pb.bounds = bounds;

    const Matrix I = Matrix::Identity(N, N);
    pb.H = Matrix::Zero(3 * N, 3 * N);
    pb.H.topLeftCorner(N, N) = r * I;
    pb.H.block(0, 2 * N, N, N) = I;
    pb.H.block(2 * N, 0, N, N) = I;
    pb.f = Vector::Zero(3 * N);

    pb.Ceq = Matrix::Zero(2 * N, 3 * N);
    pb.Ceq.block(0, 0, N, N) = -ops.Cup;
    pb.Ceq.block(0, N, N, N) = I;
    pb.Ceq.block(N, 0, N, N) = -ops.Cuv;
    pb.Ceq.block(N, 2 * N, N, N) = I;

    pb.Dmat.resize(2 * N, n + N);
    pb.Dmat << -ops.Cxp, -ops.Cup, -ops.Cxv, -ops.Cuv;

    pb.lb.resize(3 * N);
    pb.ub.resize(3 * N);
    pb.lb << Vector::Constant(N, bounds.u_lower), Vector::Constant(N, bounds.p_lower),
        Vector::Constant(N, bounds.v_lower);
    pb.ub << Vector::Constant(N, bounds.u_upper), Vector::Constant(N, bounds.p_upper),
        Vector::Constant(N, bounds.v_upper);

    pb.ops = std::move(ops);
    return pb;
}

Vector compute_offset(const CondensedProblem& problem, const Vector& x_k, const Vector& W_k) {
    check_preview(problem, x_k, W_k);
    const Index n = problem.states();
    const Index N = problem.horizon();
    return problem.Dmat.leftCols(n) * x_k + problem.Dmat.rightCols(N) * W_k;
}

Vector lift_inputs(const CondensedProblem& problem, const Vector& x_k, const Vector& W_k,
                   const Vector& u) {
    check_preview(problem, x_k, W_k);
    const auto& ops = problem.ops;
    const Index N = ops.N;
    Vector xi(3 * N);
    const Vector drive = u + W_k;
    xi.segment(0, N) = u;
    xi.segment(N, N) = ops.Cxp * x_k + ops.Cup * drive;
    xi.segment(2 * N, N) = ops.Cxv * x_k + ops.Cuv * drive;
    return xi;
}

double condensed_objective(const CondensedProblem& problem, const Vector& xi) {
    return 0.5 * xi.dot(problem.H * xi) + problem.f.dot(xi);
}

double ReducedQp::objective(const Vector& u) const {
    return 0.5 * u.dot(Hr * u) + fr.dot(u);
}

ReducedQp eliminate_to_reduced(const CondensedProblem& problem, const Vector& x_k,
                               const Vector& W_k) {
    check_preview(problem, x_k, W_k);
    const auto& ops = problem.ops;
    const auto& b = problem.bounds;
    const Index N = ops.N;

    ReducedQp qp;
    qp.Hr = problem.r * Matrix::Identity(N, N) + ops.Cuv + ops.Cuv.transpose();
    qp.fr = ops.Cxv * x_k + ops.Cuv * W_k;

    const Vector p_free = ops.Cxp * x_k + ops.Cup * W_k;
    const Vector v_free = ops.Cxv * x_k + ops.Cuv * W_k;
    qp.Gineq.resize(4 * N, N);
    qp.Gineq << ops.Cup, -ops.Cup, ops.Cuv, -ops.Cuv;
    qp.hineq.resize(4 * N);
    qp.hineq << (b.p_upper - p_free.array()).matrix(), (p_free.array() - b.p_lower).matrix(),
        (b.v_upper - v_free.array()).matrix(), (v_free.array() - b.v_lower).matrix();
    qp.u_lower = Vector::Constant(N, b.u_lower);
    qp.u_upper = Vector::Constant(N, b.u_upper);
    return qp;
}

}  // namespace wecmpc
