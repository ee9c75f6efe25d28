#pragma once

#include "wecmpc/linalg.hpp"
#include "wecmpc/model.hpp"

namespace wecmpc {

inline constexpr Index kMaxHorizon = 2000;
inline constexpr Index kMaxLiftedStates = 32000;  // N * n

/// Stacked prediction over an N-step window starting at x_k:
///   x_hat = Acal x_k + Bcal (u + W),  p_hat = Cxp x_k + Cup (u + W),
///   v_hat = Cxv x_k + Cuv (u + W).
struct PredictionOperators {
    Matrix Acal;  ///< (nN) x n, block i = A^i
    Matrix Bcal;  ///< (nN) x N, block (i, j) = A^(i-j-1) B for i > j
    Matrix Cxp, Cup, Cxv, Cuv;
    Index N = 0;
    Index n = 0;
};

PredictionOperators build_prediction(const DiscretePlant& plant, Index N);

struct Bounds {
    double u_lower = -1.0;
    double u_upper = 1.0;
    double p_lower = -1.0;
    double p_upper = 1.0;
    double v_lower = -1.0;
    double v_upper = 1.0;

    void validate() const;
};

/// min 1/2 xi^T H xi + f^T xi  s.t.  Ceq xi + d = 0,  lb <= xi <= ub
/// over xi = [u; p; v], with d = Dmat [x_k; W_k].
///
/// Sign convention: Ceq = [[-Cup, I, 0], [-Cuv, 0, I]] and
/// d = -([Cxp; Cxv] x_k + [Cup; Cuv] W_k), so the residual Ceq xi + d is zero
/// exactly when p and v follow the prediction.
struct CondensedProblem {
    PredictionOperators ops;
    Matrix H;
    Vector f;
    Matrix Ceq;
    Matrix Dmat;
    Vector lb;
    Vector ub;
    Bounds bounds;
    double r = 0.0;            ///< weight actually used
    double r_requested = 0.0;  ///< weight from the configuration
    double lambda_min_sym = 0.0;  ///< lambda_min(Cuv + Cuv^T)

    [[nodiscard]] Index horizon() const noexcept { return ops.N; }
    [[nodiscard]] Index states() const noexcept { return ops.n; }

    /// lambda_min(r I + Cuv + Cuv^T); non-negative for a convex problem.
    [[nodiscard]] double convexity_margin() const noexcept { return r + lambda_min_sym; }
};

/// With `auto_raise_r`, r becomes max(r, 1.05 * max(0, -lambda_min(Cuv + Cuv^T)))
/// instead of failing the convexity gate.
CondensedProblem build_condensed(PredictionOperators ops, const Bounds& bounds, double r,
                                 bool auto_raise_r = false);

/// The equality offset d for the current state and wave preview.
Vector compute_offset(const CondensedProblem& problem, const Vector& x_k, const Vector& W_k);

/// xi = [u; p(u); v(u)] for the given state, preview and input sequence.
Vector lift_inputs(const CondensedProblem& problem, const Vector& x_k, const Vector& W_k,
                   const Vector& u);

/// 1/2 xi^T H xi + f^T xi.
[[nodiscard]] double condensed_objective(const CondensedProblem& problem, const Vector& xi);

/// Input-only QP:  min 1/2 u^T Hr u + fr^T u  s.t.  Gineq u <= hineq,
/// u_lower <= u <= u_upper.  Gineq stacks [Cup; -Cup; Cuv; -Cuv].
struct ReducedQp {
    Matrix Hr;
    Vector fr;
    Matrix Gineq;
    Vector hineq;
    Vector u_lower;
    Vector u_upper;

    [[nodiscard]] double objective(const Vector& u) const;
};

ReducedQp eliminate_to_reduced(const CondensedProblem& problem, const Vector& x_k,
                               const Vector& W_k);

}  // namespace wecmpc
