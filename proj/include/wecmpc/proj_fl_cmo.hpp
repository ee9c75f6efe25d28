#pragma once

#include "wecmpc/condensation.hpp"
#include "wecmpc/linalg.hpp"

#include <Eigen/Cholesky>

namespace wecmpc {

struct GainDesignOptions {
    /// tau = step_safety / ||T M T^-1||_2, in (0, 1).
    double step_safety = 0.99;
    SpectralNormOptions power{};
};

/// Precomputed data of the projected feedback-linearization
/// controlled-multipliers iteration
///
///   xi+ = P(G1 xi + G2 z + g + G3 d~),   z+ = z + G4 xi + d~,   d~ = Dtil [x_k; W_k]
///
/// where P clamps to [lb, ub]. Immutable after design; share freely.
struct SolverGains {
    Matrix G1;    ///< 3N x 3N
    Matrix G2;    ///< 3N x 2N
    Matrix G3;    ///< 3N x 2N
    Matrix G4;    ///< 2N x 3N, equals tau * Ceq
    Vector g;     ///< 3N
    Matrix Dtil;  ///< 2N x (n + N), equals tau * Dmat
    double kp = 0.0;
    double ki = 0.0;
    double tau = 0.0;
    Vector lb;
    Vector ub;

    /// ||Cperp H Cperp^T||_2, the fastest mode of the zero dynamics.
    double zero_dynamics_norm = 0.0;
    /// ||T M T^-1||_2 of the transformed error dynamics.
    double transformed_norm = 0.0;
    /// ||[[G1, G2], [G4, I]]||_2: Euclidean Lipschitz constant of one step.
    double rho_bound = 0.0;
    /// ||I - tau T M T^-1||_2; the same map as rho_bound in other coordinates.
    double rho_transformed = 0.0;
    /// Spectral radius of the linear part of the step (asymptotic rate).
    double asymptotic_rate = 0.0;
    /// Eigenvalues of Cperp H Cperp^T (ascending).
    Vector zero_dynamics_spectrum;

    Matrix Cperp;               ///< N x 3N, orthonormal rows spanning null(Ceq)
    Eigen::LLT<Matrix> gram;    ///< Cholesky factor of Ceq Ceq^T
    Index N = 0;
    Index n = 0;
};

/// Rows form an orthonormal basis of the null space of `ceq`'s rows.
/// Throws RankError when `ceq` does not have full row rank.
Matrix orthonormal_complement(const Matrix& ceq);

/// k_p = 2 s, k_i = s^2 with s = ||Cperp H Cperp^T||_2, tau from the
/// transformed dynamics, then the G matrices. Throws DesignError when the
/// linear part of the step is not Schur stable.
SolverGains design_gains(const CondensedProblem& problem, const GainDesignOptions& options = {});

struct SolverState {
    Vector xi;  ///< [u; p; v]
    Vector z;   ///< integral of the equality residual
};

/// Cold start: xi = P(0), z = 0.
SolverState initial_state(const SolverGains& gains);

/// d~ = Dtil [x_k; W_k].
Vector scaled_offset(const SolverGains& gains, const Vector& x_k, const Vector& W_k,
                     FlopCounter* counter = nullptr);

/// One iteration. The G4 product uses the identity blocks of Ceq, so only the
/// input columns cost multiplications.
SolverState step(const SolverGains& gains, const SolverState& state, const Vector& d_til,
                 FlopCounter* counter = nullptr);

/// lambda = (Ceq Ceq^T)^-1 (-Ceq (H xi + f) + k_p (Ceq xi + d) + k_i z).
Vector recover_multipliers(const CondensedProblem& problem, const SolverGains& gains,
                           const Vector& xi, const Vector& z, const Vector& d);

struct KktReport {
    /// ||xi - P(xi - grad f(xi) - Ceq^T lambda)||
    double stationarity_residual = 0.0;
    /// ||Ceq xi + d||
    double primal_residual = 0.0;
    Vector multipliers;
};

KktReport kkt_report(const CondensedProblem& problem, const SolverGains& gains, const Vector& xi,
                     const Vector& z, const Vector& d);

/// ||step(s) - s|| over the stacked (xi, z) vector.
double fixed_point_residual(const SolverGains& gains, const SolverState& state,
                            const Vector& d_til);

struct ConvergenceResult {
    SolverState state;
    int iterations = 0;
    bool converged = false;
    double last_increment = 0.0;
    KktReport kkt;
};

/// Iterates `step` until the increment drops to `tol` or `max_iter` steps
/// have run. Non-convergence is reported through `converged`, not thrown.
ConvergenceResult solve_to_convergence(const SolverGains& gains, const CondensedProblem& problem,
                                       const Vector& x_k, const Vector& W_k,
                                       const SolverState& init, double tol, int max_iter);

}  // namespace wecmpc
