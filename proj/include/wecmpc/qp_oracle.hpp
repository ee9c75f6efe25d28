#pragma once

#include "wecmpc/condensation.hpp"
#include "wecmpc/linalg.hpp"

#include <string>

namespace wecmpc {

struct QpOptions {
    double tol = 1e-9;
    int max_iter = 50000;
    double rho = 0.1;
    double sigma = 1e-6;
    double alpha = 1.6;
    bool adaptive_rho = true;
    bool polish = true;
    int check_interval = 25;
};

enum class QpStatus { solved, max_iterations, primal_infeasible };

std::string to_string(QpStatus status);

/// Solution of the reduced QP. Duals follow the row order of
/// A = [I; Gineq]: positive entries push against an upper bound, negative
/// ones against a lower bound.
struct QpSolution {
    QpStatus status = QpStatus::max_iterations;
    Vector u_opt;
    double cost = 0.0;
    Vector bound_duals;  ///< N, for u_lower <= u <= u_upper
    Vector ineq_duals;   ///< rows of Gineq, >= 0
    int iterations = 0;
    double primal_residual = 0.0;  ///< max constraint violation
    double dual_residual = 0.0;    ///< ||Hr u + fr + A^T y||_inf
    bool polished = false;
    /// On primal_infeasible: y with A^T y ~ 0 and a negative support value.
    Vector infeasibility_certificate;
};

/// Dense ADMM with over-relaxation, adaptive penalty and active-set
/// polishing. Deterministic for fixed inputs.
QpSolution solve_qp(const ReducedQp& qp, const QpOptions& options = {});

/// Multipliers of Ceq xi + d = 0 implied by a reduced solution, assuming the
/// Gineq layout produced by eliminate_to_reduced.
Vector equality_multipliers(const QpSolution& solution);

struct IpmCostModel {
    double n_i = 10.0;      ///< interior-point iterations
    double T_p = 2.0;       ///< prediction window (s)
    double OP = 1e11;       ///< hardware rate (FLOP/s)
    double kappa = 1.0;     ///< condition number surrogate
    double epsilon = 1e-6;  ///< target accuracy

    void validate() const;
};

/// Period reported alongside the formula value for the reference setup.
inline constexpr double kReportedIpmMinPeriod = 0.017;

/// n_i * 5 N^3 / OP.
double ipm_delay(const IpmCostModel& model, Index N);

/// (50 n_i T_p^3 / OP)^(1/4), from T = 10 * delay with N = T_p / T.
double ipm_min_period(const IpmCostModel& model);

}  // namespace wecmpc
