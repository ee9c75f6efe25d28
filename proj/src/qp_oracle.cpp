#include "wecmpc/qp_oracle.hpp"

#include "wecmpc/errors.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace wecmpc {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double inf_norm(const Vector& v) {
    return v.size() == 0 ? 0.0 : v.lpNorm<Eigen::Infinity>();
}

struct Stacked {
    Matrix A;
    Vector l;
    Vector u;
};

Stacked stack_constraints(const ReducedQp& qp) {
    const Index N = qp.Hr.rows();
    const Index m = qp.Gineq.rows();
    Stacked s;
    s.A.resize(N + m, N);
    s.A << Matrix::Identity(N, N), qp.Gineq;
    s.l.resize(N + m);
    s.u.resize(N + m);
    s.l << qp.u_lower, Vector::Constant(m, -kInf);
    s.u << qp.u_upper, qp.hineq;
    return s;
}

double violation(const Vector& ax, const Stacked& s) {
    double worst = 0.0;
    for (Index i = 0; i < ax.size(); ++i) {
        worst = std::max({worst, s.l[i] - ax[i], ax[i] - s.u[i]});
    }
    return worst;
}

// Equality-constrained solve on a guessed active set. Returns false when the
// guess fails primal feasibility, dual sign or residual checks.
bool polish(const ReducedQp& qp, const Stacked& s, const Vector& z,
            const Vector& y, double tol, Vector& x_out, Vector& y_out) {
    const Index N = qp.Hr.rows();
    const Index rows = s.A.rows();
    std::vector<Index> active;
    std::vector<double> rhs;
    for (Index i = 0; i < rows; ++i) {
        if (std::isfinite(s.l[i]) && z[i] - s.l[i] < -y[i]) {
            active.push_back(i);
            rhs.push_back(s.l[i]);
        } else if (std::isfinite(s.u[i]) && s.u[i] - z[i] < y[i]) {
            active.push_back(i);
            rhs.push_back(s.u[i]);
        }
    }
    const auto na = static_cast<Index>(active.size());
    Matrix kkt = Matrix::Zero(N + na, N + na);
    Vector b(N + na);
    kkt.topLeftCorner(N, N) = qp.Hr;
    b.head(N) = -qp.fr;
    for (Index k = 0; k < na; ++k) {
        kkt.block(N + k, 0, 1, N) = s.A.row(active[static_cast<std::size_t>(k)]);
        kkt.block(0, N + k, N, 1) = s.A.row(active[static_cast<std::size_t>(k)]).transpose();
        b[N + k] = rhs[static_cast<std::size_t>(k)];
    }
    const Vector sol = kkt.completeOrthogonalDecomposition().solve(b);
    if (!sol.allFinite()) {
        return false;
    }

    x_out = sol.head(N);
    y_out = Vector::Zero(rows);
    for (Index k = 0; k < na; ++k) {
        y_out[active[static_cast<std::size_t>(k)]] = sol[N + k];
    }
    for (Index k = 0; k < na; ++k) {
        const Index i = active[static_cast<std::size_t>(k)];
        const bool at_upper = rhs[static_cast<std::size_t>(k)] == s.u[i];
        if ((at_upper && y_out[i] < -tol) || (!at_upper && y_out[i] > tol)) {
            return false;
        }
    }
    const Vector ax = s.A * x_out;
    if (violation(ax, s) > tol) {
        return false;
    }
    const Vector dual = qp.Hr * x_out + qp.fr + s.A.transpose() * y_out;
    return inf_norm(dual) <= tol;
}

void validate_qp(const ReducedQp& qp, const QpOptions& o) {
    const Index N = qp.Hr.rows();
    if (qp.Hr.cols() != N || qp.fr.size() != N || qp.Gineq.cols() != N ||
        qp.hineq.size() != qp.Gineq.rows() || qp.u_lower.size() != N ||
        qp.u_upper.size() != N) {
        throw InvalidParameterError("solve_qp: inconsistent problem dimensions");
    }
    if (!(o.tol > 0.0) || o.max_iter < 1 || !(o.rho > 0.0) || !(o.sigma > 0.0) ||
        !(o.alpha > 0.0 && o.alpha < 2.0) || o.check_interval < 1) {
        throw InvalidParameterError("solve_qp: invalid solver options");
    }
    if (!all_finite(qp.Hr) || !all_finite(qp.fr) || !all_finite(qp.Gineq) ||
        qp.hineq.hasNaN() || qp.u_lower.hasNaN() || qp.u_upper.hasNaN()) {
        throw NumericError("solve_qp: non-finite problem data");
    }
}

}  // namespace

std::string to_string(QpStatus status) {
    switch (status) {
        case QpStatus::solved:
            return "solved";
        case QpStatus::max_iterations:
            return "max_iterations";
        case QpStatus::primal_infeasible:
            return "primal_infeasible";
    }
    return "unknown";
}

QpSolution solve_qp(const ReducedQp& qp, const QpOptions& o) {
    validate_qp(qp, o);
    const Index N = qp.Hr.rows();
    const Stacked s = stack_constraints(qp);
    const Index rows = s.A.rows();
    const Matrix AtA = s.A.transpose() * s.A;

    double rho = o.rho;
    Eigen::LLT<Matrix> kkt;
    auto factor = [&] {
        kkt.compute(qp.Hr + o.sigma * Matrix::Identity(N, N) + rho * AtA);
        if (kkt.info() != Eigen::Success) {
            throw NumericError("solve_qp: Hessian is not positive semidefinite");
        }
    };
    factor();

    Vector x = Vector::Zero(N);
    Vector z = project_box(Vector::Zero(rows), s.l, s.u);
    Vector y = Vector::Zero(rows);
    Vector y_prev = y;

    QpSolution out;
    auto finish = [&](const Vector& x_raw, const Vector& ys, QpStatus status, int it, bool polished) {
        const Vector xs = project_box(x_raw, qp.u_lower, qp.u_upper);
        out.status = status;
        out.u_opt = xs;
        out.cost = qp.objective(xs);
        out.bound_duals = ys.head(N);
        out.ineq_duals = ys.tail(rows - N);
        out.iterations = it;
        out.primal_residual = violation(s.A * xs, s);
        out.dual_residual = inf_norm(qp.Hr * xs + qp.fr + s.A.transpose() * ys);
        out.polished = polished;
        return out;
    };

    for (int it = 1; it <= o.max_iter; ++it) {
        y_prev = y;
        const Vector x_tilde = kkt.solve(o.sigma * x - qp.fr + s.A.transpose() * (rho * z - y));
        const Vector z_tilde = s.A * x_tilde;
        x = o.alpha * x_tilde + (1.0 - o.alpha) * x;
        const Vector z_relaxed = o.alpha * z_tilde + (1.0 - o.alpha) * z;
        const Vector z_next = project_box(z_relaxed + y / rho, s.l, s.u);
        y += rho * (z_relaxed - z_next);
        z = z_next;

        if (it % o.check_interval != 0 && it != o.max_iter) {
            continue;
        }
        const Vector ax = s.A * x;
        const Vector hx = qp.Hr * x;
        const Vector aty = s.A.transpose() * y;
        const double r_prim = inf_norm(ax - z);
        const double r_dual = inf_norm(hx + qp.fr + aty);
        const double scale_prim = std::max(inf_norm(ax), inf_norm(z));
        const double scale_dual = std::max({inf_norm(hx), inf_norm(aty), inf_norm(qp.fr)});

        // Primal infeasibility certificate on the dual increment.
        const Vector dy = y - y_prev;
        const double dy_norm = inf_norm(dy);
        if (dy_norm > 1e-14) {
            double support = 0.0;
            bool bounded = true;
            for (Index i = 0; i < rows; ++i) {
                if (dy[i] > 1e-14 * dy_norm) {
                    if (!std::isfinite(s.u[i])) {
                        bounded = false;
                        break;
                    }
                    support += s.u[i] * dy[i];
                } else if (dy[i] < -1e-14 * dy_norm) {
                    if (!std::isfinite(s.l[i])) {
                        bounded = false;
                        break;
                    }
                    support += s.l[i] * dy[i];
                }
            }
            const double eps_inf = 1e-6 * dy_norm;
            if (bounded && inf_norm(s.A.transpose() * dy) <= eps_inf && support < -eps_inf) {
                out.infeasibility_certificate = dy / dy_norm;
                return finish(x, y, QpStatus::primal_infeasible, it, false);
            }
        }

        const bool coarse = r_prim <= 1e-4 * (1.0 + scale_prim) && r_dual <= 1e-4 * (1.0 + scale_dual);
        if (o.polish && coarse) {
            Vector xp, yp;
            if (polish(qp, s, z, y, o.tol, xp, yp)) {
                return finish(xp, yp, QpStatus::solved, it, true);
            }
        }
        if (r_prim <= o.tol * (1.0 + scale_prim) && r_dual <= o.tol * (1.0 + scale_dual)) {
            return finish(x, y, QpStatus::solved, it, false);
        }

        if (o.adaptive_rho && r_prim > 0.0 && r_dual > 0.0) {
            const double ratio = (r_prim / std::max(scale_prim, 1e-12)) /
                                 (r_dual / std::max(scale_dual, 1e-12));
            const double rho_new = std::clamp(rho * std::sqrt(ratio), 1e-6, 1e6);
            if (rho_new > 5.0 * rho || rho_new < 0.2 * rho) {
                rho = rho_new;
                factor();
            }
        }
    }
    return finish(x, y, QpStatus::max_iterations, o.max_iter, false);
}

Vector equality_multipliers(const QpSolution& solution) {
    const Index N = solution.u_opt.size();
    if (solution.ineq_duals.size() != 4 * N) {
        throw InvalidParameterError("equality_multipliers: expected 4N inequality duals");
    }
    const auto& mu = solution.ineq_duals;
    const Vector nu_p = mu.segment(0, N) - mu.segment(N, N);
    const Vector nu_v = mu.segment(2 * N, N) - mu.segment(3 * N, N);
    Vector lambda(2 * N);
    lambda.head(N) = -nu_p;
    lambda.tail(N) = -solution.u_opt - nu_v;
    return lambda;
}

void IpmCostModel::validate() const {
    if (!(n_i > 0.0) || !(T_p > 0.0) || !(OP > 0.0) || !(kappa > 0.0) || !(epsilon > 0.0)) {
        throw InvalidParameterError("ipm cost model: all fields must be positive");
    }
}

double ipm_delay(const IpmCostModel& model, Index N) {
    model.validate();
    if (N < 1) {
        throw InvalidParameterError("ipm_delay: horizon must be >= 1");
    }
    const auto n = static_cast<double>(N);
    return model.n_i * 5.0 * n * n * n / model.OP;
}

double ipm_min_period(const IpmCostModel& model) {
    model.validate();
    return std::pow(50.0 * model.n_i * model.T_p * model.T_p * model.T_p / model.OP, 0.25);
}

}  // namespace wecmpc
