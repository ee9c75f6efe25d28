#include "instances.hpp"

#include <Eigen/LU>

#include <limits>
#include <vector>

namespace wecmpc::testing {

double uniform(std::mt19937_64& rng, double lo, double hi) {
    return lo + (hi - lo) * static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

Vector uniform_vector(std::mt19937_64& rng, Index n, double lo, double hi) {
    Vector v(n);
    for (Index i = 0; i < n; ++i) {
        v[i] = uniform(rng, lo, hi);
    }
    return v;
}

Instance random_instance(std::mt19937_64& rng, Index N, const InstanceOptions& opts) {
    for (int attempt = 0; attempt < 1000; ++attempt) {
        Instance inst;
        std::optional<RadiationLag> rad;
        if (opts.radiation) {
            rad = RadiationLag{uniform(rng, 0.5, 3.0), uniform(rng, -4.0, -1.0)};
        }
        inst.plant = make_benchmark_plant(uniform(rng, 1.0, 3.0), uniform(rng, 20.0, 80.0),
                                          uniform(rng, 0.5, 2.0), rad);
        inst.model = zoh_discretize(inst.plant, uniform(rng, 0.05, 0.2));

        Bounds b;
        const double s = opts.loose ? 1e4 : opts.bound_scale;
        b.u_upper = s * uniform(rng, 2.0, 10.0);
        b.u_lower = -s * uniform(rng, 2.0, 10.0);
        b.p_upper = s * uniform(rng, 0.3, 1.0);
        b.p_lower = -s * uniform(rng, 0.3, 1.0);
        b.v_upper = s * uniform(rng, 0.5, 3.0);
        b.v_lower = -s * uniform(rng, 0.5, 3.0);

        PredictionOperators ops = build_prediction(inst.model, N);
        const double lmin = min_symmetric_eigenvalue(ops.Cuv + ops.Cuv.transpose());
        const double r = std::max(0.0, -lmin) + uniform(rng, 0.05, 1.0);
        inst.problem = build_condensed(std::move(ops), b, r);

        const Index n = inst.plant.states();
        inst.x = uniform_vector(rng, n, -0.2, 0.2);
        inst.W = uniform_vector(rng, N, -8.0, 8.0);

        const QpSolution sol = solve_qp(eliminate_to_reduced(inst.problem, inst.x, inst.W));
        if (sol.status == QpStatus::solved) {
            return inst;
        }
    }
    throw std::runtime_error("random_instance: no feasible instance found");
}

namespace {

struct Row {
    RowVector a;
    double b;  // a u <= b
};

void search(const ReducedQp& qp, const std::vector<Row>& rows, std::vector<int>& chosen,
            std::size_t next, Index max_active, double feas_tol, EnumerationResult& best) {
    const Index N = qp.Hr.rows();
    const auto k = static_cast<Index>(chosen.size());
    Matrix kkt = Matrix::Zero(N + k, N + k);
    Vector rhs(N + k);
    kkt.topLeftCorner(N, N) = qp.Hr;
    rhs.head(N) = -qp.fr;
    for (Index i = 0; i < k; ++i) {
        const Row& r = rows[static_cast<std::size_t>(chosen[static_cast<std::size_t>(i)])];
        kkt.block(N + i, 0, 1, N) = r.a;
        kkt.block(0, N + i, N, 1) = r.a.transpose();
        rhs[N + i] = r.b;
    }
    ++best.candidates;
    Eigen::FullPivLU<Matrix> lu(kkt);
    if (lu.isInvertible()) {
        const Vector u = lu.solve(rhs).head(N);
        bool feasible = true;
        for (const Row& r : rows) {
            if (r.a.dot(u) > r.b + feas_tol * (1.0 + std::abs(r.b))) {
                feasible = false;
                break;
            }
        }
        if (feasible) {
            const double c = qp.objective(u);
            if (!best.found || c < best.cost) {
                best.found = true;
                best.cost = c;
                best.u = u;
            }
        }
    }
    if (k == max_active) {
        return;
    }
    for (std::size_t j = next; j < rows.size(); ++j) {
        chosen.push_back(static_cast<int>(j));
        search(qp, rows, chosen, j + 1, max_active, feas_tol, best);
        chosen.pop_back();
    }
}

}  // namespace

EnumerationResult enumerate_active_sets(const ReducedQp& qp, double feas_tol) {
    const Index N = qp.Hr.rows();
    std::vector<Row> rows;
    for (Index i = 0; i < N; ++i) {
        RowVector e = RowVector::Zero(N);
        e[i] = 1.0;
        rows.push_back({e, qp.u_upper[i]});
        rows.push_back({-e, -qp.u_lower[i]});
    }
    for (Index i = 0; i < qp.Gineq.rows(); ++i) {
        rows.push_back({qp.Gineq.row(i), qp.hineq[i]});
    }
    EnumerationResult best;
    std::vector<int> chosen;
    search(qp, rows, chosen, 0, N, feas_tol, best);
    return best;
}

Vector equality_constrained_minimizer(const CondensedProblem& problem, const Vector& d) {
    const Index nx = problem.H.rows();
    const Index nc = problem.Ceq.rows();
    Matrix kkt = Matrix::Zero(nx + nc, nx + nc);
    kkt.topLeftCorner(nx, nx) = problem.H;
    kkt.topRightCorner(nx, nc) = problem.Ceq.transpose();
    kkt.bottomLeftCorner(nc, nx) = problem.Ceq;
    Vector rhs(nx + nc);
    rhs << -problem.f, -d;
    return Eigen::FullPivLU<Matrix>(kkt).solve(rhs).head(nx);
}

SolverState equilibrium_state(const CondensedProblem& problem, const SolverGains& gains,
                              const Vector& xi, const Vector& lambda, const Vector& d) {
    const Matrix& C = problem.Ceq;
    const Vector rhs = C * C.transpose() * lambda + C * (problem.H * xi + problem.f) -
                       gains.kp * (C * xi + d);
    return SolverState{xi, rhs / gains.ki};
}

}  // namespace wecmpc::testing
