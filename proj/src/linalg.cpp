#include "wecmpc/linalg.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <vector>

namespace wecmpc {

SpectralNormEstimate spectral_norm(const std::function<Vector(const Vector&)>& apply,
                                   const std::function<Vector(const Vector&)>& apply_transpose,
                                   Index cols, const SpectralNormOptions& options) {
    SpectralNormEstimate out;
    if (cols == 0) {
        out.converged = true;
        return out;
    }
    // Deterministic, non-symmetric start so that no singular direction is
    // orthogonal to it by construction.
    Vector q(cols);
    for (Index i = 0; i < cols; ++i) {
        q[i] = 1.0 + 0.5 * std::sin(1.0 + 0.7 * static_cast<double>(i));
    }
    q.normalize();

    // Lanczos on A^T A with full reorthogonalization.
    const Index max_steps = std::min<Index>(cols, options.max_iterations);
    Matrix basis(cols, std::min<Index>(max_steps, 64));
    std::vector<double> alpha;
    std::vector<double> beta;
    double theta = 0.0;
    for (Index j = 0; j < max_steps; ++j) {
        if (j >= basis.cols()) {
            basis.conservativeResize(Eigen::NoChange, std::min<Index>(max_steps, 2 * basis.cols()));
        }
        basis.col(j) = q;
        Vector w = apply_transpose(apply(q));
        const double a = q.dot(w);
        alpha.push_back(a);
        for (int pass = 0; pass < 2; ++pass) {
            const auto Q = basis.leftCols(j + 1);
            w -= Q * (Q.transpose() * w);
        }
        const double b = w.norm();
        out.iterations = static_cast<int>(j + 1);

        const auto k = static_cast<Index>(alpha.size());
        const bool check = k <= 16 || k % 8 == 0 || j + 1 == max_steps || b <= 1e-300;
        if (!check) {
            beta.push_back(b);
            q = w / b;
            continue;
        }
        Eigen::SelfAdjointEigenSolver<Matrix> tri;
        Vector diag = Eigen::Map<const Vector>(alpha.data(), k);
        Vector sub = k > 1 ? Vector(Eigen::Map<const Vector>(beta.data(), k - 1)) : Vector(0);
        tri.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
        theta = tri.eigenvalues()[k - 1];
        const double residual = b * std::abs(tri.eigenvectors()(k - 1, k - 1));
        if (residual <= options.tolerance * std::abs(theta) || b <= 1e-300) {
            out.converged = true;
            break;
        }
        beta.push_back(b);
        q = w / b;
    }
    if (out.iterations == cols) {
        out.converged = true;  // full Krylov space: Ritz values are exact
    }
    out.value = std::sqrt(std::max(theta, 0.0));
    return out;
}

SpectralNormEstimate spectral_norm(const Matrix& a, const SpectralNormOptions& options) {
    return spectral_norm([&a](const Vector& x) -> Vector { return a * x; },
                         [&a](const Vector& y) -> Vector { return a.transpose() * y; }, a.cols(),
                         options);
}

Vector project_box(const Vector& x, const Vector& lower, const Vector& upper) {
    return x.cwiseMax(lower).cwiseMin(upper);
}

double min_symmetric_eigenvalue(const Matrix& symmetric) {
    if (symmetric.size() == 0) {
        return 0.0;
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(symmetric, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

bool all_finite(const Matrix& m) {
    return m.allFinite();
}

}  // namespace wecmpc
