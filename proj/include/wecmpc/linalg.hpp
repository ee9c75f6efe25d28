#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>

namespace wecmpc {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

struct SpectralNormOptions {
    /// Stop when ||A^T A y - theta y|| <= tolerance * theta for the top Ritz pair.
    double tolerance = 1e-10;
    int max_iterations = 10000;
};

struct SpectralNormEstimate {
    double value = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// Largest singular value of a linear map given only through products with
/// the map and its transpose. Krylov-accelerated power iteration (Lanczos
/// with full reorthogonalization) on A^T A from a deterministic start vector.
SpectralNormEstimate spectral_norm(const std::function<Vector(const Vector&)>& apply,
                                   const std::function<Vector(const Vector&)>& apply_transpose,
                                   Index cols, const SpectralNormOptions& options = {});

SpectralNormEstimate spectral_norm(const Matrix& a, const SpectralNormOptions& options = {});

/// Componentwise clamp of `x` into [lower, upper].
[[nodiscard]] Vector project_box(const Vector& x, const Vector& lower, const Vector& upper);

[[nodiscard]] double min_symmetric_eigenvalue(const Matrix& symmetric);

[[nodiscard]] bool all_finite(const Matrix& m);

/// Counts scalar multiplications performed by instrumented kernels.
struct FlopCounter {
    std::uint64_t multiplications = 0;

    void add(std::uint64_t n) noexcept { multiplications += n; }
};

}  // namespace wecmpc
