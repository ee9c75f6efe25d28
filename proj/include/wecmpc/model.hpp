#pragma once

#include "wecmpc/linalg.hpp"

#include <optional>
#include <vector>

namespace wecmpc {

/// Single-input LTI plant  dx/dt = A x + B (u + w)  with position and
/// velocity output rows.
struct ContinuousPlant {
    Matrix A;
    Vector B;
    RowVector Cp;
    RowVector Cv;

    [[nodiscard]] Index states() const noexcept { return A.rows(); }

    /// Throws InvalidModelError on inconsistent dimensions or non-finite data.
    void validate() const;
};

/// Zero-order-hold discretization  x+ = A x + B (u + w)  at period T.
struct DiscretePlant {
    Matrix A;
    Vector B;
    RowVector Cp;
    RowVector Cv;
    double T = 0.0;

    [[nodiscard]] Index states() const noexcept { return A.rows(); }
};

/// Exact discretization through the exponential of the augmented matrix
/// [[A, B], [0, 0]] * T (scaling and squaring with a Pade approximant).
DiscretePlant zoh_discretize(const ContinuousPlant& plant, double T);

/// Positive-real radiation filter  gain * a * s / (s + a)^2  with a = -pole,
/// acting on velocity; adds two states to the oscillator.
struct RadiationLag {
    double gain = 0.0;
    double pole = -1.0;
};

/// Synthetic passive single-DoF absorber: mass-spring-damper with an optional
/// radiation filter. States are [p, v] or [p, v, r1, r2].
ContinuousPlant make_benchmark_plant(double mass, double stiffness, double damping,
                                     std::optional<RadiationLag> radiation = std::nullopt);

/// Largest real part over the eigenvalues of A.
[[nodiscard]] double spectral_abscissa(const Matrix& a);

[[nodiscard]] bool is_internally_stable(const ContinuousPlant& plant);

/// Re[Cv (jw I - A)^-1 B] on the given frequencies.
[[nodiscard]] std::vector<double> velocity_response_real_part(const ContinuousPlant& plant,
                                                              const std::vector<double>& omegas);

/// Minimum of velocity_response_real_part over the grid; >= 0 means the
/// force-to-velocity map is passive on that grid.
[[nodiscard]] double passivity_margin(const ContinuousPlant& plant,
                                      const std::vector<double>& omegas);

/// `count` logarithmically spaced points on [lo, hi].
[[nodiscard]] std::vector<double> log_frequency_grid(double lo, double hi, int count);

}  // namespace wecmpc
