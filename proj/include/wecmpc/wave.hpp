#pragma once

#include "wecmpc/linalg.hpp"

#include <cstdint>
#include <vector>

namespace wecmpc {

/// Irregular sea state description.
struct WaveSpec {
    double significant_height = 0.0625;  ///< H_w (m)
    double typical_period = 1.412;       ///< T_w (s), peak period of the spectrum
    double peak_enhancement = 3.3;       ///< JONSWAP gamma
    int n_harmonics = 256;
    double omega_min = 1.5;  ///< rad/s
    double omega_max = 12.0;
    double excitation_gain = 300.0;  ///< N per m of surface elevation
    std::uint64_t seed = 0;

    [[nodiscard]] double peak_frequency() const;

    /// Throws InvalidParameterError when a field is out of range.
    void validate() const;
};

/// JONSWAP elevation spectrum with the Phillips constant rescaled so that
/// 16 * integral of S equals H_w^2.
class JonswapSpectrum {
public:
    explicit JonswapSpectrum(const WaveSpec& spec);

    /// S(omega) in m^2 s; zero for omega <= 0.
    [[nodiscard]] double density(double omega) const;

    [[nodiscard]] double alpha() const noexcept { return alpha_; }
    [[nodiscard]] double peak_frequency() const noexcept { return omega_p_; }

private:
    [[nodiscard]] double shape(double omega) const;

    double omega_p_;
    double gamma_;
    double alpha_ = 1.0;
};

/// Convenience form; recomputes the normalization on every call.
[[nodiscard]] double jonswap_density(double omega, const WaveSpec& spec);

/// w(t) = gain * sum_j a_j cos(omega_j t + phi_j).
class WaveForceSignal {
public:
    WaveForceSignal() = default;
    WaveForceSignal(double gain, std::vector<double> amplitudes, std::vector<double> omegas,
                    std::vector<double> phases, std::uint64_t seed = 0);

    /// Identically zero force.
    static WaveForceSignal zero();
    static WaveForceSignal monochromatic(double amplitude, double omega, double phase = 0.0);

    [[nodiscard]] double operator()(double t) const;

    /// Samples w(t0 + k * dt) for k = 0 .. count-1.
    [[nodiscard]] Vector sample(double t0, double dt, Index count) const;

    /// gain^2 * sum a_j^2 / 2, the stationary variance of the signal.
    [[nodiscard]] double variance() const;

    [[nodiscard]] const std::vector<double>& amplitudes() const noexcept { return amplitudes_; }
    [[nodiscard]] const std::vector<double>& frequencies() const noexcept { return omegas_; }
    [[nodiscard]] const std::vector<double>& phases() const noexcept { return phases_; }
    [[nodiscard]] double gain() const noexcept { return gain_; }
    [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }

private:
    double gain_ = 0.0;
    std::vector<double> amplitudes_;
    std::vector<double> omegas_;
    std::vector<double> phases_;
    std::uint64_t seed_ = 0;
};

/// Random-phase superposition on the midpoint grid of [omega_min, omega_max]
/// with a_j = sqrt(2 S(omega_j) d_omega) and phases uniform on [0, 2 pi).
WaveForceSignal synthesize_wave_force(const WaveSpec& spec);

}  // namespace wecmpc
