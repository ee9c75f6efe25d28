#include "wecmpc/wave.hpp"

#include "wecmpc/errors.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace wecmpc {
namespace {

constexpr double kGravity = 9.81;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Composite Simpson rule; n must be even.
template <typename F>
double simpson(F&& f, double a, double b, int n) {
    const double h = (b - a) / n;
    double acc = f(a) + f(b);
    for (int i = 1; i < n; ++i) {
        acc += f(a + i * h) * ((i % 2 == 1) ? 4.0 : 2.0);
    }
    return acc * h / 3.0;
}

}  // namespace

double WaveSpec::peak_frequency() const {
    return kTwoPi / typical_period;
}

void WaveSpec::validate() const {
    if (!(significant_height > 0.0)) {
        throw InvalidParameterError("wave: significant height must be > 0");
    }
    if (!(typical_period > 0.0)) {
        throw InvalidParameterError("wave: typical period must be > 0");
    }
    if (!(peak_enhancement >= 1.0)) {
        throw InvalidParameterError("wave: peak enhancement must be >= 1");
    }
    if (n_harmonics < 1) {
        throw InvalidParameterError("wave: at least one harmonic is required");
    }
    if (!(omega_min > 0.0) || !(omega_min < omega_max)) {
        throw InvalidParameterError("wave: need 0 < omega_min < omega_max");
    }
    if (!std::isfinite(excitation_gain)) {
        throw InvalidParameterError("wave: excitation gain must be finite");
    }
}

JonswapSpectrum::JonswapSpectrum(const WaveSpec& spec)
    : omega_p_(spec.peak_frequency()), gamma_(spec.peak_enhancement) {
    spec.validate();
    // Below wp/4 the exp(-1.25 (wp/w)^4) factor is < 1e-138; above 40 wp the
    // w^-5 tail holds less than 1e-6 of the variance.
    const double total =
        simpson([this](double w) { return shape(w); }, 0.25 * omega_p_, 40.0 * omega_p_, 200000);
    alpha_ = spec.significant_height * spec.significant_height / (16.0 * total);
}

double JonswapSpectrum::shape(double omega) const {
    if (omega <= 0.0) {
        return 0.0;
    }
    const double sigma = omega <= omega_p_ ? 0.07 : 0.09;
    const double ratio = omega_p_ / omega;
    const double dev = (omega - omega_p_) / (sigma * omega_p_);
    const double peak = std::pow(gamma_, std::exp(-0.5 * dev * dev));
    return kGravity * kGravity * std::pow(omega, -5.0) * std::exp(-1.25 * std::pow(ratio, 4)) *
           peak;
}

double JonswapSpectrum::density(double omega) const {
    return alpha_ * shape(omega);
}

double jonswap_density(double omega, const WaveSpec& spec) {
    return JonswapSpectrum(spec).density(omega);
}

WaveForceSignal::WaveForceSignal(double gain, std::vector<double> amplitudes,
                                 std::vector<double> omegas, std::vector<double> phases,
                                 std::uint64_t seed)
    : gain_(gain),
      amplitudes_(std::move(amplitudes)),
      omegas_(std::move(omegas)),
      phases_(std::move(phases)),
      seed_(seed) {
    if (amplitudes_.size() != omegas_.size() || amplitudes_.size() != phases_.size()) {
        throw InvalidParameterError("wave force: component vectors must have equal length");
    }
}

WaveForceSignal WaveForceSignal::zero() {
    return WaveForceSignal(0.0, {}, {}, {});
}

WaveForceSignal WaveForceSignal::monochromatic(double amplitude, double omega, double phase) {
    return WaveForceSignal(1.0, {amplitude}, {omega}, {phase});
}

double WaveForceSignal::operator()(double t) const {
    double acc = 0.0;
    for (std::size_t j = 0; j < amplitudes_.size(); ++j) {
        acc += amplitudes_[j] * std::cos(omegas_[j] * t + phases_[j]);
    }
    return gain_ * acc;
}

Vector WaveForceSignal::sample(double t0, double dt, Index count) const {
    Vector out(count);
    for (Index k = 0; k < count; ++k) {
        out[k] = (*this)(t0 + dt * static_cast<double>(k));
    }
    return out;
}

double WaveForceSignal::variance() const {
    double acc = 0.0;
    for (double a : amplitudes_) {
        acc += a * a;
    }
    return gain_ * gain_ * acc / 2.0;
}

WaveForceSignal synthesize_wave_force(const WaveSpec& spec) {
    const JonswapSpectrum spectrum(spec);
    const auto n = static_cast<std::size_t>(spec.n_harmonics);
    const double dw = (spec.omega_max - spec.omega_min) / static_cast<double>(n);

    // Phases from raw 53-bit draws so the sequence is identical across
    // standard library implementations.
    std::mt19937_64 rng(spec.seed);
    std::vector<double> amps(n), omegas(n), phases(n);
    for (std::size_t j = 0; j < n; ++j) {
        omegas[j] = spec.omega_min + (static_cast<double>(j) + 0.5) * dw;
        amps[j] = std::sqrt(2.0 * spectrum.density(omegas[j]) * dw);
        phases[j] = kTwoPi * static_cast<double>(rng() >> 11) * 0x1.0p-53;
    }
    return WaveForceSignal(spec.excitation_gain, std::move(amps), std::move(omegas),
                           std::move(phases), spec.seed);
}

}  // namespace wecmpc
