// pulse.hpp — spectral and temporal representations of a shaped ultrafast pulse.
//
// A SpectralField carries a fixed Gaussian amplitude and a mutable, unwrapped
// spectral phase. Only the phase is ever replaced; the amplitude buffer is shared
// between copies and is never written after construction.

#pragma once

#include <cmath>
#include <complex>
#include <memory>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include "spoo/grid.hpp"

namespace spoo {

struct GaussianSpectrum {
    double e0{0.0};           // peak temporal field of the transform-limited pulse
    double omega0{0.0};       // carrier
    double delta_omega{0.0};  // spectral standard deviation, 1/tau0
};

inline double gaussian_amplitude_at(const GaussianSpectrum& g, double omega) {
    const double x = (omega - g.omega0) / g.delta_omega;
    return g.e0 * std::sqrt(1.0 / (2.0 * std::numbers::pi * g.delta_omega * g.delta_omega)) *
           std::exp(-0.5 * x * x);
}

class SpectralField {
public:
    SpectralField(FrequencyGrid grid, GaussianSpectrum params)
        : grid_(grid), params_(params), phase_(grid.size(), 0.0) {
        // e0 = 0 is allowed here (field-free runs); gaussian_amplitude() rejects it.
        if (!(params.e0 >= 0.0) || !std::isfinite(params.e0)) throw std::invalid_argument("spectral field: e0 must be non-negative");
        if (!(params.delta_omega > 0.0)) throw std::invalid_argument("spectral field: delta_omega must be positive");
        if (!(params.omega0 > 0.0)) throw std::invalid_argument("spectral field: omega0 must be positive");
        auto amp = std::make_shared<std::vector<double>>(grid.size());
        for (std::size_t k = 0; k < grid.size(); ++k) (*amp)[k] = gaussian_amplitude_at(params, grid[k]);
        amplitude_ = std::move(amp);
    }

    const FrequencyGrid& grid() const noexcept { return grid_; }
    std::size_t size() const noexcept { return grid_.size(); }
    std::span<const double> amplitude() const noexcept { return *amplitude_; }
    std::span<const double> phase() const noexcept { return phase_; }
    double omega0() const noexcept { return params_.omega0; }
    double delta_omega() const noexcept { return params_.delta_omega; }
    double e0() const noexcept { return params_.e0; }
    const GaussianSpectrum& params() const noexcept { return params_; }

    // Whether two fields share the same amplitude buffer.
    bool shares_amplitude_with(const SpectralField& other) const noexcept {
        return amplitude_ == other.amplitude_;
    }

    SpectralField with_phase(std::span<const double> phase) const {
        if (phase.size() != grid_.size()) throw std::invalid_argument("set_phase: length does not match the frequency grid");
        for (double p : phase) {
            if (!std::isfinite(p)) throw std::invalid_argument("set_phase: phase contains non-finite values");
        }
        SpectralField out = *this;
        out.phase_.assign(phase.begin(), phase.end());
        return out;
    }

    // Same phase, different peak strength. The amplitude is rebuilt from the
    // Gaussian formula so it stays exact for the new e0.
    SpectralField with_strength(double e0) const {
        GaussianSpectrum p = params_;
        p.e0 = e0;
        SpectralField out(grid_, p);
        out.phase_ = phase_;
        return out;
    }

    double max_amplitude() const noexcept { return gaussian_amplitude_at(params_, params_.omega0); }

private:
    FrequencyGrid grid_;
    GaussianSpectrum params_;
    std::shared_ptr<const std::vector<double>> amplitude_;
    std::vector<double> phase_;
};

// Zero-phase field with the Gaussian spectral amplitude.
inline SpectralField gaussian_amplitude(double e0, double omega0, double delta_omega, const FrequencyGrid& grid) {
    if (!(e0 > 0.0)) throw std::invalid_argument("gaussian_amplitude: e0 must be positive");
    if (!(delta_omega > 0.0)) throw std::invalid_argument("gaussian_amplitude: delta_omega must be positive");
    return SpectralField(grid, GaussianSpectrum{e0, omega0, delta_omega});
}

inline SpectralField set_phase(const SpectralField& spectral, std::span<const double> phase) {
    return spectral.with_phase(phase);
}

// Quadratic-plus-linear phase about a reference frequency: offset + phi1 (ω-ωr) + beta0/2 (ω-ωr)².
inline std::vector<double> polynomial_phase(const FrequencyGrid& grid, double omega_ref, double beta0,
                                            double phi1 = 0.0, double offset = 0.0) {
    std::vector<double> out(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const double x = grid[k] - omega_ref;
        out[k] = offset + phi1 * x + 0.5 * beta0 * x * x;
    }
    return out;
}

// Real field samples on the nodes of a time grid.
struct TemporalField {
    TimeGrid grid;
    std::vector<double> values;
};

// Field samples driving the propagator: two Gauss–Legendre nodes per cell,
// t_j + (1/2 ∓ √3/6)·dt. Both arrays have grid.n_cells() entries.
struct StepField {
    TimeGrid grid;
    std::vector<double> early;
    std::vector<double> late;

    static constexpr double kNodeOffset = 0.28867513459481288225;  // √3/6

    double early_time(std::size_t j) const noexcept { return grid.midpoint(j) - kNodeOffset * grid.dt(); }
    double late_time(std::size_t j) const noexcept { return grid.midpoint(j) + kNodeOffset * grid.dt(); }

    // Field of the time-mirrored pulse ℰ(-t) on a window symmetric about zero.
    StepField time_reversed() const {
        StepField out{grid, std::vector<double>(late.rbegin(), late.rend()),
                      std::vector<double>(early.rbegin(), early.rend())};
        return out;
    }
};

// Closed-form field of a Gaussian pulse with quadratic spectral phase beta0/2 (ω-ω0)².
struct ChirpedPulseParams {
    double e0{0.0};
    double tau0{0.0};
    double beta0{0.0};
    double omega0{0.0};

    double beta() const noexcept { return beta0 / (tau0 * tau0 * tau0 * tau0 + beta0 * beta0); }
    double tau() const noexcept {
        const double r = beta0 / (tau0 * tau0);
        return tau0 * std::sqrt(1.0 + r * r);
    }
    // sqrt(τ0²/(τ0² - iβ0)) = f·exp(-iφ), principal branch.
    double f() const noexcept {
        const double r = beta0 / (tau0 * tau0);
        return std::pow(1.0 + r * r, -0.25);
    }
    double varphi() const noexcept { return 0.5 * std::atan2(-beta0, tau0 * tau0); }

    double operator()(double t) const noexcept {
        const double T = tau();
        return e0 * f() * std::exp(-t * t / (2.0 * T * T)) * std::cos((0.5 * beta() * t + omega0) * t + varphi());
    }
};

inline TemporalField chirped_field(const ChirpedPulseParams& params, const TimeGrid& tgrid) {
    if (!(params.tau0 > 0.0)) throw std::invalid_argument("chirped_field: tau0 must be positive");
    TemporalField out{tgrid, std::vector<double>(tgrid.size())};
    for (std::size_t j = 0; j < tgrid.size(); ++j) out.values[j] = params(tgrid[j]);
    return out;
}

}  // namespace spoo
