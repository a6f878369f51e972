#pragma once

#include <cmath>
#include <utility>

#include "spoo/grid.hpp"
#include "spoo/pulse.hpp"
#include "spoo/system.hpp"
#include "spoo/units.hpp"

namespace testing_support {

inline constexpr double kTau0Fs = 10.0;

inline double tau0() { return spoo::units::to_atomic_time(kTau0Fs); }
inline double delta_omega() { return 1.0 / tau0(); }
inline double omega_two_level() { return spoo::units::wavenumber_to_angular_frequency(12500.0); }

struct Setup {
    spoo::QuantumSystem system;
    spoo::TimeGrid tgrid;
    spoo::FrequencyGrid fgrid;
    spoo::SpectralField field;
};

// Resonant two-level problem on a symmetric window.
inline Setup two_level(double e0, double duration_fs = 1000.0, std::size_t n_steps = 65536, std::size_t n_freq = 2048,
                       double halfwidth = 6.0) {
    const double w0 = omega_two_level();
    auto [t, w] = spoo::make_grids(spoo::units::to_atomic_time(duration_fs), n_steps, w0, halfwidth * delta_omega(), n_freq);
    return {spoo::two_level_system(), t, w, spoo::SpectralField(w, spoo::GaussianSpectrum{e0, w0, delta_omega()})};
}

inline Setup rubidium(double e0, std::size_t resonant_level, double duration_fs = 4000.0, std::size_t n_steps = 65536) {
    auto sys = spoo::rubidium_system();
    const double w0 = sys.transition_frequency(0, resonant_level);
    auto [t, w] = spoo::make_grids(spoo::units::to_atomic_time(duration_fs), n_steps, w0, 6.0 * delta_omega(), 2048);
    return {sys, t, w, spoo::SpectralField(w, spoo::GaussianSpectrum{e0, w0, delta_omega()})};
}

// Smooth deterministic test phase: quadratic plus a few slow sinusoids.
inline std::vector<double> wiggly_phase(const spoo::FrequencyGrid& g, double omega0, double beta0_fs2, double wiggle) {
    std::vector<double> out(g.size());
    const double b = spoo::units::fs2_to_atomic(beta0_fs2);
    const double dw = delta_omega();
    for (std::size_t k = 0; k < g.size(); ++k) {
        const double x = (g[k] - omega0) / dw;
        out[k] = 0.5 * b * (g[k] - omega0) * (g[k] - omega0) + wiggle * (std::sin(1.3 * x) + 0.5 * std::cos(0.7 * x + 0.4));
    }
    return out;
}

}  // namespace testing_support
