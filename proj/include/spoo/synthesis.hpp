// synthesis.hpp — temporal field from the spectral representation,
//   ℰ(t) = Re ∫ 𝒜(ω) exp(iφ(ω)) exp(-iωt) dω,
// evaluated as a trapezoid sum over the frequency grid.
//
// The fast path evaluates exactly the same trapezoid sum at all sample times
// with one chirp-z transform; synthesize_direct is the plain O(K·M) loop.

#pragma once

#include <cmath>
#include <complex>
#include <span>
#include <sstream>
#include <vector>

#include "spoo/detail/chirp_z.hpp"
#include "spoo/diagnostics.hpp"
#include "spoo/grid.hpp"
#include "spoo/pulse.hpp"

namespace spoo {

inline constexpr double kEdgeAmplitudeTolerance = 1e-6;

// Uniform set of sampling times t_j = first + j*step, j < count.
struct SampleTimes {
    double first{0.0};
    double step{0.0};
    std::size_t count{0};

    double operator[](std::size_t j) const noexcept { return first + static_cast<double>(j) * step; }

    static SampleTimes nodes(const TimeGrid& g) { return {g.t_start(), g.dt(), g.size()}; }
    static SampleTimes midpoints(const TimeGrid& g) { return {g.t_start() + 0.5 * g.dt(), g.dt(), g.n_cells()}; }
    static SampleTimes early_nodes(const TimeGrid& g) {
        return {g.t_start() + (0.5 - StepField::kNodeOffset) * g.dt(), g.dt(), g.n_cells()};
    }
    static SampleTimes late_nodes(const TimeGrid& g) {
        return {g.t_start() + (0.5 + StepField::kNodeOffset) * g.dt(), g.dt(), g.n_cells()};
    }
};

namespace detail {

inline void check_band_edges(const SpectralField& spectral) {
    const auto amp = spectral.amplitude();
    const double peak = spectral.max_amplitude();
    const double edge = std::max(amp.front(), amp.back());
    if (edge > kEdgeAmplitudeTolerance * peak) {
        std::ostringstream os;
        os << "synthesize: spectral amplitude at the grid edge is " << edge / peak
           << " of peak; truncation error of the frequency integral is not controlled";
        warn(os.str());
    }
}

// a_k = w_k 𝒜_k exp(iφ_k) with trapezoid weights w_k.
inline std::vector<std::complex<double>> weighted_spectrum(const SpectralField& spectral) {
    const auto w = spectral.grid().trapezoid_weights();
    const auto amp = spectral.amplitude();
    const auto ph = spectral.phase();
    std::vector<std::complex<double>> a(spectral.size());
    for (std::size_t k = 0; k < a.size(); ++k) a[k] = std::polar(w[k] * amp[k], ph[k]);
    return a;
}

}  // namespace detail

// Re Σ_k a_k exp(-iω_k t_j) for all sample times.
inline std::vector<double> evaluate_spectral_sum(std::span<const std::complex<double>> a, const FrequencyGrid& grid,
                                                 const SampleTimes& times) {
    const double w0 = grid.omega_min();
    const double dw = grid.d_omega();
    std::vector<std::complex<double>> y(a.size());
    for (std::size_t k = 0; k < a.size(); ++k) {
        y[k] = a[k] * std::polar(1.0, -static_cast<double>(k) * dw * times.first);
    }
    const auto z = detail::chirp_z(y, -dw * times.step, times.count);
    std::vector<double> out(times.count);
    for (std::size_t j = 0; j < times.count; ++j) {
        out[j] = (std::polar(1.0, -w0 * times[j]) * z[j]).real();
    }
    return out;
}

// Adjoint of evaluate_spectral_sum: r_k = Σ_j x_j exp(iω_k t_j).
inline std::vector<std::complex<double>> evaluate_time_sum(std::span<const double> x, const FrequencyGrid& grid,
                                                           const SampleTimes& times) {
    const double w0 = grid.omega_min();
    const double dw = grid.d_omega();
    std::vector<std::complex<double>> y(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) {
        y[j] = x[j] * std::polar(1.0, -w0 * static_cast<double>(j) * times.step);
    }
    const auto z = detail::chirp_z(y, -dw * times.step, grid.size());
    std::vector<std::complex<double>> r(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) r[k] = std::conj(std::polar(1.0, -grid[k] * times.first) * z[k]);
    return r;
}

inline std::vector<double> synthesize_samples(const SpectralField& spectral, const SampleTimes& times) {
    detail::check_band_edges(spectral);
    const auto a = detail::weighted_spectrum(spectral);
    return evaluate_spectral_sum(a, spectral.grid(), times);
}

inline TemporalField synthesize(const SpectralField& spectral, const TimeGrid& tgrid) {
    return {tgrid, synthesize_samples(spectral, SampleTimes::nodes(tgrid))};
}

// Field at the two quadrature nodes of every cell of tgrid, the input of the propagator.
inline StepField synthesize_steps(const SpectralField& spectral, const TimeGrid& tgrid) {
    return {tgrid, synthesize_samples(spectral, SampleTimes::early_nodes(tgrid)),
            synthesize_samples(spectral, SampleTimes::late_nodes(tgrid))};
}

// Reference O(K·M) evaluation of the same trapezoid sum.
inline std::vector<double> synthesize_direct(const SpectralField& spectral, std::span<const double> times) {
    const auto w = spectral.grid().trapezoid_weights();
    const auto amp = spectral.amplitude();
    const auto ph = spectral.phase();
    std::vector<double> out(times.size(), 0.0);
    for (std::size_t j = 0; j < times.size(); ++j) {
        double acc = 0.0;
        for (std::size_t k = 0; k < spectral.size(); ++k) {
            acc += w[k] * amp[k] * std::cos(spectral.grid()[k] * times[j] - ph[k]);
        }
        out[j] = acc;
    }
    return out;
}

inline double field_at(const SpectralField& spectral, double t) {
    const double times[] = {t};
    return synthesize_direct(spectral, times)[0];
}

}  // namespace spoo
