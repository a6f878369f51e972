// analysis.hpp — post-optimization diagnostics: robustness against the field
// strength, quadratic fits of the phase, the adiabatic (RWA) picture of a
// chirped two-level transfer and a Gabor time–frequency map.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <exception>
#include <limits>
#include <mutex>
#include <numbers>
#include <span>
#include <stdexcept>
#include <thread>
#include <vector>

#include "spoo/detail/chirp_z.hpp"
#include "spoo/propagation.hpp"
#include "spoo/synthesis.hpp"

namespace spoo {

// ---------------------------------------------------------------- robustness

struct RobustnessScan {
    std::vector<double> e0_values;
    std::vector<double> probabilities;
    std::vector<double> infidelities;  // 1 - probability
};

// Runs f(i) for i < n on up to `jobs` threads. Results must be written by index.
template <class F>
void parallel_for(std::size_t n, std::size_t jobs, F&& f) {
    jobs = std::max<std::size_t>(1, std::min(jobs, n));
    if (jobs == 1) {
        for (std::size_t i = 0; i < n; ++i) f(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    {
        std::vector<std::jthread> pool;
        pool.reserve(jobs);
        for (std::size_t w = 0; w < jobs; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < n; i = next++) {
                    try {
                        f(i);
                    } catch (...) {
                        std::lock_guard lock(error_mutex);
                        if (!error) error = std::current_exception();
                    }
                }
            });
        }
    }
    if (error) std::rethrow_exception(error);
}

// The phase is held fixed while the amplitude is rebuilt for each ℰ0.
inline RobustnessScan scan_robustness(const QuantumSystem& system, const SpectralField& spectral, const TimeGrid& tgrid,
                                      std::size_t initial, std::size_t target, std::span<const double> e0_values,
                                      std::size_t jobs = 1) {
    if (initial >= system.levels() || target >= system.levels()) {
        throw std::out_of_range("scan_robustness: level index out of range");
    }
    for (double e : e0_values) {
        if (!(e >= 0.0) || !std::isfinite(e)) throw std::invalid_argument("scan_robustness: field strengths must be non-negative");
    }
    RobustnessScan out;
    out.e0_values.assign(e0_values.begin(), e0_values.end());
    out.probabilities.assign(e0_values.size(), 0.0);
    out.infidelities.assign(e0_values.size(), 0.0);
    const auto init = StateVector::basis(system.levels(), initial);
    parallel_for(e0_values.size(), jobs, [&](std::size_t i) {
        const auto psi = final_state(system, synthesize_steps(spectral.with_strength(e0_values[i]), tgrid), init);
        const double p = std::min(1.0, std::norm(psi(static_cast<Eigen::Index>(target))));
        out.probabilities[i] = p;
        out.infidelities[i] = 1.0 - p;
    });
    return out;
}

// n equally spaced values from lo to hi inclusive.
inline std::vector<double> linspace(double lo, double hi, std::size_t n) {
    if (n == 0) return {};
    if (n == 1) return {lo};
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    out.back() = hi;
    return out;
}

// ---------------------------------------------------------------- phase fit

// φ(ω) ≈ offset + phi1 (ω-ω_ref) + β0/2 (ω-ω_ref)²
//      = centered_offset + β0/2 (ω-ω_c)²,  ω_c = ω_ref - phi1/β0.
struct QuadraticFit {
    double omega_ref{0.0};
    double omega_c{std::numeric_limits<double>::quiet_NaN()};
    bool omega_c_defined{false};
    double beta0{0.0};
    double phi1{0.0};
    double offset{0.0};
    double centered_offset{std::numeric_limits<double>::quiet_NaN()};
    double residual{0.0};  // amplitude²-weighted RMS over the band
    double band_lo{0.0};
    double band_hi{0.0};
    std::size_t band_points{0};

    double model(double omega) const noexcept {
        const double x = omega - omega_ref;
        return offset + phi1 * x + 0.5 * beta0 * x * x;
    }
};

inline constexpr double kDefaultFitThreshold = 1e-3;

// Weighted least squares with weights 𝒜² over the band 𝒜 ≥ threshold·max 𝒜,
// expanded about the spectral centre ω0.
inline QuadraticFit fit_quadratic_phase(const SpectralField& spectral, double amplitude_threshold = kDefaultFitThreshold) {
    if (!(amplitude_threshold > 0.0 && amplitude_threshold < 1.0)) {
        throw std::invalid_argument("fit_quadratic_phase: threshold must lie in (0, 1)");
    }
    const auto amp = spectral.amplitude();
    const auto ph = spectral.phase();
    const auto& grid = spectral.grid();
    const double peak = *std::max_element(amp.begin(), amp.end());

    QuadraticFit fit;
    fit.omega_ref = spectral.omega0();
    // Scale x to O(1) so the normal equations stay well conditioned.
    const double scale = spectral.delta_omega();
    Eigen::Matrix3d a = Eigen::Matrix3d::Zero();
    Eigen::Vector3d b = Eigen::Vector3d::Zero();
    bool first = true;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        if (!(peak > 0.0) || amp[k] < amplitude_threshold * peak) continue;
        if (first) fit.band_lo = grid[k];
        first = false;
        fit.band_hi = grid[k];
        ++fit.band_points;
        const double x = (grid[k] - fit.omega_ref) / scale;
        const double w = amp[k] * amp[k];
        const Eigen::Vector3d v(1.0, x, x * x);
        a += w * v * v.transpose();
        b += w * v * ph[k];
    }
    if (fit.band_points < 5) throw std::invalid_argument("fit_quadratic_phase: degenerate band (fewer than 5 points)");

    const Eigen::Vector3d c = a.ldlt().solve(b);
    fit.offset = c(0);
    fit.phi1 = c(1) / scale;
    fit.beta0 = 2.0 * c(2) / (scale * scale);

    double r2 = 0.0, wsum = 0.0;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        if (amp[k] < amplitude_threshold * peak) continue;
        const double e = ph[k] - fit.model(grid[k]);
        const double w = amp[k] * amp[k];
        r2 += w * e * e;
        wsum += w;
    }
    fit.residual = std::sqrt(r2 / wsum);

    // Curvature indistinguishable from zero relative to the phase excursion
    // it would produce across the band.
    const double half_band = 0.5 * (fit.band_hi - fit.band_lo);
    const double curvature_phase = std::abs(fit.beta0) * half_band * half_band;
    const double size = std::max({std::abs(fit.offset), std::abs(fit.phi1) * half_band, 1.0});
    if (curvature_phase > 1e-12 * size) {
        fit.omega_c_defined = true;
        fit.omega_c = fit.omega_ref - fit.phi1 / fit.beta0;
        fit.centered_offset = fit.offset - fit.phi1 * fit.phi1 / (2.0 * fit.beta0);
    } else {
        fit.beta0 = 0.0;
    }
    return fit;
}

// ---------------------------------------------------------------- adiabatic frame

// Linear-chirp model of the pulse behind the rotating frame:
// ℰ(t) = ℰ0 f exp(-u²/2τ²) cos(ω0 t + β u²/2 + ϕ - offset), u = t - t_c, t_c = phi1.
struct ChirpFrame {
    double e0{0.0};
    double tau0{0.0};
    double omega0{0.0};
    double beta0{0.0};
    double phi1{0.0};
    double offset{0.0};

    static ChirpFrame from_fit(const QuadraticFit& fit, double e0, double tau0) {
        return {e0, tau0, fit.omega_ref, fit.beta0, fit.phi1, fit.offset};
    }

    ChirpedPulseParams pulse() const { return {e0, tau0, beta0, omega0}; }
    double center() const noexcept { return phi1; }
    double carrier_phase(double t) const noexcept {
        const auto p = pulse();
        const double u = t - phi1;
        return omega0 * t + 0.5 * p.beta() * u * u + p.varphi() - offset;
    }
};

struct AdiabaticTrace {
    std::vector<double> times;
    std::vector<double> detuning;         // Δ(t) = δ - β(t - t_c), δ = ω12 - ω0
    std::vector<double> rabi;             // Ω(t) = -μ12 ℰ0 f exp(-u²/2τ²)
    std::vector<double> mixing_angle;     // ϑ, continuous branch of ½ atan(Ω/Δ)
    std::vector<double> energy_plus;      // +½√(Ω²+Δ²)
    std::vector<double> energy_minus;
    std::vector<double> pop_plus;
    std::vector<double> pop_minus;
    std::vector<double> adiabaticity_ratio;  // |dϑ/dt| / √(Δ²+Ω²)

    double min_pop_minus() const { return pop_minus.empty() ? 0.0 : *std::min_element(pop_minus.begin(), pop_minus.end()); }
};

struct AdiabaticPoint {
    double detuning;
    double rabi;
    double mixing_angle;
    double energy;  // E+ = -E-
    double mixing_rate;
};

// Two-level RWA quantities at time t.
inline AdiabaticPoint adiabatic_point(const QuantumSystem& system, const ChirpFrame& frame, double t) {
    const auto p = frame.pulse();
    const double tau = p.tau();
    const double u = t - frame.center();
    const double delta = system.transition_frequency(0, 1) - frame.omega0;
    AdiabaticPoint a{};
    a.detuning = delta - p.beta() * u;
    a.rabi = -system.dipole()(0, 1) * frame.e0 * p.f() * std::exp(-u * u / (2.0 * tau * tau));
    a.mixing_angle = 0.5 * std::atan2(a.rabi, a.detuning);
    const double r2 = a.rabi * a.rabi + a.detuning * a.detuning;
    a.energy = 0.5 * std::sqrt(r2);
    const double rabi_dot = -a.rabi * u / (tau * tau);
    const double detuning_dot = -p.beta();
    a.mixing_rate = r2 > 0.0 ? 0.5 * (rabi_dot * a.detuning - a.rabi * detuning_dot) / r2 : 0.0;
    return a;
}

// Projects the stored states of `record` onto the adiabatic states
// |-⟩ = cos ϑ|1⟩ - sin ϑ|2⟩, |+⟩ = sin ϑ|1⟩ + cos ϑ|2⟩ of the frame rotating
// with the instantaneous carrier.
inline AdiabaticTrace adiabatic_decompose(const QuantumSystem& system, const ChirpFrame& frame,
                                          const PropagationRecord& record) {
    if (system.levels() != 2) throw std::invalid_argument("adiabatic_decompose: requires a two-level system");
    if (!(frame.tau0 > 0.0)) throw std::invalid_argument("adiabatic_decompose: tau0 must be positive");
    AdiabaticTrace tr;
    const std::size_t n = record.states.size();
    for (auto* v : {&tr.times, &tr.detuning, &tr.rabi, &tr.mixing_angle, &tr.energy_plus, &tr.energy_minus,
                    &tr.pop_plus, &tr.pop_minus, &tr.adiabaticity_ratio}) {
        v->resize(n);
    }
    for (std::size_t i = 0; i < n; ++i) {
        const double t = record.time(i);
        const auto a = adiabatic_point(system, frame, t);
        const double half = 0.5 * frame.carrier_phase(t);
        const std::complex<double> b1 = std::polar(1.0, -half) * record.states[i](0);
        const std::complex<double> b2 = std::polar(1.0, half) * record.states[i](1);
        const double c = std::cos(a.mixing_angle), s = std::sin(a.mixing_angle);
        tr.times[i] = t;
        tr.detuning[i] = a.detuning;
        tr.rabi[i] = a.rabi;
        tr.mixing_angle[i] = a.mixing_angle;
        tr.energy_plus[i] = a.energy;
        tr.energy_minus[i] = -a.energy;
        tr.pop_minus[i] = std::norm(c * b1 - s * b2);
        tr.pop_plus[i] = std::norm(s * b1 + c * b2);
        tr.adiabaticity_ratio[i] = a.energy > 0.0 ? std::abs(a.mixing_rate) / (2.0 * a.energy) : 0.0;
    }
    return tr;
}

// ---------------------------------------------------------------- time–frequency map

struct TimeFrequencyMap {
    std::vector<double> times;
    std::vector<double> omegas;
    std::vector<double> intensity;  // row-major, times × omegas

    double at(std::size_t i, std::size_t j) const { return intensity.at(i * omegas.size() + j); }

    // Σ intensity · Δt Δω/π, equal to ∫ℰ² dt when the grids cover the pulse.
    double total_energy() const {
        if (times.size() < 2 || omegas.size() < 2) return 0.0;
        const double dt = times[1] - times[0];
        const double dw = omegas[1] - omegas[0];
        double acc = 0.0;
        for (double x : intensity) acc += x;
        return acc * dt * dw / std::numbers::pi;
    }
};

struct TimeFrequencyGrid {
    double t_first{0.0};
    double t_last{0.0};
    std::size_t n_times{0};
    double omega_first{0.0};
    double omega_last{0.0};
    std::size_t n_omegas{0};
};

// |∫ ℰ(t) g(t - t_m) exp(-iωt) dt|² with the unit-norm Gaussian window
// g(t) = (π w²)^(-1/4) exp(-t²/2w²), truncated at 6w.
inline TimeFrequencyMap time_frequency_map(const TemporalField& field, double window_width, const TimeFrequencyGrid& out) {
    if (!(window_width > 0.0)) throw std::invalid_argument("time_frequency_map: window width must be positive");
    if (out.n_times < 2 || out.n_omegas < 2 || !(out.t_last > out.t_first) || !(out.omega_last > out.omega_first)) {
        throw std::invalid_argument("time_frequency_map: output grid needs at least 2x2 increasing points");
    }
    if (field.values.size() != field.grid.size()) throw std::invalid_argument("time_frequency_map: field length mismatch");
    TimeFrequencyMap map;
    map.times = linspace(out.t_first, out.t_last, out.n_times);
    map.omegas = linspace(out.omega_first, out.omega_last, out.n_omegas);
    map.intensity.assign(out.n_times * out.n_omegas, 0.0);

    const auto& g = field.grid;
    const double dt = g.dt();
    const double norm = std::pow(std::numbers::pi * window_width * window_width, -0.25);
    const double reach = 6.0 * window_width;
    const double dw = map.omegas[1] - map.omegas[0];
    const auto w_nodes = g.trapezoid_weights();
    for (std::size_t m = 0; m < out.n_times; ++m) {
        const double tm = map.times[m];
        const double lo = std::max(g.t_start(), tm - reach);
        const double hi = std::min(g.t_end(), tm + reach);
        if (!(hi > lo)) continue;
        const auto j0 = static_cast<std::size_t>(std::ceil((lo - g.t_start()) / dt - 1e-9));
        const auto j1 = std::min(g.size() - 1, static_cast<std::size_t>(std::floor((hi - g.t_start()) / dt + 1e-9)));
        if (j1 < j0) continue;
        // Σ_j y_j exp(-i(ω_first + n dω) t_j), t_j = t_{j0} + (j - j0) dt.
        std::vector<std::complex<double>> y(j1 - j0 + 1);
        const double t0 = g[j0];
        for (std::size_t j = j0; j <= j1; ++j) {
            const double u = (g[j] - tm) / window_width;
            const double win = norm * std::exp(-0.5 * u * u);
            y[j - j0] = std::polar(w_nodes[j] * field.values[j] * win, -out.omega_first * (g[j] - t0));
        }
        const auto z = detail::chirp_z(y, -dw * dt, out.n_omegas);
        for (std::size_t n = 0; n < out.n_omegas; ++n) map.intensity[m * out.n_omegas + n] = std::norm(z[n]);
    }
    return map;
}

}  // namespace spoo
