// filter.hpp — Gaussian convolution filter in frequency,
//   S(Δ) = gain · exp(-4 ln2 Δ² / σ²),
// whose full width at half maximum is σ. `gain` only exists so callers can
// check that the update direction does not depend on the kernel scale.

#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include "spoo/grid.hpp"

namespace spoo {

struct FilterSpec {
    double sigma{0.0};  // FWHM, atomic units of angular frequency
    bool enabled{false};
    double gain{1.0};

    static FilterSpec disabled() { return {}; }
    static FilterSpec gaussian(double sigma, double gain = 1.0) {
        if (!(sigma > 0.0)) throw std::invalid_argument("filter: sigma must be positive");
        if (!(gain > 0.0)) throw std::invalid_argument("filter: gain must be positive");
        return {sigma, true, gain};
    }

    // unit-peak shape; the gain is applied once to the convolved result
    double shape(double delta) const noexcept { return std::exp(-4.0 * std::numbers::ln2 * delta * delta / (sigma * sigma)); }
    double kernel(double delta) const noexcept { return gain * shape(delta); }

    std::vector<double> taps(double d_omega, std::size_t n) const {
        const auto reach = static_cast<std::size_t>(std::min<double>(static_cast<double>(n - 1), std::floor(cutoff() / d_omega)));
        std::vector<double> t(reach + 1);
        for (std::size_t m = 0; m <= reach; ++m) t[m] = shape(static_cast<double>(m) * d_omega);
        return t;
    }

    // Beyond this separation the kernel is below 1e-11 of its peak.
    double cutoff() const noexcept { return 2.5 * sigma / std::sqrt(std::numbers::ln2); }
};

// out(ω_k) = Σ_k' S(ω_k' - ω_k) in(ω_k') w_k' with trapezoid weights w_k'.
// A disabled filter is the identity.
inline std::vector<double> apply_filter(std::span<const double> input, const FilterSpec& filter,
                                        const FrequencyGrid& grid) {
    if (input.size() != grid.size()) throw std::invalid_argument("apply_filter: length does not match the grid");
    if (!filter.enabled) return {input.begin(), input.end()};
    if (!(filter.sigma > 0.0)) throw std::invalid_argument("apply_filter: sigma must be positive");

    const std::size_t n = grid.size();
    const auto taps = filter.taps(grid.d_omega(), n);
    const std::size_t reach = taps.size() - 1;

    const auto w = grid.trapezoid_weights();
    std::vector<double> weighted(n);
    for (std::size_t k = 0; k < n; ++k) weighted[k] = input[k] * w[k];

    std::vector<double> out(n, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t lo = k > reach ? k - reach : 0;
        const std::size_t hi = std::min(n - 1, k + reach);
        double acc = 0.0;
        for (std::size_t q = lo; q <= hi; ++q) acc += taps[q > k ? q - k : k - q] * weighted[q];
        out[k] = filter.gain * acc;
    }
    return out;
}

}  // namespace spoo
