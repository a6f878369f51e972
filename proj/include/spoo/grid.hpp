// grid.hpp — uniform time and frequency grids.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

namespace spoo {

// Uniform grid on [start, end] with `size` points, both ends included.
// Points are produced from the index (start + j*step), never by accumulation.
class UniformGrid {
public:
    UniformGrid() = default;
    UniformGrid(double start, double end, std::size_t size) : start_(start), end_(end), size_(size) {
        if (!std::isfinite(start) || !std::isfinite(end)) {
            throw std::invalid_argument("grid: endpoints must be finite");
        }
        if (size < 2) throw std::invalid_argument("grid: at least two points are required");
        if (!(end > start)) throw std::invalid_argument("grid: end must exceed start");
        step_ = (end - start) / static_cast<double>(size - 1);
        if (!(step_ > 0.0)) throw std::invalid_argument("grid: spacing underflows to zero");
    }

    double start() const noexcept { return start_; }
    double end() const noexcept { return end_; }
    double step() const noexcept { return step_; }
    std::size_t size() const noexcept { return size_; }
    double span() const noexcept { return end_ - start_; }

    double operator[](std::size_t j) const noexcept {
        return j + 1 == size_ ? end_ : start_ + static_cast<double>(j) * step_;
    }

    std::vector<double> points() const {
        std::vector<double> out(size_);
        for (std::size_t j = 0; j < size_; ++j) out[j] = (*this)[j];
        return out;
    }

    // Trapezoid quadrature weights.
    std::vector<double> trapezoid_weights() const {
        std::vector<double> w(size_, step_);
        w.front() = w.back() = 0.5 * step_;
        return w;
    }

    friend bool operator==(const UniformGrid&, const UniformGrid&) = default;

private:
    double start_{0.0};
    double end_{1.0};
    std::size_t size_{2};
    double step_{1.0};
};

// Propagation window [t_start, t_end] in atomic time units. The propagator
// integrates over the size()-1 cells between consecutive points.
class TimeGrid : public UniformGrid {
public:
    TimeGrid() = default;
    TimeGrid(double t_start, double t_end, std::size_t n_steps) : UniformGrid(t_start, t_end, n_steps) {}

    double t_start() const noexcept { return start(); }
    double t_end() const noexcept { return end(); }
    double dt() const noexcept { return step(); }
    std::size_t n_steps() const noexcept { return size(); }
    std::size_t n_cells() const noexcept { return size() - 1; }

    // Center of cell j, used as the sampling time of the field over that cell.
    double midpoint(std::size_t j) const noexcept {
        return start() + (static_cast<double>(j) + 0.5) * step();
    }
};

// Positive angular frequencies, atomic units.
class FrequencyGrid : public UniformGrid {
public:
    FrequencyGrid() = default;
    FrequencyGrid(double omega_min, double omega_max, std::size_t n_points)
        : UniformGrid(omega_min, omega_max, n_points) {
        if (omega_min < 0.0) throw std::invalid_argument("frequency grid: omega_min must be >= 0");
    }

    double omega_min() const noexcept { return start(); }
    double omega_max() const noexcept { return end(); }
    double d_omega() const noexcept { return step(); }
    std::size_t n_points() const noexcept { return size(); }
};

// Symmetric window [-T/2, T/2] and a frequency band centred on omega_center.
inline std::pair<TimeGrid, FrequencyGrid> make_grids(double total_duration, std::size_t n_steps,
                                                     double omega_center, double omega_halfwidth,
                                                     std::size_t n_freq) {
    if (!(total_duration > 0.0)) throw std::invalid_argument("make_grids: duration must be positive");
    if (!(omega_center > 0.0)) throw std::invalid_argument("make_grids: center frequency must be positive");
    if (!(omega_halfwidth > 0.0)) throw std::invalid_argument("make_grids: half width must be positive");
    if (n_steps < 2 || n_freq < 2) throw std::invalid_argument("make_grids: need at least two points per grid");
    TimeGrid t(-0.5 * total_duration, 0.5 * total_duration, n_steps);
    FrequencyGrid w(std::max(0.0, omega_center - omega_halfwidth), omega_center + omega_halfwidth, n_freq);
    return {t, w};
}

}  // namespace spoo
