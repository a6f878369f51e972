// system.hpp — N-level systems coupled to a linearly polarized field through
// the dipole operator: H(t) = H0 - μ ℰ(t), H0 diagonal in the level basis.

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include "spoo/units.hpp"

namespace spoo {

inline constexpr int kMaxLevels = 8;

class QuantumSystem {
public:
    QuantumSystem(std::vector<double> energies, Eigen::MatrixXd dipole)
        : energies_(std::move(energies)), dipole_(std::move(dipole)) {
        const auto n = static_cast<Eigen::Index>(energies_.size());
        if (n < 2) throw std::invalid_argument("quantum system: at least two levels are required");
        if (n > kMaxLevels) throw std::invalid_argument("quantum system: too many levels");
        if (dipole_.rows() != n || dipole_.cols() != n) {
            throw std::invalid_argument("quantum system: dipole matrix must be N x N");
        }
        for (double e : energies_) {
            if (!std::isfinite(e)) throw std::invalid_argument("quantum system: energies must be finite");
        }
        for (Eigen::Index a = 0; a < n; ++a) {
            if (dipole_(a, a) != 0.0) throw std::invalid_argument("quantum system: permanent dipoles are not supported");
            for (Eigen::Index b = 0; b < n; ++b) {
                if (!std::isfinite(dipole_(a, b)) || dipole_(a, b) != dipole_(b, a)) {
                    throw std::invalid_argument("quantum system: dipole matrix must be finite and symmetric");
                }
            }
        }
    }

    std::size_t levels() const noexcept { return energies_.size(); }
    const std::vector<double>& energies() const noexcept { return energies_; }
    const Eigen::MatrixXd& dipole() const noexcept { return dipole_; }

    double transition_frequency(std::size_t a, std::size_t b) const {
        return std::abs(energies_.at(b) - energies_.at(a));
    }

private:
    std::vector<double> energies_;
    Eigen::MatrixXd dipole_;
};

inline QuantumSystem two_level_system(double e2_invcm = 12500.0, double mu12 = 1.0) {
    Eigen::MatrixXd mu = Eigen::MatrixXd::Zero(2, 2);
    mu(0, 1) = mu(1, 0) = mu12;
    return QuantumSystem({0.0, units::wavenumber_to_angular_frequency(e2_invcm)}, mu);
}

// 5S1/2, 5P1/2, 5P3/2 of 87Rb. The 5P1/2–5P3/2 dipole vanishes.
inline QuantumSystem rubidium_system() {
    Eigen::MatrixXd mu = Eigen::MatrixXd::Zero(3, 3);
    mu(0, 1) = mu(1, 0) = 2.9931;
    mu(0, 2) = mu(2, 0) = 4.2275;
    return QuantumSystem({0.0, units::wavenumber_to_angular_frequency(12578.95),
                          units::wavenumber_to_angular_frequency(12816.55)},
                         mu);
}

// Amplitudes in the eigenbasis of H0, normalized to one.
class StateVector {
public:
    explicit StateVector(Eigen::VectorXcd c) : c_(std::move(c)) {
        if (c_.size() < 1) throw std::invalid_argument("state vector: empty");
        if (std::abs(c_.squaredNorm() - 1.0) > 1e-10) throw std::invalid_argument("state vector: not normalized");
    }

    static StateVector basis(std::size_t n_levels, std::size_t index) {
        if (index >= n_levels) throw std::out_of_range("state vector: level index out of range");
        Eigen::VectorXcd c = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(n_levels));
        c(static_cast<Eigen::Index>(index)) = 1.0;
        return StateVector(std::move(c));
    }

    const Eigen::VectorXcd& coefficients() const noexcept { return c_; }
    std::size_t size() const noexcept { return static_cast<std::size_t>(c_.size()); }
    double population(std::size_t n) const { return std::norm(c_(static_cast<Eigen::Index>(n))); }

private:
    Eigen::VectorXcd c_;
};

}  // namespace spoo
