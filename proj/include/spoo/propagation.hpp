// propagation.hpp — time-dependent Schrödinger equation for the evolution operator.
//
// Fourth-order commutator-free Magnus scheme: each cell is the product of two
// exponentials of length dt/2, each of H0 - μf with f a fixed combination of
// the field at the two Gauss nodes of the cell. Every exponential is applied
// exactly through the eigendecomposition of the real symmetric Hamiltonian.
// No rotating-wave approximation is made.

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "spoo/pulse.hpp"
#include "spoo/system.hpp"

namespace spoo {

namespace detail {

using SmallMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxLevels, kMaxLevels>;
using SmallVec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxLevels, 1>;
using SmallCMat = Eigen::Matrix<std::complex<double>, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxLevels, kMaxLevels>;
using SmallCVec = Eigen::Matrix<std::complex<double>, Eigen::Dynamic, 1, 0, kMaxLevels, 1>;

// Eigensystem of H0 - μh for one cell.
struct CellEigen {
    SmallVec values;
    SmallMat vectors;  // columns are eigenvectors
};

class CellSolver {
public:
    explicit CellSolver(const QuantumSystem& system) : n_(static_cast<Eigen::Index>(system.levels())) {
        h0_ = SmallVec::Zero(n_);
        for (Eigen::Index a = 0; a < n_; ++a) h0_(a) = system.energies()[static_cast<std::size_t>(a)];
        mu_ = system.dipole();
    }

    Eigen::Index levels() const noexcept { return n_; }
    const SmallMat& dipole() const noexcept { return mu_; }

    void decompose(double field, CellEigen& out) {
        if (n_ == 2) {
            // H = m I ± r [[cos 2θ, sin 2θ], [sin 2θ, -cos 2θ]], sign chosen so
            // that θ = 0 exactly when the field vanishes
            const double a = h0_(0), d = h0_(1), b = -mu_(0, 1) * field;
            const double m = 0.5 * (a + d);
            const double half = 0.5 * (a - d);
            const double r = std::hypot(half, b);
            const double sign = half < 0.0 ? -1.0 : 1.0;
            const double theta = 0.5 * std::atan2(sign * b, sign * half);
            const double c = std::cos(theta), s = std::sin(theta);
            out.values.resize(2);
            out.vectors.resize(2, 2);
            out.values << m + sign * r, m - sign * r;
            out.vectors << c, -s, s, c;
            return;
        }
        SmallMat h = -field * mu_;
        h.diagonal() += h0_;
        solver_.compute(h);
        out.values = solver_.eigenvalues();
        out.vectors = solver_.eigenvectors();
    }

    static SmallCVec phases(const CellEigen& e, double dt) {
        SmallCVec p(e.values.size());
        for (Eigen::Index a = 0; a < p.size(); ++a) p(a) = std::polar(1.0, -e.values(a) * dt);
        return p;
    }

    // exp(-iH dt) ψ
    static SmallCVec apply(const CellEigen& e, const SmallCVec& phase, const SmallCVec& psi) {
        SmallCVec tmp = e.vectors.transpose().cast<std::complex<double>>() * psi;
        tmp = tmp.cwiseProduct(phase);
        return e.vectors.cast<std::complex<double>>() * tmp;
    }

    // exp(+iH dt) ψ, the inverse step.
    static SmallCVec apply_inverse(const CellEigen& e, const SmallCVec& phase, const SmallCVec& psi) {
        SmallCVec tmp = e.vectors.transpose().cast<std::complex<double>>() * psi;
        tmp = tmp.cwiseProduct(phase.conjugate());
        return e.vectors.cast<std::complex<double>>() * tmp;
    }

private:
    Eigen::Index n_;
    SmallVec h0_;
    SmallMat mu_;
    Eigen::SelfAdjointEigenSolver<SmallMat> solver_;
};

// Weights of the two exponentials: the first is applied with field
// 2(a1·early + a2·late), the second with 2(a2·early + a1·late).
inline constexpr double kCfA1 = 0.25 + 0.28867513459481288225;
inline constexpr double kCfA2 = 0.25 - 0.28867513459481288225;

inline void check_drive(const QuantumSystem& system, const StepField& drive, std::size_t initial_size) {
    if (drive.early.size() != drive.grid.n_cells() || drive.late.size() != drive.grid.n_cells()) {
        throw std::invalid_argument("propagate: field samples do not match the time grid cells");
    }
    if (initial_size != system.levels()) {
        throw std::invalid_argument("propagate: initial state dimension does not match the system");
    }
}

// Field of the sub-exponential s (2j and 2j+1 belong to cell j), length dt/2.
inline double substep_field(const StepField& drive, std::size_t s) {
    const std::size_t j = s / 2;
    const double e = drive.early[j], l = drive.late[j];
    return (s % 2 == 0) ? 2.0 * (kCfA1 * e + kCfA2 * l) : 2.0 * (kCfA2 * e + kCfA1 * l);
}

}  // namespace detail

struct PropagationRecord {
    TimeGrid grid;
    std::size_t stride{1};
    std::vector<std::size_t> indices;       // node indices of the stored states
    std::vector<Eigen::VectorXcd> states;   // states at grid[indices[i]]
    Eigen::VectorXcd final_state;
    Eigen::MatrixXcd final_unitary;         // U(t_f, t_i)

    std::size_t levels() const noexcept { return static_cast<std::size_t>(final_state.size()); }
    double time(std::size_t i) const { return grid[indices.at(i)]; }
};

inline std::size_t default_store_stride(const TimeGrid& grid) {
    constexpr std::size_t kSnapshots = 2000;
    return std::max<std::size_t>(1, grid.n_cells() / kSnapshots);
}

// Propagates `initial` and records states every `store_stride` nodes (0 picks
// a stride giving about 2000 snapshots). The final node is always stored.
inline PropagationRecord propagate(const QuantumSystem& system, const StepField& drive, const StateVector& initial,
                                   std::size_t store_stride = 0) {
    detail::check_drive(system, drive, initial.size());
    const std::size_t stride = store_stride == 0 ? default_store_stride(drive.grid) : store_stride;
    const auto n = static_cast<Eigen::Index>(system.levels());
    const double h = 0.5 * drive.grid.dt();

    detail::CellSolver solver(system);
    detail::CellEigen eig;
    detail::SmallCVec psi = initial.coefficients();
    detail::SmallCMat u = detail::SmallCMat::Identity(n, n);

    PropagationRecord rec;
    rec.grid = drive.grid;
    rec.stride = stride;
    const std::size_t cells = drive.grid.n_cells();
    rec.indices.reserve(cells / stride + 2);
    rec.states.reserve(cells / stride + 2);
    rec.indices.push_back(0);
    rec.states.emplace_back(psi);

    for (std::size_t j = 0; j < cells; ++j) {
        for (std::size_t s = 2 * j; s < 2 * j + 2; ++s) {
            solver.decompose(detail::substep_field(drive, s), eig);
            const auto ph = detail::CellSolver::phases(eig, h);
            psi = detail::CellSolver::apply(eig, ph, psi);
            const detail::SmallCMat vc = eig.vectors.cast<std::complex<double>>();
            u = vc * (ph.asDiagonal() * (vc.adjoint() * u));
        }
        const std::size_t node = j + 1;
        if (node % stride == 0 || node == cells) {
            rec.indices.push_back(node);
            rec.states.emplace_back(psi);
        }
    }
    rec.final_state = psi;
    rec.final_unitary = u;
    return rec;
}

// Final state only; the cheap path used inside the optimizer line search.
inline Eigen::VectorXcd final_state(const QuantumSystem& system, const StepField& drive, const StateVector& initial) {
    detail::check_drive(system, drive, initial.size());
    const double h = 0.5 * drive.grid.dt();
    detail::CellSolver solver(system);
    detail::CellEigen eig;
    detail::SmallCVec psi = initial.coefficients();
    for (std::size_t s = 0; s < 2 * drive.grid.n_cells(); ++s) {
        solver.decompose(detail::substep_field(drive, s), eig);
        psi = detail::CellSolver::apply(eig, detail::CellSolver::phases(eig, h), psi);
    }
    return psi;
}

inline double transfer_probability(const PropagationRecord& record, std::size_t target) {
    if (target >= record.levels()) throw std::out_of_range("transfer_probability: target level out of range");
    return std::norm(record.final_state(static_cast<Eigen::Index>(target)));
}

// Populations of every level at each stored time.
inline std::vector<std::vector<double>> populations(const PropagationRecord& record) {
    std::vector<std::vector<double>> out;
    out.reserve(record.states.size());
    for (const auto& s : record.states) {
        std::vector<double> p(static_cast<std::size_t>(s.size()));
        for (Eigen::Index a = 0; a < s.size(); ++a) p[static_cast<std::size_t>(a)] = std::norm(s(a));
        out.push_back(std::move(p));
    }
    return out;
}

// Resonant two-level transfer for a transform-limited Gaussian pulse:
// P = sin²(A/2), A = ℰ0 μ12 ∫ exp(-t²/2τ0²)/2 dt over the window of tgrid.
inline double analytic_rabi_probability(double e0, double mu12, double tau0, const TimeGrid& tgrid) {
    const double s = std::sqrt(2.0) * tau0;
    const double gauss = tau0 * std::sqrt(std::numbers::pi / 2.0) *
                         (std::erf(tgrid.t_end() / s) - std::erf(tgrid.t_start() / s));
    const double area = e0 * mu12 * gauss / 2.0;
    const double x = std::sin(0.5 * area);
    return x * x;
}

}  // namespace spoo
