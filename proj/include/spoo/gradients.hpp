// gradients.hpp — derivatives of the transfer probability and of the field
// endpoint values with respect to the spectral phase.
//
// Frequency-domain arrays are densities: the derivative with respect to the
// phase at grid point k is w_k·g_k with w_k the trapezoid weight. The time
// integral runs over the two Gauss nodes of each cell with weight dt/2, the
// samples the propagator itself consumes, so the chain rule is exact at the
// discrete level.

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <span>
#include <stdexcept>
#include <vector>

#include "spoo/propagation.hpp"
#include "spoo/synthesis.hpp"

namespace spoo {

// ∂ℰ(t)/∂φ(ω) = 𝒜(ω) sin(ωt - φ(ω)), per frequency grid point.
inline std::vector<double> field_phase_gradient(const SpectralField& spectral, double t) {
    const auto amp = spectral.amplitude();
    const auto ph = spectral.phase();
    std::vector<double> out(spectral.size());
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = amp[k] * std::sin(spectral.grid()[k] * t - ph[k]);
    return out;
}

inline std::pair<std::vector<double>, std::vector<double>> constraint_gradients(const SpectralField& spectral,
                                                                               double t_i, double t_f) {
    return {field_phase_gradient(spectral, t_i), field_phase_gradient(spectral, t_f)};
}

// δP/δℰ at the two quadrature nodes of every cell; each node carries
// quadrature weight dt/2.
struct FieldGradient {
    double objective{0.0};  // P_{i→f}(t_f)
    std::vector<double> early;
    std::vector<double> late;
};

namespace detail {

inline std::complex<double> sinc_phase_factor(double la, double lb, double dt) {
    // (e^{-iλa dt} - e^{-iλb dt}) / (λa - λb), continuous through λa = λb.
    const double x = 0.5 * (la - lb) * dt;
    const double sinc = std::abs(x) < 1e-8 ? 1.0 - x * x / 6.0 : std::sin(x) / x;
    return std::complex<double>(0.0, -dt) * std::polar(1.0, -0.5 * (la + lb) * dt) * sinc;
}

// Forward/backward sweep over the sub-exponentials. `node_states` optionally
// supplies ψ at every grid node; the state between the two exponentials of a
// cell is then recomputed.
inline FieldGradient field_gradient_sweep(const QuantumSystem& system, const StepField& drive,
                                          std::size_t initial, std::size_t target,
                                          const std::vector<Eigen::VectorXcd>* node_states) {
    const std::size_t n = system.levels();
    if (initial >= n || target >= n) throw std::out_of_range("objective gradient: level index out of range");
    const auto init = StateVector::basis(n, initial);
    check_drive(system, drive, n);
    const std::size_t cells = drive.grid.n_cells();
    const std::size_t subs = 2 * cells;
    const double h = 0.5 * drive.grid.dt();
    const auto ni = static_cast<Eigen::Index>(n);

    CellSolver solver(system);
    CellEigen eig;
    std::vector<double> values(subs * n);
    std::vector<double> vectors(subs * n * n);
    std::vector<std::complex<double>> states;
    if (!node_states) states.resize(subs * n);

    SmallCVec psi = init.coefficients();
    for (std::size_t s = 0; s < subs; ++s) {
        solver.decompose(substep_field(drive, s), eig);
        for (Eigen::Index a = 0; a < ni; ++a) {
            values[s * n + static_cast<std::size_t>(a)] = eig.values(a);
            for (Eigen::Index b = 0; b < ni; ++b) {
                vectors[(s * n + static_cast<std::size_t>(a)) * n + static_cast<std::size_t>(b)] = eig.vectors(a, b);
            }
        }
        if (!node_states) {
            for (Eigen::Index a = 0; a < ni; ++a) states[s * n + static_cast<std::size_t>(a)] = psi(a);
            psi = CellSolver::apply(eig, CellSolver::phases(eig, h), psi);
        }
    }
    if (node_states) {
        if (node_states->size() != cells + 1) throw std::invalid_argument("objective gradient: insufficient state storage");
        psi = node_states->back();
    }
    const std::complex<double> amp = psi(static_cast<Eigen::Index>(target));

    FieldGradient out;
    out.objective = std::norm(amp);
    out.early.assign(cells, 0.0);
    out.late.assign(cells, 0.0);

    SmallCVec chi = SmallCVec::Zero(ni);
    chi(static_cast<Eigen::Index>(target)) = 1.0;
    SmallMat v(ni, ni);
    SmallVec lam(ni);
    SmallCVec y(ni);
    const SmallMat& mu = solver.dipole();
    const auto load = [&](std::size_t s) {
        for (Eigen::Index a = 0; a < ni; ++a) {
            lam(a) = values[s * n + static_cast<std::size_t>(a)];
            for (Eigen::Index b = 0; b < ni; ++b) {
                v(a, b) = vectors[(s * n + static_cast<std::size_t>(a)) * n + static_cast<std::size_t>(b)];
            }
        }
    };
    double d_second = 0.0;  // dP/df of the second exponential of the current cell
    for (std::size_t ss = subs; ss-- > 0;) {
        SmallCVec before(ni);
        if (!node_states) {
            for (Eigen::Index a = 0; a < ni; ++a) before(a) = states[ss * n + static_cast<std::size_t>(a)];
        } else if (ss % 2 == 0) {
            before = (*node_states)[ss / 2];
        } else {
            load(ss - 1);
            SmallCVec ph(ni);
            for (Eigen::Index a = 0; a < ni; ++a) ph(a) = std::polar(1.0, -lam(a) * h);
            const SmallCVec start = (*node_states)[ss / 2];
            before = CellSolver::apply(CellEigen{lam, v}, ph, start);
        }
        load(ss);
        y = v.transpose().cast<std::complex<double>>() * before;
        const SmallCVec x = v.transpose().cast<std::complex<double>>() * chi;
        const SmallMat m = -(v.transpose() * mu * v);
        std::complex<double> elem = 0.0;
        for (Eigen::Index a = 0; a < ni; ++a) {
            for (Eigen::Index b = 0; b < ni; ++b) {
                if (m(a, b) == 0.0) continue;
                elem += std::conj(x(a)) * m(a, b) * sinc_phase_factor(lam(a), lam(b), h) * y(b);
            }
        }
        const double dpdf = 2.0 * (std::conj(amp) * elem).real();
        if (ss % 2 == 1) {
            d_second = dpdf;
        } else {
            const std::size_t j = ss / 2;
            // f_first = 2(a1 e + a2 l), f_second = 2(a2 e + a1 l); densities per weight h.
            out.early[j] = 2.0 * (kCfA1 * dpdf + kCfA2 * d_second) / h;
            out.late[j] = 2.0 * (kCfA2 * dpdf + kCfA1 * d_second) / h;
        }
        // χ ← U_s† χ
        SmallCVec ph(ni);
        for (Eigen::Index a = 0; a < ni; ++a) ph(a) = std::polar(1.0, lam(a) * h);
        chi = v.cast<std::complex<double>>() * ph.cwiseProduct(x);
    }
    return out;
}

}  // namespace detail

// δP_{i→f}/δℰ(t) at the quadrature nodes of the drive's grid.
inline FieldGradient objective_field_gradient(const QuantumSystem& system, const StepField& drive,
                                              std::size_t initial, std::size_t target) {
    return detail::field_gradient_sweep(system, drive, initial, target, nullptr);
}

// Same derivative reusing the states of a propagation record; the record must
// hold every node (stride 1).
inline FieldGradient objective_field_gradient(const QuantumSystem& system, const StepField& drive,
                                              const PropagationRecord& record, std::size_t initial,
                                              std::size_t target) {
    if (record.stride != 1 || record.states.size() != drive.grid.n_cells() + 1) {
        throw std::invalid_argument("objective gradient: insufficient state storage (record stride must be 1)");
    }
    return detail::field_gradient_sweep(system, drive, initial, target, &record.states);
}

// Chain rule onto the spectral phase:
// δP/δφ(ω) = Σ_nodes (dt/2)·δP/δℰ(t)·𝒜(ω) sin(ωt - φ(ω)).
inline std::vector<double> phase_gradient_from_field(const SpectralField& spectral, const TimeGrid& tgrid,
                                                     const FieldGradient& fg) {
    if (fg.early.size() != tgrid.n_cells() || fg.late.size() != tgrid.n_cells()) {
        throw std::invalid_argument("phase gradient: length mismatch");
    }
    const double w = 0.5 * tgrid.dt();
    std::vector<double> we(fg.early), wl(fg.late);
    for (double& x : we) x *= w;
    for (double& x : wl) x *= w;
    auto r = evaluate_time_sum(we, spectral.grid(), SampleTimes::early_nodes(tgrid));
    const auto r2 = evaluate_time_sum(wl, spectral.grid(), SampleTimes::late_nodes(tgrid));
    for (std::size_t k = 0; k < r.size(); ++k) r[k] += r2[k];
    const auto amp = spectral.amplitude();
    const auto ph = spectral.phase();
    std::vector<double> out(spectral.size());
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = amp[k] * (std::polar(1.0, -ph[k]) * r[k]).imag();
    return out;
}

struct PhaseGradient {
    double objective{0.0};
    std::vector<double> density;
};

inline PhaseGradient objective_phase_gradient(const QuantumSystem& system, const SpectralField& spectral,
                                              const TimeGrid& tgrid, std::size_t initial, std::size_t target) {
    const auto drive = synthesize_steps(spectral, tgrid);
    const auto fg = objective_field_gradient(system, drive, initial, target);
    return {fg.objective, phase_gradient_from_field(spectral, tgrid, fg)};
}

// Gradients of the objective (ℓ=0) and of ℰ(t_i), ℰ(t_f) (ℓ=1,2).
struct GradientBundle {
    std::vector<double> dQ0_dphi;
    std::vector<double> dQ1_dphi;
    std::vector<double> dQ2_dphi;

    const std::vector<double>& operator[](std::size_t l) const {
        switch (l) {
            case 0: return dQ0_dphi;
            case 1: return dQ1_dphi;
            case 2: return dQ2_dphi;
        }
        throw std::out_of_range("gradient bundle: index out of range");
    }
};

}  // namespace spoo
