// optimizer.hpp — spectral-phase-only gradient flow with equality constraints.
//
// The phase is evolved along
//   ∂φ/∂s(ω) = ∫ S(ω'-ω) Σ_ℓ [Γ⁻¹]_{0ℓ} δQ_ℓ/δφ(ω') dω',
//   Γ_{ℓℓ'}  = ∫ δQ_ℓ/δφ(ω) ∫ S(ω'-ω) δQ_ℓ'/δφ(ω') dω' dω,
// with Q0 = P_{i→f}(t_f), Q1 = ℰ(t_i), Q2 = ℰ(t_f). Along this direction
// dQ0/ds = 1 and dQ1/ds = dQ2/ds = 0 to first order. Steps are explicit Euler
// with a backtracking line search that only accepts objective increases.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "spoo/filter.hpp"
#include "spoo/gradients.hpp"
#include "spoo/propagation.hpp"
#include "spoo/synthesis.hpp"

namespace spoo {

struct OptimizerConfig {
    FilterSpec filter{};
    std::size_t max_iterations{2000};
    double target_objective{0.9999};
    double initial_step{1e-3};     // predicted objective gain of the first trial step
    double step_shrink{0.5};
    double step_grow{2.0};
    double min_step{1e-15};
    double max_phase_step{1.0};    // largest phase change (rad) at any frequency per step
    double gamma_rcond{1e-10};
    bool constraints_enabled{true};
    double support_threshold{1e-8};  // phase is only updated where 𝒜 ≥ threshold·max 𝒜
    std::size_t stall_iterations{20};
    double stall_tolerance{1e-12};
    // Stop with zero_gradient when a 1 rad phase step along the update
    // direction would change the objective by less than this to first order.
    double zero_gradient_tolerance{1e-12};
    // Trial phases are pulled back onto ℰ(t_i), ℰ(t_f) = initial values by
    // Newton steps until the drift is below this fraction of Σ w𝒜.
    double projection_tolerance{1e-11};
    std::size_t projection_iterations{8};

    void validate() const {
        if (max_iterations == 0) throw std::invalid_argument("optimizer: max_iterations must be positive");
        if (!(target_objective > 0.0 && target_objective <= 1.0)) {
            throw std::invalid_argument("optimizer: target_objective must lie in (0, 1]");
        }
        if (!(initial_step > 0.0) || !(min_step > 0.0) || !(max_phase_step > 0.0) || !(gamma_rcond > 0.0)) {
            throw std::invalid_argument("optimizer: step parameters must be positive");
        }
        if (!(step_shrink > 0.0 && step_shrink < 1.0) || !(step_grow >= 1.0)) {
            throw std::invalid_argument("optimizer: need 0 < step_shrink < 1 <= step_grow");
        }
        if (!(zero_gradient_tolerance >= 0.0)) throw std::invalid_argument("optimizer: zero_gradient_tolerance must be >= 0");
        if (!(projection_tolerance > 0.0)) throw std::invalid_argument("optimizer: projection_tolerance must be positive");
        if (filter.enabled && !(filter.sigma > 0.0)) throw std::invalid_argument("optimizer: filter sigma must be positive");
    }
};

// Diagonal entries below this fraction of Σ|x_ℓ| S |x_ℓ| are rounding noise:
// the filtered constraint rows cancel to ~1e-13 of their term magnitudes when
// the kernel is much wider than the spectrum, and may even come out negative.
inline constexpr double kGammaResolution = 1e-10;

struct GammaMatrix {
    Eigen::Matrix3d values = Eigen::Matrix3d::Zero();
    Eigen::Vector3d magnitude = Eigen::Vector3d::Zero();  // Σ_k Σ_q |x_ℓ(k)| S |x_ℓ(q)|

    double operator()(int l, int lp) const { return values(l, lp); }

    double asymmetry() const {
        const double scale = values.cwiseAbs().maxCoeff();
        return scale > 0.0 ? (values - values.transpose()).cwiseAbs().maxCoeff() / scale : 0.0;
    }
    // Most negative eigenvalue of the symmetric part, relative to the largest
    // term magnitude (so rounding noise in unresolved rows reads as ~1e-13).
    double psd_defect() const {
        const Eigen::Matrix3d sym = 0.5 * (values + values.transpose());
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(sym);
        const double scale = magnitude.maxCoeff();
        return scale > 0.0 ? std::max(0.0, -es.eigenvalues()(0)) / scale : 0.0;
    }
};

inline double weighted_dot(std::span<const double> a, std::span<const double> b, const FrequencyGrid& grid) {
    const double dw = grid.d_omega();
    double acc = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        const double w = (k == 0 || k + 1 == a.size()) ? 0.5 * dw : dw;
        acc += w * (a[k] * b[k]);
    }
    return acc;
}

// Γ_ℓℓ' = Σ_k Σ_q w_k a_ℓ(k) S(ω_k - ω_q) w_q a_ℓ'(q). The double sum runs over
// index pairs (k, k+d) with both orderings added together, so swapping ℓ and ℓ'
// reproduces every floating-point operation and Γ comes out exactly symmetric.
// The filtered constraint rows are mostly cancellation under broad kernels;
// a one-sided evaluation leaves asymmetries of order 1e-8 there.
inline GammaMatrix gamma_matrix(const GradientBundle& bundle, const FilterSpec& filter, const FrequencyGrid& grid) {
    for (std::size_t l = 0; l < 3; ++l) {
        if (bundle[l].size() != grid.size()) throw std::invalid_argument("gamma_matrix: gradient length mismatch");
    }
    GammaMatrix g;
    if (!filter.enabled) {
        for (int l = 0; l < 3; ++l) {
            for (int lp = 0; lp < 3; ++lp) {
                g.values(l, lp) = weighted_dot(bundle[static_cast<std::size_t>(l)], bundle[static_cast<std::size_t>(lp)], grid);
            }
            g.magnitude(l) = g.values(l, l);
        }
        return g;
    }
    const std::size_t n = grid.size();
    const auto w = grid.trapezoid_weights();
    std::array<std::vector<double>, 3> x;
    for (std::size_t l = 0; l < 3; ++l) {
        x[l].resize(n);
        for (std::size_t k = 0; k < n; ++k) x[l][k] = w[k] * bundle[l][k];
    }
    const auto taps = filter.taps(grid.d_omega(), n);
    auto pair_sum = [&](const std::vector<double>& a, const std::vector<double>& b) {
        double acc = 0.0;
        for (std::size_t k = 0; k < n; ++k) acc += a[k] * b[k];
        acc *= taps[0];
        for (std::size_t d = 1; d < taps.size(); ++d) {
            double row = 0.0;
            for (std::size_t k = 0; k + d < n; ++k) row += a[k] * b[k + d] + b[k] * a[k + d];
            acc += taps[d] * row;
        }
        return filter.gain * acc;
    };
    for (std::size_t l = 0; l < 3; ++l) {
        for (std::size_t lp = l; lp < 3; ++lp) {
            const auto i = static_cast<Eigen::Index>(l), j = static_cast<Eigen::Index>(lp);
            g.values(i, j) = g.values(j, i) = pair_sum(x[l], x[lp]);
        }
        std::vector<double> ax(n);
        for (std::size_t k = 0; k < n; ++k) ax[k] = std::abs(x[l][k]);
        g.magnitude(static_cast<Eigen::Index>(l)) = pair_sum(ax, ax);
    }
    return g;
}

struct UpdateDirection {
    std::vector<double> direction;  // ∂φ/∂s
    GammaMatrix gamma;
    std::array<double, 3> coefficients{};  // [Γ⁺]_{0ℓ}
    std::size_t rank{0};
    bool rank_deficient{false};
};

namespace detail {

// Pseudo-inverse of the active block of Γ after scaling it to unit diagonal,
// so the cutoff is relative to the conditioning rather than to the units of Q_ℓ.
// Rows with g(i,i) <= floor(i) are left out entirely.
inline Eigen::MatrixXd scaled_pseudo_inverse(const Eigen::MatrixXd& g, double rcond, std::size_t& rank,
                                             const Eigen::VectorXd& floor = {}) {
    const auto n = g.rows();
    Eigen::VectorXd d(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double lo = floor.size() == n ? std::max(floor(i), 0.0) : 0.0;
        d(i) = g(i, i) > lo ? 1.0 / std::sqrt(g(i, i)) : 0.0;
    }
    const Eigen::MatrixXd sym = 0.5 * (g + g.transpose());
    const Eigen::MatrixXd gn = d.asDiagonal() * sym * d.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gn);
    const double top = es.eigenvalues().cwiseAbs().maxCoeff();
    Eigen::MatrixXd inv = Eigen::MatrixXd::Zero(n, n);
    rank = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double lam = es.eigenvalues()(i);
        if (top > 0.0 && lam > rcond * top) {
            inv += es.eigenvectors().col(i) * es.eigenvectors().col(i).transpose() / lam;
            ++rank;
        }
    }
    return d.asDiagonal() * inv * d.asDiagonal();
}

}  // namespace detail

// Without constraints the direction is the (filtered) objective gradient itself.
// `amplitude`, when given, masks the direction to the spectral support.
inline UpdateDirection update_direction(const GradientBundle& bundle, const FilterSpec& filter,
                                        const FrequencyGrid& grid, const OptimizerConfig& config,
                                        std::span<const double> amplitude = {}) {
    UpdateDirection out;
    out.gamma = gamma_matrix(bundle, filter, grid);
    const std::size_t n = grid.size();
    if (!config.constraints_enabled) {
        out.direction = apply_filter(bundle.dQ0_dphi, filter, grid);
        out.coefficients = {1.0, 0.0, 0.0};
        out.rank = out.gamma(0, 0) > 0.0 ? 1 : 0;
    } else {
        // only the constraint rows are dropped when unresolved; a noisy objective
        // row still gives an ascent direction and the line search checks it
        Eigen::VectorXd floor = kGammaResolution * out.gamma.magnitude;
        floor(0) = 0.0;
        const Eigen::MatrixXd pinv = detail::scaled_pseudo_inverse(out.gamma.values, config.gamma_rcond, out.rank, floor);
        out.rank_deficient = out.rank < 3;
        // Filter each row with the unit kernel, then combine. The filtered rows
        // are cancellation results; scaling before filtering would let the
        // kernel gain change which rounding errors survive.
        FilterSpec unit = filter;
        unit.gain = 1.0;
        out.direction.assign(n, 0.0);
        for (std::size_t l = 0; l < 3; ++l) {
            out.coefficients[l] = pinv(0, static_cast<Eigen::Index>(l));
            if (out.coefficients[l] == 0.0) continue;
            const double c = filter.gain * out.coefficients[l];
            const auto u = apply_filter(bundle[l], unit, grid);
            for (std::size_t k = 0; k < n; ++k) out.direction[k] += c * u[k];
        }
    }
    if (!amplitude.empty()) {
        const double peak = *std::max_element(amplitude.begin(), amplitude.end());
        for (std::size_t k = 0; k < n; ++k) {
            if (amplitude[k] < config.support_threshold * peak) out.direction[k] = 0.0;
        }
    }
    return out;
}

enum class OptimizerStatus { running, converged, max_iterations, stagnated, zero_gradient };

inline std::string to_string(OptimizerStatus s) {
    switch (s) {
        case OptimizerStatus::running: return "running";
        case OptimizerStatus::converged: return "converged";
        case OptimizerStatus::max_iterations: return "max_iterations";
        case OptimizerStatus::stagnated: return "stagnated";
        case OptimizerStatus::zero_gradient: return "zero_gradient";
    }
    return "unknown";
}

struct IterationRecord {
    std::size_t iteration{0};
    double s{0.0};
    double objective{0.0};
    double step{0.0};  // δs of the step that produced this iterate
    double drift_ti{0.0};
    double drift_tf{0.0};
    double gamma_asymmetry{0.0};
    double gamma_psd_defect{0.0};
    bool gamma_rank_deficient{false};
};

struct OptimizationState {
    double s{0.0};
    std::vector<double> phase;
    double objective{0.0};
    std::array<double, 2> constraint_values{};  // ℰ(s, t_i), ℰ(s, t_f)
    double step{0.0};
    std::size_t iteration{0};
    OptimizerStatus status{OptimizerStatus::running};
    std::size_t rank_deficient_iterations{0};
    std::vector<IterationRecord> history;
};

struct OptimizationResult {
    SpectralField field;
    OptimizationState state;
};

using ProgressCallback = std::function<void(const IterationRecord&)>;

namespace detail {

// Newton correction of `phase` back onto the endpoint constraints, along the
// filtered constraint gradients so the correction is as smooth as the flow.
inline void project_constraints(const SpectralField& field, std::vector<double>& phase, const TimeGrid& tgrid,
                                const std::array<double, 2>& reference, const OptimizerConfig& config,
                                std::span<const double> mask) {
    const auto& grid = field.grid();
    const auto amp = field.amplitude();
    const auto w = grid.trapezoid_weights();
    double scale = 0.0;
    for (std::size_t k = 0; k < amp.size(); ++k) scale += w[k] * amp[k];
    const double tol = config.projection_tolerance * scale;
    const std::array<double, 2> times{tgrid.t_start(), tgrid.t_end()};
    for (std::size_t it = 0; it < config.projection_iterations; ++it) {
        Eigen::Vector2d c;
        std::array<std::vector<double>, 2> g, kg;
        for (std::size_t m = 0; m < 2; ++m) {
            c(static_cast<Eigen::Index>(m)) = 0.0;
            for (std::size_t k = 0; k < amp.size(); ++k) {
                c(static_cast<Eigen::Index>(m)) += w[k] * amp[k] * std::cos(grid[k] * times[m] - phase[k]);
            }
            c(static_cast<Eigen::Index>(m)) -= reference[m];
        }
        if (c.cwiseAbs().maxCoeff() <= tol) return;
        for (std::size_t m = 0; m < 2; ++m) {
            g[m].resize(amp.size());
            for (std::size_t k = 0; k < amp.size(); ++k) g[m][k] = amp[k] * std::sin(grid[k] * times[m] - phase[k]);
            kg[m] = apply_filter(g[m], config.filter, grid);
            for (std::size_t k = 0; k < amp.size(); ++k) kg[m][k] *= mask[k];
            // Under a kernel much wider than the spectrum K g_m is cancellation
            // noise, and a Newton step along it moves the phase by O(1 rad) to
            // fix a drift of 1e-9. Correct that row with the plain gradient.
            std::vector<double> ag(amp.size());
            for (std::size_t k = 0; k < amp.size(); ++k) ag[k] = std::abs(g[m][k]);
            const double resolved = weighted_dot(g[m], kg[m], grid);
            const double magnitude = weighted_dot(ag, apply_filter(ag, config.filter, grid), grid);
            if (!(resolved > kGammaResolution * magnitude)) {
                for (std::size_t k = 0; k < amp.size(); ++k) kg[m][k] = mask[k] * g[m][k];
            }
        }
        Eigen::Matrix2d gram;
        for (int a = 0; a < 2; ++a) {
            for (int b = 0; b < 2; ++b) gram(a, b) = weighted_dot(g[static_cast<std::size_t>(a)], kg[static_cast<std::size_t>(b)], grid);
        }
        std::size_t rank = 0;
        const Eigen::MatrixXd pinv = scaled_pseudo_inverse(gram, config.gamma_rcond, rank);
        const Eigen::VectorXd lam = pinv * c;
        // dℰ(t)/dφ_k = w_k g_k, so Δφ = -Σ λ_m K g_m lowers c by λ·Gram to first order.
        for (std::size_t k = 0; k < phase.size(); ++k) {
            phase[k] -= lam(0) * kg[0][k] + lam(1) * kg[1][k];
        }
    }
}

}  // namespace detail

inline OptimizationResult optimize(const QuantumSystem& system, const SpectralField& spectral0, const TimeGrid& tgrid,
                                   std::size_t initial, std::size_t target, const OptimizerConfig& config,
                                   const ProgressCallback& progress = {}) {
    config.validate();
    if (initial >= system.levels() || target >= system.levels()) {
        throw std::out_of_range("optimize: level index out of range");
    }
    const auto& grid = spectral0.grid();
    const double t_i = tgrid.t_start();
    const double t_f = tgrid.t_end();
    const auto init_state = StateVector::basis(system.levels(), initial);

    SpectralField field = spectral0;
    const double e_i0 = field_at(field, t_i);
    const double e_f0 = field_at(field, t_f);

    OptimizationState st;
    st.phase.assign(field.phase().begin(), field.phase().end());

    auto evaluate_objective = [&](const SpectralField& f) {
        const auto psi = final_state(system, synthesize_steps(f, tgrid), init_state);
        return std::norm(psi(static_cast<Eigen::Index>(target)));
    };

    GradientBundle bundle;
    auto refresh = [&]() {
        auto pg = objective_phase_gradient(system, field, tgrid, initial, target);
        st.objective = pg.objective;
        bundle.dQ0_dphi = std::move(pg.density);
        std::tie(bundle.dQ1_dphi, bundle.dQ2_dphi) = constraint_gradients(field, t_i, t_f);
        st.constraint_values = {field_at(field, t_i), field_at(field, t_f)};
    };
    refresh();

    auto record = [&](double step, const UpdateDirection* dir) {
        IterationRecord r;
        r.iteration = st.iteration;
        r.s = st.s;
        r.objective = st.objective;
        r.step = step;
        r.drift_ti = st.constraint_values[0] - e_i0;
        r.drift_tf = st.constraint_values[1] - e_f0;
        if (dir) {
            r.gamma_asymmetry = dir->gamma.asymmetry();
            r.gamma_psd_defect = dir->gamma.psd_defect();
            r.gamma_rank_deficient = dir->rank_deficient;
        }
        st.history.push_back(r);
        if (progress) progress(r);
    };
    record(0.0, nullptr);

    std::vector<double> mask(grid.size(), 1.0);
    {
        const auto amp = field.amplitude();
        const double peak = field.max_amplitude();
        for (std::size_t k = 0; k < mask.size(); ++k) {
            if (amp[k] < config.support_threshold * peak) mask[k] = 0.0;
        }
    }

    double gain_scale = config.initial_step;  // predicted objective gain per trial step
    std::size_t stalled = 0;
    while (true) {
        if (st.objective >= config.target_objective) {
            st.status = OptimizerStatus::converged;
            break;
        }
        if (st.iteration >= config.max_iterations) {
            st.status = OptimizerStatus::max_iterations;
            break;
        }
        const auto dir = update_direction(bundle, config.filter, grid, config, field.amplitude());
        if (dir.rank_deficient) ++st.rank_deficient_iterations;
        const double rate = weighted_dot(bundle.dQ0_dphi, dir.direction, grid);
        double dmax = 0.0;
        for (double x : dir.direction) dmax = std::max(dmax, std::abs(x));
        if (!(rate > 0.0) || !std::isfinite(rate) || dmax == 0.0 || rate / dmax <= config.zero_gradient_tolerance) {
            st.status = OptimizerStatus::zero_gradient;
            break;
        }

        std::optional<SpectralField> accepted;
        double accepted_objective = st.objective;
        double ds = 0.0;
        std::vector<double> trial(st.phase.size());
        gain_scale = std::min(gain_scale, std::max(1.0 - st.objective, config.min_step));
        while (gain_scale >= config.min_step) {
            ds = std::min(gain_scale / rate, config.max_phase_step / dmax);
            for (std::size_t k = 0; k < trial.size(); ++k) trial[k] = st.phase[k] + ds * dir.direction[k];
            if (config.constraints_enabled) detail::project_constraints(field, trial, tgrid, {e_i0, e_f0}, config, mask);
            auto candidate = field.with_phase(trial);
            const double p = evaluate_objective(candidate);
            if (p > st.objective) {
                accepted = std::move(candidate);
                accepted_objective = p;
                break;
            }
            gain_scale = std::min(gain_scale, ds * rate) * config.step_shrink;
        }
        if (!accepted) {
            st.status = OptimizerStatus::stagnated;
            break;
        }

        const double gain = accepted_objective - st.objective;
        const double predicted = ds * rate;
        if (gain > 0.5 * predicted) gain_scale = predicted * config.step_grow;
        else gain_scale = predicted;
        stalled = gain < config.stall_tolerance ? stalled + 1 : 0;

        field = std::move(*accepted);
        st.phase = trial;
        st.s += ds;
        st.step = ds;
        ++st.iteration;
        refresh();
        record(ds, &dir);
        if (stalled >= config.stall_iterations) {
            st.status = st.objective >= config.target_objective ? OptimizerStatus::converged : OptimizerStatus::stagnated;
            break;
        }
    }
    return {field, st};
}

}  // namespace spoo
