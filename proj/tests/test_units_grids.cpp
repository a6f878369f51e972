#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "spoo/grid.hpp"
#include "spoo/units.hpp"

using namespace spoo;

TEST(Units, TimeConversionValues) {
    EXPECT_EQ(units::to_atomic_time(0.0), 0.0);
    // CODATA 2018: atomic unit of time 2.4188843265857e-17 s. The pinned
    // factor is an older, widely copied value 3e-8 above it.
    const double au_per_fs = 1e-15 / 2.4188843265857e-17;
    EXPECT_NEAR(units::to_atomic_time(10.0), 10.0 * au_per_fs, 1e-7 * 10.0 * au_per_fs);
    EXPECT_NEAR(units::to_atomic_time(10.0), 413.41374575751, 1e-10);
    EXPECT_NEAR(units::to_atomic_time(1000.0), 41341.374575751, 1e-8);
}

TEST(Units, WavenumberConversionValues) {
    EXPECT_EQ(units::wavenumber_to_angular_frequency(0.0), 0.0);
    // E = h c ν̃ in Hartree: 100 h c / E_h, CODATA 2018
    const double h = 6.62607015e-34, c = 299792458.0, hartree = 4.3597447222071e-18;
    const double per_invcm = 100.0 * h * c / hartree;
    EXPECT_NEAR(units::wavenumber_to_angular_frequency(12500.0), 12500.0 * per_invcm, 1e-12);
    EXPECT_NEAR(units::wavenumber_to_angular_frequency(12500.0), 5.6954190661e-2, 1e-12);
    // the often quoted 5.8396506e-2 is off in the seventh digit
    EXPECT_NEAR(units::wavenumber_to_angular_frequency(12816.55), 5.83964985856e-2, 1e-13);
    EXPECT_NEAR(units::wavenumber_to_angular_frequency(12578.95), 5.73139133295e-2, 1e-13);
}

TEST(Units, RoundTrips) {
    for (double x : {1e-3, 0.7, 10.0, 898.0, 12727.39, 4.2e6}) {
        EXPECT_NEAR(units::to_femtoseconds(units::to_atomic_time(x)), x, 1e-12 * x);
        EXPECT_NEAR(units::angular_frequency_to_wavenumber(units::wavenumber_to_angular_frequency(x)), x, 1e-12 * x);
        EXPECT_NEAR(units::atomic_to_fs2(units::fs2_to_atomic(x)), x, 1e-12 * x);
    }
}

TEST(Grids, PaperResolutionStep) {
    const double w0 = units::wavenumber_to_angular_frequency(12500.0);
    const double dw = 1.0 / units::to_atomic_time(10.0);
    auto [t, w] = make_grids(units::to_atomic_time(1000.0), 320000, w0, 5 * dw, 2048);
    EXPECT_NEAR(t.dt(), 41341.374575751 / 319999.0, 1e-12);
    EXPECT_NEAR(t.dt(), 0.1292, 1e-4);
    EXPECT_DOUBLE_EQ(t.t_start(), -t.t_end());
    EXPECT_EQ(w.n_points(), 2048u);
    EXPECT_NEAR(w.omega_min(), w0 - 5 * dw, 1e-15);
    EXPECT_NEAR(w.omega_max(), w0 + 5 * dw, 1e-15);
}

TEST(Grids, MinimalTwoPointGrids) {
    auto [t, w] = make_grids(units::to_atomic_time(1000.0), 2, 0.05, 0.01, 2);
    EXPECT_EQ(t.size(), 2u);
    EXPECT_EQ(w.size(), 2u);
    EXPECT_EQ(t.n_cells(), 1u);
    EXPECT_DOUBLE_EQ(t.dt(), t.t_end() - t.t_start());
}

TEST(Grids, RejectsBadArguments) {
    EXPECT_THROW(make_grids(-1.0, 100, 0.05, 0.01, 64), std::invalid_argument);
    EXPECT_THROW(make_grids(0.0, 100, 0.05, 0.01, 64), std::invalid_argument);
    EXPECT_THROW(make_grids(10.0, 1, 0.05, 0.01, 64), std::invalid_argument);
    EXPECT_THROW(make_grids(10.0, 100, 0.05, 0.01, 1), std::invalid_argument);
    EXPECT_THROW(make_grids(10.0, 100, -0.05, 0.01, 64), std::invalid_argument);
    EXPECT_THROW(make_grids(10.0, 100, 0.05, 0.0, 64), std::invalid_argument);
}

TEST(Grids, FrequencyGridClampedAtZero) {
    auto [t, w] = make_grids(10.0, 16, 0.01, 0.05, 64);
    EXPECT_EQ(w.omega_min(), 0.0);
}

TEST(Grids, SpacingIsExactlyUniform) {
    TimeGrid g(-20670.6872878755, 20670.6872878755, 65536);
    const double dt = g.dt();
    EXPECT_GT(dt, 0.0);
    double worst = 0.0;
    for (std::size_t j = 0; j + 1 < g.size(); ++j) {
        // index arithmetic: every node is start + j*dt, recomputed independently
        worst = std::max(worst, std::abs(g[j] - (g.t_start() + static_cast<double>(j) * dt)));
    }
    EXPECT_EQ(worst, 0.0);
    EXPECT_EQ(g[g.size() - 1], g.t_end());
}

TEST(Grids, TrapezoidWeightsIntegrateLinearExactly) {
    FrequencyGrid w(0.03, 0.09, 257);
    const auto wt = w.trapezoid_weights();
    double total = std::accumulate(wt.begin(), wt.end(), 0.0);
    EXPECT_NEAR(total, 0.06, 1e-15);
    double lin = 0.0;
    for (std::size_t k = 0; k < w.size(); ++k) lin += wt[k] * w[k];
    EXPECT_NEAR(lin, 0.5 * (0.09 * 0.09 - 0.03 * 0.03), 1e-15);
}
