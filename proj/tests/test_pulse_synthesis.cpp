#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "spoo/diagnostics.hpp"
#include "spoo/synthesis.hpp"
#include "support.hpp"

using namespace spoo;
namespace ts = testing_support;

namespace {

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

}  // namespace

TEST(GaussianAmplitude, PeakRatioAndArea) {
    auto s = ts::two_level(0.6e-2, 1000.0, 1024, 2048, 5.0);
    const double dw = ts::delta_omega();
    const double peak = 0.6e-2 / std::sqrt(2.0 * std::numbers::pi * dw * dw);
    EXPECT_NEAR(gaussian_amplitude_at(s.field.params(), ts::omega_two_level()), peak, 1e-14 * peak);
    EXPECT_NEAR(gaussian_amplitude_at(s.field.params(), ts::omega_two_level() + dw) / peak, std::exp(-0.5), 1e-14);
    EXPECT_NEAR(std::exp(-0.5), 0.60653, 1e-5);

    const auto w = s.fgrid.trapezoid_weights();
    const auto amp = s.field.amplitude();
    double area = 0.0;
    for (std::size_t k = 0; k < amp.size(); ++k) area += w[k] * amp[k];
    EXPECT_NEAR(area, 0.6e-2, 1e-5 * 0.6e-2);
}

TEST(GaussianAmplitude, MatchesFormulaEverywhereAndZeroPhase) {
    auto s = ts::two_level(1.0e-2);
    auto f = gaussian_amplitude(1.0e-2, ts::omega_two_level(), ts::delta_omega(), s.fgrid);
    const double dw = ts::delta_omega();
    for (std::size_t k = 0; k < f.size(); ++k) {
        const double x = (s.fgrid[k] - ts::omega_two_level()) / dw;
        const double expect = 1.0e-2 / std::sqrt(2.0 * std::numbers::pi) / dw * std::exp(-0.5 * x * x);
        EXPECT_NEAR(f.amplitude()[k], expect, 1e-12 * expect);
        EXPECT_EQ(f.phase()[k], 0.0);
    }
}

TEST(GaussianAmplitude, RejectsNonPositiveParameters) {
    auto s = ts::two_level(1e-2, 100.0, 64, 64);
    EXPECT_THROW(gaussian_amplitude(0.0, ts::omega_two_level(), ts::delta_omega(), s.fgrid), std::invalid_argument);
    EXPECT_THROW(gaussian_amplitude(-1e-3, ts::omega_two_level(), ts::delta_omega(), s.fgrid), std::invalid_argument);
    EXPECT_THROW(gaussian_amplitude(1e-3, ts::omega_two_level(), 0.0, s.fgrid), std::invalid_argument);
}

TEST(Synthesize, TransformLimitedPulse) {
    auto s = ts::two_level(0.6e-2, 200.0, 8192);
    const auto f = synthesize(s.field, s.tgrid);
    const double tau = ts::tau0(), w0 = ts::omega_two_level();
    double worst = 0.0;
    for (std::size_t j = 0; j < s.tgrid.size(); ++j) {
        const double t = s.tgrid[j];
        worst = std::max(worst, std::abs(f.values[j] - 0.6e-2 * std::exp(-t * t / (2 * tau * tau)) * std::cos(w0 * t)));
    }
    EXPECT_LT(worst, 1e-6 * 0.6e-2);
}

TEST(Synthesize, ConstantPhaseShiftsCarrierOnly) {
    auto s = ts::two_level(0.6e-2, 200.0, 4096);
    const double c = 0.83;
    const auto f = synthesize(s.field.with_phase(std::vector<double>(s.fgrid.size(), c)), s.tgrid);
    const double tau = ts::tau0(), w0 = ts::omega_two_level();
    double worst = 0.0;
    for (std::size_t j = 0; j < s.tgrid.size(); ++j) {
        const double t = s.tgrid[j];
        worst = std::max(worst, std::abs(f.values[j] - 0.6e-2 * std::exp(-t * t / (2 * tau * tau)) * std::cos(w0 * t - c)));
    }
    EXPECT_LT(worst, 1e-6 * 0.6e-2);
}

TEST(Synthesize, LinearPhaseTranslatesEnvelope) {
    auto s = ts::two_level(0.6e-2, 400.0, 8192);
    const double shift = units::to_atomic_time(37.0);
    const auto f = synthesize(s.field.with_phase(polynomial_phase(s.fgrid, ts::omega_two_level(), 0.0, shift)), s.tgrid);
    const double tau = ts::tau0(), w0 = ts::omega_two_level();
    double worst = 0.0;
    for (std::size_t j = 0; j < s.tgrid.size(); ++j) {
        const double u = s.tgrid[j] - shift;
        worst = std::max(worst, std::abs(f.values[j] - 0.6e-2 * std::exp(-u * u / (2 * tau * tau)) * std::cos(w0 * s.tgrid[j])));
    }
    EXPECT_LT(worst, 1e-6 * 0.6e-2);
}

TEST(Synthesize, FastPathMatchesDirectSum) {
    auto s = ts::two_level(1.0e-2, 1000.0, 3001, 512);
    const auto field = s.field.with_phase(ts::wiggly_phase(s.fgrid, ts::omega_two_level(), 700.0, 2.0));
    const auto fast = synthesize(field, s.tgrid);
    const auto direct = synthesize_direct(field, s.tgrid.points());
    EXPECT_LT(max_abs_diff(fast.values, direct), 1e-12 * 1.0e-2);

    const auto sf = synthesize_steps(field, s.tgrid);
    std::vector<double> te(s.tgrid.n_cells()), tl(s.tgrid.n_cells());
    for (std::size_t j = 0; j < te.size(); ++j) {
        te[j] = sf.early_time(j);
        tl[j] = sf.late_time(j);
    }
    EXPECT_LT(max_abs_diff(sf.early, synthesize_direct(field, te)), 1e-12 * 1.0e-2);
    EXPECT_LT(max_abs_diff(sf.late, synthesize_direct(field, tl)), 1e-12 * 1.0e-2);
}

TEST(Synthesize, WarnsWhenBandIsTruncated) {
    std::vector<std::string> seen;
    auto old = set_warning_handler([&](const std::string& m) { seen.push_back(m); });
    auto s = ts::two_level(1e-2, 100.0, 256, 128, 2.0);
    (void)synthesize(s.field, s.tgrid);
    set_warning_handler(old);
    ASSERT_FALSE(seen.empty());
    EXPECT_NE(seen.front().find("edge"), std::string::npos);
}

TEST(ChirpedPulse, DerivedQuantities) {
    const double tau0 = ts::tau0();
    ChirpedPulseParams zero{1e-2, tau0, 0.0, 0.05};
    EXPECT_EQ(zero.tau(), tau0);
    EXPECT_EQ(zero.f(), 1.0);
    EXPECT_EQ(zero.varphi(), 0.0);
    EXPECT_EQ(zero.beta(), 0.0);

    ChirpedPulseParams sq{1e-2, tau0, tau0 * tau0, 0.05};
    EXPECT_NEAR(sq.tau(), tau0 * std::sqrt(2.0), 1e-12 * tau0);
    EXPECT_NEAR(sq.f(), std::pow(2.0, -0.25), 1e-15);

    for (double b : {-4000.0, -898.0, -1.0, 1.0, 100.0, 1044.0, 4161.0}) {
        ChirpedPulseParams p{1e-2, tau0, units::fs2_to_atomic(b), 0.05};
        EXPECT_GT(p.tau(), tau0);
        EXPECT_LE(p.f(), 1.0);
        EXPECT_NEAR(p.f() * std::sqrt(p.tau() / tau0), 1.0, 1e-14);
        EXPECT_GT(p.varphi(), -std::numbers::pi / 2);
        EXPECT_LT(p.varphi(), std::numbers::pi / 2);
        // principal branch of sqrt(τ0²/(τ0² - iβ0))
        const auto z = std::sqrt(std::complex<double>(tau0 * tau0) / std::complex<double>(tau0 * tau0, -p.beta0));
        EXPECT_NEAR(std::abs(z), p.f(), 1e-14);
        EXPECT_NEAR(-std::arg(z), p.varphi(), 1e-14);
    }
}

TEST(ChirpedPulse, ClosedFormMatchesQuadratureSynthesis) {
    const double w0 = ts::omega_two_level();
    auto [tg, fg] = make_grids(units::to_atomic_time(4000.0), 40001, w0, 6.0 * ts::delta_omega(), 2048);
    const SpectralField base(fg, GaussianSpectrum{1e-2, w0, ts::delta_omega()});
    for (double b : {0.0, 500.0, -500.0, 1000.0, -1000.0, 4000.0, -4000.0}) {
        const double beta0 = units::fs2_to_atomic(b);
        const auto synth = synthesize(base.with_phase(polynomial_phase(fg, w0, beta0)), tg);
        const auto closed = chirped_field({1e-2, ts::tau0(), beta0, w0}, tg);
        EXPECT_LT(max_abs_diff(synth.values, closed.values), 1e-5 * 1e-2) << "beta0 = " << b << " fs2";
    }
}

TEST(ChirpedPulse, RejectsNonPositiveTau) {
    TimeGrid g(-1.0, 1.0, 3);
    EXPECT_THROW(chirped_field({1e-2, 0.0, 0.0, 0.05}, g), std::invalid_argument);
}

TEST(SetPhase, RoundTripAndValidation) {
    auto s = ts::two_level(1e-2, 100.0, 64, 256);
    const auto ph = ts::wiggly_phase(s.fgrid, ts::omega_two_level(), 300.0, 1.0);
    const auto f = set_phase(s.field, ph);
    ASSERT_EQ(f.phase().size(), ph.size());
    for (std::size_t k = 0; k < ph.size(); ++k) EXPECT_EQ(f.phase()[k], ph[k]);

    EXPECT_THROW(set_phase(s.field, std::vector<double>(ph.size() - 1, 0.0)), std::invalid_argument);
    auto bad = ph;
    bad[17] = std::nan("");
    EXPECT_THROW(set_phase(s.field, bad), std::invalid_argument);
    bad[17] = INFINITY;
    EXPECT_THROW(set_phase(s.field, bad), std::invalid_argument);

    const auto zero = synthesize(set_phase(f, std::vector<double>(ph.size(), 0.0)), s.tgrid);
    const auto tl = synthesize(s.field, s.tgrid);
    EXPECT_EQ(zero.values, tl.values);
}

TEST(SetPhase, AmplitudeNeverChanges) {
    auto s = ts::two_level(1e-2, 100.0, 64, 256);
    const std::vector<double> before(s.field.amplitude().begin(), s.field.amplitude().end());
    SpectralField f = s.field;
    for (int i = 0; i < 5; ++i) {
        f = f.with_phase(ts::wiggly_phase(s.fgrid, ts::omega_two_level(), 100.0 * i, 0.3 * i));
        EXPECT_TRUE(f.shares_amplitude_with(s.field));
    }
    for (std::size_t k = 0; k < before.size(); ++k) {
        EXPECT_EQ(f.amplitude()[k], before[k]);
        EXPECT_GE(f.amplitude()[k], 0.0);
    }
}

TEST(SetPhase, ChirpStretchesPulseDuration) {
    auto s = ts::two_level(0.6e-2, 1000.0, 32768);
    const double beta0 = units::fs2_to_atomic(898.0);
    const auto f = synthesize(s.field.with_phase(polynomial_phase(s.fgrid, ts::omega_two_level(), beta0)), s.tgrid);
    // rms duration from the intensity: ⟨t²⟩ = τ²/2 for a Gaussian envelope
    double m0 = 0.0, m2 = 0.0;
    for (std::size_t j = 0; j < s.tgrid.size(); ++j) {
        const double t = s.tgrid[j], e2 = f.values[j] * f.values[j];
        m0 += e2;
        m2 += e2 * t * t;
    }
    const double tau_measured = std::sqrt(2.0 * m2 / m0);
    const double tau0 = ts::tau0();
    const double expect = tau0 * std::sqrt(1.0 + beta0 * beta0 / (tau0 * tau0 * tau0 * tau0));
    EXPECT_NEAR(tau_measured / expect, 1.0, 1e-3);
}

TEST(Synthesize, FieldEnergyInvariantUnderPhase) {
    auto s = ts::two_level(1e-2, 2000.0, 65536);
    auto energy = [&](const SpectralField& f) {
        const auto v = synthesize(f, s.tgrid).values;
        const auto w = s.tgrid.trapezoid_weights();
        double e = 0.0;
        for (std::size_t j = 0; j < v.size(); ++j) e += w[j] * v[j] * v[j];
        return e;
    };
    const double e_tl = energy(s.field);
    for (double b : {-800.0, 300.0, 1500.0}) {
        for (double wig : {0.0, 1.5}) {
            const double e = energy(s.field.with_phase(ts::wiggly_phase(s.fgrid, ts::omega_two_level(), b, wig)));
            EXPECT_NEAR(e / e_tl, 1.0, 1e-4) << "beta " << b << " wiggle " << wig;
        }
    }
}
