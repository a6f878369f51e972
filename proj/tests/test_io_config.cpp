#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include <unistd.h>

#include "spoo/experiments.hpp"
#include "support.hpp"

using namespace spoo;
namespace ts = testing_support;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
    auto p = fs::temp_directory_path() / ("spoo_test_" + name + "_" + std::to_string(::getpid()));
    fs::remove_all(p);
    return p;
}

json minimal_config() {
    return json::parse(R"({
      "name": "t",
      "system": {"preset": "two_level_12500"},
      "pulse": {"e0_au": 0.006, "tau0_fs": 10.0, "resonant_with": [1, 2]},
      "window": {"duration_fs": 300.0, "n_steps": 4096, "n_freq": 512},
      "task": {"initial_level": 1, "target_level": 2}
    })");
}

bool mentions(const std::vector<std::string>& diags, const std::string& what) {
    for (const auto& d : diags) {
        if (d.find(what) != std::string::npos) return true;
    }
    return false;
}

}  // namespace

TEST(Sha256, KnownVectors) {
    EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Csv, NumberFormattingRoundTrips) {
    for (double x : {0.0, -1.0, 1.0 / 3.0, 6.02214076e23, 5e-324, -2.5e-17}) {
        EXPECT_EQ(parse_csv("x\n" + format_number(x) + "\n").rows.at(0).at(0), x);
    }
    EXPECT_EQ(format_number(std::nan("")), "nan");
}

TEST(Csv, SpectralFieldRoundTrip) {
    auto s = ts::two_level(0.6e-2, 1000.0, 64, 512);
    const auto f = s.field.with_phase(ts::wiggly_phase(s.fgrid, s.field.omega0(), 911.3, 0.7));
    const auto text = spectral_field_csv(f).str();
    EXPECT_EQ(text.substr(0, text.find('\n')), "omega_invcm,amplitude_au,phase_rad");
    const auto phase = read_spectral_phase(text, f);
    for (std::size_t k = 0; k < phase.size(); ++k) EXPECT_EQ(phase[k], f.phase()[k]);
    const auto data = parse_csv(text);
    for (std::size_t k = 0; k < f.size(); ++k) EXPECT_EQ(data.rows[k][1], f.amplitude()[k]);

    auto other = ts::two_level(0.6e-2, 1000.0, 64, 256);
    EXPECT_THROW(read_spectral_phase(text, other.field), std::invalid_argument);
}

TEST(Csv, RejectsMalformedInput) {
    EXPECT_THROW(parse_csv(""), std::invalid_argument);
    EXPECT_THROW(parse_csv("a,b\n1,2\n3\n"), std::invalid_argument);
    EXPECT_THROW(parse_csv("a,b\n1,x\n"), std::invalid_argument);
    EXPECT_THROW(parse_csv("a,b\n1,2\n").column("c"), std::invalid_argument);
    CsvTable t({"a", "b"});
    EXPECT_THROW(t.add_row({1.0}), std::invalid_argument);
    const auto ok = parse_csv("a, b\r\n1, 2.5\r\n\r\n");
    EXPECT_EQ(ok.header[1], "b");
    EXPECT_EQ(ok.rows.at(0)[1], 2.5);
}

TEST(Csv, ArtifactHeaders) {
    auto s = ts::two_level(0.0, 100.0, 257, 128);
    const auto rec = propagate(s.system, synthesize_steps(s.field, s.tgrid), StateVector::basis(2, 0), 16);
    const auto pops = parse_csv(populations_csv(rec).str());
    EXPECT_EQ(pops.header, (std::vector<std::string>{"time_fs", "pop_1", "pop_2"}));
    for (const auto& r : pops.rows) {
        EXPECT_EQ(r[1], 1.0);
        EXPECT_EQ(r[2], 0.0);
    }
    EXPECT_NEAR(pops.rows.front()[0], -50.0, 1e-12);
    EXPECT_NEAR(pops.rows.back()[0], 50.0, 1e-12);

    EXPECT_EQ(parse_csv(history_csv({IterationRecord{}}).str()).header,
              (std::vector<std::string>{"iteration", "s", "objective", "step", "constraint_drift_ti", "constraint_drift_tf"}));
    RobustnessScan scan{{1e-3}, {0.25}, {0.75}};
    EXPECT_EQ(robustness_csv(scan).str(), "e0_au,probability,infidelity\n0.001,0.25,0.75\n");
    QuadraticFit flat;
    const auto fit_text = fit_csv(flat).str();
    EXPECT_EQ(fit_text.substr(0, fit_text.find('\n')), "omega_c_invcm,beta0_fs2,phi1,offset,residual");
    EXPECT_EQ(fit_text.substr(fit_text.find('\n') + 1, 4), "nan,");
    const auto tf = temporal_field_csv(synthesize(s.field, s.tgrid), 100);
    const auto tfd = parse_csv(tf.str());
    EXPECT_EQ(tfd.header, (std::vector<std::string>{"time_fs", "field_au"}));
    EXPECT_EQ(tfd.rows.size(), 4u);  // nodes 0, 100, 200 and the last
}

TEST(AtomicWrite, CreatesReplacesAndLeavesNoPartial) {
    const auto dir = scratch_dir("atomic");
    const auto file = dir / "nested" / "a.csv";
    write_file_atomic(file, "first\n");
    EXPECT_EQ(read_file(file), "first\n");
    write_file_atomic(file, "second\n");
    EXPECT_EQ(read_file(file), "second\n");
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
        EXPECT_EQ(e.path().string().find(".partial"), std::string::npos);
    }
    // parent is a regular file
    EXPECT_THROW(write_file_atomic(file / "x.csv", "y"), IoError);
    EXPECT_THROW(read_file(dir / "missing.csv"), IoError);
    fs::remove_all(dir);
}

TEST(Config, PresetConfigIsValid) {
    const auto c = parse_config(minimal_config());
    EXPECT_TRUE(validate_config(c).empty());
    EXPECT_EQ(c.initial, 0u);
    EXPECT_EQ(c.target, 1u);
    EXPECT_NEAR(c.omega0, units::wavenumber_to_angular_frequency(12500.0), 1e-15);
    EXPECT_NEAR(c.tau0, units::to_atomic_time(10.0), 1e-12);
    EXPECT_FALSE(c.optimizer.filter.enabled);
}

TEST(Config, NegativeStrengthIsNamed) {
    auto j = minimal_config();
    j["pulse"]["e0_au"] = -0.01;
    const auto d = validate_config(parse_config(j));
    ASSERT_FALSE(d.empty());
    EXPECT_TRUE(mentions(d, "pulse.e0_au"));
    EXPECT_TRUE(mentions(d, ">= 0"));
}

TEST(Config, MissingLevelsAndBadGrids) {
    auto j = minimal_config();
    j["task"]["target_level"] = 3;
    EXPECT_TRUE(mentions(validate_config(parse_config(j)), "task.target_level"));

    j = minimal_config();
    j["window"]["n_steps"] = 200;
    EXPECT_TRUE(mentions(validate_config(parse_config(j)), "window.n_steps"));

    j = minimal_config();
    j["window"]["n_freq"] = 16;
    EXPECT_TRUE(mentions(validate_config(parse_config(j)), "window.n_freq"));

    j = minimal_config();
    j["window"]["freq_halfwidth_bandwidths"] = 3.0;
    EXPECT_TRUE(mentions(validate_config(parse_config(j)), "band edge"));

    j = minimal_config();
    j["pulse"]["resonant_with"] = {1, 5};
    EXPECT_THROW(parse_config(j), ConfigError);
}

TEST(Config, SchemaErrors) {
    auto j = minimal_config();
    j["pulse"]["e0"] = 0.01;  // unit suffix missing
    EXPECT_THROW(parse_config(j), ConfigError);

    j = minimal_config();
    j["window"].erase("duration_fs");
    EXPECT_THROW(parse_config(j), ConfigError);

    j = minimal_config();
    j["pulse"]["omega0_invcm"] = 12500.0;
    EXPECT_THROW(parse_config(j), ConfigError);

    j = minimal_config();
    j["system"] = {{"preset", "hydrogen"}};
    EXPECT_THROW(parse_config(j), ConfigError);

    j = minimal_config();
    j["pulse"]["tau0_fs"] = "ten";
    EXPECT_THROW(parse_config(j), ConfigError);
}

TEST(Config, ExplicitSystemAndDetuning) {
    auto j = minimal_config();
    j["system"] = json::parse(R"({"energies_invcm": [0, 12578.95, 12816.55],
                                  "dipole_au": [[0, 2.9931, 4.2275], [2.9931, 0, 0], [4.2275, 0, 0]]})");
    j["pulse"]["resonant_with"] = {1, 3};
    j["pulse"]["detuning_invcm"] = 10.0;
    const auto c = parse_config(j);
    EXPECT_EQ(c.energies.size(), 3u);
    EXPECT_NEAR(c.omega0, units::wavenumber_to_angular_frequency(12816.55 - 10.0), 1e-15);
    EXPECT_EQ(c.dipole(0, 2), 4.2275);
}

TEST(Config, Overrides) {
    auto j = minimal_config();
    apply_override(j, "pulse.e0_au=0.01");
    apply_override(j, "optimizer.filter_sigma_invcm=20000");
    apply_override(j, "name=renamed");
    apply_override(j, "initial_phase.chirp_candidates_fs2=[-1000, 0, 1000]");
    const auto c = parse_config(j);
    EXPECT_EQ(c.e0, 0.01);
    EXPECT_TRUE(c.optimizer.filter.enabled);
    EXPECT_EQ(c.name, "renamed");
    EXPECT_EQ(c.chirp_candidates.size(), 3u);
    EXPECT_NEAR(c.chirp_candidates[0], units::fs2_to_atomic(-1000.0), 1e-6);
    EXPECT_THROW(apply_override(j, "novalue"), ConfigError);
    EXPECT_THROW(apply_override(j, "pulse..x=1"), ConfigError);
    EXPECT_THROW(apply_override(j, "name.sub=1"), ConfigError);
}

TEST(Pipeline, DeterministicArtifactsAndCompleteManifest) {
    auto j = minimal_config();
    j["optimizer"] = {{"filter_sigma_invcm", 2e4}, {"target_objective", 0.999}, {"max_iterations", 40}};
    j["initial_phase"] = {{"chirp_candidates_fs2", {1.0, 50.0}}};
    j["scan"] = {{"points", 5}};
    j["analysis"] = {{"tf_time_points", 21}, {"tf_omega_points", 21}};
    std::vector<std::vector<Artifact>> runs;
    for (int r = 0; r < 2; ++r) {
        const auto dir = scratch_dir("pipeline" + std::to_string(r));
        j["outputs"] = {{"directory", dir.string()}};
        auto c = parse_config(j);
        const auto res = run_scenario(c);
        runs.push_back(res.artifacts);
        const auto manifest = json::parse(read_file(res.manifest));
        EXPECT_EQ(manifest["config"]["pulse"]["e0_au"], 0.006);
        EXPECT_TRUE(manifest.contains("timings_s"));
        EXPECT_TRUE(manifest["convergence"].contains("status"));
        std::set<std::string> listed;
        for (const auto& a : manifest["artifacts"]) {
            listed.insert(a["file"].get<std::string>());
            EXPECT_EQ(sha256_hex(read_file(dir / a["file"].get<std::string>())), a["sha256"].get<std::string>());
        }
        for (const auto& e : fs::directory_iterator(dir)) {
            const auto name = e.path().filename().string();
            if (name != "manifest.json") {
                EXPECT_TRUE(listed.count(name)) << name;
            }
        }
        for (const char* f : {"spectral_initial.csv", "spectral_optimized.csv", "history.csv", "populations.csv",
                              "temporal_field.csv", "robustness.csv", "fit.csv", "adiabatic.csv", "time_frequency.csv"}) {
            EXPECT_TRUE(listed.count(f)) << f;
        }
        fs::remove_all(dir);
    }
    ASSERT_EQ(runs[0].size(), runs[1].size());
    for (std::size_t i = 0; i < runs[0].size(); ++i) {
        EXPECT_EQ(runs[0][i].file, runs[1][i].file);
        EXPECT_EQ(runs[0][i].sha256, runs[1][i].sha256) << runs[0][i].file;
    }
}

TEST(Pipeline, ZeroFieldScenario) {
    auto j = minimal_config();
    j["pulse"]["e0_au"] = 0.0;
    j["optimizer"] = {{"filter_sigma_invcm", 2e4}, {"max_iterations", 10}};
    const auto dir = scratch_dir("zero");
    j["outputs"] = {{"directory", dir.string()}};
    const auto r = run_scenario(parse_config(j));
    EXPECT_EQ(r.status, OptimizerStatus::zero_gradient);
    EXPECT_EQ(r.objective, 0.0);
    EXPECT_FALSE(r.converged);
    EXPECT_FALSE(r.fit.has_value());
    fs::remove_all(dir);
}
