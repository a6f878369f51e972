// spoo — command-line front end.
//
//   spoo <simulate|optimize|scan|fit-phase|adiabatic|scenario|validate> --config run.json
//        [--out DIR] [--set key=value ...] [--phase spectral.csv] [--jobs N]
//        [--paper-resolution] [-v ...]
//
// Exit codes: 0 ok, 2 config error, 3 numerical failure or optimizer did not
// reach its target (artifacts are still written), 4 I/O error. Errors are also
// reported as a single JSON object on stderr.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "spoo/spoo.hpp"

namespace {

enum Exit { kOk = 0, kConfig = 2, kNumerical = 3, kIo = 4 };

int report_error(const char* kind, const std::string& message, int code) {
    spoo::json j;
    j["error"] = kind;
    j["message"] = message;
    j["exit_code"] = code;
    std::cerr << j.dump() << '\n';
    return code;
}

struct Options {
    std::string config;
    std::string out;
    std::vector<std::string> overrides;
    std::string phase;
    std::size_t jobs{0};
    bool paper_resolution{false};
    int verbosity{0};
};

spoo::ScenarioConfig load(const Options& o) {
    auto root = spoo::load_config_json(o.config);
    if (o.paper_resolution) spoo::apply_override(root, "window.n_steps=" + std::to_string(spoo::kPaperSteps));
    if (!o.out.empty()) root["outputs"]["directory"] = o.out;
    if (o.jobs > 0) root["jobs"] = o.jobs;
    if (!o.phase.empty()) root["initial_phase"]["from_csv"] = o.phase;
    for (const auto& s : o.overrides) spoo::apply_override(root, s);
    return spoo::parse_config(root);
}

int run(const std::string& command, const Options& o) {
    auto cfg = load(o);
    if (command == "validate") {
        const auto diags = spoo::validate_config(cfg);
        spoo::json j;
        j["config"] = o.config;
        j["valid"] = diags.empty();
        j["diagnostics"] = diags;
        std::cout << j.dump(2) << '\n';
        return diags.empty() ? kOk : kConfig;
    }

    spoo::Pipeline steps;
    if (command == "optimize") steps.optimize = true;
    else if (command == "scan") steps.scan = true;
    else if (command == "fit-phase") steps.fit = true;
    else if (command == "adiabatic") steps.fit = steps.adiabatic = true;
    else if (command == "scenario") steps = spoo::Pipeline::full(cfg);

    auto log = [&](int level, const std::string& msg) {
        if (level <= o.verbosity) std::cerr << msg << '\n';
    };
    const auto r = spoo::run_pipeline(cfg, steps, log);

    std::printf("%s: P=%.10f", cfg.name.c_str(), r.objective);
    if (r.optimized) std::printf(" status=%s", spoo::to_string(r.status).c_str());
    if (steps.fit && r.fit) {
        std::printf(" beta0=%.2f fs2", spoo::units::atomic_to_fs2(r.fit->beta0));
        if (r.fit->omega_c_defined) std::printf(" omega_c=%.2f cm-1", spoo::units::angular_frequency_to_wavenumber(r.fit->omega_c));
    }
    std::printf(" -> %s\n", r.manifest.string().c_str());
    if (r.optimized && !r.converged) {
        return report_error("not_converged", "optimizer finished with status " + spoo::to_string(r.status) +
                                                 "; best-so-far artifacts written", kNumerical);
    }
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"spectral-phase-only pulse optimization"};
    app.require_subcommand(1);
    Options o;
    auto add_common = [&](CLI::App* sub, bool runs) {
        sub->add_option("-c,--config", o.config, "JSON config")->required();
        sub->add_option("--set", o.overrides, "override a config value, e.g. pulse.e0_au=0.01");
        sub->add_option("--phase", o.phase, "start from the phase in a spectral CSV");
        sub->add_flag("--paper-resolution", o.paper_resolution, "use 320000 time steps");
        if (runs) {
            sub->add_option("-o,--out", o.out, "output directory");
            sub->add_option("-j,--jobs", o.jobs, "threads for robustness scans");
            sub->add_flag("-v,--verbose", o.verbosity, "more output (repeatable)");
        }
    };
    const std::vector<std::pair<std::string, std::string>> commands{
        {"simulate", "propagate the initial pulse"},
        {"optimize", "optimize the spectral phase"},
        {"scan", "scan transfer probability over field strength"},
        {"fit-phase", "fit a quadratic to the spectral phase"},
        {"adiabatic", "dressed-state populations of a two-level run"},
        {"scenario", "full pipeline: optimize, scan, fit, adiabatic, time-frequency"},
    };
    for (const auto& [name, help] : commands) add_common(app.add_subcommand(name, help), true);
    auto* validate = app.add_subcommand("validate", "check a config without running it");
    validate->alias("validate_config");
    add_common(validate, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        app.exit(e);
        return report_error("usage", e.what(), kConfig);
    }

    std::string command = app.get_subcommands().front()->get_name();
    spoo::set_warning_handler([&](const std::string& m) {
        if (o.verbosity >= 1) std::cerr << "warning: " << m << '\n';
    });
    try {
        return run(command, o);
    } catch (const spoo::ConfigError& e) {
        return report_error("config", e.what(), kConfig);
    } catch (const spoo::IoError& e) {
        return report_error("io", e.what(), kIo);
    } catch (const std::invalid_argument& e) {
        return report_error("config", e.what(), kConfig);
    } catch (const std::exception& e) {
        return report_error("numerical", e.what(), kNumerical);
    }
}
