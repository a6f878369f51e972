// experiments.hpp — config-driven runs: JSON scenario configs, system presets,
// and the optimize → scan → fit → adiabatic pipeline with a run manifest.
//
// Config keys carry their unit as a suffix (_au, _fs, _fs2, _invcm). Level
// indices in configs are 1-based; everything internal is 0-based.

#pragma once

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "spoo/analysis.hpp"
#include "spoo/io.hpp"
#include "spoo/optimizer.hpp"
#include "spoo/system.hpp"

namespace spoo {

using json = nlohmann::ordered_json;

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr std::size_t kPaperSteps = 320000;
inline constexpr std::size_t kDefaultSteps = 65536;

// ---------------------------------------------------------------- presets

inline std::optional<QuantumSystem> system_preset(const std::string& name) {
    if (name == "two_level_12500") return two_level_system();
    if (name == "rubidium87_5s5p") return rubidium_system();
    return std::nullopt;
}

inline const std::vector<std::string>& preset_names() {
    static const std::vector<std::string> names{"two_level_12500", "rubidium87_5s5p"};
    return names;
}

// ---------------------------------------------------------------- config

enum class ScenarioKind { two_level, rubidium_resonant, rubidium_offresonant, custom };

inline std::string to_string(ScenarioKind k) {
    switch (k) {
        case ScenarioKind::two_level: return "two_level";
        case ScenarioKind::rubidium_resonant: return "rubidium_resonant";
        case ScenarioKind::rubidium_offresonant: return "rubidium_offresonant";
        case ScenarioKind::custom: return "custom";
    }
    return "custom";
}

struct ScenarioConfig {
    std::string name{"run"};
    ScenarioKind kind{ScenarioKind::custom};
    std::string preset;  // empty for an explicit system
    std::vector<double> energies;  // a.u.
    Eigen::MatrixXd dipole;

    double e0{0.0};
    double tau0{0.0};
    double omega0{0.0};
    std::optional<std::pair<std::size_t, std::size_t>> resonant_with;  // 0-based
    double detuning{0.0};  // ω0 = ω_ab - detuning when resonant_with is set

    double duration{0.0};
    std::size_t n_steps{kDefaultSteps};
    std::size_t n_freq{2048};
    double freq_halfwidth{6.0};  // in units of Δω

    std::size_t initial{0};
    std::size_t target{1};

    bool optimize{true};
    OptimizerConfig optimizer;

    std::vector<double> chirp_candidates{0.0};  // a.u.
    std::vector<double> warm_start_e0;
    std::string phase_csv;

    double scan_rel_min{0.8};
    double scan_rel_max{1.2};
    std::size_t scan_points{41};

    double fit_threshold{kDefaultFitThreshold};
    bool adiabatic{true};
    bool time_frequency{true};
    double tf_window{0.0};  // 0 → τ0
    std::size_t tf_time_points{161};
    std::size_t tf_omega_points{161};

    std::string output_dir{"out"};
    bool write_populations{true};
    bool write_temporal_field{true};

    std::size_t jobs{1};
    json echo;  // the config as parsed, after overrides

    QuantumSystem system() const { return QuantumSystem(energies, dipole); }
    double delta_omega() const { return 1.0 / tau0; }
};

namespace detail {

inline double number_at(const json& obj, const char* key, const std::string& where) {
    const auto& v = obj.at(key);
    if (!v.is_number()) throw ConfigError(where + "." + key + " must be a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw ConfigError(where + "." + key + " must be finite");
    return x;
}

inline std::size_t count_at(const json& obj, const char* key, const std::string& where) {
    const auto& v = obj.at(key);
    if (!v.is_number_integer() || v.get<long long>() < 0) throw ConfigError(where + "." + key + " must be a non-negative integer");
    return static_cast<std::size_t>(v.get<long long>());
}

inline bool bool_at(const json& obj, const char* key, const std::string& where) {
    const auto& v = obj.at(key);
    if (!v.is_boolean()) throw ConfigError(where + "." + key + " must be true or false");
    return v.get<bool>();
}

inline void check_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) throw ConfigError(where + " must be an object");
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [k, v] : obj.items()) {
        if (!ok.count(k)) throw ConfigError("unknown key " + where + "." + k);
    }
}

inline std::vector<double> numbers_at(const json& obj, const char* key, const std::string& where) {
    const auto& v = obj.at(key);
    if (!v.is_array()) throw ConfigError(where + "." + key + " must be an array of numbers");
    std::vector<double> out;
    for (const auto& x : v) {
        if (!x.is_number()) throw ConfigError(where + "." + key + " must be an array of numbers");
        out.push_back(x.get<double>());
    }
    return out;
}

inline const json* find(const json& obj, const char* key) {
    auto it = obj.find(key);
    return it == obj.end() ? nullptr : &*it;
}

inline ScenarioKind parse_kind(const std::string& s) {
    if (s == "two_level") return ScenarioKind::two_level;
    if (s == "rubidium_resonant") return ScenarioKind::rubidium_resonant;
    if (s == "rubidium_offresonant") return ScenarioKind::rubidium_offresonant;
    if (s == "custom") return ScenarioKind::custom;
    throw ConfigError("scenario must be one of two_level, rubidium_resonant, rubidium_offresonant, custom");
}

}  // namespace detail

// Applies "a.b.c=value" to the JSON tree. The value is read as JSON when it
// parses, otherwise as a string.
inline void apply_override(json& root, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("override must look like key=value: " + assignment);
    const std::string path = assignment.substr(0, eq);
    const std::string raw = assignment.substr(eq + 1);
    json value;
    try {
        value = json::parse(raw);
    } catch (const json::parse_error&) {
        value = raw;
    }
    json* node = &root;
    std::size_t start = 0;
    while (true) {
        const auto dot = path.find('.', start);
        const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (key.empty()) throw ConfigError("override has an empty key segment: " + path);
        if (!node->is_object()) throw ConfigError("override path crosses a non-object at " + key);
        if (dot == std::string::npos) {
            (*node)[key] = value;
            return;
        }
        node = &(*node)[key];
        if (node->is_null()) *node = json::object();
        start = dot + 1;
    }
}

inline ScenarioConfig parse_config(const json& root) {
    using namespace detail;
    check_keys(root, "config", {"name", "scenario", "system", "pulse", "window", "task", "optimizer", "initial_phase",
                                "scan", "analysis", "outputs", "jobs"});
    ScenarioConfig c;
    c.echo = root;
    try {
        if (auto* v = find(root, "name")) c.name = v->get<std::string>();
        if (auto* v = find(root, "scenario")) c.kind = parse_kind(v->get<std::string>());

        // system
        const json& sys = root.at("system");
        check_keys(sys, "system", {"preset", "energies_invcm", "dipole_au"});
        if (auto* p = find(sys, "preset")) {
            c.preset = p->get<std::string>();
            const auto s = system_preset(c.preset);
            if (!s) throw ConfigError("unknown system preset '" + c.preset + "'");
            c.energies = s->energies();
            c.dipole = s->dipole();
            if (find(sys, "energies_invcm") || find(sys, "dipole_au")) {
                throw ConfigError("system: give either a preset or explicit energies_invcm/dipole_au");
            }
        } else {
            const auto e = numbers_at(sys, "energies_invcm", "system");
            for (double x : e) c.energies.push_back(units::wavenumber_to_angular_frequency(x));
            const auto& d = sys.at("dipole_au");
            if (!d.is_array() || d.size() != e.size()) throw ConfigError("system.dipole_au must be an N×N array");
            c.dipole = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(e.size()), static_cast<Eigen::Index>(e.size()));
            for (std::size_t a = 0; a < e.size(); ++a) {
                if (!d[a].is_array() || d[a].size() != e.size()) throw ConfigError("system.dipole_au must be an N×N array");
                for (std::size_t b = 0; b < e.size(); ++b) {
                    c.dipole(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = d[a][b].get<double>();
                }
            }
        }

        // task (needed before resolving the resonance)
        if (auto* t = find(root, "task")) {
            check_keys(*t, "task", {"initial_level", "target_level"});
            if (find(*t, "initial_level")) c.initial = count_at(*t, "initial_level", "task") - 1;
            if (find(*t, "target_level")) c.target = count_at(*t, "target_level", "task") - 1;
        }

        // pulse
        const json& pulse = root.at("pulse");
        check_keys(pulse, "pulse", {"e0_au", "tau0_fs", "omega0_invcm", "resonant_with", "detuning_invcm"});
        c.e0 = number_at(pulse, "e0_au", "pulse");
        c.tau0 = units::to_atomic_time(number_at(pulse, "tau0_fs", "pulse"));
        if (find(pulse, "detuning_invcm")) c.detuning = units::wavenumber_to_angular_frequency(number_at(pulse, "detuning_invcm", "pulse"));
        if (auto* r = find(pulse, "resonant_with")) {
            if (!r->is_array() || r->size() != 2 || !(*r)[0].is_number_integer() || !(*r)[1].is_number_integer()) {
                throw ConfigError("pulse.resonant_with must be a pair of 1-based level indices");
            }
            const auto a = (*r)[0].get<long long>(), b = (*r)[1].get<long long>();
            if (a < 1 || b < 1) throw ConfigError("pulse.resonant_with: level indices start at 1");
            c.resonant_with = std::make_pair(static_cast<std::size_t>(a - 1), static_cast<std::size_t>(b - 1));
            if (find(pulse, "omega0_invcm")) throw ConfigError("pulse: give either omega0_invcm or resonant_with");
        } else {
            c.omega0 = units::wavenumber_to_angular_frequency(number_at(pulse, "omega0_invcm", "pulse"));
        }

        // window
        const json& win = root.at("window");
        check_keys(win, "window", {"duration_fs", "n_steps", "n_freq", "freq_halfwidth_bandwidths"});
        c.duration = units::to_atomic_time(number_at(win, "duration_fs", "window"));
        if (find(win, "n_steps")) c.n_steps = count_at(win, "n_steps", "window");
        if (find(win, "n_freq")) c.n_freq = count_at(win, "n_freq", "window");
        if (find(win, "freq_halfwidth_bandwidths")) c.freq_halfwidth = number_at(win, "freq_halfwidth_bandwidths", "window");

        // optimizer
        if (auto* o = find(root, "optimizer")) {
            check_keys(*o, "optimizer", {"enabled", "filter_sigma_invcm", "target_objective", "max_iterations", "initial_step",
                                         "step_shrink", "step_grow", "min_step", "max_phase_step_rad", "gamma_rcond",
                                         "constraints_enabled", "stall_iterations", "stall_tolerance", "projection_tolerance",
                                         "zero_gradient_tolerance"});
            auto& oc = c.optimizer;
            if (find(*o, "enabled")) c.optimize = bool_at(*o, "enabled", "optimizer");
            if (auto* s = find(*o, "filter_sigma_invcm"); s && !s->is_null()) {
                oc.filter = FilterSpec::gaussian(units::wavenumber_to_angular_frequency(number_at(*o, "filter_sigma_invcm", "optimizer")));
            }
            if (find(*o, "target_objective")) oc.target_objective = number_at(*o, "target_objective", "optimizer");
            if (find(*o, "max_iterations")) oc.max_iterations = count_at(*o, "max_iterations", "optimizer");
            if (find(*o, "initial_step")) oc.initial_step = number_at(*o, "initial_step", "optimizer");
            if (find(*o, "step_shrink")) oc.step_shrink = number_at(*o, "step_shrink", "optimizer");
            if (find(*o, "step_grow")) oc.step_grow = number_at(*o, "step_grow", "optimizer");
            if (find(*o, "min_step")) oc.min_step = number_at(*o, "min_step", "optimizer");
            if (find(*o, "max_phase_step_rad")) oc.max_phase_step = number_at(*o, "max_phase_step_rad", "optimizer");
            if (find(*o, "gamma_rcond")) oc.gamma_rcond = number_at(*o, "gamma_rcond", "optimizer");
            if (find(*o, "constraints_enabled")) oc.constraints_enabled = bool_at(*o, "constraints_enabled", "optimizer");
            if (find(*o, "stall_iterations")) oc.stall_iterations = count_at(*o, "stall_iterations", "optimizer");
            if (find(*o, "stall_tolerance")) oc.stall_tolerance = number_at(*o, "stall_tolerance", "optimizer");
            if (find(*o, "zero_gradient_tolerance")) {
                oc.zero_gradient_tolerance = number_at(*o, "zero_gradient_tolerance", "optimizer");
            }
            if (find(*o, "projection_tolerance")) oc.projection_tolerance = number_at(*o, "projection_tolerance", "optimizer");
        }

        if (auto* ip = find(root, "initial_phase")) {
            check_keys(*ip, "initial_phase", {"chirp_candidates_fs2", "warm_start_e0_au", "from_csv"});
            if (find(*ip, "chirp_candidates_fs2")) {
                c.chirp_candidates.clear();
                for (double b : numbers_at(*ip, "chirp_candidates_fs2", "initial_phase")) c.chirp_candidates.push_back(units::fs2_to_atomic(b));
            }
            if (find(*ip, "warm_start_e0_au")) c.warm_start_e0 = numbers_at(*ip, "warm_start_e0_au", "initial_phase");
            if (auto* f = find(*ip, "from_csv")) c.phase_csv = f->get<std::string>();
        }

        if (auto* s = find(root, "scan")) {
            check_keys(*s, "scan", {"e0_relative_min", "e0_relative_max", "points"});
            if (find(*s, "e0_relative_min")) c.scan_rel_min = number_at(*s, "e0_relative_min", "scan");
            if (find(*s, "e0_relative_max")) c.scan_rel_max = number_at(*s, "e0_relative_max", "scan");
            if (find(*s, "points")) c.scan_points = count_at(*s, "points", "scan");
        }

        if (auto* a = find(root, "analysis")) {
            check_keys(*a, "analysis", {"fit_threshold", "adiabatic", "time_frequency", "tf_window_fs", "tf_time_points",
                                        "tf_omega_points"});
            if (find(*a, "fit_threshold")) c.fit_threshold = number_at(*a, "fit_threshold", "analysis");
            if (find(*a, "adiabatic")) c.adiabatic = bool_at(*a, "adiabatic", "analysis");
            if (find(*a, "time_frequency")) c.time_frequency = bool_at(*a, "time_frequency", "analysis");
            if (find(*a, "tf_window_fs")) c.tf_window = units::to_atomic_time(number_at(*a, "tf_window_fs", "analysis"));
            if (find(*a, "tf_time_points")) c.tf_time_points = count_at(*a, "tf_time_points", "analysis");
            if (find(*a, "tf_omega_points")) c.tf_omega_points = count_at(*a, "tf_omega_points", "analysis");
        }

        if (auto* o = find(root, "outputs")) {
            check_keys(*o, "outputs", {"directory", "populations", "temporal_field"});
            if (auto* d = find(*o, "directory")) c.output_dir = d->get<std::string>();
            if (find(*o, "populations")) c.write_populations = bool_at(*o, "populations", "outputs");
            if (find(*o, "temporal_field")) c.write_temporal_field = bool_at(*o, "temporal_field", "outputs");
        }
        if (find(root, "jobs")) c.jobs = std::max<std::size_t>(1, count_at(root, "jobs", "config"));
    } catch (const json::out_of_range& e) {
        throw ConfigError(std::string("missing key: ") + e.what());
    } catch (const json::type_error& e) {
        throw ConfigError(std::string("wrong value type: ") + e.what());
    }

    if (c.resonant_with) {
        const auto [a, b] = *c.resonant_with;
        if (a >= c.energies.size() || b >= c.energies.size()) throw ConfigError("pulse.resonant_with refers to a missing level");
        c.omega0 = std::abs(c.energies[b] - c.energies[a]) - c.detuning;
    }
    return c;
}

// Schema and physics checks without running anything. An empty list means
// the config is usable.
inline std::vector<std::string> validate_config(const ScenarioConfig& c) {
    std::vector<std::string> d;
    try {
        (void)c.system();
    } catch (const std::exception& e) {
        d.push_back(std::string("system: ") + e.what());
    }
    const std::size_t n = c.energies.size();
    if (c.initial >= n) d.push_back("task.initial_level: level " + std::to_string(c.initial + 1) + " does not exist (N=" + std::to_string(n) + ")");
    if (c.target >= n) d.push_back("task.target_level: level " + std::to_string(c.target + 1) + " does not exist (N=" + std::to_string(n) + ")");
    if (c.initial == c.target) d.push_back("task: initial_level and target_level must differ");
    if (!(c.e0 >= 0.0)) d.push_back("pulse.e0_au: must be >= 0");
    if (!(c.tau0 > 0.0)) d.push_back("pulse.tau0_fs: must be > 0");
    if (!(c.omega0 > 0.0)) d.push_back("pulse: carrier frequency must resolve to a positive value");
    if (!(c.duration > 0.0)) d.push_back("window.duration_fs: must be > 0");
    if (c.n_steps < 2) d.push_back("window.n_steps: must be >= 2");
    if (c.n_freq < 5) d.push_back("window.n_freq: must be >= 5");
    if (!(c.freq_halfwidth > 0.0)) d.push_back("window.freq_halfwidth_bandwidths: must be > 0");
    if (!d.empty()) return d;

    const double dw = c.delta_omega();
    const double lo = c.omega0 - c.freq_halfwidth * dw;
    const double hi = c.omega0 + c.freq_halfwidth * dw;
    if (lo < 0.0) d.push_back("window: frequency band reaches below zero; lower freq_halfwidth_bandwidths or raise the carrier");
    if (std::exp(-0.5 * c.freq_halfwidth * c.freq_halfwidth) > kEdgeAmplitudeTolerance) {
        d.push_back("window.freq_halfwidth_bandwidths: spectral amplitude at the band edge exceeds 1e-6 of peak (needs >= 5.26)");
    }
    const double dt = c.duration / static_cast<double>(c.n_steps - 1);
    if (hi * dt > 1.0) d.push_back("window.n_steps: time step does not resolve the highest carrier frequency (omega_max*dt > 1)");
    double wmax = 0.0;
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = 0; b < n; ++b) wmax = std::max(wmax, std::abs(c.energies[a] - c.energies[b]));
    }
    if (wmax * dt > 1.0) d.push_back("window.n_steps: time step does not resolve the largest transition frequency");
    const double period = 2.0 * std::numbers::pi * static_cast<double>(c.n_freq - 1) / (hi - std::max(0.0, lo));
    if (period < 2.0 * c.duration) d.push_back("window.n_freq: frequency spacing aliases the time window (2π/dω < 2T)");
    if (c.optimize) {
        try {
            c.optimizer.validate();
        } catch (const std::exception& e) {
            d.push_back(std::string(e.what()));
        }
    }
    if (!(c.scan_rel_min > 0.0) || !(c.scan_rel_max >= c.scan_rel_min)) d.push_back("scan: need 0 < e0_relative_min <= e0_relative_max");
    if (c.scan_points == 0) d.push_back("scan.points: must be >= 1");
    if (!(c.fit_threshold > 0.0 && c.fit_threshold < 1.0)) d.push_back("analysis.fit_threshold: must lie in (0, 1)");
    for (double e : c.warm_start_e0) {
        if (!(e > 0.0)) d.push_back("initial_phase.warm_start_e0_au: strengths must be > 0");
    }
    if (c.chirp_candidates.empty()) d.push_back("initial_phase.chirp_candidates_fs2: needs at least one value");
    if (c.kind == ScenarioKind::two_level && n != 2) d.push_back("scenario two_level needs a two-level system");
    if ((c.kind == ScenarioKind::rubidium_resonant || c.kind == ScenarioKind::rubidium_offresonant) && n != 3) {
        d.push_back("rubidium scenarios need a three-level system");
    }
    if (c.kind == ScenarioKind::rubidium_offresonant && c.initial == 0) {
        d.push_back("scenario rubidium_offresonant starts from an excited level (initial_level 2)");
    }
    return d;
}

inline json load_config_json(const std::filesystem::path& path) {
    std::string text;
    try {
        text = read_file(path);
    } catch (const IoError& e) {
        throw ConfigError(std::string("cannot read config: ") + e.what());
    }
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
}

// ---------------------------------------------------------------- building blocks

struct RunSetup {
    QuantumSystem system;
    TimeGrid tgrid;
    FrequencyGrid fgrid;
    SpectralField field;  // amplitude at c.e0, zero phase
};

inline RunSetup make_setup(const ScenarioConfig& c) {
    const auto diags = validate_config(c);
    if (!diags.empty()) throw ConfigError(diags.front());
    auto [tg, fg] = make_grids(c.duration, c.n_steps, c.omega0, c.freq_halfwidth * c.delta_omega(), c.n_freq);
    SpectralField f(fg, GaussianSpectrum{c.e0, c.omega0, c.delta_omega()});
    return {c.system(), tg, fg, f};
}

struct PhaseChoice {
    std::vector<double> phase;
    double chirp{0.0};  // a.u.; NaN when read from CSV
    std::vector<std::pair<double, double>> candidates;  // (β0 a.u., P)
};

// Phase the run starts from: a CSV phase when given, otherwise the quadratic
// chirp candidate with the highest transfer probability (first one on ties).
inline PhaseChoice choose_initial_phase(const ScenarioConfig& c, const RunSetup& s) {
    PhaseChoice out;
    if (!c.phase_csv.empty()) {
        out.phase = read_spectral_phase(read_file(c.phase_csv), s.field);
        out.chirp = std::numeric_limits<double>::quiet_NaN();
        return out;
    }
    const auto init = StateVector::basis(s.system.levels(), c.initial);
    double best = -1.0;
    for (double b : c.chirp_candidates) {
        auto ph = polynomial_phase(s.fgrid, c.omega0, b);
        double p = 0.0;
        if (c.chirp_candidates.size() > 1) {
            const auto psi = final_state(s.system, synthesize_steps(s.field.with_phase(ph), s.tgrid), init);
            p = std::norm(psi(static_cast<Eigen::Index>(c.target)));
        }
        out.candidates.emplace_back(b, p);
        if (p > best) {
            best = p;
            out.phase = std::move(ph);
            out.chirp = b;
        }
    }
    return out;
}

struct Artifact {
    std::string file;
    std::string sha256;
    std::size_t bytes{0};
};

class ArtifactWriter {
public:
    explicit ArtifactWriter(std::filesystem::path dir) : dir_(std::move(dir)) {}

    void write(const std::string& file, const std::string& content) {
        write_file_atomic(dir_ / file, content);
        artifacts_.push_back({file, sha256_hex(content), content.size()});
    }
    void write(const std::string& file, const CsvTable& table) { write(file, table.str()); }

    const std::vector<Artifact>& artifacts() const noexcept { return artifacts_; }
    const std::filesystem::path& dir() const noexcept { return dir_; }

private:
    std::filesystem::path dir_;
    std::vector<Artifact> artifacts_;
};

class Stopwatch {
public:
    void start(const std::string& name) {
        name_ = name;
        t0_ = std::chrono::steady_clock::now();
    }
    void stop() {
        timings_[name_] += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
    }
    json to_json() const {
        json j = json::object();
        for (const auto& [k, v] : timings_) j[k] = v;
        return j;
    }

private:
    std::string name_;
    std::chrono::steady_clock::time_point t0_;
    std::map<std::string, double> timings_;
};

inline json fit_json(const QuadraticFit& f) {
    json j;
    j["omega_c_invcm"] = f.omega_c_defined ? json(units::angular_frequency_to_wavenumber(f.omega_c)) : json(nullptr);
    j["omega_c_defined"] = f.omega_c_defined;
    j["beta0_fs2"] = units::atomic_to_fs2(f.beta0);
    j["phi1"] = f.phi1;
    j["offset"] = f.omega_c_defined ? f.centered_offset : f.offset;
    j["residual_rad"] = f.residual;
    j["band_invcm"] = {units::angular_frequency_to_wavenumber(f.band_lo), units::angular_frequency_to_wavenumber(f.band_hi)};
    return j;
}

// ---------------------------------------------------------------- scenario run

struct StageSummary {
    double e0{0.0};
    OptimizerStatus status{OptimizerStatus::running};
    std::size_t iterations{0};
    double objective{0.0};
};

// Which stages a run performs. Population and field artifacts follow the
// config's outputs section regardless.
struct Pipeline {
    bool optimize{false};
    bool scan{false};
    bool fit{false};
    bool adiabatic{false};
    bool time_frequency{false};

    static Pipeline full(const ScenarioConfig& c) { return {c.optimize, true, true, c.adiabatic, c.time_frequency}; }
};

struct ScenarioResult {
    explicit ScenarioResult(SpectralField f) : field(std::move(f)) {}

    bool converged{false};
    bool optimized{false};
    OptimizerStatus status{OptimizerStatus::running};
    SpectralField field;
    double objective{0.0};
    std::vector<double> final_populations;
    std::vector<StageSummary> stages;
    std::optional<QuadraticFit> fit;
    std::optional<RobustnessScan> scan;
    std::optional<AdiabaticTrace> adiabatic;
    std::vector<IterationRecord> history;
    std::vector<Artifact> artifacts;
    std::vector<std::string> notes;
    std::filesystem::path manifest;
};

using LogFn = std::function<void(int level, const std::string&)>;

// Initial phase → (warm-start stages →) optimize → robustness scan →
// quadratic fit → adiabatic trace (two-level) → time–frequency map, each
// stage switched by `steps`. Artifacts are written even when the optimizer
// does not reach its target.
inline ScenarioResult run_pipeline(const ScenarioConfig& c, const Pipeline& steps, const LogFn& log = {}) {
    if (steps.adiabatic && c.energies.size() != 2) throw ConfigError("adiabatic analysis needs a two-level system");
    auto say = [&](int level, const std::string& msg) {
        if (log) log(level, msg);
    };
    Stopwatch clock;
    clock.start("setup");
    const RunSetup s = make_setup(c);
    clock.stop();

    clock.start("initial_phase");
    const auto choice = choose_initial_phase(c, s);
    clock.stop();
    if (choice.candidates.size() > 1) {
        std::ostringstream os;
        os << "initial chirp " << units::atomic_to_fs2(choice.chirp) << " fs2 chosen from " << choice.candidates.size()
           << " candidates";
        say(1, os.str());
    }

    ScenarioResult r(s.field.with_phase(choice.phase));
    SpectralField current = r.field;

    clock.start("optimize");
    if (steps.optimize) {
        r.optimized = true;
        std::vector<double> strengths = c.warm_start_e0;
        strengths.push_back(c.e0);
        for (std::size_t stage = 0; stage < strengths.size(); ++stage) {
            current = current.with_strength(strengths[stage]);
            auto progress = [&](const IterationRecord& it) {
                std::ostringstream os;
                os << "e0=" << strengths[stage] << " iter " << it.iteration << " P=" << format_number(it.objective)
                   << " ds=" << it.step;
                say(2, os.str());
            };
            auto res = optimize(s.system, current, s.tgrid, c.initial, c.target, c.optimizer, progress);
            r.stages.push_back({strengths[stage], res.state.status, res.state.iteration, res.state.objective});
            std::ostringstream os;
            os << "stage e0=" << strengths[stage] << ": " << to_string(res.state.status) << " after "
               << res.state.iteration << " iterations, P=" << format_number(res.state.objective);
            say(1, os.str());
            current = res.field;
            if (stage + 1 == strengths.size()) {
                r.status = res.state.status;
                r.history = std::move(res.state.history);
            }
        }
        r.converged = r.status == OptimizerStatus::converged;
    } else {
        r.status = OptimizerStatus::converged;
        r.converged = true;
    }
    clock.stop();
    r.field = current;

    clock.start("propagate");
    const auto init = StateVector::basis(s.system.levels(), c.initial);
    const auto drive = synthesize_steps(r.field, s.tgrid);
    const auto rec = propagate(s.system, drive, init);
    r.objective = transfer_probability(rec, c.target);
    for (std::size_t n = 0; n < rec.levels(); ++n) r.final_populations.push_back(std::norm(rec.final_state(static_cast<Eigen::Index>(n))));
    clock.stop();

    clock.start("scan");
    if (steps.scan && c.e0 > 0.0) {
        const auto values = linspace(c.scan_rel_min * c.e0, c.scan_rel_max * c.e0, c.scan_points);
        r.scan = scan_robustness(s.system, r.field, s.tgrid, c.initial, c.target, values, c.jobs);
    }
    clock.stop();

    clock.start("fit");
    if (steps.fit || steps.adiabatic || steps.time_frequency) {
        try {
            r.fit = fit_quadratic_phase(r.field, c.fit_threshold);
        } catch (const std::invalid_argument& e) {
            r.notes.push_back(std::string("fit skipped: ") + e.what());
        }
    }
    clock.stop();

    clock.start("adiabatic");
    if (steps.adiabatic && r.fit && c.e0 > 0.0) {
        r.adiabatic = adiabatic_decompose(s.system, ChirpFrame::from_fit(*r.fit, c.e0, c.tau0), rec);
    }
    clock.stop();

    ArtifactWriter out(c.output_dir);
    clock.start("write");
    out.write("spectral_initial.csv", spectral_field_csv(s.field.with_phase(choice.phase)));
    out.write("spectral_optimized.csv", spectral_field_csv(r.field));
    if (steps.optimize) out.write("history.csv", history_csv(r.history));
    if (c.write_populations) out.write("populations.csv", populations_csv(rec));
    TemporalField temporal = synthesize(r.field, s.tgrid);
    if (c.write_temporal_field) out.write("temporal_field.csv", temporal_field_csv(temporal, default_store_stride(s.tgrid)));
    if (r.scan) out.write("robustness.csv", robustness_csv(*r.scan));
    if (steps.fit && r.fit) out.write("fit.csv", fit_csv(*r.fit));
    if (r.adiabatic) out.write("adiabatic.csv", adiabatic_csv(*r.adiabatic));
    clock.stop();

    clock.start("time_frequency");
    if (steps.time_frequency && c.e0 > 0.0) {
        const double w = c.tf_window > 0.0 ? c.tf_window : c.tau0;
        double center = 0.0, tau = c.tau0;
        if (r.fit) {
            const auto frame = ChirpFrame::from_fit(*r.fit, c.e0, c.tau0);
            center = frame.center();
            tau = frame.pulse().tau();
        }
        const double half = 3.0 * std::hypot(tau, w);
        TimeFrequencyGrid g{std::max(s.tgrid.t_start(), center - half), std::min(s.tgrid.t_end(), center + half),
                            c.tf_time_points, c.omega0 - 4.0 * c.delta_omega(), c.omega0 + 4.0 * c.delta_omega(),
                            c.tf_omega_points};
        if (g.t_last > g.t_first) out.write("time_frequency.csv", time_frequency_csv(time_frequency_map(temporal, w, g)));
    }
    clock.stop();

    // manifest
    json m;
    m["name"] = c.name;
    m["scenario"] = to_string(c.kind);
    m["config"] = c.echo;
    json conv;
    conv["status"] = r.optimized ? to_string(r.status) : "not_run";
    conv["converged"] = r.converged;
    conv["objective"] = r.objective;
    conv["iterations"] = r.history.empty() ? 0 : r.history.back().iteration;
    conv["s"] = r.history.empty() ? 0.0 : r.history.back().s;
    double drift = 0.0;
    for (const auto& h : r.history) drift = std::max({drift, std::abs(h.drift_ti), std::abs(h.drift_tf)});
    conv["max_constraint_drift_au"] = drift;
    conv["final_populations"] = r.final_populations;
    json stages = json::array();
    for (const auto& st : r.stages) {
        stages.push_back({{"e0_au", st.e0}, {"status", to_string(st.status)}, {"iterations", st.iterations}, {"objective", st.objective}});
    }
    conv["stages"] = stages;
    if (choice.candidates.size() > 1 || !std::isnan(choice.chirp)) {
        json cands = json::array();
        for (const auto& [b, p] : choice.candidates) cands.push_back({{"beta0_fs2", units::atomic_to_fs2(b)}, {"probability", p}});
        conv["initial_chirp_fs2"] = std::isnan(choice.chirp) ? json(nullptr) : json(units::atomic_to_fs2(choice.chirp));
        conv["initial_chirp_candidates"] = cands;
    }
    m["convergence"] = conv;
    if (steps.fit && r.fit) m["fit"] = fit_json(*r.fit);
    if (r.scan) {
        double worst = 0.0;
        for (double x : r.scan->infidelities) worst = std::max(worst, x);
        m["robustness"] = {{"max_infidelity", worst},
                           {"e0_range_au", {r.scan->e0_values.front(), r.scan->e0_values.back()}}};
    }
    if (r.adiabatic) m["adiabatic"] = {{"min_pop_minus", r.adiabatic->min_pop_minus()}};
    m["notes"] = r.notes;
    m["stages_run"] = {{"optimize", steps.optimize}, {"scan", steps.scan}, {"fit", steps.fit},
                       {"adiabatic", steps.adiabatic}, {"time_frequency", steps.time_frequency}};
    m["timings_s"] = clock.to_json();
    json arts = json::array();
    for (const auto& a : out.artifacts()) arts.push_back({{"file", a.file}, {"sha256", a.sha256}, {"bytes", a.bytes}});
    m["artifacts"] = arts;
    write_file_atomic(out.dir() / "manifest.json", m.dump(2) + "\n");
    r.artifacts = out.artifacts();
    r.manifest = out.dir() / "manifest.json";
    return r;
}

inline ScenarioResult run_scenario(const ScenarioConfig& c, const LogFn& log = {}) {
    return run_pipeline(c, Pipeline::full(c), log);
}

}  // namespace spoo
