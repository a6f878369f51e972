// io.hpp — CSV artifacts, atomic file output and content digests.

#pragma once

#include <openssl/evp.h>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "spoo/analysis.hpp"
#include "spoo/optimizer.hpp"
#include "spoo/propagation.hpp"
#include "spoo/pulse.hpp"
#include "spoo/units.hpp"

namespace spoo {

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Writes `content` next to `path` and renames it into place, so readers never
// see a partial file.
inline void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
    namespace fs = std::filesystem;
    std::error_code ec;
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path(), ec);
        if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
    }
    fs::path tmp = path;
    tmp += ".partial";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) throw IoError("write failed for " + tmp.string());
    }
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw IoError("cannot move " + tmp.string() + " into place");
    }
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw IoError("read failed for " + path.string());
    return ss.str();
}

inline std::string sha256_hex(std::string_view data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw std::runtime_error("sha256: digest failed");
    }
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xf]);
    }
    return out;
}

// ---------------------------------------------------------------- CSV

// Round-trip precision; NaN is written as "nan".
inline std::string format_number(double x) {
    if (std::isnan(x)) return "nan";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

    void add_row(const std::vector<double>& row) {
        if (row.size() != header_.size()) throw std::invalid_argument("csv: row width does not match header");
        std::string line;
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) line.push_back(',');
            line += format_number(row[i]);
        }
        rows_.push_back(std::move(line));
    }

    std::size_t rows() const noexcept { return rows_.size(); }

    std::string str() const {
        std::string out;
        for (std::size_t i = 0; i < header_.size(); ++i) {
            if (i) out.push_back(',');
            out += header_[i];
        }
        out.push_back('\n');
        for (const auto& r : rows_) {
            out += r;
            out.push_back('\n');
        }
        return out;
    }

private:
    std::vector<std::string> header_;
    std::vector<std::string> rows_;
};

struct CsvData {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    std::size_t column(std::string_view name) const {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (header[i] == name) return i;
        }
        throw std::invalid_argument("csv: missing column " + std::string(name));
    }
};

inline CsvData parse_csv(std::string_view text) {
    CsvData out;
    std::istringstream in{std::string(text)};
    std::string line;
    auto split = [](const std::string& s) {
        std::vector<std::string> cells;
        std::string cell;
        std::istringstream ls(s);
        while (std::getline(ls, cell, ',')) {
            while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
            while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
            cells.push_back(cell);
        }
        return cells;
    };
    if (!std::getline(in, line)) throw std::invalid_argument("csv: empty input");
    out.header = split(line);
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        const auto cells = split(line);
        if (cells.size() != out.header.size()) {
            throw std::invalid_argument("csv: line " + std::to_string(lineno) + " has the wrong number of cells");
        }
        std::vector<double> row;
        row.reserve(cells.size());
        for (const auto& c : cells) {
            // from_chars, unlike stod, accepts subnormals
            double v = 0.0;
            const auto [end, ec] = std::from_chars(c.data(), c.data() + c.size(), v);
            if (ec != std::errc{} || end != c.data() + c.size() || c.empty()) {
                throw std::invalid_argument("csv: line " + std::to_string(lineno) + ": not a number: '" + c + "'");
            }
            row.push_back(v);
        }
        out.rows.push_back(std::move(row));
    }
    return out;
}

// ---------------------------------------------------------------- artifact tables

inline CsvTable spectral_field_csv(const SpectralField& f) {
    CsvTable t({"omega_invcm", "amplitude_au", "phase_rad"});
    const auto amp = f.amplitude();
    const auto ph = f.phase();
    for (std::size_t k = 0; k < f.size(); ++k) {
        t.add_row({units::angular_frequency_to_wavenumber(f.grid()[k]), amp[k], ph[k]});
    }
    return t;
}

// Phase column of a spectral CSV, checked against the frequency grid of `like`.
inline std::vector<double> read_spectral_phase(std::string_view text, const SpectralField& like) {
    const auto csv = parse_csv(text);
    const std::size_t cw = csv.column("omega_invcm");
    const std::size_t cp = csv.column("phase_rad");
    if (csv.rows.size() != like.size()) {
        throw std::invalid_argument("spectral csv: " + std::to_string(csv.rows.size()) + " rows, grid has " +
                                    std::to_string(like.size()) + " points");
    }
    const double tol = 1e-6 * units::angular_frequency_to_wavenumber(like.grid().d_omega());
    std::vector<double> phase(csv.rows.size());
    for (std::size_t k = 0; k < phase.size(); ++k) {
        const double w = units::angular_frequency_to_wavenumber(like.grid()[k]);
        if (std::abs(csv.rows[k][cw] - w) > tol + 1e-9 * std::abs(w)) {
            throw std::invalid_argument("spectral csv: frequency grid does not match the configuration");
        }
        phase[k] = csv.rows[k][cp];
    }
    return phase;
}

inline CsvTable temporal_field_csv(const TemporalField& f, std::size_t stride = 1) {
    CsvTable t({"time_fs", "field_au"});
    stride = std::max<std::size_t>(1, stride);
    for (std::size_t j = 0; j < f.values.size(); j += stride) {
        t.add_row({units::to_femtoseconds(f.grid[j]), f.values[j]});
    }
    if ((f.values.size() - 1) % stride != 0) {
        t.add_row({units::to_femtoseconds(f.grid[f.values.size() - 1]), f.values.back()});
    }
    return t;
}

inline CsvTable populations_csv(const PropagationRecord& rec) {
    std::vector<std::string> header{"time_fs"};
    for (std::size_t n = 1; n <= rec.levels(); ++n) header.push_back("pop_" + std::to_string(n));
    CsvTable t(std::move(header));
    const auto pops = populations(rec);
    for (std::size_t i = 0; i < pops.size(); ++i) {
        std::vector<double> row{units::to_femtoseconds(rec.time(i))};
        row.insert(row.end(), pops[i].begin(), pops[i].end());
        t.add_row(row);
    }
    return t;
}

inline CsvTable history_csv(const std::vector<IterationRecord>& history) {
    CsvTable t({"iteration", "s", "objective", "step", "constraint_drift_ti", "constraint_drift_tf"});
    for (const auto& r : history) {
        t.add_row({static_cast<double>(r.iteration), r.s, r.objective, r.step, r.drift_ti, r.drift_tf});
    }
    return t;
}

inline CsvTable robustness_csv(const RobustnessScan& scan) {
    CsvTable t({"e0_au", "probability", "infidelity"});
    for (std::size_t i = 0; i < scan.e0_values.size(); ++i) {
        t.add_row({scan.e0_values[i], scan.probabilities[i], scan.infidelities[i]});
    }
    return t;
}

inline CsvTable fit_csv(const QuadraticFit& fit) {
    CsvTable t({"omega_c_invcm", "beta0_fs2", "phi1", "offset", "residual"});
    const double wc = fit.omega_c_defined ? units::angular_frequency_to_wavenumber(fit.omega_c)
                                          : std::numeric_limits<double>::quiet_NaN();
    const double offset = fit.omega_c_defined ? fit.centered_offset : fit.offset;
    t.add_row({wc, units::atomic_to_fs2(fit.beta0), fit.phi1, offset, fit.residual});
    return t;
}

inline CsvTable adiabatic_csv(const AdiabaticTrace& tr) {
    CsvTable t({"time_fs", "pop_minus", "pop_plus", "mixing_angle", "adiabaticity_ratio"});
    for (std::size_t i = 0; i < tr.times.size(); ++i) {
        t.add_row({units::to_femtoseconds(tr.times[i]), tr.pop_minus[i], tr.pop_plus[i], tr.mixing_angle[i],
                   tr.adiabaticity_ratio[i]});
    }
    return t;
}

inline CsvTable time_frequency_csv(const TimeFrequencyMap& map) {
    CsvTable t({"time_fs", "omega_invcm", "intensity"});
    for (std::size_t i = 0; i < map.times.size(); ++i) {
        for (std::size_t j = 0; j < map.omegas.size(); ++j) {
            t.add_row({units::to_femtoseconds(map.times[i]), units::angular_frequency_to_wavenumber(map.omegas[j]),
                       map.at(i, j)});
        }
    }
    return t;
}

}  // namespace spoo
