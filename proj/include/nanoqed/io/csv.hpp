#pragma once

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "nanoqed/analysis/interference.hpp"
#include "nanoqed/analysis/spectra.hpp"
#include "nanoqed/dynamics/laplace.hpp"
#include "nanoqed/dynamics/scenario.hpp"
#include "nanoqed/errors.hpp"
#include "nanoqed/fit/lorentzian.hpp"
#include "nanoqed/spectrum.hpp"
#include "nanoqed/units.hpp"

namespace nanoqed::io {

/// First line of every CSV written here: "# nanoqed-csv/<version> <kind>".
inline constexpr int kCsvSchemaVersion = 1;

using Metadata = std::vector<std::pair<std::string, std::string>>;

/// Shortest round-trip decimal form; "nan" for NaN.
inline std::string fmt(double x) {
    if (std::isnan(x)) return "nan";
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, r.ptr);
}

class CsvWriter {
  public:
    CsvWriter(const std::string& path, const std::string& kind, const std::vector<std::string>& columns,
              const Metadata& meta = {})
        : out_(path), path_(path) {
        if (!out_) throw std::runtime_error("cannot open " + path + " for writing");
        out_ << "# nanoqed-csv/" << kCsvSchemaVersion << ' ' << kind << '\n';
        for (const auto& [k, v] : meta) out_ << "# " << k << '=' << v << '\n';
        for (std::size_t i = 0; i < columns.size(); ++i) out_ << (i ? "," : "") << columns[i];
        out_ << '\n';
        ncol_ = columns.size();
    }

    void row(const std::vector<double>& values) {
        if (values.size() != ncol_) throw std::logic_error("CSV row width differs from header");
        for (std::size_t i = 0; i < values.size(); ++i) out_ << (i ? "," : "") << fmt(values[i]);
        out_ << '\n';
    }

    void row_text(const std::vector<std::string>& values) {
        if (values.size() != ncol_) throw std::logic_error("CSV row width differs from header");
        for (std::size_t i = 0; i < values.size(); ++i) out_ << (i ? "," : "") << values[i];
        out_ << '\n';
    }

    ~CsvWriter() { out_.flush(); }

  private:
    std::ofstream out_;
    std::string path_;
    std::size_t ncol_ = 0;
};

inline void write_kernel_csv(const std::string& path, const TabulatedSpectrum& k, const Metadata& meta = {}) {
    CsvWriter w(path, "kernel", {"energy_eV", "K_eV"}, meta);
    for (std::size_t i = 0; i < k.size(); ++i) w.row({k.grid[i], k.values[i]});
}

inline void write_fit_csv(const std::string& path, const fit::LorentzianSet& set, const Metadata& meta = {}) {
    CsvWriter w(path, "fit", {"A_THz2", "B_eV", "Omega_eV"}, meta);
    for (const auto& t : set.terms) w.row({convert_area_eV2_to_THz2(t.area), t.half_width, t.center});
}

inline void write_trace_csv(const std::string& path, const dynamics::AmplitudeTrace& tr, const std::string& solver,
                            Metadata meta = {}) {
    meta.insert(meta.begin(), {"solver", solver});
    CsvWriter w(path, "trace", {"t_fs", "re_c_e0", "im_c_e0", "re_c_g0", "im_c_g0", "norm"}, meta);
    for (std::size_t n = 0; n < tr.times.size(); ++n) {
        w.row({tr.times[n], tr.c_e0[n].real(), tr.c_e0[n].imag(), tr.c_g0[n].real(), tr.c_g0[n].imag(), tr.norm[n]});
    }
}

inline void write_expsum_csv(const std::string& path, const dynamics::ExponentialSum& s, const Metadata& meta = {}) {
    CsvWriter w(path, "expsum", {"re_X", "im_X", "re_Y", "im_Y", "k"}, meta);
    for (const auto& t : s.terms) w.row({t.X.real(), t.X.imag(), t.Y.real(), t.Y.imag(), static_cast<double>(t.k)});
}

inline void write_spectrum_csv(const std::string& path, const analysis::CoherenceSpectrum& s, Metadata meta = {}) {
    meta.insert(meta.begin(), {"omega_e_eV", fmt(s.omega_e)});
    CsvWriter w(path, "spectrum", {"energy_eV", "magnitude"}, meta);
    for (std::size_t i = 0; i < s.energies.size(); ++i) w.row({s.energies[i], s.magnitude[i]});
}

/// Long format, one row per (energy, time) sample.
inline void write_map_csv(const std::string& path, const dynamics::PhotonField& f, const Metadata& meta = {}) {
    CsvWriter w(path, "map", {"omega_eV", "t_fs", "density"}, meta);
    for (std::size_t i = 0; i < f.grid.size(); ++i)
        for (std::size_t n = 0; n < f.times.size(); ++n) w.row({f.grid[i], f.times[n], f.density[i][n]});
}

inline const char* law_name(analysis::PhaseLaw l) {
    switch (l) {
        case analysis::PhaseLaw::minus_b: return "minus_b";
        case analysis::PhaseLaw::plus_b: return "plus_b";
        default: return "free";
    }
}

/// One row per fitted node segment.
inline void write_nodes_csv(const std::string& path, const analysis::MapAnalysis& m, Metadata meta = {}) {
    meta.push_back({"rabi_lines", std::to_string(m.rabi_lines)});
    meta.push_back({"contrast", fmt(m.contrast)});
    meta.push_back({"relative_contrast", fmt(m.relative_contrast)});
    CsvWriter w(path, "nodes", {"line", "t0_fs", "delta0_eV", "slope_eV_per_fs", "r2", "law", "rel_error", "rabi"}, meta);
    for (std::size_t l = 0; l < m.lines.size(); ++l) {
        for (const auto& s : m.lines[l].segments) {
            const bool is_rabi = m.lines[l].rabi && m.lines[l].rabi->t0 == s.t0;
            w.row_text({std::to_string(l), fmt(s.t0), fmt(s.delta0), fmt(s.slope), fmt(s.r2), law_name(s.law),
                        fmt(s.rel_error), is_rabi ? "1" : "0"});
        }
    }
}

/// Generic numeric table (scans, benchmarks).
inline void write_table_csv(const std::string& path, const std::string& kind, const std::vector<std::string>& columns,
                            const std::vector<std::vector<double>>& rows, const Metadata& meta = {}) {
    CsvWriter w(path, kind, columns, meta);
    for (const auto& r : rows) w.row(r);
}

namespace detail {

inline std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(line);
    while (std::getline(is, cur, sep)) out.push_back(cur);
    if (!line.empty() && line.back() == sep) out.push_back("");
    return out;
}

inline std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

inline bool parse_double(const std::string& s, double& v) {
    const auto t = trim(s);
    if (t.empty()) return false;
    const auto r = std::from_chars(t.data(), t.data() + t.size(), v);
    return r.ec == std::errc() && r.ptr == t.data() + t.size();
}

// Numeric rows of a comma, whitespace or semicolon separated file; '#' lines
// and a leading non-numeric header line are skipped.
inline std::vector<std::vector<double>> read_numeric_rows(const std::string& path, std::size_t columns) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path);
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t lineno = 0;
    bool header_allowed = true;
    while (std::getline(in, line)) {
        ++lineno;
        const auto t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        std::string norm = t;
        for (auto& c : norm)
            if (c == ';' || c == '\t') c = ',';
        auto fields = split(norm, ',');
        if (fields.size() == 1) {
            std::istringstream ws(norm);
            fields.clear();
            for (std::string f; ws >> f;) fields.push_back(f);
        }
        std::vector<double> v;
        bool ok = fields.size() == columns;
        for (std::size_t i = 0; ok && i < fields.size(); ++i) {
            double x = 0.0;
            ok = parse_double(fields[i], x) && std::isfinite(x);
            v.push_back(x);
        }
        if (!ok) {
            if (header_allowed) {
                header_allowed = false;
                continue;
            }
            throw ConfigError(path + ":" + std::to_string(lineno) + ": expected " + std::to_string(columns) +
                              " numeric columns");
        }
        header_allowed = false;
        rows.push_back(std::move(v));
    }
    if (rows.empty()) throw ConfigError(path + ": no numeric rows");
    return rows;
}

}  // namespace detail

/// Lorentzian table with columns A_THz2, B_eV, Omega_eV.
inline fit::LorentzianSet read_lorentzian_csv(const std::string& path) {
    const auto rows = detail::read_numeric_rows(path, 3);
    std::vector<fit::TableRow> t;
    for (const auto& r : rows) t.push_back({r[0], r[1], r[2]});
    auto set = fit::from_table(t);
    try {
        set.validate_kernel();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(path + ": " + e.what());
    }
    return set;
}

/// Two-column (energy eV, value) spectrum. With `eps_b` the values are taken
/// in the J convention and rescaled by sqrt(eps_b) / 8.
inline TabulatedSpectrum ingest_tabulated_kernel(const std::string& path, std::optional<double> eps_b = std::nullopt) {
    const auto rows = detail::read_numeric_rows(path, 2);
    double scale = 1.0;
    if (eps_b) {
        if (!(*eps_b >= 1.0)) throw ConfigError("background permittivity for rescaling must be >= 1");
        scale = std::sqrt(*eps_b) / 8.0;
    }
    std::vector<double> e, v;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (i > 0 && !(rows[i][0] > rows[i - 1][0])) {
            throw ConfigError(path + ": energies must be strictly increasing (row " + std::to_string(i + 1) + ", " +
                              fmt(rows[i][0]) + " eV)");
        }
        if (rows[i][1] < 0.0) throw ConfigError(path + ": negative spectral value at " + fmt(rows[i][0]) + " eV");
        e.push_back(rows[i][0]);
        v.push_back(scale * rows[i][1]);
    }
    try {
        return TabulatedSpectrum(EnergyGrid(std::move(e)), std::move(v));
    } catch (const std::invalid_argument& ex) {
        throw ConfigError(path + ": " + ex.what());
    }
}

}  // namespace nanoqed::io
