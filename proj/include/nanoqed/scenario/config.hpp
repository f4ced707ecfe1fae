#pragma once

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "nanoqed/analysis/spectra.hpp"
#include "nanoqed/dynamics/scenario.hpp"
#include "nanoqed/errors.hpp"
#include "nanoqed/photonics/drude.hpp"
#include "nanoqed/photonics/kernel.hpp"
#include "nanoqed/photonics/mie.hpp"

namespace nanoqed::scenario {

using json = nlohmann::json;

/// Exact kernel from the sphere model, or a tabulated spectrum from file.
struct KernelSpec {
    photonics::SphereGeometry geometry;
    photonics::DrudeMetal metal;
    photonics::Dipole dipole;  // omega_e sets the Purcell evaluation point
    double emin = 2.4, emax = 3.4;
    std::size_t points = 4001;
    std::string file;                // tabulated spectrum when non-empty
    std::optional<double> eps_b;     // J-convention rescale for `file`
};

/// Lorentzian pseudo-mode model used by the dynamics.
struct ModelSpec {
    enum class Source { table, file, terms, fit } source = Source::table;
    std::string table = "h2nm";  // h2nm | h10nm | npom
    std::string file;
    fit::LorentzianSet terms;
    std::string kernel;  // for Source::fit
    std::size_t fit_terms = 3;
    double fit_emin = 2.4, fit_emax = 3.4;
};

struct SpectrumSpec {
    double t_max = 2000.0;
    double dt = 0.05;
    analysis::CoherenceOptions options{analysis::Window::tail, 8, 2.5, 3.5};
};

struct MapSpec {
    double emin = 2.6, emax = 3.4;
    std::size_t points = 401;
    double t_max = 200.0, dt = 0.25;
    double b = 0.0;  // eV, Rabi frequency of the reference phase law
    double B = 0.0;  // eV, relaxation width setting the analysis window
};

struct RunSpec {
    std::string id;
    std::string model;
    dynamics::ScenarioConfig config;  // kernel filled in from `model` at run time
    std::string solver = "laplace";
    std::optional<SpectrumSpec> spectrum;
    std::optional<MapSpec> map;
};

struct CrossoverSpec {
    std::string model;
    double omega_e = 2.97;
    std::vector<double> width_ratios;
    std::optional<double> gamma_k;
    SpectrumSpec spectrum;
};

struct BeatingSpec {
    double omega_e = 2.97;
    double omega_max = 2.97;
    std::string kernel;            // exact kernel giving K(omega_max)
    std::optional<double> peak_k;  // eV, overrides `kernel`
    double reference_area_THz2 = 278.9;
    std::vector<double> area_factors;
    std::vector<double> probes;
    MapSpec map;
};

struct ScanSpec {
    std::string id;
    std::variant<CrossoverSpec, BeatingSpec> body;
};

struct BenchmarkSpec {
    std::string model;
    std::vector<double> omega_e;
    double t_max = 300.0, dt = 0.05;
};

struct RunConfig {
    std::string scenario;
    unsigned threads = 1;
    std::map<std::string, KernelSpec> kernels;
    std::map<std::string, ModelSpec> models;
    std::vector<RunSpec> runs;
    std::vector<ScanSpec> scans;
    std::optional<BenchmarkSpec> benchmark;
    json canonical;  // config after overrides, for hashing
    std::filesystem::path base_dir;
};

namespace detail {

/// JSON object view that reports errors with the field path and rejects
/// unknown keys once all fields were read.
class Obj {
  public:
    Obj(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(path_ + ": expected an object");
    }

    ~Obj() noexcept(false) {
        if (std::uncaught_exceptions() > 0) return;
        for (auto it = j_.begin(); it != j_.end(); ++it) {
            if (!seen_.count(it.key())) throw ConfigError(where(it.key()) + ": unknown field");
        }
    }

    const std::string& path() const { return path_; }
    std::string where(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
    bool has(const std::string& key) const { return j_.contains(key); }

    const json& raw(const std::string& key) {
        seen_.insert(key);
        if (!j_.contains(key)) throw ConfigError(where(key) + ": required field missing");
        return j_.at(key);
    }

    double num(const std::string& key) {
        const auto& v = raw(key);
        if (!v.is_number()) throw ConfigError(where(key) + ": expected a number");
        return v.get<double>();
    }
    double num(const std::string& key, double def) { return has(key) ? num(key) : (seen_.insert(key), def); }

    double positive(const std::string& key, double def) {
        const double v = num(key, def);
        if (!(v > 0.0)) throw ConfigError(where(key) + ": must be positive");
        return v;
    }

    std::size_t count(const std::string& key, std::size_t def) {
        if (!has(key)) return def;
        const auto& v = raw(key);
        if (!v.is_number_integer() || v.get<long long>() < 1) throw ConfigError(where(key) + ": expected a positive integer");
        return v.get<std::size_t>();
    }

    std::string str(const std::string& key) {
        const auto& v = raw(key);
        if (!v.is_string()) throw ConfigError(where(key) + ": expected a string");
        return v.get<std::string>();
    }
    std::string str(const std::string& key, const std::string& def) { return has(key) ? str(key) : (seen_.insert(key), def); }

    std::string choice(const std::string& key, const std::string& def, const std::vector<std::string>& allowed) {
        const auto v = str(key, def);
        for (const auto& a : allowed)
            if (a == v) return v;
        std::string list;
        for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
        throw ConfigError(where(key) + ": '" + v + "' is not one of " + list);
    }

    std::vector<double> numbers(const std::string& key) {
        const auto& v = raw(key);
        if (!v.is_array() || v.empty()) throw ConfigError(where(key) + ": expected a non-empty array of numbers");
        std::vector<double> out;
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (!v[i].is_number()) throw ConfigError(where(key) + "[" + std::to_string(i) + "]: expected a number");
            out.push_back(v[i].get<double>());
        }
        return out;
    }

    Obj obj(const std::string& key) { return Obj(raw(key), where(key)); }

  private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

inline void check_range(double lo, double hi, const std::string& where) {
    if (!(lo > 0.0) || !(hi > lo)) throw ConfigError(where + ": need 0 < emin < emax");
}

inline SpectrumSpec parse_spectrum(Obj o) {
    SpectrumSpec s;
    s.t_max = o.positive("t_max_fs", s.t_max);
    s.dt = o.positive("dt_fs", s.dt);
    s.options.emin = o.positive("emin_eV", s.options.emin);
    s.options.emax = o.positive("emax_eV", s.options.emax);
    check_range(s.options.emin, s.options.emax, o.where("emin_eV"));
    const auto win = o.choice("window", "tail", {"none", "hann", "tail"});
    s.options.window = win == "hann" ? analysis::Window::hann : win == "none" ? analysis::Window::none : analysis::Window::tail;
    s.options.pad_factor = o.count("pad_factor", 8);
    if (s.t_max / s.dt + 1.0 < 256.0) throw ConfigError(o.where("t_max_fs") + ": spectrum trace needs at least 256 samples");
    return s;
}

inline MapSpec parse_map(Obj o) {
    MapSpec m;
    m.emin = o.positive("emin_eV", m.emin);
    m.emax = o.positive("emax_eV", m.emax);
    check_range(m.emin, m.emax, o.where("emin_eV"));
    m.points = o.count("points", m.points);
    if (m.points < 3) throw ConfigError(o.where("points") + ": need at least 3 points");
    m.t_max = o.positive("t_max_fs", m.t_max);
    m.dt = o.positive("dt_fs", m.dt);
    m.b = o.num("b_eV", 0.0);
    m.B = o.num("B_eV", 0.0);
    if (m.b < 0.0 || m.B < 0.0) throw ConfigError(o.where("b_eV") + ": b_eV and B_eV must be non-negative");
    return m;
}

inline KernelSpec parse_kernel(Obj o) {
    KernelSpec k;
    if (o.has("file")) {
        k.file = o.str("file");
        if (o.has("eps_b")) k.eps_b = o.positive("eps_b", 1.0);
        return k;
    }
    k.geometry.radius_nm = o.positive("radius_nm", k.geometry.radius_nm);
    k.geometry.gap_nm = o.positive("gap_nm", k.geometry.gap_nm);
    k.geometry.eps_background = o.num("eps_background", k.geometry.eps_background);
    if (k.geometry.eps_background < 1.0) throw ConfigError(o.where("eps_background") + ": must be >= 1");
    if (o.has("metal")) {
        auto m = o.obj("metal");
        k.metal.omega_p = m.positive("omega_p_eV", k.metal.omega_p);
        k.metal.gamma = m.num("gamma_eV", k.metal.gamma);
        k.metal.eps_inf = m.num("eps_inf", k.metal.eps_inf);
        if (k.metal.gamma < 0.0) throw ConfigError(m.where("gamma_eV") + ": must be non-negative");
        if (k.metal.eps_inf < 1.0) throw ConfigError(m.where("eps_inf") + ": must be >= 1");
    }
    k.dipole.d_debye = o.positive("dipole_debye", k.dipole.d_debye);
    k.dipole.omega_e = o.positive("omega_e_eV", k.dipole.omega_e);
    if (o.has("grid")) {
        auto g = o.obj("grid");
        k.emin = g.positive("emin_eV", k.emin);
        k.emax = g.positive("emax_eV", k.emax);
        check_range(k.emin, k.emax, g.where("emin_eV"));
        k.points = g.count("points", k.points);
        if (k.points < 3) throw ConfigError(g.where("points") + ": need at least 3 points");
    }
    return k;
}

inline ModelSpec parse_model(Obj o) {
    ModelSpec m;
    int sources = 0;
    if (o.has("table")) {
        ++sources;
        m.source = ModelSpec::Source::table;
        m.table = o.choice("table", "h2nm", {"h2nm", "h10nm", "npom"});
    }
    if (o.has("file")) {
        ++sources;
        m.source = ModelSpec::Source::file;
        m.file = o.str("file");
    }
    if (o.has("terms")) {
        ++sources;
        m.source = ModelSpec::Source::terms;
        const auto& arr = o.raw("terms");
        if (!arr.is_array() || arr.empty()) throw ConfigError(o.where("terms") + ": expected a non-empty array");
        std::vector<fit::TableRow> rows;
        for (std::size_t i = 0; i < arr.size(); ++i) {
            Obj t(arr[i], o.where("terms") + "[" + std::to_string(i) + "]");
            const double a = t.num("A_THz2");
            const double b = t.num("B_eV");
            const double c = t.num("Omega_eV");
            if (a < 0.0 || !(b > 0.0)) throw ConfigError(t.where("A_THz2") + ": need A >= 0 and B > 0");
            rows.push_back({a, b, c});
        }
        m.terms = fit::from_table(rows);
    }
    if (o.has("fit")) {
        ++sources;
        m.source = ModelSpec::Source::fit;
        auto f = o.obj("fit");
        m.kernel = f.str("kernel");
        m.fit_terms = f.count("terms", m.fit_terms);
        m.fit_emin = f.positive("emin_eV", m.fit_emin);
        m.fit_emax = f.positive("emax_eV", m.fit_emax);
        check_range(m.fit_emin, m.fit_emax, f.where("emin_eV"));
    }
    if (sources != 1) throw ConfigError(o.path() + ": needs exactly one of table, file, terms, fit");
    return m;
}

inline dynamics::InitialState parse_initial(Obj o, dynamics::PhotonInit& init) {
    const auto type = o.choice("type", "excited", {"excited", "photon", "drive"});
    if (type == "excited") return dynamics::ExcitedQubit{};
    if (type == "photon") {
        dynamics::GaussianPhoton g;
        g.omega_s = o.positive("omega_s_eV", g.omega_s);
        g.sigma = o.positive("sigma_eV", g.sigma);
        init = o.choice("init", "model_consistent", {"model_consistent", "exact"}) == "exact"
                   ? dynamics::PhotonInit::exact
                   : dynamics::PhotonInit::model_consistent;
        return g;
    }
    dynamics::GroundWithDrive d;
    d.d0_sqrt_hz = o.num("d0_sqrt_hz", d.d0_sqrt_hz);
    if (d.d0_sqrt_hz < 0.0) throw ConfigError(o.where("d0_sqrt_hz") + ": must be non-negative");
    d.omega_s = o.positive("omega_s_eV", d.omega_s);
    d.sigma = o.positive("sigma_eV", d.sigma);
    return d;
}

inline void check_model_ref(const RunConfig& c, const std::string& name, const std::string& where) {
    if (!c.models.count(name)) throw ConfigError(where + ": unknown model '" + name + "'");
}

}  // namespace detail

/// FNV-1a 64-bit hash of the canonical JSON text, as 16 hex digits.
inline std::string config_hash(const json& j) {
    const std::string s = j.dump();
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

/// Command-line overrides applied to every run before parsing, so that the
/// config hash covers them.
struct Overrides {
    std::optional<double> dt, t_max;
    std::optional<std::string> solver;
    std::optional<unsigned> threads;
};

inline void apply_overrides(json& doc, const Overrides& o) {
    if (o.threads) doc["threads"] = *o.threads;
    if (doc.contains("runs") && doc["runs"].is_array()) {
        for (auto& r : doc["runs"]) {
            if (!r.is_object()) continue;
            if (o.dt) r["dt_fs"] = *o.dt;
            if (o.t_max) r["t_max_fs"] = *o.t_max;
            if (o.solver) r["solver"] = *o.solver;
        }
    }
    if (doc.contains("benchmark") && doc["benchmark"].is_object()) {
        if (o.dt) doc["benchmark"]["dt_fs"] = *o.dt;
        if (o.t_max) doc["benchmark"]["t_max_fs"] = *o.t_max;
    }
}

/// Parses and validates a configuration document. Relative file paths are
/// resolved against `base_dir`.
inline RunConfig parse_config(const json& doc, const std::filesystem::path& base_dir = ".") {
    using detail::Obj;
    RunConfig c;
    c.canonical = doc;
    c.base_dir = base_dir;
    Obj root(doc, "");
    c.scenario = root.str("scenario", "custom");
    c.threads = static_cast<unsigned>(root.count("threads", 1));
    if (root.has("kernels")) {
        const auto& ks = root.raw("kernels");
        if (!ks.is_object()) throw ConfigError("kernels: expected an object");
        for (auto it = ks.begin(); it != ks.end(); ++it) c.kernels[it.key()] = detail::parse_kernel(Obj(it.value(), "kernels." + it.key()));
    }
    {
        const auto& ms = root.raw("models");
        if (!ms.is_object() || ms.empty()) throw ConfigError("models: expected a non-empty object");
        for (auto it = ms.begin(); it != ms.end(); ++it) {
            auto m = detail::parse_model(Obj(it.value(), "models." + it.key()));
            if (m.source == ModelSpec::Source::fit && !c.kernels.count(m.kernel)) {
                throw ConfigError("models." + it.key() + ".fit.kernel: unknown kernel '" + m.kernel + "'");
            }
            c.models[it.key()] = std::move(m);
        }
    }
    const std::string default_model = c.models.begin()->first;
    if (root.has("runs")) {
        const auto& rs = root.raw("runs");
        if (!rs.is_array()) throw ConfigError("runs: expected an array");
        std::set<std::string> ids;
        for (std::size_t i = 0; i < rs.size(); ++i) {
            const std::string path = "runs[" + std::to_string(i) + "]";
            Obj r(rs[i], path);
            RunSpec run;
            run.id = r.str("id");
            if (!ids.insert(run.id).second) throw ConfigError(r.where("id") + ": duplicate run id '" + run.id + "'");
            run.model = r.str("model", default_model);
            detail::check_model_ref(c, run.model, r.where("model"));
            run.config.omega_e = r.positive("omega_e_eV", 2.97);
            if (r.has("initial")) run.config.initial = detail::parse_initial(r.obj("initial"), run.config.photon_init);
            run.config.t_max = r.positive("t_max_fs", run.config.t_max);
            run.config.dt = r.positive("dt_fs", run.config.dt);
            run.solver = r.choice("solver", "laplace", {"laplace", "volterra", "both"});
            if (r.has("spectrum")) run.spectrum = detail::parse_spectrum(r.obj("spectrum"));
            if (r.has("map")) run.map = detail::parse_map(r.obj("map"));
            c.runs.push_back(std::move(run));
        }
    }
    if (root.has("scans")) {
        const auto& ss = root.raw("scans");
        if (!ss.is_array()) throw ConfigError("scans: expected an array");
        for (std::size_t i = 0; i < ss.size(); ++i) {
            Obj s(ss[i], "scans[" + std::to_string(i) + "]");
            ScanSpec scan;
            scan.id = s.str("id");
            const auto type = s.choice("type", "", {"crossover", "beating"});
            if (type == "crossover") {
                CrossoverSpec x;
                x.model = s.str("model", default_model);
                detail::check_model_ref(c, x.model, s.where("model"));
                x.omega_e = s.positive("omega_e_eV", x.omega_e);
                x.width_ratios = s.numbers("width_ratios");
                for (double r : x.width_ratios)
                    if (!(r > 0.0)) throw ConfigError(s.where("width_ratios") + ": ratios must be positive");
                if (s.has("gamma_k_eV")) x.gamma_k = s.positive("gamma_k_eV", 0.063);
                if (s.has("spectrum")) x.spectrum = detail::parse_spectrum(s.obj("spectrum"));
                scan.body = x;
            } else {
                BeatingSpec b;
                b.omega_e = s.positive("omega_e_eV", b.omega_e);
                b.omega_max = s.positive("omega_max_eV", b.omega_max);
                if (s.has("peak_K_eV")) b.peak_k = s.positive("peak_K_eV", 1.0);
                if (s.has("kernel")) {
                    b.kernel = s.str("kernel");
                    if (!c.kernels.count(b.kernel)) throw ConfigError(s.where("kernel") + ": unknown kernel '" + b.kernel + "'");
                }
                if (!b.peak_k && b.kernel.empty()) throw ConfigError(s.where("kernel") + ": need kernel or peak_K_eV");
                b.reference_area_THz2 = s.positive("reference_area_THz2", b.reference_area_THz2);
                b.area_factors = s.numbers("area_factors");
                for (double f : b.area_factors)
                    if (!(f > 0.0)) throw ConfigError(s.where("area_factors") + ": factors must be positive");
                b.probes = s.numbers("probes_eV");
                if (s.has("map")) b.map = detail::parse_map(s.obj("map"));
                for (double p : b.probes)
                    if (p < b.map.emin || p > b.map.emax) throw ConfigError(s.where("probes_eV") + ": probe outside the map grid");
                scan.body = b;
            }
            c.scans.push_back(std::move(scan));
        }
    }
    if (root.has("benchmark")) {
        Obj b = root.obj("benchmark");
        BenchmarkSpec bm;
        bm.model = b.str("model", default_model);
        detail::check_model_ref(c, bm.model, b.where("model"));
        bm.omega_e = b.numbers("omega_e_eV");
        for (double w : bm.omega_e)
            if (!(w > 0.0)) throw ConfigError(b.where("omega_e_eV") + ": energies must be positive");
        bm.t_max = b.positive("t_max_fs", bm.t_max);
        bm.dt = b.positive("dt_fs", bm.dt);
        c.benchmark = bm;
    }
    return c;
}

inline RunConfig load_config(const std::filesystem::path& path, const Overrides& ov = {}) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    json doc;
    try {
        doc = json::parse(in, nullptr, true, true);
    } catch (const json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    apply_overrides(doc, ov);
    return parse_config(doc, path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path());
}

}  // namespace nanoqed::scenario
