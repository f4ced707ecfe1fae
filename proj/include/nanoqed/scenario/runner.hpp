#pragma once

#include <fftw3.h>
#include <json.hpp>
#include <Eigen/Core>

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "nanoqed/analysis/interference.hpp"
#include "nanoqed/analysis/population.hpp"
#include "nanoqed/analysis/spectra.hpp"
#include "nanoqed/dynamics/laplace.hpp"
#include "nanoqed/dynamics/scenario.hpp"
#include "nanoqed/dynamics/volterra.hpp"
#include "nanoqed/fit/fit.hpp"
#include "nanoqed/io/csv.hpp"
#include "nanoqed/parallel.hpp"
#include "nanoqed/photonics/kernel.hpp"
#include "nanoqed/scenario/config.hpp"

namespace nanoqed::scenario {

inline constexpr const char* kVersion = "1.0.0";

/// Log-log slope of y against x by least squares.
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < x.size(); ++i) {
        lx.push_back(std::log(x[i]));
        ly.push_back(std::log(y[i]));
    }
    return analysis::detail::linear_fit(lx, ly).slope;
}

/// Runs the stages of a configuration and records outputs for the manifest.
class Runner {
  public:
    Runner(RunConfig cfg, std::filesystem::path out_dir) : cfg_(std::move(cfg)), out_(std::move(out_dir)) {
        std::filesystem::create_directories(out_);
    }

    const RunConfig& config() const { return cfg_; }
    const nlohmann::json& summary() const { return summary_; }

    const TabulatedSpectrum& kernel(const std::string& name) {
        if (auto it = kernels_.find(name); it != kernels_.end()) return it->second;
        const auto& ks = cfg_.kernels.at(name);
        TabulatedSpectrum k;
        if (!ks.file.empty()) {
            k = io::ingest_tabulated_kernel(resolve(ks.file).string(), ks.eps_b);
        } else {
            photonics::KernelOptions opt;
            opt.threads = cfg_.threads;
            k = photonics::kernel_spectrum(ks.geometry, ks.metal, ks.dipole, make_grid(ks.emin, ks.emax, ks.points), opt);
        }
        return kernels_.emplace(name, std::move(k)).first->second;
    }

    const fit::LorentzianSet& model(const std::string& name) {
        if (auto it = models_.find(name); it != models_.end()) return it->second;
        const auto& mdl = cfg_.models.at(name);
        fit::LorentzianSet set;
        switch (mdl.source) {
            case ModelSpec::Source::table:
                set = mdl.table == "h2nm" ? fit::sphere_kernel_h2nm()
                      : mdl.table == "h10nm" ? fit::sphere_kernel_h10nm()
                                              : fit::npom_kernel();
                break;
            case ModelSpec::Source::file: set = io::read_lorentzian_csv(resolve(mdl.file).string()); break;
            case ModelSpec::Source::terms: set = mdl.terms; break;
            case ModelSpec::Source::fit: {
                const auto& k = kernel(mdl.kernel);
                std::vector<double> e, v;
                for (std::size_t i = 0; i < k.size(); ++i) {
                    if (k.grid[i] >= mdl.fit_emin && k.grid[i] <= mdl.fit_emax) {
                        e.push_back(k.grid[i]);
                        v.push_back(k.values[i]);
                    }
                }
                if (e.size() < 2) throw ConfigError("models." + name + ".fit: window holds fewer than two kernel samples");
                const auto r = fit::fit_lorentzians(TabulatedSpectrum(EnergyGrid(e), v), mdl.fit_terms);
                set = r.set;
                fit_reports_[name] = r.report;
                break;
            }
        }
        set.validate_kernel();
        return models_.emplace(name, std::move(set)).first->second;
    }

    /// Exact kernels: kernel_<name>.csv plus Purcell factor and criterion.
    void do_kernels() {
        for (const auto& [name, ks] : cfg_.kernels) {
            const auto& k = kernel(name);
            io::Metadata meta{{"kernel", name}};
            auto& s = summary_["kernels"][name];
            if (ks.file.empty()) {
                meta.push_back({"radius_nm", io::fmt(ks.geometry.radius_nm)});
                meta.push_back({"gap_nm", io::fmt(ks.geometry.gap_nm)});
                meta.push_back({"eps_background", io::fmt(ks.geometry.eps_background)});
                meta.push_back({"omega_p_eV", io::fmt(ks.metal.omega_p)});
                meta.push_back({"gamma_eV", io::fmt(ks.metal.gamma)});
                meta.push_back({"eps_inf", io::fmt(ks.metal.eps_inf)});
                meta.push_back({"dipole_debye", io::fmt(ks.dipole.d_debye)});
                if (k.grid.contains(ks.dipole.omega_e)) {
                    s["purcell_factor"] = photonics::purcell_factor(k, ks.dipole, ks.geometry.eps_background);
                    s["purcell_at_eV"] = ks.dipole.omega_e;
                }
            } else {
                meta.push_back({"source", ks.file});
                if (ks.eps_b) meta.push_back({"eps_b", io::fmt(*ks.eps_b)});
            }
            const auto ipk = k.argmax();
            s["peak_eV"] = k.grid[ipk];
            s["peak_K_eV"] = k.values[ipk];
            if (const auto w = fwhm(k)) s["fwhm_eV"] = *w;
            s["area_THz2"] = convert_area_eV2_to_THz2(area(k));
            try {
                const auto sc = analysis::strong_coupling_criterion(k);
                s["strong_coupling"] = {{"strong", sc.strong}, {"lhs_eV2", sc.lhs}, {"rhs_eV2", sc.rhs}};
            } catch (const NumericError&) {
            }
            write("kernel_" + name + ".csv", [&](const std::string& p) { io::write_kernel_csv(p, k, meta); });
        }
    }

    /// Pseudo-mode models: fit_<name>.csv.
    void do_fits() {
        for (const auto& [name, mdl] : cfg_.models) {
            const auto& m = model(name);
            io::Metadata meta{{"model", name}};
            auto& s = summary_["models"][name];
            s["terms"] = m.size();
            s["total_area_THz2"] = convert_area_eV2_to_THz2(m.total_area());
            if (auto it = fit_reports_.find(name); it != fit_reports_.end()) {
                meta.push_back({"residual_rel_L2", io::fmt(it->second.residual_rel_L2)});
                s["fit_residual_rel_L2"] = it->second.residual_rel_L2;
                s["fit_converged"] = it->second.converged;
            }
            write("fit_" + name + ".csv", [&](const std::string& p) { io::write_fit_csv(p, m, meta); });
        }
    }

    dynamics::ScenarioConfig run_config(const RunSpec& r) {
        auto c = r.config;
        c.kernel = model(r.model);
        return c;
    }

    void do_evolve() {
        for (const auto& r : cfg_.runs) {
            const auto c = run_config(r);
            auto& s = summary_["runs"][r.id];
            s["model"] = r.model;
            s["omega_e_eV"] = c.omega_e;
            const auto sol = dynamics::solve_laplace(c);
            std::optional<dynamics::AmplitudeTrace> lap, vol;
            if (r.solver != "volterra") {
                dynamics::TraceOptions to;
                to.norm_stride = 10;
                to.threads = cfg_.threads;
                lap = dynamics::evolve(sol, to);
                double dev = 0.0;
                for (double n : lap->norm)
                    if (!std::isnan(n)) dev = std::max(dev, std::abs(n - 1.0));
                s["laplace"] = {{"max_norm_deviation", dev}, {"final_population", std::norm(lap->c_e0.back())}};
                write("traces_" + r.id + "_laplace.csv", [&](const std::string& p) { io::write_trace_csv(p, *lap, "laplace", meta(r)); });
                write("expsum_" + r.id + ".csv", [&](const std::string& p) { io::write_expsum_csv(p, sol.c_e0, meta(r)); });
            }
            if (r.solver != "laplace") {
                const auto k = dynamics::exponential_time_kernel(c.kernel, c.omega_e);
                auto src = [&](double t) { return dynamics::source_term(sol.sources, c.omega_e, t); };
                vol = dynamics::integrate_ide(k, src, sol.c_e0_init, c.t_max, c.dt);
                s["volterra"] = {{"final_population", std::norm(vol->c_e0.back())}};
                write("traces_" + r.id + "_volterra.csv", [&](const std::string& p) { io::write_trace_csv(p, *vol, "volterra", meta(r)); });
            }
            if (lap && vol) {
                double d = 0.0;
                for (std::size_t n = 0; n < lap->times.size(); ++n) d = std::max(d, std::abs(std::norm(lap->c_e0[n]) - std::norm(vol->c_e0[n])));
                s["max_population_difference"] = d;
            }
            if (r.spectrum) {
                auto cs = c;
                cs.t_max = r.spectrum->t_max;
                cs.dt = r.spectrum->dt;
                const auto sol2 = dynamics::solve_laplace(cs);
                dynamics::TraceOptions to;
                to.norm_stride = 0;
                to.threads = cfg_.threads;
                const auto tr = dynamics::evolve(sol2, to);
                const auto coh = analysis::coherence_spectrum(tr, c.omega_e, r.spectrum->options);
                const auto peaks = analysis::classify_peaks(coh.energies, coh.magnitude, c.omega_e, 0.005);
                if (const auto sp = analysis::rabi_splitting(coh)) s["rabi_splitting_eV"] = *sp;
                const auto gmax = std::max_element(coh.magnitude.begin(), coh.magnitude.end()) - coh.magnitude.begin();
                s["spectrum_peak_eV"] = coh.energies[static_cast<std::size_t>(gmax)];
                s["spectrum_peaks"] = peaks.all.size();
                write("spectrum_" + r.id + ".csv", [&](const std::string& p) { io::write_spectrum_csv(p, coh, meta(r)); });
            }
            if (r.map) do_map(r, sol);
        }
    }

    void do_maps() {
        for (const auto& r : cfg_.runs) {
            if (!r.map) continue;
            const auto sol = dynamics::solve_laplace(run_config(r));
            do_map(r, sol);
        }
    }

    void do_scans() {
        for (const auto& scan : cfg_.scans) {
            if (const auto* x = std::get_if<CrossoverSpec>(&scan.body)) {
                crossover(scan.id, *x);
            } else {
                beating(scan.id, std::get<BeatingSpec>(scan.body));
            }
        }
    }

    void do_benchmark() {
        if (!cfg_.benchmark) return;
        const auto& b = *cfg_.benchmark;
        const auto& m = model(b.model);
        // dominant term of the model sets the Rabi-period oracle
        const auto dom = *std::max_element(m.terms.begin(), m.terms.end(),
                                           [](const auto& a, const auto& c) { return a.area < c.area; });
        const double disc = 4.0 * dom.area - dom.half_width * dom.half_width;
        const double oracle = disc > 0.0 ? 2.0 * std::numbers::pi * kHbar / std::sqrt(disc) : std::nan("");
        std::vector<std::vector<double>> rows;
        for (double w : b.omega_e) {
            dynamics::ScenarioConfig c;
            c.kernel = m;
            c.omega_e = w;
            c.t_max = b.t_max;
            c.dt = b.dt;
            const auto sol = dynamics::solve_laplace(c);
            dynamics::TraceOptions to;
            to.norm_stride = 10;
            to.threads = cfg_.threads;
            const auto tr = dynamics::evolve(sol, to);
            const auto reg = analysis::population_regime(tr);
            const std::string tag = io::fmt(w);
            write("traces_benchmark_" + tag + ".csv", [&](const std::string& p) {
                io::write_trace_csv(p, tr, "laplace", {{"model", b.model}, {"omega_e_eV", tag}});
            });
            rows.push_back({w, reg.oscillatory ? 1.0 : 0.0, static_cast<double>(reg.revivals), reg.period.value_or(std::nan("")), oracle});
            summary_["benchmark"][tag] = {{"oscillatory", reg.oscillatory},
                                          {"period_fs", reg.period ? nlohmann::json(*reg.period) : nlohmann::json(nullptr)},
                                          {"oracle_period_fs", std::isnan(oracle) ? nlohmann::json(nullptr) : nlohmann::json(oracle)}};
        }
        write("benchmark.csv", [&](const std::string& p) {
            io::write_table_csv(p, "benchmark", {"omega_e_eV", "oscillatory", "revivals", "period_fs", "oracle_period_fs"}, rows,
                                {{"model", b.model}, {"dominant_center_eV", io::fmt(dom.center)}});
        });
    }

    /// Writes manifest.json and returns it.
    nlohmann::json write_manifest(const std::string& command) {
        nlohmann::json m;
        m["scenario"] = cfg_.scenario;
        m["command"] = command;
        m["config_hash"] = config_hash(cfg_.canonical);
        std::set<std::string> solvers;
        for (const auto& r : cfg_.runs) solvers.insert(r.solver);
        m["solvers"] = solvers;
        m["threads"] = cfg_.threads;
        m["outputs"] = outputs_;
        m["versions"] = {{"nanoqed", kVersion},
                         {"csv_schema", io::kCsvSchemaVersion},
                         {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                       std::to_string(EIGEN_MINOR_VERSION)},
                         {"fftw", std::string(fftw_version)},
                         {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                               std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                               std::to_string(NLOHMANN_JSON_VERSION_PATCH)}};
        m["summary"] = summary_;
        const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
        char buf[32];
        std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
        m["created"] = buf;
        std::ofstream(out_ / "manifest.json") << m.dump(2) << '\n';
        return m;
    }

  private:
    std::filesystem::path resolve(const std::string& p) const {
        const std::filesystem::path q(p);
        return q.is_absolute() ? q : cfg_.base_dir / q;
    }

    template <class Fn>
    void write(const std::string& name, Fn&& fn) {
        fn((out_ / name).string());
        outputs_.push_back(name);
    }

    io::Metadata meta(const RunSpec& r) const {
        return {{"run", r.id}, {"model", r.model}, {"omega_e_eV", io::fmt(r.config.omega_e)}};
    }

    void do_map(const RunSpec& r, const dynamics::LaplaceSolution& sol) {
        const auto& ms = *r.map;
        const auto grid = make_grid(ms.emin, ms.emax, ms.points);
        const auto field = dynamics::compute_photon_field(sol, grid, make_time_grid(ms.t_max, ms.dt), cfg_.threads);
        write("map_" + r.id + ".csv", [&](const std::string& p) { io::write_map_csv(p, field, meta(r)); });
        auto& ms_sum = summary_["runs"][r.id]["map"];
        std::vector<double> last(field.grid.size());
        for (std::size_t i = 0; i < last.size(); ++i) last[i] = field.density[i].back();
        const auto split = analysis::rabi_splitting(std::vector<double>(field.grid.values().begin(), field.grid.values().end()), last,
                                                    r.config.omega_e);
        ms_sum["final_time_splitting_eV"] = split ? nlohmann::json(*split) : nlohmann::json(nullptr);
        if (ms.B > 0.0) {
            // both readings of the relaxation time
            ms_sum["T1_ordinary_fs"] = 2.0 * std::numbers::pi * kHbar / ms.B;
            ms_sum["T1_angular_fs"] = kHbar / ms.B;
        }
        const auto kern = fit::eval_lorentzians(sol.config.kernel, grid);
        const auto inten = analysis::field_intensity_at_dipole(field, kern, photonics::Dipole{24.0, r.config.omega_e});
        std::vector<std::vector<double>> rows;
        for (std::size_t n = 0; n < field.times.size(); ++n) rows.push_back({field.times[n], inten[n]});
        write("intensity_" + r.id + ".csv", [&](const std::string& p) {
            io::write_table_csv(p, "intensity", {"t_fs", "intensity_V2_per_m2"}, rows, meta(r));
        });
        if (ms.b > 0.0) {
            analysis::MapOptions mo;
            mo.B = ms.B;
            const auto m = analysis::interference_map(field, r.config.omega_e, ms.b, mo);
            auto& s = ms_sum;
            s["node_lines"] = m.lines.size();
            s["rabi_node_lines"] = m.rabi_lines;
            s["contrast"] = m.contrast;
            s["relative_contrast"] = m.relative_contrast;
            write("nodes_" + r.id + ".csv", [&](const std::string& p) { io::write_nodes_csv(p, m, meta(r)); });
        }
    }

    void crossover(const std::string& id, const CrossoverSpec& x) {
        dynamics::ScenarioConfig base;
        base.kernel = model(x.model);
        base.omega_e = x.omega_e;
        const double gk = x.gamma_k ? *x.gamma_k : analysis::strong_coupling_criterion(base.kernel).fwhm;
        std::vector<double> sigmas;
        const double fw = 2.0 * std::sqrt(2.0 * std::numbers::ln2);
        for (double r : x.width_ratios) sigmas.push_back(r * gk / fw);
        analysis::CrossoverOptions opt;
        opt.t_max = x.spectrum.t_max;
        opt.dt = x.spectrum.dt;
        opt.coherence = x.spectrum.options;
        opt.threads = cfg_.threads;
        const auto rows = analysis::crossover_scan(base, sigmas, gk, opt);
        std::vector<std::vector<double>> table;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const auto& r = rows[i];
            table.push_back({r.width_ratio, r.sigma, r.elastic, r.shoulder, r.peak_ratio, r.splitting.value_or(std::nan(""))});
            write("spectrum_" + id + "_" + std::to_string(i) + ".csv", [&](const std::string& p) {
                io::write_spectrum_csv(p, r.spectrum, {{"scan", id}, {"sigma_eV", io::fmt(r.sigma)}});
            });
        }
        write("scan_" + id + ".csv", [&](const std::string& p) {
            io::write_table_csv(p, "scan-crossover", {"width_ratio", "sigma_eV", "elastic", "shoulder", "peak_ratio", "splitting_eV"},
                                table, {{"scan", id}, {"model", x.model}, {"gamma_k_eV", io::fmt(gk)}});
        });
        auto& s = summary_["scans"][id];
        s["gamma_k_eV"] = gk;
        for (const auto& r : rows) s["peak_ratio"].push_back(std::isinf(r.peak_ratio) ? nlohmann::json(nullptr) : nlohmann::json(r.peak_ratio));
    }

    void beating(const std::string& id, const BeatingSpec& b) {
        const double peak_k = b.peak_k ? *b.peak_k : kernel(b.kernel).at(b.omega_max);
        const double ref = convert_area_THz2_to_eV2(b.reference_area_THz2);
        struct Row {
            double area, B;
            std::vector<double> periods;
        };
        std::vector<Row> rows(b.area_factors.size());
        parallel_for(rows.size(), cfg_.threads, [&](std::size_t i) {
            const double A = ref * b.area_factors[i];
            const double B = A / (std::numbers::pi * peak_k);
            dynamics::ScenarioConfig c;
            c.kernel = fit::LorentzianSet{{{A, B, b.omega_max}}};
            c.omega_e = b.omega_e;
            c.t_max = b.map.t_max;
            const auto sol = dynamics::solve_laplace(c);
            const auto field = dynamics::compute_photon_field(sol, make_grid(b.map.emin, b.map.emax, b.map.points),
                                                              make_time_grid(b.map.t_max, b.map.dt));
            rows[i].area = A;
            rows[i].B = B;
            for (double p : b.probes) rows[i].periods.push_back(analysis::beating_period(field, p, 2.0 * std::numbers::pi * kHbar / B));
        });
        std::vector<std::vector<double>> table;
        io::Metadata meta{{"scan", id}, {"peak_K_eV", io::fmt(peak_k)}};
        auto& s = summary_["scans"][id];
        for (std::size_t j = 0; j < b.probes.size(); ++j) {
            std::vector<double> x, y;
            for (const auto& r : rows) {
                x.push_back(r.area);
                y.push_back(r.periods[j]);
                table.push_back({b.probes[j], convert_area_eV2_to_THz2(r.area), r.B, r.periods[j]});
            }
            const double slope = loglog_slope(x, y);
            meta.push_back({"slope_" + io::fmt(b.probes[j]), io::fmt(slope)});
            s["slopes"][io::fmt(b.probes[j])] = slope;
        }
        write("scan_" + id + ".csv", [&](const std::string& p) {
            io::write_table_csv(p, "scan-beating", {"probe_eV", "area_THz2", "B_eV", "T_beat_fs"}, table, meta);
        });
    }

    RunConfig cfg_;
    std::filesystem::path out_;
    std::map<std::string, TabulatedSpectrum> kernels_;
    std::map<std::string, fit::LorentzianSet> models_;
    std::map<std::string, fit::FitReport> fit_reports_;
    nlohmann::json summary_ = nlohmann::json::object();
    std::vector<std::string> outputs_;
};

}  // namespace nanoqed::scenario
