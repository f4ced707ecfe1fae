#pragma once

#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <variant>
#include <vector>

#include "nanoqed/dynamics/laplace.hpp"
#include "nanoqed/errors.hpp"
#include "nanoqed/fit/fit.hpp"
#include "nanoqed/fit/lorentzian.hpp"
#include "nanoqed/parallel.hpp"
#include "nanoqed/units.hpp"

namespace nanoqed::dynamics {

struct ExcitedQubit {};

/// Gaussian single photon exp(-(w - w_s)^2 / 2 sigma^2), unit norm.
struct GaussianPhoton {
    double omega_s = 2.97;  // eV
    double sigma = 0.1;     // eV
};

/// Ground-state dipole under a Gaussian drive spectrum D0 exp(-(w - w_s)^2 / 2 sigma^2).
struct GroundWithDrive {
    double d0_sqrt_hz = 811.0;
    double omega_s = 2.97;
    double sigma = 0.1;
};

using InitialState = std::variant<ExcitedQubit, GaussianPhoton, GroundWithDrive>;

/// How the initial photon enters the photon amplitude.
///
/// `model_consistent` uses the fitted product divided by sqrt(K) of the model
/// kernel, renormalized, so that the source term and the photon amplitude
/// describe the same state. `exact` keeps the analytic Gaussian.
enum class PhotonInit { model_consistent, exact };

struct SourceFitSettings {
    std::size_t terms = 4;
    double half_window_sigmas = 8.0;
    std::size_t points = 1601;
};

/// Quadrature over the whole frequency axis with w = w_e + scale tan(theta).
struct NormQuadrature {
    std::size_t points = 8000;
    double scale_eV = 0.2;
};

struct ScenarioConfig {
    fit::LorentzianSet kernel;
    double omega_e = 2.97;
    InitialState initial = ExcitedQubit{};
    double t_max = 300.0;
    double dt = 0.05;
    PhotonInit photon_init = PhotonInit::model_consistent;
    SourceFitSettings source_fit;
    NormQuadrature norm_quadrature;

    void validate() const {
        kernel.validate_kernel();
        if (!(omega_e > 0.0)) throw std::invalid_argument("transition energy must be positive");
        if (!(t_max >= 0.0)) throw std::invalid_argument("t_max must be non-negative");
        if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
        if (const auto* g = std::get_if<GaussianPhoton>(&initial)) {
            if (!(g->sigma > 0.0)) throw std::invalid_argument("photon bandwidth sigma must be positive");
        }
        if (const auto* d = std::get_if<GroundWithDrive>(&initial)) {
            if (!(d->sigma > 0.0)) throw std::invalid_argument("drive bandwidth sigma must be positive");
            if (!(d->d0_sqrt_hz >= 0.0)) throw std::invalid_argument("drive amplitude must be non-negative");
        }
        if (source_fit.terms < 1) throw std::invalid_argument("source fits need at least one term");
        if (norm_quadrature.points < 100) throw std::invalid_argument("norm quadrature needs >= 100 points");
    }
};

/// Coupling rate density K(w)/hbar (1/fs) of a Lorentzian kernel model.
inline double coupling_rate(const fit::LorentzianSet& kernel, double E) { return kernel(E) / kHbar; }

/// 1/sqrt(sigma_w sqrt(pi)) with sigma_w = sigma/hbar, in fs^(1/2).
inline double gaussian_photon_norm(double sigma_eV) {
    return 1.0 / std::sqrt(sigma_eV / kHbar * std::sqrt(std::numbers::pi));
}

inline double gaussian_envelope(double E, double center, double sigma) {
    const double d = (E - center) / sigma;
    return std::exp(-0.5 * d * d);
}

struct QuadratureNode {
    double energy;  // eV
    double weight;  // rad/fs
};

inline std::vector<QuadratureNode> whole_axis_quadrature(double center, const NormQuadrature& q) {
    std::vector<QuadratureNode> nodes(q.points);
    const double h = std::numbers::pi / static_cast<double>(q.points);
    for (std::size_t i = 0; i < q.points; ++i) {
        const double th = -0.5 * std::numbers::pi + (static_cast<double>(i) + 0.5) * h;
        const double c = std::cos(th);
        nodes[i] = {center + q.scale_eV * std::tan(th), q.scale_eV * h / (c * c) / kHbar};
    }
    return nodes;
}

/// Initial single-photon amplitude C_g1(w, 0) in fs^(1/2).
struct InitialPhoton {
    enum class Mode { vacuum, gaussian, fitted };
    Mode mode = Mode::vacuum;
    GaussianPhoton gaussian;
    fit::LorentzianSet product;  // fitted sqrt(K/hbar) C_g1(w,0)
    fit::LorentzianSet kernel;
    double scale = 1.0;

    double operator()(double E) const {
        switch (mode) {
            case Mode::vacuum:
                return 0.0;
            case Mode::gaussian:
                return gaussian_photon_norm(gaussian.sigma) * gaussian_envelope(E, gaussian.omega_s, gaussian.sigma);
            case Mode::fitted:
                return scale * product(E) / std::sqrt(coupling_rate(kernel, E));
        }
        return 0.0;
    }
};

/// Drive spectrum D(w) in fs^(-1/2).
struct DriveSpectrum {
    double d0 = 0.0;  // fs^(-1/2)
    double omega_s = 0.0;
    double sigma = 1.0;

    bool active() const { return d0 != 0.0; }
    double operator()(double E) const { return d0 * gaussian_envelope(E, omega_s, sigma); }
};

struct LaplaceSolution {
    ScenarioConfig config;
    ExponentialSum c_e0;
    cplx c_e0_init{0.0};
    cplx c_g0_init{0.0};
    InitialPhoton photon;
    DriveSpectrum drive;
    std::vector<SourceSet> sources;
    std::optional<fit::FitReport> photon_fit;
    std::optional<fit::FitReport> drive_fit;
};

/// S(t) from fitted source products (1/fs).
inline cplx source_term(const std::vector<SourceSet>& sources, double omega_e, double t) {
    cplx s(0.0);
    for (const auto& src : sources) {
        for (const auto& term : src.set.terms) {
            const cplx e = src.weight * term.area / kHbar * std::exp(-rotating_rate(term, omega_e) * t);
            s += src.kind == SourceKind::photon ? cplx(0.0, -1.0) * e : -t * e;
        }
    }
    return s;
}

namespace detail {

inline TabulatedSpectrum source_window(const fit::LorentzianSet& kernel, double center, double sigma,
                                       const SourceFitSettings& st) {
    const double lo = std::max(center - st.half_window_sigmas * sigma, 1e-3);
    const double hi = center + st.half_window_sigmas * sigma;
    const auto grid = make_grid(lo, hi, st.points);
    std::vector<double> v(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        v[i] = std::sqrt(coupling_rate(kernel, grid[i])) * gaussian_envelope(grid[i], center, sigma);
    }
    return TabulatedSpectrum(grid, std::move(v));
}

}  // namespace detail

/// Fits the source products, builds and inverts the Laplace solution.
inline LaplaceSolution solve_laplace(const ScenarioConfig& cfg) {
    cfg.validate();
    LaplaceSolution sol;
    sol.config = cfg;
    sol.photon.kernel = cfg.kernel;

    if (std::holds_alternative<ExcitedQubit>(cfg.initial)) {
        sol.c_e0_init = 1.0;
    } else if (const auto* g = std::get_if<GaussianPhoton>(&cfg.initial)) {
        const auto target = detail::source_window(cfg.kernel, g->omega_s, g->sigma, cfg.source_fit);
        TabulatedSpectrum scaled = target;
        for (auto& v : scaled.values) v *= gaussian_photon_norm(g->sigma);
        auto fr = fit::fit_source_product(scaled, cfg.source_fit.terms);
        sol.photon_fit = fr.report;
        sol.photon.gaussian = *g;
        sol.photon.product = fr.set;
        double src_scale = 1.0;
        if (cfg.photon_init == PhotonInit::model_consistent) {
            sol.photon.mode = InitialPhoton::Mode::fitted;
            double n = 0.0;
            for (const auto& q : whole_axis_quadrature(cfg.omega_e, cfg.norm_quadrature)) {
                const double c = sol.photon(q.energy);
                n += q.weight * c * c;
            }
            if (!(n > 0.0)) throw NumericError("fitted initial photon has zero norm");
            sol.photon.scale = 1.0 / std::sqrt(n);
            src_scale = sol.photon.scale;
        } else {
            sol.photon.mode = InitialPhoton::Mode::gaussian;
        }
        sol.sources.push_back({fr.set.scaled(src_scale), SourceKind::photon, 1.0});
    } else if (const auto* d = std::get_if<GroundWithDrive>(&cfg.initial)) {
        sol.c_g0_init = 1.0;
        sol.drive = {sqrt_hz_to_sqrt_per_fs(d->d0_sqrt_hz), d->omega_s, d->sigma};
        if (sol.drive.active()) {
            // unit-amplitude shape, scaled afterwards so the run is exactly linear in D0
            const auto target = detail::source_window(cfg.kernel, d->omega_s, d->sigma, cfg.source_fit);
            auto fr = fit::fit_source_product(target, cfg.source_fit.terms);
            sol.drive_fit = fr.report;
            sol.sources.push_back({fr.set.scaled(sol.drive.d0), SourceKind::drive, sol.c_g0_init});
        }
    }

    const auto rational = build_laplace_rational(cfg.kernel, sol.sources, cfg.omega_e, sol.c_e0_init);
    sol.c_e0 = invert_laplace(rational);
    return sol;
}

/// Integral of s^k exp(z s) over [0, t].
inline cplx exp_moment(cplx z, double t, int k) {
    if (std::abs(z) * t < 1.0) {
        cplx sum(0.0);
        cplx zm(1.0);  // z^m / m!
        double tp = std::pow(t, k + 1);
        for (int m = 0; m < 60; ++m) {
            const cplx term = zm * tp / static_cast<double>(m + k + 1);
            sum += term;
            if (std::abs(term) < 1e-17 * std::abs(sum)) break;
            zm *= z / static_cast<double>(m + 1);
            tp *= t;
        }
        return sum;
    }
    const cplx ezt = std::exp(z * t);
    cplx I = (ezt - 1.0) / z;
    double tj = 1.0;
    for (int j = 1; j <= k; ++j) {
        tj *= t;
        I = (tj * ezt - static_cast<double>(j) * I) / z;
    }
    return I;
}

/// C_g1(w, t) in fs^(1/2) for photon energy E (eV).
inline cplx photon_amplitude(const LaplaceSolution& sol, double E, double t) {
    if (t < 0.0) throw std::invalid_argument("photon amplitude requires t >= 0");
    const double delta = (E - sol.config.omega_e) / kHbar;
    cplx c = sol.photon(E);
    if (sol.drive.active()) c += cplx(0.0, -t) * sol.drive(E) * sol.c_g0_init;
    cplx acc(0.0);
    for (const auto& term : sol.c_e0.terms) acc += term.X * exp_moment(cplx(0.0, delta) - term.Y, t, term.k);
    c += cplx(0.0, -1.0) * std::sqrt(coupling_rate(sol.config.kernel, E)) * acc;
    return c;
}

struct AmplitudeTrace {
    std::vector<double> times;
    std::vector<cplx> c_e0;
    std::vector<cplx> c_g0;
    std::vector<double> norm;  // NaN where not evaluated
};

/// C_g0 on an increasing time grid starting at 0, by trapezoid quadrature
/// in frequency and time.
inline std::vector<cplx> ground_amplitude(const LaplaceSolution& sol, const std::vector<double>& times,
                                          std::size_t drive_points = 401) {
    std::vector<cplx> out(times.size(), sol.c_g0_init);
    if (!sol.drive.active() || times.empty()) return out;
    if (times.front() != 0.0) throw std::invalid_argument("ground amplitude needs a time grid starting at 0");
    const double lo = std::max(sol.drive.omega_s - 8.0 * sol.drive.sigma, 1e-3);
    const auto grid = make_grid(lo, sol.drive.omega_s + 8.0 * sol.drive.sigma, drive_points);
    std::vector<double> dvals(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) dvals[i] = sol.drive(grid[i]);
    auto overlap = [&](double t) {
        cplx s(0.0);
        for (std::size_t i = 1; i < grid.size(); ++i) {
            const double h = (grid[i] - grid[i - 1]) / kHbar;
            s += 0.5 * h *
                 (dvals[i] * photon_amplitude(sol, grid[i], t) + dvals[i - 1] * photon_amplitude(sol, grid[i - 1], t));
        }
        return s;
    };
    cplx prev = overlap(times.front());
    for (std::size_t n = 1; n < times.size(); ++n) {
        const cplx cur = overlap(times[n]);
        out[n] = out[n - 1] + cplx(0.0, -0.5 * (times[n] - times[n - 1])) * (prev + cur);
        prev = cur;
    }
    return out;
}

/// Integral of |C_g1(w,t)|^2 over the whole frequency axis.
inline double photon_probability(const LaplaceSolution& sol, double t) {
    double s = 0.0;
    for (const auto& q : whole_axis_quadrature(sol.config.omega_e, sol.config.norm_quadrature)) {
        s += q.weight * std::norm(photon_amplitude(sol, q.energy, t));
    }
    return s;
}

struct TraceOptions {
    std::size_t norm_stride = 1;  // evaluate the norm on every n-th sample; 0 disables
    unsigned threads = 1;
};

inline AmplitudeTrace evolve(const LaplaceSolution& sol, const std::vector<double>& times,
                             const TraceOptions& opt = {}) {
    AmplitudeTrace tr;
    tr.times = times;
    tr.c_e0.resize(times.size());
    for (std::size_t i = 0; i < times.size(); ++i) tr.c_e0[i] = sol.c_e0(times[i]);
    tr.c_g0 = ground_amplitude(sol, times);
    tr.norm.assign(times.size(), std::numeric_limits<double>::quiet_NaN());
    if (opt.norm_stride > 0) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < times.size(); i += opt.norm_stride) idx.push_back(i);
        parallel_for(idx.size(), opt.threads, [&](std::size_t k) {
            const std::size_t i = idx[k];
            tr.norm[i] = std::norm(tr.c_e0[i]) + std::norm(tr.c_g0[i]) + photon_probability(sol, times[i]);
        });
    }
    return tr;
}

inline AmplitudeTrace evolve(const LaplaceSolution& sol, const TraceOptions& opt = {}) {
    return evolve(sol, make_time_grid(sol.config.t_max, sol.config.dt), opt);
}

/// C_g1 and |C_g1|^2 on an energy x time grid; amplitude[i][n] at grid[i], times[n].
struct PhotonField {
    EnergyGrid grid;
    std::vector<double> times;
    std::vector<std::vector<cplx>> amplitude;
    std::vector<std::vector<double>> density;
};

inline PhotonField compute_photon_field(const LaplaceSolution& sol, const EnergyGrid& grid,
                                        const std::vector<double>& times, unsigned threads = 1) {
    PhotonField f;
    f.grid = grid;
    f.times = times;
    f.amplitude.assign(grid.size(), std::vector<cplx>(times.size()));
    f.density.assign(grid.size(), std::vector<double>(times.size()));
    parallel_for(grid.size(), threads, [&](std::size_t i) {
        for (std::size_t n = 0; n < times.size(); ++n) {
            f.amplitude[i][n] = photon_amplitude(sol, grid[i], times[n]);
            f.density[i][n] = std::norm(f.amplitude[i][n]);
        }
    });
    return f;
}

/// Resonant single-Lorentzian photon amplitude in the factorized form
/// C_inf(d) [1 - exp((i d - B/2) t)(cos bt - p(d) sin bt)].
///
/// `exact_p` selects the coefficient implied by the two-pole inversion; the
/// alternative is the approximation p = b / (B - i d).
inline cplx single_lorentzian_photon(double A, double B, double delta_eV, double t, bool exact_p = true) {
    const double a = A / (kHbar * kHbar);
    const double bb = B / kHbar;
    const double d = delta_eV / kHbar;
    const cplx b = 0.5 * std::sqrt(cplx(4.0 * a - bb * bb));
    const double kappa = A / std::numbers::pi * B / (delta_eV * delta_eV + B * B) / kHbar;
    const cplx c_inf = cplx(0.0, -1.0) * std::sqrt(kappa) * cplx(bb, -d) / cplx(a - d * d, -bb * d);
    cplx p;
    if (exact_p) {
        // C_e0 = X+ e^{l+ t} + X- e^{l- t}, l = -B/2 +- i b
        const cplx xp = 0.5 - cplx(0.0, 0.25) * bb / b;
        const cplx xm = 0.5 + cplx(0.0, 0.25) * bb / b;
        const cplx z = cplx(-0.5 * bb, d);
        const cplx ib = cplx(0.0, 1.0) * b;
        const cplx s_cos = xp / (z + ib) + xm / (z - ib);
        const cplx s_sin = xp / (z + ib) - xm / (z - ib);
        p = cplx(0.0, -1.0) * s_sin / s_cos;
    } else {
        p = b / cplx(bb, -d);
    }
    return c_inf * (1.0 - std::exp(cplx(-0.5 * bb, d) * t) * (std::cos(b * t) - p * std::sin(b * t)));
}

}  // namespace nanoqed::dynamics
