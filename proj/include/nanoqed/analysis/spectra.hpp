#pragma once

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <vector>

#include "nanoqed/dynamics/scenario.hpp"
#include "nanoqed/errors.hpp"
#include "nanoqed/fit/lorentzian.hpp"
#include "nanoqed/parallel.hpp"
#include "nanoqed/spectrum.hpp"
#include "nanoqed/units.hpp"

namespace nanoqed::analysis {

using dynamics::AmplitudeTrace;
using dynamics::cplx;

/// `tail` is the one-sided taper cos^2(pi t / 2T): unity at t = 0, zero at the
/// end of the trace. It suppresses truncation ripple without weighting down
/// the early part of a decaying coherence.
enum class Window { none, hann, tail };

struct CoherenceOptions {
    Window window = Window::none;
    std::size_t pad_factor = 8;
    double emin = 0.0;  // eV, output crop
    double emax = std::numeric_limits<double>::infinity();
};

/// |FT| of Im[C_e0(t) exp(-i w_e t)] on an absolute energy axis (eV).
struct CoherenceSpectrum {
    std::vector<double> energies;
    std::vector<double> magnitude;
    double omega_e = 0.0;
};

namespace detail {

inline std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

inline double uniform_step(const std::vector<double>& t) {
    const double dt = t[1] - t[0];
    if (!(dt > 0.0)) throw std::invalid_argument("trace times must increase");
    for (std::size_t i = 2; i < t.size(); ++i) {
        if (std::abs(t[i] - t[i - 1] - dt) > 1e-6 * dt) throw std::invalid_argument("trace must be uniformly sampled");
    }
    return dt;
}

}  // namespace detail

inline CoherenceSpectrum coherence_spectrum(const AmplitudeTrace& trace, double omega_e, const CoherenceOptions& opt = {}) {
    const std::size_t N = trace.times.size();
    if (N < 256) throw std::invalid_argument("coherence spectrum needs at least 256 trace samples, got " + std::to_string(N));
    if (trace.c_e0.size() != N) throw std::invalid_argument("trace amplitude and time lengths differ");
    if (opt.pad_factor < 1) throw std::invalid_argument("pad factor must be at least 1");
    const double dt = detail::uniform_step(trace.times);
    const std::size_t M = N * opt.pad_factor;
    const std::size_t nout = M / 2 + 1;

    double* in = fftw_alloc_real(M);
    fftw_complex* out = fftw_alloc_complex(nout);
    if (!in || !out) {
        fftw_free(in);
        fftw_free(out);
        throw NumericError("FFT buffer allocation failed");
    }
    fftw_plan plan;
    {
        std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
        plan = fftw_plan_dft_r2c_1d(static_cast<int>(M), in, out, FFTW_ESTIMATE);
    }
    for (std::size_t n = 0; n < M; ++n) in[n] = 0.0;
    const double w_e = omega_e / kHbar;
    for (std::size_t n = 0; n < N; ++n) {
        const double t = trace.times[n];
        double w = 1.0;
        const double x = static_cast<double>(n) / static_cast<double>(N - 1);
        if (opt.window == Window::hann) w = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * x));
        if (opt.window == Window::tail) w = std::pow(std::cos(0.5 * std::numbers::pi * x), 2);
        in[n] = w * (trace.c_e0[n] * std::exp(cplx(0.0, -w_e * t))).imag();
    }
    fftw_execute(plan);

    CoherenceSpectrum s;
    s.omega_e = omega_e;
    const double de = 2.0 * std::numbers::pi * kHbar / (static_cast<double>(M) * dt);
    for (std::size_t k = 1; k < nout; ++k) {
        const double e = de * static_cast<double>(k);
        if (e < opt.emin || e > opt.emax) continue;
        s.energies.push_back(e);
        s.magnitude.push_back(dt * std::hypot(out[k][0], out[k][1]));
    }
    {
        std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
        fftw_destroy_plan(plan);
    }
    fftw_free(in);
    fftw_free(out);
    return s;
}

struct SpectrumPeaks {
    std::vector<Peak> all;            // above threshold, by position
    std::optional<Peak> lower;        // highest below omega_e - exclusion
    std::optional<Peak> upper;        // highest above omega_e + exclusion
    std::optional<Peak> central;      // highest within the exclusion band
};

inline SpectrumPeaks classify_peaks(const std::vector<double>& energies, const std::vector<double>& values, double omega_e,
                                    double central_exclusion, double rel_threshold = 0.05) {
    SpectrumPeaks r;
    r.all = find_peaks(energies, values, rel_threshold);
    auto better = [](const std::optional<Peak>& cur, const Peak& p) { return !cur || p.height > cur->height; };
    for (const auto& p : r.all) {
        if (p.position < omega_e - central_exclusion) {
            if (better(r.lower, p)) r.lower = p;
        } else if (p.position > omega_e + central_exclusion) {
            if (better(r.upper, p)) r.upper = p;
        } else if (better(r.central, p)) {
            r.central = p;
        }
    }
    return r;
}

/// Distance between the highest maxima on either side of omega_e, both above
/// 5% of the global maximum; peaks within `central_exclusion` of omega_e are
/// not counted as flanking.
inline std::optional<double> rabi_splitting(const std::vector<double>& energies, const std::vector<double>& values,
                                            double omega_e, double central_exclusion = 0.005) {
    const auto p = classify_peaks(energies, values, omega_e, central_exclusion);
    if (!p.lower || !p.upper) return std::nullopt;
    return p.upper->position - p.lower->position;
}

inline std::optional<double> rabi_splitting(const CoherenceSpectrum& s, double central_exclusion = 0.005) {
    return rabi_splitting(s.energies, s.magnitude, s.omega_e, central_exclusion);
}

struct StrongCouplingResult {
    bool strong = false;
    double lhs = 0.0;   // 2 x area, eV^2
    double rhs = 0.0;   // (FWHM/2)^2, eV^2
    double fwhm = 0.0;  // eV
};

/// 2 int K dE > (Gamma_K/2)^2 for a tabulated kernel (values in eV).
inline StrongCouplingResult strong_coupling_criterion(const TabulatedSpectrum& kernel) {
    const double a = area(kernel);
    StrongCouplingResult r;
    if (!(a > 0.0)) return r;
    const auto w = fwhm(kernel);
    if (!w) throw NumericError("kernel FWHM is undefined: no half-maximum crossing on both sides of the peak");
    r.fwhm = *w;
    r.lhs = 2.0 * a;
    r.rhs = 0.25 * r.fwhm * r.fwhm;
    r.strong = r.lhs > r.rhs;
    return r;
}

/// Same criterion for a Lorentzian set: total area and the FWHM of the model
/// evaluated on a fine grid spanning all terms.
inline StrongCouplingResult strong_coupling_criterion(const fit::LorentzianSet& kernel) {
    StrongCouplingResult r;
    if (kernel.empty() || !(kernel.total_area() > 0.0)) return r;
    double lo = std::numeric_limits<double>::infinity(), hi = -lo, bmax = 0.0;
    for (const auto& t : kernel.terms) {
        lo = std::min(lo, t.center);
        hi = std::max(hi, t.center);
        bmax = std::max(bmax, t.half_width);
    }
    lo = std::max(lo - 40.0 * bmax, 1e-3);
    hi += 40.0 * bmax;
    const std::size_t n = 40001;
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
        y[i] = kernel(x[i]);
    }
    const auto w = fwhm(x, y);
    if (!w) throw NumericError("kernel FWHM is undefined: no half-maximum crossing on both sides of the peak");
    r.fwhm = *w;
    r.lhs = 2.0 * kernel.total_area();
    r.rhs = 0.25 * r.fwhm * r.fwhm;
    r.strong = r.lhs > r.rhs;
    return r;
}

/// Long-time photon spectrum |C_inf(d)|^2 (1/eV) for a resonant single
/// Lorentzian with area A (eV^2) and half width B (eV), d = E - E_e.
inline std::vector<double> stationary_photon_spectrum(double A, double B, const std::vector<double>& delta) {
    if (!(A >= 0.0) || !(B > 0.0)) throw std::invalid_argument("stationary spectrum needs A >= 0 and B > 0");
    std::vector<double> out(delta.size());
    for (std::size_t i = 0; i < delta.size(); ++i) {
        const double d2 = delta[i] * delta[i];
        const double k = A / std::numbers::pi * B / (d2 + B * B);
        out[i] = k * (d2 + B * B) / (A * A + (B * B - 2.0 * A) * d2 + d2 * d2);
    }
    return out;
}

inline std::vector<double> stationary_photon_spectrum(const fit::LorentzianSet& single, const std::vector<double>& delta) {
    if (single.size() != 1) throw std::invalid_argument("stationary spectrum needs a single-term kernel");
    return stationary_photon_spectrum(single.terms[0].area, single.terms[0].half_width, delta);
}

struct CrossoverRow {
    double sigma = 0.0;       // eV
    double width_ratio = 0.0; // Gamma_G / Gamma_K = 2.355 sigma / Gamma_K
    double elastic = 0.0;     // spectrum height at omega_e
    double shoulder = 0.0;    // higher flanking maximum, 0 when absent
    double peak_ratio = 0.0;  // elastic / shoulder, +inf when no shoulder
    std::optional<double> splitting;
    CoherenceSpectrum spectrum;
};

struct CrossoverOptions {
    double t_max = 2000.0;
    double dt = 0.05;
    CoherenceOptions coherence{Window::tail, 8, 0.0, std::numeric_limits<double>::infinity()};
    double central_exclusion = 0.005;
    unsigned threads = 1;
};

/// Height of the spectrum at e, by linear interpolation.
inline double spectrum_at(const CoherenceSpectrum& s, double e) {
    if (s.energies.empty() || e < s.energies.front() || e > s.energies.back()) {
        throw std::out_of_range("energy outside coherence spectrum");
    }
    const auto it = std::upper_bound(s.energies.begin(), s.energies.end(), e);
    if (it == s.energies.end()) return s.magnitude.back();
    const auto hi = static_cast<std::size_t>(it - s.energies.begin());
    if (hi == 0) return s.magnitude.front();
    const double w = (e - s.energies[hi - 1]) / (s.energies[hi] - s.energies[hi - 1]);
    return s.magnitude[hi - 1] * (1.0 - w) + s.magnitude[hi] * w;
}

inline CrossoverRow crossover_point(const CoherenceSpectrum& s, double sigma, double gamma_k, double central_exclusion) {
    CrossoverRow r;
    r.sigma = sigma;
    r.width_ratio = 2.0 * std::sqrt(2.0 * std::numbers::ln2) * sigma / gamma_k;
    const auto p = classify_peaks(s.energies, s.magnitude, s.omega_e, central_exclusion);
    r.elastic = p.central ? p.central->height : spectrum_at(s, s.omega_e);
    if (p.lower) r.shoulder = std::max(r.shoulder, p.lower->height);
    if (p.upper) r.shoulder = std::max(r.shoulder, p.upper->height);
    r.peak_ratio = r.shoulder > 0.0 ? r.elastic / r.shoulder : std::numeric_limits<double>::infinity();
    if (p.lower && p.upper) r.splitting = p.upper->position - p.lower->position;
    r.spectrum = s;
    return r;
}

/// Resonant Gaussian-photon runs for each sigma; elastic-to-shoulder ratio of
/// the coherence spectrum. `gamma_k` is the kernel FWHM in eV.
inline std::vector<CrossoverRow> crossover_scan(const dynamics::ScenarioConfig& base, const std::vector<double>& sigmas,
                                                double gamma_k, const CrossoverOptions& opt = {}) {
    if (!(gamma_k > 0.0)) throw std::invalid_argument("kernel FWHM must be positive");
    std::vector<CrossoverRow> rows(sigmas.size());
    parallel_for(sigmas.size(), opt.threads, [&](std::size_t i) {
        auto cfg = base;
        cfg.initial = dynamics::GaussianPhoton{base.omega_e, sigmas[i]};
        cfg.t_max = opt.t_max;
        cfg.dt = opt.dt;
        const auto sol = dynamics::solve_laplace(cfg);
        dynamics::TraceOptions to;
        to.norm_stride = 0;
        const auto tr = dynamics::evolve(sol, to);
        const auto coh = coherence_spectrum(tr, cfg.omega_e, opt.coherence);
        rows[i] = crossover_point(coh, sigmas[i], gamma_k, opt.central_exclusion);
    });
    return rows;
}

}  // namespace nanoqed::analysis
