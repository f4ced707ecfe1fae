#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "nanoqed/dynamics/laplace.hpp"
#include "nanoqed/dynamics/scenario.hpp"
#include "nanoqed/errors.hpp"
#include "nanoqed/fit/lorentzian.hpp"
#include "nanoqed/spectrum.hpp"
#include "nanoqed/units.hpp"

namespace nanoqed::dynamics {

/// Memory kernel K(tau) in 1/fs^2, in the frame rotating at omega_e.
///
/// Either a sum a_j exp(-beta_j tau) or samples K(m dtau).
struct TimeKernel {
    struct Exp {
        cplx amplitude;  // 1/fs^2
        cplx rate;       // 1/fs
    };
    std::vector<Exp> exponentials;
    double dtau = 0.0;
    std::vector<cplx> samples;

    bool tabulated() const { return !samples.empty(); }

    cplx operator()(double tau) const {
        if (tabulated()) {
            const double x = tau / dtau;
            const auto i = static_cast<std::size_t>(std::floor(x));
            if (i + 1 >= samples.size()) return i < samples.size() ? samples[i] : cplx(0.0);
            const double w = x - static_cast<double>(i);
            return samples[i] * (1.0 - w) + samples[i + 1] * w;
        }
        cplx s(0.0);
        for (const auto& e : exponentials) s += e.amplitude * std::exp(-e.rate * tau);
        return s;
    }

    double max_rate() const {
        double m = 0.0;
        for (const auto& e : exponentials) m = std::max(m, std::abs(e.rate));
        return m;
    }
};

inline TimeKernel exponential_time_kernel(const fit::LorentzianSet& kernel, double omega_e) {
    TimeKernel k;
    for (const auto& t : kernel.terms) k.exponentials.push_back({t.area / (kHbar * kHbar), rotating_rate(t, omega_e)});
    return k;
}

namespace detail {

// Integrals over [0,1] of exp(-i th v) and v exp(-i th v).
inline std::pair<cplx, cplx> filon_moments(double th) {
    const cplx mi(0.0, -1.0);
    if (std::abs(th) < 0.1) {
        cplx p0(0.0), p1(0.0);
        cplx pw(1.0);  // (-i th)^k / k!
        for (int k = 0; k < 14; ++k) {
            p0 += pw / static_cast<double>(k + 1);
            p1 += pw / static_cast<double>(k + 2);
            pw *= mi * th / static_cast<double>(k + 1);
        }
        return {p0, p1};
    }
    const cplx e = std::exp(mi * th);
    const cplx p0 = (1.0 - e) / (cplx(0.0, 1.0) * th);
    const cplx p1 = (e * cplx(1.0, th) - 1.0) / (th * th);
    return {p0, p1};
}

}  // namespace detail

/// K(tau) = hbar^-2 int dE K(E) exp(-i (E - E_e) tau / hbar), integrating the
/// piecewise-linear interpolant exactly against the phase. A cosine taper is
/// applied over the outer 5% of the window on each side.
inline TimeKernel tabulate_time_kernel(const TabulatedSpectrum& spectrum, double omega_e, double tau_max,
                                       double dtau) {
    if (!(dtau > 0.0) || !(tau_max >= 0.0)) throw std::invalid_argument("time kernel needs dtau > 0, tau_max >= 0");
    const auto& g = spectrum.grid;
    const double peak = spectrum.values[spectrum.argmax()];
    if (spectrum.values.front() > 0.01 * peak || spectrum.values.back() > 0.01 * peak) {
        throw NumericError("kernel spectrum window too narrow: edge values exceed 1% of the peak");
    }
    const double lo = g.front();
    const double width = g.back() - lo;
    std::vector<double> f(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double x = (g[i] - lo) / width;
        const double edge = std::min(x, 1.0 - x) / 0.05;
        const double w = edge >= 1.0 ? 1.0 : 0.5 * (1.0 - std::cos(std::numbers::pi * edge));
        f[i] = spectrum.values[i] * w;
    }
    TimeKernel k;
    k.dtau = dtau;
    const auto n = static_cast<std::size_t>(std::floor(tau_max / dtau + 1e-9)) + 1;
    k.samples.resize(n);
    for (std::size_t m = 0; m < n; ++m) {
        const double kap = static_cast<double>(m) * dtau / kHbar;  // 1/eV
        cplx s(0.0);
        for (std::size_t i = 1; i < g.size(); ++i) {
            const double h = g[i] - g[i - 1];
            const auto [p0, p1] = detail::filon_moments(kap * h);
            const cplx phase = std::exp(cplx(0.0, -kap * (g[i - 1] - omega_e)));
            s += phase * h * (f[i - 1] * p0 + (f[i] - f[i - 1]) * p1);
        }
        k.samples[m] = s / (kHbar * kHbar);
    }
    return k;
}

struct VolterraOptions {
    bool recursive = true;  // O(N) update for exponential kernels
};

/// Second-order product-trapezoid solution of
///   dC/dt = -int_0^t K(t - t') C(t') dt' + S(t).
/// Only c_e0 is populated; c_g0 is zero and the norm is not evaluated.
inline AmplitudeTrace integrate_ide(const TimeKernel& kernel, const std::function<cplx(double)>& source, cplx c_init,
                                    double t_max, double dt, const VolterraOptions& opt = {}) {
    if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
    if (t_max / dt > 1e7) throw std::invalid_argument("t_max/dt exceeds 1e7 steps");
    if (!kernel.tabulated()) {
        const double rmax = kernel.max_rate();
        if (rmax > 0.0 && dt > 0.2 / rmax) {
            throw std::invalid_argument("time step " + std::to_string(dt) + " fs is too large for the fastest kernel rate; use dt <= " +
                                        std::to_string(0.2 / rmax) + " fs");
        }
    } else if (std::abs(kernel.dtau - dt) > 1e-12 * dt) {
        throw std::invalid_argument("tabulated kernel step must equal the integration step");
    }
    const auto times = make_time_grid(t_max, dt);
    const std::size_t N = times.size();
    if (kernel.tabulated() && kernel.samples.size() < N) {
        throw std::invalid_argument("tabulated kernel shorter than the integration window");
    }
    AmplitudeTrace tr;
    tr.times = times;
    tr.c_e0.assign(N, cplx(0.0));
    tr.c_g0.assign(N, cplx(0.0));
    tr.norm.assign(N, std::numeric_limits<double>::quiet_NaN());
    tr.c_e0[0] = c_init;
    if (N == 1) return tr;

    std::vector<cplx> Kd(N);
    for (std::size_t m = 0; m < N; ++m) Kd[m] = kernel.tabulated() ? kernel.samples[m] : kernel(static_cast<double>(m) * dt);
    const cplx K0 = Kd[0];
    const cplx denom = 1.0 + 0.25 * dt * dt * K0;

    auto& C = tr.c_e0;
    cplx F = source ? source(0.0) : cplx(0.0);
    const bool recursive = opt.recursive && !kernel.tabulated();
    std::vector<cplx> P(kernel.exponentials.size(), cplx(0.0));
    std::vector<cplx> decay(kernel.exponentials.size());
    for (std::size_t j = 0; j < decay.size(); ++j) decay[j] = std::exp(-kernel.exponentials[j].rate * dt);

    for (std::size_t n = 0; n + 1 < N; ++n) {
        const double t1 = times[n + 1];
        cplx conv(0.0);  // dt [K_{n+1} C_0 / 2 + sum_{m=1}^{n} K_{n+1-m} C_m]
        if (recursive) {
            for (std::size_t j = 0; j < P.size(); ++j) {
                P[j] = decay[j] * P[j] + dt * decay[j] * C[n] * (n == 0 ? 0.5 : 1.0);
                conv += kernel.exponentials[j].amplitude * P[j];
            }
        } else {
            conv = 0.5 * Kd[n + 1] * C[0];
            for (std::size_t m = 1; m <= n; ++m) conv += Kd[n + 1 - m] * C[m];
            conv *= dt;
        }
        const cplx R = -conv + (source ? source(t1) : cplx(0.0));
        C[n + 1] = (C[n] + 0.5 * dt * (F + R)) / denom;
        F = R - 0.5 * dt * K0 * C[n + 1];
    }
    return tr;
}

}  // namespace nanoqed::dynamics
