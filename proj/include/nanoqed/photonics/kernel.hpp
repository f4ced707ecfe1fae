#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "nanoqed/errors.hpp"
#include "nanoqed/parallel.hpp"
#include "nanoqed/photonics/mie.hpp"
#include "nanoqed/spectrum.hpp"

namespace nanoqed::photonics {

/// Two-level emitter, radially oriented. d in Debye, transition energy in eV.
struct Dipole {
    double d_debye = 24.0;
    double omega_e = 2.97;

    void validate() const {
        if (!(d_debye > 0.0)) throw std::invalid_argument("transition dipole must be positive");
        if (!(omega_e > 0.0)) throw std::invalid_argument("transition energy must be positive");
    }
};

struct KernelDiagnostics {
    int max_orders = 0;
    double worst_tail_ratio = 0.0;
    bool all_converged = true;
};

struct KernelOptions {
    int max_order = 200;
    double tail_tolerance = 1e-8;
    bool include_free_space = true;
    bool include_scattered = true;
    unsigned threads = 1;
};

/// K(w) in eV from Im G_zz (1/m): K = hbar * d^2 w^2 Im G / (pi eps0 hbar c^2).
inline double kernel_from_im_green(double im_green, double omega_eV, double d_debye) {
    const double w = omega_eV / kHbar_eV_s;
    const double d = d_debye * si::debye;
    const double rate = d * d * w * w * im_green / (std::numbers::pi * si::eps0 * si::hbar * si::c * si::c);
    return kHbar_eV_s * rate;
}

/// Exact kernel spectrum of the sphere-dipole system on `grid`.
inline TabulatedSpectrum kernel_spectrum(const SphereGeometry& geom, const DrudeMetal& metal, const Dipole& dip,
                                         const EnergyGrid& grid, const KernelOptions& opt = {},
                                         KernelDiagnostics* diag = nullptr) {
    geom.validate();
    metal.validate();
    dip.validate();
    std::vector<double> values(grid.size());
    std::vector<MieGreenResult> mie(grid.size());
    parallel_for(grid.size(), opt.threads, [&](std::size_t i) {
        const double e = grid[i];
        double im_g = opt.include_free_space ? free_space_im_green(e, geom.eps_background) : 0.0;
        if (opt.include_scattered) {
            MieOptions mo;
            const double x = background_wavenumber(e, geom.eps_background) * geom.radius_nm * 1e-9;
            mo.min_order = std::min(default_multipole_order(x), opt.max_order);
            mo.max_order = opt.max_order;
            mo.tail_tolerance = opt.tail_tolerance;
            mie[i] = mie_scattered_Gzz(geom, metal, e, mo);
            im_g += mie[i].g_scattered.imag();
        } else {
            mie[i].converged = true;
        }
        values[i] = kernel_from_im_green(im_g, e, dip.d_debye);
    });
    KernelDiagnostics d;
    for (const auto& r : mie) {
        d.max_orders = std::max(d.max_orders, r.orders);
        d.worst_tail_ratio = std::max(d.worst_tail_ratio, r.tail_ratio);
        d.all_converged = d.all_converged && r.converged;
    }
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!(values[i] > 0.0) || !std::isfinite(values[i])) {
            throw NumericError("kernel spectrum is not positive at " + std::to_string(grid[i]) + " eV");
        }
    }
    if (diag) *diag = d;
    return TabulatedSpectrum(grid, std::move(values));
}

/// Free-space spontaneous emission rate (1/s).
inline double free_space_rate(const Dipole& dip, double eps_background) {
    const double w = dip.omega_e / kHbar_eV_s;
    const double d = dip.d_debye * si::debye;
    return w * w * w * d * d * std::sqrt(eps_background) /
           (3.0 * std::numbers::pi * si::eps0 * si::hbar * si::c * si::c * si::c);
}

/// Golden-rule Purcell factor gamma/gamma_0 with gamma = 2 pi K(w_e).
inline double purcell_factor(const TabulatedSpectrum& kernel, const Dipole& dip, double eps_background = 1.0) {
    dip.validate();
    if (!kernel.grid.contains(dip.omega_e)) {
        throw std::out_of_range("transition energy lies outside the kernel grid");
    }
    const double k_rate = kernel.at(dip.omega_e) / kHbar_eV_s;  // 1/s
    return 2.0 * std::numbers::pi * k_rate / free_space_rate(dip, eps_background);
}

}  // namespace nanoqed::photonics
