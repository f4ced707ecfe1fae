#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "nanoqed/photonics/drude.hpp"
#include "nanoqed/units.hpp"

namespace nanoqed::photonics {

using cplx = std::complex<double>;

/// Sphere centred at the origin, dipole on the z axis at radius + gap.
struct SphereGeometry {
    double radius_nm = 20.0;
    double gap_nm = 2.0;
    double eps_background = 1.0;

    void validate() const {
        if (!(radius_nm > 0.0)) throw std::invalid_argument("sphere radius must be positive");
        if (!(gap_nm > 0.0)) throw std::invalid_argument("dipole-surface gap must be positive");
        if (!(eps_background >= 1.0)) throw std::invalid_argument("background permittivity must be >= 1");
    }
};

/// Background wavenumber (1/m) at photon energy E (eV).
inline double background_wavenumber(double omega_eV, double eps_background) {
    return std::sqrt(eps_background) * omega_eV / (kHbar_eV_s * si::c);
}

struct MieGreenResult {
    cplx g_scattered{};      // 1/m
    int orders = 0;          // multipole orders summed
    double tail_ratio = 0.0; // |last term| / |sum|
    bool converged = false;  // tail_ratio <= tail_tolerance
};

struct MieOptions {
    int min_order = 60;
    int max_order = 200;
    double tail_tolerance = 1e-8;
};

/// max(60, ceil(x + 4 x^(1/3) + 10)) for size parameter x = k r.
inline int default_multipole_order(double size_parameter) {
    const double x = size_parameter;
    return std::max(60, static_cast<int>(std::ceil(x + 4.0 * std::cbrt(x) + 10.0)));
}

namespace detail {

// Logarithmic derivative psi_n'(z)/psi_n(z) by downward recurrence, seeded
// with zero well above the highest order needed.
inline std::vector<cplx> riccati_log_derivative(cplx z, int n_max) {
    const int start = n_max + 16 + static_cast<int>(std::abs(z));
    std::vector<cplx> d(static_cast<std::size_t>(start) + 1, cplx(0.0));
    for (int n = start; n > 0; --n) {
        const cplx nz = static_cast<double>(n) / z;
        d[static_cast<std::size_t>(n) - 1] = nz - 1.0 / (d[static_cast<std::size_t>(n)] + nz);
    }
    d.resize(static_cast<std::size_t>(n_max) + 1);
    return d;
}

// Ratios xi_n(x)/xi_{n-1}(x) of Riccati-Hankel functions, upward recurrence.
// Entry 0 holds xi_0 itself.
inline std::vector<cplx> riccati_hankel_ratios(double x, int n_max) {
    std::vector<cplx> r(static_cast<std::size_t>(n_max) + 1);
    const cplx xi0(std::sin(x), -std::cos(x));
    const cplx xi1(std::sin(x) / x - std::cos(x), -std::cos(x) / x - std::sin(x));
    r[0] = xi0;
    if (n_max >= 1) r[1] = xi1 / xi0;
    for (int n = 2; n <= n_max; ++n) {
        r[static_cast<std::size_t>(n)] = (2.0 * n - 1.0) / x - 1.0 / r[static_cast<std::size_t>(n) - 1];
    }
    return r;
}

}  // namespace detail

/// Scattered zz (radial) element of the dyadic Green tensor at the dipole
/// site, for a sphere of permittivity eps_sphere.
///
/// G_sc = (i k / 4 pi) sum_n (2n+1) n (n+1) (-a_n) [xi_n(k r0) / (k r0)^2]^2
///
/// with a_n the electric Mie coefficient. The sum is evaluated with scaled
/// products of recurrence ratios so that neither psi_n(kR) underflows nor
/// xi_n(k r0) overflows at high order. Summation stops at the first order
/// n >= opt.min_order whose term is below opt.tail_tolerance of the sum, or at
/// opt.max_order.
inline MieGreenResult mie_scattered_Gzz(const SphereGeometry& geom, cplx eps_sphere, double omega_eV,
                                        const MieOptions& opt) {
    geom.validate();
    if (!(omega_eV > 0.0)) throw std::invalid_argument("Mie evaluation requires positive photon energy");
    if (opt.max_order < 1 || opt.min_order < 1) throw std::invalid_argument("multipole order must be >= 1");

    const double k = background_wavenumber(omega_eV, geom.eps_background);
    const double x = k * geom.radius_nm * 1e-9;
    const double x0 = k * (geom.radius_nm + geom.gap_nm) * 1e-9;
    const cplx m = std::sqrt(eps_sphere / geom.eps_background);
    const int n_max = opt.max_order;

    const auto d_mx = detail::riccati_log_derivative(m * x, n_max);
    const auto d_x = detail::riccati_log_derivative(cplx(x, 0.0), n_max);
    const auto xi_x = detail::riccati_hankel_ratios(x, n_max);
    const auto xi_x0 = detail::riccati_hankel_ratios(x0, n_max);

    // scale = psi_n(x) xi_n(x0)^2 / xi_n(x), carried order by order.
    cplx scale = std::sin(x) * xi_x0[0] * xi_x0[0] / xi_x[0];
    cplx sum(0.0);
    MieGreenResult out;
    for (int n = 1; n <= n_max; ++n) {
        const auto un = static_cast<std::size_t>(n);
        const double dn = static_cast<double>(n);
        const cplx psi_ratio = 1.0 / (d_x[un] + dn / x);  // psi_n / psi_{n-1}
        scale *= psi_ratio * xi_x0[un] * xi_x0[un] / xi_x[un];
        const cplx a_fac = d_mx[un] / m + dn / x;
        // a_n = (psi_n / xi_n) * reduced
        const cplx reduced = (a_fac - 1.0 / psi_ratio) / (a_fac - 1.0 / xi_x[un]);
        const cplx term = (2.0 * dn + 1.0) * dn * (dn + 1.0) * (-reduced) * scale / (x0 * x0 * x0 * x0);
        sum += term;
        out.orders = n;
        out.tail_ratio = std::abs(sum) > 0.0 ? std::abs(term) / std::abs(sum) : 0.0;
        if (n >= opt.min_order && out.tail_ratio <= opt.tail_tolerance) break;
    }
    out.converged = out.tail_ratio <= opt.tail_tolerance;
    out.g_scattered = cplx(0.0, k / (4.0 * std::numbers::pi)) * sum;
    return out;
}

inline MieGreenResult mie_scattered_Gzz(const SphereGeometry& geom, const DrudeMetal& metal, double omega_eV,
                                        const MieOptions& opt) {
    metal.validate();
    return mie_scattered_Gzz(geom, drude_permittivity(metal, omega_eV), omega_eV, opt);
}

/// Fixed truncation at n_max terms; `converged` reports the tail criterion.
inline MieGreenResult mie_scattered_Gzz(const SphereGeometry& geom, const DrudeMetal& metal, double omega_eV,
                                        int n_max) {
    MieOptions opt;
    opt.min_order = n_max;
    opt.max_order = n_max;
    return mie_scattered_Gzz(geom, metal, omega_eV, opt);
}

/// Im G of the homogeneous background at coincident points: k / (6 pi).
inline double free_space_im_green(double omega_eV, double eps_background) {
    return background_wavenumber(omega_eV, eps_background) / (6.0 * std::numbers::pi);
}

}  // namespace nanoqed::photonics
