#pragma once

#include <complex>
#include <stdexcept>

namespace nanoqed::photonics {

/// Drude metal; energies in eV.
struct DrudeMetal {
    double eps_inf = 6.0;
    double omega_p = 7.9;
    double gamma = 0.051;

    void validate() const {
        if (!(omega_p > 0.0)) throw std::invalid_argument("Drude plasma energy must be positive");
        if (!(gamma >= 0.0)) throw std::invalid_argument("Drude damping must be non-negative");
        if (!(eps_inf >= 1.0)) throw std::invalid_argument("Drude eps_inf must be >= 1");
    }
};

/// eps(w) = eps_inf - wp^2 / (w^2 + i w Gamma)
inline std::complex<double> drude_permittivity(const DrudeMetal& metal, double omega_eV) {
    if (!(omega_eV > 0.0)) throw std::invalid_argument("permittivity requires positive photon energy");
    const std::complex<double> denom(omega_eV * omega_eV, omega_eV * metal.gamma);
    return metal.eps_inf - metal.omega_p * metal.omega_p / denom;
}

}  // namespace nanoqed::photonics
