#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace nanoqed {

// Physical constants (CODATA 2018, SI).
namespace si {
inline constexpr double c = 299792458.0;
inline constexpr double eps0 = 8.8541878128e-12;
inline constexpr double hbar = 1.054571817e-34;
inline constexpr double elementary_charge = 1.602176634e-19;
inline constexpr double debye = 3.33564095e-30;
}  // namespace si

/// Conversion factors between the eV / fs / THz systems used across the library.
///
/// Energies are in eV, times in fs. Dynamics run in angular frequency
/// (eV / hbar, rad/fs). Tabulated pseudo-mode areas are quoted in squared
/// ordinary-frequency THz and are converted here and nowhere else.
struct UnitConventions {
    double hbar_eV_fs = 0.6582119569;
    double eV_to_rad_per_fs = 1.0 / 0.6582119569;
    double eV_to_THz_ordinary = 1000.0 / (2.0 * std::numbers::pi * 0.6582119569);
};

inline constexpr UnitConventions kUnits{};
inline constexpr double kHbar = kUnits.hbar_eV_fs;  // eV fs

/// hbar in eV s
inline constexpr double kHbar_eV_s = kHbar * 1e-15;

/// Areas in THz^2 (cycles) to eV^2.
inline double convert_area_THz2_to_eV2(double area_THz2, const UnitConventions& conv = kUnits) {
    if (!(area_THz2 >= 0.0) || !std::isfinite(area_THz2)) {
        throw std::invalid_argument("area must be a finite non-negative number, got " +
                                    std::to_string(area_THz2));
    }
    return area_THz2 / (conv.eV_to_THz_ordinary * conv.eV_to_THz_ordinary);
}

inline double convert_area_eV2_to_THz2(double area_eV2, const UnitConventions& conv = kUnits) {
    if (!(area_eV2 >= 0.0) || !std::isfinite(area_eV2)) {
        throw std::invalid_argument("area must be a finite non-negative number, got " +
                                    std::to_string(area_eV2));
    }
    return area_eV2 * conv.eV_to_THz_ordinary * conv.eV_to_THz_ordinary;
}

inline double energy_to_rate(double energy_eV) { return energy_eV / kHbar; }
inline double rate_to_energy(double rate_per_fs) { return rate_per_fs * kHbar; }

/// Driving amplitudes are quoted in Hz^(1/2); internally fs^(-1/2).
inline double sqrt_hz_to_sqrt_per_fs(double value) { return value * std::sqrt(1e-15); }

/// Strictly increasing grid of positive photon energies (eV).
class EnergyGrid {
  public:
    EnergyGrid() = default;

    explicit EnergyGrid(std::vector<double> values) : values_(std::move(values)) {
        if (values_.size() < 2) {
            throw std::invalid_argument("energy grid needs at least two points");
        }
        for (std::size_t i = 0; i < values_.size(); ++i) {
            if (!(values_[i] > 0.0) || !std::isfinite(values_[i])) {
                throw std::invalid_argument("energy grid values must be finite and positive");
            }
            if (i > 0 && !(values_[i] > values_[i - 1])) {
                throw std::invalid_argument("energy grid must be strictly increasing (index " +
                                            std::to_string(i) + ")");
            }
        }
    }

    std::size_t size() const { return values_.size(); }
    double operator[](std::size_t i) const { return values_[i]; }
    double front() const { return values_.front(); }
    double back() const { return values_.back(); }
    std::span<const double> values() const { return values_; }
    auto begin() const { return values_.begin(); }
    auto end() const { return values_.end(); }

    double min_spacing() const {
        double h = values_[1] - values_[0];
        for (std::size_t i = 2; i < values_.size(); ++i) h = std::min(h, values_[i] - values_[i - 1]);
        return h;
    }

    bool contains(double e) const { return e >= values_.front() && e <= values_.back(); }

    bool same_as(const EnergyGrid& other) const { return values_ == other.values_; }

  private:
    std::vector<double> values_;
};

/// Uniform grid with n points including both endpoints.
inline EnergyGrid make_grid(double emin, double emax, std::size_t n) {
    if (!(emin > 0.0)) throw std::invalid_argument("grid start must be positive");
    if (!(emin < emax)) throw std::invalid_argument("grid start must be below grid end");
    if (n < 2) throw std::invalid_argument("grid needs at least two points");
    std::vector<double> v(n);
    const double h = (emax - emin) / static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i) v[i] = emin + h * static_cast<double>(i);
    v.back() = emax;
    return EnergyGrid(std::move(v));
}

/// Uniform time samples 0, dt, ..., up to and including t_max (fs).
inline std::vector<double> make_time_grid(double t_max, double dt) {
    if (!(dt > 0.0) || !(t_max >= 0.0)) throw std::invalid_argument("time grid needs dt > 0 and t_max >= 0");
    const auto n = static_cast<std::size_t>(std::floor(t_max / dt + 1e-9)) + 1;
    std::vector<double> t(n);
    for (std::size_t i = 0; i < n; ++i) t[i] = dt * static_cast<double>(i);
    return t;
}

}  // namespace nanoqed
