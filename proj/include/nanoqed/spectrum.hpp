#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "nanoqed/units.hpp"

namespace nanoqed {

/// Real non-negative samples on an energy grid.
///
/// Kernel spectra carry eV (the rate K(w) multiplied by hbar); envelopes are
/// dimensionless or carry whatever unit the producer documents.
struct TabulatedSpectrum {
    EnergyGrid grid;
    std::vector<double> values;

    TabulatedSpectrum() = default;
    TabulatedSpectrum(EnergyGrid g, std::vector<double> v) : grid(std::move(g)), values(std::move(v)) {
        if (values.size() != grid.size()) {
            throw std::invalid_argument("spectrum values and grid differ in length");
        }
        for (double x : values) {
            if (!std::isfinite(x) || x < 0.0) {
                throw std::invalid_argument("spectrum values must be finite and non-negative");
            }
        }
    }

    std::size_t size() const { return values.size(); }

    /// Linear interpolation; outside the grid is an error.
    double at(double e) const {
        if (!grid.contains(e)) throw std::out_of_range("energy outside spectrum grid");
        auto g = grid.values();
        auto it = std::upper_bound(g.begin(), g.end(), e);
        if (it == g.end()) return values.back();
        const auto hi = static_cast<std::size_t>(it - g.begin());
        if (hi == 0) return values.front();
        const std::size_t lo = hi - 1;
        const double w = (e - g[lo]) / (g[hi] - g[lo]);
        return values[lo] * (1.0 - w) + values[hi] * w;
    }

    std::size_t argmax() const {
        return static_cast<std::size_t>(std::max_element(values.begin(), values.end()) - values.begin());
    }
};

/// Trapezoid rule on a possibly non-uniform abscissa.
inline double trapezoid(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw std::invalid_argument("trapezoid: size mismatch");
    double s = 0.0;
    for (std::size_t i = 1; i < x.size(); ++i) s += 0.5 * (x[i] - x[i - 1]) * (y[i] + y[i - 1]);
    return s;
}

inline double area(const TabulatedSpectrum& s) { return trapezoid(s.grid.values(), s.values); }

/// Full width at half maximum of the feature containing the global maximum.
/// Returns nullopt when the half-maximum level is not crossed on both sides.
inline std::optional<double> fwhm(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 3) return std::nullopt;
    const auto ipk = static_cast<std::size_t>(std::max_element(y.begin(), y.end()) - y.begin());
    if (ipk == 0 || ipk + 1 == y.size()) return std::nullopt;
    const double half = 0.5 * y[ipk];
    std::size_t i = ipk;
    while (i > 0 && y[i] >= half) --i;
    if (y[i] >= half) return std::nullopt;
    const double left = x[i] + (half - y[i]) * (x[i + 1] - x[i]) / (y[i + 1] - y[i]);
    std::size_t j = ipk;
    while (j + 1 < y.size() && y[j] >= half) ++j;
    if (y[j] >= half) return std::nullopt;
    const double right = x[j - 1] + (y[j - 1] - half) * (x[j] - x[j - 1]) / (y[j - 1] - y[j]);
    return right - left;
}

inline std::optional<double> fwhm(const TabulatedSpectrum& s) { return fwhm(s.grid.values(), s.values); }

struct Peak {
    double position;
    double height;
    std::size_t index;
};

/// Local maxima above `rel_threshold` of the global maximum, refined by a
/// parabola through the three neighbouring samples. Sorted by position.
inline std::vector<Peak> find_peaks(std::span<const double> x, std::span<const double> y, double rel_threshold) {
    std::vector<Peak> peaks;
    if (x.size() != y.size() || y.size() < 3) return peaks;
    const double ymax = *std::max_element(y.begin(), y.end());
    if (!(ymax > 0.0)) return peaks;
    for (std::size_t i = 1; i + 1 < y.size(); ++i) {
        if (!(y[i] > y[i - 1] && y[i] >= y[i + 1])) continue;
        if (y[i] < rel_threshold * ymax) continue;
        const double denom = y[i - 1] - 2.0 * y[i] + y[i + 1];
        double shift = 0.0;
        if (denom < 0.0) shift = 0.5 * (y[i - 1] - y[i + 1]) / denom;
        shift = std::clamp(shift, -0.5, 0.5);
        const double h = (x[i + 1] - x[i - 1]) * 0.5;
        const double pos = x[i] + shift * h;
        const double height = y[i] - 0.25 * (y[i - 1] - y[i + 1]) * shift;
        peaks.push_back({pos, height, i});
    }
    return peaks;
}

}  // namespace nanoqed
