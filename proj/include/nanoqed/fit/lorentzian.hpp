#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "nanoqed/spectrum.hpp"
#include "nanoqed/units.hpp"

namespace nanoqed::fit {

/// One pseudo-mode: (area/pi) * B / ((w - Omega)^2 + B^2).
///
/// For kernel fits `area` is in eV^2 and `half_width`, `center` in eV. Source
/// products use the same shape with the area carrying the product's unit times eV.
struct LorentzianTerm {
    double area = 0.0;
    double half_width = 0.0;
    double center = 0.0;

    double operator()(double e) const {
        const double d = e - center;
        return area / std::numbers::pi * half_width / (d * d + half_width * half_width);
    }

    double peak() const { return area / (std::numbers::pi * half_width); }
};

struct LorentzianSet {
    std::vector<LorentzianTerm> terms;

    std::size_t size() const { return terms.size(); }
    bool empty() const { return terms.empty(); }

    double operator()(double e) const {
        double s = 0.0;
        for (const auto& t : terms) s += t(e);
        return s;
    }

    double total_area() const {
        double s = 0.0;
        for (const auto& t : terms) s += t.area;
        return s;
    }

    /// Canonical order: centre ascending, ties broken by width then area.
    void sort_canonical() {
        std::sort(terms.begin(), terms.end(), [](const LorentzianTerm& a, const LorentzianTerm& b) {
            if (a.center != b.center) return a.center < b.center;
            if (a.half_width != b.half_width) return a.half_width < b.half_width;
            return a.area < b.area;
        });
    }

    void validate_kernel() const {
        if (terms.empty()) throw std::invalid_argument("kernel needs at least one Lorentzian term");
        for (const auto& t : terms) {
            if (!(t.area >= 0.0) || !(t.half_width > 0.0) || !std::isfinite(t.center)) {
                throw std::invalid_argument("kernel terms need area >= 0 and half width > 0");
            }
        }
    }

    LorentzianSet scaled(double factor) const {
        LorentzianSet out = *this;
        for (auto& t : out.terms) t.area *= factor;
        return out;
    }
};

inline TabulatedSpectrum eval_lorentzians(const LorentzianSet& set, const EnergyGrid& grid) {
    std::vector<double> v(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) v[i] = set(grid[i]);
    return TabulatedSpectrum(grid, std::move(v));
}

/// Row of a published table: area in THz^2, half width and centre in eV.
struct TableRow {
    double area_THz2;
    double half_width_eV;
    double center_eV;
};

inline LorentzianSet from_table(const std::vector<TableRow>& rows) {
    LorentzianSet set;
    for (const auto& r : rows) {
        set.terms.push_back({convert_area_THz2_to_eV2(r.area_THz2), r.half_width_eV, r.center_eV});
    }
    return set;
}

/// Pseudo-mode sets for the 20 nm silver sphere (gap 2 nm and 10 nm).
inline LorentzianSet sphere_kernel_h2nm() {
    return from_table({{2.1204, 0.0243, 2.757}, {102.307, 0.03615, 2.9498}, {175.1694, 0.02507, 2.972}});
}

inline LorentzianSet sphere_kernel_h10nm() {
    return from_table({{0.5759, 0.03212, 2.757}, {0.47819, 0.02622, 2.8812}, {0.9852, 0.03421, 2.932}});
}

/// Ten-term nanoparticle-on-mirror pseudo-mode set.
inline LorentzianSet npom_kernel() {
    return from_table({{31.8917, 0.0303, 1.5478},
                       {37.9805, 0.0304, 1.9101},
                       {38.1770, 0.0304, 2.0936},
                       {35.7083, 0.0300, 2.2003},
                       {45.2399, 0.0348, 2.2700},
                       {25.9778, 0.0272, 2.3110},
                       {99.6008, 0.0306, 2.3500},
                       {1196.2133, 0.0276, 2.4032},
                       {304.6571, 0.0298, 2.4292},
                       {67.2896, 0.0654, 2.5000}});
}

}  // namespace nanoqed::fit
