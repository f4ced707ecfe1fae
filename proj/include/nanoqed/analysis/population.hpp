#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "nanoqed/dynamics/scenario.hpp"

namespace nanoqed::analysis {

/// Oscillatory when the excited population P = |C_e0|^2 has at least two
/// revivals: local minima followed by a rise above `rise_tolerance` x P(0)
/// that refill at least `min_depth` of the following maximum. Shallow ripples
/// from off-resonant modes do not count. The period is the mean spacing of
/// the revival minima.
struct PopulationRegime {
    bool oscillatory = false;
    std::size_t revivals = 0;
    std::optional<double> period;  // fs
    double max_rise = 0.0;         // largest increase of P between samples, relative to P(0)
};

inline PopulationRegime population_regime(const dynamics::AmplitudeTrace& tr, double rise_tolerance = 1e-3,
                                          double min_depth = 0.5) {
    PopulationRegime r;
    const std::size_t n = tr.times.size();
    if (n < 3) return r;
    std::vector<double> p(n);
    for (std::size_t i = 0; i < n; ++i) p[i] = std::norm(tr.c_e0[i]);
    const double p0 = std::max(p[0], 1e-300);
    for (std::size_t i = 1; i < n; ++i) r.max_rise = std::max(r.max_rise, (p[i] - p[i - 1]) / p0);
    std::vector<double> minima;
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (!(p[i] < p[i - 1] && p[i] <= p[i + 1])) continue;
        double peak = p[i];
        for (std::size_t j = i + 1; j < n && p[j] >= p[j - 1]; ++j) peak = p[j];
        if ((peak - p[i]) / p0 > rise_tolerance && (peak - p[i]) >= min_depth * peak) minima.push_back(tr.times[i]);
    }
    r.revivals = minima.size();
    r.oscillatory = minima.size() >= 2;
    if (minima.size() >= 2) r.period = (minima.back() - minima.front()) / static_cast<double>(minima.size() - 1);
    return r;
}

}  // namespace nanoqed::analysis
