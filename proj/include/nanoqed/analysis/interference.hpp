#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <vector>

#include "nanoqed/dynamics/scenario.hpp"
#include "nanoqed/errors.hpp"
#include "nanoqed/photonics/kernel.hpp"
#include "nanoqed/spectrum.hpp"
#include "nanoqed/units.hpp"

namespace nanoqed::analysis {

using dynamics::PhotonField;

/// Phase law a node segment follows: (d - b) t, d t or (d + b) t constant.
enum class PhaseLaw { minus_b, free, plus_b };

struct SegmentFit {
    double t0 = 0.0;      // fs, mean time of the segment
    double delta0 = 0.0;  // eV, mean detuning of the segment
    double slope = 0.0;   // eV/fs
    double r2 = 0.0;
    PhaseLaw law = PhaseLaw::free;
    double rel_error = 0.0;  // |slope - predicted| / |predicted| for `law`
    std::size_t points = 0;
};

struct NodeLine {
    std::vector<double> delta;  // eV
    std::vector<double> t;      // fs
    std::vector<SegmentFit> segments;
    std::optional<SegmentFit> rabi;  // first segment matching a +-b law
};

struct MapOptions {
    double t_min = 5.0;                 // fs
    double t_max = 0.0;                 // fs; 0 selects 2 pi / B
    double B = 0.0;                     // eV, relaxation half width setting the default window
    double segment_ratio = 1.2;         // segment spans [t0 / r, t0 r]
    std::size_t min_line_points = 15;
    std::size_t min_segment_points = 8;
    std::size_t link_samples = 8;       // max time-index jump when linking rows
    double r2_min = 0.95;
    double slope_tolerance = 0.10;
};

struct MapAnalysis {
    std::vector<NodeLine> lines;        // ordered by first time
    std::size_t rabi_lines = 0;
    double contrast = 0.0;           // mean row fringe depth over the map maximum
    double relative_contrast = 0.0;  // density-weighted mean of 1 - min / max
    double t_min = 0.0, t_max = 0.0;
};

namespace detail {

struct LinearFit {
    double slope = 0.0, intercept = 0.0, r2 = 0.0;
};

inline LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
    const auto n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    LinearFit f;
    if (!(sxx > 0.0)) return f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    f.r2 = syy > 0.0 ? sxy * sxy / (sxx * syy) : 1.0;
    return f;
}

// Interior local minima of row[] with lo <= t <= hi.
inline std::vector<std::size_t> local_minima(const std::vector<double>& row, const std::vector<double>& t, double lo,
                                             double hi) {
    std::vector<std::size_t> m;
    for (std::size_t n = 1; n + 1 < row.size(); ++n) {
        if (t[n] < lo || t[n] > hi) continue;
        if (row[n] < row[n - 1] && row[n] <= row[n + 1]) m.push_back(n);
    }
    return m;
}

}  // namespace detail

/// Node lines of |C_g1|^2: local minima along t for every energy row, linked
/// across neighbouring rows, then fitted by straight segments. Each segment is
/// assigned the phase law among (d -+ b) t = const and d t = const closest to
/// its slope; the predicted slope of (d + s) t = const is -(d0 + s) / t0.
inline MapAnalysis interference_map(const PhotonField& field, double omega_e, double b, const MapOptions& opt = {}) {
    const auto& t = field.times;
    if (t.size() < 3 || field.grid.size() < 3) throw std::invalid_argument("photon field too small for map analysis");
    if (!(b > 0.0)) throw std::invalid_argument("map analysis needs a positive Rabi frequency b");
    const double dt = t[1] - t[0];
    const double period = 2.0 * std::numbers::pi * kHbar / b;
    if (period / dt < 20.0) {
        throw NumericError("photon field under-resolved: " + std::to_string(period / dt) +
                           " samples per Rabi period, need at least 20");
    }
    MapAnalysis out;
    out.t_min = opt.t_min;
    out.t_max = opt.t_max > 0.0 ? opt.t_max : (opt.B > 0.0 ? 2.0 * std::numbers::pi * kHbar / opt.B : t.back());

    struct Open {
        std::vector<std::pair<std::size_t, std::size_t>> pts;  // (row, time index)
    };
    std::vector<Open> active, done;
    for (std::size_t i = 0; i < field.grid.size(); ++i) {
        const auto mins = detail::local_minima(field.density[i], t, out.t_min, out.t_max);
        std::vector<bool> used(mins.size(), false);
        std::vector<Open> next;
        for (auto& L : active) {
            const std::size_t last = L.pts.back().second;
            std::optional<std::size_t> best;
            for (std::size_t k = 0; k < mins.size(); ++k) {
                if (used[k]) continue;
                const std::size_t jump = mins[k] > last ? mins[k] - last : last - mins[k];
                if (jump > opt.link_samples) continue;
                const auto bj = best ? (mins[*best] > last ? mins[*best] - last : last - mins[*best]) : jump + 1;
                if (jump < bj) best = k;
            }
            if (best) {
                used[*best] = true;
                L.pts.push_back({i, mins[*best]});
                next.push_back(std::move(L));
            } else {
                done.push_back(std::move(L));
            }
        }
        for (std::size_t k = 0; k < mins.size(); ++k)
            if (!used[k]) next.push_back(Open{{{i, mins[k]}}});
        active = std::move(next);
    }
    for (auto& L : active) done.push_back(std::move(L));

    for (const auto& L : done) {
        if (L.pts.size() < opt.min_line_points) continue;
        NodeLine line;
        for (const auto& [i, n] : L.pts) {
            line.delta.push_back(field.grid[i] - omega_e);
            line.t.push_back(t[n]);
        }
        const double t_first = *std::min_element(line.t.begin(), line.t.end());
        const double t_last = *std::max_element(line.t.begin(), line.t.end());
        const double r2step = opt.segment_ratio * opt.segment_ratio;
        for (double t0 = std::max(t_first, out.t_min) * opt.segment_ratio; t0 / opt.segment_ratio <= t_last; t0 *= r2step) {
            std::vector<double> ts, ds;
            for (std::size_t k = 0; k < line.t.size(); ++k) {
                if (line.t[k] >= t0 / opt.segment_ratio && line.t[k] <= t0 * opt.segment_ratio) {
                    ts.push_back(line.t[k]);
                    ds.push_back(line.delta[k]);
                }
            }
            if (ts.size() < opt.min_segment_points) continue;
            const auto f = detail::linear_fit(ts, ds);
            SegmentFit s;
            s.points = ts.size();
            s.slope = f.slope;
            s.r2 = f.r2;
            for (std::size_t k = 0; k < ts.size(); ++k) {
                s.t0 += ts[k];
                s.delta0 += ds[k];
            }
            s.t0 /= static_cast<double>(ts.size());
            s.delta0 /= static_cast<double>(ts.size());
            double best = std::numeric_limits<double>::infinity();
            for (const auto& [law, shift] : {std::pair{PhaseLaw::minus_b, -b}, std::pair{PhaseLaw::free, 0.0},
                                             std::pair{PhaseLaw::plus_b, b}}) {
                const double pred = -(s.delta0 + shift) / s.t0;
                const double err = std::abs(s.slope - pred) / std::abs(pred);
                if (err < best) {
                    best = err;
                    s.law = law;
                }
            }
            s.rel_error = best;
            line.segments.push_back(s);
            if (!line.rabi && s.law != PhaseLaw::free && s.r2 >= opt.r2_min && s.rel_error <= opt.slope_tolerance) {
                line.rabi = s;
            }
        }
        out.lines.push_back(std::move(line));
    }
    std::sort(out.lines.begin(), out.lines.end(), [](const NodeLine& a, const NodeLine& c) {
        return *std::min_element(a.t.begin(), a.t.end()) < *std::min_element(c.t.begin(), c.t.end());
    });
    for (const auto& l : out.lines) out.rabi_lines += l.rabi ? 1 : 0;

    // Fringe depth of a row: mean of mean(adjacent maxima) - min over its
    // interior minima. `contrast` averages it over all rows, rows without
    // fringes counting as zero, and divides by the largest density in the
    // window, i.e. the visibility of the pattern in a normalized density plot.
    // `relative_contrast` weights 1 - min / mean(adjacent maxima) by the row
    // mean density.
    double wsum = 0.0, csum = 0.0, asum = 0.0, gmax = 0.0;
    for (std::size_t i = 0; i < field.grid.size(); ++i) {
        const auto& row = field.density[i];
        std::vector<std::size_t> win;
        for (std::size_t n = 0; n < t.size(); ++n)
            if (t[n] >= out.t_min && t[n] <= out.t_max) win.push_back(n);
        if (win.size() < 3) continue;
        double mean = 0.0;
        for (auto n : win) mean += row[n];
        mean /= static_cast<double>(win.size());
        for (auto n : win) gmax = std::max(gmax, row[n]);
        double depth = 0.0, abs_depth = 0.0;
        std::size_t count = 0;
        double prev_max = -1.0;
        std::optional<double> pending_min;
        for (std::size_t k = 1; k + 1 < win.size(); ++k) {
            const auto n = win[k];
            if (row[n] > row[n - 1] && row[n] >= row[n + 1]) {
                if (pending_min && prev_max > 0.0) {
                    const double m = 0.5 * (prev_max + row[n]);
                    if (m > 0.0) {
                        depth += 1.0 - *pending_min / m;
                        abs_depth += m - *pending_min;
                        ++count;
                    }
                }
                prev_max = row[n];
                pending_min.reset();
            } else if (row[n] < row[n - 1] && row[n] <= row[n + 1]) {
                pending_min = row[n];
            }
        }
        wsum += mean;
        if (count > 0) {
            csum += mean * depth / static_cast<double>(count);
            asum += abs_depth / static_cast<double>(count);
        }
    }
    out.relative_contrast = wsum > 0.0 ? csum / wsum : 0.0;
    out.contrast = gmax > 0.0 ? asum / (static_cast<double>(field.grid.size()) * gmax) : 0.0;
    return out;
}

/// Mean spacing of consecutive maxima of |C_g1(probe, t)|^2 for t < t_end,
/// with parabolic refinement of each maximum.
inline double beating_period(const PhotonField& field, double probe_energy, double t_end) {
    const auto& g = field.grid;
    if (!g.contains(probe_energy)) throw std::out_of_range("probe energy outside the photon field grid");
    std::size_t i = 0;
    for (std::size_t k = 1; k < g.size(); ++k)
        if (std::abs(g[k] - probe_energy) < std::abs(g[i] - probe_energy)) i = k;
    const auto& t = field.times;
    const auto& row = field.density[i];
    std::vector<double> tmax;
    for (std::size_t n = 1; n + 1 < row.size() && t[n] < t_end; ++n) {
        if (!(row[n] > row[n - 1] && row[n] >= row[n + 1])) continue;
        const double denom = row[n - 1] - 2.0 * row[n] + row[n + 1];
        const double shift = denom < 0.0 ? std::clamp(0.5 * (row[n - 1] - row[n + 1]) / denom, -0.5, 0.5) : 0.0;
        tmax.push_back(t[n] + shift * 0.5 * (t[n + 1] - t[n - 1]));
    }
    if (tmax.size() < 2) {
        throw NumericError("fewer than two maxima at " + std::to_string(probe_energy) + " eV before " +
                           std::to_string(t_end) + " fs: no beating");
    }
    return (tmax.back() - tmax.front()) / static_cast<double>(tmax.size() - 1);
}

/// I(t) = int dw |E(r_d, w)|^2 |C_g1(w, t)|^2 at the emitter, in V^2/m^2,
/// with |E(r_d, w)|^2 = hbar^2 K(w) / d^2 and K the kernel rate.
inline std::vector<double> field_intensity_at_dipole(const PhotonField& field, const TabulatedSpectrum& kernel,
                                                     const photonics::Dipole& dip) {
    dip.validate();
    if (!field.grid.same_as(kernel.grid)) throw std::invalid_argument("photon field and kernel grids differ");
    const double d = dip.d_debye * si::debye;
    // rad/fs x 1/fs x fs -> 1e15 in SI
    const double pref = si::hbar * si::hbar / (d * d) * 1e15;
    std::vector<double> out(field.times.size(), 0.0);
    const auto& g = field.grid;
    for (std::size_t n = 0; n < field.times.size(); ++n) {
        double s = 0.0;
        for (std::size_t i = 1; i < g.size(); ++i) {
            const double f0 = kernel.values[i - 1] / kHbar * field.density[i - 1][n];
            const double f1 = kernel.values[i] / kHbar * field.density[i][n];
            s += 0.5 * (g[i] - g[i - 1]) / kHbar * (f0 + f1);
        }
        out[n] = pref * s;
    }
    return out;
}

}  // namespace nanoqed::analysis
