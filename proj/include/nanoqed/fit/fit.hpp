#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

#include "nanoqed/fit/lorentzian.hpp"
#include "nanoqed/spectrum.hpp"

namespace nanoqed::fit {

struct FitOptions {
    double residual_threshold = 0.02;  // relative L2 accepted as success
    int max_iterations = 3000;         // per start
    double cost_tolerance = 1e-15;     // relative cost change at convergence
    bool signed_areas = false;         // allow negative areas (source products)
    int random_starts = 16;            // extra deterministic random starts when unseeded
    unsigned seed = 20240611u;
};

struct FitReport {
    double residual_rel_L2 = 0.0;
    int iterations = 0;
    std::pair<double, double> window{0.0, 0.0};
    bool converged = false;  // residual below the configured threshold
};

struct FitResult {
    LorentzianSet set;
    FitReport report;
};

namespace detail {

inline double rel_residual(std::span<const double> x, std::span<const double> y, const LorentzianSet& s) {
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = s(x[i]) - y[i];
        num += r * r;
        den += y[i] * y[i];
    }
    return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

// Half width at half maximum around index i, min of the two sides.
inline double local_half_width(std::span<const double> x, std::span<const double> y, std::size_t i) {
    const double half = 0.5 * y[i];
    std::size_t lo = i;
    while (lo > 0 && y[lo] > half) --lo;
    std::size_t hi = i;
    while (hi + 1 < y.size() && y[hi] > half) ++hi;
    double w = std::numeric_limits<double>::infinity();
    if (y[lo] <= half) w = std::min(w, x[i] - x[lo]);
    if (y[hi] <= half) w = std::min(w, x[hi] - x[i]);
    if (!std::isfinite(w)) w = 0.1 * (x.back() - x.front());
    return std::max(w, 2.0 * (x[1] - x[0]));
}

struct Bounds {
    double omega_lo, omega_hi;
    double logb_lo, logb_hi;
};

inline Bounds make_bounds(std::span<const double> x) {
    double h = x[1] - x[0];
    for (std::size_t i = 2; i < x.size(); ++i) h = std::min(h, x[i] - x[i - 1]);
    return {x.front(), x.back(), std::log(0.25 * h), std::log(x.back() - x.front())};
}

// Damped least squares on (log A, log B, Omega) per term; A itself when
// signed areas are allowed.
inline std::pair<LorentzianSet, int> levenberg_marquardt(std::span<const double> x, std::span<const double> y,
                                                         LorentzianSet start, const FitOptions& opt) {
    const std::size_t m = x.size();
    const std::size_t n = start.size();
    const std::size_t np = 3 * n;
    const Bounds bd = make_bounds(x);

    Eigen::VectorXd p(static_cast<Eigen::Index>(np));
    for (std::size_t j = 0; j < n; ++j) {
        const auto& t = start.terms[j];
        p[3 * j] = opt.signed_areas ? t.area : std::log(std::max(t.area, 1e-300));
        p[3 * j + 1] = std::clamp(std::log(t.half_width), bd.logb_lo, bd.logb_hi);
        p[3 * j + 2] = std::clamp(t.center, bd.omega_lo, bd.omega_hi);
    }
    auto unpack = [&](const Eigen::VectorXd& q) {
        LorentzianSet s;
        s.terms.resize(n);
        for (std::size_t j = 0; j < n; ++j) {
            const double a = opt.signed_areas ? q[3 * j] : std::exp(q[3 * j]);
            s.terms[j] = {a, std::exp(q[3 * j + 1]), q[3 * j + 2]};
        }
        return s;
    };
    auto project = [&](Eigen::VectorXd& q) {
        for (std::size_t j = 0; j < n; ++j) {
            if (!opt.signed_areas) q[3 * j] = std::min(q[3 * j], 700.0);
            q[3 * j + 1] = std::clamp(q[3 * j + 1], bd.logb_lo, bd.logb_hi);
            q[3 * j + 2] = std::clamp(q[3 * j + 2], bd.omega_lo, bd.omega_hi);
        }
    };
    auto residuals = [&](const Eigen::VectorXd& q, Eigen::VectorXd& r) {
        const LorentzianSet s = unpack(q);
        for (std::size_t i = 0; i < m; ++i) r[static_cast<Eigen::Index>(i)] = s(x[i]) - y[i];
        return r.squaredNorm();
    };

    Eigen::VectorXd r(static_cast<Eigen::Index>(m));
    Eigen::MatrixXd J(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(np));
    double cost = residuals(p, r);
    double lambda = 1e-3;
    int it = 0;
    int small_steps = 0;
    for (; it < opt.max_iterations; ++it) {
        for (std::size_t i = 0; i < m; ++i) {
            const auto ii = static_cast<Eigen::Index>(i);
            for (std::size_t j = 0; j < n; ++j) {
                const double A = opt.signed_areas ? p[3 * j] : std::exp(p[3 * j]);
                const double B = std::exp(p[3 * j + 1]);
                const double d = x[i] - p[3 * j + 2];
                const double den = d * d + B * B;
                const double shape = B / (std::numbers::pi * den);
                J(ii, 3 * j) = opt.signed_areas ? shape : A * shape;
                J(ii, 3 * j + 1) = A / std::numbers::pi * B * (d * d - B * B) / (den * den);
                J(ii, 3 * j + 2) = A / std::numbers::pi * B * 2.0 * d / (den * den);
            }
        }
        const Eigen::MatrixXd JtJ = J.transpose() * J;
        const Eigen::VectorXd g = J.transpose() * r;
        Eigen::VectorXd diag = JtJ.diagonal().cwiseMax(1e-30 * std::max(1.0, JtJ.diagonal().maxCoeff()));
        bool accepted = false;
        while (lambda < 1e16) {
            Eigen::MatrixXd M = JtJ;
            M.diagonal() += lambda * diag;
            Eigen::VectorXd step = M.ldlt().solve(-g);
            Eigen::VectorXd trial = p + step;
            project(trial);
            Eigen::VectorXd rt(static_cast<Eigen::Index>(m));
            const double c_new = residuals(trial, rt);
            if (std::isfinite(c_new) && c_new < cost) {
                const double rel = (cost - c_new) / std::max(cost, 1e-300);
                p = trial;
                r = rt;
                cost = c_new;
                lambda = std::max(lambda / 3.0, 1e-12);
                accepted = true;
                small_steps = rel < opt.cost_tolerance ? small_steps + 1 : 0;
                break;
            }
            lambda *= 4.0;
        }
        if (!accepted || small_steps >= 3 || cost == 0.0) break;
    }
    return {unpack(p), it};
}

inline LorentzianSet term_from_index(std::span<const double> x, std::span<const double> y, std::size_t i,
                                     double width_scale) {
    const double B = width_scale * local_half_width(x, y, i);
    return LorentzianSet{{{std::numbers::pi * B * y[i], B, x[i]}}};
}

// Add terms one at a time at the largest remaining positive residual,
// refitting all parameters after each addition.
inline std::pair<LorentzianSet, int> greedy_fit(std::span<const double> x, std::span<const double> y,
                                                LorentzianSet base, std::size_t n, const FitOptions& opt) {
    int iters = 0;
    std::vector<double> res(y.size());
    while (base.size() < n) {
        for (std::size_t i = 0; i < y.size(); ++i) {
            const double d = y[i] - base(x[i]);
            res[i] = opt.signed_areas ? std::abs(d) : std::max(0.0, d);
        }
        const auto imax = static_cast<std::size_t>(std::max_element(res.begin(), res.end()) - res.begin());
        if (!(res[imax] > 0.0)) {
            // Target fully explained; place a small term at the centre.
            const std::size_t mid = y.size() / 2;
            base.terms.push_back({1e-6 * std::max(base.total_area(), 1e-30), 10.0 * (x[1] - x[0]), x[mid]});
        } else {
            auto t = term_from_index(x, res, imax, 1.0).terms.front();
            if (y[imax] < base(x[imax])) t.area = -t.area;
            base.terms.push_back(t);
        }
        auto [s, k] = levenberg_marquardt(x, y, base, opt);
        base = std::move(s);
        iters += k;
    }
    return {base, iters};
}

}  // namespace detail

/// Least-squares decomposition of a non-negative spectrum into n Lorentzians.
///
/// With `seeds` the fit starts from them alone. Otherwise several starts are
/// tried (largest local maxima at two width guesses, and greedy residual
/// seeding) and the lowest residual wins. The returned set is sorted by centre.
inline FitResult fit_lorentzians(const TabulatedSpectrum& target, std::size_t n,
                                 const std::optional<LorentzianSet>& seeds = std::nullopt,
                                 const FitOptions& opt = {}) {
    if (n < 1) throw std::invalid_argument("fit needs at least one Lorentzian");
    if (target.size() < 30 * n) {
        throw std::invalid_argument("fit needs at least 30 samples per Lorentzian, got " +
                                    std::to_string(target.size()));
    }
    const auto x = target.grid.values();
    const std::span<const double> y = target.values;

    FitResult best;
    best.report.window = {x.front(), x.back()};
    double best_res = std::numeric_limits<double>::infinity();
    int total_iters = 0;
    auto consider = [&](LorentzianSet s, int iters) {
        total_iters += iters;
        const double res = detail::rel_residual(x, y, s);
        if (res < best_res) {
            best_res = res;
            best.set = std::move(s);
        }
    };

    if (seeds) {
        if (seeds->size() != n) throw std::invalid_argument("seed set size differs from requested n");
        auto [s, k] = detail::levenberg_marquardt(x, y, *seeds, opt);
        consider(std::move(s), k);
    } else {
        auto peaks = find_peaks(x, y, 1e-3);
        std::sort(peaks.begin(), peaks.end(), [](const Peak& a, const Peak& b) { return a.height > b.height; });
        for (double width_scale : {1.0, 0.5}) {
            LorentzianSet start;
            for (std::size_t k = 0; k < std::min(n, peaks.size()); ++k) {
                start.terms.push_back(detail::term_from_index(x, y, peaks[k].index, width_scale).terms.front());
            }
            if (start.empty()) start = detail::term_from_index(x, y, target.argmax(), width_scale);
            auto [s0, k0] = detail::levenberg_marquardt(x, y, start, opt);
            auto [s, k] = detail::greedy_fit(x, y, std::move(s0), n, opt);
            consider(std::move(s), k0 + k);
        }
        auto [s, k] = detail::greedy_fit(x, y, LorentzianSet{}, n, opt);
        consider(std::move(s), k);

        // Random starts spread over the region where the target is appreciable.
        const double ymax = *std::max_element(y.begin(), y.end());
        std::size_t lo = 0;
        std::size_t hi = y.size() - 1;
        while (lo < hi && std::abs(y[lo]) < 0.01 * ymax) ++lo;
        while (hi > lo && std::abs(y[hi]) < 0.01 * ymax) --hi;
        const double total = trapezoid(x, y);
        std::mt19937 rng(opt.seed);
        std::uniform_real_distribution<double> uc(x[lo], x[hi]);
        std::uniform_real_distribution<double> ulogb(std::log(2.0 * (x[1] - x[0])),
                                                     std::log(0.25 * (x.back() - x.front())));
        std::uniform_int_distribution<int> usign(0, 1);
        for (int r = 0; r < opt.random_starts; ++r) {
            LorentzianSet start;
            for (std::size_t j = 0; j < n; ++j) {
                double a = std::abs(total) / static_cast<double>(n);
                if (opt.signed_areas && usign(rng) == 1) a = -0.5 * a;
                const double c = uc(rng);
                start.terms.push_back({a, std::exp(ulogb(rng)), c});
            }
            auto [sr, kr] = detail::levenberg_marquardt(x, y, start, opt);
            consider(std::move(sr), kr);
        }
    }
    best.set.sort_canonical();
    best.report.residual_rel_L2 = best_res;
    best.report.iterations = total_iters;
    best.report.converged = best_res <= opt.residual_threshold;
    return best;
}

/// Fit of sqrt(K) times a source envelope. Areas may take either sign, since
/// only the sum enters the source term. An identically zero input yields an
/// empty set with zero residual.
inline FitResult fit_source_product(const TabulatedSpectrum& product, std::size_t n, FitOptions opt = {}) {
    opt.signed_areas = true;
    const bool zero = std::all_of(product.values.begin(), product.values.end(), [](double v) { return v == 0.0; });
    if (zero) {
        FitResult r;
        r.report.window = {product.grid.front(), product.grid.back()};
        r.report.converged = true;
        return r;
    }
    return fit_lorentzians(product, n, std::nullopt, opt);
}

}  // namespace nanoqed::fit
