#pragma once

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include "nanoqed/errors.hpp"

namespace nanoqed::dynamics {

using cplx = std::complex<double>;

/// Complex polynomial, coefficients in ascending powers.
struct Poly {
    std::vector<cplx> c;

    Poly() = default;
    explicit Poly(std::vector<cplx> coeffs) : c(std::move(coeffs)) { trim(); }

    static Poly constant(cplx a) { return Poly({a}); }
    /// s + a
    static Poly linear(cplx a) { return Poly({a, cplx(1.0)}); }

    int degree() const { return c.empty() ? -1 : static_cast<int>(c.size()) - 1; }
    bool is_zero() const { return c.empty(); }
    cplx leading() const { return c.empty() ? cplx(0.0) : c.back(); }

    void trim() {
        while (!c.empty() && c.back() == cplx(0.0)) c.pop_back();
    }

    cplx operator()(cplx s) const {
        cplx v(0.0);
        for (auto it = c.rbegin(); it != c.rend(); ++it) v = v * s + *it;
        return v;
    }

    Poly derivative() const {
        if (c.size() <= 1) return Poly{};
        std::vector<cplx> d(c.size() - 1);
        for (std::size_t i = 1; i < c.size(); ++i) d[i - 1] = c[i] * static_cast<double>(i);
        return Poly(std::move(d));
    }

    /// First `m` Taylor coefficients around s0: P(s0 + u) = sum_j t_j u^j.
    std::vector<cplx> taylor(cplx s0, std::size_t m) const {
        std::vector<cplx> work = c;
        std::vector<cplx> out;
        for (std::size_t j = 0; j < m; ++j) {
            if (work.empty()) {
                out.push_back(0.0);
                continue;
            }
            // synthetic division by (s - s0): remainder is the next coefficient
            cplx acc(0.0);
            std::vector<cplx> q(work.size() > 1 ? work.size() - 1 : 0);
            for (std::size_t i = work.size(); i-- > 0;) {
                acc = acc * s0 + work[i];
                if (i > 0) q[i - 1] = acc;
            }
            out.push_back(acc);
            work = std::move(q);
        }
        return out;
    }

    friend Poly operator+(const Poly& a, const Poly& b) {
        std::vector<cplx> r(std::max(a.c.size(), b.c.size()), cplx(0.0));
        for (std::size_t i = 0; i < a.c.size(); ++i) r[i] += a.c[i];
        for (std::size_t i = 0; i < b.c.size(); ++i) r[i] += b.c[i];
        return Poly(std::move(r));
    }

    friend Poly operator*(const Poly& a, const Poly& b) {
        if (a.is_zero() || b.is_zero()) return Poly{};
        std::vector<cplx> r(a.c.size() + b.c.size() - 1, cplx(0.0));
        for (std::size_t i = 0; i < a.c.size(); ++i)
            for (std::size_t j = 0; j < b.c.size(); ++j) r[i + j] += a.c[i] * b.c[j];
        return Poly(std::move(r));
    }

    friend Poly operator*(cplx a, const Poly& p) {
        std::vector<cplx> r = p.c;
        for (auto& x : r) x *= a;
        return Poly(std::move(r));
    }
};

/// Product of (s - r) over the given roots.
inline Poly poly_from_roots(const std::vector<cplx>& roots) {
    Poly p = Poly::constant(1.0);
    for (const auto& r : roots) p = p * Poly::linear(-r);
    return p;
}

/// Roots of p by eigenvalues of the companion matrix of the rescaled
/// polynomial, then polished with a few Newton steps on p itself.
inline std::vector<cplx> polynomial_roots(const Poly& p) {
    const int n = p.degree();
    if (n < 0) throw std::invalid_argument("roots of the zero polynomial are undefined");
    if (n == 0) return {};
    // s = scale * u with scale from the Fujiwara bound to balance coefficients
    double scale = 0.0;
    for (int i = 0; i < n; ++i) {
        const double r = std::pow(std::abs(p.c[static_cast<std::size_t>(i)] / p.leading()), 1.0 / (n - i));
        scale = std::max(scale, r);
    }
    if (!(scale > 0.0)) scale = 1.0;
    Eigen::MatrixXcd comp = Eigen::MatrixXcd::Zero(n, n);
    for (int i = 1; i < n; ++i) comp(i, i - 1) = 1.0;
    for (int i = 0; i < n; ++i) {
        const cplx ci = p.c[static_cast<std::size_t>(i)] / p.leading() / std::pow(scale, n - i);
        comp(i, n - 1) = -ci;
    }
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(comp, false);
    if (es.info() != Eigen::Success) throw NumericError("companion eigenvalue computation did not converge");
    std::vector<cplx> roots(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) roots[static_cast<std::size_t>(i)] = es.eigenvalues()[i] * scale;

    const Poly dp = p.derivative();
    for (auto& r : roots) {
        for (int it = 0; it < 4; ++it) {
            const cplx f = p(r);
            const cplx d = dp(r);
            if (d == cplx(0.0)) break;
            const cplx step = f / d;
            const cplx trial = r - step;
            if (std::abs(p(trial)) < std::abs(f)) {
                r = trial;
            } else {
                break;
            }
        }
    }
    return roots;
}

}  // namespace nanoqed::dynamics
