#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>
#include <vector>

#include "nanoqed/dynamics/polynomial.hpp"
#include "nanoqed/errors.hpp"
#include "nanoqed/fit/lorentzian.hpp"
#include "nanoqed/units.hpp"

namespace nanoqed::dynamics {

/// One term X t^k exp(-Y t); Y in 1/fs.
struct ExpTerm {
    cplx X;
    cplx Y;
    int k = 0;
};

struct ExponentialSum {
    std::vector<ExpTerm> terms;

    cplx operator()(double t) const {
        cplx s(0.0);
        for (const auto& e : terms) {
            cplx v = e.X * std::exp(-e.Y * t);
            if (e.k > 0) v *= std::pow(t, e.k);
            s += v;
        }
        return s;
    }

    double min_decay_rate() const {
        double m = std::numeric_limits<double>::infinity();
        for (const auto& e : terms) m = std::min(m, e.Y.real());
        return m;
    }
};

enum class SourceKind {
    photon,  // term -(i/hbar) a exp(-beta t)
    drive    // term -(c_g0(0)/hbar) a t exp(-beta t)
};

struct SourceSet {
    fit::LorentzianSet set;  // fitted product, areas carry the product unit times eV
    SourceKind kind = SourceKind::photon;
    cplx weight{1.0};  // c_g0(0) for drives; extra factor otherwise
};

/// Pole of the source transform: coef / (s - pole)^mult.
struct SourcePole {
    cplx pole;
    int mult;
    cplx coef;
};

/// Y(s) = numerator / (kernel_denominator * prod (s - pole)^mult).
///
/// The kernel denominator is s prod(s + b_j) + sum_j a_j prod_{k!=j}(s + b_k)
/// and is monic. The pseudo-mode data (a_j, b_j), the initial value and the
/// source poles are kept as well, which gives the same function in the
/// factored form Y = (y0 + S(s)) / f(s) with f(s) = s + sum_j a_j / (s + b_j).
struct LaplaceRational {
    Poly numerator;
    Poly kernel_denominator;
    std::vector<std::pair<cplx, int>> source_poles;

    std::vector<cplx> kernel_weights;  // a_j, 1/fs^2
    std::vector<cplx> kernel_rates;    // b_j, 1/fs
    cplx initial{0.0};
    std::vector<SourcePole> source_terms;

    Poly denominator() const {
        Poly d = kernel_denominator;
        for (const auto& [p, m] : source_poles)
            for (int i = 0; i < m; ++i) d = d * Poly::linear(-p);
        return d;
    }

    cplx f(cplx s) const {
        cplx v = s;
        for (std::size_t j = 0; j < kernel_rates.size(); ++j) v += kernel_weights[j] / (s + kernel_rates[j]);
        return v;
    }

    cplx df(cplx s) const {
        cplx v = 1.0;
        for (std::size_t j = 0; j < kernel_rates.size(); ++j) {
            const cplx d = s + kernel_rates[j];
            v -= kernel_weights[j] / (d * d);
        }
        return v;
    }

    cplx source(cplx s) const {
        cplx v(0.0);
        for (const auto& p : source_terms) v += p.coef / std::pow(s - p.pole, p.mult);
        return v;
    }
};

/// Complex decay rate (1/fs) of a pseudo-mode in the frame rotating at omega_e.
inline cplx rotating_rate(const fit::LorentzianTerm& t, double omega_e) {
    return cplx(t.half_width, t.center - omega_e) / kHbar;
}

/// G(s) = prod(s + b_j) / P_K(s) as (numerator, denominator).
inline std::pair<Poly, Poly> kernel_transfer(const fit::LorentzianSet& kernel, double omega_e) {
    if (kernel.empty()) throw std::invalid_argument("kernel needs at least one Lorentzian term");
    Poly pi = Poly::constant(1.0);
    std::vector<cplx> b;
    std::vector<double> a;
    for (const auto& t : kernel.terms) {
        b.push_back(rotating_rate(t, omega_e));
        a.push_back(t.area / (kHbar * kHbar));
        pi = pi * Poly::linear(b.back());
    }
    Poly den = Poly({0.0, 1.0}) * pi;
    for (std::size_t j = 0; j < b.size(); ++j) {
        Poly term = Poly::constant(a[j]);
        for (std::size_t k = 0; k < b.size(); ++k)
            if (k != j) term = term * Poly::linear(b[k]);
        den = den + term;
    }
    return {pi, den};
}

/// Laplace transform of C_e0 for the given kernel, sources and initial value.
inline LaplaceRational build_laplace_rational(const fit::LorentzianSet& kernel,
                                              const std::vector<SourceSet>& sources, double omega_e,
                                              cplx c_e0_init) {
    auto [pi_k, p_k] = kernel_transfer(kernel, omega_e);

    // Source transform N_S / Pi_S.
    struct Pole {
        cplx rate;
        int mult;
        cplx coef;
    };
    std::vector<Pole> poles;
    for (const auto& src : sources) {
        for (const auto& t : src.set.terms) {
            const cplx rate = rotating_rate(t, omega_e);
            if (src.kind == SourceKind::photon) {
                poles.push_back({rate, 1, cplx(0.0, -1.0) * src.weight * t.area / kHbar});
            } else {
                poles.push_back({rate, 2, -src.weight * t.area / kHbar});
            }
        }
    }
    Poly pi_s = Poly::constant(1.0);
    for (const auto& p : poles)
        for (int i = 0; i < p.mult; ++i) pi_s = pi_s * Poly::linear(p.rate);
    Poly n_s;
    for (std::size_t j = 0; j < poles.size(); ++j) {
        Poly term = Poly::constant(poles[j].coef);
        for (std::size_t k = 0; k < poles.size(); ++k) {
            const int m = (k == j) ? 0 : poles[k].mult;
            for (int i = 0; i < m; ++i) term = term * Poly::linear(poles[k].rate);
        }
        n_s = n_s + term;
    }

    LaplaceRational out;
    out.numerator = pi_k * (c_e0_init * pi_s + n_s);
    out.kernel_denominator = p_k;
    for (const auto& p : poles) {
        out.source_poles.push_back({-p.rate, p.mult});
        out.source_terms.push_back({-p.rate, p.mult, p.coef});
    }
    for (const auto& t : kernel.terms) {
        out.kernel_weights.push_back(t.area / (kHbar * kHbar));
        out.kernel_rates.push_back(rotating_rate(t, omega_e));
    }
    out.initial = c_e0_init;
    return out;
}

namespace detail {

struct Cluster {
    cplx root;
    int mult;
};

inline std::vector<Cluster> cluster_roots(const std::vector<std::pair<cplx, int>>& roots, double radius) {
    std::vector<Cluster> out;
    for (const auto& [r, m] : roots) {
        bool merged = false;
        for (std::size_t i = 0; i < out.size(); ++i) {
            if (std::abs(out[i].root - r) < radius) {
                // running mean weighted by multiplicity
                out[i].root = (out[i].root * static_cast<double>(out[i].mult) + r * static_cast<double>(m)) /
                              static_cast<double>(out[i].mult + m);
                out[i].mult += m;
                merged = true;
                break;
            }
        }
        if (!merged) out.push_back({r, m});
    }
    return out;
}

// Truncated power-series product.
inline std::vector<cplx> series_mul(const std::vector<cplx>& a, const std::vector<cplx>& b, std::size_t m) {
    std::vector<cplx> r(m, cplx(0.0));
    for (std::size_t i = 0; i < std::min(a.size(), m); ++i)
        for (std::size_t j = 0; j + i < m && j < b.size(); ++j) r[i + j] += a[i] * b[j];
    return r;
}

inline ExponentialSum residues(const Poly& numerator, cplx lead, const std::vector<Cluster>& clusters) {
    ExponentialSum out;
    for (std::size_t c = 0; c < clusters.size(); ++c) {
        const auto m = static_cast<std::size_t>(clusters[c].mult);
        const cplx lam = clusters[c].root;
        std::vector<cplx> h = numerator.taylor(lam, m);
        for (auto& x : h) x /= lead;
        for (std::size_t o = 0; o < clusters.size(); ++o) {
            if (o == c) continue;
            // 1/(u + d)^mult with d = lam - mu
            const cplx d = lam - clusters[o].root;
            std::vector<cplx> inv(m);
            cplx p = 1.0 / d;
            for (std::size_t j = 0; j < m; ++j) {
                inv[j] = p;
                p *= -1.0 / d;
            }
            for (int k = 0; k < clusters[o].mult; ++k) h = series_mul(h, inv, m);
        }
        // sum_j h_j u^(j - m)  ->  t^(m-j-1) e^(lam t) / (m-j-1)!
        double fact = 1.0;
        std::vector<double> facts(m, 1.0);
        for (std::size_t k = 1; k < m; ++k) {
            fact *= static_cast<double>(k);
            facts[k] = fact;
        }
        for (std::size_t j = 0; j < m; ++j) {
            const std::size_t k = m - j - 1;
            out.terms.push_back({h[j] / facts[k], -lam, static_cast<int>(k)});
        }
    }
    return out;
}

}  // namespace detail

inline constexpr double kRootClusterRadius = 1e-9;  // 1/fs

/// Partial-fraction inversion of Q(s)/P(s) with all roots of P found numerically.
inline ExponentialSum invert_laplace(const Poly& P, const Poly& Q) {
    if (P.degree() < 1) throw std::invalid_argument("denominator must have degree >= 1");
    if (Q.degree() >= P.degree()) throw std::invalid_argument("numerator degree must be below denominator degree");
    if (Q.is_zero()) return {};
    std::vector<std::pair<cplx, int>> roots;
    for (const auto& r : polynomial_roots(P)) roots.push_back({r, 1});
    return detail::residues(Q, P.leading(), detail::cluster_roots(roots, kRootClusterRadius));
}

/// Roots of f(s) = s + sum_j a_j/(s + b_j): eigenvalues of the pseudo-mode
/// matrix [[0, -i sqrt(a)^T], [-i sqrt(a), -diag(b)]], whose characteristic
/// polynomial is the kernel denominator, polished by Newton steps on f.
/// Terms with a_j = 0 do not couple and are skipped.
inline std::vector<cplx> kernel_roots(const LaplaceRational& r) {
    std::vector<std::size_t> active;
    for (std::size_t j = 0; j < r.kernel_weights.size(); ++j)
        if (r.kernel_weights[j] != cplx(0.0)) active.push_back(j);
    const auto n = static_cast<Eigen::Index>(active.size());
    Eigen::MatrixXcd M = Eigen::MatrixXcd::Zero(n + 1, n + 1);
    for (Eigen::Index j = 0; j < n; ++j) {
        const auto idx = active[static_cast<std::size_t>(j)];
        const cplx g = cplx(0.0, -1.0) * std::sqrt(r.kernel_weights[idx]);
        M(0, j + 1) = g;
        M(j + 1, 0) = g;
        M(j + 1, j + 1) = -r.kernel_rates[idx];
    }
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(M, false);
    if (es.info() != Eigen::Success) throw NumericError("pseudo-mode eigenvalue computation did not converge");
    std::vector<cplx> roots(static_cast<std::size_t>(n + 1));
    for (Eigen::Index i = 0; i <= n; ++i) roots[static_cast<std::size_t>(i)] = es.eigenvalues()[i];
    for (auto& x : roots) {
        for (int it = 0; it < 6; ++it) {
            const cplx fx = r.f(x);
            const cplx d = r.df(x);
            if (d == cplx(0.0) || !std::isfinite(std::abs(fx))) break;
            const cplx trial = x - fx / d;
            if (std::abs(r.f(trial)) < std::abs(fx)) {
                x = trial;
            } else {
                break;
            }
        }
    }
    return roots;
}

/// Inversion using the known source poles; only the kernel denominator is
/// root-found. When no two poles coincide, residues come from the factored
/// form, which avoids evaluating high-degree polynomials; otherwise the
/// general clustered-root formula is applied to the polynomial form.
inline ExponentialSum invert_laplace(const LaplaceRational& r) {
    const int deg_p = r.denominator().degree();
    if (r.numerator.degree() >= deg_p) throw std::invalid_argument("numerator degree must be below denominator degree");
    if (r.numerator.is_zero()) return {};
    const auto kroots = kernel_roots(r);
    std::vector<std::pair<cplx, int>> all;
    for (const auto& x : kroots) all.push_back({x, 1});
    for (const auto& p : r.source_poles) all.push_back(p);
    const auto clusters = detail::cluster_roots(all, kRootClusterRadius);

    ExponentialSum out;
    bool separated = clusters.size() == all.size();
    for (const auto& p : r.source_terms) separated = separated && p.mult <= 2;
    if (separated) {
        for (const auto& lam : kroots) {
            out.terms.push_back({(r.initial + r.source(lam)) / r.df(lam), -lam, 0});
        }
        for (std::size_t i = 0; i < r.source_terms.size(); ++i) {
            const auto& p = r.source_terms[i];
            // rest of Y near the pole: (y0 + other source terms) / f is regular there
            const cplx fp = r.f(p.pole);
            if (p.mult == 1) {
                out.terms.push_back({p.coef / fp, -p.pole, 0});
            } else {
                out.terms.push_back({p.coef / fp, -p.pole, 1});
                out.terms.push_back({-p.coef * r.df(p.pole) / (fp * fp), -p.pole, 0});
            }
        }
    } else {
        // the polynomial form still carries the uncoupled factors (s + b_j)
        for (std::size_t j = 0; j < r.kernel_weights.size(); ++j)
            if (r.kernel_weights[j] == cplx(0.0)) all.push_back({-r.kernel_rates[j], 1});
        out = detail::residues(r.numerator, r.kernel_denominator.leading(), detail::cluster_roots(all, kRootClusterRadius));
    }
    for (const auto& t : out.terms) {
        if (!std::isfinite(std::abs(t.X)) || !std::isfinite(std::abs(t.Y))) {
            throw NumericError("Laplace inversion produced non-finite residues");
        }
    }
    return out;
}

/// Single-Lorentzian solution exp(-Bt/2)[cos bt + (B/2b) sin bt] with
/// 2b = sqrt(4A - B^2). A in eV^2, B complex in eV, t in fs.
inline cplx c_e0_closed_form_single(double A, cplx Btilde, double t) {
    const cplx a = A / (kHbar * kHbar);
    const cplx bt = Btilde / kHbar;
    const cplx b = 0.5 * std::sqrt(4.0 * a - bt * bt);
    const cplx z = b * t;
    // sin(bt)/b written as t sinc(bt), finite at b = 0
    const cplx sinc = std::abs(z) < 1e-4 ? 1.0 - z * z / 6.0 : std::sin(z) / z;
    return std::exp(-0.5 * bt * t) * (std::cos(z) + 0.5 * bt * t * sinc);
}

}  // namespace nanoqed::dynamics
