#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "nanoqed/dynamics/laplace.hpp"
#include "nanoqed/dynamics/polynomial.hpp"
#include "nanoqed/fit/lorentzian.hpp"
#include "nanoqed/units.hpp"

using namespace nanoqed;
using namespace nanoqed::dynamics;

namespace {

fit::LorentzianSet single(double A, double B, double Omega) { return fit::LorentzianSet{{{A, B, Omega}}}; }

ExponentialSum excited(const fit::LorentzianSet& k, double omega_e) {
    return invert_laplace(build_laplace_rational(k, {}, omega_e, 1.0));
}

}  // namespace

TEST(Poly, ArithmeticAndEvaluation) {
    const Poly p({1.0, 2.0, 3.0});  // 1 + 2s + 3s^2
    EXPECT_EQ(p.degree(), 2);
    EXPECT_NEAR(std::abs(p(cplx(2.0, 0.0)) - 17.0), 0.0, 1e-14);
    const Poly q = p * Poly::linear(1.0);
    EXPECT_NEAR(std::abs(q(cplx(0.5, 1.0)) - p(cplx(0.5, 1.0)) * cplx(1.5, 1.0)), 0.0, 1e-13);
    const auto tay = p.taylor(cplx(1.0, 0.0), 3);  // p(1+u) = 6 + 8u + 3u^2
    EXPECT_NEAR(std::abs(tay[0] - 6.0), 0.0, 1e-14);
    EXPECT_NEAR(std::abs(tay[1] - 8.0), 0.0, 1e-14);
    EXPECT_NEAR(std::abs(tay[2] - 3.0), 0.0, 1e-14);
}

TEST(Poly, RootsOfKnownPolynomial) {
    const std::vector<cplx> truth{{-0.02, 0.3}, {-0.05, -1.2}, {-0.001, 0.0}, {-0.4, 0.05}, {-0.03, 0.7}};
    const auto roots = polynomial_roots(poly_from_roots(truth));
    ASSERT_EQ(roots.size(), truth.size());
    for (const auto& r : truth) {
        double best = 1e9;
        for (const auto& x : roots) best = std::min(best, std::abs(x - r));
        EXPECT_LT(best, 1e-12);
    }
}

TEST(LaplaceRational, SingleLorentzianTransfer) {
    const double A = 0.00299, B = 0.0325;
    const auto r = build_laplace_rational(single(A, B, 3.0), {}, 2.9, 1.0);
    const cplx bt = cplx(B, 0.1) / kHbar;
    const double a = A / (kHbar * kHbar);
    ASSERT_EQ(r.numerator.degree(), 1);
    ASSERT_EQ(r.kernel_denominator.degree(), 2);
    EXPECT_NEAR(std::abs(r.numerator.c[0] - bt), 0.0, 1e-14);
    EXPECT_NEAR(std::abs(r.numerator.c[1] - 1.0), 0.0, 1e-14);
    EXPECT_NEAR(std::abs(r.kernel_denominator.c[0] - a), 0.0, 1e-14);
    EXPECT_NEAR(std::abs(r.kernel_denominator.c[1] - bt), 0.0, 1e-14);
    EXPECT_NEAR(std::abs(r.kernel_denominator.c[2] - 1.0), 0.0, 1e-14);
}

TEST(LaplaceRational, ThreeTermsGiveQuartic) {
    const auto r = build_laplace_rational(fit::sphere_kernel_h2nm(), {}, 2.97, 1.0);
    EXPECT_EQ(r.kernel_denominator.degree(), 4);
    EXPECT_EQ(r.numerator.degree(), 3);
}

TEST(LaplaceRational, DriveTermsAddDoublePoles) {
    SourceSet drive{fit::LorentzianSet{{{0.1, 0.05, 2.97}, {0.05, 0.1, 3.0}}}, SourceKind::drive, 1.0};
    SourceSet photon{fit::LorentzianSet{{{0.1, 0.05, 2.9}}}, SourceKind::photon, 1.0};
    const auto r = build_laplace_rational(fit::sphere_kernel_h2nm(), {drive, photon}, 2.97, 0.0);
    EXPECT_EQ(r.denominator().degree(), 4 + 2 * 2 + 1);
    EXPECT_EQ(r.source_poles.size(), 3u);
    EXPECT_EQ(r.source_poles[0].second, 2);
    EXPECT_EQ(r.source_poles[2].second, 1);
}

TEST(LaplaceRational, EmptyKernelRejected) {
    EXPECT_THROW(build_laplace_rational(fit::LorentzianSet{}, {}, 2.97, 1.0), std::invalid_argument);
}

TEST(Invert, ZeroCouplingIsFreeEvolution) {
    const auto c = excited(single(0.0, 0.03, 2.97), 2.97);
    for (double t : {0.0, 10.0, 100.0, 300.0}) EXPECT_NEAR(std::abs(c(t) - 1.0), 0.0, 1e-12);
}

TEST(Invert, DegreeChecks) {
    EXPECT_THROW(invert_laplace(Poly({1.0, 1.0}), Poly({1.0, 1.0})), std::invalid_argument);
    EXPECT_THROW(invert_laplace(Poly({1.0}), Poly({1.0})), std::invalid_argument);
}

TEST(Invert, RepeatedRootGivesPolynomialInTime) {
    // 1/(s+1)^2 -> t e^{-t}; the two roots differ by 1e-12 and are merged
    const Poly P = poly_from_roots({cplx(-1.0, 0.0), cplx(-1.0 + 1e-12, 0.0)});
    const auto y = invert_laplace(P, Poly({1.0}));
    for (double t : {0.0, 0.5, 2.0, 5.0}) EXPECT_NEAR(std::abs(y(t) - t * std::exp(-t)), 0.0, 1e-9);
}

TEST(Invert, CoincidentKnownPolesUseMultiplicityFormula) {
    // (s+3)/(s+1)^3 -> e^{-t}(t + t^2), one root found numerically and a
    // known double pole at the same place
    LaplaceRational r;
    r.numerator = Poly({3.0, 1.0});
    r.kernel_denominator = Poly::linear(1.0);
    r.source_poles = {{cplx(-1.0, 0.0), 2}};
    const auto y = invert_laplace(r.denominator(), r.numerator);  // generic path, for contrast
    (void)y;
    const auto clusters = detail::cluster_roots({{cplx(-1.0), 1}, {cplx(-1.0), 2}}, kRootClusterRadius);
    ASSERT_EQ(clusters.size(), 1u);
    EXPECT_EQ(clusters[0].mult, 3);
    const auto y3 = detail::residues(r.numerator, 1.0, clusters);
    for (double t : {0.0, 0.5, 2.0, 5.0}) EXPECT_NEAR(std::abs(y3(t) - std::exp(-t) * (t + t * t)), 0.0, 1e-12);
}

TEST(Invert, SourcePoleOnKernelRateFallsBackToClusters) {
    // a photon source sharing its rate with a kernel root still inverts
    const auto k = fit::LorentzianSet{{{0.0, 0.03, 2.97}}};  // f(s) = s
    SourceSet s{fit::LorentzianSet{{{0.01, 1e-30, 2.97}}}, SourceKind::photon, 1.0};
    const auto r = build_laplace_rational(k, {s}, 2.97, 1.0);
    const auto y = invert_laplace(r);
    // Y = 1/s + c/s^2 -> 1 + c t with c = -i a / hbar
    const cplx c = cplx(0.0, -0.01 / kHbar);
    for (double t : {0.0, 1.0, 10.0}) EXPECT_NEAR(std::abs(y(t) - (1.0 + c * t)), 0.0, 1e-9);
}

TEST(Invert, MatchesClosedFormSingleLorentzian) {
    struct Case {
        double A, B, Omega, omega_e;
    };
    for (const auto& c : {Case{0.00299, 0.0325, 2.97, 2.97}, Case{0.00299, 0.0325, 2.97, 2.75},
                          Case{1e-5, 0.05, 3.0, 3.0}, Case{0.002, 0.01, 2.5, 2.6}}) {
        const auto y = excited(single(c.A, c.B, c.Omega), c.omega_e);
        const cplx Bt(c.B, c.Omega - c.omega_e);
        for (double t = 0.0; t <= 300.0; t += 3.7) {
            EXPECT_NEAR(std::abs(y(t) - c_e0_closed_form_single(c.A, Bt, t)), 0.0, 1e-10) << t;
        }
    }
}

TEST(ClosedForm, InitialValueAndCriticalDamping) {
    EXPECT_NEAR(std::abs(c_e0_closed_form_single(0.00299, cplx(0.0325, 0.0), 0.0) - 1.0), 0.0, 1e-15);
    const double B = 0.04;
    const double A = B * B / 4.0;
    for (double t : {0.0, 5.0, 50.0}) {
        const double bt = B / kHbar * t;
        EXPECT_NEAR(std::abs(c_e0_closed_form_single(A, cplx(B, 0.0), t) - std::exp(-bt / 2) * (1.0 + bt / 2)), 0.0,
                    1e-12);
    }
}

TEST(ClosedForm, ResonantSplittingAndLifetime) {
    const double A = 0.00299, B = 0.0325;
    EXPECT_NEAR(std::sqrt(4 * A - B * B), 0.1044, 0.001);
    EXPECT_NEAR(std::sqrt(4 * A - 2 * B * B), 0.0987, 0.001);
    // 1/B in ordinary frequency
    EXPECT_NEAR(1.0 / (B * kUnits.eV_to_THz_ordinary) * 1e3, 127.0, 1.0);
}

TEST(ClosedForm, OscillationFrequencyIsB) {
    // zero crossings of Re C_e0 are spaced by pi / b
    const double A = 0.00299, B = 0.0325;
    const double b = 0.5 * std::sqrt(4 * A - B * B) / kHbar;
    std::vector<double> zeros;
    double prev = 1.0;
    for (double t = 0.0; t < 400.0; t += 0.01) {
        const double v = c_e0_closed_form_single(A, cplx(B, 0.0), t).real();
        if (prev > 0 && v <= 0) zeros.push_back(t);
        if (prev < 0 && v >= 0) zeros.push_back(t);
        prev = v;
    }
    ASSERT_GE(zeros.size(), 3u);
    EXPECT_NEAR(zeros[2] - zeros[1], std::numbers::pi / b, 0.02);
}

TEST(Invert, WeakCouplingDecaysMonotonically) {
    const auto y = excited(single(1e-5, 0.05, 2.97), 2.97);
    double prev = 1.0;
    for (double t = 0.5; t < 300.0; t += 0.5) {
        const double p = std::abs(y(t));
        EXPECT_LT(p, prev);
        prev = p;
    }
}

TEST(Invert, DiscriminantDecidesZeroCrossings) {
    const double B = 0.04;
    for (double ratio : {0.5, 0.9, 1.1, 3.0}) {
        const double A = ratio * B * B / 4.0;
        const auto y = excited(single(A, B, 2.97), 2.97);
        bool crossing = false;
        for (double t = 0.0; t < 2000.0; t += 0.25) crossing = crossing || y(t).real() < 0.0;
        EXPECT_EQ(crossing, ratio > 1.0) << ratio;
    }
}

TEST(Invert, FactoredAndPolynomialResiduesAgree) {
    SourceSet ph{fit::LorentzianSet{{{0.02, 0.05, 2.95}, {-0.01, 0.08, 3.0}}}, SourceKind::photon, 1.0};
    SourceSet dr{fit::LorentzianSet{{{1e-3, 0.04, 2.97}}}, SourceKind::drive, 1.0};
    const auto r = build_laplace_rational(fit::sphere_kernel_h2nm(), {ph, dr}, 2.97, 0.5);
    const auto a = invert_laplace(r);
    const auto b = invert_laplace(r.denominator(), r.numerator);
    for (double t : {0.0, 3.0, 30.0, 150.0}) EXPECT_NEAR(std::abs(a(t) - b(t)), 0.0, 1e-8);
}

TEST(Invert, StableAndInitialValueForTabulatedKernels) {
    for (const auto& [k, we] : std::vector<std::pair<fit::LorentzianSet, double>>{
             {fit::sphere_kernel_h2nm(), 2.97}, {fit::sphere_kernel_h2nm(), 2.75},
             {fit::sphere_kernel_h10nm(), 2.97}, {fit::npom_kernel(), 1.52},
             {fit::npom_kernel(), 1.78}, {fit::npom_kernel(), 2.376}}) {
        const auto y = excited(k, we);
        EXPECT_GE(y.min_decay_rate(), -1e-9);
        EXPECT_NEAR(std::abs(y(0.0) - 1.0), 0.0, 1e-9) << we;
    }
}

TEST(Invert, RandomPositiveKernelsAreStable) {
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> ua(1e-4, 0.01), ub(0.005, 0.1), uo(2.0, 3.5);
    for (int trial = 0; trial < 30; ++trial) {
        fit::LorentzianSet k;
        const int n = 1 + trial % 6;
        for (int j = 0; j < n; ++j) k.terms.push_back({ua(rng), ub(rng), uo(rng)});
        const auto y = excited(k, uo(rng));
        EXPECT_GE(y.min_decay_rate(), -1e-9);
        EXPECT_NEAR(std::abs(y(0.0) - 1.0), 0.0, 1e-9);
        // |C_e0| <= 1 for a lossy reservoir
        for (double t = 0.0; t < 300.0; t += 7.0) EXPECT_LE(std::abs(y(t)), 1.0 + 1e-9);
    }
}
