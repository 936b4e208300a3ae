#include "mexp/errors.hpp"
#include "mexp/legendre.hpp"

#include <cmath>
#include <vector>

#include <gtest/gtest.h>

using namespace mexp;

namespace {

const CirParams kCir{0.4, 1.0, 1.0, 0.5, 1.0};

// Lambda'(mu* - g) = k/g^2 + A/g = x has the positive root of x g^2 - A g - k = 0.
double quadratic_gap(const CirLogMgf& L, double x) {
    return (L.A() + std::sqrt(L.A() * L.A() + 4.0 * L.k() * x)) / (2.0 * x);
}

}  // namespace

TEST(Legendre, CirGapMatchesQuadraticRoot) {
    const CirLogMgf L(kCir);
    const LegendreData data(LogMgf::cir(kCir), 1.0, 1e8);
    for (double x = 1.0; x <= 1e8; x *= 7.0) {
        EXPECT_NEAR(data.gap(x) / quadratic_gap(L, x), 1.0, 1e-11) << x;
    }
}

TEST(Legendre, FenchelIdentityAndSlope) {
    const LogMgf src = LogMgf::cir(kCir);
    const LegendreData data(src, 1.0, 1e7);
    for (double x = 2.0; x <= 1e6; x *= 5.0) {
        const ConjugatePoint c = data.at(x);
        // Lambda*(x) + Lambda(p*) = p* x.
        EXPECT_NEAR(c.lambda_star + src.value_gap(c.gap), c.p_star * x, 1e-12 * c.p_star * x);
        // d Lambda*/dx = p*.
        const double h = 1e-5 * x;
        const double slope = (data.lambda_star(x + h) - data.lambda_star(x - h)) / (2.0 * h);
        EXPECT_NEAR(slope / c.p_star, 1.0, 1e-6);
        // p*' = 1 / Lambda''.
        const double fd = (data.p_star(x + h) - data.p_star(x - h)) / (2.0 * h);
        EXPECT_NEAR(fd / c.p_star_prime, 1.0, 1e-5);
    }
}

TEST(Legendre, ConjugateIsConvexAndIncreasingProperty) {
    const LegendreData data(LogMgf::cir(kCir), 1.0, 1e6);
    double prev_p = -1.0;
    for (double x = 1.0; x <= 1e6; x *= 1.9) {
        const double p = data.p_star(x);
        EXPECT_GT(p, prev_p);
        EXPECT_LT(p, kCir.mu_star());
        EXPECT_GT(data.p_star_prime(x), 0.0);
        prev_p = p;
    }
}

TEST(Legendre, AffineClosedFormAgreesWithRootFinder) {
    CirParams c0 = kCir;
    c0.a = 0.0;
    const LogMgf closed = LogMgf::cir(c0);
    ASSERT_TRUE(closed.affine_k.has_value());
    LogMgf numeric = closed;
    numeric.affine_k.reset();
    const LegendreData dc(closed, 1.0, 1e7);
    const LegendreData dn(numeric, 1.0, 1e7);
    for (double x = 1.0; x <= 1e7; x *= 3.0) {
        EXPECT_NEAR(dc.lambda_star(x) / dn.lambda_star(x), 1.0, 1e-10) << x;
        EXPECT_NEAR(dc.gap(x) / dn.gap(x), 1.0, 1e-10) << x;
    }
}

TEST(Legendre, BelowSmallestLevelIsRangeError) {
    const LogMgf src = LogMgf::cir(kCir);
    const LegendreData data(src, 1.0, 10.0);
    EXPECT_GT(data.x_min(), 0.0);
    EXPECT_THROW(data.gap(0.5 * data.x_min()), RangeError);
    EXPECT_NO_THROW(data.gap(data.x_min()));
}

TEST(Legendre, SampledSourceReproducesCir) {
    const LogMgf cir = LogMgf::cir(kCir);
    const double ms = cir.mu_star;
    const double u0 = std::log(1e-7), u1 = std::log(ms);
    const int n = 600;
    const double du = (u1 - u0) / (n - 1);
    std::vector<double> v;
    for (int i = 0; i < n; ++i) v.push_back(cir.value_gap(std::exp(u0 + i * du)));
    const LogMgf spl = LogMgf::from_samples(ms, u0, du, v);
    for (double g : {1e-6, 1e-4, 1e-2, 0.5}) {
        EXPECT_NEAR(spl.value_gap(g) / cir.value_gap(g), 1.0, 1e-6) << g;
        EXPECT_NEAR(spl.d1_gap(g) / cir.d1_gap(g), 1.0, 1e-4) << g;
    }
    const LegendreData a(cir, 10.0, 1e5), b(spl, 10.0, 1e5);
    for (double x : {10.0, 1e3, 1e5}) EXPECT_NEAR(b.lambda_star(x) / a.lambda_star(x), 1.0, 1e-5);
}

TEST(Envelope, FittedConstantsBracketTheLogMgf) {
    const LogMgf src = LogMgf::cir(kCir);
    const Envelope e = fit_envelope(src, 1.0, 1.0, 1e-8, 0.5 * src.mu_star);
    EXPECT_GT(e.c1, 0.0);
    EXPECT_GE(e.c2, e.c1);
    EXPECT_TRUE(e.admissible());
    EXPECT_NEAR(e.c2_tilde(), std::sqrt(e.c2) * 2.0, 1e-12);
    for (double g = 1e-8; g < 0.5 * src.mu_star; g *= 3.0) {
        EXPECT_GE(src.value_gap(g) * g, e.c1 * (1.0 - 1e-12));
        EXPECT_LE(src.value_gap(g) * g, e.c2 * (1.0 + 1e-12));
    }
}

TEST(Envelope, AlphaFitAndPstarBounds) {
    const LogMgf src = LogMgf::cir(kCir);
    EXPECT_NEAR(fit_alpha(src, 1e8), 1.0, 1e-3);
    LogMgf with_env = src;
    with_env.envelope = fit_envelope(src, 1.0, 1.0, 1e-10, 0.5 * src.mu_star);
    const LegendreData data(with_env, 1e2, 1e6);
    const EnvelopeReport r = check_pstar_envelope(data, {1e2, 1e3, 1e4, 1e5, 1e6});
    EXPECT_TRUE(r.pstar_bounds_hold);
    EXPECT_TRUE(r.pprime_bracket_holds);
    EXPECT_TRUE(r.x2_pprime_increasing);
    EXPECT_GE(r.worst_slack, 1.0);
}
