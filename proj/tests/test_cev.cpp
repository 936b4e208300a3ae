#include "mexp/cev.hpp"
#include "mexp/errors.hpp"

#include <cmath>

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <gtest/gtest.h>

using namespace mexp;

namespace {

double to_double(const Rational& r) {
    return static_cast<double>(r.numerator()) / static_cast<double>(r.denominator());
}

// Direct quadrature of int_1^tau (1 - s^{-kappa})^{(lambda-2)/lambda} ds with kappa = lambda/(lambda-1).
double omega_oracle(const CevParams& p, double tau) {
    const double lam = p.lambda();
    const double kappa = lam / (lam - 1.0), e = (lam - 2.0) / lam;
    boost::math::quadrature::tanh_sinh<double> ts;
    auto f = [&](double s, double sc) {
        const double ls = s < 0.5 * (1.0 + tau) ? std::log1p(-sc) : std::log(s);
        return std::pow(-std::expm1(-kappa * ls), e);
    };
    const double I = ts.integrate(f, 1.0, tau);
    return p.a * lam / (p.b * (lam - 1.0) * p.v0) * std::pow(2.0 * p.b / (p.sigma * p.sigma * lam), (2.0 - lam) / lam) *
           I;
}

}  // namespace

TEST(CevParamsTest, DerivedQuantities) {
    const CevParams p;
    EXPECT_DOUBLE_EQ(p.lambda(), 0.5);
    EXPECT_DOUBLE_EQ(p.y_scale(), 0.0625);
    EXPECT_NEAR(p.y0(), std::sqrt(0.5) / 0.0625, 1e-14);
    // V^lambda = (sigma lambda)^2 Y with Y a unit square-root process of rate b lambda.
    EXPECT_NEAR(p.mu_star(1.0), critical_moment(0.5, 1.0, 1.0) / 0.0625, 1e-12);
    CevParams bad = p;
    bad.p = 1.0;
    EXPECT_THROW(bad.validate(), DomainError);
    bad = p;
    bad.v0 = 0.0;
    EXPECT_THROW(bad.validate(), DomainError);
}

TEST(NuSeries, FloatingPointMatchesExactRationals) {
    for (auto [num, den] : {std::pair<long, long>{1, 2}, {4, 3}, {3, 2}, {5, 3}}) {
        const auto exact = nu_coefficients_exact(num, den, 10);
        const NuSeries fl = nu_coefficients(static_cast<double>(num) / den, 10);
        ASSERT_EQ(exact.size(), 10u);
        for (int i = 0; i < 10; ++i) {
            const double e = to_double(exact[i]);
            EXPECT_NEAR(fl.nu[i], e, 1e-13 * std::max(1.0, std::fabs(e))) << num << "/" << den << " i=" << i;
        }
    }
}

TEST(NuSeries, KnownValues) {
    EXPECT_EQ(nu_coefficients_exact(3, 2, 2)[1], Rational(2, 81));
    EXPECT_EQ(nu_coefficients_exact(4, 3, 2)[1], Rational(0));
    const NuSeries unit = nu_coefficients(1.0, 5);
    for (double v : unit.nu) EXPECT_EQ(v, 0.0);
}

TEST(NuSeries, Limits) {
    EXPECT_THROW(nu_coefficients(1.5, 31), ResourceError);
    EXPECT_NO_THROW(nu_coefficients(1.5, 30));
    EXPECT_THROW(nu_coefficients_exact(3, 2, 11), ResourceError);
}

TEST(Omega, MatchesDirectQuadrature) {
    CevParams p;
    p.p = 0.25;  // lambda = 3/2
    for (double tau : {1.2, 2.0, 5.0, 40.0}) EXPECT_NEAR(omega(p, tau) / omega_oracle(p, tau), 1.0, 1e-9) << tau;
    p.p = 0.4;  // lambda = 6/5
    for (double tau : {3.0, 20.0}) EXPECT_NEAR(omega(p, tau) / omega_oracle(p, tau), 1.0, 1e-9) << tau;
}

TEST(Omega, NondecreasingInTauAndLinearInA) {
    CevParams p;
    p.p = 0.25;
    EXPECT_DOUBLE_EQ(omega(p, 1.0), 0.0);
    double prev = 0.0;
    for (double tau = 1.05; tau < 30.0; tau *= 1.4) {
        const double w = omega(p, tau);
        EXPECT_GE(w, prev);
        CevParams q = p;
        q.a = 3.0 * p.a;
        EXPECT_NEAR(omega(q, tau), 3.0 * w, 1e-12 * w);
        prev = w;
    }
    p.a = 0.0;
    EXPECT_DOUBLE_EQ(omega(p, 4.0), 0.0);
}

TEST(Omega, DomainErrors) {
    CevParams p;  // lambda = 1/2
    EXPECT_THROW(omega(p, 2.0), DomainError);
    p.p = 0.5;  // lambda = 1
    EXPECT_THROW(omega(p, 2.0), DomainError);
    p.p = 0.25;
    EXPECT_THROW(omega(p, 0.5), DomainError);
}

TEST(DeltaHatTest, ReducesToCirWhenDriftLevelVanishes) {
    // With a = 0, Y = V^lambda/(sigma lambda)^2 is square-root with constant drift (lambda-1)/(2 lambda).
    CevParams p;
    p.a = 0.0;
    p.p = 0.25;
    const double lam = p.lambda(), t = 1.0;
    const CirParams y{(lam - 1.0) / (2.0 * lam), p.b * lam, 1.0, p.y0(), t};
    const double ms = p.mu_star(t);
    for (double x : {1.0, 10.0, 100.0}) {
        const double mu_y = (ms - 1.0 / x) * p.y_scale();
        EXPECT_NEAR(cev_log_mgf_asym(p, t, x).value / cir_log_mgf(y, mu_y), 1.0, 1e-12) << x;
    }
}

TEST(DeltaHatTest, DomainAndMetadata) {
    const CevParams p;
    const double ms = p.mu_star(1.0);
    EXPECT_THROW(cev_log_mgf_asym(p, 1.0, 0.5 / ms), DomainError);
    const DeltaHat d = cev_log_mgf_asym(p, 1.0, 10.0);
    EXPECT_TRUE(std::isfinite(d.value));
    EXPECT_TRUE(std::isnan(d.validity_threshold));
    CevParams q = p;
    q.p = 0.5;
    EXPECT_THROW(cev_log_mgf_asym(q, 1.0, 10.0), DomainError);
}

TEST(DeltaHatTest, LogMgfWrapperIsConsistentAndConvex) {
    const CevParams p;
    const LogMgf L = cev_log_mgf_hat(p, 1.0);
    const double ms = p.mu_star(1.0);
    EXPECT_DOUBLE_EQ(L.mu_star, ms);
    for (double x : {2.0, 10.0, 100.0}) {
        const double g = 1.0 / x;
        EXPECT_NEAR(L.value_gap(g), cev_log_mgf_asym(p, 1.0, x).value, 1e-12 * std::fabs(L.value_gap(g)));
        const double h = 1e-5 * g;
        EXPECT_NEAR(-(L.value_gap(g + h) - L.value_gap(g - h)) / (2.0 * h) / L.d1_gap(g), 1.0, 1e-6);
        EXPECT_GT(L.d2_gap(g), 0.0);
    }
}

TEST(CevTailTest, LevelsAndMonotonicity) {
    const CevParams p;
    const std::vector<double> xs{0.6, 0.8, 1.0, 1.5, 2.0};
    const CevTail tail = cev_ccdf(p, 1.0, xs, Order::refined);
    ASSERT_EQ(tail.v_level.size(), xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        EXPECT_NEAR(tail.v_level[i], std::pow(xs[i], 1.0 / p.lambda()), 1e-12);
        EXPECT_LE(tail.expansion.log_estimate[i], -tail.expansion.lambda_star[i] + 1e-12);
        if (i > 0) EXPECT_LT(tail.expansion.log_estimate[i], tail.expansion.log_estimate[i - 1]);
    }
}

TEST(SquareRootSpec, PerturbationShape) {
    const CevParams p;
    const SdeSpec s = cev_square_root_spec(p);
    const double lam = p.lambda();
    EXPECT_DOUBLE_EQ(s.b_limit, p.b * lam);
    EXPECT_DOUBLE_EQ(s.beta, (lam - 1.0) / lam);
    for (double y : {0.5, 2.0, 30.0}) {
        const double want = (lam - 1.0) / (2.0 * lam) +
                            p.a * lam * std::pow(p.sigma * lam, -2.0 / lam) * std::pow(y, (lam - 1.0) / lam);
        EXPECT_NEAR(s.bbar(y), want, 1e-12 * std::fabs(want));
        EXPECT_NEAR(s.drift(y), -p.b * lam * y + want, 1e-10);
    }
}
