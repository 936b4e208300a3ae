#include "mexp/errors.hpp"
#include "mexp/fixedpoint.hpp"

#include <cmath>

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <gtest/gtest.h>

using namespace mexp;

namespace {

// The defining integral of omega_tau, evaluated directly on [1, tau].
double omega_oracle(double beta, double c, double b, double sigma, double x0, double tau) {
    boost::math::quadrature::tanh_sinh<double> ts;
    // The complement argument keeps ln s accurate next to the singular endpoint s = 1.
    auto f = [&](double s, double sc) {
        const double ls = s < 0.5 * (1.0 + tau) ? std::log1p(-sc) : std::log(s);
        return std::pow(-std::expm1(-ls / beta), 2.0 * beta - 1.0);
    };
    const double I = ts.integrate(f, 1.0, tau);
    return c * std::pow(x0, beta - 1.0) * std::pow(2.0 * b / (sigma * sigma), 1.0 - 2.0 * beta) / (b * beta) * I;
}

}  // namespace

TEST(FixedPoint, AffineDriftReproducesCirClosedForm) {
    const CirParams cir{0.4, 1.0, 1.0, 0.5, 1.0};
    FixedPointConfig cfg;
    cfg.T = 1.0;
    cfg.X_max = 1e4;
    cfg.nx = 80;
    const GammaSolution s = solve_gamma(SdeSpec::affine(cir.a, cir.b), cir.x0, cfg);
    ASSERT_TRUE(s.converged);
    const std::size_t last = s.grid.nt() - 1;
    const double ms = cir.mu_star();
    for (std::size_t j = 0; j < s.grid.nx(); j += 7) {
        const double x = s.grid.x_nodes[j];
        const double exact = cir_log_mgf(cir, ms - 1.0 / (s.grid.xi[last] * (x + ms)));
        EXPECT_NEAR(s.gamma_value(last, j) / exact, 1.0, 1e-6) << x;
        EXPECT_NEAR(s.gamma_at(x) / exact, 1.0, 1e-6) << x;
    }
}

TEST(FixedPoint, InitialRowIsLinearInX) {
    FixedPointConfig cfg;
    cfg.X_max = 1e4;
    cfg.nx = 60;
    const GammaSolution s = solve_gamma(SdeSpec::power_perturbed(1.0, 1.0, 1.0 / 3.0), 0.5, cfg);
    ASSERT_DOUBLE_EQ(s.grid.t_nodes.front(), 0.0);
    for (std::size_t j = 0; j < s.grid.nx(); ++j) {
        EXPECT_NEAR(s.grid.at(0, j), 0.0, 1e-14);
        EXPECT_NEAR(s.gamma_value(0, j), (2.0 + s.grid.x_nodes[j]) * 0.5, 1e-12 * s.grid.x_nodes[j]);
    }
}

TEST(FixedPoint, PicardResidualsDecreaseAndContract) {
    FixedPointConfig cfg;
    cfg.T = 2.0;
    cfg.X_max = 1e5;
    cfg.nx = 100;
    const GammaSolution s = solve_gamma(SdeSpec::power_perturbed(1.0, 1.0, 1.0 / 3.0), 0.5, cfg);
    ASSERT_TRUE(s.converged);
    ASSERT_GE(s.residual_history.size(), 3u);
    EXPECT_LT(s.residual_history.back(), s.residual_history.front());
    EXPECT_LE(s.contraction, cfg.contraction_limit);
    // Positive perturbation raises the log-MGF above the drift-free level.
    for (std::size_t j = 0; j < s.grid.nx(); j += 10) EXPECT_GT(s.R_at(s.grid.x_nodes[j]), 0.0);
}

TEST(FixedPoint, TimeStepIndependenceOfDeterministicRun) {
    FixedPointConfig cfg;
    cfg.X_max = 1e4;
    cfg.nx = 60;
    const auto spec = SdeSpec::power_perturbed(1.0, 1.0, 1.0 / 3.0);
    const GammaSolution a = solve_gamma(spec, 0.5, cfg);
    const GammaSolution b = solve_gamma(spec, 0.5, cfg);
    EXPECT_EQ(a.grid.values, b.grid.values);
}

TEST(DriftExpectation, ConstantAndLeadingOrder) {
    auto constant = [](double) { return 0.7; };
    EXPECT_DOUBLE_EQ(btilde_moments(constant, 0.0, 5.0, 2.0, Order::leading), 0.7);
    EXPECT_NEAR(btilde_moments(constant, 0.0, 5.0, 2.0, Order::refined), 0.7, 1e-14);
    auto cube_root = [](double y) { return std::cbrt(y); };
    EXPECT_NEAR(btilde_moments(cube_root, 1.0 / 3.0, 27.0, 0.0, Order::leading), 3.0, 1e-12);
    // Delta method: f(m) + f''(m) v / 2 with f'' = -(2/9) m^{-5/3}.
    const double m = 8.0, v = 4.0;
    const double want = 2.0 - (2.0 / 9.0) * std::pow(m, -5.0 / 3.0) * v / 2.0;
    EXPECT_NEAR(btilde_moments(cube_root, 1.0 / 3.0, m, v, Order::refined), want, 1e-10);
}

TEST(PowerDriftOmega, MatchesDirectQuadrature) {
    for (double beta : {0.25, 1.0 / 3.0, 0.5, 0.7}) {
        for (double tau : {1.5, 3.0, 20.0}) {
            const double got = power_drift_omega(beta, 1.3, 0.8, 1.1, 0.6, tau);
            const double want = omega_oracle(beta, 1.3, 0.8, 1.1, 0.6, tau);
            EXPECT_NEAR(got / want, 1.0, 1e-9) << beta << " " << tau;
        }
    }
}

TEST(PowerSingularIntegral, ElementaryCases) {
    // e = 0: the integrand is 1.
    EXPECT_NEAR(power_singular_integral(2.0, 0.0, 5.0), 4.0, 1e-12);
    // kappa = 1, e = 1: int (1 - 1/s) ds = tau - 1 - ln tau.
    EXPECT_NEAR(power_singular_integral(1.0, 1.0, 7.0), 6.0 - std::log(7.0), 1e-12);
    // kappa = 2, e = -1/2: int s / sqrt(s^2 - 1) ds = sqrt(tau^2 - 1).
    EXPECT_NEAR(power_singular_integral(2.0, -0.5, 3.0), std::sqrt(8.0), 1e-11);
    EXPECT_NEAR(power_singular_integral(2.0, -0.5, 1e3), std::sqrt(1e6 - 1.0), 1e-8);
    EXPECT_THROW(power_singular_integral(2.0, -1.0, 3.0), DomainError);
}

TEST(PowerDriftOmega, MonotoneInTauAndLinearInC) {
    EXPECT_DOUBLE_EQ(power_drift_omega(1.0 / 3.0, 1.0, 1.0, 1.0, 0.5, 1.0), 0.0);
    double prev = 0.0;
    for (double tau = 1.1; tau < 50.0; tau *= 1.5) {
        const double w = power_drift_omega(1.0 / 3.0, 1.0, 1.0, 1.0, 0.5, tau);
        EXPECT_GT(w, prev);
        EXPECT_NEAR(power_drift_omega(1.0 / 3.0, 2.5, 1.0, 1.0, 0.5, tau), 2.5 * w, 1e-12 * w);
        prev = w;
    }
    EXPECT_THROW(power_drift_omega(1.0 / 3.0, 1.0, 1.0, 1.0, 0.5, 0.5), DomainError);
    EXPECT_THROW(power_drift_omega(1.2, 1.0, 1.0, 1.0, 0.5, 2.0), DomainError);
}

TEST(PowerDriftCoefficient, Branches) {
    const double w = power_drift_omega(0.25, 1.0, 1.0, 1.0, 0.5, 3.0);
    EXPECT_DOUBLE_EQ(power_drift_coefficient(0.25, 1.0, 1.0, 1.0, 0.5, 3.0), w);
    const double w5 = power_drift_omega(0.5, 1.0, 1.0, 1.0, 0.5, 3.0);
    EXPECT_NEAR(power_drift_coefficient(0.5, 1.0, 1.0, 1.0, 0.5, 3.0), w5 + 0.25 * w5 * w5, 1e-12);
    // beta > 1/2: (g^beta (1-beta))^{1/(1-beta)} w^{1/(1-beta)} with g = beta/(1-beta).
    const double beta = 0.6, w6 = power_drift_omega(beta, 1.0, 1.0, 1.0, 0.5, 3.0);
    const double g = 1.5;
    EXPECT_NEAR(power_drift_coefficient(beta, 1.0, 1.0, 1.0, 0.5, 3.0),
                std::pow(std::pow(g, beta) * 0.4 * w6, 2.5), 1e-10);
}

TEST(BanachNorm, ZeroGridHasZeroNorm) {
    RGrid g;
    g.t_nodes = {0.0, 1.0};
    for (int j = 0; j < 20; ++j) g.x_nodes.push_back(std::pow(2.0, j));
    g.xi = {1.0, 1.0};
    g.values.assign(40, 0.0);
    EXPECT_DOUBLE_EQ(banach_norm(g, 2), 0.0);
}
