#include "mexp/errors.hpp"
#include "mexp/tauberian.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include <gtest/gtest.h>

using namespace mexp;

namespace {

const CirParams kCir{0.4, 1.0, 1.0, 0.5, 1.0};

}  // namespace

TEST(Tauberian, ConstantsAtAlphaOne) {
    EXPECT_DOUBLE_EQ(tail_correction_constant(1.0), 2.25);
    // q = 3/2: -(3/2)(5/2)/4 + 5(9/4)/12 = -15/16 + 15/16.
    EXPECT_NEAR(c_alpha(1.0), 0.0, 1e-15);
    EXPECT_NEAR(c_alpha(0.0), -0.25 * 2.0 * 3.0 + 5.0 / 12.0 * 4.0, 1e-15);
}

TEST(Tauberian, OrderParsing) {
    EXPECT_EQ(parse_order("leading"), Order::leading);
    EXPECT_EQ(parse_order("refined"), Order::refined);
    EXPECT_EQ(to_string(Order::refined), "refined");
    EXPECT_THROW(parse_order("third"), std::invalid_argument);
}

TEST(Tauberian, CcdfExpansionConvergesToExactLaw) {
    const std::vector<double> xs{1e2, 1e3, 1e4, 1e5};
    const LegendreData data(LogMgf::cir(kCir), xs.front(), xs.back());
    const TailExpansion lead = ccdf_expansion(data, xs, Order::leading);
    const TailExpansion ref = ccdf_expansion(data, xs, Order::refined);
    EXPECT_DOUBLE_EQ(lead.alpha, 1.0);
    double prev = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double le = cir_exact_log_ccdf(kCir, xs[i]);
        const double el = std::fabs(std::expm1(lead.log_estimate[i] - le));
        const double er = std::fabs(std::expm1(ref.log_estimate[i] - le));
        EXPECT_LT(el, prev) << xs[i];
        EXPECT_LT(er, el) << xs[i];
        EXPECT_EQ(lead.reliable[i], lead.x2_pprime[i] >= 10.0);
        prev = el;
    }
    EXPECT_LT(prev, 1e-3);
}

TEST(Tauberian, TailIsDecreasingAndBelowMarkovBound) {
    std::vector<double> xs;
    for (double x = 5.0; x < 1e5; x *= 1.6) xs.push_back(x);
    const LegendreData data(LogMgf::cir(kCir), xs.front(), xs.back());
    const TailExpansion te = ccdf_expansion(data, xs, Order::refined);
    for (std::size_t i = 0; i < xs.size(); ++i) {
        EXPECT_LE(te.log_estimate[i], -te.lambda_star[i] + 1e-12);
        if (i > 0) {
            EXPECT_LT(te.log_estimate[i], te.log_estimate[i - 1]);
            EXPECT_GT(te.x2_pprime[i], te.x2_pprime[i - 1]);
        }
    }
}

TEST(WeightFunctions, ParseAndIndices) {
    EXPECT_DOUBLE_EQ(WeightFunction::parse("one").gamma, 0.0);
    EXPECT_DOUBLE_EQ(WeightFunction::parse("identity").gamma, 1.0);
    const WeightFunction w = WeightFunction::parse("power:0.5");
    EXPECT_DOUBLE_EQ(w.gamma, 0.5);
    EXPECT_DOUBLE_EQ(w.f(4.0), 2.0);
    EXPECT_DOUBLE_EQ(w.df(4.0), 0.25);
    EXPECT_THROW(WeightFunction::parse("power:abc"), std::invalid_argument);
    EXPECT_THROW(WeightFunction::parse("cube"), std::invalid_argument);
}

TEST(LaplaceAsymptotics, QuadratureApproachesAsymptoticForm) {
    const LegendreData data(LogMgf::cir(kCir), 1e3, 1e8);
    double prev = 1.0;
    for (double x : {1e4, 1e6, 1e8}) {
        const ChiKernel kernel(data, x);
        EXPECT_NEAR(kernel(1.0), 0.0, 1e-9);
        EXPECT_LT(kernel(1.01), 0.0);
        EXPECT_LT(kernel(0.99), 0.0);
        const LaplaceResult r = laplace_integral(WeightFunction::identity(), kernel, Order::refined);
        const double el = std::fabs(r.quadrature / r.leading - 1.0);
        const double er = std::fabs(r.quadrature / r.refined - 1.0);
        EXPECT_LT(el, prev);
        EXPECT_LT(er, el);
        EXPECT_LT(r.tail_estimate, 1e-6 * r.quadrature);
        prev = el;
    }
}

TEST(TiltRatio, ExactForOneAndIdentity) {
    const LogMgf src = LogMgf::cir(kCir);
    const LegendreData data(src, 1.0, 1e6);
    for (double x : {1.0, 10.0, 1e3, 1e5}) {
        EXPECT_DOUBLE_EQ(tilt_ratio(WeightFunction::one(), data, x, Order::leading), 1.0);
        EXPECT_DOUBLE_EQ(tilt_ratio(WeightFunction::one(), data, x, Order::refined), 1.0);
        // E[X e^{pX}] / E[e^{pX}] = Lambda'(p) = k x^2 + A x at p = mu* - 1/x.
        const CirLogMgf L(kCir);
        const double want = L.k() * x * x + L.A() * x;
        EXPECT_NEAR(tilt_ratio(WeightFunction::identity(), data, x, Order::refined) / want, 1.0, 1e-12);
    }
    EXPECT_THROW(tilt_ratio(WeightFunction::one(), data, 0.5 / src.mu_star, Order::leading), DomainError);
}
