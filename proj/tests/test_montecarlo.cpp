#include "mexp/errors.hpp"
#include "mexp/montecarlo.hpp"

#include <cmath>
#include <cstdlib>
#include <numeric>
#include <set>
#include <stdexcept>

#include <gtest/gtest.h>

using namespace mexp;

namespace {

const CirParams kCir{0.4, 1.0, 1.0, 0.5, 1.0};

SimConfig small_config(std::size_t paths, int steps, std::uint64_t seed) {
    SimConfig c;
    c.n_paths = paths;
    c.n_steps = steps;
    c.horizon = 1.0;
    c.seed = seed;
    return c;
}

}  // namespace

TEST(Schemes, ParseRoundTrip) {
    for (Scheme s : {Scheme::euler_full_truncation, Scheme::euler_reflection}) EXPECT_EQ(parse_scheme(to_string(s)), s);
    EXPECT_THROW(parse_scheme("milstein"), DomainError);
}

TEST(Seeds, DistinctPerPathAndStable) {
    std::set<std::uint64_t> seen;
    for (std::uint64_t i = 0; i < 10000; ++i) seen.insert(path_seed(42, i));
    EXPECT_EQ(seen.size(), 10000u);
    EXPECT_EQ(path_seed(42, 7), path_seed(42, 7));
    EXPECT_NE(path_seed(42, 7), path_seed(43, 7));
}

TEST(PairwiseSum, MatchesLongDoubleAccumulation) {
    std::vector<double> v;
    for (int i = 0; i < 100001; ++i) v.push_back(1.0 / (1.0 + i) + (i % 3 == 0 ? 1e8 : -1e8 / 2.0));
    long double ref = 0.0L;
    for (double x : v) ref += x;
    EXPECT_NEAR(pairwise_sum(v.data(), v.size()), static_cast<double>(ref), 1e-6);
    EXPECT_EQ(pairwise_sum(v.data(), 0), 0.0);
}

TEST(Simulation, DeterministicAndThreadInvariant) {
    SimConfig c = small_config(5000, 50, 11);
    c.threads = 1;
    const SimResult a = simulate(kCir, c);
    c.threads = 4;
    const SimResult b = simulate(kCir, c);
    EXPECT_EQ(a.samples, b.samples);
    c.seed = 12;
    EXPECT_NE(simulate(kCir, c).samples, a.samples);
}

TEST(Simulation, CirMeanWithinStatisticalError) {
    const SimConfig c = small_config(40000, 200, 5);
    const SimResult r = simulate(kCir, c);
    ASSERT_EQ(r.samples.size(), 40000u);
    EXPECT_EQ(r.flagged, 0u);
    const double n = static_cast<double>(r.samples.size());
    const double mean = pairwise_sum(r.samples.data(), r.samples.size()) / n;
    double ss = 0.0;
    for (double x : r.samples) ss += (x - mean) * (x - mean);
    const double se = std::sqrt(ss / (n - 1.0) / n);
    EXPECT_LT(std::fabs(mean - cir_mean(kCir)), 4.0 * se);
    for (double x : r.samples) EXPECT_GE(x, 0.0);
}

TEST(Simulation, ReflectionSchemeStaysNonnegative) {
    SimConfig c = small_config(2000, 20, 3);
    c.scheme = Scheme::euler_reflection;
    CirParams p = kCir;
    p.a = 0.0;
    for (double x : simulate(p, c).samples) EXPECT_GE(x, 0.0);
}

TEST(Simulation, ConfigValidation) {
    SimConfig c = small_config(0, 10, 1);
    EXPECT_THROW(c.validate(), DomainError);
    c = small_config(10, 0, 1);
    EXPECT_THROW(c.validate(), DomainError);
}

TEST(EmpiricalMgf, OriginAndConstantSamples) {
    const std::vector<double> s{0.3, 1.2, 2.0, 0.1};
    const MgfEstimate z = empirical_log_mgf(s, 0.0);
    EXPECT_DOUBLE_EQ(z.value, 0.0);
    EXPECT_DOUBLE_EQ(z.std_error, 0.0);
    const std::vector<double> c(1000, 1.5);
    const MgfEstimate e = empirical_log_mgf(c, 2.0);
    EXPECT_NEAR(e.value, 3.0, 1e-14);
    EXPECT_NEAR(e.std_error, 0.0, 1e-14);
    EXPECT_NEAR(e.effective_sample_size, 1000.0, 1e-9);
    EXPECT_FALSE(e.unstable);
}

TEST(EmpiricalMgf, LogSumExpAgainstDirectMean) {
    const std::vector<double> s{0.3, 1.2, 2.0, 0.1, 5.0};
    double m = 0.0;
    for (double x : s) m += std::exp(0.7 * x);
    EXPECT_NEAR(empirical_log_mgf(s, 0.7).value, std::log(m / 5.0), 1e-14);
    // Huge exponents stay finite.
    EXPECT_TRUE(std::isfinite(empirical_log_mgf(s, 300.0).value));
    // One dominant sample among many: effective sample size near 1, flagged unstable.
    std::vector<double> many(1000, 0.1);
    many[17] = 5.0;
    const MgfEstimate d = empirical_log_mgf(many, 300.0);
    EXPECT_TRUE(d.unstable);
    EXPECT_NEAR(d.effective_sample_size, 1.0, 1e-9);
}

TEST(EmpiricalCcdf, WilsonInterval) {
    std::vector<double> s(100, 0.0);
    for (int i = 0; i < 30; ++i) s[i] = 2.0;
    const CcdfEstimate e = empirical_ccdf(s, 1.0);
    EXPECT_EQ(e.count, 30u);
    EXPECT_DOUBLE_EQ(e.value, 0.3);
    const double z = 1.96, n = 100.0, p = 0.3;
    const double centre = (p + z * z / (2 * n)) / (1 + z * z / n);
    const double half = z / (1 + z * z / n) * std::sqrt(p * (1 - p) / n + z * z / (4 * n * n));
    EXPECT_NEAR(e.lower, centre - half, 1e-12);
    EXPECT_NEAR(e.upper, centre + half, 1e-12);
    EXPECT_NEAR(e.std_error, std::sqrt(0.3 * 0.7 / 100.0), 1e-12);
    const CcdfEstimate none = empirical_ccdf(s, 10.0);
    EXPECT_EQ(none.count, 0u);
    EXPECT_DOUBLE_EQ(none.lower, 0.0);
    EXPECT_GT(none.upper, 0.0);
}

TEST(Squeeze, PowerDriftConstants) {
    const SdeSpec target = SdeSpec::power_perturbed(1.0, 1.0, 1.0 / 3.0);
    const SqueezeSpec s = build_squeeze(target, 0.5, 1.0, 100.0);
    EXPECT_NEAR(s.m, 0.0, 1e-12);
    EXPECT_NEAR(s.c, 2.0 / (3.0 * std::sqrt(3.0)), 1e-4);
    EXPECT_EQ(s.monotone_class, MonotoneClass::decreasing);
    const double Z = std::pow(100.0 * std::log(100.0), 1.5);
    EXPECT_NEAR(s.Z / Z, 1.0, 1e-12);
    // Upper drift a + (-kappa) y dominates the target drift everywhere.
    for (double y = 1e-6; y < 1e8; y *= 3.0) {
        const double up = s.upper_cir.a - s.upper_cir.b * y;
        const double lo = s.lower_cir.a - s.lower_cir.b * y;
        EXPECT_GE(up, target.drift(y) - 1e-9 * std::fabs(target.drift(y)));
        EXPECT_LE(lo, target.drift(y) + 1e-9 * std::fabs(target.drift(y)));
    }
}

TEST(Squeeze, AffineTargetOrdering) {
    const SdeSpec target = SdeSpec::affine(0.4, 1.0);
    const SqueezeSpec s = build_squeeze(target, 0.5, 1.0, 50.0);
    EXPECT_DOUBLE_EQ(s.lower_cir.a, 0.0);
    EXPECT_DOUBLE_EQ(s.lower_cir.b, 1.0);
    EXPECT_NEAR(s.upper_cir.a, 0.4, 1e-12);
    EXPECT_NEAR(s.upper_cir.b, 1.0 - 0.4 / s.Z, 1e-12);
    const SqueezeReport r = squeeze_check(s, small_config(4000, 50, 9), {0.5, 1.0, 2.0});
    // Euler steps may cross pathwise; the distributional ordering must still hold.
    EXPECT_LT(r.pathwise_violations, r.paths / 10);
    EXPECT_TRUE(r.ordering_holds);
}

TEST(Squeeze, CoupledOrderingForPowerDrift) {
    const SdeSpec target = SdeSpec::power_perturbed(1.0, 1.0, 1.0 / 3.0);
    const SqueezeSpec s = build_squeeze(target, 0.5, 1.0, 100.0);
    const SqueezeReport r = squeeze_check(s, small_config(4000, 100, 21), {});
    EXPECT_FALSE(r.points.empty());
    EXPECT_TRUE(r.ordering_holds);
    for (const auto& p : r.points) {
        EXPECT_LE(p.lower.value, p.target.value);
        EXPECT_LE(p.target.value, p.upper.value);
    }
}
