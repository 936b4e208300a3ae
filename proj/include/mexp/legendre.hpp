#pragma once

#include "mexp/models.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace mexp {

/// Envelope c1/(mu*-mu)^alpha1 <= Lambda(mu) <= c2/(mu*-mu)^alpha2.
struct Envelope {
    double alpha1 = 1.0;
    double alpha2 = 1.0;
    double c1 = 0.0;
    double c2 = 0.0;

    /// c~2 = (c2 alpha2)^{1/(1+alpha2)} (1+alpha2)/alpha2.
    double c2_tilde() const;
    /// alpha2 (1 + 1/(1+alpha2)) < 2 alpha1.
    bool admissible() const;
};

/// A log-MGF with critical moment mu*, parametrized by the gap g = mu* - mu.
///
/// d1 and d2 are the derivatives with respect to mu, evaluated at mu = mu* - g.
struct LogMgf {
    double mu_star = 0.0;
    std::function<double(double)> value_gap;
    std::function<double(double)> d1_gap;
    std::function<double(double)> d2_gap;
    std::optional<Envelope> envelope;
    /// Regular-variation index of y -> Lambda(mu* - 1/y), when known analytically.
    std::optional<double> alpha;
    /// Set when Lambda(g) = k (mu* - g) / g exactly; enables the closed-form conjugate.
    std::optional<double> affine_k;
    /// Smallest admissible gap (sampled sources only).
    double gap_floor = 0.0;
    /// Largest admissible gap; 0 means mu* (the whole half-line mu >= 0).
    double gap_ceiling = 0.0;

    double top_gap() const { return gap_ceiling > 0.0 ? gap_ceiling : mu_star; }

    double eval(double mu) const { return value_gap(mu_star - mu); }

    static LogMgf cir(const CirParams& p);
    /// Lambda(p) = p^2/2 with an artificial critical moment far away.
    static LogMgf gaussian(double cap);
    /// Cubic B-spline through samples Lambda(g_i) on g_i = exp(u0 + i du).
    static LogMgf from_samples(double mu_star, double u0, double du, std::vector<double> values);
};

/// Conjugate data at one tilt level x.
struct ConjugatePoint {
    double x = 0.0;
    double gap = 0.0;
    double p_star = 0.0;
    double p_star_prime = 0.0;
    double lambda_star = 0.0;
};

/// Fenchel-Legendre machinery for a LogMgf; immutable and thread-safe.
class LegendreData {
public:
    LegendreData(LogMgf source, double x_lo, double x_hi);

    const LogMgf& source() const { return source_; }
    double x_min() const { return x_min_; }
    double x_lo() const { return x_lo_; }
    double x_hi() const { return x_hi_; }

    /// Optimal gap g*(x) = mu* - p*(x), solving Lambda'(mu* - g) = x.
    double gap(double x) const;
    double p_star(double x) const { return source_.mu_star - gap(x); }
    double p_star_prime(double x) const;
    double lambda_star(double x) const;
    ConjugatePoint at(double x) const;

private:
    LogMgf source_;
    double x_min_, x_lo_, x_hi_;
};

LegendreData build_legendre(const LogMgf& source, double x_lo, double x_hi);

/// c1 = min Lambda(g) g^alpha1 and c2 = max Lambda(g) g^alpha2 over a geometric gap grid.
Envelope fit_envelope(const LogMgf& source, double alpha1, double alpha2, double g_lo, double g_hi,
                      int n = 400);

/// Log-log slope of y -> Lambda(mu* - 1/y) over [y_max/100, y_max].
double fit_alpha(const LogMgf& source, double y_max);

struct EnvelopeReport {
    std::vector<double> x;
    std::vector<double> lower_slack;  ///< bound / gap, must be >= 1
    std::vector<double> upper_slack;  ///< gap / bound, must be >= 1
    std::vector<double> x2_pprime;
    double m1 = 0.0;
    double m2 = 0.0;
    double slope_min = 0.0;
    double slope_max = 0.0;
    double worst_slack = 0.0;
    bool pstar_bounds_hold = false;
    bool pprime_bracket_holds = false;
    bool x2_pprime_increasing = false;
    bool pass = false;
};

EnvelopeReport check_pstar_envelope(const LegendreData& data, const std::vector<double>& xs);

}  // namespace mexp
