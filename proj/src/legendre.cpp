#include "mexp/legendre.hpp"

#include "mexp/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <sstream>

#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>

namespace mexp {

namespace {

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

}  // namespace

double Envelope::c2_tilde() const {
    return std::pow(c2 * alpha2, 1.0 / (1.0 + alpha2)) * (1.0 + alpha2) / alpha2;
}

bool Envelope::admissible() const { return alpha2 * (1.0 + 1.0 / (1.0 + alpha2)) < 2.0 * alpha1; }

LogMgf LogMgf::cir(const CirParams& p) {
    auto f = std::make_shared<CirLogMgf>(p);
    LogMgf m;
    m.mu_star = f->mu_star();
    m.value_gap = [f](double g) { return f->value_gap(g); };
    m.d1_gap = [f](double g) { return f->d1_gap(g); };
    m.d2_gap = [f](double g) { return f->d2_gap(g); };
    m.alpha = 1.0;
    if (p.a == 0.0) m.affine_k = p.x0 * std::exp(-p.b * p.t) * f->mu_star();
    return m;
}

LogMgf LogMgf::gaussian(double cap) {
    LogMgf m;
    m.mu_star = cap;
    m.value_gap = [cap](double g) {
        const double p = cap - g;
        return 0.5 * p * p;
    };
    m.d1_gap = [cap](double g) { return cap - g; };
    m.d2_gap = [](double) { return 1.0; };
    return m;
}

LogMgf LogMgf::from_samples(double mu_star, double u0, double du, std::vector<double> values) {
    if (values.size() < 8) throw DomainError("need at least 8 samples of the log-MGF");
    if (!(du > 0.0)) throw DomainError("sample spacing must be positive");
    for (std::size_t i = 1; i + 1 < values.size(); ++i) {
        // Convexity in mu on the geometric gap grid: Lambda'' = (L_uu - L_u) / g^2 > 0.
        const double luu = (values[i + 1] - 2 * values[i] + values[i - 1]) / (du * du);
        const double lu = (values[i + 1] - values[i - 1]) / (2 * du);
        if (!(luu - lu > 0.0)) {
            throw DomainError("sampled log-MGF is not convex near gap " + fmt(std::exp(u0 + i * du)));
        }
    }
    const double u_hi = u0 + du * static_cast<double>(values.size() - 1);
    auto spline = std::make_shared<boost::math::interpolators::cardinal_cubic_b_spline<double>>(
        values.begin(), values.end(), u0, du);
    auto to_u = [u0, u_hi](double g) {
        const double u = std::log(g);
        if (u < u0 - 1e-12 || u > u_hi + 1e-12) {
            throw RangeError("gap " + fmt(g) + " outside sampled range", std::exp(u0), std::exp(u_hi));
        }
        return std::clamp(u, u0, u_hi);
    };
    LogMgf m;
    m.mu_star = mu_star;
    m.gap_floor = std::exp(u0);
    m.value_gap = [spline, to_u](double g) { return (*spline)(to_u(g)); };
    m.d1_gap = [spline, to_u](double g) { return -spline->prime(to_u(g)) / g; };
    m.d2_gap = [spline, to_u](double g) {
        const double u = to_u(g);
        return (spline->double_prime(u) - spline->prime(u)) / (g * g);
    };
    return m;
}

LegendreData::LegendreData(LogMgf source, double x_lo, double x_hi)
    : source_(std::move(source)), x_lo_(x_lo), x_hi_(x_hi) {
    if (!(source_.mu_star > 0.0)) throw DomainError("critical moment must be positive");
    x_min_ = source_.d1_gap(source_.top_gap());
    if (x_lo < x_min_) {
        throw RangeError("x range starts at " + fmt(x_lo) + ", below the smallest tilt level " + fmt(x_min_),
                         x_min_, std::numeric_limits<double>::infinity());
    }
    if (!(x_hi >= x_lo)) throw DomainError("empty x range");
}

double LegendreData::gap(double x) const {
    const double mu_star = source_.mu_star;
    if (x < x_min_) {
        throw RangeError("x = " + fmt(x) + " is below the smallest tilt level " + fmt(x_min_), x_min_,
                         std::numeric_limits<double>::infinity());
    }
    if (source_.affine_k) return std::sqrt(*source_.affine_k * mu_star / x);
    if (x == x_min_) return source_.top_gap();

    const double lx = std::log(x);
    auto F = [&](double u) { return std::log(source_.d1_gap(std::exp(u))) - lx; };

    double u_hi = std::log(source_.top_gap());
    double u_lo = u_hi - std::log(2.0);
    const double u_floor = source_.gap_floor > 0.0 ? std::log(source_.gap_floor) : -700.0;
    while (F(u_lo) < 0.0) {
        u_hi = u_lo;
        u_lo -= std::log(4.0);
        if (u_lo < u_floor) {
            u_lo = u_floor;
            if (F(u_lo) < 0.0) {
                throw RangeError("tilt level " + fmt(x) + " not bracketed by the source", x_min_,
                                 source_.d1_gap(std::exp(u_floor)));
            }
            break;
        }
    }
    double u = 0.5 * (u_lo + u_hi);
    for (int it = 0; it < 200; ++it) {
        const double g = std::exp(u);
        const double d1 = source_.d1_gap(g);
        const double f = std::log(d1) - lx;
        if (f > 0.0) {
            u_lo = u;
        } else {
            u_hi = u;
        }
        const double fp = -g * source_.d2_gap(g) / d1;
        double un = u - f / fp;
        if (!(un > u_lo && un < u_hi) || !std::isfinite(un)) un = 0.5 * (u_lo + u_hi);
        const double step = std::fabs(un - u);
        u = un;
        if (step <= 1e-13 || (u_hi - u_lo) <= 1e-14) return std::exp(u);
    }
    throw NumericError("conjugate root did not converge at x = " + fmt(x));
}

double LegendreData::p_star_prime(double x) const { return 1.0 / source_.d2_gap(gap(x)); }

double LegendreData::lambda_star(double x) const {
    const double g = gap(x);
    if (source_.affine_k) {
        const double k = *source_.affine_k;
        const double mu_star = source_.mu_star;
        return mu_star * x - 2.0 * std::sqrt(k * mu_star * x) + k;
    }
    return (source_.mu_star - g) * x - source_.value_gap(g);
}

ConjugatePoint LegendreData::at(double x) const {
    ConjugatePoint c;
    c.x = x;
    c.gap = gap(x);
    c.p_star = source_.mu_star - c.gap;
    c.p_star_prime = 1.0 / source_.d2_gap(c.gap);
    if (source_.affine_k) {
        const double k = *source_.affine_k;
        c.lambda_star = source_.mu_star * x - 2.0 * std::sqrt(k * source_.mu_star * x) + k;
    } else {
        c.lambda_star = c.p_star * x - source_.value_gap(c.gap);
    }
    return c;
}

LegendreData build_legendre(const LogMgf& source, double x_lo, double x_hi) {
    return LegendreData(source, x_lo, x_hi);
}

Envelope fit_envelope(const LogMgf& source, double alpha1, double alpha2, double g_lo, double g_hi, int n) {
    if (!(g_lo > 0.0 && g_hi > g_lo)) throw DomainError("invalid gap range for envelope fit");
    Envelope e;
    e.alpha1 = alpha1;
    e.alpha2 = alpha2;
    e.c1 = std::numeric_limits<double>::infinity();
    e.c2 = 0.0;
    for (int i = 0; i <= n; ++i) {
        const double g = g_lo * std::pow(g_hi / g_lo, static_cast<double>(i) / n);
        const double v = source.value_gap(g);
        e.c1 = std::min(e.c1, v * std::pow(g, alpha1));
        e.c2 = std::max(e.c2, v * std::pow(g, alpha2));
    }
    return e;
}

double fit_alpha(const LogMgf& source, double y_max) {
    constexpr int n = 21;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int i = 0; i < n; ++i) {
        const double y = y_max * std::pow(10.0, -2.0 + 2.0 * i / (n - 1));
        const double lx = std::log(y), ly = std::log(source.value_gap(1.0 / y));
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

EnvelopeReport check_pstar_envelope(const LegendreData& data, const std::vector<double>& xs) {
    const auto& src = data.source();
    if (!src.envelope) throw DomainError("envelope parameters are required");
    const Envelope& e = *src.envelope;
    const double ct2 = e.c2_tilde();
    const double e1 = (e.alpha2 / e.alpha1) * (1.0 + 1.0 / (1.0 + e.alpha2));
    const double e2 = (e.alpha1 / e.alpha2) * (1.0 + 1.0 / (1.0 + e.alpha2));
    constexpr double slack = 1e-9;

    EnvelopeReport r;
    r.m1 = std::numeric_limits<double>::infinity();
    r.m2 = 0.0;
    r.worst_slack = std::numeric_limits<double>::infinity();
    r.pstar_bounds_hold = true;
    r.x2_pprime_increasing = true;
    std::vector<double> pp;
    for (double x : xs) {
        const ConjugatePoint c = data.at(x);
        const double lower_gap_bound = ct2 * std::pow(x, -1.0 / (1.0 + e.alpha2));
        const double upper_gap_bound =
            std::pow(e.c1 / ct2, 1.0 / e.alpha1) * std::pow(x, -(e.alpha2 / e.alpha1) / (e.alpha2 + 1.0));
        const double ls = lower_gap_bound / c.gap;
        const double us = c.gap / upper_gap_bound;
        r.x.push_back(x);
        r.lower_slack.push_back(ls);
        r.upper_slack.push_back(us);
        r.worst_slack = std::min({r.worst_slack, ls, us});
        if (ls < 1.0 - slack || us < 1.0 - slack) r.pstar_bounds_hold = false;
        const double x2 = x * x * c.p_star_prime;
        if (!r.x2_pprime.empty() && !(x2 > r.x2_pprime.back())) r.x2_pprime_increasing = false;
        r.x2_pprime.push_back(x2);
        r.m1 = std::min(r.m1, c.p_star_prime * std::pow(x, e1));
        r.m2 = std::max(r.m2, c.p_star_prime * std::pow(x, e2));
        pp.push_back(c.p_star_prime);
    }
    r.slope_min = std::numeric_limits<double>::infinity();
    r.slope_max = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < xs.size(); ++i) {
        const double s = std::log(pp[i] / pp[i - 1]) / std::log(xs[i] / xs[i - 1]);
        r.slope_min = std::min(r.slope_min, s);
        r.slope_max = std::max(r.slope_max, s);
    }
    r.pprime_bracket_holds = std::isfinite(r.m1) && r.m1 > 0.0 && std::isfinite(r.m2) &&
                             (xs.size() < 2 || (r.slope_min >= -std::max(e1, e2) - 0.05 &&
                                                r.slope_max <= -std::min(e1, e2) + 0.05));
    r.pass = r.pstar_bounds_hold && r.pprime_bracket_holds && r.x2_pprime_increasing;
    return r;
}

}  // namespace mexp
