#include "mexp/cev.hpp"

#include "mexp/errors.hpp"
#include "mexp/fixedpoint.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <sstream>
#include <string>


namespace mexp {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(10);
    os << v;
    return os.str();
}

bool is_unit_lambda(double lambda) { return std::fabs(lambda - 1.0) < 1e-14; }

/// Coefficients and exponents of the kept omega-series terms.
struct SeriesTerms {
    std::vector<double> coef;  // v0^lambda nu_i/(1 - i theta) omega^i
    std::vector<double> expo;  // 1 - i theta
    int first_omitted = 1;
    double omitted_coef = 0.0;
    double omitted_expo = 0.0;
    double threshold = 0.0;
};

SeriesTerms series_terms(const CevParams& prm, double t, int n_terms, bool deep, double h_ref) {
    SeriesTerms s;
    const double lam = prm.lambda();
    const double theta = (2.0 - lam) / lam;
    if (prm.a == 0.0 || is_unit_lambda(lam)) {
        s.threshold = 0.0;
        s.first_omitted = 1;
        return s;
    }
    const double tau = std::exp(prm.b * (lam - 1.0) * t);
    double w = kNaN;
    if (lam > 1.0) {
        w = omega(prm, tau);
        s.threshold = std::pow(w, lam / (2.0 - lam));
    } else {
        s.threshold = kNaN;
    }
    if (n_terms > 30) throw ResourceError("n_terms is capped at 30, got " + std::to_string(n_terms));
    if (n_terms < 1) throw DomainError("n_terms must be >= 1");
    const int n = n_terms;
    const NuSeries nus = nu_coefficients(lam, n);
    const double v0l = std::pow(prm.v0, lam);
    int i = 1;
    for (; i <= n; ++i) {
        const double e = 1.0 - i * theta;
        const double c = std::isnan(w) ? kNaN : v0l * nus.nu_over_factor[i - 1] * std::pow(w, i);
        if (!deep && e <= 0.0) break;
        if (std::isnan(c)) break;
        if (deep && e <= 0.0 && std::fabs(c * std::pow(h_ref, e)) < 1e-12) break;
        s.coef.push_back(c);
        s.expo.push_back(e);
    }
    s.first_omitted = i;
    s.omitted_expo = 1.0 - i * theta;
    if (!std::isnan(w) && i <= 30) {
        const NuSeries more = nu_coefficients(lam, i);
        s.omitted_coef = v0l * more.nu_over_factor[i - 1] * std::pow(w, i);
    } else {
        s.omitted_coef = kNaN;
    }
    return s;
}

/// Enumerate compositions of total into k positive parts and accumulate the product of nu.
void compositions(int total, int k, const std::vector<Rational>& nu, Rational prod, Rational& acc) {
    if (k == 1) {
        acc += prod * nu[total - 1];
        return;
    }
    for (int j = 1; j <= total - (k - 1); ++j) compositions(total - j, k - 1, nu, prod * nu[j - 1], acc);
}

}  // namespace

void CevParams::validate() const {
    if (!(a >= 0.0)) throw DomainError("a must be >= 0");
    if (!(b > 0.0)) throw DomainError("b must be > 0");
    if (!(sigma > 0.0)) throw DomainError("sigma must be > 0");
    if (!(v0 > 0.0)) throw DomainError("v0 must be > 0");
    if (!(p > 0.0 && p < 1.0)) throw DomainError("p must lie in (0, 1)");
}

double CevParams::mu_star(double t) const {
    const double lam = lambda();
    return critical_moment(b * lam, sigma * lam, t);
}

double CevParams::y_scale() const {
    const double sl = sigma * lambda();
    return sl * sl;
}

NuSeries nu_coefficients(double lambda, int n) {
    if (n > 30) throw ResourceError("at most 30 coefficients are supported, requested " + std::to_string(n));
    if (n < 1) throw DomainError("coefficient count must be >= 1");
    if (!(lambda > 0.0 && lambda < 2.0)) throw DomainError("lambda must lie in (0, 2)");
    NuSeries s;
    s.lambda = lambda;
    const double beta = (lambda - 1.0) / lambda;
    const double theta = (2.0 - lambda) / lambda;
    double ck = 1.0;
    for (int k = 1; k <= n; ++k) {
        ck *= (beta - (k - 1)) / k;
        s.c_k.push_back(ck);
    }
    s.nu.assign(n, 0.0);
    s.nu_over_factor.assign(n, 0.0);
    if (is_unit_lambda(lambda)) return s;
    s.nu[0] = 2.0 * beta;
    s.nu_over_factor[0] = s.nu[0] / (1.0 - theta);
    for (int i = 1; i < n; ++i) {
        // pw[k][m] = sum over compositions of m into k parts of nu products, m <= i.
        std::vector<double> base(i + 1, 0.0), cur(i + 1, 0.0);
        for (int j = 1; j <= i; ++j) base[j] = s.nu[j - 1];
        cur = base;
        double sum = s.c_k[0] * cur[i];
        for (int k = 2; k <= i; ++k) {
            std::vector<double> next(i + 1, 0.0);
            for (int m = k; m <= i; ++m) {
                double acc = 0.0;
                for (int j = 1; j <= m - (k - 1); ++j) acc += base[j] * cur[m - j];
                next[m] = acc;
            }
            cur.swap(next);
            sum += s.c_k[k - 1] * cur[i];
        }
        s.nu_over_factor[i] = s.nu[0] / (i + 1) * sum;
        s.nu[i] = s.nu_over_factor[i] * (1.0 - (i + 1) * theta);
    }
    return s;
}

std::vector<Rational> nu_coefficients_exact(long num, long den, int n) {
    if (n > 10) throw ResourceError("exact mode supports at most 10 coefficients");
    if (n < 1) throw DomainError("coefficient count must be >= 1");
    if (den <= 0 || num <= 0 || num >= 2 * den) throw DomainError("lambda must lie in (0, 2)");
    const Rational lam(num, den);
    const Rational one(1), two(2);
    const Rational beta = (lam - one) / lam;
    const Rational theta = (two - lam) / lam;
    std::vector<Rational> c(n);
    Rational ck(1);
    for (int k = 1; k <= n; ++k) {
        ck *= (beta - Rational(k - 1)) / Rational(k);
        c[k - 1] = ck;
    }
    std::vector<Rational> nu(n, Rational(0));
    nu[0] = two * beta;
    for (int i = 1; i < n; ++i) {
        Rational sum(0);
        for (int k = 1; k <= i; ++k) {
            Rational acc(0);
            compositions(i, k, nu, Rational(1), acc);
            sum += c[k - 1] * acc;
        }
        nu[i] = nu[0] / Rational(i + 1) * (one - Rational(i + 1) * theta) * sum;
    }
    return nu;
}

double omega(const CevParams& params, double tau) {
    params.validate();
    const double lam = params.lambda();
    if (is_unit_lambda(lam)) throw DomainError("omega is undefined for lambda = 1");
    if (params.a == 0.0) return 0.0;
    if (!(tau >= 1.0)) throw DomainError("tau must be >= 1, got " + fmt(tau));
    if (lam < 1.0) {
        throw DomainError("omega is undefined for lambda < 1: the integrand has a non-integrable singularity at s = 1");
    }
    if (tau == 1.0) return 0.0;
    const double I = power_singular_integral(lam / (lam - 1.0), (lam - 2.0) / lam, tau);
    const double pref = params.a * lam / (params.b * (lam - 1.0) * params.v0) *
                        std::pow(2.0 * params.b / (params.sigma * params.sigma * lam), (2.0 - lam) / lam);
    return pref * I;
}

DeltaHat cev_log_mgf_asym(const CevParams& params, double t, double x, int n_terms, bool deep) {
    params.validate();
    if (!(t > 0.0)) throw DomainError("t must be > 0");
    const double lam = params.lambda();
    if (is_unit_lambda(lam) && params.a > 0.0) {
        throw DomainError("the series is undefined for lambda = 1 with a > 0; use the CIR closed form");
    }
    const double ms = params.mu_star(t);
    if (!(x * ms > 1.0)) throw DomainError("x must exceed 1/mu* = " + fmt(1.0 / ms));
    const double decay = std::exp(-params.b * lam * t);
    const double v0l = std::pow(params.v0, lam);
    const double h = decay * ms * (ms * x - 1.0);
    SeriesTerms st = series_terms(params, t, n_terms, deep, h);

    DeltaHat d;
    d.validity_threshold = st.threshold;
    if (!std::isnan(st.threshold) && !(x > st.threshold)) {
        throw RangeError("x = " + fmt(x) + " is below the validity threshold " + fmt(st.threshold), st.threshold,
                         std::numeric_limits<double>::infinity());
    }
    d.value = v0l * h + (lam - 1.0) / lam * std::log(ms * x);
    for (std::size_t i = 0; i < st.coef.size(); ++i) d.value += st.coef[i] * std::pow(h, st.expo[i]);
    d.kept_terms = static_cast<int>(st.coef.size());
    d.first_omitted_index = st.first_omitted;
    d.first_omitted_magnitude = std::fabs(st.omitted_coef * std::pow(h, st.omitted_expo));
    d.error_order = (2.0 - lam) / lam;
    return d;
}

LogMgf cev_log_mgf_hat(const CevParams& params, double t, int n_terms) {
    params.validate();
    const double lam = params.lambda();
    if (is_unit_lambda(lam) && params.a > 0.0) {
        throw DomainError("the series is undefined for lambda = 1 with a > 0; use the CIR closed form");
    }
    const double ms = params.mu_star(t);
    const double decay = std::exp(-params.b * lam * t);
    const double v0l = std::pow(params.v0, lam);
    const double K = v0l * decay * ms * ms;
    const double A = (lam - 1.0) / lam;
    auto st = std::make_shared<SeriesTerms>(series_terms(params, t, n_terms, false, 1.0));
    const double hc = decay * ms * ms;  // h(g) = hc (1/g - 1/mu*)

    LogMgf m;
    m.mu_star = ms;
    m.alpha = 1.0;
    if (!std::isnan(st->threshold) && st->threshold > 0.0) {
        m.gap_ceiling = std::min(ms, 0.5 / st->threshold);
    }
    m.value_gap = [=](double g) {
        const double mu = ms - g;
        const double h = hc * mu / (g * ms);
        double lg = std::fabs(mu) < 0.5 * g ? std::log1p(mu / g) : std::log(ms / g);
        double v = v0l * h + A * lg;
        for (std::size_t i = 0; i < st->coef.size(); ++i) v += st->coef[i] * std::pow(h, st->expo[i]);
        return v;
    };
    m.d1_gap = [=](double g) {
        const double mu = ms - g;
        const double h = hc * mu / (g * ms);
        const double hp = -hc / (g * g);
        double v = K / (g * g) + A / g;
        for (std::size_t i = 0; i < st->coef.size(); ++i) {
            const double e = st->expo[i];
            v -= st->coef[i] * e * std::pow(h, e - 1.0) * hp;
        }
        return v;
    };
    m.d2_gap = [=](double g) {
        const double mu = ms - g;
        const double h = hc * mu / (g * ms);
        const double hp = -hc / (g * g);
        const double hpp = 2.0 * hc / (g * g * g);
        double v = 2.0 * K / (g * g * g) + A / (g * g);
        for (std::size_t i = 0; i < st->coef.size(); ++i) {
            const double e = st->expo[i];
            v += st->coef[i] * e * ((e - 1.0) * std::pow(h, e - 2.0) * hp * hp + std::pow(h, e - 1.0) * hpp);
        }
        return v;
    };
    return m;
}

CevTail cev_ccdf(const CevParams& params, double t, const std::vector<double>& xs, Order order, int n_terms) {
    const LogMgf src = cev_log_mgf_hat(params, t, n_terms);
    if (xs.empty()) return {};
    double lo = xs.front(), hi = xs.front();
    for (double x : xs) {
        lo = std::min(lo, x);
        hi = std::max(hi, x);
    }
    const LegendreData data(src, lo, hi);
    for (double x : xs) {
        const double g = data.gap(x);
        if (!(src.d2_gap(g) > 0.0)) throw DomainError("log-MGF expansion is not convex at level " + fmt(x));
    }
    CevTail out;
    out.expansion = ccdf_expansion(data, xs, order, 1.0);
    const double lam = params.lambda();
    for (double x : xs) {
        out.v_level.push_back(std::pow(x, 1.0 / lam));
        out.delta_hat.push_back(src.value_gap(data.gap(x)));
    }
    out.validity_threshold = series_terms(params, t, n_terms, false, 1.0).threshold;
    return out;
}

SdeSpec cev_square_root_spec(const CevParams& params) {
    params.validate();
    const double lam = params.lambda();
    const double sl = params.sigma * lam;
    const double kappa0 = (lam - 1.0) / (2.0 * lam);
    const double coef = params.a * lam * std::pow(sl, -2.0 / lam);
    const double beta = (lam - 1.0) / lam;
    const double bY = params.b * lam;
    SdeSpec s;
    s.perturbation = [=](double y) { return kappa0 + coef * std::pow(y, beta); };
    s.drift = [=](double y) { return -bY * y + kappa0 + coef * std::pow(y, beta); };
    s.diffusion = [](double y) { return std::sqrt(std::max(y, 0.0)); };
    s.beta = beta;
    s.M = 1.0;
    s.monotone_class = MonotoneClass::decreasing;
    s.b_limit = bY;
    return s;
}

double cev_fixed_point_coordinate(const CevParams& params, double t, double x_prime) {
    const double lam = params.lambda();
    const double bY = params.b * lam;
    const double ms_y = critical_moment(bY, 1.0, t);
    const double im = inverse_critical_moment(bY, 1.0, t);
    const double xi = std::exp(bY * t) * im * im;
    return x_prime / (params.y_scale() * xi) - ms_y;
}

}  // namespace mexp
